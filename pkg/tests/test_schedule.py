import pytest
from hypothesis import given
from hypothesis import strategies as st

from parprox.errors import InvalidParams
from parprox.schedule import build_schedule, validate_schedule


def test_jacobi_tables():
    s = build_schedule("jacobi", 2, 3)
    assert s.update_sets == [{1, 2}] * 3
    assert s.delays.tolist() == [[0, 0], [1, 1], [2, 2]]
    assert s.synchronous


def test_gauss_seidel_cycles_one_block():
    s = build_schedule("gauss_seidel", 3, 3)
    assert s.update_sets == [{1}, {2}, {3}]
    assert s.synchronous
    assert s.full_update_steps == []


def test_periodic_full_inserts_full_updates():
    s = build_schedule("periodic_full", 2, 6, {"period": 3, "base": [[1], [2]]})
    assert s.update_sets == [{1}, {2}, {1, 2}, {1}, {2}, {1, 2}]
    assert s.full_update_steps == [2, 5]


def test_custom_copied_verbatim():
    J = [[1, 2], [1], [2]]
    S = [[0, 0], [0, 1], [1, 1]]
    s = build_schedule("custom", 2, 3, {"J": J, "S": S})
    assert s.update_sets == [{1, 2}, {1}, {2}]
    assert s.delays.tolist() == S
    assert not s.synchronous
    assert s.max_delay == 1


@pytest.mark.parametrize(
    "kind, alpha, params",
    [
        ("periodic_full", 2, {"period": 0}),
        ("periodic_full", 2, {}),
        ("custom", 1, {"J": [[1]], "S": [[0, 0]]}),
        ("custom", 1, {"J": [[]], "S": [[0]]}),
        ("custom", 1, {"J": [[3]], "S": [[0]]}),
        ("custom", 1, {"J": [[1], [1]], "S": [[0]]}),
        ("nope", 2, {}),
    ],
)
def test_invalid_params(kind, alpha, params):
    with pytest.raises(InvalidParams):
        build_schedule(kind, alpha, 1, params)


def test_validate_jacobi_all_pass():
    r = validate_schedule(build_schedule("jacobi", 3, 10))
    assert r.delay_legal and r.fairness and r.delay_progress and r.h0_satisfied
    assert r.h0_gap == 1


def test_validate_gauss_seidel_has_no_h0():
    r = validate_schedule(build_schedule("gauss_seidel", 3, 12))
    assert not r.h0_satisfied
    assert r.h0_gap is None
    assert r.fairness and r.delay_legal and r.delay_progress


def test_validate_future_read_is_illegal():
    s = build_schedule("custom", 1, 3, {"J": [[1]] * 3, "S": [[0], [1], [3]]})
    r = validate_schedule(s)
    assert not r.delay_legal


def test_validate_starved_block():
    s = build_schedule("custom", 2, 4, {"J": [[1]] * 4, "S": [[p, p] for p in range(4)]})
    r = validate_schedule(s, window=2)
    assert not r.fairness


def test_validate_stalled_delays():
    S = [[0, 0]] * 5
    s = build_schedule("custom", 2, 5, {"J": [[1, 2]] * 5, "S": S})
    r = validate_schedule(s, window=2)
    assert not r.delay_progress
    assert r.delay_legal


@given(st.integers(1, 6), st.integers(1, 40), st.integers(1, 10))
def test_jacobi_always_valid(alpha, horizon, window):
    r = validate_schedule(build_schedule("jacobi", alpha, horizon), window)
    assert r.ok


@given(st.integers(2, 5), st.integers(1, 8), st.integers(1, 60))
def test_periodic_full_gap_is_period(alpha, period, extra):
    s = build_schedule("periodic_full", alpha, period + extra, {"period": period})
    r = validate_schedule(s, window=period)
    assert r.h0_gap == period
    assert r.h0_satisfied


@given(st.sampled_from(["jacobi", "gauss_seidel", "periodic_full"]), st.integers(1, 4), st.integers(1, 30))
def test_synchronous_delays_always_legal(kind, alpha, horizon):
    s = build_schedule(kind, alpha, horizon, {"period": 2})
    r = validate_schedule(s)
    assert s.synchronous
    assert r.delay_legal and r.delay_progress
