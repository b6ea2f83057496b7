import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parprox import monotone as mo
from parprox.blockspace import BlockVector, make_partition
from parprox.engine import RunConfig, residual, run_gauss_seidel_h0, run_general, run_jacobi
from parprox.errors import PartitionMismatch, ScheduleMismatch
from parprox.operators import FixedPointOperator, affine_average, identity, scale
from parprox.schedule import build_schedule


def traces_equal(a, b):
    return (
        a.residual_history == b.residual_history
        and len(a.trace) == len(b.trace)
        and all(u.tobytes() == v.tobytes() for u, v in zip(a.trace, b.trace))
    )


@pytest.fixture
def part2():
    return make_partition([1, 1])


def test_residual_examples(part2):
    one = make_partition([1])
    assert residual(scale(one, 0.5), BlockVector(one, [4])) == 2
    assert residual(identity(part2), BlockVector(part2, [3, -9])) == 0
    F = affine_average(part2, [2, 4])
    assert residual(F, BlockVector(part2, [2, 4])) == 0


def test_jacobi_affine_average_iterates(part2):
    F = affine_average(part2, [2, 4])
    r = run_jacobi(F, BlockVector.zeros(part2), RunConfig(tol=1e-12, max_iter=200, trace_level="full"))
    assert r.trace[1].tolist() == [1, 2]
    assert r.trace[2].tolist() == [1.5, 3]
    assert r.converged
    assert r.final_point.data == pytest.approx([2, 4], abs=1e-11)
    assert len(r.residual_history) == r.iterations + 1


def test_periodic_full_matches_jacobi_limit(part2):
    F = affine_average(part2, [2, 4])
    cfg = RunConfig(tol=1e-12, max_iter=400)
    sched = build_schedule("periodic_full", 2, 400, {"period": 3, "base": [[1], [2]]})
    r = run_general(F, sched, BlockVector.zeros(part2), cfg)
    jac = run_jacobi(F, BlockVector.zeros(part2), cfg)
    assert r.converged
    assert r.final_point.data == pytest.approx(jac.final_point.data, abs=1e-10)


def test_delayed_schedule_contraction(part2):
    P = 300
    S = [[max(0, p - 1)] * 2 for p in range(P)]
    sched = build_schedule("custom", 2, P, {"J": [[1, 2]] * P, "S": S})
    r = run_general(scale(part2, 0.5), sched, BlockVector(part2, [5, -3]), RunConfig(tol=1e-12, max_iter=P))
    assert r.converged
    assert np.abs(r.final_point.data).max() <= 1e-11
    assert any("delays" in w for w in r.warnings)


def test_soft_threshold_run():
    one = make_partition([1])
    F = mo.as_fixed_point_operator(mo.separable_prox([mo.Atom.absolute_value()]), one)
    r = run_jacobi(F, BlockVector(one, [3]), RunConfig(tol=1e-12, max_iter=20, trace_level="full"))
    assert [x[0] for x in r.trace] == [3, 2, 1, 0]
    assert r.converged and r.iterations == 3 and r.final_point.data.tolist() == [0]


def test_identity_converges_immediately(part2):
    r = run_jacobi(identity(part2), BlockVector(part2, [7, 8]), RunConfig())
    assert r.converged and r.iterations == 0 and r.residual_history == [0.0]


def test_qp_jacobi_reaches_kkt_point(part2):
    qp = mo.convex_program_qp([[2]], [0], [[-1]], [1])
    F = mo.as_fixed_point_operator(qp, part2)
    r = run_jacobi(F, BlockVector.zeros(part2), RunConfig(tol=1e-8, max_iter=500))
    assert r.converged
    assert r.final_point.data == pytest.approx([1, 2], abs=1e-6)
    assert r.warnings == []


def test_gauss_seidel_h0_scaling():
    part = make_partition([1, 1])
    r = run_gauss_seidel_h0(scale(part, 0.5), BlockVector(part, [8, 8]), 3, RunConfig(tol=1e-12, max_iter=500))
    assert r.converged
    assert np.abs(r.final_point.data).max() <= 1e-11


def test_gauss_seidel_h0_affine_limit(part2):
    F = affine_average(part2, [2, 4])
    r = run_gauss_seidel_h0(F, BlockVector.zeros(part2), 3, RunConfig(tol=1e-12, max_iter=500))
    assert r.final_point.data == pytest.approx([2, 4], abs=1e-11)


def test_gauss_seidel_h0_period_one_is_jacobi(part2):
    F = affine_average(part2, [2, 4])
    cfg = RunConfig(tol=1e-10, max_iter=100, trace_level="full")
    assert traces_equal(run_gauss_seidel_h0(F, BlockVector.zeros(part2), 1, cfg), run_jacobi(F, BlockVector.zeros(part2), cfg))


def test_general_with_jacobi_schedule_is_run_jacobi(part2):
    F = mo.as_fixed_point_operator(mo.saddle_quadratic([[1]], [0], [[1]], [0], R=[[1]]), part2)
    cfg = RunConfig(tol=1e-10, max_iter=80, trace_level="full")
    x0 = BlockVector(part2, [3, -1])
    assert traces_equal(run_general(F, build_schedule("jacobi", 2, 80), x0, cfg), run_jacobi(F, x0, cfg))


def test_expansion_hits_max_iterations():
    one = make_partition([1])
    r = run_jacobi(scale(one, 2.0), BlockVector(one, [1]), RunConfig(max_iter=50))
    assert r.status == "max_iterations" and r.iterations == 50
    assert any("h3" in w for w in r.warnings)


def test_schedule_exhausted(part2):
    sched = build_schedule("gauss_seidel", 2, 5)
    r = run_general(affine_average(part2, [1, 1]), sched, BlockVector.zeros(part2), RunConfig(max_iter=100))
    assert r.status == "schedule_exhausted" and r.iterations == 5


def test_non_finite_is_operator_failure(part2):
    F = FixedPointOperator(part2, lambda x: x * 1e300, claims_h3=False)
    with np.errstate(over="ignore"):
        r = run_jacobi(F, BlockVector(part2, [1e10, 1]), RunConfig(max_iter=10))
    assert r.status == "operator_failure"
    assert "non-finite" in r.error


def test_evaluation_failure_is_operator_failure(part2):
    def boom(x):
        raise mo.NoConsistentPattern("broken")

    r = run_jacobi(FixedPointOperator(part2, boom), BlockVector.zeros(part2), RunConfig())
    assert r.status == "operator_failure" and r.iterations == 0


def test_mismatches(part2):
    F = identity(part2)
    with pytest.raises(ScheduleMismatch):
        run_general(F, build_schedule("jacobi", 3, 4), BlockVector.zeros(part2), RunConfig())
    with pytest.raises(PartitionMismatch):
        run_jacobi(F, BlockVector.zeros(make_partition([2])), RunConfig())
    future = build_schedule("custom", 2, 2, {"J": [[1], [2]], "S": [[0, 0], [2, 1]]})
    with pytest.raises(ScheduleMismatch):
        run_general(F, future, BlockVector.zeros(part2), RunConfig())


def test_h2_warning_for_non_jacobi(part2):
    qp = mo.convex_program_qp([[2]], [0], [[-1]], [1])
    F = mo.as_fixed_point_operator(qp, part2)
    r = run_gauss_seidel_h0(F, BlockVector.zeros(part2), 2, RunConfig(tol=1e-8, max_iter=500))
    assert r.converged
    assert any("(h2)" in w for w in r.warnings)


@pytest.mark.parametrize("workers", [2, 8])
def test_workers_bitwise_identical(workers):
    part = make_partition([2, 1, 3])
    atoms = [mo.Atom.quadratic(0.3, 1), mo.Atom.absolute_value(), mo.Atom.box_indicator(-1, 2)] * 2
    F = mo.as_fixed_point_operator(mo.separable_prox(atoms), part)
    x0 = BlockVector(part, [5, -4, 3, 9, -0.2, 7])
    sched = build_schedule("periodic_full", 3, 200, {"period": 4})
    base = run_general(F, sched, x0, RunConfig(tol=1e-14, max_iter=200, trace_level="full"))
    other = run_general(F, sched, x0, RunConfig(tol=1e-14, max_iter=200, trace_level="full", workers=workers))
    assert traces_equal(base, other)
    assert base.final_point == other.final_point


def test_trace_level_none_keeps_final_only(part2):
    r = run_jacobi(affine_average(part2, [2, 4]), BlockVector.zeros(part2), RunConfig(tol=1e-6, trace_level="none"))
    assert r.converged and len(r.residual_history) == 1 and r.trace is None
    assert r.residual_history[0] <= 1e-6


def test_trace_csv(part2):
    r = run_jacobi(
        affine_average(part2, [2, 4]),
        BlockVector.zeros(part2),
        RunConfig(tol=1e-3, reference_point=[2, 4]),
    )
    rows = list(csv.reader(io.StringIO(r.trace_csv())))
    assert rows[0] == ["iter", "residual_max", "residual_l2", "dist_to_ref"]
    assert len(rows) == r.iterations + 2
    assert rows[1] == ["0", "2", format(np.sqrt(5), ".17g"), "4"]
    no_ref = run_jacobi(affine_average(part2, [2, 4]), BlockVector.zeros(part2), RunConfig(tol=1e-3))
    assert list(csv.reader(io.StringIO(no_ref.trace_csv())))[1][3] == ""


def test_summary_keys(part2):
    r = run_jacobi(identity(part2), BlockVector.zeros(part2), RunConfig())
    assert set(r.summary()) == {"status", "iterations", "final_point", "residual_max", "warnings"}


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(tol=0)
    with pytest.raises(ValueError):
        RunConfig(max_iter=0)
    with pytest.raises(ValueError):
        RunConfig(trace_level="verbose")


@settings(deadline=None, max_examples=60)
@given(
    sizes=st.lists(st.integers(1, 3), min_size=1, max_size=4),
    kind=st.sampled_from(["jacobi", "gauss_seidel", "periodic_full"]),
    k=st.floats(-1, 1),
    seed=st.integers(0, 2**16),
)
def test_max_norm_distance_non_increasing(sizes, kind, k, seed):
    # any synchronous schedule, any operator passing h2, any fixed point u
    part = make_partition(sizes)
    rng = np.random.default_rng(seed)
    a = rng.uniform(-5, 5, part.total)
    F = FixedPointOperator(part, lambda x: k * (x - a) + a, claims_h2=True)
    sched = build_schedule(kind, part.alpha, 60, {"period": 3})
    x0 = BlockVector(part, rng.uniform(-10, 10, part.total))
    r = run_general(F, sched, x0, RunConfig(tol=1e-300, max_iter=60, reference_point=a))
    assert (np.diff(r.distance_history) <= 1e-12).all()
