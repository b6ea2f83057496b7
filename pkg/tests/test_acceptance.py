"""Exit criteria, one test (or group) per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import numpy as np
import pytest

from parprox import monotone as mo
from parprox.blockspace import BlockVector, make_partition
from parprox.cli import build, parse_problem
from parprox.engine import RunConfig, run_gauss_seidel_h0, run_general, run_jacobi
from parprox.operators import UniformPairSampler, check_h3, scale
from parprox.schedule import build_schedule, validate_schedule

INF = np.inf
FAMILY_FIXTURES = ["linear", "prox", "saddle", "qp", "vi"]


def qp_problem():
    return mo.convex_program_qp([[2]], [0], [[-1]], [1])


def load(fixture_path, name):
    return build(parse_problem(fixture_path(f"{name}.json").read_text()))


def same_trace(a, b):
    return (
        a.residual_history == b.residual_history
        and len(a.trace) == len(b.trace)
        and all(u.tobytes() == v.tobytes() for u, v in zip(a.trace, b.trace))
    )


@pytest.mark.parametrize("name", FAMILY_FIXTURES)
def test_c1_firm_nonexpansiveness(criterion, fixture_path, name):
    criterion(1, "check_h3 passes on every catalog family (1000 pairs, slack 1e-10)")
    built = load(fixture_path, name)
    assert built.problem.dim <= 4
    rep = check_h3(built.operator, UniformPairSampler(seed=0), trials=1000, slack=1e-10)
    print(f"[c1] {built.problem.family}: worst violation {rep.worst_violation:.3e}")
    assert rep.passed


def test_c2_zero_fixed_point_equivalence(criterion):
    criterion(2, "grid zero (1, 2) of the QP and Jacobi reaches it within 1e-6")
    qp = qp_problem()
    zero = mo.brute_force_zero(qp, [(0, 3), (0, 4)], 0.01)
    assert zero == pytest.approx([1.00, 2.00], abs=1e-12)
    part = make_partition([1, 1])
    r = run_jacobi(mo.as_fixed_point_operator(qp, part), BlockVector.zeros(part), RunConfig(tol=1e-8, max_iter=500))
    print(f"[c2] status={r.status} iterations={r.iterations} final={r.final_point.data}")
    assert r.converged and r.iterations <= 500
    assert np.abs(r.final_point.data - zero).max() <= 1e-6


@pytest.mark.parametrize("name", FAMILY_FIXTURES)
@pytest.mark.parametrize("runner", ["jacobi", "gauss_seidel_h0"])
def test_c3_monotone_decrease(criterion, fixture_path, name, runner):
    criterion(3, "||x^p - u||_max non-increasing on fixture runs; euclidean too for Jacobi")
    built = load(fixture_path, name)
    u = np.array(built.config.reference_point)
    assert np.abs(built.operator.evaluate(u) - u).max() <= 1e-12
    cfg = RunConfig(tol=1e-10, max_iter=500, trace_level="full", reference_point=u)
    if runner == "jacobi":
        r = run_jacobi(built.operator, built.x0, cfg)
    else:
        r = run_gauss_seidel_h0(built.operator, built.x0, 3, cfg)
    assert r.converged
    assert (np.diff(r.distance_history) <= 1e-12).all()
    if runner == "jacobi":
        l2 = [np.linalg.norm(x - u) for x in r.trace]
        assert (np.diff(l2) <= 1e-12).all()


def test_c4_determinism(criterion, fixture_path):
    criterion(4, "QP Jacobi traces bitwise identical for workers 1, 2, 8")
    built = load(fixture_path, "qp")
    runs = [
        run_jacobi(built.operator, built.x0, RunConfig(tol=1e-8, max_iter=500, workers=w, trace_level="full"))
        for w in (1, 2, 8)
    ]
    assert all(same_trace(runs[0], r) for r in runs[1:])
    assert all(runs[0].final_point.data.tobytes() == r.final_point.data.tobytes() for r in runs[1:])


def random_saddle_problems():
    rng = np.random.default_rng(2024)
    out = []
    for n, m in [(2, 1), (2, 2), (3, 3)]:
        B = rng.normal(size=(n, n))
        out.append(mo.convex_program_qp(B @ B.T, rng.normal(size=n), rng.normal(size=(m, n)), rng.normal(size=m)))
        C = rng.normal(size=(m, m))
        out.append(mo.saddle_quadratic(B @ B.T, rng.normal(size=n), rng.normal(size=(m, n)), rng.normal(size=m), R=C @ C.T))
    return out


def random_vi_problems():
    rng = np.random.default_rng(7)
    out = []
    for n in (1, 2, 3):
        B = rng.normal(size=(n, n))
        K = rng.normal(size=(n, n))
        G = B @ B.T + (K - K.T)
        lo = np.where(rng.random(n) < 0.3, -INF, rng.uniform(-2, 0, n))
        hi = np.where(rng.random(n) < 0.3, INF, rng.uniform(0, 2, n))
        out.append(mo.variational_inequality(G, rng.normal(size=n), lo, hi))
    return out


@pytest.mark.parametrize("family", ["saddle", "vi"])
def test_c5_oracle_equivalence(criterion, family):
    criterion(5, "iterative_resolvent agrees with active-set resolvents within 1e-8 (100 rhs)")
    problems = random_saddle_problems() if family == "saddle" else random_vi_problems()
    rng = np.random.default_rng(99)
    worst = 0.0
    for prob in problems:
        assert prob.m <= 3
        for z in rng.uniform(-10, 10, size=(100, prob.dim)):
            direct = mo.resolvent_saddle(prob, z).stacked() if family == "saddle" else mo.resolvent_vi(prob, z)
            worst = max(worst, np.abs(mo.iterative_resolvent(prob, z, tol=1e-10) - direct).max())
    print(f"[c5] {family}: worst disagreement {worst:.3e}")
    assert worst <= 1e-8


def test_c6_schedule_semantics(criterion, fixture_path):
    criterion(6, "jacobi schedule == run_jacobi == GS-h0 with W=1; pure GS lacks h0")
    built = load(fixture_path, "qp")
    cfg = RunConfig(tol=1e-8, max_iter=500, trace_level="full")
    jac = run_jacobi(built.operator, built.x0, cfg)
    gen = run_general(built.operator, build_schedule("jacobi", 2, 500), built.x0, cfg)
    gs1 = run_gauss_seidel_h0(built.operator, built.x0, 1, cfg)
    assert same_trace(jac, gen)
    assert same_trace(jac, gs1)
    assert validate_schedule(build_schedule("gauss_seidel", 2, 500)).h0_satisfied is False


def test_c7_duality(criterion):
    criterion(7, "g_0(2) = f_0(1) = 1 within 1e-10")
    qp = qp_problem()
    assert abs(mo.evaluate_dual(qp, [2.0]) - 1.0) <= 1e-10
    assert abs(mo.primal_objective(qp, [1.0]) - 1.0) <= 1e-10
    assert abs(mo.evaluate_dual(qp, [2.0]) - mo.primal_objective(qp, [1.0])) <= 1e-10


def test_c8_negative_controls(criterion):
    criterion(8, "check_h3 fails for -x with witness; Jacobi on 2x exits max_iterations")
    part = make_partition([1])
    rep = check_h3(scale(part, -1.0), trials=1000, slack=1e-10)
    assert not rep.passed and rep.witness is not None
    r = run_jacobi(scale(part, 2.0), BlockVector(part, [1.0]), RunConfig(tol=1e-8, max_iter=50))
    assert r.status == "max_iterations"
