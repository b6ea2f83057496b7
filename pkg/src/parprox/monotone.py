"""Catalog of maximal monotone operators with exactly computable resolvents.

Every family is an operator of the form

    T(w) = H w + h + dg(w)

with ``H`` monotone (symmetric part positive semidefinite) and ``g`` a
separable convex function whose prox is closed form: zero, absolute value,
or the indicator of a box / nonnegative orthant. The resolvent
``(I + T)^{-1}`` is therefore single valued and firmly nonexpansive, and its
fixed points are exactly the zeros of ``T``.

Families
--------
linear
    ``T(x) = M x``.
separable_prox
    ``T = df`` with ``f(x) = sum_i f_i(x_i)``, each ``f_i`` an atom.
saddle_quadratic
    ``L(x, y) = 1/2 x'Px + q'x + y'(Ax + b) - 1/2 y'Ry`` with ``y`` free,
    ``T_L(x, y) = (grad_x L, -grad_y L)``.
convex_program_qp
    Lagrangian of ``min 1/2 x'Px + q'x  s.t.  Ax + b <= 0`` with ``y >= 0``,
    ``T_L(x, y) = (grad_x L, -grad_y L + N_{R+^m}(y))``.
variational_inequality
    ``T(x) = Gx + g + N_C(x)`` for a box ``C``.

Coupled families are resolved exactly by enumerating active sets; the
forward-backward inner solver in :func:`iterative_resolvent` is the scalable
path and is cross-checked against enumeration.
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .blockspace import BlockPartition
from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    DualUnbounded,
    EvaluationFailure,
    GridTooCoarse,
    InnerSolverDiverged,
    InvalidAtom,
    InvalidProblem,
    NoConsistentPattern,
    SingularSystem,
)
from .operators import FixedPointOperator

__all__ = [
    "FAMILIES",
    "Atom",
    "MonotoneProblem",
    "SaddlePoint",
    "linear",
    "separable_prox",
    "saddle_quadratic",
    "convex_program_qp",
    "variational_inequality",
    "resolvent_linear",
    "prox_separable",
    "resolvent_saddle",
    "resolvent_vi",
    "resolvent",
    "iterative_resolvent",
    "inclusion_residual",
    "evaluate_dual",
    "primal_objective",
    "lagrangian",
    "zero_merit",
    "brute_force_zero",
    "as_fixed_point_operator",
    "DEFAULT_ENUM_CAP",
]

FAMILIES = ("linear", "separable_prox", "saddle_quadratic", "convex_program_qp", "variational_inequality")
DEFAULT_ENUM_CAP = 20
MONOTONE_TOL = 1e-10
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class Atom:
    """One coordinate term of a separable function.

    ``quadratic``: ``a/2 (x - c)^2`` with ``a >= 0``.
    ``absolute_value``: ``|x|``.
    ``box_indicator``: 0 on ``[lo, hi]``, ``+inf`` outside.
    """

    kind: str
    a: float = 0.0
    c: float = 0.0
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if self.kind == "quadratic":
            if not (self.a >= 0 and math.isfinite(self.a) and math.isfinite(self.c)):
                raise InvalidAtom(f"quadratic atom needs finite a >= 0 and finite c, got a={self.a}, c={self.c}")
        elif self.kind == "box_indicator":
            if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
                raise InvalidAtom(f"box_indicator needs lo <= hi, got [{self.lo}, {self.hi}]")
        elif self.kind != "absolute_value":
            raise InvalidAtom(f"unknown atom kind {self.kind!r}")

    @classmethod
    def quadratic(cls, a, c=0.0):
        return cls("quadratic", a=float(a), c=float(c))

    @classmethod
    def absolute_value(cls):
        return cls("absolute_value")

    @classmethod
    def box_indicator(cls, lo, hi):
        return cls("box_indicator", lo=float(lo), hi=float(hi))


def _as_matrix(value, name, shape=None):
    arr = np.array(value, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != 2:
        raise InvalidProblem(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if shape is not None and arr.shape != shape:
        raise InvalidProblem(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidProblem(f"{name} has non-finite entries")
    return arr


def _as_vector(value, name, size):
    arr = np.array(value, dtype=np.float64).reshape(-1)
    if arr.size != size:
        raise InvalidProblem(f"{name} must have {size} entries, got {arr.size}")
    return arr


def _require_monotone(mat, name):
    if mat.size == 0:
        return
    low = np.linalg.eigvalsh((mat + mat.T) / 2.0).min()
    if low < -MONOTONE_TOL:
        raise InvalidProblem(f"{name} is not monotone: symmetric part has eigenvalue {low:.3g}")


def _require_psd_symmetric(mat, name):
    if mat.size and not np.allclose(mat, mat.T, rtol=0, atol=1e-12 * (1 + np.abs(mat).max())):
        raise InvalidProblem(f"{name} must be symmetric")
    _require_monotone(mat, name)


@dataclass(eq=False)
class MonotoneProblem:
    """A cataloged operator. Build through the family constructors below."""

    family: str
    data: dict
    reference_solution: Optional[np.ndarray] = None
    enum_cap: int = DEFAULT_ENUM_CAP

    @property
    def dim(self) -> int:
        """Dimension of the space ``T`` acts on (``n + m`` for saddle families)."""
        d = self.data
        if self.family == "separable_prox":
            return len(d["atoms"])
        if self.family in ("saddle_quadratic", "convex_program_qp"):
            return d["P"].shape[0] + d["A"].shape[0]
        return d["M" if self.family == "linear" else "G"].shape[0]

    @property
    def n(self) -> int:
        """Primal dimension."""
        if self.family in ("saddle_quadratic", "convex_program_qp"):
            return self.data["P"].shape[0]
        return self.dim

    @property
    def m(self) -> int:
        """Number of multipliers (0 outside the saddle families)."""
        if self.family in ("saddle_quadratic", "convex_program_qp"):
            return self.data["A"].shape[0]
        return 0

    @cached_property
    def split(self):
        """``(H, h, lower, upper, l1)`` with ``T(w) = Hw + h + dg(w)``.

        ``g`` is the sum of the box indicator ``[lower, upper]`` and ``|w_i|``
        on coordinates where ``l1`` is set.
        """
        d, dim = self.data, self.dim
        lower = np.full(dim, -np.inf)
        upper = np.full(dim, np.inf)
        l1 = np.zeros(dim, dtype=bool)
        if self.family == "linear":
            return d["M"], np.zeros(dim), lower, upper, l1
        if self.family == "separable_prox":
            H = np.zeros((dim, dim))
            h = np.zeros(dim)
            for i, atom in enumerate(d["atoms"]):
                if atom.kind == "quadratic":
                    H[i, i] = atom.a
                    h[i] = -atom.a * atom.c
                elif atom.kind == "absolute_value":
                    l1[i] = True
                else:
                    lower[i], upper[i] = atom.lo, atom.hi
            return H, h, lower, upper, l1
        if self.family in ("saddle_quadratic", "convex_program_qp"):
            P, A, R = d["P"], d["A"], d["R"]
            H = np.block([[P, A.T], [-A, R]])
            h = np.concatenate([d["q"], -d["b"]])
            if self.family == "convex_program_qp":
                lower[self.n:] = 0.0
            return H, h, lower, upper, l1
        return d["G"], d["g"], d["lo"].copy(), d["hi"].copy(), l1

    @cached_property
    def pattern_count(self) -> int:
        """Number of active-set patterns the exact resolvent may enumerate."""
        if self.family == "convex_program_qp":
            return 2 ** self.m
        if self.family == "variational_inequality":
            lo, hi = self.data["lo"], self.data["hi"]
            count = 1
            for a, b in zip(lo, hi):
                count *= 1 if a == b else 1 + np.isfinite(a) + np.isfinite(b)
            return int(count)
        return 1

    @property
    def enumerable(self) -> bool:
        return self.pattern_count <= 2 ** self.enum_cap

    @cached_property
    def forward_backward_step(self):
        """Step ``gamma`` and contraction factor ``||I - gamma (I + H)||_2 < 1``."""
        M = np.eye(self.dim) + self.split[0]
        if self.dim == 0:
            return 1.0, 0.0
        lip = np.linalg.norm(M, 2)

        def rho(gamma):
            return np.linalg.norm(np.eye(self.dim) - gamma * M, 2)

        # (I + H) has symmetric part >= I, so gamma = 1/L^2 gives rho <= sqrt(1 - 1/L^2)
        safe = 1.0 / lip**2
        best = minimize_scalar(rho, bounds=(0.0, 2.0 / lip**2), method="bounded")
        gamma = best.x if best.fun < rho(safe) else safe
        return float(gamma), float(rho(gamma))


def linear(M, reference_solution=None) -> MonotoneProblem:
    M = _as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise InvalidProblem(f"M must be square, got {M.shape}")
    _require_monotone(M, "M")
    return MonotoneProblem("linear", {"M": M}, reference_solution)


def separable_prox(atoms: Sequence[Atom], reference_solution=None) -> MonotoneProblem:
    atoms = tuple(atoms)
    if not atoms or not all(isinstance(a, Atom) for a in atoms):
        raise InvalidProblem("separable_prox needs a non-empty list of Atom")
    return MonotoneProblem("separable_prox", {"atoms": atoms}, reference_solution)


def _lagrangian_data(P, q, A, b, R=None):
    P = _as_matrix(P, "P")
    n = P.shape[0]
    if P.shape != (n, n):
        raise InvalidProblem(f"P must be square, got {P.shape}")
    _require_psd_symmetric(P, "P")
    q = _as_vector(q, "q", n)
    A = np.array(A, dtype=np.float64)
    if A.size == 0:
        A = A.reshape(0, n)
    A = _as_matrix(A, "A")
    if A.shape[1] != n:
        raise InvalidProblem(f"A must have {n} columns, got {A.shape}")
    m = A.shape[0]
    b = _as_vector(b, "b", m)
    R = np.zeros((m, m)) if R is None else _as_matrix(R, "R", (m, m))
    _require_psd_symmetric(R, "R")
    return {"P": P, "q": q, "A": A, "b": b, "R": R}


def saddle_quadratic(P, q, A, b, R=None, reference_solution=None) -> MonotoneProblem:
    """``L(x, y) = 1/2 x'Px + q'x + y'(Ax + b) - 1/2 y'Ry``, ``y`` unconstrained."""
    return MonotoneProblem("saddle_quadratic", _lagrangian_data(P, q, A, b, R), reference_solution)


def convex_program_qp(P, q, A, b, reference_solution=None, enum_cap=DEFAULT_ENUM_CAP) -> MonotoneProblem:
    """``min 1/2 x'Px + q'x`` subject to ``A x + b <= 0``, as a Lagrangian saddle problem."""
    return MonotoneProblem("convex_program_qp", _lagrangian_data(P, q, A, b), reference_solution, enum_cap)


def variational_inequality(G, g, lo=None, hi=None, reference_solution=None, enum_cap=DEFAULT_ENUM_CAP) -> MonotoneProblem:
    """Find ``x`` in the box ``[lo, hi]`` with ``<Gx + g, z - x> >= 0`` for all ``z`` in it.

    Omitted bounds default to the whole space.
    """
    G = _as_matrix(G, "G")
    n = G.shape[0]
    if G.shape != (n, n):
        raise InvalidProblem(f"G must be square, got {G.shape}")
    _require_monotone(G, "G")
    g = _as_vector(g, "g", n)
    lo = np.full(n, -np.inf) if lo is None else _as_vector(lo, "lo", n)
    hi = np.full(n, np.inf) if hi is None else _as_vector(hi, "hi", n)
    if np.isnan(lo).any() or np.isnan(hi).any() or (lo > hi).any():
        raise InvalidProblem("box bounds must satisfy lo <= hi")
    if np.isposinf(lo).any() or np.isneginf(hi).any():
        raise InvalidProblem("box is empty")
    data = {"G": G, "g": g, "lo": lo, "hi": hi}
    return MonotoneProblem("variational_inequality", data, reference_solution, enum_cap)


@dataclass
class SaddlePoint:
    x: np.ndarray
    y: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


# --- exact resolvents -------------------------------------------------------


def resolvent_linear(M, z) -> np.ndarray:
    """Solve ``(I + M) x = z``."""
    M = np.asarray(M, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if M.shape != (z.size, z.size):
        raise DimensionMismatch(f"M has shape {M.shape} but z has {z.size} entries")
    try:
        x = np.linalg.solve(np.eye(z.size) + M, z)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"I + M is singular ({exc}); M is not monotone") from None
    return x


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox_separable(atoms: Sequence[Atom], z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if len(atoms) != z.size:
        raise DimensionMismatch(f"{len(atoms)} atoms for {z.size} coordinates")
    out = np.empty_like(z)
    for i, (atom, v) in enumerate(zip(atoms, z)):
        if atom.kind == "quadratic":
            out[i] = (v + atom.a * atom.c) / (1.0 + atom.a)
        elif atom.kind == "absolute_value":
            out[i] = np.sign(v) * max(abs(v) - 1.0, 0.0)
        else:
            out[i] = min(max(v, atom.lo), atom.hi)
    return out


def inclusion_residual(prob: MonotoneProblem, w, z, normal=None) -> float:
    """``||(I + H) w + h + nu - z||_inf`` for a claimed normal-cone element ``nu``."""
    H, h = prob.split[:2]
    r = w + H @ w + h - z
    if normal is not None:
        r = r + normal
    return float(np.abs(r).max()) if r.size else 0.0


def _sign_tol(z):
    return 1e-11 * (1.0 + (float(np.abs(z).max()) if z.size else 0.0))


def _solve_pattern(M, rhs, fixed, fixed_values):
    """Solve ``M w + nu = rhs`` with ``w[fixed] = fixed_values`` and ``nu`` zero off ``fixed``."""
    free = ~fixed
    w = np.zeros(rhs.size)
    w[fixed] = fixed_values
    if free.any():
        sub = M[np.ix_(free, free)]
        w[free] = np.linalg.solve(sub, rhs[free] - M[np.ix_(free, fixed)] @ w[fixed])
    nu = np.zeros(rhs.size)
    nu[fixed] = rhs[fixed] - M[fixed] @ w
    return w, nu


def _enumerate_box(prob: MonotoneProblem, z: np.ndarray):
    """Exact resolvent of ``Hw + h + N_box(w)`` by trying lower / upper / interior per coordinate.

    Each pattern fixes some coordinates at a bound and solves the remaining
    linear system; the pattern is accepted when interior coordinates lie in
    the box and the normal-cone multipliers carry the right sign (``<= 0`` at
    a lower bound, ``>= 0`` at an upper bound).
    """
    if not prob.enumerable:
        raise DimensionTooLarge(
            f"{prob.pattern_count} active-set patterns exceed the cap 2**{prob.enum_cap}; "
            "use iterative_resolvent"
        )
    H, h, lower, upper = prob.split[:4]
    dim = z.size
    M = np.eye(dim) + H
    rhs = z - h
    eps = _sign_tol(z)

    choices = []
    for lo, hi in zip(lower, upper):
        if lo == hi:
            choices.append(("E",))
        else:
            opts = ["I"]
            if np.isfinite(lo):
                opts.append("L")
            if np.isfinite(hi):
                opts.append("U")
            choices.append(tuple(opts))

    # try the pattern suggested by clipping the unconstrained solution first
    try:
        guess_w = np.clip(np.linalg.solve(M, rhs), lower, upper)
    except np.linalg.LinAlgError:
        guess_w = np.clip(rhs, lower, upper)
    guess = tuple(
        "E" if c == ("E",) else "L" if w == lo and "L" in c else "U" if w == hi and "U" in c else "I"
        for c, w, lo, hi in zip(choices, guess_w, lower, upper)
    )

    for pattern in itertools.chain([guess], itertools.product(*choices)):
        pat = np.array(pattern)
        at_lo = (pat == "L") | (pat == "E")
        at_hi = pat == "U"
        fixed = at_lo | at_hi
        values = np.where(at_lo, lower, upper)[fixed]
        try:
            w, nu = _solve_pattern(M, rhs, fixed, values)
        except np.linalg.LinAlgError:
            raise SingularSystem("singular active-set system; the operator is not monotone") from None
        interior = ~fixed
        if (w[interior] < lower[interior] - eps).any() or (w[interior] > upper[interior] + eps).any():
            continue
        if (nu[pat == "L"] > eps).any() or (nu[at_hi] < -eps).any():
            continue
        w[interior] = np.clip(w[interior], lower[interior], upper[interior])
        res = inclusion_residual(prob, w, z, nu)
        if res > RESIDUAL_TOL * (1.0 + float(np.abs(z).max(initial=0.0))):
            raise EvaluationFailure(f"active-set solve left residual {res:.3g}")
        return w
    raise NoConsistentPattern("no active-set pattern satisfies the cone sign conditions")


def resolvent_saddle(prob: MonotoneProblem, z) -> SaddlePoint:
    """The unique ``(x, y)`` with ``z in (I + T_L)(x, y)``.

    ``z`` is a :class:`SaddlePoint` or the stacked array ``(z_x, z_y)``.
    For the convex program each of the ``2**m`` patterns marks multipliers as
    zero (constraint treated as inactive) or free (constraint held with
    equality in the shifted system).
    """
    if prob.family not in ("saddle_quadratic", "convex_program_qp"):
        raise InvalidProblem(f"resolvent_saddle does not apply to {prob.family}")
    if isinstance(z, SaddlePoint):
        z = z.stacked()
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size != prob.dim:
        raise DimensionMismatch(f"z has {z.size} entries, expected n + m = {prob.dim}")
    w = _enumerate_box(prob, z)
    return SaddlePoint(w[: prob.n].copy(), w[prob.n:].copy())


def resolvent_vi(prob: MonotoneProblem, z) -> np.ndarray:
    """The unique ``x`` with ``z in x + G x + g + N_C(x)``."""
    if prob.family != "variational_inequality":
        raise InvalidProblem(f"resolvent_vi does not apply to {prob.family}")
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size != prob.dim:
        raise DimensionMismatch(f"z has {z.size} entries, expected {prob.dim}")
    return _enumerate_box(prob, z)


def resolvent(prob: MonotoneProblem, z, tol=1e-12, max_inner=100_000) -> np.ndarray:
    """``(I + T)^{-1} z`` for any family, as a flat array.

    Falls back to :func:`iterative_resolvent` when active-set enumeration
    would exceed the problem's cap.
    """
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size != prob.dim:
        raise DimensionMismatch(f"z has {z.size} entries, expected {prob.dim}")
    fam = prob.family
    if fam == "linear":
        return resolvent_linear(prob.data["M"], z)
    if fam == "separable_prox":
        return prox_separable(prob.data["atoms"], z)
    if not prob.enumerable:
        return iterative_resolvent(prob, z, tol=tol, max_inner=max_inner)
    if fam == "variational_inequality":
        return resolvent_vi(prob, z)
    return resolvent_saddle(prob, z).stacked()


def iterative_resolvent(prob: MonotoneProblem, z, tol: float = 1e-10, max_inner: int = 100_000) -> np.ndarray:
    """Forward-backward iteration for ``z in (I + T)(w)``.

    With ``T = Hw + h + dg`` the map
    ``w -> prox_{gamma g}(w - gamma ((I + H) w + h - z))`` is a contraction
    because ``I + H`` is strongly monotone; ``gamma`` minimizes its factor
    ``rho``. Iteration stops once the a posteriori bound
    ``rho / (1 - rho) * ||w_{k+1} - w_k||`` drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size != prob.dim:
        raise DimensionMismatch(f"z has {z.size} entries, expected {prob.dim}")
    H, h, lower, upper, l1 = prob.split
    gamma, rho = prob.forward_backward_step
    M = np.eye(prob.dim) + H
    shift = h - z

    def step(w):
        v = w - gamma * (M @ w + shift)
        v = np.where(l1, _soft_threshold(v, gamma), v)
        return np.clip(v, lower, upper)

    w = np.clip(z, lower, upper)
    bound = rho / (1.0 - rho) if rho < 1 else math.inf
    for _ in range(max_inner):
        nxt = step(w)
        if not np.isfinite(nxt).all():
            break
        moved = float(np.linalg.norm(nxt - w))
        w = nxt
        if moved * bound <= tol or moved == 0.0:
            return w
    raise InnerSolverDiverged(f"no convergence to tol={tol:g} within {max_inner} inner steps (rho={rho:.4f})")


# --- convex program helpers ---------------------------------------------------


def primal_objective(prob: MonotoneProblem, x) -> float:
    """``f_0(x) = 1/2 x'Px + q'x``."""
    x = np.asarray(x, dtype=np.float64)
    P, q = prob.data["P"], prob.data["q"]
    return float(0.5 * x @ P @ x + q @ x)


def constraint_values(prob: MonotoneProblem, x) -> np.ndarray:
    """``(f_1(x), ..., f_m(x)) = A x + b``."""
    return prob.data["A"] @ np.asarray(x, dtype=np.float64) + prob.data["b"]


def lagrangian(prob: MonotoneProblem, x, y) -> float:
    y = np.asarray(y, dtype=np.float64)
    R = prob.data["R"]
    return primal_objective(prob, x) + float(y @ constraint_values(prob, x) - 0.5 * y @ R @ y)


def evaluate_dual(prob: MonotoneProblem, y) -> float:
    """``g_0(y) = inf_x L(x, y)`` from the stationarity condition ``P x = -(q + A'y)``."""
    if prob.family != "convex_program_qp":
        raise InvalidProblem(f"evaluate_dual needs a convex_program_qp, got {prob.family}")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != prob.m:
        raise DimensionMismatch(f"y has {y.size} entries, expected {prob.m}")
    if (y < 0).any():
        raise ValueError("dual variables must be nonnegative")
    P, q, A = prob.data["P"], prob.data["q"], prob.data["A"]
    c = q + A.T @ y
    x, *_ = np.linalg.lstsq(P, -c, rcond=None)
    if np.linalg.norm(P @ x + c) > 1e-9 * (1.0 + np.linalg.norm(c)):
        # c has a component in ker(P): L(., y) decreases without bound along it
        raise DualUnbounded(f"L(x, y) is unbounded below in x for y = {y.tolist()}")
    return lagrangian(prob, x, y)


# --- brute-force oracle ------------------------------------------------------


def _dist_to_halfline(t, nonneg):
    """Distance of ``t`` to ``[0, inf)`` (``nonneg``) or ``(-inf, 0]``."""
    return np.maximum(-t, 0.0) if nonneg else np.maximum(t, 0.0)


def zero_merit(prob: MonotoneProblem, W, shift=None) -> np.ndarray:
    """Per-row merit that vanishes exactly at zeros of ``T`` (or of ``I + T - shift``).

    Distance from 0 to ``T(w)`` for linear, separable and saddle families;
    the natural residual ``||w - proj_C(w - A(w))||`` for the variational
    inequality. Rows outside the domain of ``T`` score ``inf``. Independent of
    the active-set code on purpose; tests use it as an oracle.
    """
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    d = prob.data
    # the shifted operator adds w - shift
    extra = np.zeros_like(W) if shift is None else W - np.asarray(shift, dtype=np.float64)
    fam = prob.family

    if fam == "linear":
        return np.linalg.norm(W @ d["M"].T + extra, axis=1)

    if fam == "separable_prox":
        sq = np.zeros(W.shape[0])
        for i, atom in enumerate(d["atoms"]):
            w, t = W[:, i], -extra[:, i]  # need t in df_i(w)
            if atom.kind == "quadratic":
                dist = np.abs(atom.a * (w - atom.c) - t)
            elif atom.kind == "absolute_value":
                dist = np.where(w == 0.0, np.maximum(np.abs(t) - 1.0, 0.0), np.abs(np.sign(w) - t))
            else:
                lo, hi = atom.lo, atom.hi
                dist = np.where((w < lo) | (w > hi), np.inf, np.abs(t))
                if lo < hi:
                    dist = np.where(w == lo, _dist_to_halfline(t, nonneg=False), dist)
                    dist = np.where(w == hi, _dist_to_halfline(t, nonneg=True), dist)
                else:
                    dist = np.where(w == lo, 0.0, dist)
            sq += dist**2
        return np.sqrt(sq)

    if fam in ("saddle_quadratic", "convex_program_qp"):
        n = prob.n
        X, Y = W[:, :n], W[:, n:]
        stat = X @ d["P"].T + d["q"] + Y @ d["A"] + extra[:, :n]
        # y-part of T_L is -(Ax + b - Ry) (+ cone); need its shift-adjusted value in -N(y)
        gy = X @ d["A"].T + d["b"] - Y @ d["R"].T - extra[:, n:]
        if fam == "saddle_quadratic":
            cone = np.abs(gy)
        else:
            cone = np.where(Y > 0, np.abs(gy), np.where(Y == 0, np.maximum(gy, 0.0), np.inf))
        return np.sqrt(np.sum(stat**2, axis=1) + np.sum(cone**2, axis=1))

    G, g, lo, hi = d["G"], d["g"], d["lo"], d["hi"]
    A = W @ G.T + g + extra
    nat = W - np.clip(W - A, lo, hi)
    out = np.linalg.norm(nat, axis=1)
    return np.where(((W < lo) | (W > hi)).any(axis=1), np.inf, out)


def brute_force_zero(prob: MonotoneProblem, bounds, step: float, threshold: Optional[float] = None,
                     shift=None, max_points: int = 5_000_000) -> np.ndarray:
    """Grid point minimizing :func:`zero_merit` over the box ``bounds``.

    ``bounds`` is one ``(low, high)`` pair per coordinate of the full variable.
    The default ``threshold`` is ``step * sqrt(dim) * (2 + ||H||_2)``, a
    bound on the merit of the grid point nearest an exact zero for the
    smooth families. Raises :class:`GridTooCoarse` when the best merit exceeds it.
    """
    if len(bounds) != prob.dim:
        raise DimensionMismatch(f"{len(bounds)} bounds for dimension {prob.dim}")
    if step <= 0:
        raise ValueError("step must be > 0")
    axes = []
    for lo, hi in bounds:
        k = int(math.floor((hi - lo) / step + 1e-9))
        axes.append(np.round(lo + step * np.arange(k + 1), 12))
    total = math.prod(a.size for a in axes)
    if total > max_points:
        raise DimensionTooLarge(f"grid has {total} points (limit {max_points})")
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, prob.dim)
    merit = zero_merit(prob, mesh, shift)
    best = int(np.argmin(merit))
    if threshold is None:
        lip = 2.0 + np.linalg.norm(prob.split[0], 2)
        threshold = step * math.sqrt(prob.dim) * lip
    if not merit[best] <= threshold:
        raise GridTooCoarse(f"best grid merit {merit[best]:.3g} exceeds threshold {threshold:.3g}")
    return mesh[best].copy()


# --- wrapping as a fixed-point operator -------------------------------------


def as_fixed_point_operator(prob: MonotoneProblem, partition: BlockPartition) -> FixedPointOperator:
    """The resolvent ``F = (I + T)^{-1}`` on ``partition``; zeros of ``T`` are its fixed points."""
    if partition.total != prob.dim:
        raise DimensionMismatch(f"partition covers {partition.total} coordinates, problem has {prob.dim}")

    block_fn = None
    if prob.family == "separable_prox":
        atoms = prob.data["atoms"]

        def block_fn(i, x):
            s = partition.block_slice(i)
            return prox_separable(atoms[s], x[s])

    return FixedPointOperator(
        partition,
        lambda x: resolvent(prob, x),
        block_fn=block_fn,
        claims_h2=False,
        claims_h3=True,
        name=f"resolvent[{prob.family}]",
    )
