"""Update sets ``J(p)`` and delay indices ``s_i(p)`` over a finite horizon.

A schedule is materialized as two ``(horizon, alpha)`` tables: a boolean mask
saying which blocks are rewritten at step ``p`` and the iterate index each
block is read from. Block numbers are 1-based wherever they leave this module.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParams

__all__ = ["Schedule", "ValidationReport", "build_schedule", "validate_schedule", "KINDS"]

KINDS = ("jacobi", "gauss_seidel", "periodic_full", "custom")


@dataclass(frozen=True, eq=False)
class Schedule:
    kind: str
    update_mask: np.ndarray  # (horizon, alpha) bool
    delays: np.ndarray  # (horizon, alpha) int, entry [p, i] = s_i(p)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.update_mask, self.delays):
            arr.setflags(write=False)

    @property
    def alpha(self) -> int:
        return self.update_mask.shape[1]

    @property
    def horizon(self) -> int:
        return self.update_mask.shape[0]

    def update_set(self, p: int) -> frozenset:
        """``J(p)`` with 1-based block numbers."""
        return frozenset(int(i) + 1 for i in np.flatnonzero(self.update_mask[p]))

    @property
    def update_sets(self) -> list:
        return [self.update_set(p) for p in range(self.horizon)]

    @property
    def full_update_steps(self) -> list:
        return [int(p) for p in np.flatnonzero(self.update_mask.all(axis=1))]

    @property
    def synchronous(self) -> bool:
        steps = np.arange(self.horizon)[:, None]
        return bool((self.delays == steps).all())

    @property
    def max_delay(self) -> int:
        """Largest ``p - s_i(p)`` over the horizon (how many past iterates to keep)."""
        steps = np.arange(self.horizon)
        return int(max(0, (steps - self.delays.min(axis=1)).max()))

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return (
            self.kind == other.kind
            and np.array_equal(self.update_mask, other.update_mask)
            and np.array_equal(self.delays, other.delays)
        )


def _sync_delays(horizon, alpha):
    return np.repeat(np.arange(horizon)[:, None], alpha, axis=1)


def _mask_from_sets(sets, alpha, where):
    mask = np.zeros((len(sets), alpha), dtype=bool)
    for p, s in enumerate(sets):
        s = list(s)
        if not s:
            raise InvalidParams(f"{where}[{p}] is empty; every J(p) must be non-empty")
        for i in s:
            if int(i) != i or not 1 <= i <= alpha:
                raise InvalidParams(f"{where}[{p}] has block {i!r} outside 1..{alpha}")
            mask[p, int(i) - 1] = True
    return mask


def build_schedule(kind: str, alpha: int, horizon: int, params: Optional[dict] = None) -> Schedule:
    """Materialize a schedule.

    Parameters by kind:

    * ``jacobi`` / ``gauss_seidel``: none.
    * ``periodic_full``: ``period`` (W >= 1) and optional ``base`` (list of
      1-based update sets, default cyclic single-block sweeps). The base
      pattern advances only on steps it fills; every W-th step is a full update.
    * ``custom``: ``J`` (list of 1-based update sets) and ``S`` (list of
      per-block read indices), both of length ``horizon``. Copied verbatim,
      illegal delays included, so ``validate_schedule`` can report them.
    """
    params = dict(params or {})
    if alpha < 1 or horizon < 1:
        raise InvalidParams(f"alpha and horizon must be >= 1, got {alpha}, {horizon}")

    if kind == "jacobi":
        mask = np.ones((horizon, alpha), dtype=bool)
        delays = _sync_delays(horizon, alpha)
    elif kind == "gauss_seidel":
        mask = np.zeros((horizon, alpha), dtype=bool)
        mask[np.arange(horizon), np.arange(horizon) % alpha] = True
        delays = _sync_delays(horizon, alpha)
    elif kind == "periodic_full":
        period = params.get("period")
        if period is None or int(period) != period or period < 1:
            raise InvalidParams(f"periodic_full needs an integer period >= 1, got {period!r}")
        period = int(period)
        base = params.get("base") or [[i + 1] for i in range(alpha)]
        base_mask = _mask_from_sets(base, alpha, "base")
        mask = np.zeros((horizon, alpha), dtype=bool)
        k = 0
        for p in range(horizon):
            if (p + 1) % period == 0:
                mask[p] = True
            else:
                mask[p] = base_mask[k % len(base_mask)]
                k += 1
        params = {"period": period, "base": [sorted(s) for s in base]}
        delays = _sync_delays(horizon, alpha)
    elif kind == "custom":
        J, S = params.get("J"), params.get("S")
        if J is None or S is None:
            raise InvalidParams("custom schedules need both J and S tables")
        if len(J) != horizon or len(S) != horizon:
            raise InvalidParams(f"J and S must have {horizon} rows, got {len(J)} and {len(S)}")
        mask = _mask_from_sets(J, alpha, "J")
        try:
            delays = np.array(S, dtype=np.int64)
        except (TypeError, ValueError) as exc:
            raise InvalidParams(f"S is not an integer table: {exc}") from None
        if delays.shape != (horizon, alpha):
            raise InvalidParams(f"S must have shape ({horizon}, {alpha}), got {delays.shape}")
        if (delays < 0).any():
            raise InvalidParams("S entries must be >= 0")
        params = {"J": [sorted(int(i) for i in s) for s in J], "S": delays.tolist()}
    else:
        raise InvalidParams(f"unknown schedule kind {kind!r}; expected one of {KINDS}")

    return Schedule(kind=kind, update_mask=mask, delays=delays, params=params)


@dataclass
class ValidationReport:
    window: int
    delay_legal: bool
    fairness: bool
    delay_progress: bool
    h0_satisfied: bool
    h0_gap: Optional[int]
    max_delay: int
    synchronous: bool
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.delay_legal and self.fairness and self.delay_progress and self.h0_satisfied

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "delay_legal": self.delay_legal,
            "fairness": self.fairness,
            "delay_progress": self.delay_progress,
            "h0_satisfied": self.h0_satisfied,
            "h0_gap": self.h0_gap,
            "max_delay": self.max_delay,
            "synchronous": self.synchronous,
            "problems": list(self.problems),
        }


def _longest_run(values: np.ndarray) -> int:
    best = run = 1
    for a, b in zip(values[:-1], values[1:]):
        run = run + 1 if a == b else 1
        best = max(best, run)
    return best


def validate_schedule(s: Schedule, window: Optional[int] = None) -> ValidationReport:
    """Finite-horizon surrogates for the asymptotic conditions on ``J`` and ``S``.

    ``window`` defaults to ``alpha``. Violations are reported, never raised.
    """
    window = s.alpha if window is None else int(window)
    if window < 1:
        raise InvalidParams(f"window must be >= 1, got {window}")
    problems = []
    P = s.horizon
    steps = np.arange(P)

    bad = np.argwhere(s.delays > steps[:, None])
    delay_legal = bad.size == 0
    if not delay_legal:
        p, i = bad[0]
        problems.append(f"s_{i + 1}({p}) = {s.delays[p, i]} exceeds p = {p}")

    # every block touched in every window-long interval
    fairness = True
    width = min(window, P)
    counts = np.cumsum(np.vstack([np.zeros(s.alpha, int), s.update_mask.astype(int)]), axis=0)
    seen = counts[width:] - counts[:-width]
    starved = np.argwhere(seen == 0)
    if starved.size:
        fairness = False
        p, i = starved[0]
        problems.append(f"block {i + 1} not updated in steps {p}..{p + width - 1}")

    # min_i s_i(p) should keep moving forward
    oldest = s.delays.min(axis=1)
    delay_progress = True
    if (np.diff(oldest) < 0).any():
        delay_progress = False
        problems.append("min_i s_i(p) decreases")
    elif _longest_run(oldest) > window:
        delay_progress = False
        problems.append(f"min_i s_i(p) stalls for more than {window} steps")

    full = s.full_update_steps
    if full:
        # the trailing gap runs to the first step past the horizon
        gaps = np.diff([-1] + full).tolist() + [P - full[-1]]
        h0_gap = int(max(gaps))
        h0_satisfied = h0_gap <= window
        if not h0_satisfied:
            problems.append(f"full updates are {h0_gap} steps apart (window {window})")
    else:
        h0_gap = None
        h0_satisfied = False
        problems.append("no step updates every block")

    return ValidationReport(
        window=window,
        delay_legal=delay_legal,
        fairness=fairness,
        delay_progress=delay_progress,
        h0_satisfied=h0_satisfied,
        h0_gap=h0_gap,
        max_delay=s.max_delay,
        synchronous=s.synchronous,
        problems=problems,
    )
