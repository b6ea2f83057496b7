"""Block iteration driver.

At step ``p`` every block ``i`` in ``J(p)`` is rewritten with
``F_i(x_1^{s_1(p)}, ..., x_alpha^{s_alpha(p)})``; the other blocks keep their
value. Block evaluations within a step read one frozen snapshot and write
disjoint slices of a fresh array, so results do not depend on how many
workers share the step.
"""

import csv
import io
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .blockspace import BlockVector, block_norms
from .errors import EvaluationFailure, PartitionMismatch, ScheduleMismatch
from .operators import FixedPointOperator
from .schedule import Schedule, build_schedule

__all__ = [
    "RunConfig",
    "RunResult",
    "residual",
    "run_general",
    "run_jacobi",
    "run_gauss_seidel_h0",
    "TRACE_COLUMNS",
]

TRACE_LEVELS = ("none", "residuals", "full")
TRACE_COLUMNS = ("iter", "residual_max", "residual_l2", "dist_to_ref")


@dataclass
class RunConfig:
    tol: float = 1e-8
    max_iter: int = 1000
    workers: int = 1
    trace_level: str = "residuals"
    reference_point: Optional[object] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.trace_level not in TRACE_LEVELS:
            raise ValueError(f"trace_level must be one of {TRACE_LEVELS}")


@dataclass
class RunResult:
    status: str  # converged | max_iterations | schedule_exhausted | operator_failure
    iterations: int
    final_point: BlockVector
    residual_history: list
    residual_l2_history: list
    distance_history: Optional[list] = None
    trace: Optional[list] = None
    warnings: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else float("nan")

    def summary(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "final_point": self.final_point.data.tolist(),
            "residual_max": self.final_residual,
            "warnings": list(self.warnings),
        }

    def trace_csv(self) -> str:
        """Per-iteration CSV with 17 significant digits."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        start = self.iterations + 1 - len(self.residual_history)
        for k, (rmax, rl2) in enumerate(zip(self.residual_history, self.residual_l2_history)):
            dist = "" if self.distance_history is None else format(self.distance_history[k], ".17g")
            w.writerow([start + k, format(rmax, ".17g"), format(rl2, ".17g"), dist])
        return buf.getvalue()

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.trace_csv())


def residual(F: FixedPointOperator, x: BlockVector) -> float:
    """``||x - F(x)||_max``."""
    if x.partition != F.partition:
        raise PartitionMismatch(f"{x.partition.sizes} != {F.partition.sizes}")
    return float(block_norms(F.partition, x.data - F.evaluate(x.data)).max())


def _hypothesis_warnings(F: FixedPointOperator, sched: Schedule) -> list:
    out = []
    if not F.claims_h3:
        out.append(f"HypothesisWarning: {F.name} does not claim firm nonexpansiveness (h3)")
    if not sched.update_mask.all() and not F.claims_h2:
        out.append(
            f"HypothesisWarning: {F.name} does not claim block max-norm nonexpansiveness (h2), "
            "required for non-Jacobi schedules"
        )
    if not sched.synchronous:
        out.append("HypothesisWarning: schedule has delays; convergence is not guaranteed")
    elif not sched.full_update_steps:
        out.append("HypothesisWarning: no full-update step in the schedule (h0 fails)")
    return out


class _Evaluator:
    """Evaluates the blocks of ``F`` needed at one step, optionally on a thread pool."""

    def __init__(self, F: FixedPointOperator, workers: int):
        self.F = F
        self.pool = ThreadPoolExecutor(workers) if workers > 1 and F.block_fn is not None else None

    def __call__(self, point: np.ndarray, blocks) -> np.ndarray:
        F = self.F
        if self.pool is None:
            out = F.evaluate(point)
        else:
            point = point.copy()
            point.setflags(write=False)
            parts = list(self.pool.map(lambda i: F.block_fn(i, point), blocks))
            out = np.full(F.partition.total, np.nan)
            for i, part in zip(blocks, parts):
                out[F.partition.block_slice(i)] = part
        if not np.isfinite(out[self._coords(blocks)]).all():
            raise EvaluationFailure(f"{F.name} produced a non-finite value")
        return out

    def _coords(self, blocks):
        sl = self.F.partition.slices
        return np.concatenate([np.arange(sl[i].start, sl[i].stop) for i in blocks])

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def _reference(cfg: RunConfig, partition):
    if cfg.reference_point is None:
        return None
    ref = np.array(cfg.reference_point, dtype=np.float64).reshape(-1)
    if ref.size != partition.total:
        raise PartitionMismatch(f"reference point has {ref.size} coordinates, expected {partition.total}")
    return ref


def run_general(F: FixedPointOperator, sched: Schedule, x0: BlockVector, cfg: RunConfig) -> RunResult:
    """Run the block iteration of ``F`` under ``sched`` from ``x0``.

    The residual ``||x^p - F(x^p)||_max`` is recorded at every iterate and
    the run stops at the first ``p`` where it is ``<= cfg.tol``; ``x^p`` is
    then the final point. On synchronous steps the update's own evaluation
    provides ``F(x^p)``; steps that read delayed blocks cost one extra
    evaluation. Runs end after ``min(cfg.max_iter, sched.horizon)`` steps.
    """
    part = F.partition
    if x0.partition != part:
        raise PartitionMismatch(f"x0 partition {x0.partition.sizes} != operator partition {part.sizes}")
    if sched.alpha != part.alpha:
        raise ScheduleMismatch(f"schedule has {sched.alpha} blocks, partition has {part.alpha}")
    steps = np.arange(sched.horizon)[:, None]
    if (sched.delays > steps).any():
        raise ScheduleMismatch("schedule reads iterates from the future (s_i(p) > p)")

    ref = _reference(cfg, part)
    keep = cfg.trace_level != "none"
    res_max, res_l2, dists, trace = [], [], ([] if ref is not None else None), ([] if cfg.trace_level == "full" else None)
    warnings = _hypothesis_warnings(F, sched)

    limit = min(cfg.max_iter, sched.horizon)
    history = deque(maxlen=sched.max_delay + 1)
    x = x0.data.copy()
    history.append(x)
    all_blocks = list(range(part.alpha))
    evaluate = _Evaluator(F, cfg.workers)

    status, error, p = None, None, 0

    def record(x, fx):
        diff = x - fx
        r = float(block_norms(part, diff).max())
        if keep or not res_max:
            res_max.append(r)
            res_l2.append(float(np.linalg.norm(diff)))
            if dists is not None:
                dists.append(float(block_norms(part, x - ref).max()))
            if trace is not None:
                trace.append(x.copy())
        else:
            res_max[-1], res_l2[-1] = r, float(np.linalg.norm(diff))
            if dists is not None:
                dists[-1] = float(block_norms(part, x - ref).max())
        return r

    try:
        for p in range(limit + 1):
            if p == limit:
                r = record(x, evaluate(x, all_blocks))
                if r <= cfg.tol:
                    status = "converged"
                else:
                    status = "max_iterations" if limit == cfg.max_iter else "schedule_exhausted"
                break

            mask = sched.update_mask[p]
            reads = sched.delays[p]
            if (reads == p).all():
                fx = evaluate(x, all_blocks)
                update = fx
            else:
                point = np.empty_like(x)
                for j, s in enumerate(part.slices):
                    point[s] = history[-1 - (p - int(reads[j]))][s]
                update = evaluate(point, [i for i in all_blocks if mask[i]])
                fx = evaluate(x, all_blocks)

            if record(x, fx) <= cfg.tol:
                status = "converged"
                break

            nxt = x.copy()
            for i in np.flatnonzero(mask):
                s = part.slices[i]
                nxt[s] = update[s]
            history.append(nxt)
            x = nxt
    except (EvaluationFailure, FloatingPointError) as exc:
        status, error = "operator_failure", str(exc)
    finally:
        evaluate.close()

    return RunResult(
        status=status,
        iterations=p,
        final_point=BlockVector(part, x),
        residual_history=res_max,
        residual_l2_history=res_l2,
        distance_history=dists,
        trace=trace,
        warnings=warnings,
        error=error,
    )


def run_jacobi(F: FixedPointOperator, x0: BlockVector, cfg: RunConfig) -> RunResult:
    """``x^{p+1} = F(x^p)`` with every block updated from the previous iterate."""
    sched = build_schedule("jacobi", F.partition.alpha, cfg.max_iter)
    return run_general(F, sched, x0, cfg)


def run_gauss_seidel_h0(F: FixedPointOperator, x0: BlockVector, W: int, cfg: RunConfig) -> RunResult:
    """Cyclic single-block sweeps with a full update every ``W`` steps."""
    sched = build_schedule("periodic_full", F.partition.alpha, cfg.max_iter, {"period": W})
    return run_general(F, sched, x0, cfg)
