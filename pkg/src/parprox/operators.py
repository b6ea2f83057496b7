"""Fixed-point operators ``F = (F_1, ..., F_alpha)`` and randomized hypothesis checks.

Two properties matter for the block iteration:

* block max-norm nonexpansiveness, ``||F(x) - F(y)||_max <= ||x - y||_max``;
* firm nonexpansiveness, ``||F(x) - F(y)||^2 <= <F(x) - F(y), x - y>``.

Neither can be proved by sampling, only falsified, so the checkers report the
worst violation seen and a witnessing pair.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .blockspace import BlockPartition, BlockVector, block_norms
from .errors import PartitionMismatch

__all__ = [
    "FixedPointOperator",
    "apply",
    "identity",
    "scale",
    "affine_average",
    "UniformPairSampler",
    "CheckReport",
    "check_h2",
    "check_h3",
    "DEFAULT_TRIALS",
    "DEFAULT_SLACK",
]

DEFAULT_TRIALS = 1000
DEFAULT_SLACK = 1e-10


class FixedPointOperator:
    """A deterministic map on the flat coordinates of a partitioned space.

    ``fn`` maps a float64 array of length ``partition.total`` to another one.
    ``block_fn(i, x)``, when given, returns only block ``i`` (0-based) of
    ``fn(x)``; the engine uses it to spread blocks over workers. It must agree
    bitwise with the corresponding slice of ``fn``.
    """

    def __init__(
        self,
        partition: BlockPartition,
        fn: Callable[[np.ndarray], np.ndarray],
        *,
        block_fn: Optional[Callable[[int, np.ndarray], np.ndarray]] = None,
        claims_h2: bool = False,
        claims_h3: bool = False,
        name: str = "F",
    ):
        self.partition = partition
        self.fn = fn
        self.block_fn = block_fn
        self.claims_h2 = claims_h2
        self.claims_h3 = claims_h3
        self.name = name

    def evaluate(self, data: np.ndarray) -> np.ndarray:
        out = np.asarray(self.fn(data), dtype=np.float64).reshape(-1)
        if out.size != self.partition.total:
            raise PartitionMismatch(f"{self.name} returned {out.size} coordinates")
        return out

    def __call__(self, x: BlockVector) -> BlockVector:
        return apply(self, x)

    def __repr__(self):
        return (
            f"FixedPointOperator({self.name}, sizes={self.partition.sizes}, "
            f"claims_h2={self.claims_h2}, claims_h3={self.claims_h3})"
        )


def apply(F: FixedPointOperator, x: BlockVector) -> BlockVector:
    if x.partition != F.partition:
        raise PartitionMismatch(f"{x.partition.sizes} != {F.partition.sizes}")
    return BlockVector(F.partition, F.evaluate(x.data))


def identity(partition: BlockPartition) -> FixedPointOperator:
    return FixedPointOperator(
        partition,
        lambda x: x.copy(),
        block_fn=lambda i, x: x[partition.block_slice(i)].copy(),
        claims_h2=True,
        claims_h3=True,
        name="identity",
    )


def scale(partition: BlockPartition, k: float) -> FixedPointOperator:
    """``F(x) = k x``; firmly nonexpansive iff ``0 <= k <= 1``."""
    k = float(k)
    return FixedPointOperator(
        partition,
        lambda x: k * x,
        block_fn=lambda i, x: k * x[partition.block_slice(i)],
        claims_h2=abs(k) <= 1.0,
        claims_h3=0.0 <= k <= 1.0,
        name=f"scale({k:g})",
    )


def affine_average(partition: BlockPartition, a) -> FixedPointOperator:
    """``F(x) = (x + a) / 2``, the averaged map with unique fixed point ``a``."""
    a = np.array(a, dtype=np.float64).reshape(-1)
    if a.size != partition.total:
        raise PartitionMismatch(f"anchor has {a.size} coordinates, partition {partition.total}")

    def block(i, x):
        s = partition.block_slice(i)
        return (x[s] + a[s]) / 2.0

    return FixedPointOperator(
        partition,
        lambda x: (x + a) / 2.0,
        block_fn=block,
        claims_h2=True,
        claims_h3=True,
        name="affine_average",
    )


@dataclass(frozen=True)
class UniformPairSampler:
    """Pairs of points drawn componentwise uniform on ``[low, high]``."""

    low: float = -10.0
    high: float = 10.0
    seed: int = 0

    def pairs(self, dim: int, trials: int):
        rng = np.random.default_rng(self.seed)
        x = rng.uniform(self.low, self.high, size=(trials, dim))
        y = rng.uniform(self.low, self.high, size=(trials, dim))
        return x, y


@dataclass
class CheckReport:
    hypothesis: str
    trials: int
    slack: float
    worst_violation: float
    passed: bool
    witness: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "trials": self.trials,
            "slack": self.slack,
            "worst_violation": self.worst_violation,
            "passed": self.passed,
            "witness": None if self.witness is None else [w.tolist() for w in self.witness],
        }


def _run_check(name, F, sampler, trials, slack, violation):
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if slack < 0:
        raise ValueError("slack must be >= 0")
    sampler = sampler or UniformPairSampler()
    xs, ys = sampler.pairs(F.partition.total, trials)
    worst, where = -np.inf, 0
    for t in range(trials):
        v = violation(xs[t], ys[t], F.evaluate(xs[t]), F.evaluate(ys[t]))
        if v > worst:
            worst, where = v, t
    passed = bool(worst <= slack)
    witness = None if passed else (xs[where].copy(), ys[where].copy())
    return CheckReport(name, trials, slack, float(worst), passed, witness)


def check_h2(F, sampler=None, trials=DEFAULT_TRIALS, slack=DEFAULT_SLACK) -> CheckReport:
    """Worst ``||F(x) - F(y)||_max - ||x - y||_max`` over sampled pairs."""
    p = F.partition

    def violation(x, y, fx, fy):
        return block_norms(p, fx - fy).max() - block_norms(p, x - y).max()

    return _run_check("h2", F, sampler, trials, slack, violation)


def check_h3(F, sampler=None, trials=DEFAULT_TRIALS, slack=DEFAULT_SLACK) -> CheckReport:
    """Worst ``||F(x) - F(y)||^2 - <F(x) - F(y), x - y>`` over sampled pairs."""

    def violation(x, y, fx, fy):
        d = fx - fy
        return np.dot(d, d) - np.dot(d, x - y)

    return _run_check("h3", F, sampler, trials, slack, violation)
