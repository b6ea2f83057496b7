"""Sweep bounded delays and random update sets on the QP fixture.

Each trial draws J(p) at random (with a full update every `period` steps) and
per-block read indices s_i(p) uniform in [p - D, p]. Reports how often the run
converges and the median iteration count for each maximum delay D.

    python scripts/delay_sweep.py --delays 0 1 2 4 8 --trials 20
"""

import argparse
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from parprox.cli import build, parse_problem
from parprox.engine import RunConfig, run_general
from parprox.schedule import build_schedule, validate_schedule

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@dataclass
class SweepConfig:
    fixture: str = "qp"
    delays: list = field(default_factory=lambda: [0, 1, 2, 4, 8])
    trials: int = 20
    period: int = 4
    horizon: int = 3000
    tol: float = 1e-8
    seed: int = 0


def random_schedule(rng, alpha, horizon, max_delay, period):
    J, S = [], []
    for p in range(horizon):
        if (p + 1) % period == 0:
            J.append(list(range(1, alpha + 1)))
        else:
            k = rng.integers(1, alpha + 1)
            J.append(sorted(rng.choice(np.arange(1, alpha + 1), size=k, replace=False).tolist()))
        S.append([int(max(0, p - rng.integers(0, max_delay + 1))) for _ in range(alpha)])
    return build_schedule("custom", alpha, horizon, {"J": J, "S": S})


def main(cfg: SweepConfig):
    built = build(parse_problem((FIXTURES / f"{cfg.fixture}.json").read_text()))
    F, x0 = built.operator, built.x0
    rng = np.random.default_rng(cfg.seed)
    run_cfg = RunConfig(tol=cfg.tol, max_iter=cfg.horizon, trace_level="none")
    print(f"fixture={cfg.fixture} period={cfg.period} trials={cfg.trials}")
    print(f"{'D':>3} {'converged':>10} {'median iters':>13} {'h0 ok':>6}")
    for D in cfg.delays:
        iters, ok, h0 = [], 0, 0
        for _ in range(cfg.trials):
            sched = random_schedule(rng, F.partition.alpha, cfg.horizon, D, cfg.period)
            h0 += validate_schedule(sched, window=max(cfg.period, D + 1)).h0_satisfied
            r = run_general(F, sched, x0, run_cfg)
            if r.converged:
                ok += 1
                iters.append(r.iterations)
        med = f"{np.median(iters):.0f}" if iters else "-"
        print(f"{D:>3} {ok:>6}/{cfg.trials:<3} {med:>13} {h0:>6}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--fixture", default="qp")
    ap.add_argument("--delays", type=int, nargs="+", default=[0, 1, 2, 4, 8])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--period", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    main(SweepConfig(fixture=a.fixture, delays=a.delays, trials=a.trials, period=a.period, seed=a.seed))
