"""Largest boundary sum over boxes for random oriented chains on Z and Z^2.

Compares the observed max |sum_W boundary| with the telescoping bound and
counts how many boxes are too large for any chain of that norm to have
boundary >= 1 everywhere on them.

    python3 scripts/flux_sweep.py --dim 2 --R 2 --trials 50
"""

import argparse
import random
import sys
from dataclasses import dataclass
from fractions import Fraction

from muponzi.coarse_core import MetricRadius, box_window
from muponzi.discrete_chains import SparseChain1, flux_obstruction


@dataclass
class FluxConfig:
    dim: int = 1
    R: int = 1
    side: int = 12
    trials: int = 200
    seed: int = 0


def random_oriented_chain(win, R, rng):
    """Values in [-1, 1] (multiples of 1/4), one direction per pair."""
    entries = {}
    for x in win.points:
        for y in win.ball(x, R):
            if x < y:
                v = Fraction(rng.randint(-4, 4), 4)
                if v:
                    entries[(x, y) if rng.random() < 0.5 else (y, x)] = v
    return entries


def sweep(cfg: FluxConfig):
    rng = random.Random(cfg.seed)
    pad = cfg.R
    lo, hi = (1 - pad,) * cfg.dim, (cfg.side + pad,) * cfg.dim
    win = box_window(lo, hi)
    windows = [((1,) * cfg.dim, (n,) * cfg.dim) for n in range(1, cfg.side + 1)]
    worst = {}
    for _ in range(cfg.trials):
        theta = SparseChain1(random_oriented_chain(win, cfg.R, rng), MetricRadius(cfg.R, win))
        rep = flux_obstruction(theta, windows, norm_bound=1)
        for row in rep.rows:
            prev = worst.get(row.size, (0, row.bound, row.refutes_unit_boundary))
            worst[row.size] = (max(prev[0], abs(row.flux)), row.bound, row.refutes_unit_boundary)
    return worst


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dim", type=int, choices=[1, 2], default=FluxConfig.dim)
    p.add_argument("--R", type=int, default=FluxConfig.R)
    p.add_argument("--side", type=int, default=FluxConfig.side)
    p.add_argument("--trials", type=int, default=FluxConfig.trials)
    p.add_argument("--seed", type=int, default=FluxConfig.seed)
    cfg = FluxConfig(**vars(p.parse_args(argv)))
    worst = sweep(cfg)
    print("#W\tmax|flux|\tbound\trefutes")
    ok = True
    for size in sorted(worst):
        m, b, ref = worst[size]
        ok &= m <= b
        print(f"{size}\t{float(m):.4g}\t{float(b):g}\t{ref}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
