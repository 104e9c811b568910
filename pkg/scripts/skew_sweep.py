"""Sweep true page tilt and report how well the estimator recovers it.

Renders synthetic pages on a grid of known skew angles, runs the full
orientation stage on each, and prints per-angle mean and worst absolute
estimation error in degrees.  With --turns the pages are also rotated
by a random quarter turn, so the sweep doubles as a de-rotation check.

    python3 scripts/skew_sweep.py --step 2 --pages-per-angle 5 --turns
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from pagedecomp.config import DecompositionConfig
from pagedecomp.harness import PageSpec, evaluate_page


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--half-range", type=float, default=10.0)
    ap.add_argument("--step", type=float, default=1.0)
    ap.add_argument("--pages-per-angle", type=int, default=3)
    ap.add_argument("--turns", action="store_true",
                    help="also apply a random quarter turn to every page")
    ap.add_argument("--width", type=int, default=900)
    ap.add_argument("--height", type=int, default=1100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cfg = DecompositionConfig()
    angles = np.arange(-args.half_range, args.half_range + 1e-9, args.step)
    rng = np.random.default_rng(args.seed)
    t0 = time.perf_counter()
    all_errs: list[float] = []
    turn_ok = turn_n = 0
    worst: tuple[float, float, int] | None = None  # err, angle, seed
    print(f"{'angle':>7}  {'mean err':>9}  {'max err':>9}")
    for angle in angles:
        errs = []
        for _ in range(args.pages_per_angle):
            spec = PageSpec(
                width=args.width, height=args.height,
                seed=int(rng.integers(0, 2**31 - 1)),
                column_count=int(rng.integers(2, 4)),
                body_line_height=int(rng.integers(16, 25)),
                skew=round(float(angle), 2),
                turns=int(rng.integers(0, 4)) if args.turns else 0,
                headline_present=bool(rng.random() < 0.5),
            )
            rec = evaluate_page(spec, cfg)
            if rec.error is not None or rec.skew_error is None:
                print(f"seed {spec.seed} failed: {rec.error}", file=sys.stderr)
                return 1
            errs.append(rec.skew_error)
            if worst is None or rec.skew_error > worst[0]:
                worst = (rec.skew_error, float(angle), spec.seed)
            if rec.turns_correct is not None:
                turn_n += 1
                turn_ok += rec.turns_correct
        all_errs.extend(errs)
        print(f"{angle:+7.2f}  {np.mean(errs):9.3f}  {np.max(errs):9.3f}")
    dt = time.perf_counter() - t0
    print()
    print(f"pages: {len(all_errs)}   mean: {np.mean(all_errs):.3f} deg   "
          f"within 0.3 deg: {int(np.sum(np.asarray(all_errs) <= 0.3))}"
          f"/{len(all_errs)}   elapsed: {dt:.1f}s")
    if worst is not None:
        print(f"worst: {worst[0]:.3f} deg at true angle {worst[1]:+.2f} "
              f"(seed {worst[2]})")
    if turn_n:
        print(f"quarter turns correct: {turn_ok}/{turn_n}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
