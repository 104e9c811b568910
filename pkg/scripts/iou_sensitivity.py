"""Score one synthetic corpus at several IoU matching thresholds.

The pipeline runs once per page; only the box-matching threshold
varies.  A steep drop between adjacent thresholds means the predicted
regions land on their truth counterparts but with loose borders, while
a flat curve means the boxes are tight.

    python3 scripts/iou_sensitivity.py --pages 20 --thresholds 0.3,0.5,0.7,0.9
"""

from __future__ import annotations

import argparse

import numpy as np

from pagedecomp.classify import ElementLabel
from pagedecomp.config import DecompositionConfig
from pagedecomp.harness import (EvalReport, PageSpec, map_to_upright,
                                match_regions, run_pipeline, synth_page)

# candidate photo placements, fractions of the page; pages draw 0-2
_SPOTS = (
    (0.55, 0.45, 0.90, 0.68),
    (0.08, 0.66, 0.44, 0.90),
    (0.30, 0.08, 0.70, 0.30),
)

_ORDER = (ElementLabel.IMAGE, ElementLabel.HEADLINE,
          ElementLabel.SUBHEADLINE, ElementLabel.COLUMN)


def _specs(n: int, seed: int) -> list[PageSpec]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        n_img = int(rng.integers(0, 3))
        picks = rng.choice(len(_SPOTS), size=n_img, replace=False)
        out.append(PageSpec(
            width=900, height=1100, seed=int(rng.integers(0, 2**31 - 1)),
            column_count=int(rng.integers(2, 4)),
            body_line_height=int(rng.integers(16, 25)),
            skew=round(float(rng.uniform(-6, 6)), 2),
            headline_present=bool(rng.random() < 0.6),
            subheadline_present=bool(rng.random() < 0.4),
            image_blocks=tuple(_SPOTS[int(p)] for p in sorted(picks)),
        ))
    return out


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pages", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--thresholds", default="0.3,0.5,0.7,0.9")
    args = ap.parse_args(argv)
    thresholds = [float(t) for t in args.thresholds.split(",")]

    cfg = DecompositionConfig()
    pages = []
    for spec in _specs(args.pages, args.seed):
        page, truth = synth_page(spec)
        result = run_pipeline(page, cfg)
        mapped = map_to_upright(result.regions, result.page.shape, truth)
        pages.append((mapped, truth))

    head = "  ".join(f"{lab.value:>12}" for lab in _ORDER)
    print(f"{'iou_min':>8}  {head}   (precision / recall)")
    for t in thresholds:
        counts = {lab.value: {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
                  for lab in _ORDER}
        for mapped, truth in pages:
            rep = match_regions(mapped, truth, iou_min=t)
            for lab, c in rep.counts.items():
                for key in counts[lab]:
                    counts[lab][key] += c[key]
        rep = EvalReport.from_counts(counts)
        cells = "  ".join(
            f"{rep.precision[lab.value]:5.3f} /{rep.recall[lab.value]:5.3f}"
            for lab in _ORDER)
        print(f"{t:8.2f}  {cells}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
