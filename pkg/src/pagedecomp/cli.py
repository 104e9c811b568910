"""Command-line front end: decompose, deskew, synth, and eval.

Exit codes: 0 success, 1 usage or input error, 2 completed with flags
(blank page, undecidable orientation).  Config precedence is CLI --opt
override > config file (--config or $DECOMPOSE_CONFIG) > built-in
default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from . import __version__
from .classify import ElementLabel, Region
from .config import ConfigError, DecompositionConfig
from .harness import (GroundTruth, LayoutError, PageSpec, map_to_upright,
                      match_regions, run_pipeline, synth_page)
from .orient import auto_orient
from .raster import GrayImage, PageLoadError, crop, load_page, save_page

# fixed overlay colors, one per label, documented in the README
_LABEL_COLORS = {
    ElementLabel.IMAGE: (228, 26, 28),
    ElementLabel.HEADLINE: (55, 126, 184),
    ElementLabel.SUBHEADLINE: (77, 175, 74),
    ElementLabel.COLUMN: (255, 127, 0),
}

# report-table column order with display names
_CLASS_COLUMNS = (
    (ElementLabel.IMAGE, "Images"),
    (ElementLabel.HEADLINE, "Headlines"),
    (ElementLabel.SUBHEADLINE, "Sub-headlines"),
    (ElementLabel.COLUMN, "Columns"),
)

_PAGE_SUFFIXES = (".png", ".pgm")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for
    completed-with-flags, so usage errors are remapped to 1."""

    def error(self, message: str) -> None:  # noqa: A003 - argparse API
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_opt_value(key: str, raw: str) -> Any:
    low = raw.strip().lower()
    if low in ("none", "null"):
        return None
    if low == "true":
        return True
    if low == "false":
        return False
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    raise ConfigError(f"cannot parse --opt value for {key}: {raw!r}")


def _load_config(args: argparse.Namespace) -> DecompositionConfig:
    path = args.config or os.environ.get("DECOMPOSE_CONFIG")
    cfg = (DecompositionConfig.from_file(path) if path
           else DecompositionConfig())
    overrides: dict[str, Any] = {}
    for item in args.opt:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--opt expects key=value, got {item!r}")
        overrides[key] = _parse_opt_value(key, raw)
    if overrides:
        cfg = cfg.with_overrides(overrides)
    return cfg


def _config_field_names() -> set[str]:
    return {f.name for f in fields(DecompositionConfig)}


def _write_json(path: Path, doc: Any) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _write_manifest(out_dir: Path, input_path: str, snapshot: dict[str, Any],
                    timings_ms: dict[str, float],
                    flags: tuple[str, ...] = ()) -> None:
    """RunManifest: reloadable config snapshot plus derived extras.

    The "config" block holds only real config fields with every None
    replaced by the value actually used, so feeding it back through
    --config reproduces the run; anything derived beyond that (the
    estimated line height) rides in "derived".
    """
    names = _config_field_names()
    manifest = {
        "input": str(input_path),
        "tool_version": __version__,
        "config": {k: v for k, v in snapshot.items() if k in names},
        "derived": {k: v for k, v in snapshot.items() if k not in names},
        "timings_ms": {k: round(v, 3) for k, v in timings_ms.items()},
        "flags": list(flags),
    }
    _write_json(out_dir / "manifest.json", manifest)


# --------------------------------------------------------------------------
# decompose

def _draw_box(rgb: np.ndarray, region: Region, thickness: int = 2) -> None:
    h, w = rgb.shape[:2]
    clipped = region.box.clipped(w, h)
    if clipped is None:
        return
    x0, y0, x1, y1 = clipped.as_tuple()
    color = _LABEL_COLORS[region.label]
    t = thickness
    rgb[y0:min(y0 + t, y1 + 1), x0:x1 + 1] = color
    rgb[max(y1 - t + 1, y0):y1 + 1, x0:x1 + 1] = color
    rgb[y0:y1 + 1, x0:min(x0 + t, x1 + 1)] = color
    rgb[y0:y1 + 1, max(x1 - t + 1, x0):x1 + 1] = color


def render_overlay(page: GrayImage, regions: list[Region]) -> np.ndarray:
    """RGB copy of the page with color-coded region outlines."""
    rgb = np.stack([page, page, page], axis=-1)
    for region in regions:
        _draw_box(rgb, region)
    return rgb


def _regions_doc(result) -> dict[str, Any]:
    h, w = result.page.shape
    orientation = None
    if result.orientation is not None:
        est = result.orientation.skew
        decision = result.orientation.decision
        orientation = {
            "skew_degrees": float(est.angle) if est is not None else 0.0,
            "turns_applied": decision.turns if decision is not None else 0,
        }
    return {
        "page": {"width": w, "height": h},
        "orientation": orientation,
        "regions": [
            {
                "id": i,
                "label": r.label.value,
                "bbox": list(r.box.as_tuple()),
                "line_height": r.line_height,
            }
            for i, r in enumerate(result.regions)
        ],
    }


def cmd_decompose(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    page = load_page(args.input)
    out = Path(args.out) if args.out else Path(
        Path(args.input).stem + "_decomp")
    out.mkdir(parents=True, exist_ok=True)

    result = run_pipeline(page, cfg, orient=not args.no_orient)
    _write_json(out / "regions.json", _regions_doc(result))
    overlay = render_overlay(result.page, result.regions)
    Image.fromarray(overlay, mode="RGB").save(out / "overlay.png")
    if args.save_crops:
        crops = out / "crops"
        crops.mkdir(exist_ok=True)
        for i, region in enumerate(result.regions):
            save_page(crop(result.page, region.box),
                      crops / f"{i:03d}_{region.label.value}.png")

    dominant = result.dominant
    text = cfg.text_thresholds(dominant) if dominant else None
    snapshot = cfg.snapshot(scale=result.resolved, text=text)
    flags = result.orientation.flags if result.orientation else ()
    _write_manifest(out, args.input, snapshot, result.timings_ms, flags)

    if args.verbose:
        for stage, ms in result.timings_ms.items():
            print(f"  {stage}: {ms:.1f} ms", file=sys.stderr)
    print(f"{len(result.regions)} regions -> {out / 'regions.json'}")
    if flags:
        print(f"flags: {', '.join(flags)}", file=sys.stderr)
        return 2
    return 0


# --------------------------------------------------------------------------
# deskew

def cmd_deskew(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    page = load_page(args.input)
    out = Path(args.out) if args.out else Path(
        Path(args.input).stem + "_deskew")
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    outcome = auto_orient(page, cfg)
    elapsed_ms = (time.perf_counter() - t0) * 1000

    save_page(outcome.page, out / "corrected.png")
    decision = outcome.decision
    report = {
        "skew_degrees": float(outcome.skew.angle)
        if outcome.skew is not None else 0.0,
        "turns_applied": decision.turns if decision is not None else 0,
        "pixel_ratio_0": decision.pixel_ratio_0
        if decision is not None else 0.0,
        "pixel_ratio_90": decision.pixel_ratio_90
        if decision is not None else 0.0,
        "flags": list(outcome.flags),
    }
    _write_json(out / "report.json", report)
    _write_manifest(out, args.input, cfg.snapshot(),
                    {"orient": elapsed_ms}, outcome.flags)

    print(f"skew {report['skew_degrees']:+.2f} deg, "
          f"{report['turns_applied']} quarter turns -> {out / 'corrected.png'}")
    if outcome.flags:
        print(f"flags: {', '.join(outcome.flags)}", file=sys.stderr)
        return 2
    return 0


# --------------------------------------------------------------------------
# synth

def cmd_synth(args: argparse.Namespace) -> int:
    spec_path = Path(args.specs)
    try:
        data = json.loads(spec_path.read_text())
    except OSError as exc:
        print(f"cannot read {spec_path}: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"invalid JSON in {spec_path}: {exc}", file=sys.stderr)
        return 1
    if not isinstance(data, list):
        print(f"{spec_path} must hold a JSON array of page specs",
              file=sys.stderr)
        return 1

    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            print(f"spec {i}: must be a JSON object", file=sys.stderr)
            return 1
        if "seed" not in entry and args.seed is not None:
            entry = {**entry, "seed": args.seed + i}
        try:
            spec = PageSpec.from_dict(entry)
            page, truth = synth_page(spec)
        except (ValueError, TypeError, LayoutError) as exc:
            print(f"spec {i}: {exc}", file=sys.stderr)
            return 1
        save_page(page, out / f"page_{i:03d}.png")
        _write_json(out / f"truth_{i:03d}.json", truth.to_dict())
        if args.verbose:
            print(f"  page_{i:03d}.png ({spec.width}x{spec.height})",
                  file=sys.stderr)
    print(f"wrote {2 * len(data)} files to {out}")
    return 0


# --------------------------------------------------------------------------
# eval

def _truth_path_for(page_path: Path) -> Path | None:
    stem = page_path.stem
    candidates = [page_path.with_suffix(".json")]
    if stem.startswith("page"):
        candidates.insert(0, page_path.with_name("truth" + stem[4:] + ".json"))
    for cand in candidates:
        if cand.exists():
            return cand
    return None


def _eval_one(page_path: Path, truth_path: Path, cfg: DecompositionConfig,
              iou_min: float, orient: bool) -> dict[str, Any]:
    """Score one page/truth pair; any failure becomes an 'error' entry."""
    entry: dict[str, Any] = {"page": page_path.name}
    try:
        page = load_page(page_path)
        truth = GroundTruth.from_dict(json.loads(truth_path.read_text()))
        result = run_pipeline(page, cfg, orient=orient)
        mapped = map_to_upright(result.regions, result.page.shape, truth)
        report = match_regions(mapped, truth, iou_min)
    except Exception as exc:  # a bad page must not abort the corpus
        entry["error"] = f"{type(exc).__name__}: {exc}"
        return entry
    entry["counts"] = report.counts
    if orient and result.orientation is not None:
        est = result.orientation.skew
        if est is not None:
            entry["skew_error"] = abs(est.angle + truth.skew)
        decision = result.orientation.decision
        found = decision.turns if decision is not None else 0
        entry["turns_correct"] = found == (4 - truth.turns) % 4
    return entry


def format_report_table(precision: dict[str, float], recall: dict[str, float],
                        accuracy: dict[str, float]) -> str:
    """Fixed-width metric table, classes as columns."""
    head = f"{'':12}" + "".join(f"{name:>15}" for _, name in _CLASS_COLUMNS)
    lines = [head]
    for metric_name, metric in (("precision", precision),
                                ("recall", recall),
                                ("accuracy", accuracy)):
        row = f"{metric_name:12}"
        for label, _ in _CLASS_COLUMNS:
            row += f"{metric.get(label.value, float('nan')):>15.3f}"
        lines.append(row)
    return "\n".join(lines)


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if not (0 < args.iou_min <= 1):
        raise ValueError(f"--iou-min must be in (0,1], got {args.iou_min}")
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        print(f"not a directory: {corpus}", file=sys.stderr)
        return 1
    pages = sorted(p for p in corpus.iterdir()
                   if p.suffix.lower() in _PAGE_SUFFIXES)
    if not pages:
        print("no pages found", file=sys.stderr)
        return 1

    pairs = []
    skipped = []
    for page_path in pages:
        truth_path = _truth_path_for(page_path)
        if truth_path is None:
            skipped.append(page_path.name)
            print(f"warning: no truth for {page_path.name}, skipped",
                  file=sys.stderr)
        else:
            pairs.append((page_path, truth_path))

    t0 = time.perf_counter()
    orient = not args.no_orient
    with ThreadPoolExecutor() as pool:
        entries = list(pool.map(
            lambda pair: _eval_one(pair[0], pair[1], cfg,
                                   args.iou_min, orient), pairs))
    elapsed_ms = (time.perf_counter() - t0) * 1000

    counts = {label.value: {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
              for label, _ in _CLASS_COLUMNS}
    skew_errors = []
    turns_flags = []
    errors = 0
    for entry in entries:
        if args.verbose:
            print(f"  {entry['page']}: "
                  f"{entry.get('error', 'ok')}", file=sys.stderr)
        if "error" in entry:
            errors += 1
            continue
        for label, c in entry["counts"].items():
            for key in ("tp", "fp", "fn", "tn"):
                counts[label][key] += c[key]
        if "skew_error" in entry:
            skew_errors.append(entry["skew_error"])
        if "turns_correct" in entry:
            turns_flags.append(entry["turns_correct"])

    precision, recall, accuracy = {}, {}, {}
    for label, c in counts.items():
        tp, fp, fn, tn = c["tp"], c["fp"], c["fn"], c["tn"]
        precision[label] = 1.0 if tp + fp == 0 else tp / (tp + fp)
        recall[label] = 1.0 if tp + fn == 0 else tp / (tp + fn)
        total = tp + fp + fn + tn
        accuracy[label] = 1.0 if total == 0 else (tp + tn) / total

    report = {
        "pages": entries,
        "skipped": skipped,
        "aggregate": {"counts": counts, "precision": precision,
                      "recall": recall, "accuracy": accuracy},
        "skew_error_mean": float(np.mean(skew_errors)) if skew_errors else None,
        "skew_error_max": float(np.max(skew_errors)) if skew_errors else None,
        "rotation_accuracy": (sum(turns_flags) / len(turns_flags)
                              if turns_flags else None),
        "pages_evaluated": len(entries) - errors,
        "pages_failed": errors,
    }
    out = Path(args.out) if args.out else corpus
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "report.json", report)
    _write_manifest(out, str(corpus), cfg.snapshot(),
                    {"total": elapsed_ms})

    print(format_report_table(precision, recall, accuracy))
    if report["skew_error_mean"] is not None:
        print(f"skew error: mean {report['skew_error_mean']:.3f} deg, "
              f"max {report['skew_error_max']:.3f} deg")
    if report["rotation_accuracy"] is not None:
        print(f"rotation accuracy: {report['rotation_accuracy']:.3f}")
    print(f"report -> {out / 'report.json'}")
    return 0


# --------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pagedecomp",
                     description="Decompose scanned page images into "
                                 "labeled regions")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def add_shared(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="config file (JSON); "
                       "$DECOMPOSE_CONFIG is the fallback")
        p.add_argument("--opt", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override one config field (repeatable)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("decompose", help="split a page into labeled regions")
    p.add_argument("input", help="page image (PNG or PGM)")
    add_shared(p)
    p.add_argument("--no-orient", action="store_true",
                   help="skip skew/rotation correction")
    p.add_argument("--save-crops", action="store_true",
                   help="write one cropped image per region")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("deskew", help="correct skew and rotation only")
    p.add_argument("input", help="page image (PNG or PGM)")
    add_shared(p)
    p.set_defaults(func=cmd_deskew)

    p = sub.add_parser("synth", help="render synthetic pages with truth")
    p.add_argument("specs", help="JSON array of page specs")
    add_shared(p)
    p.add_argument("--seed", type=int, default=None,
                   help="base seed for specs without one (base + index)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score a corpus of page/truth pairs")
    p.add_argument("corpus", help="directory of page_NNN.png + truth_NNN.json")
    add_shared(p)
    p.add_argument("--no-orient", action="store_true",
                   help="skip skew/rotation correction")
    p.add_argument("--iou-min", type=float, default=0.5,
                   help="IoU threshold for region matching (default 0.5)")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PageLoadError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
