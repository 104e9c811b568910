"""End-to-end acceptance gates for the whole package.

One test per criterion; each prints a summary line so a verbose run
reads as a checklist.  Corpora are seeded and deterministic.
"""

import time

import numpy as np

from oracles import blur_direct, flood_boxes, smear_naive
from pagedecomp.classify import ElementLabel, label_text_block
from pagedecomp.config import DecompositionConfig
from pagedecomp.edge import canny, gaussian_blur, hysteresis
from pagedecomp.harness import (
    GroundTruth,
    PageSpec,
    match_regions,
    run_corpus,
    synth_page,
)
from pagedecomp.orient import auto_orient, skew_angle
from pagedecomp.raster import rotate_by_angle, rotate_quarter, save_page
from pagedecomp.segment import connected_black_boxes
from pagedecomp.smear import smear

CFG = DecompositionConfig()


# --------------------------------------------------------------- criterion 1

def test_c1_deskew_accuracy_70_pages():
    rng = np.random.default_rng(20260819)
    specs = []
    for i in range(70):
        skew = float(rng.uniform(-10.0, 10.0))
        specs.append(PageSpec(
            seed=1000 + i,
            width=1000, height=1000,
            column_count=int(rng.integers(2, 4)),
            body_line_height=int(rng.integers(16, 25)),
            skew=round(skew, 2),
            turns=0,
            headline_present=bool(rng.random() < 0.5),
            subheadline_present=bool(rng.random() < 0.5),
            noise_density=0.0005,
        ))
    t0 = time.time()
    rep = run_corpus(specs, CFG, workers=8)
    dt = time.time() - t0
    errs = [e for e in rep.skew_errors if e is not None]
    within = sum(1 for e in errs if e <= 0.3)
    print(f"c1: {within}/70 pages within 0.3 deg "
          f"(mean {np.mean(errs):.3f}, max {np.max(errs):.3f}) in {dt:.1f}s")
    assert rep.failure_count == 0
    assert len(errs) == 70
    assert within >= 69
    assert dt < 60.0


# --------------------------------------------------------------- criterion 2

def test_c2_skew_and_rotation_70_pages():
    rng = np.random.default_rng(7042)
    specs = []
    for i in range(70):
        top_image = (i % 3 == 0)
        specs.append(PageSpec(
            seed=2000 + i,
            width=1000, height=1000,
            column_count=int(rng.integers(2, 4)),
            body_line_height=int(rng.integers(16, 25)),
            skew=round(float(rng.uniform(-10.0, 10.0)), 2),
            turns=int(rng.integers(0, 4)),
            headline_present=bool(rng.random() < 0.5),
            subheadline_present=bool(rng.random() < 0.5),
            image_blocks=((0.10, 0.04, 0.90, 0.34),) if top_image else (),
            noise_density=0.0005,
        ))
    t0 = time.time()
    rep = run_corpus(specs, CFG, workers=8)
    dt = time.time() - t0
    full = sum(
        1 for pg in rep.pages
        if pg.error is None and pg.turns_correct is True
        and pg.skew_error is not None and pg.skew_error <= 0.3)
    print(f"c2: {full}/70 pages fully corrected in {dt:.1f}s")
    assert full >= 68


# --------------------------------------------------------------- criterion 3

_IMAGE_SPOTS = [
    (0.55, 0.45, 0.90, 0.68),
    (0.08, 0.66, 0.44, 0.90),
    (0.30, 0.40, 0.70, 0.62),
    (0.58, 0.70, 0.92, 0.92),
    (0.08, 0.38, 0.40, 0.58),
]

_CLASS_ORDER = (("image", "Images"), ("headline", "Headlines"),
                ("subheadline", "Sub-headlines"), ("column", "Columns"))


def test_c3_per_class_precision_recall_50_pages():
    rng = np.random.default_rng(31415)
    specs = []
    for i in range(50):
        n_img = int(rng.integers(0, 3))
        picks = rng.choice(len(_IMAGE_SPOTS), size=n_img, replace=False)
        blocks: list[tuple[float, float, float, float]] = []
        for p in picks:
            cand = _IMAGE_SPOTS[p]
            if all(cand[2] < b[0] or b[2] < cand[0]
                   or cand[3] < b[1] or b[3] < cand[1] for b in blocks):
                blocks.append(cand)
        specs.append(PageSpec(
            seed=3000 + i,
            width=1000, height=1200,
            column_count=int(rng.integers(2, 4)),
            body_line_height=int(rng.integers(16, 25)),
            skew=0.0, turns=0,
            headline_present=bool(rng.random() < 0.7),
            subheadline_present=bool(rng.random() < 0.5),
            image_blocks=tuple(blocks),
            noise_density=0.0005,
        ))
    rep = run_corpus(specs, CFG, workers=8)
    agg = rep.aggregate
    for label, shown in _CLASS_ORDER:
        print(f"c3: {shown:13s} precision={agg.precision[label]:.3f} "
              f"recall={agg.recall[label]:.3f}")
    assert rep.failure_count == 0
    for label, _ in _CLASS_ORDER:
        assert agg.precision[label] >= 0.90, label
        assert agg.recall[label] >= 0.90, label


# --------------------------------------------------------------- criterion 4

def test_c4_oracle_equivalences():
    rng = np.random.default_rng(404)
    for trial in range(1000):
        h = int(rng.integers(1, 33))
        w = int(rng.integers(1, 33))
        mask = rng.random((h, w)) < float(rng.uniform(0.1, 0.5))
        min_area = int(rng.integers(1, 7))
        got = [(b.box.x0, b.box.y0, b.box.x1, b.box.y1, b.black_pixel_count)
               for b in connected_black_boxes(mask, min_area)]
        assert got == flood_boxes(mask, min_area), trial

    rng = np.random.default_rng(405)
    for trial in range(1000):
        h = int(rng.integers(1, 17))
        w = int(rng.integers(1, 17))
        mask = rng.random((h, w)) < float(rng.uniform(0.15, 0.5))
        h_t = int(rng.integers(1, 7))
        v_t = int(rng.integers(1, 7))
        f_t = int(rng.integers(1, 5))
        assert np.array_equal(smear(mask, h_t, v_t, f_t),
                              smear_naive(mask, h_t, v_t, f_t)), trial

    rng = np.random.default_rng(406)
    for trial in range(200):
        img = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
        fast = gaussian_blur(img, sigma=1.4)
        slow = blur_direct(img, sigma=1.4, radius=3)
        assert np.abs(fast - slow).max() <= 1.0, trial

    print("c4: 1000 component maps, 1000 smear maps, 200 blurs "
          "match their oracles")


# --------------------------------------------------------------- criterion 5

def test_c5_smear_idempotent_superset():
    rng = np.random.default_rng(501)
    for trial in range(100):
        mask = rng.random((int(rng.integers(2, 20)),
                           int(rng.integers(2, 20)))) < 0.3
        h_t, v_t, f_t = (int(rng.integers(1, 6)) for _ in range(3))
        out = smear(mask, h_t, v_t, f_t)
        assert np.all(out >= mask), trial
        assert np.array_equal(smear(out, h_t, v_t, f_t), out), trial
    print("c5: smear superset + idempotence, 100 cases")


def test_c5_canny_thinness():
    offsets = ((1, 0), (1, 1), (0, 1), (-1, 1))
    rng = np.random.default_rng(502)
    from pagedecomp.edge import quantize_direction, sobel
    for trial in range(100):
        img = (rng.random((20, 20)) < 0.25).astype(np.uint8) * 255
        edges = canny(img)
        grad = sobel(gaussian_blur(img))
        direction = quantize_direction(grad.gx, grad.gy)
        h, w = edges.shape
        for y, x in np.argwhere(edges):
            dx, dy = offsets[direction[y, x]]
            fy, fx, by, bx = y + dy, x + dx, y - dy, x - dx
            fwd = bool(edges[fy, fx]) if 0 <= fy < h and 0 <= fx < w else False
            bwd = bool(edges[by, bx]) if 0 <= by < h and 0 <= bx < w else False
            assert not (fwd and bwd), (trial, y, x)
    print("c5: canny thinness along gradient, 100 cases")


def test_c5_hysteresis_soundness():
    rng = np.random.default_rng(503)
    for trial in range(100):
        weak = rng.random((14, 14)) < 0.35
        strong = weak & (rng.random((14, 14)) < 0.3)
        out = hysteresis(strong, weak)
        assert np.all(out >= strong), trial
        assert np.all(out <= (strong | weak)), trial
        # every kept pixel reaches a strong seed through kept pixels
        seen = np.zeros_like(out)
        stack = list(map(tuple, np.argwhere(strong)))
        for y, x in stack:
            seen[y, x] = True
        while stack:
            y, x = stack.pop()
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    ny, nx = y + dy, x + dx
                    if (0 <= ny < 14 and 0 <= nx < 14 and out[ny, nx]
                            and not seen[ny, nx]):
                        seen[ny, nx] = True
                        stack.append((ny, nx))
        assert np.array_equal(seen, out), trial
    print("c5: hysteresis soundness, 100 cases")


def test_c5_canny_empty_on_uniform():
    rng = np.random.default_rng(504)
    for trial in range(100):
        h = int(rng.integers(8, 40))
        w = int(rng.integers(8, 40))
        value = int(rng.integers(0, 256))
        assert not canny(np.full((h, w), value, dtype=np.uint8)).any(), trial
    print("c5: canny empty on uniform, 100 cases")


def test_c5_canny_threshold_monotone():
    rng = np.random.default_rng(505)
    for trial in range(100):
        img = (rng.random((24, 24)) < 0.25).astype(np.uint8) * 255
        lows = sorted(float(x) for x in rng.uniform(10, 140, size=2))
        wide = canny(img, low=lows[0], high=150.0)
        narrow = canny(img, low=lows[1], high=150.0)
        assert np.all(narrow <= wide), trial
        highs = sorted(float(x) for x in rng.uniform(60, 250, size=2))
        lo = min(50.0, highs[0] - 1.0)
        assert np.all(canny(img, low=lo, high=highs[1])
                      <= canny(img, low=lo, high=highs[0])), trial
    print("c5: canny threshold monotonicity, 100 cases")


def test_c5_rotate_quarter_fourth_power():
    rng = np.random.default_rng(506)
    for trial in range(100):
        img = rng.integers(0, 256, size=(int(rng.integers(1, 30)),
                                         int(rng.integers(1, 30))),
                           dtype=np.uint8)
        out = img
        for _ in range(4):
            out = rotate_quarter(out, 1)
        assert np.array_equal(out, img), trial
    print("c5: rotate_quarter^4 identity, 100 cases")


def test_c5_auto_orient_idempotent():
    rng = np.random.default_rng(507)
    for trial in range(100):
        spec = PageSpec(
            width=450, height=450,
            seed=5000 + trial,
            body_line_height=int(rng.integers(14, 22)),
            column_count=1,
            headline_present=bool(rng.random() < 0.5),
        )
        page, _ = synth_page(spec)
        shown = rotate_by_angle(page, float(rng.uniform(-8.0, 8.0)))
        shown = rotate_quarter(shown, int(rng.integers(0, 4)))
        once = auto_orient(shown, CFG)
        assert once.flags == (), trial
        twice = auto_orient(once.page, CFG)
        assert twice.flags == (), trial
        assert twice.decision.turns == 0, trial
        assert abs(twice.skew.angle) <= 0.3, trial
    print("c5: auto_orient idempotence, 100 cases")


def test_c5_label_zero_difference_is_column():
    from pagedecomp.classify import LineMetrics
    rng = np.random.default_rng(508)
    for trial in range(100):
        h = int(rng.integers(4, 80))
        metrics = [LineMetrics(band_top=0, band_bottom=h - 1, line_height=h,
                               matra_row=0, matra_index=0, matra_black=1)]
        assert label_text_block(metrics, h, CFG) is ElementLabel.COLUMN, trial
    print("c5: label_text_block column at zero difference, 100 cases")


def test_c5_match_regions_count_identities():
    from pagedecomp.classify import Region
    from pagedecomp.raster import BBox
    labels = list(ElementLabel)
    rng = np.random.default_rng(509)
    for trial in range(100):
        truths = []
        for _ in range(int(rng.integers(0, 6))):
            x0, y0 = int(rng.integers(0, 150)), int(rng.integers(0, 150))
            truths.append((BBox(x0, y0, x0 + int(rng.integers(5, 60)),
                                y0 + int(rng.integers(5, 60))),
                           labels[int(rng.integers(0, 4))]))
        preds = []
        for _ in range(int(rng.integers(0, 6))):
            x0, y0 = int(rng.integers(0, 150)), int(rng.integers(0, 150))
            preds.append(Region(
                box=BBox(x0, y0, x0 + int(rng.integers(5, 60)),
                         y0 + int(rng.integers(5, 60))),
                label=labels[int(rng.integers(0, 4))]))
        truth = GroundTruth(regions=tuple(truths), skew=0.0, turns=0,
                            width=256, height=256)
        report = match_regions(preds, truth)
        matched = 0
        for label in labels:
            c = report.counts[label.value]
            n_t = sum(1 for _, l in truths if l is label)
            n_p = sum(1 for r in preds if r.label is label)
            assert c["tp"] + c["fn"] == n_t, trial
            assert c["tp"] + c["fp"] == n_p, trial
            assert 0 <= c["tn"] <= len(truths) - n_t, trial
            matched += c["tp"]
        assert len(report.matches) == matched, trial
    print("c5: match_regions count identities, 100 cases")


# --------------------------------------------------------------- criterion 6

def test_c6_determinism(tmp_path):
    from pagedecomp.cli import main

    spec = PageSpec(width=700, height=800, seed=90, column_count=2,
                    headline_present=True)
    page, _ = synth_page(spec)
    path = tmp_path / "page.png"
    save_page(page, path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["decompose", str(path), "--out", str(out_a)]) == 0
    assert main(["decompose", str(path), "--out", str(out_b)]) == 0
    bytes_a = (out_a / "regions.json").read_bytes()
    assert bytes_a == (out_b / "regions.json").read_bytes()

    specs = [PageSpec(width=600, height=700, seed=91 + i) for i in range(6)]
    seq = run_corpus(specs, CFG, workers=1)
    par = run_corpus(specs, CFG, workers=4)
    assert seq.aggregate.counts == par.aggregate.counts
    assert seq.skew_errors == par.skew_errors
    assert seq.rotation_accuracy == par.rotation_accuracy
    print("c6: byte-identical decompose reruns; worker-count independent "
          "corpus aggregates")
