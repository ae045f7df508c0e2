"""File outputs: curve CSVs, SVG plots, palette PNG maps, score-map files."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from PIL import Image  # noqa: E402

from .core import HyperCube  # noqa: E402
from .cube_io import read_envi, write_envi  # noqa: E402
from .errors import ShapeMismatch  # noqa: E402
from .evaluate import Curve  # noqa: E402

# fixed salt keeps SVG element ids, and therefore bytes, reproducible
matplotlib.rcParams["svg.hashsalt"] = "hsiblood"

COMPARE_PALETTE = {
    0: (0, 0, 0),
    1: (0xFF, 0x00, 0x00),  # red: A1 TP
    2: (0xFF, 0xA5, 0x00),  # orange: A1 FN, ideal TP
    3: (0x00, 0x00, 0xFF),  # blue: both FN
    4: (0x80, 0x80, 0x80),  # grey: A1 FP
    5: (0x00, 0x80, 0x00),  # green: ideal FP, A1 TN
}
OUTCOME_PALETTE = {
    0: (0, 0, 0),  # excluded
    1: (0xFF, 0x00, 0x00),  # TP
    2: (0x80, 0x80, 0x80),  # FP
    3: (0x00, 0x00, 0xFF),  # FN
    4: (0xFF, 0xFF, 0xFF),  # TN
}


def write_curve_csv(path, curve: Curve) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "x", "y"])
        for t, x, y in zip(curve.thresholds, curve.x, curve.y):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(y))])


def read_curve_csv(path, kind: str = "") -> Curve:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([float(r["threshold"]) for r in rows])
    x = np.array([float(r["x"]) for r in rows])
    y = np.array([float(r["y"]) for r in rows])
    if kind == "roc":
        auc = float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2))
    else:
        auc = float(np.sum(np.diff(x) * y[1:]))
    return Curve(x, y, t, auc, kind)


def plot_curves_svg(path, curves: dict, kind: str) -> None:
    """One SVG with a line per labelled curve."""
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    for label, curve in curves.items():
        if kind == "pr":
            ax.step(curve.x, curve.y, where="post", label=f"{label} (AUC={curve.auc:.2f})")
        else:
            ax.plot(curve.x, curve.y, label=f"{label} (AUC={curve.auc:.2f})")
    if kind == "pr":
        ax.set_xlabel("Recall")
        ax.set_ylabel("Precision")
    else:
        ax.set_xlabel("False positive rate")
        ax.set_ylabel("True positive rate")
        ax.plot([0, 1], [0, 1], color="0.7", lw=0.8, ls="--")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(loc="lower left" if kind == "pr" else "lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_palette_png(path, codes: np.ndarray, palette: dict) -> None:
    codes = np.asarray(codes, dtype=np.uint8)
    if codes.ndim != 2:
        raise ShapeMismatch("code map must be 2-D")
    img = Image.fromarray(codes, mode="P")
    flat = []
    for i in range(256):
        flat.extend(palette.get(i, (0, 0, 0)))
    img.putpalette(flat)
    img.save(path, format="PNG", optimize=False)


def write_score_map(header_path, scores: np.ndarray, description: str = "") -> Path:
    """Persist a score map as float32 ENVI (1 band) so runs compose."""
    cube = HyperCube(np.asarray(scores, dtype=np.float64)[:, :, None], np.array([0.0]))
    extra = {"description": "{" + description + "}"} if description else None
    return write_envi(header_path, cube, "bsq", 4, 0, extra)


def read_score_map(header_path) -> np.ndarray:
    return read_envi(header_path).data[:, :, 0]
