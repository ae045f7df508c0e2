"""Roster of the public blood dataset and helpers to locate its files.

The dataset itself is not bundled. ``find_image`` understands two layouts::

    <root>/data/F_1.hdr  + <root>/anno/F_1.npz   (published archive)
    <root>/F_1.hdr       + <root>/F_1_mask.csv   (flat export)
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .cube_io import read_annotation, read_envi
from .detect import LabeledImage
from .errors import ConfigError
from .preprocess import BandMask, default_band_mask, prepare


@dataclass(frozen=True)
class ImageInfo:
    code: str
    target_source: str
    library_index: int


# code, image used as inductive source, library entry of similar age
ROSTER = (
    ImageInfo("F(1)", "F(1a)", 24),
    ImageInfo("F(1s)", "F(1a)", 21),
    ImageInfo("F(1a)", "F(1)", 20),
    ImageInfo("F(2)", "F(1a)", 15),
    ImageInfo("F(2k)", "F(2)", 15),
    ImageInfo("F(7)", "F(2)", 12),
    ImageInfo("F(21)", "F(7)", 5),
    ImageInfo("D(1)", "F(1)", 22),
    ImageInfo("A(1)", "F(1)", 21),
    ImageInfo("B(1)", "F(1s)", 20),
    ImageInfo("C(1)", "F(1)", 21),
    ImageInfo("E(1)", "F(1a)", 20),
    ImageInfo("E(7)", "F(7)", 12),
    ImageInfo("E(21)", "F(21)", 5),
)
BY_CODE = {info.code: info for info in ROSTER}

# published AUC(PR): ideal MF, inductive MF, library MF, two-stage (N=1000)
TABLE3 = {
    "F(1)": (1.00, 0.41, 0.39, 0.47),
    "F(1s)": (1.00, 0.92, 0.46, 0.73),
    "F(1a)": (1.00, 0.17, 0.24, 0.41),
    "F(2)": (0.99, 0.61, 0.37, 0.72),
    "F(2k)": (1.00, 0.33, 0.41, 0.33),
    "F(7)": (1.00, 0.98, 0.50, 0.83),
    "F(21)": (1.00, 0.98, 0.37, 0.59),
    "D(1)": (0.98, 0.36, 0.28, 0.38),
    "A(1)": (0.98, 0.61, 0.30, 0.24),
    "B(1)": (0.95, 0.31, 0.24, 0.33),
    "C(1)": (0.96, 0.33, 0.34, 0.34),
    "E(1)": (0.73, 0.46, 0.46, 0.71),
    "E(7)": (0.62, 0.26, 0.32, 0.51),
    "E(21)": (0.59, 0.33, 0.29, 0.42),
}
TABLE3_COLUMNS = ("Code", "Ideal MF", "Inductive MF", "MF_lib", "Algorithm 1")

# two-stage AUC(PR) for N = 750, 1000, 10%, 20% of the blood class
TABLE5 = {
    "E(1)": (0.72, 0.71, 0.72, 0.72),
    "F(7)": (0.80, 0.83, 0.90, 0.93),
}
TABLE5_N = ("750", "1000", "10%", "20%")


def file_stem(code: str) -> str:
    """``"F(1s)"`` -> ``"F_1s"``."""
    return code.replace("(", "_").replace(")", "")


def find_image(root, code: str) -> tuple:
    root = Path(root)
    stem = file_stem(code)
    candidates = [
        (root / "data" / f"{stem}.hdr", [root / "anno" / f"{stem}.npz", root / "anno" / f"{stem}.csv"]),
        (root / f"{stem}.hdr", [root / f"{stem}_mask.csv", root / f"{stem}_mask.npz", root / f"{stem}.npz"]),
    ]
    for hdr, masks in candidates:
        if hdr.is_file():
            for mask in masks:
                if mask.is_file():
                    return hdr, mask
    raise ConfigError(f"image {code} not found under {root}")


def load_image(root, code: str, band_mask: BandMask | None = None, normalize: bool = True) -> LabeledImage:
    hdr, mask_path = find_image(root, code)
    cube = read_envi(hdr)
    mask = read_annotation(mask_path, cube.shape[:2])
    cube = prepare(cube, default_band_mask(cube.bands) if band_mask is None else band_mask, normalize)
    return LabeledImage(cube, mask, code)
