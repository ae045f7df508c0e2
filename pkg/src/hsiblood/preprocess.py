"""Cube preparation: band removal, median normalization, panel correction,
wavelength resampling and class-mean spectra.

The detector-ready pipeline order is
``decode -> reflectance_correct (optional) -> remove_bands -> median_normalize``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import AnnotationMask, HyperCube, Spectrum
from .errors import (
    AllBandsRemoved,
    AxisMismatch,
    ConfigError,
    EmptyClass,
    EmptySource,
    ExtrapolationWarning,
    IndexOutOfRange,
    NonPositiveMedianWarning,
    ShapeMismatch,
    ZeroMedianPanel,
)

# noisy bands of the 128-band camera; removing them leaves 113
CAMERA_BAND_MASK = "0-4,48-50,121-127"


@dataclass(frozen=True)
class BandMask:
    removed: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "BandMask":
        """Parse ``"0-4,48-50,121-127"``-style inclusive ranges and singletons."""
        text = (text or "").strip()
        if text.lower() in ("", "none"):
            return cls(())
        removed = set()
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            try:
                if "-" in part:
                    lo, hi = (int(p) for p in part.split("-", 1))
                    if hi < lo:
                        raise ConfigError(f"reversed band range {part!r}")
                    removed.update(range(lo, hi + 1))
                else:
                    removed.add(int(part))
            except ValueError:
                raise ConfigError(f"bad band mask element {part!r}") from None
        return cls(tuple(sorted(removed)))

    def format(self) -> str:
        if not self.removed:
            return "none"
        runs, start, prev = [], self.removed[0], self.removed[0]
        for i in self.removed[1:] + (None,):
            if i is not None and i == prev + 1:
                prev = i
                continue
            runs.append(f"{start}" if start == prev else f"{start}-{prev}")
            if i is not None:
                start = prev = i
        return ",".join(runs)

    def keep(self, bands: int) -> np.ndarray:
        removed = np.asarray(self.removed, dtype=np.int64)
        if removed.size and (removed.min() < 0 or removed.max() >= bands):
            raise IndexOutOfRange(f"band mask {self.format()} invalid for {bands} bands")
        keep = np.ones(bands, dtype=bool)
        keep[removed] = False
        if not keep.any():
            raise AllBandsRemoved(f"mask removes all {bands} bands")
        return keep


def remove_bands(cube: HyperCube, mask: BandMask) -> HyperCube:
    keep = mask.keep(cube.bands)
    return HyperCube(cube.data[:, :, keep], cube.wavelengths[keep], dict(cube.meta))


def median_normalize(cube: HyperCube, return_flags: bool = False):
    """Divide every pixel by its median across bands.

    Pixels whose median is not strictly positive are left untouched, flagged,
    and reported with a :class:`NonPositiveMedianWarning`.
    """
    med = np.median(cube.data, axis=2)
    bad = ~(med > 0)
    safe = np.where(bad, 1.0, med)
    out = cube.data / safe[:, :, None]
    if bad.any():
        warnings.warn(
            f"{int(bad.sum())} pixel(s) with non-positive median left unnormalized",
            NonPositiveMedianWarning,
            stacklevel=2,
        )
    result = HyperCube(out, cube.wavelengths.copy(), dict(cube.meta))
    if return_flags:
        return result, bad
    return result


def reflectance_correct(p: Spectrum, g_p: Spectrum, h: Spectrum) -> Spectrum:
    """Remove the position-dependent camera artefact using a grey-panel pixel.

    ``p' = p - (g_p - h) * median(p) / median(g_p)``
    """
    if not (p.same_axis(g_p) and p.same_axis(h)):
        raise AxisMismatch("p, g_p and h must share one wavelength axis")
    delta_g = np.median(g_p.values)
    if not delta_g > 0:
        raise ZeroMedianPanel(f"panel median {delta_g} is not positive")
    delta_p = np.median(p.values)
    return Spectrum(p.values - (g_p.values - h.values) * (delta_p / delta_g), p.wavelengths.copy())


def reflectance_correct_cube(cube: HyperCube, panel: HyperCube, reference: Spectrum) -> HyperCube:
    """Apply :func:`reflectance_correct` to every pixel of ``cube``.

    ``panel`` is a grey-panel image with the same geometry; the panel pixel at
    the same (line, sample) supplies the artefact estimate.
    """
    if panel.shape != cube.shape:
        raise ShapeMismatch(f"panel shape {panel.shape} != cube shape {cube.shape}")
    if not (np.array_equal(cube.wavelengths, panel.wavelengths)
            and np.array_equal(cube.wavelengths, reference.wavelengths)):
        raise AxisMismatch("cube, panel and reference must share one wavelength axis")
    delta_g = np.median(panel.data, axis=2)
    if not np.all(delta_g > 0):
        raise ZeroMedianPanel("panel has pixels with non-positive median")
    delta_p = np.median(cube.data, axis=2)
    artefact = panel.data - reference.values[None, None, :]
    out = cube.data - artefact * (delta_p / delta_g)[:, :, None]
    return HyperCube(out, cube.wavelengths.copy(), dict(cube.meta))


def resample_spectrum(s: Spectrum, target_wavelengths):
    """Linearly interpolate ``s`` onto a new wavelength axis.

    Targets outside the source range take the nearest endpoint value. Returns
    ``(spectrum, outside)`` where ``outside`` flags the clamped targets.
    """
    if len(s) == 0:
        raise EmptySource("cannot resample an empty spectrum")
    target = np.asarray(target_wavelengths, dtype=np.float64)
    if target.ndim != 1 or (target.size > 1 and np.any(np.diff(target) <= 0)):
        raise AxisMismatch("target wavelengths must be a strictly increasing vector")
    values = np.interp(target, s.wavelengths, s.values)
    outside = (target < s.wavelengths[0]) | (target > s.wavelengths[-1])
    if outside.any():
        warnings.warn(
            f"{int(outside.sum())} target wavelength(s) outside "
            f"[{s.wavelengths[0]:g}, {s.wavelengths[-1]:g}] nm clamped",
            ExtrapolationWarning,
            stacklevel=2,
        )
    return Spectrum(values, target), outside


def class_pixels(cube: HyperCube, mask: AnnotationMask, class_id: int) -> np.ndarray:
    if mask.shape != cube.shape[:2]:
        raise ShapeMismatch(f"mask shape {mask.shape} != cube shape {cube.shape[:2]}")
    return cube.data[mask.labels == class_id]


def mean_spectrum(cube: HyperCube, mask: AnnotationMask, class_id: int) -> Spectrum:
    pixels = class_pixels(cube, mask, class_id)
    if pixels.shape[0] == 0:
        raise EmptyClass(f"class {class_id} has no pixels")
    return Spectrum(pixels.mean(axis=0), cube.wavelengths.copy())


def prepare(cube: HyperCube, band_mask: BandMask | None = None, normalize: bool = True) -> HyperCube:
    """Band removal followed by median normalization."""
    if band_mask is not None:
        cube = remove_bands(cube, band_mask)
    if normalize:
        cube = median_normalize(cube)
    return cube


def default_band_mask(bands: int) -> BandMask:
    """Noisy-band mask for 128-band cubes, nothing otherwise."""
    return BandMask.parse(CAMERA_BAND_MASK) if bands == 128 else BandMask()
