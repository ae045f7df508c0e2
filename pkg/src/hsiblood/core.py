"""Array containers shared by every stage of the pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AxisMismatch, DataError, NonMonotoneWavelengths, ShapeMismatch

# label ids used by the published annotations
CLASS_NAMES = {
    0: "background",
    1: "blood",
    2: "ketchup",
    3: "artificial blood",
    4: "beetroot juice",
    5: "poster paint",
    6: "tomato concentrate",
    7: "acrylic paint",
    8: "uncertain blood",
}
BLOOD = 1
UNCERTAIN_BLOOD = 8


def _check_axis(wavelengths: np.ndarray) -> None:
    if wavelengths.ndim != 1:
        raise AxisMismatch("wavelength axis must be one-dimensional")
    if wavelengths.size > 1 and not np.all(np.diff(wavelengths) > 0):
        raise NonMonotoneWavelengths("wavelengths must be strictly increasing")


@dataclass(eq=False)
class Spectrum:
    """A single reflectance vector sampled on a wavelength axis (nm)."""

    values: np.ndarray
    wavelengths: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.wavelengths = np.asarray(self.wavelengths, dtype=np.float64)
        if self.values.shape != self.wavelengths.shape:
            raise AxisMismatch(
                f"{self.values.shape[0] if self.values.ndim else 0} values vs "
                f"{self.wavelengths.size} wavelengths"
            )
        _check_axis(self.wavelengths)
        if not np.all(np.isfinite(self.values)):
            raise DataError("spectrum contains non-finite values")

    def __len__(self) -> int:
        return self.values.size

    def same_axis(self, other: "Spectrum") -> bool:
        return self.wavelengths.shape == other.wavelengths.shape and bool(
            np.all(self.wavelengths == other.wavelengths)
        )


@dataclass(eq=False)
class HyperCube:
    """Reflectance cube indexed ``(line, sample, band)``."""

    data: np.ndarray
    wavelengths: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ShapeMismatch(f"cube must be 3-D, got shape {self.data.shape}")
        if self.wavelengths is None:
            self.wavelengths = np.arange(self.bands, dtype=np.float64)
        self.wavelengths = np.asarray(self.wavelengths, dtype=np.float64)
        if self.wavelengths.shape != (self.bands,):
            raise AxisMismatch(
                f"{self.wavelengths.size} wavelengths for {self.bands} bands"
            )
        _check_axis(self.wavelengths)

    @property
    def lines(self) -> int:
        return self.data.shape[0]

    @property
    def samples(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def pixels(self) -> np.ndarray:
        """Row-major ``(lines*samples, bands)`` view of the data."""
        return self.data.reshape(-1, self.bands)

    def spectrum(self, values) -> Spectrum:
        return Spectrum(values, self.wavelengths.copy())


@dataclass(eq=False)
class AnnotationMask:
    """Per-pixel integer labels, ``(line, sample)``."""

    labels: np.ndarray
    classes: dict = field(default_factory=lambda: dict(CLASS_NAMES))

    def __post_init__(self):
        self.labels = np.asarray(self.labels)
        if self.labels.ndim != 2:
            raise ShapeMismatch(f"mask must be 2-D, got shape {self.labels.shape}")
        self.labels = self.labels.astype(np.int64, copy=False)

    @property
    def shape(self) -> tuple:
        return self.labels.shape

    def count(self, class_id: int) -> int:
        return int(np.count_nonzero(self.labels == class_id))
