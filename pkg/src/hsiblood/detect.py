"""Gaussian likelihood-ratio detectors and the detection scenarios.

Two detectors are provided:

* Quadratic Detector, the difference of Mahalanobis distances to the
  background and target Gaussians::

      y = (x-mu0)' G0^-1 (x-mu0) - (x-mu1)' G1^-1 (x-mu1)

* Matched Filter, a projection onto the mean-to-target direction::

      y = (x-mu)' G^-1 (mu_t-mu) / (mu_t-mu)' G^-1 (mu_t-mu)

and the two-stage matched filter, which re-estimates the target template as
the mean of the ``N`` highest scoring pixels and runs the filter again with
the stage-one mean and covariance.

Covariances are never inverted explicitly; a Cholesky factor is cached in
:class:`GaussianStats` and used for triangular solves.
"""
from __future__ import annotations

import configparser
import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .core import UNCERTAIN_BLOOD, AnnotationMask, HyperCube, Spectrum
from .cube_io import SpectralLibrary
from .errors import (
    ConfigError,
    DegenerateTarget,
    DimensionMismatch,
    ShapeMismatch,
    TooFewSamples,
    UnrecoverablySingular,
    UnresolvableTarget,
)
from .preprocess import resample_spectrum

RIDGE_START = 1e-8
RIDGE_GROWTH = 10.0
RIDGE_RETRIES = 6
DEGENERATE_TOL = 1e-12
DEFAULT_N_PIXELS = 1000


def _vec(x) -> np.ndarray:
    return np.asarray(x.values if isinstance(x, Spectrum) else x, dtype=np.float64)


def _pixel_array(pixels) -> np.ndarray:
    if isinstance(pixels, HyperCube):
        return pixels.pixels()
    if isinstance(pixels, (list, tuple)):
        return np.array([_vec(p) for p in pixels], dtype=np.float64)
    arr = np.asarray(pixels, dtype=np.float64)
    return arr.reshape(-1, arr.shape[-1])


@dataclass(eq=False)
class GaussianStats:
    mean: np.ndarray
    covariance: np.ndarray
    solve_factor: tuple
    ridge_applied: float = 0.0
    n_samples: int = 0

    @property
    def dim(self) -> int:
        return self.mean.size

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Return ``(covariance + ridge*I)^-1 b``."""
        return linalg.cho_solve(self.solve_factor, b, check_finite=False)

    def mahalanobis(self, X: np.ndarray) -> np.ndarray:
        """Squared Mahalanobis distance of each row of ``X`` to the mean."""
        D = np.atleast_2d(X) - self.mean
        c, lower = self.solve_factor
        # with G = L L', (x-mu)' G^-1 (x-mu) = ||L^-1 (x-mu)||^2
        L = np.tril(c) if lower else np.triu(c).T
        Z = linalg.solve_triangular(L, D.T, lower=True, check_finite=False)
        return np.einsum("ij,ij->j", Z, Z)


def _factorize(cov: np.ndarray):
    try:
        factor = linalg.cho_factor(cov, lower=True, check_finite=False)
    except linalg.LinAlgError:
        return None
    diag = np.diag(factor[0])
    if not np.all(np.isfinite(diag)) or diag.min() <= 0:
        return None
    # pivots below rank tolerance mean the matrix is numerically singular
    if (diag.min() / diag.max()) ** 2 < cov.shape[0] * np.finfo(float).eps:
        return None
    return factor


def stats_from_moments(mean, covariance, n_samples: int = 0) -> GaussianStats:
    """Factorize a known mean/covariance, escalating a ridge on failure."""
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.asarray(covariance, dtype=np.float64)
    d = mean.size
    if cov.shape != (d, d):
        raise DimensionMismatch(f"covariance shape {cov.shape} for mean of length {d}")
    cov = 0.5 * (cov + cov.T)
    factor = _factorize(cov)
    ridge = 0.0
    if factor is None:
        scale = np.trace(cov) / d
        base = RIDGE_START * (scale if scale > 0 else 1.0)
        for attempt in range(RIDGE_RETRIES):
            ridge = base * RIDGE_GROWTH**attempt
            factor = _factorize(cov + ridge * np.eye(d))
            if factor is not None:
                break
        else:
            raise UnrecoverablySingular(
                f"covariance not factorizable after {RIDGE_RETRIES} ridge retries (last ridge {ridge:g})"
            )
    return GaussianStats(mean, cov, factor, ridge, n_samples)


def estimate_stats(pixels) -> GaussianStats:
    """Sample mean and unbiased (K-1) sample covariance of a pixel set."""
    X = _pixel_array(pixels)
    K = X.shape[0]
    if K < 2:
        raise TooFewSamples(f"need at least 2 pixels, got {K}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / (K - 1)
    return stats_from_moments(mean, cov, K)


def qd_score(x, bg: GaussianStats, tg: GaussianStats):
    """Quadratic Detector; larger values are more target-like."""
    X = np.asarray(_vec(x))
    if bg.dim != tg.dim or X.shape[-1] != bg.dim:
        raise DimensionMismatch(f"pixel dim {X.shape[-1]}, background {bg.dim}, target {tg.dim}")
    y = bg.mahalanobis(X.reshape(-1, bg.dim)) - tg.mahalanobis(X.reshape(-1, bg.dim))
    return float(y[0]) if X.ndim == 1 else y.reshape(X.shape[:-1])


@dataclass(eq=False)
class MatchedFilter:
    """Matched filter weights for a fixed mean, template and covariance."""

    mean: np.ndarray
    template: np.ndarray
    weights: np.ndarray
    norm: float

    @classmethod
    def build(cls, mu, mu_t, stats: GaussianStats) -> "MatchedFilter":
        mu, mu_t = _vec(mu), _vec(mu_t)
        if mu.shape != mu_t.shape or mu.size != stats.dim:
            raise DimensionMismatch(f"mean {mu.size}, template {mu_t.size}, covariance {stats.dim}")
        d = mu_t - mu
        if not np.any(d):
            raise DegenerateTarget("target template equals the data mean")
        w = stats.solve(d)
        norm = float(d @ w)
        if not norm > DEGENERATE_TOL:
            raise DegenerateTarget(f"template Mahalanobis norm {norm:g} <= {DEGENERATE_TOL:g}")
        return cls(mu, mu_t, w, norm)

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return ((X - self.mean) @ self.weights) / self.norm


def mf_score(x, mu, mu_t, stats: GaussianStats) -> float:
    x = _vec(x)
    if x.size != stats.dim:
        raise DimensionMismatch(f"pixel dim {x.size} vs covariance {stats.dim}")
    f = MatchedFilter.build(mu, mu_t, stats)
    return float(((x - f.mean) @ f.weights) / f.norm)


@dataclass(eq=False)
class ScoreMap:
    scores: np.ndarray
    label: str = ""

    @property
    def shape(self) -> tuple:
        return self.scores.shape


def mf_pixels(X: np.ndarray, mu_t, stats: GaussianStats | None = None) -> np.ndarray:
    """Matched filter scores for a ``(K, d)`` pixel array."""
    X = np.asarray(X, dtype=np.float64)
    if stats is None:
        stats = estimate_stats(X)
    return MatchedFilter.build(stats.mean, mu_t, stats)(X)


def mf_image(cube: HyperCube, mu_t, stats: GaussianStats | None = None) -> ScoreMap:
    """Matched filter with mean and covariance estimated from the whole cube."""
    mu_t = _vec(mu_t)
    if mu_t.size != cube.bands:
        raise DimensionMismatch(f"template has {mu_t.size} bands, cube {cube.bands}")
    y = mf_pixels(cube.pixels(), mu_t, stats)
    return ScoreMap(y.reshape(cube.lines, cube.samples), "mf")


@dataclass(eq=False)
class TwoStageResult:
    stage1: np.ndarray
    stage2: np.ndarray
    template: np.ndarray
    top: np.ndarray
    stats: GaussianStats


def top_n(scores: np.ndarray, n: int) -> np.ndarray:
    """Indices of the ``n`` highest scores; ties keep row-major order."""
    order = np.argsort(-np.asarray(scores).ravel(), kind="stable")
    return order[:n]


def two_stage_pixels(X: np.ndarray, mu_t, n_pixels: int, stats: GaussianStats | None = None) -> TwoStageResult:
    X = np.asarray(X, dtype=np.float64)
    K = X.shape[0]
    if not 1 <= n_pixels <= K:
        raise ConfigError(f"n_pixels={n_pixels} outside 1..{K}")
    if stats is None:
        stats = estimate_stats(X)
    y1 = MatchedFilter.build(stats.mean, mu_t, stats)(X)
    top = top_n(y1, n_pixels)
    template = X[top].mean(axis=0)
    y2 = MatchedFilter.build(stats.mean, template, stats)(X)
    return TwoStageResult(y1, y2, template, top, stats)


def two_stage_details(cube: HyperCube, mu_t, n_pixels: int = DEFAULT_N_PIXELS) -> TwoStageResult:
    res = two_stage_pixels(cube.pixels(), mu_t, n_pixels)
    shape = (cube.lines, cube.samples)
    res.stage1 = res.stage1.reshape(shape)
    res.stage2 = res.stage2.reshape(shape)
    return res


def two_stage(cube: HyperCube, mu_t, n_pixels: int = DEFAULT_N_PIXELS) -> ScoreMap:
    return ScoreMap(two_stage_details(cube, mu_t, n_pixels).stage2, "two-stage")


# ---------------------------------------------------------------------------
# scenarios


class ScenarioKind(str, enum.Enum):
    IDEAL_QD = "ideal-qd"
    IDEAL_MF = "ideal-mf"
    INDUCTIVE_MF = "inductive-mf"
    LIBRARY_MF = "library-mf"
    TWO_STAGE = "two-stage"


@dataclass
class Scenario:
    kind: ScenarioKind
    class_id: int = 1
    n_pixels: int = DEFAULT_N_PIXELS
    # when set, N is this percentage of the target class size in the test image
    n_percent: float | None = None
    library_index: int | None = None
    include_uncertain: bool = False

    def __post_init__(self):
        self.kind = ScenarioKind(self.kind)
        if self.n_pixels < 1:
            raise ConfigError("n_pixels must be positive")


@dataclass(eq=False)
class LabeledImage:
    cube: HyperCube
    mask: AnnotationMask | None = None
    name: str = ""

    def __post_init__(self):
        if self.mask is not None and self.mask.shape != self.cube.shape[:2]:
            raise ShapeMismatch(f"mask shape {self.mask.shape} != cube shape {self.cube.shape[:2]}")


def _class_selector(labels: np.ndarray, class_id: int, include_uncertain: bool) -> np.ndarray:
    sel = labels == class_id
    if include_uncertain:
        sel |= labels == UNCERTAIN_BLOOD
    return sel


def class_template(image: LabeledImage, class_id: int = 1, include_uncertain: bool = False) -> np.ndarray:
    if image.mask is None:
        raise UnresolvableTarget(f"image {image.name!r} has no annotation")
    sel = _class_selector(image.mask.labels, class_id, include_uncertain)
    if not sel.any():
        raise UnresolvableTarget(f"class {class_id} absent from image {image.name!r}")
    return image.cube.data[sel].mean(axis=0)


def library_template(library: SpectralLibrary, index: int, wavelengths, normalize: bool = True) -> np.ndarray:
    """Library spectrum resampled onto ``wavelengths``, optionally median-normalized."""
    try:
        entry = library.get(index)
    except KeyError:
        raise UnresolvableTarget(f"library has no entry {index}") from None
    spec, _ = resample_spectrum(entry.spectrum, wavelengths)
    values = spec.values
    if normalize:
        med = np.median(values)
        if not med > 0:
            raise UnresolvableTarget(f"library entry {index} has non-positive median")
        values = values / med
    return values


def resolve_n(sc: Scenario, test: LabeledImage) -> int:
    if sc.n_percent is None:
        n = sc.n_pixels
    else:
        if test.mask is None:
            raise UnresolvableTarget("percent N needs the test annotation")
        size = int(np.count_nonzero(test.mask.labels == sc.class_id))
        n = max(1, int(np.floor(sc.n_percent / 100.0 * size + 0.5)))
    K = test.cube.lines * test.cube.samples
    if n > K:
        raise ConfigError(f"n_pixels={n} exceeds the {K} pixels of the test image")
    return n


def _external_template(sc: Scenario, test: LabeledImage, source: LabeledImage | None,
                       library: SpectralLibrary | None, normalize_library: bool) -> np.ndarray:
    if source is not None and (sc.kind != ScenarioKind.LIBRARY_MF or library is None):
        t = class_template(source, sc.class_id, sc.include_uncertain)
        if t.size != test.cube.bands or not np.array_equal(source.cube.wavelengths, test.cube.wavelengths):
            raise UnresolvableTarget("source image is on a different wavelength axis")
        return t
    if library is not None and sc.library_index is not None:
        return library_template(library, sc.library_index, test.cube.wavelengths, normalize_library)
    raise UnresolvableTarget(f"{sc.kind.value} needs a source image or a library entry")


def run_scenario(sc: Scenario, test: LabeledImage, source: LabeledImage | None = None,
                 library: SpectralLibrary | None = None, normalize_library: bool = True) -> ScoreMap:
    """Score ``test`` according to one detection scenario.

    ``source`` supplies the inductive template, ``library`` the library
    template. Two-stage prefers the source image when both are given.
    """
    kind = sc.kind
    if kind == ScenarioKind.IDEAL_QD:
        if test.mask is None:
            raise UnresolvableTarget("ideal QD needs the test annotation")
        labels = test.mask.labels
        tsel = labels == sc.class_id
        bsel = ~tsel & (labels != UNCERTAIN_BLOOD)
        if tsel.sum() < 2:
            raise UnresolvableTarget(f"class {sc.class_id} has fewer than 2 pixels")
        tg = estimate_stats(test.cube.data[tsel])
        bg = estimate_stats(test.cube.data[bsel])
        y = qd_score(test.cube.pixels(), bg, tg)
        return ScoreMap(np.asarray(y).reshape(test.cube.shape[:2]), kind.value)
    if kind == ScenarioKind.IDEAL_MF:
        mu_t = class_template(test, sc.class_id, sc.include_uncertain)
        out = mf_image(test.cube, mu_t)
    elif kind in (ScenarioKind.INDUCTIVE_MF, ScenarioKind.LIBRARY_MF):
        if kind == ScenarioKind.INDUCTIVE_MF and source is None:
            raise UnresolvableTarget("inductive MF needs a source image")
        if kind == ScenarioKind.LIBRARY_MF and (library is None or sc.library_index is None):
            raise UnresolvableTarget("library MF needs a library and an entry index")
        mu_t = _external_template(sc, test, source if kind == ScenarioKind.INDUCTIVE_MF else None,
                                  library, normalize_library)
        out = mf_image(test.cube, mu_t)
    else:
        mu_t = _external_template(sc, test, source, library, normalize_library)
        out = two_stage(test.cube, mu_t, resolve_n(sc, test))
    out.label = kind.value
    return out


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines (``#``/``;`` comments) into a dict.

    Keys are lower-cased with spaces and dashes mapped to underscores.
    """
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = lambda k: "_".join(k.strip().lower().replace("-", "_").split())
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return dict(parser["config"])


def read_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def scenario_from_config(cfg: dict) -> Scenario:
    n_text = str(cfg.get("n_pixels", DEFAULT_N_PIXELS)).strip()
    n_percent = None
    try:
        if n_text.endswith("%"):
            n_percent = float(n_text[:-1])
            n_pixels = DEFAULT_N_PIXELS
        else:
            n_pixels = int(n_text)
        library_index = int(cfg["library_index"]) if cfg.get("library_index") else None
        return Scenario(
            kind=cfg.get("kind", "two-stage"),
            class_id=int(cfg.get("class", cfg.get("class_id", 1))),
            n_pixels=n_pixels,
            n_percent=n_percent,
            library_index=library_index,
            include_uncertain=str(cfg.get("include_uncertain", "no")).lower() in ("1", "yes", "true"),
        )
    except ValueError as exc:
        raise ConfigError(f"bad scenario config: {exc}") from None
