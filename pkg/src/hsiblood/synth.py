"""Synthetic annotated scenes and the N / target-size sweeps.

Backgrounds are Gaussian mixtures with spectrally correlated noise; target
pixels are implanted at random positions and optionally mixed with the
background they replace. The template handed to the detector can be
distorted by a smooth multiplicative field to mimic a library spectrum that
does not quite match the blood in the image.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AnnotationMask, HyperCube, Spectrum
from .detect import LabeledImage, estimate_stats, two_stage_pixels
from .errors import ConfigError, InvalidSpec
from .evaluate import binary_truth, pr_curve

N_REPEATS = 5


@dataclass
class BackgroundComponent:
    weight: float
    mean: Spectrum
    scale: float


@dataclass
class SceneSpec:
    lines: int
    samples: int
    bands: int
    background_components: list
    target_mean: Spectrum
    target_covariance_scale: float = 0.02
    n_targets: int = 0
    mixing_alpha: float = 1.0
    template_perturbation: float = 0.0
    seed: int = 0
    # AR(1) band-to-band correlation of the noise
    band_correlation: float = 0.9
    perturbation_terms: int = 4

    def validate(self) -> None:
        K = self.lines * self.samples
        if min(self.lines, self.samples, self.bands) <= 0:
            raise InvalidSpec("lines, samples and bands must be positive")
        if not 0 <= self.n_targets < K:
            raise InvalidSpec(f"n_targets={self.n_targets} must be in [0, {K})")
        if not self.background_components:
            raise InvalidSpec("at least one background component is required")
        weights = np.array([c.weight for c in self.background_components], dtype=float)
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise InvalidSpec("background weights must be non-negative and sum to 1")
        for c in self.background_components:
            if len(c.mean) != self.bands or c.scale < 0:
                raise InvalidSpec("background component mean/scale invalid")
        if len(self.target_mean) != self.bands:
            raise InvalidSpec("target mean has the wrong band count")
        if not 0 <= self.mixing_alpha <= 1:
            raise InvalidSpec("mixing_alpha must lie in [0, 1]")
        if self.template_perturbation < 0 or self.target_covariance_scale < 0:
            raise InvalidSpec("perturbation and target scale must be >= 0")
        if not 0 <= self.band_correlation < 1:
            raise InvalidSpec("band_correlation must lie in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must be a 64-bit unsigned integer")


def _gauss(wl, centre, width):
    return np.exp(-0.5 * ((wl - centre) / width) ** 2)


def _sigmoid(wl, centre, width):
    return 1.0 / (1.0 + np.exp(-(wl - centre) / width))


def blood_like(wl) -> np.ndarray:
    """Dark below ~590 nm with two haemoglobin-like dips, bright in the red."""
    wl = np.asarray(wl, dtype=float)
    return 0.06 + 0.42 * _sigmoid(wl, 600.0, 14.0) - 0.025 * _gauss(wl, 542.0, 10.0) - 0.025 * _gauss(wl, 576.0, 10.0)


def confuser_like(wl, shift: float = 10.0) -> np.ndarray:
    """Red material with a blood-like edge but no haemoglobin dips."""
    wl = np.asarray(wl, dtype=float)
    return 0.07 + 0.40 * _sigmoid(wl, 600.0 + shift, 16.0)


BACKGROUND_SHAPES = (
    lambda wl: 0.62 + 0.08 * (wl - 400.0) / 600.0,
    lambda wl: 0.18 + 0.22 * _gauss(wl, 470.0, 50.0) + 0.30 * _sigmoid(wl, 710.0, 25.0),
    lambda wl: 0.12 + 0.35 * (wl - 400.0) / 600.0 + 0.05 * _gauss(wl, 650.0, 80.0),
    lambda wl: 0.30 + 0.15 * _sigmoid(wl, 560.0, 30.0),
)


def default_scene_spec(lines: int = 100, samples: int = 100, bands: int = 16, n_targets: int = 500,
                       mixing_alpha: float = 1.0, template_perturbation: float = 0.0, seed: int = 0,
                       n_components: int = 3, background_scale: float = 0.03,
                       target_scale: float = 0.02, confuser_weight: float = 0.0, confuser_shift: float = 10.0,
                       band_correlation: float = 0.9, wl_range=(400.0, 1000.0)) -> SceneSpec:
    """A mixture of ``n_components`` material-like backgrounds plus a blood-like target.

    ``confuser_weight`` adds a red, blood-like background material (think
    paint or ketchup) whose absorption edge sits ``confuser_shift`` nm to the
    red of the target's; the other components share the remaining weight.
    """
    if not 1 <= n_components <= len(BACKGROUND_SHAPES):
        raise InvalidSpec(f"n_components must be 1..{len(BACKGROUND_SHAPES)}")
    if not 0 <= confuser_weight < 1:
        raise InvalidSpec("confuser_weight must lie in [0, 1)")
    wl = np.linspace(wl_range[0], wl_range[1], bands)
    share = (1.0 - confuser_weight) / n_components
    comps = [
        BackgroundComponent(share, Spectrum(shape(wl), wl), background_scale)
        for shape in BACKGROUND_SHAPES[:n_components]
    ]
    if confuser_weight > 0:
        comps.append(BackgroundComponent(confuser_weight, Spectrum(confuser_like(wl, confuser_shift), wl),
                                         background_scale))
    return SceneSpec(
        lines=lines,
        samples=samples,
        bands=bands,
        background_components=comps,
        target_mean=Spectrum(blood_like(wl), wl),
        target_covariance_scale=target_scale,
        n_targets=n_targets,
        mixing_alpha=mixing_alpha,
        template_perturbation=template_perturbation,
        seed=seed,
        band_correlation=band_correlation,
    )


@dataclass(eq=False)
class Scene:
    cube: HyperCube
    mask: AnnotationMask
    true_template: Spectrum
    detector_template: Spectrum
    target_index: np.ndarray = field(default=None)

    def __iter__(self):
        # allows ``cube, mask, true, det = generate_scene(spec)``
        return iter((self.cube, self.mask, self.true_template, self.detector_template))

    def labeled(self, name: str = "scene") -> LabeledImage:
        return LabeledImage(self.cube, self.mask, name)


def _band_factor(bands: int, rho: float) -> np.ndarray:
    idx = np.arange(bands)
    corr = rho ** np.abs(idx[:, None] - idx[None, :])
    return np.linalg.cholesky(corr)


def smooth_field(rng: np.random.Generator, bands: int, terms: int) -> np.ndarray:
    """Low-order cosine series across the band axis, scaled to max |f| = 1."""
    u = np.linspace(0.0, 1.0, bands)
    coef = rng.standard_normal(terms) / np.arange(1, terms + 1)
    f = sum(c * np.cos(np.pi * (j + 1) * u) for j, c in enumerate(coef))
    peak = np.max(np.abs(f))
    return f / peak if peak > 0 else f


def generate_scene(spec: SceneSpec) -> Scene:
    spec.validate()
    bg_seq, tg_seq, tpl_seq = np.random.SeedSequence(spec.seed).spawn(3)
    rng = np.random.default_rng(bg_seq)
    K, d = spec.lines * spec.samples, spec.bands
    wl = spec.target_mean.wavelengths
    factor = _band_factor(d, spec.band_correlation)

    weights = np.array([c.weight for c in spec.background_components])
    comp = rng.choice(len(weights), size=K, p=weights / weights.sum())
    means = np.stack([c.mean.values for c in spec.background_components])
    scales = np.array([c.scale for c in spec.background_components])
    noise = rng.standard_normal((K, d)) @ factor.T
    X = means[comp] + scales[comp, None] * noise

    rng_t = np.random.default_rng(tg_seq)
    idx = np.sort(rng_t.choice(K, size=spec.n_targets, replace=False))
    t = spec.target_mean.values
    if idx.size:
        tnoise = rng_t.standard_normal((idx.size, d)) @ factor.T
        pure = t + spec.target_covariance_scale * tnoise
        a = spec.mixing_alpha
        X[idx] = a * pure + (1.0 - a) * X[idx]
    labels = np.zeros(K, dtype=np.int64)
    labels[idx] = 1

    rng_p = np.random.default_rng(tpl_seq)
    distortion = 1.0 + spec.template_perturbation * smooth_field(rng_p, d, spec.perturbation_terms)
    return Scene(
        HyperCube(X.reshape(spec.lines, spec.samples, d), wl.copy()),
        AnnotationMask(labels.reshape(spec.lines, spec.samples)),
        Spectrum(t.copy(), wl.copy()),
        Spectrum(t * distortion, wl.copy()),
        idx,
    )


@dataclass(frozen=True)
class NRule:
    """Either a constant pixel count or a percentage of the target count."""

    value: float
    percent: bool = False

    @classmethod
    def parse(cls, text) -> "NRule":
        text = str(text).strip()
        try:
            if text.endswith("%"):
                return cls(float(text[:-1]), True)
            return cls(int(text), False)
        except ValueError:
            raise ConfigError(f"bad N value {text!r}") from None

    def resolve(self, n_targets: int) -> int:
        if not self.percent:
            return int(self.value)
        return max(1, int(np.floor(self.value / 100.0 * n_targets + 0.5)))

    def __str__(self) -> str:
        return f"{self.value:g}%" if self.percent else str(int(self.value))


def sweep_target_size(spec: SceneSpec, t_values, n_rule, repeats: int = N_REPEATS, scene: Scene | None = None) -> list:
    """Two-stage PR AUC as a function of the number of target pixels ``T``.

    One scene with ``spec.n_targets`` implanted pixels is generated; for each
    ``T`` and repetition a random subset of ``T`` target pixels is kept and
    the other target pixels are dropped from the pixel set.
    """
    rule = n_rule if isinstance(n_rule, NRule) else NRule.parse(n_rule)
    scene = generate_scene(spec) if scene is None else scene
    X = scene.cube.pixels()
    is_target = scene.mask.labels.ravel() == 1
    tgt = np.flatnonzero(is_target)
    bg = np.flatnonzero(~is_target)
    rows = []
    for T in t_values:
        T = int(T)
        if not 1 <= T <= tgt.size:
            raise InvalidSpec(f"T={T} exceeds the {tgt.size} implanted target pixels")
        N = rule.resolve(T)
        aucs = []
        for rep in range(repeats):
            rng = np.random.default_rng([spec.seed, T, rep])
            keep = np.sort(np.r_[bg, rng.choice(tgt, size=T, replace=False)])
            res = two_stage_pixels(X[keep], scene.detector_template.values, N)
            aucs.append(pr_curve(res.stage2, is_target[keep]).auc)
        aucs = np.array(aucs)
        rows.append({
            "T": T,
            "N": N,
            "n_rule": str(rule),
            "auc_pr_mean": float(aucs.mean()),
            "auc_pr_sd": float(aucs.std(ddof=1)) if repeats > 1 else 0.0,
            "auc_pr_runs": aucs.tolist(),
        })
    return rows


def sweep_n(image: LabeledImage, template, n_values, class_id: int = 1, uncertain: str = "exclude") -> list:
    """Two-stage PR AUC for each N; percentages are of the class size."""
    truth, valid = binary_truth(image.mask, class_id, uncertain)
    size = int(np.count_nonzero(image.mask.labels == class_id))
    X = image.cube.pixels()
    stats = estimate_stats(X)
    template = np.asarray(getattr(template, "values", template), dtype=np.float64)
    rows = []
    for text in n_values:
        rule = text if isinstance(text, NRule) else NRule.parse(text)
        N = rule.resolve(size)
        res = two_stage_pixels(X, template, N, stats)
        auc = pr_curve(res.stage2.reshape(truth.shape), truth, valid).auc
        rows.append({"n_rule": str(rule), "N": N, "auc_pr": auc})
    return rows


_SCENE_KEYS = {
    "lines": int, "samples": int, "bands": int, "targets": int, "alpha": float,
    "perturbation": float, "seed": int, "components": int, "background_scale": float,
    "target_scale": float, "confuser_weight": float, "confuser_shift": float, "band_correlation": float,
}


def scene_spec_from_config(cfg: dict) -> SceneSpec:
    unknown = set(cfg) - set(_SCENE_KEYS)
    if unknown:
        raise ConfigError(f"unknown scene keys: {', '.join(sorted(unknown))}")
    try:
        v = {k: _SCENE_KEYS[k](cfg[k]) for k in cfg}
    except ValueError as exc:
        raise ConfigError(f"bad scene config: {exc}") from None
    return default_scene_spec(
        lines=v.get("lines", 100),
        samples=v.get("samples", 100),
        bands=v.get("bands", 16),
        n_targets=v.get("targets", 500),
        mixing_alpha=v.get("alpha", 1.0),
        template_perturbation=v.get("perturbation", 0.0),
        seed=v.get("seed", 0),
        n_components=v.get("components", 3),
        background_scale=v.get("background_scale", 0.03),
        target_scale=v.get("target_scale", 0.02),
        confuser_weight=v.get("confuser_weight", 0.0),
        confuser_shift=v.get("confuser_shift", 10.0),
        band_correlation=v.get("band_correlation", 0.9),
    )
