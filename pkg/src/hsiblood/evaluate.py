"""Detector evaluation: confusion matrices, ROC/PR curves, prevalence
thresholds, outcome maps and PCA projections.

Every function accepts an optional boolean ``valid`` mask; pixels outside it
(by default the "uncertain blood" class) are neither positive nor negative.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import UNCERTAIN_BLOOD, AnnotationMask
from .errors import ConfigError, EmptyScores, NoPositives, ShapeMismatch, SingleClass, TooFewSamples


def binary_truth(mask: AnnotationMask | np.ndarray, class_id: int = 1, uncertain: str = "exclude"):
    """Return ``(truth, valid)`` boolean grids for one target class.

    ``uncertain`` decides the role of class-8 pixels: ``"exclude"`` drops
    them from evaluation, ``"positive"``/``"negative"`` counts them as such.
    """
    labels = mask.labels if isinstance(mask, AnnotationMask) else np.asarray(mask)
    truth = labels == class_id
    valid = np.ones(labels.shape, dtype=bool)
    unc = labels == UNCERTAIN_BLOOD
    if class_id != UNCERTAIN_BLOOD and unc.any():
        if uncertain == "exclude":
            valid &= ~unc
        elif uncertain == "positive":
            truth |= unc
        elif uncertain != "negative":
            raise ConfigError(f"uncertain must be exclude|positive|negative, got {uncertain!r}")
    return truth, valid


def _flatten(scores, truth, valid=None):
    s = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    t = np.asarray(truth).astype(bool)
    if s.shape != t.shape:
        raise ShapeMismatch(f"scores {s.shape} vs truth {t.shape}")
    if valid is None:
        return s.ravel(), t.ravel()
    v = np.asarray(valid, dtype=bool)
    if v.shape != s.shape:
        raise ShapeMismatch(f"scores {s.shape} vs valid mask {v.shape}")
    return s[v], t[v]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @staticmethod
    def _ratio(a, b) -> float:
        return a / b if b else float("nan")

    @property
    def tpr(self) -> float:
        return self._ratio(self.tp, self.tp + self.fn)

    recall = tpr

    @property
    def fpr(self) -> float:
        return self._ratio(self.fp, self.fp + self.tn)

    @property
    def precision(self) -> float:
        return self._ratio(self.tp, self.tp + self.fp)


def confusion_at_threshold(scores, truth, eta: float, valid=None) -> ConfusionMatrix:
    s, t = _flatten(scores, truth, valid)
    pred = s >= eta
    tp = int(np.count_nonzero(pred & t))
    fp = int(np.count_nonzero(pred & ~t))
    fn = int(np.count_nonzero(~pred & t))
    tn = int(np.count_nonzero(~pred & ~t))
    return ConfusionMatrix(tp, fp, tn, fn)


@dataclass(eq=False)
class Curve:
    """``x``/``y`` pairs swept over thresholds, plus the area under them."""

    x: np.ndarray
    y: np.ndarray
    thresholds: np.ndarray
    auc: float
    kind: str = ""

    @property
    def points(self) -> list:
        return list(zip(self.x.tolist(), self.y.tolist()))


def _cumulative_counts(s: np.ndarray, t: np.ndarray):
    """Cumulative TP/FP counts at each distinct threshold, highest first."""
    order = np.argsort(-s, kind="stable")
    s, t = s[order], t[order]
    last = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    tp = np.cumsum(t, dtype=np.int64)[last]
    fp = (last + 1) - tp
    return s[last], tp, fp


def roc_curve(scores, truth, valid=None) -> Curve:
    """ROC curve with trapezoidal AUC (equal to the Mann-Whitney statistic)."""
    s, t = _flatten(scores, truth, valid)
    P = int(t.sum())
    N = t.size - P
    if P == 0 or N == 0:
        raise SingleClass("ROC needs both positive and negative pixels")
    thr, tp, fp = _cumulative_counts(s, t)
    tp = np.r_[0, tp, P]
    fp = np.r_[0, fp, N]
    thresholds = np.r_[np.inf, thr, -np.inf]
    # integer trapezoid sum keeps the area exact up to the final division
    area2 = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    return Curve(fp / N, tp / P, thresholds, area2 / (2 * P * N), "roc")


def pr_curve(scores, truth, valid=None) -> Curve:
    """Precision-recall curve; area is average precision (step rule)."""
    s, t = _flatten(scores, truth, valid)
    P = int(t.sum())
    if P == 0:
        raise NoPositives("PR curve needs at least one positive pixel")
    thr, tp, fp = _cumulative_counts(s, t)
    precision = tp / (tp + fp)
    recall = tp / P
    ap = float(np.sum(np.diff(np.r_[0, tp]) * precision) / P)
    return Curve(np.r_[0.0, recall], np.r_[1.0, precision], np.r_[np.inf, thr], ap, "pr")


def prevalence(truth, valid=None) -> float:
    t = np.asarray(truth, dtype=bool)
    if valid is not None:
        t = t[np.asarray(valid, dtype=bool)]
    if t.size == 0:
        raise EmptyScores("no evaluated pixels")
    return float(t.mean())


def threshold_at_prevalence(scores, prevalence: float, valid=None) -> float:
    """Threshold that flags ``round(prevalence * n)`` of the evaluated pixels."""
    s = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    if valid is not None:
        s = s[np.asarray(valid, dtype=bool)]
    s = s.ravel()
    if s.size == 0:
        raise EmptyScores("no scores to threshold")
    if not 0 < prevalence <= 1:
        raise ConfigError(f"prevalence must lie in (0, 1], got {prevalence}")
    k = int(np.floor(prevalence * s.size + 0.5))
    k = min(max(k, 1), s.size)
    return float(np.sort(s)[::-1][k - 1])


class Outcome(enum.IntEnum):
    EXCLUDED = 0
    TP = 1
    FP = 2
    FN = 3
    TN = 4


def detection_map(scores, truth, eta: float, valid=None) -> np.ndarray:
    """Per-pixel :class:`Outcome` codes at threshold ``eta``."""
    s = np.asarray(getattr(scores, "scores", scores), dtype=np.float64)
    t = np.asarray(truth, dtype=bool)
    if s.shape != t.shape:
        raise ShapeMismatch(f"scores {s.shape} vs truth {t.shape}")
    pred = s >= eta
    out = np.where(pred, np.where(t, Outcome.TP, Outcome.FP), np.where(t, Outcome.FN, Outcome.TN))
    out = out.astype(np.uint8)
    if valid is not None:
        out[~np.asarray(valid, dtype=bool)] = Outcome.EXCLUDED
    return out


class Compare(enum.IntEnum):
    NONE = 0
    RED = 1  # A1 TP
    ORANGE = 2  # A1 FN, ideal TP
    BLUE = 3  # both FN
    GREY = 4  # A1 FP
    GREEN = 5  # ideal FP, A1 TN


def compare_map(scores_a, scores_b, truth, prevalence_: float | None = None, valid=None) -> np.ndarray:
    """Colour codes comparing a realistic detector ``a`` with an ideal ``b``.

    Both score maps are thresholded with :func:`threshold_at_prevalence`;
    the prevalence defaults to the true target fraction.
    """
    a = np.asarray(getattr(scores_a, "scores", scores_a), dtype=np.float64)
    b = np.asarray(getattr(scores_b, "scores", scores_b), dtype=np.float64)
    t = np.asarray(truth, dtype=bool)
    if not a.shape == b.shape == t.shape:
        raise ShapeMismatch(f"maps {a.shape}, {b.shape} vs truth {t.shape}")
    v = np.ones(t.shape, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    if prevalence_ is None:
        prevalence_ = prevalence(t, v)
    pa = a >= threshold_at_prevalence(a, prevalence_, v)
    pb = b >= threshold_at_prevalence(b, prevalence_, v)
    codes = np.zeros(t.shape, dtype=np.uint8)
    codes[pa & t] = Compare.RED
    codes[~pa & t & pb] = Compare.ORANGE
    codes[~pa & t & ~pb] = Compare.BLUE
    codes[pa & ~t] = Compare.GREY
    codes[~pa & ~t & pb] = Compare.GREEN
    codes[~v] = Compare.NONE
    return codes


@dataclass(eq=False)
class Projection:
    mean: np.ndarray
    components: np.ndarray  # (k, d), rows are unit eigenvectors
    explained_variance: np.ndarray
    coords: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T


def pca_project(pixels, k: int = 2) -> Projection:
    """Project onto the top-``k`` principal axes of the sample covariance.

    Each axis is signed so that its largest-magnitude loading is positive.
    """
    X = np.asarray(pixels, dtype=np.float64)
    X = X.reshape(-1, X.shape[-1])
    if X.shape[0] < k + 1:
        raise TooFewSamples(f"need at least {k + 1} pixels for {k} components")
    if not 1 <= k <= X.shape[1]:
        raise ConfigError(f"k={k} outside 1..{X.shape[1]}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:k]
    comps = vecs[:, order].T
    pivot = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(k), pivot])
    comps *= np.where(signs == 0, 1.0, signs)[:, None]
    return Projection(mean, comps, np.clip(vals[order], 0, None), Xc @ comps.T)
