"""Scalar biomarkers from taxa counts via linear discriminant analysis.

Two feature maps feed the same two-class LDA:

  * raw-frequency: the per-sample frequency vector itself;
  * dfv: the diffusion Fréchet vector of that frequency vector on a
    co-occurrence network at a chosen scale t.

The learned axis is (S_W + lambda I)^{-1} (mu_1 - mu_0), unit-normalized,
with the sign fixed so class-1 samples score higher on average.  The ridge
term lambda = 1e-6 * trace(S_W)/dim keeps the pooled scatter invertible on
small cohorts.  Classification convention everywhere: predict class 1 when
score >= threshold.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cooccurrence import AbundanceTable, build_pipeline
from .measures import frequency_distribution
from .networks import SpectralDecomposition, dfv, spectrum

REG_SCALE = 1e-6
FEATURE_KINDS = ("raw-frequency", "dfv")

DEFAULT_ALPHA_GRID = (0.05, 0.1, 0.2, 0.3, 0.5, 1.0)
DEFAULT_T_GRID = (0.1, 0.5, 1.0, 2.0, 4.0, 7.75, 16.0, 31.0)


class DegenerateSeparation(ValueError):
    """The class means coincide; no discriminant axis exists."""


@dataclass(frozen=True)
class LdaModel:
    """Learned discriminant axis plus enough context to score new samples."""

    direction: np.ndarray
    class_means: np.ndarray
    feature_kind: str
    threshold: float | None = None
    t: float | None = None
    taxa: tuple | None = None

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float).reshape(-1)
        norm = float(np.linalg.norm(d))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError("direction must be unit length")
        means = np.asarray(self.class_means, dtype=float)
        if means.shape != (2, d.shape[0]):
            raise ValueError("class_means must hold two feature-space points")
        if self.feature_kind not in FEATURE_KINDS:
            raise ValueError(f"feature_kind must be one of {FEATURE_KINDS}")
        d.setflags(write=False)
        means.setflags(write=False)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "class_means", means)

    @property
    def dim(self) -> int:
        return self.direction.shape[0]


def features_beta(sample_counts) -> np.ndarray:
    """Frequency vector of one sample."""
    return frequency_distribution(sample_counts).probs.copy()


def features_gamma(sample_counts, spec: SpectralDecomposition, t: float) -> np.ndarray:
    """Diffusion Fréchet vector of the sample's frequency distribution."""
    xi = frequency_distribution(sample_counts)
    if xi.n != spec.n:
        raise ValueError(f"count length {xi.n} != node count {spec.n}")
    return dfv(spec, xi, t).values.copy()


def fit_lda(features_class0, features_class1, feature_kind: str = "raw-frequency",
            t: float | None = None, taxa=None) -> LdaModel:
    """Two-class regularized LDA; class 1 scores above class 0 by convention."""
    f0 = np.atleast_2d(np.asarray(features_class0, dtype=float))
    f1 = np.atleast_2d(np.asarray(features_class1, dtype=float))
    if f0.shape[0] < 2 or f1.shape[0] < 2:
        raise ValueError("each class needs at least 2 samples")
    if f0.shape[1] != f1.shape[1]:
        raise ValueError("feature dimensions differ between classes")
    mu0 = f0.mean(axis=0)
    mu1 = f1.mean(axis=0)
    delta = mu1 - mu0
    if float(np.linalg.norm(delta)) <= 1e-12:
        raise DegenerateSeparation("class means coincide to 1e-12")
    dim = f0.shape[1]
    dev0 = f0 - mu0
    dev1 = f1 - mu1
    scatter = dev0.T @ dev0 + dev1.T @ dev1
    lam = REG_SCALE * float(np.trace(scatter)) / dim
    if lam > 0.0:
        direction = np.linalg.solve(scatter + lam * np.eye(dim), delta)
    else:
        # zero within-class scatter: the mean gap is the whole story
        direction = delta.copy()
    direction /= np.linalg.norm(direction)
    if float(direction @ delta) < 0.0:
        direction = -direction
    return LdaModel(
        direction=direction,
        class_means=np.stack([mu0, mu1]),
        feature_kind=feature_kind,
        t=t,
        taxa=tuple(taxa) if taxa is not None else None,
    )


def score(model: LdaModel, feature) -> float:
    """Projection of a feature vector onto the learned axis."""
    f = np.asarray(feature, dtype=float).reshape(-1)
    if f.shape[0] != model.dim:
        raise ValueError(f"feature dimension {f.shape[0]} != model dimension {model.dim}")
    return float(f @ model.direction)


def score_many(model: LdaModel, features) -> np.ndarray:
    f = np.atleast_2d(np.asarray(features, dtype=float))
    if f.shape[1] != model.dim:
        raise ValueError(f"feature dimension {f.shape[1]} != model dimension {model.dim}")
    return f @ model.direction


@dataclass(frozen=True)
class RocCurve:
    """ROC sweep ordered from the (0,0) corner to the (1,1) corner."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def __post_init__(self):
        for name in ("thresholds", "fpr", "tpr"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(np.diff(self.fpr) < 0) or np.any(np.diff(self.tpr) < 0):
            raise ValueError("rates must be nondecreasing along the sweep")


def roc(scores0, scores1) -> RocCurve:
    """ROC of `score >= threshold` sweeping all distinct scores plus ±inf.

    Class 1 is the positive class: tpr is the fraction of class-1 scores at
    or above the threshold, fpr the same fraction for class 0.
    """
    s0 = np.asarray(scores0, dtype=float).reshape(-1)
    s1 = np.asarray(scores1, dtype=float).reshape(-1)
    if s0.size == 0 or s1.size == 0:
        raise ValueError("both classes need at least one score")
    cuts = np.unique(np.concatenate([s0, s1]))[::-1]
    thresholds = np.concatenate([[np.inf], cuts, [-np.inf]])
    fpr = np.array([(s0 >= c).mean() for c in thresholds])
    tpr = np.array([(s1 >= c).mean() for c in thresholds])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr, auc=auc)


# ---------------------------------------------------------------------------
# Parameter selection over (alpha, t)
# ---------------------------------------------------------------------------

def beta_feature_matrix(table: AbundanceTable) -> np.ndarray:
    return np.stack([features_beta(row) for row in table.counts])


def gamma_feature_matrix(table: AbundanceTable, spec: SpectralDecomposition, t: float) -> np.ndarray:
    return np.stack([features_gamma(row, spec, t) for row in table.counts])


def _class_split(labels) -> tuple:
    labels = np.asarray(labels).astype(int)
    if set(np.unique(labels)) - {0, 1}:
        raise ValueError("labels must be 0 or 1")
    idx0 = np.nonzero(labels == 0)[0]
    idx1 = np.nonzero(labels == 1)[0]
    return idx0, idx1


def reference_table(table: AbundanceTable, labels) -> AbundanceTable:
    """Class-0 rows only: the cohort the co-occurrence network comes from."""
    idx0, _ = _class_split(labels)
    return AbundanceTable(table.taxa, table.counts[idx0])


def auc_for_parameters(table: AbundanceTable, labels, alpha: float, t: float,
                       exclude_self: bool = False) -> float:
    """In-sample AUC of the DFV biomarker at one (alpha, t) cell."""
    idx0, idx1 = _class_split(labels)
    net = build_pipeline(reference_table(table, labels), alpha, exclude_self=exclude_self)
    spec = spectrum(net)
    feats = gamma_feature_matrix(table, spec, t)
    model = fit_lda(feats[idx0], feats[idx1], feature_kind="dfv", t=t, taxa=net.labels)
    s = score_many(model, feats)
    return roc(s[idx0], s[idx1]).auc


def select_parameters(table: AbundanceTable, labels, alpha_grid=None, t_grid=None,
                      exclude_self: bool = False) -> tuple:
    """Exhaustive AUC maximization over the (alpha, t) grid.

    Returns (alpha, t, surface) with surface[i, j] the AUC at
    (alpha_grid[i], t_grid[j]); ties resolve toward smaller alpha, then
    smaller t.
    """
    alphas = tuple(DEFAULT_ALPHA_GRID if alpha_grid is None else alpha_grid)
    ts = tuple(DEFAULT_T_GRID if t_grid is None else t_grid)
    if not alphas or not ts:
        raise ValueError("parameter grids must be nonempty")
    surface = np.zeros((len(alphas), len(ts)))
    for i, alpha in enumerate(alphas):
        for j, t in enumerate(ts):
            try:
                surface[i, j] = auc_for_parameters(
                    table, labels, alpha, t, exclude_self=exclude_self
                )
            except DegenerateSeparation:
                # features collapsed to numerically identical vectors at this
                # scale: chance-level discrimination, never the argmax
                surface[i, j] = 0.5
    best = surface.max()
    candidates = [
        (alphas[i], ts[j]) for i, j in zip(*np.nonzero(surface == best))
    ]
    alpha_best, t_best = min(candidates)
    return alpha_best, t_best, surface


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def save_model_json(model: LdaModel, path) -> None:
    obj = {
        "direction": [float(v) for v in model.direction],
        "class_means": [[float(v) for v in row] for row in model.class_means],
        "feature_kind": model.feature_kind,
        "threshold": model.threshold,
        "t": model.t,
        "taxa": list(model.taxa) if model.taxa is not None else None,
    }
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_model_json(path) -> LdaModel:
    with Path(path).open() as fh:
        obj = json.load(fh)
    return LdaModel(
        direction=np.asarray(obj["direction"], dtype=float),
        class_means=np.asarray(obj["class_means"], dtype=float),
        feature_kind=obj["feature_kind"],
        threshold=obj.get("threshold"),
        t=obj.get("t"),
        taxa=tuple(obj["taxa"]) if obj.get("taxa") else None,
    )


def save_roc_csv(curve: RocCurve, path) -> None:
    """CSV `threshold,fpr,tpr`."""
    lines = ["threshold,fpr,tpr"]
    for thr, f, t in zip(curve.thresholds, curve.fpr, curve.tpr):
        lines.append(f"{thr:.17g},{f:.17g},{t:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_labels_csv(path) -> np.ndarray:
    """CSV with a `label` header and one 0/1 row per sample."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip().lower() for h in header] != ["label"]:
            raise ValueError(f"{path}: expected a single 'label' column")
        labels = [int(row[0]) for row in reader if row]
    return np.asarray(labels)


def save_labels_csv(labels, path) -> None:
    lines = ["label"] + [str(int(v)) for v in labels]
    Path(path).write_text("\n".join(lines) + "\n")
