"""Holdout splitting, core truncation, KNN-1 / LDA classifiers, and CSR stats."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import DenseTensor, matricize_mode


@dataclass
class FeatureMatrix:
    """Samples-by-features matrix with optional per-row class labels."""

    values: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (self.values.shape[0],):
                raise ValueError("labels must have one entry per row")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


def features_from_core(core: DenseTensor, sample_mode: int | None = None,
                       labels=None) -> FeatureMatrix:
    """Matricize a core tensor into one feature row per sample.

    Row q is the canonical (leftmost-fastest) flattening of slice q of the
    sample mode, which defaults to the last mode.
    """
    if sample_mode is None:
        sample_mode = core.order
    view = matricize_mode(core, sample_mode)
    return FeatureMatrix(np.ascontiguousarray(view.matrix), labels=labels)


@dataclass
class LabeledDataset:
    """Same-shape sample tensors with integer class ids in [0, class_count)."""

    samples: list
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.samples) != self.labels.size:
            raise ValueError("one label per sample required")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError("class ids must lie in [0, class_count)")
        shapes = {s.shape for s in self.samples}
        if len(shapes) > 1:
            raise ValueError(f"samples must share one shape, got {sorted(shapes)}")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def sample_shape(self) -> tuple[int, ...]:
        return self.samples[0].shape


def holdout_split(ds: LabeledDataset, ratio: float, seed: int):
    """Class-stratified split holding out `ratio` of each class for testing.

    Deterministic under `seed`; train and test are disjoint and their union
    is the dataset.  Raises if any class would lose all training samples.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"holdout ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for c in range(ds.class_count):
        idx = np.flatnonzero(ds.labels == c)
        if idx.size == 0:
            continue
        n_test = int(idx.size * ratio + 0.5)
        if idx.size - n_test < 1:
            raise ValueError(f"holdout ratio {ratio} leaves class {c} empty in training")
        shuffled = idx[rng.permutation(idx.size)]
        test_idx.extend(shuffled[:n_test].tolist())
        train_idx.extend(shuffled[n_test:].tolist())
    train_idx.sort()
    test_idx.sort()

    def subset(indices):
        return LabeledDataset(
            [ds.samples[i] for i in indices], ds.labels[indices], ds.class_count
        )

    return subset(train_idx), subset(test_idx)


def truncate_core(core: DenseTensor, keep, sample_mode: int | None = None) -> DenseTensor:
    """Keep the leading `keep[m]` indices of each non-sample mode.

    The orthogonal mode spaces are ordered by singular value, so the leading
    indices carry the dominant coordinates; the sample mode is untouched.
    """
    if sample_mode is None:
        sample_mode = core.order
    if not 1 <= sample_mode <= core.order:
        raise ValueError(f"sample mode {sample_mode} out of range")
    keep = tuple(int(k) for k in keep)
    non_sample = [m for m in range(1, core.order + 1) if m != sample_mode]
    if len(keep) != len(non_sample):
        raise ValueError(
            f"keep has {len(keep)} entries, core has {len(non_sample)} non-sample modes"
        )
    slicer = [slice(None)] * core.order
    for k, m in zip(keep, non_sample):
        extent = core.shape[m - 1]
        if not 1 <= k <= extent:
            raise ValueError(f"keep {k} exceeds extent {extent} of mode {m}")
        slicer[m - 1] = slice(0, k)
    return DenseTensor(core.data[tuple(slicer)])


def knn1_classify(train: FeatureMatrix, test: FeatureMatrix) -> np.ndarray:
    """Label each test row by its Euclidean-nearest training row.

    Ties resolve to the lowest training index.
    """
    if train.labels is None:
        raise ValueError("training features need labels")
    if train.n_samples == 0:
        raise ValueError("training set is empty")
    if train.n_features != test.n_features:
        raise ValueError(
            f"feature count mismatch: train {train.n_features}, test {test.n_features}"
        )
    out = np.empty(test.n_samples, dtype=train.labels.dtype)
    block = 256
    for start in range(0, test.n_samples, block):
        chunk = test.values[start : start + block]
        d2 = np.sum((chunk[:, None, :] - train.values[None, :, :]) ** 2, axis=2)
        out[start : start + len(chunk)] = train.labels[np.argmin(d2, axis=1)]
    return out


class SingularScatterError(ValueError):
    """Within-class scatter is singular; refit with ridge > 0."""


@dataclass
class LdaModel:
    classes: np.ndarray
    means: np.ndarray       # (n_classes, n_features)
    weights: np.ndarray     # rows are scatter^{-1} @ mean_c
    bias: np.ndarray        # -mean_c . weights_c / 2 + log prior_c
    ridge: float


def lda_fit(train: FeatureMatrix, ridge: float | None = None) -> LdaModel:
    """Fit linear discriminants from class means and pooled within-class scatter.

    The scatter is the pooled covariance estimate (centered sums divided by
    n - D) plus ridge * I.  The default ridge is 1e-6 * trace / dim, which
    keeps collinear reduced features solvable; passing ridge=0 on singular
    scatter raises SingularScatterError.
    """
    if train.labels is None:
        raise ValueError("training features need labels")
    X = train.values
    classes, counts = np.unique(train.labels, return_counts=True)
    if classes.size < 2:
        raise ValueError("LDA needs at least two classes")
    n, dim = X.shape
    means = np.vstack([X[train.labels == c].mean(axis=0) for c in classes])
    scatter = np.zeros((dim, dim))
    for c, mu in zip(classes, means):
        centered = X[train.labels == c] - mu
        scatter += centered.T @ centered
    dof = max(n - classes.size, 1)
    scatter /= dof
    if ridge is None:
        ridge = 1e-6 * float(np.trace(scatter)) / dim
    reg = scatter + ridge * np.eye(dim)
    try:
        chol = np.linalg.cholesky(reg)
    except np.linalg.LinAlgError as exc:
        if ridge == 0:
            raise SingularScatterError(
                "within-class scatter is singular; refit with ridge > 0"
            ) from exc
        raise
    weights = np.linalg.solve(chol.T, np.linalg.solve(chol, means.T)).T
    priors = counts / n
    bias = -0.5 * np.sum(means * weights, axis=1) + np.log(priors)
    return LdaModel(classes, means, weights, bias, float(ridge))


def lda_predict(model: LdaModel, test: FeatureMatrix) -> np.ndarray:
    if test.n_features != model.means.shape[1]:
        raise ValueError("feature count mismatch with fitted model")
    scores = test.values @ model.weights.T + model.bias
    return model.classes[np.argmax(scores, axis=1)]


@dataclass(frozen=True)
class CsrStat:
    """Classification success rate over one or more trials, in percent."""

    mean: float
    stddev: float
    trials: int

    def __post_init__(self):
        if not 0.0 <= self.mean <= 100.0:
            raise ValueError(f"mean {self.mean} outside [0, 100]")
        if self.stddev < 0.0:
            raise ValueError("stddev must be >= 0")


def csr(predicted, truth) -> float:
    """Percentage of matching labels."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError("prediction/truth length mismatch")
    return float(100.0 * np.mean(predicted == truth))


def aggregate_csr(values) -> CsrStat:
    """Mean and sample standard deviation over trials."""
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise ValueError("no trials to aggregate")
    std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return CsrStat(float(np.mean(values)), std, int(values.size))
