"""Binary subject classifier over document features.

Plain logistic regression trained with full-batch gradient descent on the
L2-regularized log loss. No learned-model dependency: the loss, gradient and
update rule are spelled out here, and training is deterministic given the
same inputs and configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import Diagnostic, TexcorpusError
from .features import FeatureVector

FEATURE_NAMES = (
    "multi_file",
    "comment_word_count",
    "word_count",
    "package_count",
    "newcommand_count",
    "theorem_count",
    "figure_count",
    "author_count",
)


class SingleClass(TexcorpusError):
    """Training labels contain only one class."""


class DegenerateFeatures(TexcorpusError):
    """Every feature column is constant, so nothing can be learned."""


class ShapeMismatch(TexcorpusError):
    """A feature matrix does not match the model's feature count."""


def features_matrix(features: Sequence[FeatureVector]) -> np.ndarray:
    """Feature vectors as a float matrix with FEATURE_NAMES columns."""
    rows = [
        (
            float(fv.multi_file),
            float(fv.comment_word_count),
            float(fv.word_count),
            float(fv.package_count),
            float(fv.newcommand_count),
            float(fv.theorem_count),
            float(fv.figure_count),
            float(fv.author_count),
        )
        for fv in features
    ]
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), len(FEATURE_NAMES))


def labels_for(features: Sequence[FeatureVector], positive: str) -> np.ndarray:
    return np.asarray(
        [1.0 if fv.category == positive else 0.0 for fv in features],
        dtype=np.float64,
    )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    l2: float = 1e-3
    max_epochs: int = 5000
    tol: float = 1e-8


def loss_and_gradient(
    weights: np.ndarray,
    bias: float,
    X: np.ndarray,
    y: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """Regularized logistic loss and its analytic gradient.

    Loss is mean(log(1 + e^z) - y z) + l2/2 ||w||^2 with z = Xw + b,
    computed through logaddexp so large |z| cannot overflow.
    """
    z = X @ weights + bias
    m = len(y)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(
        weights @ weights
    )
    p = _sigmoid(z)
    dz = (p - y) / m
    grad_w = X.T @ dz + l2 * weights
    grad_b = float(np.sum(dz))
    return loss, grad_w, grad_b


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # evaluate each branch only where it is stable
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LogisticModel:
    """A trained classifier: standardization constants plus weights."""

    feature_names: tuple[str, ...]
    weights: np.ndarray
    bias: float
    means: np.ndarray
    stds: np.ndarray
    positive_category: str
    config: TrainConfig
    epochs_run: int
    final_loss: float
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def standardize(self, X: np.ndarray) -> np.ndarray:
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ShapeMismatch(
                f"expected {len(self.feature_names)} feature columns, "
                f"got shape {X.shape}"
            )
        return (X - self.means) / self.stds

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Xs = self.standardize(np.asarray(X, dtype=np.float64))
        return _sigmoid(Xs @ self.weights + self.bias)

    def predict(self, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int64)

    def weight_report(self) -> list[tuple[str, float]]:
        """(feature, weight) pairs, largest magnitude first."""
        pairs = list(zip(self.feature_names, (float(w) for w in self.weights)))
        return sorted(pairs, key=lambda kv: (-abs(kv[1]), kv[0]))


def fit(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: tuple[str, ...] = FEATURE_NAMES,
    positive_category: str = "",
    config: TrainConfig = TrainConfig(),
) -> LogisticModel:
    """Train by full-batch gradient descent from zero-initialized weights.

    Features are standardized to zero mean and unit variance first.
    Constant columns get a unit divisor instead; being identically zero
    after centering, they keep weight zero and a diagnostic records them.
    Stops when an epoch improves the loss by less than ``config.tol`` or
    after ``config.max_epochs``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(feature_names):
        raise ShapeMismatch(
            f"expected {len(feature_names)} feature columns, got shape {X.shape}"
        )
    if len(y) != X.shape[0]:
        raise ShapeMismatch(f"{X.shape[0]} rows but {len(y)} labels")
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClass(f"labels contain only {classes}")

    diagnostics: list[Diagnostic] = []
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    constant = stds == 0.0
    if constant.all():
        raise DegenerateFeatures("every feature column is constant")
    if constant.any():
        names = [name for name, c in zip(feature_names, constant) if c]
        diagnostics.append(
            Diagnostic(
                "fit",
                "constant feature columns carry no signal: " + ", ".join(names),
            )
        )
        stds = np.where(constant, 1.0, stds)
    Xs = (X - means) / stds

    weights = np.zeros(X.shape[1], dtype=np.float64)
    bias = 0.0
    loss, grad_w, grad_b = loss_and_gradient(weights, bias, Xs, y, config.l2)
    epochs = 0
    for epochs in range(1, config.max_epochs + 1):
        weights = weights - config.learning_rate * grad_w
        bias = bias - config.learning_rate * grad_b
        new_loss, grad_w, grad_b = loss_and_gradient(
            weights, bias, Xs, y, config.l2
        )
        if new_loss > loss:
            diagnostics.append(
                Diagnostic(
                    "fit",
                    f"loss rose at epoch {epochs} "
                    f"({loss:.6g} -> {new_loss:.6g}); stopping",
                )
            )
            loss = new_loss
            break
        improved = loss - new_loss
        loss = new_loss
        if improved < config.tol:
            break

    return LogisticModel(
        feature_names=tuple(feature_names),
        weights=weights,
        bias=bias,
        means=means,
        stds=stds,
        positive_category=positive_category,
        config=config,
        epochs_run=epochs,
        final_loss=loss,
        diagnostics=diagnostics,
    )


def train_classifier(
    features: Sequence[FeatureVector],
    positive_category: str,
    config: TrainConfig = TrainConfig(),
) -> LogisticModel:
    """Fit a model predicting membership in ``positive_category``."""
    X = features_matrix(features)
    y = labels_for(features, positive_category)
    return fit(
        X,
        y,
        feature_names=FEATURE_NAMES,
        positive_category=positive_category,
        config=config,
    )


def train_test_split(
    features: Sequence[FeatureVector], test_fraction: float = 0.25, seed: int = 0
) -> tuple[list[FeatureVector], list[FeatureVector]]:
    """Deterministic shuffled split; the test side gets the ceiling."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be strictly between 0 and 1")
    order = np.random.default_rng(seed).permutation(len(features))
    n_test = max(1, int(round(len(features) * test_fraction)))
    test_idx = set(order[:n_test].tolist())
    train = [fv for i, fv in enumerate(features) if i not in test_idx]
    test = [fv for i, fv in enumerate(features) if i in test_idx]
    return train, test


@dataclass(frozen=True)
class EvalReport:
    """Held-out performance of a model."""

    accuracy: float
    true_positive: int
    true_negative: int
    false_positive: int
    false_negative: int
    majority_fraction: float
    n: int
    weight_report: tuple[tuple[str, float], ...]


def evaluate(
    model: LogisticModel, features: Sequence[FeatureVector]
) -> EvalReport:
    """Score the model on labeled feature vectors."""
    if not features:
        raise ValueError("nothing to evaluate")
    X = features_matrix(features)
    y = labels_for(features, model.positive_category)
    predicted = model.predict(X)
    actual = y.astype(np.int64)
    tp = int(np.sum((predicted == 1) & (actual == 1)))
    tn = int(np.sum((predicted == 0) & (actual == 0)))
    fp = int(np.sum((predicted == 1) & (actual == 0)))
    fn = int(np.sum((predicted == 0) & (actual == 1)))
    n = len(features)
    positives = int(actual.sum())
    majority = max(positives, n - positives) / n
    return EvalReport(
        accuracy=(tp + tn) / n,
        true_positive=tp,
        true_negative=tn,
        false_positive=fp,
        false_negative=fn,
        majority_fraction=majority,
        n=n,
        weight_report=tuple(model.weight_report()),
    )


MODEL_SCHEMA = "texcorpus.model.v1"


def save_model(model: LogisticModel, path: str | Path) -> None:
    """Write the model as deterministic JSON."""
    payload = {
        "schema": MODEL_SCHEMA,
        "feature_names": list(model.feature_names),
        "weights": [float(w) for w in model.weights],
        "bias": float(model.bias),
        "means": [float(v) for v in model.means],
        "stds": [float(v) for v in model.stds],
        "positive_category": model.positive_category,
        "config": {
            "learning_rate": model.config.learning_rate,
            "l2": model.config.l2,
            "max_epochs": model.config.max_epochs,
            "tol": model.config.tol,
        },
        "epochs_run": model.epochs_run,
        "final_loss": float(model.final_loss),
        "diagnostics": [str(d) for d in model.diagnostics],
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_model(path: str | Path) -> LogisticModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("schema") != MODEL_SCHEMA:
        raise TexcorpusError(f"unrecognized model schema {payload.get('schema')!r}")
    config = TrainConfig(**payload["config"])
    return LogisticModel(
        feature_names=tuple(payload["feature_names"]),
        weights=np.asarray(payload["weights"], dtype=np.float64),
        bias=float(payload["bias"]),
        means=np.asarray(payload["means"], dtype=np.float64),
        stds=np.asarray(payload["stds"], dtype=np.float64),
        positive_category=payload["positive_category"],
        config=config,
        epochs_run=int(payload["epochs_run"]),
        final_loss=float(payload["final_loss"]),
        diagnostics=[],
    )
