"""Incremental learners over fixed feature embeddings.

Four algorithms behind one exemplar-free contract (``learn_step`` sees only
the current step's training data):

* ``StreamingLDA`` — per-sample class means and shared scatter with
  shrinkage, linear discriminant prediction.
* ``FeTrILLite`` — frozen class means plus a linear head retrained each
  step on real new-class features and translated pseudo-features for past
  classes.
* ``BSILLite`` — cosine-normalized linear head trained with a
  balanced-softmax cross-entropy on new-class features and an L2 anchor
  that ties previous class weights to their snapshot. A feature-space
  stand-in for fine-tuning-based methods.
* ``NearestClassMean`` — running class means, nearest-mean prediction.

Ties in every argmax go to the lowest class id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import Scenario, partition_dataset


class LearnerError(RuntimeError):
    """Raised for invalid learner usage or diverging training."""


# ---------------------------------------------------------------------------
# Accuracy bookkeeping


@dataclass
class AccuracyMatrix:
    """Lower-triangular accuracies A[k][i] plus cumulative row accuracies.

    ``per_subset[k-1, i-1]`` is the accuracy of the model after step k on
    the test samples of step i (defined for i <= k, NaN above the
    diagonal). ``cumulative[k-1]`` is the accuracy on all test samples of
    steps 1..k.
    """

    per_subset: np.ndarray
    cumulative: np.ndarray

    @property
    def n_steps(self) -> int:
        return int(self.cumulative.shape[0])

    def accuracy(self, k: int, i: int) -> float:
        """A[k][i] with 1-based step/subset indices, i <= k."""
        if not (1 <= i <= k <= self.n_steps):
            raise IndexError(f"subset accuracy undefined for k={k}, i={i}")
        return float(self.per_subset[k - 1, i - 1])

    def cumulative_accuracy(self, k: int) -> float:
        if not (1 <= k <= self.n_steps):
            raise IndexError(f"step {k} out of range 1..{self.n_steps}")
        return float(self.cumulative[k - 1])

    def validate(self) -> None:
        k = self.n_steps
        if self.per_subset.shape != (k, k):
            raise ValueError("per-subset matrix must be K x K")
        lower = np.tril_indices(k)
        vals = self.per_subset[lower]
        if not np.all((vals >= 0) & (vals <= 1)):
            raise ValueError("accuracies must lie in [0, 1]")
        if not np.all(np.isnan(self.per_subset[np.triu_indices(k, 1)])):
            raise ValueError("entries above the diagonal must be NaN")
        if not np.all((self.cumulative >= 0) & (self.cumulative <= 1)):
            raise ValueError("cumulative accuracies must lie in [0, 1]")

    def to_csv_text(self) -> str:
        lines = ["step,subset,accuracy"]
        for k in range(1, self.n_steps + 1):
            for i in range(1, k + 1):
                lines.append(f"{k},{i},{self.accuracy(k, i)!r}")
            lines.append(f"{k},cumulative,{self.cumulative_accuracy(k)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv_text(cls, text: str) -> "AccuracyMatrix":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "step,subset,accuracy":
            raise ValueError("malformed accuracy-matrix CSV")
        entries: dict[tuple[int, str], float] = {}
        k_max = 0
        for ln in lines[1:]:
            step_s, subset, acc_s = ln.split(",")
            entries[(int(step_s), subset)] = float(acc_s)
            k_max = max(k_max, int(step_s))
        per_subset = np.full((k_max, k_max), np.nan)
        cumulative = np.full(k_max, np.nan)
        for (k, subset), acc in entries.items():
            if subset == "cumulative":
                cumulative[k - 1] = acc
            else:
                per_subset[k - 1, int(subset) - 1] = acc
        matrix = cls(per_subset=per_subset, cumulative=cumulative)
        matrix.validate()
        return matrix


def argmax_by_class(scores: np.ndarray, class_ids: np.ndarray) -> np.ndarray:
    """Row-wise argmax over score columns; ties resolved to the lowest id."""
    order = np.argsort(class_ids, kind="stable")
    sorted_ids = class_ids[order]
    best = np.argmax(scores[:, order], axis=1)
    return sorted_ids[best]


# ---------------------------------------------------------------------------
# Streaming LDA


class StreamingLDA:
    """Streaming linear discriminant classifier with shrinkage.

    Class means and the shared scatter accumulate one sample at a time
    (Welford updates), so the final state matches a batch fit over the
    same samples up to float rounding regardless of arrival order.
    """

    def __init__(self, shrinkage: float = 1e-4):
        if shrinkage < 0 or shrinkage > 1:
            raise LearnerError(f"shrinkage must lie in [0, 1], got {shrinkage}")
        self.shrinkage = float(shrinkage)
        self.dim: int | None = None
        self.means: dict[int, np.ndarray] = {}
        self.counts: dict[int, int] = {}
        self.scatter: np.ndarray | None = None
        self.total = 0

    @property
    def known_classes(self) -> np.ndarray:
        return np.array(sorted(self.means), dtype=np.int64)

    def learn_step(self, features: np.ndarray, labels: np.ndarray) -> None:
        if features.shape[0] == 0:
            raise LearnerError("empty training step")
        if self.dim is None:
            self.dim = int(features.shape[1])
            self.scatter = np.zeros((self.dim, self.dim))
        for x, c in zip(features, labels):
            c = int(c)
            if c not in self.means:
                self.means[c] = np.zeros(self.dim)
                self.counts[c] = 0
            n_old = self.counts[c]
            delta = x - self.means[c]
            self.means[c] = self.means[c] + delta / (n_old + 1)
            self.scatter += (n_old / (n_old + 1)) * np.outer(delta, delta)
            self.counts[c] = n_old + 1
            self.total += 1

    def covariance(self) -> np.ndarray:
        """Pooled within-class covariance (population normalization)."""
        if self.total == 0:
            raise LearnerError("predict before any update")
        return self.scatter / self.total

    def _precision(self) -> np.ndarray:
        sigma = self.covariance()
        shrunk = (1.0 - self.shrinkage) * sigma + self.shrinkage * np.eye(self.dim)
        try:
            chol = np.linalg.cholesky(shrunk)
        except np.linalg.LinAlgError:
            raise LearnerError(
                "shrunk scatter is singular; use shrinkage > 0 to guarantee invertibility"
            ) from None
        identity = np.eye(self.dim)
        half = np.linalg.solve(chol, identity)
        return half.T @ half

    def discriminant_parameters(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sorted class ids, weight rows w_c = Lambda mu_c, biases -mu'Lambda mu/2)."""
        if self.total == 0:
            raise LearnerError("predict before any update")
        ids = self.known_classes
        if len(ids) < 2:
            raise LearnerError(f"prediction needs at least 2 known classes, have {len(ids)}")
        precision = self._precision()
        mu = np.stack([self.means[int(c)] for c in ids])
        weights = mu @ precision
        biases = -0.5 * np.einsum("ij,ij->i", weights, mu)
        return ids, weights, biases

    def predict(self, features: np.ndarray) -> np.ndarray:
        ids, weights, biases = self.discriminant_parameters()
        scores = features @ weights.T + biases
        return argmax_by_class(scores, ids)


# ---------------------------------------------------------------------------
# Nearest class mean


class NearestClassMean:
    """Running class means with nearest-mean prediction."""

    def __init__(self):
        self.means: dict[int, np.ndarray] = {}
        self.counts: dict[int, int] = {}

    @property
    def known_classes(self) -> np.ndarray:
        return np.array(sorted(self.means), dtype=np.int64)

    def learn_step(self, features: np.ndarray, labels: np.ndarray) -> None:
        if features.shape[0] == 0:
            raise LearnerError("empty training step")
        for c in np.unique(labels):
            c = int(c)
            block = features[labels == c]
            n_new = block.shape[0]
            n_old = self.counts.get(c, 0)
            if n_old == 0:
                self.means[c] = block.mean(axis=0)
            else:
                self.means[c] = (n_old * self.means[c] + block.sum(axis=0)) / (n_old + n_new)
            self.counts[c] = n_old + n_new

    def predict(self, features: np.ndarray) -> np.ndarray:
        if not self.means:
            raise LearnerError("predict before any update")
        ids = self.known_classes
        mu = np.stack([self.means[int(c)] for c in ids])
        # argmin distance == argmax of the negated squared distance
        scores = features @ mu.T - 0.5 * np.sum(mu * mu, axis=1)
        return argmax_by_class(scores, ids)


# ---------------------------------------------------------------------------
# FeTrIL-style pseudo-feature head


def select_source_class(
    target_mean: np.ndarray, candidate_ids: np.ndarray, candidate_means: np.ndarray
) -> int:
    """Candidate whose mean is most cosine-similar to ``target_mean``.

    Falls back to the Euclidean nearest mean when the cosine is undefined
    (zero-norm target or no nonzero-norm candidate). Ties go to the lowest
    candidate id.
    """
    order = np.argsort(candidate_ids, kind="stable")
    ids = candidate_ids[order]
    means = candidate_means[order]
    norms = np.linalg.norm(means, axis=1)
    t_norm = np.linalg.norm(target_mean)
    if t_norm > 0 and np.any(norms > 0):
        sims = np.full(len(ids), -np.inf)
        ok = norms > 0
        sims[ok] = (means[ok] @ target_mean) / (norms[ok] * t_norm)
        return int(ids[np.argmax(sims)])
    d2 = np.sum((means - target_mean) ** 2, axis=1)
    return int(ids[np.argmin(d2)])


def translate_pseudo_features(
    source_features: np.ndarray, source_mean: np.ndarray, target_mean: np.ndarray
) -> np.ndarray:
    """Shift source samples so their batch mean lands on ``target_mean``."""
    return source_features + (target_mean - source_mean)


def fit_softmax_head(
    features: np.ndarray,
    class_idx: np.ndarray,
    n_classes: int,
    lr: float,
    epochs: int,
    weight_decay: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Multinomial logistic regression by full-batch gradient descent.

    Zero-initialized, hence deterministic. Returns (weights, biases).
    """
    n, dim = features.shape
    weights = np.zeros((n_classes, dim))
    biases = np.zeros(n_classes)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), class_idx] = 1.0
    for _ in range(epochs):
        logits = features @ weights.T + biases
        logits -= logits.max(axis=1, keepdims=True)
        expz = np.exp(logits)
        probs = expz / expz.sum(axis=1, keepdims=True)
        grad = (probs - onehot) / n
        weights -= lr * (grad.T @ features + weight_decay * weights)
        biases -= lr * grad.sum(axis=0)
    return weights, biases


class FeTrILLite:
    """Frozen class means plus a pseudo-feature-trained linear head.

    Each step stores the new classes' means, manufactures pseudo-features
    for every past class by translating the current step's most similar
    class, and retrains the multinomial logistic head from scratch on
    real new features plus pseudo past features.
    """

    def __init__(self, lr: float = 0.1, epochs: int = 200, weight_decay: float = 1e-4):
        if lr <= 0 or epochs < 1 or weight_decay < 0:
            raise LearnerError("invalid head-training hyperparameters")
        self.lr = float(lr)
        self.epochs = int(epochs)
        self.weight_decay = float(weight_decay)
        self.means: dict[int, np.ndarray] = {}
        self.head_weights: np.ndarray | None = None
        self.head_biases: np.ndarray | None = None

    @property
    def known_classes(self) -> np.ndarray:
        return np.array(sorted(self.means), dtype=np.int64)

    def learn_step(self, features: np.ndarray, labels: np.ndarray) -> None:
        if features.shape[0] == 0:
            raise LearnerError("empty training step")
        new_ids = sorted(int(c) for c in np.unique(labels))
        overlap = [c for c in new_ids if c in self.means]
        if overlap:
            raise LearnerError(f"classes {overlap} were already learned in an earlier step")

        step_means = {c: features[labels == c].mean(axis=0) for c in new_ids}
        cand_ids = np.array(new_ids, dtype=np.int64)
        cand_means = np.stack([step_means[c] for c in new_ids])

        train_x = [features]
        train_y = [labels.astype(np.int64)]
        for past_id in sorted(self.means):
            src = select_source_class(self.means[past_id], cand_ids, cand_means)
            pseudo = translate_pseudo_features(
                features[labels == src], step_means[src], self.means[past_id]
            )
            train_x.append(pseudo)
            train_y.append(np.full(pseudo.shape[0], past_id, dtype=np.int64))

        for c in new_ids:
            self.means[c] = step_means[c]

        all_ids = self.known_classes
        x = np.concatenate(train_x)
        y = np.concatenate(train_y)
        class_idx = np.searchsorted(all_ids, y)
        self.head_weights, self.head_biases = fit_softmax_head(
            x, class_idx, len(all_ids), self.lr, self.epochs, self.weight_decay
        )

    def predict(self, features: np.ndarray) -> np.ndarray:
        if self.head_weights is None:
            raise LearnerError("predict before any update")
        scores = features @ self.head_weights.T + self.head_biases
        return argmax_by_class(scores, self.known_classes)


# ---------------------------------------------------------------------------
# BSIL-style balanced-softmax cosine head


def _unit_rows(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(arr, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return arr / safe[:, None], safe


def balanced_softmax_anchor_loss(
    weights: np.ndarray,
    scale: float,
    features: np.ndarray,
    class_idx: np.ndarray,
    class_counts: np.ndarray,
    anchor_mask: np.ndarray,
    anchor_weights: np.ndarray,
    anchor_strength: float,
) -> tuple[float, np.ndarray, float]:
    """Loss and analytic gradients of the cosine-head training objective.

    Logits are ``scale * cos(weights_c, x)`` offset by ``log(count_c)``
    inside the softmax (balanced softmax); rows flagged in ``anchor_mask``
    pay ``anchor_strength * ||w_c - anchor_c||^2``. Returns
    ``(loss, d loss / d weights, d loss / d scale)``.
    """
    n = features.shape[0]
    unit_w, w_norms = _unit_rows(weights)
    unit_x, _ = _unit_rows(features)
    cosines = unit_x @ unit_w.T  # (n, C)
    logits = scale * cosines + np.log(class_counts)
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    probs = expz / expz.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(expz.sum(axis=1, keepdims=True))
    ce = -log_probs[np.arange(n), class_idx].mean()

    grad_logits = probs.copy()
    grad_logits[np.arange(n), class_idx] -= 1.0
    grad_logits /= n

    # d cos/d w_c = (x_hat - (u_c . x_hat) u_c) / ||w_c||
    weighted_x = unit_x.T @ grad_logits  # (d, C)
    diag_coef = np.sum(grad_logits * cosines, axis=0)  # (C,)
    grad_w = scale * (weighted_x.T - diag_coef[:, None] * unit_w) / w_norms[:, None]
    grad_scale = float(np.sum(grad_logits * cosines))

    loss = ce
    if np.any(anchor_mask):
        diff = weights[anchor_mask] - anchor_weights[anchor_mask]
        loss += anchor_strength * float(np.sum(diff * diff))
        grad_w[anchor_mask] += 2.0 * anchor_strength * diff
    return float(loss), grad_w, grad_scale


class BSILLite:
    """Cosine head with balanced softmax and an anchor on past weights.

    Trains on the current step's features only. The balanced softmax
    offsets each class logit by the log of its cumulative train count;
    the anchor term replaces feature distillation by pulling previous
    class weight rows toward their pre-step snapshot.
    """

    def __init__(
        self,
        lr: float = 0.1,
        epochs: int = 200,
        anchor_strength: float = 0.1,
        scale_init: float = 2.0,
    ):
        if lr <= 0 or epochs < 1 or anchor_strength < 0 or scale_init <= 0:
            raise LearnerError("invalid cosine-head hyperparameters")
        self.lr = float(lr)
        self.epochs = int(epochs)
        self.anchor_strength = float(anchor_strength)
        self.scale = float(scale_init)
        self.weights: dict[int, np.ndarray] = {}
        self.counts: dict[int, int] = {}
        self.steps_seen = 0

    @property
    def known_classes(self) -> np.ndarray:
        return np.array(sorted(self.weights), dtype=np.int64)

    def learn_step(self, features: np.ndarray, labels: np.ndarray) -> None:
        if features.shape[0] == 0:
            raise LearnerError("empty training step")
        self.steps_seen += 1
        new_ids = sorted(int(c) for c in np.unique(labels))
        overlap = [c for c in new_ids if c in self.weights]
        if overlap:
            raise LearnerError(f"classes {overlap} were already learned in an earlier step")

        old_ids = sorted(self.weights)
        for c in new_ids:
            mean = features[labels == c].mean(axis=0)
            norm = np.linalg.norm(mean)
            # imprint init: unit-norm class prototype (keeps the training
            # dynamics independent of the feature scale)
            self.weights[c] = mean / norm if norm > 0 else mean
            self.counts[c] = int(np.sum(labels == c))

        all_ids = self.known_classes
        weight_mat = np.stack([self.weights[int(c)] for c in all_ids])
        count_vec = np.array([self.counts[int(c)] for c in all_ids], dtype=float)
        anchor_mask = np.isin(all_ids, old_ids)
        snapshot = weight_mat.copy()
        class_idx = np.searchsorted(all_ids, labels)

        for _ in range(self.epochs):
            loss, grad_w, grad_scale = balanced_softmax_anchor_loss(
                weight_mat,
                self.scale,
                features,
                class_idx,
                count_vec,
                anchor_mask,
                snapshot,
                self.anchor_strength,
            )
            if not math.isfinite(loss):
                raise LearnerError(
                    f"non-finite loss at incremental step {self.steps_seen} (lr={self.lr})"
                )
            # gradient step on the data term; the quadratic anchor is applied
            # as an exact proximal shrink, stable for any anchor strength
            grad_data = grad_w
            if self.anchor_strength > 0:
                grad_data = grad_w.copy()
                grad_data[anchor_mask] -= (
                    2.0 * self.anchor_strength * (weight_mat[anchor_mask] - snapshot[anchor_mask])
                )
            weight_mat -= self.lr * grad_data
            self.scale = max(self.scale - self.lr * grad_scale, 1e-3)
            if self.anchor_strength > 0:
                shrink = 1.0 / (1.0 + 2.0 * self.lr * self.anchor_strength)
                weight_mat[anchor_mask] = snapshot[anchor_mask] + shrink * (
                    weight_mat[anchor_mask] - snapshot[anchor_mask]
                )

        for c, row in zip(all_ids, weight_mat):
            self.weights[int(c)] = row

    def predict(self, features: np.ndarray) -> np.ndarray:
        if not self.weights:
            raise LearnerError("predict before any update")
        ids = self.known_classes
        unit_w, _ = _unit_rows(np.stack([self.weights[int(c)] for c in ids]))
        unit_x, _ = _unit_rows(features)
        return argmax_by_class(unit_x @ unit_w.T, ids)


# ---------------------------------------------------------------------------
# Process runner

LEARNER_KINDS = ("dslda", "fetril", "bsil", "ncm")

_CONSTRUCTORS = {
    "dslda": StreamingLDA,
    "fetril": FeTrILLite,
    "bsil": BSILLite,
    "ncm": NearestClassMean,
}


def make_learner(kind: str, hyperparams: dict | None = None):
    if kind not in _CONSTRUCTORS:
        raise LearnerError(f"unknown learner kind {kind!r}; expected one of {LEARNER_KINDS}")
    params = dict(hyperparams or {})
    params.pop("seed", None)  # runs are deterministic; seed is provenance only
    try:
        return _CONSTRUCTORS[kind](**params)
    except TypeError as exc:
        raise LearnerError(f"invalid hyperparameters for {kind}: {exc}") from None


def run_incremental(
    kind: str,
    ds,
    sc: Scenario,
    hyperparams: dict | None = None,
) -> AccuracyMatrix:
    """Run a full incremental process and collect the accuracy matrix.

    After each step k the model is evaluated on every test subset i <= k
    and on the cumulative test set of steps 1..k.
    """
    learner = make_learner(kind, hyperparams)
    views = partition_dataset(ds, sc)
    k_total = sc.n_steps

    # step index for every test label, for per-subset accuracy slicing
    label_to_step = {c: k for k, step in enumerate(sc.steps, start=1) for c in step}

    per_subset = np.full((k_total, k_total), np.nan)
    cumulative = np.full(k_total, np.nan)
    for view in views:
        k = view.step_index
        try:
            learner.learn_step(view.train_features, view.train_labels)
            predictions = learner.predict(view.test_features)
        except LearnerError as exc:
            raise LearnerError(f"step {k}: {exc}") from exc
        hits = predictions == view.test_labels
        subset_of = np.array([label_to_step[int(c)] for c in view.test_labels])
        for i in range(1, k + 1):
            mask = subset_of == i
            per_subset[k - 1, i - 1] = float(hits[mask].mean())
        cumulative[k - 1] = float(hits.mean())

    matrix = AccuracyMatrix(per_subset=per_subset, cumulative=cumulative)
    matrix.validate()
    return matrix
