"""Figure classification over precomputed feature vectors: Gaussian naive
Bayes, one-vs-rest logistic regression, an MLP with analytic gradients,
plus the coarse/fine cascade."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .evalmetrics import confusion_matrix

FIGURE_CATEGORIES = ["NeuronsPlot", "Box2D", "Stacked2D", "Box3D", "Pipeline"]


class DegenerateData(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class ModelNotLoaded(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# dataset


@dataclass
class FeatureDataset:
    X: np.ndarray
    y: np.ndarray
    label_names: list[str]
    seed: int = 0
    _splits: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if len(self.X) != len(self.y):
            raise DimensionMismatch("vectors and labels disagree in length")
        n = len(self.y)
        perm = np.random.default_rng(self.seed).permutation(n)
        n_train = int(round(0.6 * n))
        n_val = int(round(0.2 * n))
        self._splits = {
            "train": perm[:n_train],
            "val": perm[n_train : n_train + n_val],
            "test": perm[n_train + n_val :],
        }

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def split(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self._splits[name]
        return self.X[idx], self.y[idx]


# ---------------------------------------------------------------------------
# Gaussian naive Bayes


class GaussianNB:
    def fit(self, X: np.ndarray, y: np.ndarray) -> "GaussianNB":
        classes = np.unique(y)
        if len(classes) < 2:
            raise DegenerateData("training split contains a single class")
        self.classes_ = classes
        self.means_ = np.stack([X[y == c].mean(axis=0) for c in classes])
        var = np.stack([X[y == c].var(axis=0) for c in classes])
        # floor variances so constant features do not blow up the density
        floor = 1e-9 * max(X.var(axis=0).max(), 1e-12)
        self.vars_ = np.maximum(var, floor)
        self.priors_ = np.array([(y == c).mean() for c in classes])
        return self

    def _check(self, X):
        if X.shape[1] != self.means_.shape[1]:
            raise DimensionMismatch(
                f"model expects {self.means_.shape[1]} features, got {X.shape[1]}"
            )

    def log_proba(self, X: np.ndarray) -> np.ndarray:
        self._check(X)
        out = np.empty((len(X), len(self.classes_)))
        for k in range(len(self.classes_)):
            diff = X - self.means_[k]
            out[:, k] = (
                np.log(self.priors_[k])
                - 0.5 * np.sum(np.log(2 * np.pi * self.vars_[k]))
                - 0.5 * np.sum(diff**2 / self.vars_[k], axis=1)
            )
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[self.log_proba(X).argmax(axis=1)]

    def to_arrays(self) -> dict:
        return {
            "classes": self.classes_, "means": self.means_,
            "vars": self.vars_, "priors": self.priors_,
        }

    @classmethod
    def from_arrays(cls, arrs) -> "GaussianNB":
        m = cls()
        m.classes_ = arrs["classes"]
        m.means_, m.vars_, m.priors_ = arrs["means"], arrs["vars"], arrs["priors"]
        return m


# ---------------------------------------------------------------------------
# one-vs-rest logistic regression, plain gradient descent


class LogisticRegressionOvR:
    def __init__(self, learning_rate: float = 0.2, epochs: int = 500, l2: float = 0.1):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticRegressionOvR":
        classes = np.unique(y)
        if len(classes) < 2:
            raise DegenerateData("training split contains a single class")
        self.classes_ = classes
        n, d = X.shape
        self.W_ = np.zeros((len(classes), d))
        self.b_ = np.zeros(len(classes))
        for k, c in enumerate(classes):
            t = (y == c).astype(np.float64)
            w = np.zeros(d)
            b = 0.0
            for _ in range(self.epochs):
                z = np.clip(X @ w + b, -500, 500)
                p = 1.0 / (1.0 + np.exp(-z))
                err = p - t
                w -= self.learning_rate * (X.T @ err / n + self.l2 * w)
                b -= self.learning_rate * err.mean()
            self.W_[k], self.b_[k] = w, b
        return self

    def decision(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.W_.shape[1]:
            raise DimensionMismatch(
                f"model expects {self.W_.shape[1]} features, got {X.shape[1]}"
            )
        return X @ self.W_.T + self.b_

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[self.decision(X).argmax(axis=1)]

    def to_arrays(self) -> dict:
        return {"classes": self.classes_, "W": self.W_, "b": self.b_}

    @classmethod
    def from_arrays(cls, arrs) -> "LogisticRegressionOvR":
        m = cls()
        m.classes_, m.W_, m.b_ = arrs["classes"], arrs["W"], arrs["b"]
        return m


# ---------------------------------------------------------------------------
# MLP


@dataclass
class MlpSpec:
    hidden: tuple[int, ...] = (1024, 256)
    learning_rate: float = 0.005
    epochs: int = 30
    batch_size: int = 64
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if any(h <= 0 for h in self.hidden):
            raise ValueError("hidden sizes must be positive")


class Mlp:
    """Fully connected rectifier network with softmax output, trained by
    mini-batch gradient descent with momentum."""

    def __init__(self, spec: MlpSpec | None = None):
        self.spec = spec or MlpSpec()

    def _init_params(self, d_in: int, n_classes: int) -> None:
        rng = np.random.default_rng(self.spec.seed)
        sizes = [d_in, *self.spec.hidden, n_classes]
        self.W_ = [
            rng.normal(0, np.sqrt(2.0 / sizes[i]), (sizes[i], sizes[i + 1]))
            for i in range(len(sizes) - 1)
        ]
        self.b_ = [np.zeros(s) for s in sizes[1:]]

    def _forward(self, X: np.ndarray):
        acts = [X]
        a = X
        for i in range(len(self.W_) - 1):
            a = np.maximum(a @ self.W_[i] + self.b_[i], 0.0)
            acts.append(a)
        logits = a @ self.W_[-1] + self.b_[-1]
        return acts, logits

    @staticmethod
    def _softmax(z: np.ndarray) -> np.ndarray:
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray):
        """Mean cross-entropy and analytic gradients for every parameter."""
        n = len(X)
        acts, logits = self._forward(X)
        p = self._softmax(logits)
        loss = -np.mean(np.log(p[np.arange(n), y] + 1e-300))
        delta = p.copy()
        delta[np.arange(n), y] -= 1.0
        delta /= n
        gW = [None] * len(self.W_)
        gb = [None] * len(self.b_)
        for i in range(len(self.W_) - 1, -1, -1):
            gW[i] = acts[i].T @ delta
            gb[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.W_[i].T) * (acts[i] > 0)
        return loss, gW, gb

    def fit(self, X: np.ndarray, y: np.ndarray) -> "Mlp":
        classes = np.unique(y)
        if len(classes) < 2:
            raise DegenerateData("training split contains a single class")
        self.classes_ = classes
        remap = {c: i for i, c in enumerate(classes)}
        t = np.array([remap[v] for v in y])
        self._init_params(X.shape[1], len(classes))
        vW = [np.zeros_like(w) for w in self.W_]
        vb = [np.zeros_like(b) for b in self.b_]
        rng = np.random.default_rng(self.spec.seed + 1)
        n = len(X)
        for _ in range(self.spec.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.spec.batch_size):
                idx = order[start : start + self.spec.batch_size]
                _, gW, gb = self.loss_and_grads(X[idx], t[idx])
                for i in range(len(self.W_)):
                    vW[i] = self.spec.momentum * vW[i] - self.spec.learning_rate * gW[i]
                    vb[i] = self.spec.momentum * vb[i] - self.spec.learning_rate * gb[i]
                    self.W_[i] += vW[i]
                    self.b_[i] += vb[i]
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.W_[0].shape[0]:
            raise DimensionMismatch(
                f"model expects {self.W_[0].shape[0]} features, got {X.shape[1]}"
            )
        _, logits = self._forward(X)
        return self._softmax(logits)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    def to_arrays(self) -> dict:
        out = {"classes": self.classes_, "spec": np.frombuffer(
            json.dumps(asdict(self.spec)).encode(), dtype=np.uint8)}
        for i, (w, b) in enumerate(zip(self.W_, self.b_)):
            out[f"W{i}"] = w
            out[f"b{i}"] = b
        return out

    @classmethod
    def from_arrays(cls, arrs) -> "Mlp":
        spec_dict = json.loads(bytes(arrs["spec"]).decode())
        spec_dict["hidden"] = tuple(spec_dict["hidden"])
        m = cls(MlpSpec(**spec_dict))
        m.classes_ = arrs["classes"]
        m.W_, m.b_ = [], []
        i = 0
        while f"W{i}" in arrs:
            m.W_.append(np.array(arrs[f"W{i}"]))
            m.b_.append(np.array(arrs[f"b{i}"]))
            i += 1
        return m


# ---------------------------------------------------------------------------
# train / evaluate / persist

_ALGORITHMS = {
    "naive_bayes": lambda **kw: GaussianNB(),
    "logistic_regression": LogisticRegressionOvR,
    "mlp": lambda spec=None, **kw: Mlp(spec),
}

_MODEL_KINDS = {
    GaussianNB: "naive_bayes",
    LogisticRegressionOvR: "logistic_regression",
    Mlp: "mlp",
}


def train(dataset: FeatureDataset, algorithm: str, **kwargs):
    if algorithm not in _ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; options: {sorted(_ALGORITHMS)}")
    model = _ALGORITHMS[algorithm](**kwargs)
    X, y = dataset.split("train")
    return model.fit(X, y)


def evaluate(model, dataset: FeatureDataset) -> dict:
    """Accuracy and confusion matrix (rows = ground truth) per split."""
    report = {}
    for split in ("train", "val", "test"):
        X, y = dataset.split(split)
        pred = model.predict(X)
        m = confusion_matrix(y, pred, dataset.n_classes)
        report[split] = {
            "accuracy": float((pred == y).mean()) if len(y) else 0.0,
            "confusion": m.tolist(),
        }
    return report


def save_model(model, path) -> None:
    kind = _MODEL_KINDS.get(type(model))
    if kind is None:
        raise ValueError(f"unsupported model type {type(model).__name__}")
    arrs = model.to_arrays()
    np.savez(path, kind=np.frombuffer(kind.encode(), dtype=np.uint8), **arrs)


def load_model(path):
    arrs = np.load(path, allow_pickle=False)
    kind = bytes(arrs["kind"]).decode()
    cls = {v: k for k, v in _MODEL_KINDS.items()}[kind]
    return cls.from_arrays(arrs)


# ---------------------------------------------------------------------------
# coarse/fine cascade


class Cascade:
    """Binary design-flow gate followed by the five-way figure classifier;
    the fine stage only runs on coarse positives."""

    def __init__(self, coarse=None, fine=None, categories: list[str] | None = None):
        self.coarse = coarse
        self.fine = fine
        self.categories = categories or FIGURE_CATEGORIES
        self.fine_calls = 0

    def coarse_classify(self, features: np.ndarray) -> bool:
        if self.coarse is None:
            raise ModelNotLoaded("coarse model missing")
        return bool(self.coarse.predict(np.atleast_2d(features))[0] == 1)

    def fine_classify(self, features: np.ndarray) -> str:
        if self.fine is None:
            raise ModelNotLoaded("fine model missing")
        self.fine_calls += 1
        idx = int(self.fine.predict(np.atleast_2d(features))[0])
        return self.categories[idx]

    def classify(self, features: np.ndarray) -> str | None:
        """Category for design-flow figures, None for coarse negatives."""
        if not self.coarse_classify(features):
            return None
        return self.fine_classify(features)
