"""Nine binary classifier families behind one fit / predict interface.

Default hyperparameters (used when a key is omitted):

============  ==========================================================
family        defaults
============  ==========================================================
svm_rbf       C=1.0, gamma="auto" (1 / n_columns), tol=1e-3
rf            n_estimators=100, max_depth=None, min_samples_leaf=1,
              max_features="sqrt" (ceil(sqrt(n_columns)))
brf           as rf, plus sampling_strategy="under"
lr            l2=1.0, max_iter=5000, tol=1e-6
adaboost      n_estimators=50, learning_rate=1.0
knn           k=5
dt            max_depth=None, min_samples_leaf=1, max_features=None
gnb           var_smoothing=1e-9
qda           reg=1e-9
============  ==========================================================
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from ..errors import BadHyperparameter, DimensionMismatch, SingleClassTraining
from ..rng import make_rng
from .boosting import AdaBoost
from .gaussian import QDA, GaussianNB
from .linear import LogisticRegression
from .neighbors import KNearestNeighbors
from .svm import SVM
from .trees import BalancedRandomForest, DecisionTree, RandomForest

FORMAT_NAME = "rare_event.model"
FORMAT_VERSION = 1


def _pos_float(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v > 0


def _nonneg_float(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v >= 0


def _pos_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= 1


def _depth(v):
    return v is None or _pos_int(v)


def _max_features(v):
    return v is None or v == "sqrt" or _pos_int(v)


def _gamma(v):
    return v == "auto" or _pos_float(v)


def _choice(*options) -> Callable[[Any], bool]:
    return lambda v: v in options


_TREE = {
    "max_depth": (None, _depth),
    "min_samples_leaf": (1, _pos_int),
}

SCHEMAS: dict[str, dict[str, tuple[Any, Callable[[Any], bool]]]] = {
    "svm_rbf": {
        "C": (1.0, _pos_float),
        "gamma": ("auto", _gamma),
        "tol": (1e-3, _pos_float),
        "max_iter": (200_000, _pos_int),
    },
    "rf": {"n_estimators": (100, _pos_int), **_TREE, "max_features": ("sqrt", _max_features)},
    "brf": {
        "n_estimators": (100, _pos_int),
        **_TREE,
        "max_features": ("sqrt", _max_features),
        "sampling_strategy": ("under", _choice("under", "over")),
    },
    "lr": {
        "l2": (1.0, _nonneg_float),
        "max_iter": (5000, _pos_int),
        "tol": (1e-6, _pos_float),
    },
    "adaboost": {"n_estimators": (50, _pos_int), "learning_rate": (1.0, _pos_float)},
    "knn": {"k": (5, _pos_int)},
    "dt": {**_TREE, "max_features": (None, _max_features)},
    "gnb": {"var_smoothing": (1e-9, _nonneg_float)},
    "qda": {"reg": (1e-9, _nonneg_float)},
}

_BUILDERS: dict[str, Callable[..., Any]] = {
    "svm_rbf": SVM,
    "rf": RandomForest,
    "brf": BalancedRandomForest,
    "lr": LogisticRegression,
    "adaboost": AdaBoost,
    "knn": KNearestNeighbors,
    "dt": DecisionTree,
    "gnb": GaussianNB,
    "qda": QDA,
}

FAMILIES = tuple(SCHEMAS)
NEEDS_BOTH_CLASSES = frozenset({"lr", "svm_rbf", "adaboost"})


def _plain(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


@dataclass(frozen=True)
class ClassifierSpec:
    """A classifier family with fully resolved hyperparameters and a seed.

    Omitted hyperparameters take the family default; unknown keys or values
    outside the allowed range raise :class:`BadHyperparameter`. Hyperparameters
    are also readable as attributes (``spec.k``).
    """

    family: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in SCHEMAS:
            raise BadHyperparameter(f"unknown classifier family {self.family!r}")
        schema = SCHEMAS[self.family]
        unknown = set(self.hyperparameters) - set(schema)
        if unknown:
            raise BadHyperparameter(f"{self.family}: unknown hyperparameters {sorted(unknown)}")
        resolved = {}
        for key, (default, check) in schema.items():
            value = _plain(self.hyperparameters.get(key, default))
            if not check(value):
                raise BadHyperparameter(f"{self.family}: invalid value {value!r} for {key}")
            resolved[key] = value
        object.__setattr__(self, "hyperparameters", resolved)

    def __getattr__(self, name):
        hp = self.__dict__.get("hyperparameters", {})
        if name in hp:
            return hp[name]
        raise AttributeError(name)

    def with_params(self, **changes) -> "ClassifierSpec":
        return ClassifierSpec(self.family, {**self.hyperparameters, **changes}, self.seed)

    def with_seed(self, seed: int) -> "ClassifierSpec":
        return ClassifierSpec(self.family, self.hyperparameters, seed)

    def to_dict(self) -> dict:
        return {"family": self.family, "hyperparameters": dict(self.hyperparameters), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ClassifierSpec":
        return cls(d["family"], dict(d.get("hyperparameters", {})), int(d.get("seed", 0)))


def default_spec(family: str, n_columns: int | None = None, seed: int = 0) -> ClassifierSpec:
    """Spec carrying the documented defaults.

    With ``n_columns`` the SVM's ``"auto"`` gamma is resolved to ``1 / n_columns``.
    """
    spec = ClassifierSpec(family, {}, seed)
    if family == "svm_rbf" and n_columns:
        spec = spec.with_params(gamma=1.0 / n_columns)
    return spec


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ClassifierSpec
    estimator: Any
    n_samples: int
    n_columns: int
    class_priors: tuple[float, float]

    @property
    def family(self) -> str:
        return self.spec.family

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_columns:
            raise DimensionMismatch(
                f"model trained on {self.n_columns} columns, got input of shape {X.shape}"
            )
        return X

    def predict_proba(self, X) -> np.ndarray:
        """P(warning label = 1) for each row."""
        X = self._check(X)
        if X.shape[0] == 0:
            return np.empty(0)
        return np.clip(self.estimator.predict_proba(X), 0.0, 1.0)

    def class_probabilities(self, X) -> np.ndarray:
        p = self.predict_proba(X)
        return np.column_stack([1.0 - p, p])

    def predict_label(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int8)


def fit(spec: ClassifierSpec, X, y) -> TrainedModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int8)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DimensionMismatch(f"training matrix must be non-empty 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise DimensionMismatch(f"{X.shape[0]} rows but {y.shape} labels")
    if not np.isin(y, (0, 1)).all():
        raise DimensionMismatch("labels must be binary")
    n_pos = int(y.sum())
    if spec.family in NEEDS_BOTH_CLASSES and n_pos in (0, y.shape[0]):
        raise SingleClassTraining(f"{spec.family} needs both classes in the training set")
    estimator = _BUILDERS[spec.family](**spec.hyperparameters)
    estimator.fit(X, y, rng=make_rng(spec.seed))
    n = y.shape[0]
    return TrainedModel(spec, estimator, n, X.shape[1], ((n - n_pos) / n, n_pos / n))


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    return model.predict_proba(X)


def predict_label(model: TrainedModel, X, threshold: float = 0.5) -> np.ndarray:
    """1 where P(1) >= threshold."""
    return model.predict_label(X, threshold)


# -- serialisation ---------------------------------------------------------


def _encode(obj):
    if isinstance(obj, np.ndarray):
        arr = np.ascontiguousarray(obj)
        return {
            "__ndarray__": base64.b64encode(arr.astype(arr.dtype.newbyteorder("<")).tobytes()).decode(),
            "dtype": arr.dtype.newbyteorder("<").str,
            "shape": list(arr.shape),
        }
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return {"__float__": repr(obj)}
    return _plain(obj)


def _decode(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            raw = base64.b64decode(obj["__ndarray__"])
            arr = np.frombuffer(raw, dtype=np.dtype(obj["dtype"])).reshape(obj["shape"])
            return arr.astype(arr.dtype.newbyteorder("=")).copy()
        if "__float__" in obj:
            return float(obj["__float__"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def dumps(model: TrainedModel) -> str:
    """Versioned JSON text; arrays are stored as little-endian base64 bytes."""
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "n_samples": model.n_samples,
        "n_columns": model.n_columns,
        "class_priors": list(model.class_priors),
        "state": _encode(model.estimator.get_state()),
    }
    return json.dumps(doc, sort_keys=True)


def loads(text: str) -> TrainedModel:
    doc = json.loads(text)
    if doc.get("format") != FORMAT_NAME or doc.get("version") != FORMAT_VERSION:
        raise ValueError("not a rare_event model document of a supported version")
    spec = ClassifierSpec.from_dict(doc["spec"])
    estimator = _BUILDERS[spec.family](**spec.hyperparameters).set_state(_decode(doc["state"]))
    return TrainedModel(
        spec,
        estimator,
        int(doc["n_samples"]),
        int(doc["n_columns"]),
        tuple(doc["class_priors"]),
    )


__all__ = [
    "FAMILIES",
    "SCHEMAS",
    "ClassifierSpec",
    "TrainedModel",
    "default_spec",
    "fit",
    "predict_proba",
    "predict_label",
    "dumps",
    "loads",
]
