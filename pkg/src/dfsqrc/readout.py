"""Linear readout over reservoir expectation values.

Features are either the five singlet-projector expectations (``singlet``) or
the six qubit populations (``population``).  Weights come from ordinary least
squares onto the {0, 1} labels; a sample is class 1 when the regression output
reaches the threshold.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .dfs import SingletBasis, build_singlet_basis, singlet_projectors
from .errors import DimensionError, DomainError, FitError, NumericalError, ValidationError
from .hilbert import N_RESERVOIR, CompositeSpace, number_op, reservoir_space
from .tensor import as_matrix

SINGLET = "singlet"
POPULATION = "population"
FEATURE_LENGTH = {SINGLET: 5, POPULATION: 6}
IMAG_TOL = 1e-10


def _check_kind(kind: str) -> str:
    if kind not in FEATURE_LENGTH:
        raise DomainError(f"basis_kind must be one of {sorted(FEATURE_LENGTH)}, got {kind!r}")
    return kind


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    basis_kind: str

    def __post_init__(self):
        _check_kind(self.basis_kind)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise NumericalError("non-finite feature value")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_expectations(cls, values, basis_kind: str) -> "FeatureVector":
        """Real parts of complex expectations, rejecting imaginary residue above ``IMAG_TOL``."""
        z = np.asarray(values, dtype=complex).reshape(-1)
        residue = float(np.max(np.abs(z.imag), initial=0.0))
        if residue > IMAG_TOL:
            raise NumericalError(f"expectation values carry imaginary part {residue:.3e}")
        return cls(z.real.copy(), basis_kind)

    def violations(self, tol: float = 1e-7) -> list[str]:
        """Names of violated bounds: each value in [0, 1], singlet values summing to at most 1."""
        out = []
        if np.any(self.values < -tol) or np.any(self.values > 1 + tol):
            out.append("feature_range")
        if self.basis_kind == SINGLET and self.values.sum() > 1 + tol:
            out.append("singlet_sum")
        return out


def _expectations(rho: np.ndarray, ops: np.ndarray) -> np.ndarray:
    return np.einsum("ij,kji->k", rho, ops)


def singlet_features(reservoir_rho, projectors) -> FeatureVector:
    """``Tr(rho P_I)`` for a stack of singlet projectors or a :class:`SingletBasis`."""
    rho = as_matrix(reservoir_rho)
    if isinstance(projectors, SingletBasis):
        projectors = singlet_projectors(projectors)
    ops = np.asarray(projectors)
    if ops.ndim != 3 or ops.shape[1:] != rho.shape:
        raise DimensionError(f"projectors of shape {ops.shape} do not match state {rho.shape}")
    if ops.shape[0] != FEATURE_LENGTH[SINGLET]:
        raise DimensionError(f"expected {FEATURE_LENGTH[SINGLET]} projectors, got {ops.shape[0]}")
    return FeatureVector.from_expectations(_expectations(rho, ops), SINGLET)


def population_features(reservoir_rho, space: CompositeSpace | None = None) -> FeatureVector:
    """Mean occupations ``Tr(rho n_i)`` of every qubit."""
    rho = as_matrix(reservoir_rho)
    space = space or reservoir_space()
    if space.dim != rho.shape[0]:
        raise DimensionError(f"state of dimension {rho.shape[0]} does not live on {space.dims}")
    ops = np.array([number_op(i, space) for i in range(space.n_sites)])
    if ops.shape[0] != FEATURE_LENGTH[POPULATION]:
        raise DimensionError(f"expected {FEATURE_LENGTH[POPULATION]} qubits, got {ops.shape[0]}")
    return FeatureVector.from_expectations(_expectations(rho, ops), POPULATION)


def reservoir_features(reservoir_rho, basis_kind: str) -> FeatureVector:
    if _check_kind(basis_kind) == SINGLET:
        return singlet_features(reservoir_rho, build_singlet_basis(N_RESERVOIR))
    return population_features(reservoir_rho)


@dataclass(frozen=True)
class ReadoutModel:
    weights: np.ndarray
    bias: float
    basis_kind: str
    threshold: float = 0.5
    ridge: float = 0.0
    seeds: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_kind(self.basis_kind)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias) and np.isfinite(self.threshold)):
            raise ValidationError("readout model has non-finite entries")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    def predict(self, features: FeatureVector) -> float:
        if features.basis_kind != self.basis_kind:
            raise DomainError(f"model trained on {self.basis_kind} features, got {features.basis_kind}")
        if features.values.shape != self.weights.shape:
            raise DimensionError(f"{features.values.size} features for {self.weights.size} weights")
        return float(self.weights @ features.values + self.bias)

    def classify(self, features: FeatureVector) -> int:
        # ties go to class 1
        return int(self.predict(features) >= self.threshold)

    def to_text(self) -> str:
        record = {
            "basis_kind": self.basis_kind,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "threshold": self.threshold,
            "ridge": self.ridge,
            "seeds": self.seeds,
        }
        return json.dumps(record, indent=2, sort_keys=True)

    @classmethod
    def from_text(cls, text: str) -> "ReadoutModel":
        r = json.loads(text)
        return cls(np.array(r["weights"]), r["bias"], r["basis_kind"], r["threshold"], r["ridge"], r["seeds"])


def fit(
    features: Sequence[FeatureVector],
    labels: Sequence[int],
    ridge: float = 0.0,
    intercept: bool = True,
    threshold: float = 0.5,
    seeds: dict | None = None,
) -> ReadoutModel:
    """Least-squares weights minimizing ``sum (w.m + b - y)^2 + ridge |w|^2``.

    The minimum-norm pseudo-inverse solution is used, so rank-deficient
    feature sets fit without error.  With ``intercept`` the features and labels
    are centered first and the bias is recovered from the means.
    """
    if len(features) != len(labels):
        raise FitError(f"{len(features)} feature vectors for {len(labels)} labels")
    if len(features) < 2:
        raise FitError("need at least two training samples")
    kinds = {f.basis_kind for f in features}
    if len(kinds) != 1:
        raise FitError(f"mixed feature bases {sorted(kinds)}")
    y = np.asarray(labels, dtype=float)
    if not np.all((y == 0) | (y == 1)):
        raise FitError("labels must be 0 or 1")
    if len(np.unique(y)) < 2:
        raise FitError("training set contains a single class")
    if ridge < 0:
        raise FitError(f"ridge must be >= 0, got {ridge}")
    x = np.array([f.values for f in features])
    if intercept:
        xm, ym = x.mean(axis=0), y.mean()
    else:
        xm, ym = np.zeros(x.shape[1]), 0.0
    xc, yc = x - xm, y - ym
    if ridge > 0:
        # ridge as extra rows keeps a single pseudo-inverse code path
        xc = np.vstack([xc, np.sqrt(ridge) * np.eye(x.shape[1])])
        yc = np.concatenate([yc, np.zeros(x.shape[1])])
    w = np.linalg.pinv(xc) @ yc
    return ReadoutModel(w, ym - w @ xm, kinds.pop(), threshold, ridge, dict(seeds or {}))


def classify(model: ReadoutModel, features: FeatureVector) -> int:
    return model.classify(features)


def relative_error(model: ReadoutModel, test_features: Sequence[FeatureVector], test_labels: Sequence[int]) -> float:
    if len(test_features) == 0:
        raise DomainError("relative error of an empty test set")
    if len(test_features) != len(test_labels):
        raise DimensionError(f"{len(test_features)} feature vectors for {len(test_labels)} labels")
    wrong = sum(model.classify(f) != int(y) for f, y in zip(test_features, test_labels))
    return wrong / len(test_features)
