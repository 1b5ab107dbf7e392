"""Calculus of the quartic objective on the unit sphere, plus conditioning
measurements for a component set.

The objective is f(w) = -T(w,w,w,w)/4 for a rank-one-sum tensor T, so its
minimizers are the directions of strongest fourth-order alignment.  The
gradient and Hessian below are the sphere-intrinsic (projected) versions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateComponentsError
from .tensor_core import (
    ComponentSet,
    Rank1SumTensor,
    _dots,
    _full_from_dots,
    _readonly,
    _vector_from_dots,
    require_unit,
)

# Coefficient of the k- and incoherence-dependent recovery tolerance
# kappa * 350 * sqrt(k) * tau**3; below it an estimate is considered to sit
# on a component up to the method's intrinsic noise floor.
NOISE_FLOOR_COEFF = 350.0
# Largest k*tau product for which the no-spurious-minima geometry is claimed.
GEOMETRIC_PRODUCT_LIMIT = 0.05
# Largest weight spread (max/min) the weighted guarantees tolerate.
WEIGHT_RATIO_LIMIT = 1.25
GRAM_SINGULAR_TOL = 1e-10


def noise_floor(k: int, tau: float, kappa: float = 1.0) -> float:
    """Recovery tolerance 350 * kappa * sqrt(k) * tau**3."""
    return NOISE_FLOOR_COEFF * kappa * math.sqrt(k) * tau**3


def objective(t: Rank1SumTensor, w) -> float:
    """f(w) = -T(w,w,w,w)/4 on the unit sphere."""
    w = require_unit(w, t.d)
    return -0.25 * _full_from_dots(t.coefficients, _dots(t, w))


def riemannian_gradient(t: Rank1SumTensor, w) -> np.ndarray:
    """Projected gradient of f at w: -(I - w w^T) T(I,w,w,w)."""
    w = require_unit(w, t.d)
    w = w / np.linalg.norm(w)
    z = _vector_from_dots(t.coefficients, t.directions, _dots(t, w))
    return -(z - w * float(w @ z))


def riemannian_hessian(t: Rank1SumTensor, w) -> np.ndarray:
    """Projected Hessian of f at w, as a dense symmetric (d, d) array.

    H = T(w,w,w,w) (I - w w^T) - 3 sum_i c_i (u_i.w)^2 (P u_i)(P u_i)^T with
    P = I - w w^T, so H w = 0 up to roundoff.
    """
    w = require_unit(w, t.d)
    w = w / np.linalg.norm(w)
    dots = _dots(t, w)
    total = _full_from_dots(t.coefficients, dots)
    proj = np.eye(t.d) - np.outer(w, w)
    pu = t.directions - np.outer(dots, w)
    scaled = (3.0 * t.coefficients * dots**2)[:, None] * pu
    h = total * proj - scaled.T @ pu
    return 0.5 * (h + h.T)


def measure_incoherence(components: ComponentSet) -> float:
    """Largest pairwise |u_i.u_j| over distinct components (0 when k == 1)."""
    if components.k == 1:
        return 0.0
    gram = components.vectors @ components.vectors.T
    off = np.abs(gram - np.diag(np.diag(gram)))
    return float(off.max())


def measure_rip(components: ComponentSet) -> float:
    """Restricted-isometry distortion: how far the Gram spectrum strays from 1.

    Returns max(e_max - 1, 1 - e_min) over the eigenvalues of the k x k Gram
    matrix.  Raises DegenerateComponentsError when the set is numerically
    rank-deficient.
    """
    gram = components.vectors @ components.vectors.T
    evals = np.linalg.eigvalsh(gram)
    if evals[0] <= GRAM_SINGULAR_TOL:
        raise DegenerateComponentsError(
            f"component Gram matrix is singular (min eigenvalue {evals[0]:.3e})"
        )
    return float(max(evals[-1] - 1.0, 1.0 - evals[0]))


@dataclass(frozen=True)
class CorrelationProfile:
    """Signed correlations of a probe vector with every component."""

    values: np.ndarray
    sorted_abs: np.ndarray  # component indices, by decreasing |value|

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        object.__setattr__(self, "sorted_abs", _readonly(self.sorted_abs, dtype=int))


def correlation_profile(components: ComponentSet, w) -> CorrelationProfile:
    """Correlations u_i.w plus the ranking of components by |u_i.w|.

    Ties rank the lower component index first.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (components.d,):
        raise ValueError(
            f"expected a vector of dimension {components.d}, got shape {w.shape}"
        )
    values = components.vectors @ w
    order = np.argsort(-np.abs(values), kind="stable")
    return CorrelationProfile(values=values, sorted_abs=order)


@dataclass(frozen=True)
class ConditioningReport:
    """Summary of how well-conditioned a component set is for recovery."""

    tau: float
    delta: float
    kappa: float
    k_tau: float
    passes_geometric: bool
    passes_kappa: bool

    def to_dict(self) -> dict:
        return {
            "tau": float(self.tau),
            "delta": float(self.delta),
            "kappa": float(self.kappa),
            "k_tau": float(self.k_tau),
            "passes_geometric": bool(self.passes_geometric),
            "passes_kappa": bool(self.passes_kappa),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def conditioning_report(components: ComponentSet) -> ConditioningReport:
    """Measure incoherence, RIP distortion and weight spread in one pass."""
    tau = measure_incoherence(components)
    delta = measure_rip(components)
    weights = components.weights
    kappa = float(weights.max() / weights.min())
    k_tau = components.k * tau
    return ConditioningReport(
        tau=tau,
        delta=delta,
        kappa=kappa,
        k_tau=k_tau,
        passes_geometric=k_tau <= GEOMETRIC_PRODUCT_LIMIT,
        passes_kappa=kappa <= WEIGHT_RATIO_LIMIT,
    )
