"""Critical-point hunting and certification on the unit sphere.

Projected gradient descent with backtracking locates critical points of the
quartic objective; each candidate is then classified from the spectrum of the
Riemannian Hessian restricted to the tangent space, and compared against the
reference components through correlation ratios and proximity bounds.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .errors import StalledDescentError
from .geometry import (
    CorrelationProfile,
    measure_incoherence,
    noise_floor,
    objective,
    riemannian_gradient,
    riemannian_hessian,
)
from .tensor_core import ComponentSet, Rank1SumTensor, _readonly, contract_full, require_unit

MAX_BACKTRACKS = 30
BACKTRACK_FACTOR = 0.5
GAP_FACTOR = math.sqrt(2.0)
FD_STEP_MIN = 1e-8
FD_STEP_MAX = 1e-3

# Below this gradient norm the objective differences along a step are smaller
# than one ulp of f itself (|f| is O(1) at desk scale), so a line search that
# compares objective values can no longer distinguish progress from roundoff.
GRADIENT_RESOLUTION_FLOOR = 1e-7

# Acceptance slack for the line search, a few ulps of f.  Near a minimum the
# true decrease per step drops under the rounding error of f itself; without
# this slack the iteration wedges with the gradient stuck around sqrt(eps)
# instead of contracting down to grad_tol.
OBJECTIVE_SLACK = 4.0 * float(np.finfo(float).eps)


def manifold_gradient_descent(
    t: Rank1SumTensor,
    w0,
    step: float = 0.1,
    max_iters: int = 1000,
    grad_tol: float = 1e-9,
):
    """Minimize -T(w,w,w,w)/4 on the sphere by retracted gradient steps.

    Each iterate moves along the negative Riemannian gradient, renormalizes,
    and halves the step (up to 30 times) until the objective does not
    increase beyond a few-ulp rounding slack.  Returns the final point and
    the per-iterate objective trace; stops once the gradient norm falls
    below ``grad_tol``.

    Raises
    ------
    StalledDescentError
        If no non-increasing step is found after all halvings while the
        gradient is still clearly nonzero.  When the same exhaustion happens
        with the gradient already at the roundoff floor, the point is
        returned as terminal instead.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    w = require_unit(w0, t.d)
    w = w / np.linalg.norm(w)
    f = objective(t, w)
    trace = [f]
    for _ in range(max_iters):
        g = riemannian_gradient(t, w)
        gn = float(np.linalg.norm(g))
        if gn <= grad_tol:
            break
        h = step
        slack = OBJECTIVE_SLACK * max(1.0, abs(f))
        for _attempt in range(MAX_BACKTRACKS + 1):
            candidate = w - h * g
            candidate = candidate / np.linalg.norm(candidate)
            fc = objective(t, candidate)
            if fc <= f + slack:
                break
            h *= BACKTRACK_FACTOR
        else:
            if gn <= GRADIENT_RESOLUTION_FLOOR * math.sqrt(max(abs(f), 1.0)):
                # Every candidate looked worse only because f(w) happened to
                # round below the true local value; the point is critical to
                # working precision, so finish here instead of flagging it.
                break
            raise StalledDescentError(
                f"no non-increasing step after {MAX_BACKTRACKS + 1} halvings "
                f"(gradient norm {gn:.3e})"
            )
        if np.array_equal(candidate, w):
            # Accepted step no longer moves the iterate: the update has hit
            # the resolution of double precision, so further passes would
            # only replay the same point.
            break
        w, f = candidate, fc
        trace.append(f)
    return _readonly(w), trace


def _tangent_basis(w: np.ndarray) -> np.ndarray:
    """Rows form an orthonormal basis of the hyperplane orthogonal to w."""
    return np.linalg.svd(w[None, :])[2][1:]


@dataclass(frozen=True)
class CriticalPointCertificate:
    """Classification of a sphere point by gradient norm and tangent spectrum."""

    point: np.ndarray
    gradient_norm: float
    min_tangent_eigenvalue: float
    classification: str
    lambda_value: float


def certify(
    t: Rank1SumTensor,
    w,
    grad_tol: float = 1e-9,
    eig_tol: float = 1e-8,
) -> CriticalPointCertificate:
    """Certify w as a local minimum, a saddle, or not critical at all.

    A point whose Riemannian gradient norm exceeds ``grad_tol`` is tagged
    "non-critical".  Otherwise the Hessian is restricted to the tangent
    space; a smallest eigenvalue above ``-eig_tol`` certifies "minimum",
    anything lower "saddle".
    """
    w = require_unit(w, t.d)
    w = w / np.linalg.norm(w)
    g_norm = float(np.linalg.norm(riemannian_gradient(t, w)))
    basis = _tangent_basis(w)
    h = riemannian_hessian(t, w)
    restricted = basis @ h @ basis.T
    eigs = np.linalg.eigvalsh(0.5 * (restricted + restricted.T))
    min_eig = float(eigs[0])
    if g_norm > grad_tol:
        kind = "non-critical"
    elif min_eig >= -eig_tol:
        kind = "minimum"
    else:
        kind = "saddle"
    return CriticalPointCertificate(
        point=_readonly(w),
        gradient_norm=g_norm,
        min_tangent_eigenvalue=min_eig,
        classification=kind,
        lambda_value=contract_full(t, w),
    )


def gap_check(profile: CorrelationProfile) -> bool:
    """Is the top weighted correlation at least sqrt(2) times the runner-up?"""
    if len(profile.sorted_abs) < 2:
        raise ValueError("gap check needs at least two components")
    first = abs(profile.values[profile.sorted_abs[0]])
    second = abs(profile.values[profile.sorted_abs[1]])
    return first > GAP_FACTOR * second


ProximityResult = namedtuple("ProximityResult", ["index", "error", "bound", "within"])


def proximity_check(w, truth: ComponentSet) -> ProximityResult:
    """Distance from w to the nearest signed component, against the floor.

    The error is min over components and signs of ||w -+ u_i||; the bound is
    the conditioning noise floor of the reference set.
    """
    w = require_unit(w, truth.d)
    diffs = np.minimum(
        np.linalg.norm(truth.vectors - w[None, :], axis=1),
        np.linalg.norm(truth.vectors + w[None, :], axis=1),
    )
    index = int(np.argmin(diffs))
    error = float(diffs[index])
    tau = measure_incoherence(truth)
    kappa = float(truth.weights.max() / truth.weights.min())
    bound = noise_floor(truth.k, tau, kappa)
    return ProximityResult(index=index, error=error, bound=bound, within=error <= bound)


def correlation_ratio(w, truth: ComponentSet, i: int) -> float:
    """||w - (u_i.w) u_i|| / |u_i.w|, infinite when w is orthogonal to u_i."""
    w = require_unit(w, truth.d)
    if not 0 <= i < truth.k:
        raise ValueError(f"component index {i} out of range")
    u = truth.vectors[i]
    c = float(u @ w)
    off = float(np.linalg.norm(w - c * u))
    if abs(c) <= 1e-300:
        return math.inf
    return off / abs(c)


def finite_difference_gradient(t: Rank1SumTensor, w, h: float) -> np.ndarray:
    """Central-difference Riemannian gradient through the normalize retraction.

    Differentiates f(normalize(w + h b)) along an orthonormal tangent basis b
    and reassembles the result in ambient coordinates.  The step must lie in
    [1e-8, 1e-3].
    """
    if not FD_STEP_MIN <= h <= FD_STEP_MAX:
        raise ValueError(f"step h must lie in [{FD_STEP_MIN}, {FD_STEP_MAX}], got {h!r}")
    w = require_unit(w, t.d)
    w = w / np.linalg.norm(w)
    basis = _tangent_basis(w)
    grad = np.zeros(t.d)
    for b in basis:
        forward = w + h * b
        backward = w - h * b
        f_plus = objective(t, forward / np.linalg.norm(forward))
        f_minus = objective(t, backward / np.linalg.norm(backward))
        grad += ((f_plus - f_minus) / (2.0 * h)) * b
    return grad
