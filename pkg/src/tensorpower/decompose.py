"""Power-iteration decomposition of fourth-order rank-one sums.

The core loop repeatedly applies the cubic map w -> T(I,w,w,w)/||.|| and, for
a full decomposition, wraps it in deflation rounds with independently seeded
random restarts.  Restart budgets can be sized from explicit concentration
bounds, and recovered pairs can be scored against a reference component set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateIterateError, ExtractionFailureError, NoFeasibleRestartError
from .geometry import measure_incoherence, noise_floor
from .tensor_core import (
    ComponentSet,
    Rank1SumTensor,
    _dots,
    _full_from_dots,
    _readonly,
    _vector_from_dots,
    deflate,
    require_unit,
)

CONVERGENCE_TOL = 1e-13
DEGENERATE_NORM = 1e-300
# Iteration budget: ceil(50 + 20 * log(1 / (sqrt(k) tau^4))), floored at 50.
ITER_BASE = 50.0
ITER_SLOPE = 20.0
# Relative weight-error allowance is 5x the vector noise floor.
WEIGHT_ERROR_FACTOR = 5.0
# Below this the noise floor is capped by fixed-point resolution: exact
# (orthonormal) instances have tau = 0 but converge only to ~1e-13 iterate
# agreement, so a recovery flag demanding literally zero error is useless.
RESOLUTION_FLOOR = 1e-8


@dataclass(frozen=True)
class TpmOutcome:
    """Result of one power-iteration run.

    ``ratio_trace`` tracks ||w - (u.w) u|| / |u.w| against a reference
    component u when one is supplied (diagnostics only; empty otherwise) and
    starts with the value at the initial vector.  ``lambda_trace`` records the
    scalar contraction at each iterate.
    """

    vector: np.ndarray
    weight: float
    iterations: int
    ratio_trace: list
    lambda_trace: list


def _off_ratio(w: np.ndarray, u: np.ndarray) -> float:
    c = float(u @ w)
    if abs(c) <= DEGENERATE_NORM:
        return math.inf
    return float(np.linalg.norm(w - c * u)) / abs(c)


def tpm(
    t: Rank1SumTensor,
    w0,
    iters: int,
    truth: ComponentSet | None = None,
    target: int | None = None,
) -> TpmOutcome:
    """Run the power iteration w <- T(I,w,w,w)/||T(I,w,w,w)|| from w0.

    Parameters
    ----------
    t : tensor to iterate on (may carry negative deflation terms).
    w0 : unit start vector.
    iters : maximum iteration count; the loop exits early once successive
        iterates agree to 1e-13 up to sign.
    truth, target : optional reference component set and component index used
        to record the off-component ratio trace.  When ``truth`` is given
        without ``target``, the component most correlated with w0 is tracked.

    Raises
    ------
    DegenerateIterateError
        If the contracted vector has norm <= 1e-300 and cannot be normalized.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    w = require_unit(w0, t.d)
    w = w / np.linalg.norm(w)

    track = truth is not None
    u_ref = None
    if track:
        if truth.d != t.d:
            raise ValueError("reference set dimension does not match the tensor")
        if target is None:
            target = int(np.argmax(np.abs(truth.vectors @ w)))
        u_ref = truth.vectors[target]

    coefficients = t.coefficients
    directions = t.directions
    ratios: list = []
    lambdas: list = []
    if track:
        ratios.append(_off_ratio(w, u_ref))

    dots = _dots(t, w)
    iterations = 0
    for step in range(1, iters + 1):
        z = _vector_from_dots(coefficients, directions, dots)
        norm_z = float(np.linalg.norm(z))
        if norm_z <= DEGENERATE_NORM:
            raise DegenerateIterateError(
                f"iterate degenerated at step {step} (||T(I,w,w,w)|| = {norm_z!r})"
            )
        w_new = z / norm_z
        dots = directions @ w_new
        lambdas.append(_full_from_dots(coefficients, dots))
        if track:
            ratios.append(_off_ratio(w_new, u_ref))
        iterations = step
        delta = min(
            float(np.linalg.norm(w_new - w)), float(np.linalg.norm(w_new + w))
        )
        w = w_new
        if delta <= CONVERGENCE_TOL:
            break

    return TpmOutcome(
        vector=_readonly(w),
        weight=lambdas[-1],
        iterations=iterations,
        ratio_trace=ratios,
        lambda_trace=lambdas,
    )


def default_iteration_count(k: int, tau: float) -> int:
    """Iteration budget ceil(50 + 20 log(1/(sqrt(k) tau^4))), at least 50."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    raw = ITER_BASE + ITER_SLOPE * math.log(1.0 / (math.sqrt(k) * tau**4))
    return max(int(ITER_BASE), math.ceil(raw))


def _restart_vector(d: int, seed: int, round_index: int, restart: int) -> np.ndarray:
    """Uniform unit vector from the dedicated (seed, round, restart) stream."""
    seq = np.random.SeedSequence(seed, spawn_key=(round_index, restart))
    rng = np.random.Generator(np.random.Philox(seq))
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def tpmr(
    t: Rank1SumTensor,
    iters: int,
    restarts: int,
    k: int,
    seed: int,
    truth: ComponentSet | None = None,
    trace: list | None = None,
):
    """Extract k (vector, weight) pairs by deflation with random restarts.

    Each round draws ``restarts`` uniform start vectors from per-(seed, round,
    restart) counter-based streams, runs :func:`tpm` on the current deflated
    tensor, and keeps the outcome with the largest weight (ties go to the
    lowest restart index).  The kept pair is deflated off before the next
    round.  Results are bit-reproducible for a fixed seed.

    Degenerate restarts are discarded; if every restart of a round
    degenerates, ExtractionFailureError identifies the round.  When ``trace``
    is a list, rows (round, restart, iteration, lambda, ratio) are appended
    for every completed restart (ratio is NaN without ``truth``).
    """
    if restarts < 1:
        raise ValueError("need at least one restart per round")
    if k < 1:
        raise ValueError("k must be at least 1")
    current = t
    extracted: list[tuple[np.ndarray, float]] = []
    for round_index in range(k):
        best: TpmOutcome | None = None
        for restart in range(restarts):
            v = _restart_vector(t.d, seed, round_index, restart)
            try:
                out = tpm(current, v, iters, truth=truth)
            except DegenerateIterateError:
                continue
            if trace is not None:
                for i, lam in enumerate(out.lambda_trace, start=1):
                    ratio = out.ratio_trace[i] if out.ratio_trace else math.nan
                    trace.append((round_index, restart, i, lam, ratio))
            if best is None or out.weight > best.weight:
                best = out
        if best is None:
            raise ExtractionFailureError(round_index)
        extracted.append((best.vector, best.weight))
        current = deflate(current, best.vector, best.weight)
    return extracted


@dataclass(frozen=True)
class RestartPlan:
    """Restart count plus the concentration quantities that justify it."""

    L: int
    eta: float
    A1: float
    B1: float
    C1: float
    conditions_met: tuple

    @property
    def feasible(self) -> bool:
        return all(self.conditions_met)

    def to_dict(self) -> dict:
        return {
            "L": int(self.L),
            "eta": float(self.eta),
            "A1": float(self.A1),
            "B1": float(self.B1),
            "C1": float(self.C1),
            "conditions_met": [bool(x) for x in self.conditions_met],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _validate_plan_params(eta: float, tau: float, d: int, k: int) -> None:
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta!r}")
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"tau must lie in [0, 1), got {tau!r}")
    if d < 1 or k < 1:
        raise ValueError("d and k must be positive")


def _conditions_from_log(log_l: float, eta: float, tau: float, d: int, k: int):
    """A1, B1, C1 and the two feasibility flags as functions of log(L)."""
    tail = math.sqrt(2.0 * math.log(12.0 / eta))
    a1 = 0.5 * math.sqrt(log_l) - tail
    log_2l = math.log(2.0) + log_l
    spread = 1.0 + tau**2
    b1 = (
        math.sqrt(2.0 * spread * math.log(2.0 * k))
        + tau * (math.sqrt(2.0 * log_2l) + tail)
        + math.sqrt(2.0 * spread * math.log(3.0 / eta))
    )
    c1 = math.sqrt(3.0 * math.log(3.0 / eta) * d + 2.0 * math.log(3.0 / eta))
    met = (a1 >= 2.0 * b1, a1 / c1 >= tau)
    return a1, b1, c1, met


def restart_conditions(L: int, eta: float, tau: float, d: int, k: int) -> RestartPlan:
    """Evaluate the two restart-count side conditions at a given L.

    Condition one asks the best-draw margin A1 to dominate the crosstalk term
    B1 twice over; condition two asks A1/C1 to clear the incoherence tau.
    """
    _validate_plan_params(eta, tau, d, k)
    if L < 2:
        raise ValueError("L must be at least 2")
    a1, b1, c1, met = _conditions_from_log(math.log(L), eta, tau, d, k)
    return RestartPlan(L=int(L), eta=eta, A1=a1, B1=b1, C1=c1, conditions_met=met)


def _feasible_at(L: int, eta: float, tau: float, d: int, k: int) -> bool:
    return all(_conditions_from_log(math.log(L), eta, tau, d, k)[3])


def plan_restarts(eta: float, tau: float, d: int, k: int, l_max: int) -> RestartPlan:
    """Find the smallest feasible restart count L <= l_max.

    Doubles L until the conditions hold, then bisects down to the boundary;
    both flags depend on L only through log(L) and tighten monotonically with
    it on the feasible tau range, so the result satisfies feasible(L) and,
    when L > 2, not feasible(L - 1).  Counts beyond the float range are fine
    because log of a big integer stays cheap and exact enough.  Raises
    NoFeasibleRestartError when no L within the cap qualifies.
    """
    _validate_plan_params(eta, tau, d, k)
    if l_max < 2:
        raise ValueError("l_max must be at least 2")
    lo, hi = None, None
    L = 2
    while L < l_max:
        if _feasible_at(L, eta, tau, d, k):
            hi = L
            break
        lo = L
        L *= 2
    if hi is None:
        if _feasible_at(l_max, eta, tau, d, k):
            hi = l_max
        else:
            raise NoFeasibleRestartError(l_max)
    if lo is None:
        lo = 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _feasible_at(mid, eta, tau, d, k):
            hi = mid
        else:
            lo = mid
    return restart_conditions(hi, eta, tau, d, k)


def is_good_initialization(v, truth: ComponentSet, target: int) -> bool:
    """Does v correlate with the target at least tau, and twice any other?"""
    v = np.asarray(v, dtype=float)
    if v.shape != (truth.d,):
        raise ValueError(f"expected a vector of dimension {truth.d}")
    if not 0 <= target < truth.k:
        raise ValueError(f"target index {target} out of range")
    corr = np.abs(truth.vectors @ v)
    lead = corr[target]
    if lead < measure_incoherence(truth):
        return False
    rest = np.delete(corr, target)
    return bool(rest.size == 0 or lead >= 2.0 * rest.max())


@dataclass(frozen=True)
class RecoveryReport:
    """Greedy matching of estimated pairs against a reference set."""

    assignment: list
    signs: list
    vector_errors: list
    weight_errors: list
    bound: float
    all_within_bound: bool

    def to_dict(self) -> dict:
        return {
            "assignment": [int(i) for i in self.assignment],
            "signs": [int(s) for s in self.signs],
            "vector_errors": [float(e) for e in self.vector_errors],
            "weight_errors": [float(e) for e in self.weight_errors],
            "bound": float(self.bound),
            "all_within_bound": bool(self.all_within_bound),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def match_components(estimates, truth: ComponentSet) -> RecoveryReport:
    """Assign estimates to reference components, greedily by |correlation|.

    Repeatedly picks the largest remaining |estimate . component| over
    unmatched pairs (ties resolve to the lowest estimate index, then lowest
    component index), fixes the sign from the matched correlation, and
    records per-pair vector and weight errors.  ``all_within_bound`` compares
    vector errors against the noise floor and weight errors against 5x the
    floor relative to the matched weight, with the floor never below 1e-8.
    """
    vectors = np.asarray([np.asarray(v, dtype=float) for v, _ in estimates])
    est_weights = np.asarray([float(lam) for _, lam in estimates])
    m = len(estimates)
    if m == 0:
        raise ValueError("no estimates to match")
    if m > truth.k:
        raise ValueError(f"{m} estimates exceed the {truth.k} reference components")
    if vectors.shape[1] != truth.d:
        raise ValueError("estimate dimension does not match the reference set")

    corr = vectors @ truth.vectors.T
    score = np.abs(corr)
    assignment = np.full(m, -1, dtype=int)
    for _ in range(m):
        i, j = np.unravel_index(int(np.argmax(score)), score.shape)
        assignment[i] = j
        score[i, :] = -1.0
        score[:, j] = -1.0

    signs = np.where(corr[np.arange(m), assignment] < 0.0, -1, 1)
    matched = truth.vectors[assignment] * signs[:, None]
    vector_errors = np.linalg.norm(vectors - matched, axis=1)
    weight_errors = np.abs(est_weights - truth.weights[assignment])

    tau = measure_incoherence(truth)
    kappa = float(truth.weights.max() / truth.weights.min())
    bound = noise_floor(truth.k, tau, kappa)
    gate = max(bound, RESOLUTION_FLOOR)
    within = bool(
        np.all(vector_errors <= gate)
        and np.all(
            weight_errors <= WEIGHT_ERROR_FACTOR * gate * truth.weights[assignment]
        )
    )
    return RecoveryReport(
        assignment=assignment.tolist(),
        signs=signs.tolist(),
        vector_errors=vector_errors.tolist(),
        weight_errors=weight_errors.tolist(),
        bound=bound,
        all_within_bound=within,
    )


def deflation_residual_norm(truth: ComponentSet, extracted, w) -> float:
    """Norm of the deflation error contracted with three copies of w.

    ``extracted[j]`` is paired with component j of ``truth``; callers align
    the order first (e.g. via :func:`match_components`).  The residual is
    sum_j [ lam_j (u_j.w)^3 u_j - lam_hat_j (u_hat_j.w)^3 u_hat_j ].
    """
    if len(extracted) > truth.k:
        raise ValueError(
            f"{len(extracted)} extracted pairs exceed the {truth.k} components"
        )
    w = require_unit(w, truth.d)
    residual = np.zeros(truth.d)
    for j, (u_hat, lam_hat) in enumerate(extracted):
        u_hat = require_unit(u_hat, truth.d)
        u = truth.vectors[j]
        residual += truth.weights[j] * float(u @ w) ** 3 * u
        residual -= float(lam_hat) * float(u_hat @ w) ** 3 * u_hat
    return float(np.linalg.norm(residual))
