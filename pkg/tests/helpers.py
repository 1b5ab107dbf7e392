"""Shared test utilities: instance builders, loop oracles, exact samplers."""

import math

import numpy as np
from scipy import special

from tensorpower import ComponentSet


def rand_unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def rand_components(rng, d, k, w_lo=1.0, w_hi=1.0):
    """k unit rows drawn gaussian-unit style, weights uniform in [w_lo, w_hi]."""
    raw = rng.standard_normal((k, d))
    vectors = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    weights = rng.uniform(w_lo, w_hi, size=k)
    return ComponentSet(vectors=vectors, weights=weights)


def orthonormal_components(rng, d, k, weights=None):
    a = rng.standard_normal((d, k))
    q, r = np.linalg.qr(a)
    signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    vectors = (q * signs).T
    if weights is None:
        weights = np.ones(k)
    return ComponentSet(vectors=vectors, weights=np.asarray(weights, dtype=float))


def perturbed_orthonormal(rng, d, k, scale, weights=None):
    """Near-orthogonal unit rows: orthonormal frame plus scale * gaussian."""
    base = orthonormal_components(rng, d, k).vectors
    bumped = base + scale * rng.standard_normal((k, d))
    vectors = bumped / np.linalg.norm(bumped, axis=1, keepdims=True)
    if weights is None:
        weights = np.ones(k)
    return ComponentSet(vectors=vectors, weights=np.asarray(weights, dtype=float))


def dense_loops(comps):
    """Dense d^4 array built with explicit loops (independent of einsum)."""
    d, k = comps.d, comps.k
    u = comps.vectors
    lam = comps.weights
    out = np.zeros((d, d, d, d))
    for a in range(d):
        for b in range(d):
            for c in range(d):
                for e in range(d):
                    s = 0.0
                    for i in range(k):
                        s += lam[i] * u[i, a] * u[i, b] * u[i, c] * u[i, e]
                    out[a, b, c, e] = s
    return out


def loop_contract_full(dense, w):
    d = dense.shape[0]
    total = 0.0
    for a in range(d):
        for b in range(d):
            for c in range(d):
                for e in range(d):
                    total += dense[a, b, c, e] * w[a] * w[b] * w[c] * w[e]
    return total


def loop_contract_vector(dense, w):
    d = dense.shape[0]
    out = np.zeros(d)
    for a in range(d):
        total = 0.0
        for b in range(d):
            for c in range(d):
                for e in range(d):
                    total += dense[a, b, c, e] * w[b] * w[c] * w[e]
        out[a] = total
    return out


# ---------------------------------------------------------------------------
# Exact best-of-L sampling of the largest |v.u| over L uniform sphere draws.
#
# For v uniform on S^{d-1}, X = |v.u| has X^2 ~ Beta(1/2, (d-1)/2), so
# Z = 1 - X^2 ~ Beta(a, 1/2) with a = (d-1)/2 and the max of L draws solves
# I_z(a, 1/2) = s where s = 1 - U^(1/L) for U uniform.  When L is so large
# that s underflows, the inversion runs on t = ln s via Newton in ln z using
#   ln I_z(a, 1/2) = a ln z - ln a - ln B(a,1/2) + ln 2F1(a, 1/2; a+1; z).
# Conditioned on the achieved maximum m, the winning draw is
# +-m u + sqrt(1-m^2) w with w uniform on the sphere orthogonal to u.
# ---------------------------------------------------------------------------


def _log_beta_cdf(z, a):
    return (
        a * math.log(z)
        - math.log(a)
        - special.betaln(a, 0.5)
        + math.log(special.hyp2f1(a, 0.5, a + 1.0, z))
    )


def _log_beta_pdf(z, a):
    return (a - 1.0) * math.log(z) - 0.5 * math.log1p(-z) - special.betaln(a, 0.5)


def _inv_log_beta_cdf(t, a):
    """z with ln I_z(a, 1/2) = t, accurate for arbitrarily negative t."""
    lz = (t + math.log(a) + special.betaln(a, 0.5)) / a
    lz = min(lz, -1e-16)
    for _ in range(80):
        z = math.exp(lz)
        if z >= 1.0:
            z = 1.0 - 1e-16
            lz = math.log(z)
        f = _log_beta_cdf(z, a) - t
        dlog = math.exp(_log_beta_pdf(z, a) + math.log(z) - _log_beta_cdf(z, a))
        step = f / dlog
        step = math.copysign(min(abs(step), 1.0), step)
        lz -= step
        if abs(step) < 1e-15:
            break
    return math.exp(lz)


def sample_best_correlation(rng, d, log_l):
    """Exact draw of max_l |v_l . u| over L = e^log_l uniform vectors."""
    a = (d - 1) / 2.0
    u = rng.uniform()
    # survival value of the max: s = -expm1(ln(u)/L), handled in log space
    # beyond the float range of L
    if log_l <= 30.0:
        s = -math.expm1(math.log(u) / math.exp(log_l))
        t = math.log(s)
    else:
        t = math.log(-math.log(u)) - log_l
        s = math.exp(t) if t >= -600.0 else 0.0
    if s > 1e-280:
        z = float(special.betaincinv(a, 0.5, s))
    else:
        z = _inv_log_beta_cdf(t, a)
    return math.sqrt(max(0.0, 1.0 - z))


def sample_best_of_l(rng, u1, log_l):
    """The winning vector itself: exact in distribution for any L."""
    d = u1.shape[0]
    m = sample_best_correlation(rng, d, log_l)
    g = rng.standard_normal(d)
    g -= (g @ u1) * u1
    w = g / np.linalg.norm(g)
    sign = 1.0 if rng.uniform() < 0.5 else -1.0
    return sign * m * u1 + math.sqrt(max(0.0, 1.0 - m * m)) * w


def wald_interval_halfwidth(p_hat, n):
    return 1.96 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)
