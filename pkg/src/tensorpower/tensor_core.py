"""Fourth-order symmetric tensors kept as signed sums of rank-one terms.

A term is a real coefficient times the fourth tensor power of a unit vector,
so a tensor with m terms is stored as an (m,) coefficient array plus an
(m, d) array of unit directions.  Contractions cost O(m d) and never touch a
d**4 array; the dense representation exists only as a small-dimension
cross-check oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

CONSTRUCTION_NORM_TOL = 1e-12
OPERATION_NORM_TOL = 1e-9
DENSE_DIM_CAP = 8


def _readonly(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


def _check_unit_rows(vectors: np.ndarray, tol: float, what: str) -> None:
    norms = np.linalg.norm(vectors, axis=1)
    off = np.abs(norms - 1.0)
    if off.size and off.max() > tol:
        i = int(np.argmax(off))
        raise ValueError(f"{what} {i} has norm {norms[i]!r}, not unit within {tol:g}")


def require_unit(w, d: int, tol: float = OPERATION_NORM_TOL) -> np.ndarray:
    """Validate a probe vector: shape (d,) and unit norm within ``tol``."""
    w = np.asarray(w, dtype=float)
    if w.shape != (d,):
        raise ValueError(f"expected a vector of dimension {d}, got shape {w.shape}")
    n = float(np.linalg.norm(w))
    if abs(n - 1.0) > tol:
        raise ValueError(f"probe vector has norm {n!r}, not unit within {tol:g}")
    return w


@dataclass(frozen=True)
class ComponentSet:
    """A reference set of k weighted unit components in R^d.

    ``vectors`` holds one component per row (shape (k, d)); ``weights`` is the
    matching (k,) array of strictly positive weights.  Both arrays are copied
    and frozen at construction, so instances are safe to share across threads.
    """

    vectors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vectors", _readonly(self.vectors))
        object.__setattr__(self, "weights", _readonly(self.weights))
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d array, one component per row")
        k, d = self.vectors.shape
        if k < 1:
            raise ValueError("need at least one component")
        if k > d:
            raise ValueError(f"component count {k} exceeds dimension {d}")
        if self.weights.shape != (k,):
            raise ValueError("weights must be a 1-d array matching the component count")
        if not np.all(self.weights > 0.0):
            raise ValueError("weights must be strictly positive")
        _check_unit_rows(self.vectors, CONSTRUCTION_NORM_TOL, "component")

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Components as d x k columns."""
        return self.vectors.T

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "weights": [float(x) for x in self.weights],
            "vectors": [[float(x) for x in row] for row in self.vectors],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, obj: dict) -> "ComponentSet":
        vectors = np.asarray(obj["vectors"], dtype=float)
        weights = np.asarray(obj["weights"], dtype=float)
        out = cls(vectors=vectors, weights=weights)
        if int(obj["d"]) != out.d or int(obj["k"]) != out.k:
            raise ValueError("declared d/k do not match the stored arrays")
        return out

    @classmethod
    def loads(cls, text: str) -> "ComponentSet":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Rank1SumTensor:
    """Signed sum of fourth powers: sum_i coefficients[i] * directions[i]**(x4)."""

    d: int
    coefficients: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _readonly(self.coefficients))
        object.__setattr__(self, "directions", _readonly(self.directions))
        if self.directions.ndim != 2 or self.directions.shape[1] != self.d:
            raise ValueError("directions must have shape (m, d)")
        m = self.directions.shape[0]
        if self.coefficients.shape != (m,):
            raise ValueError("coefficients must match the term count")
        _check_unit_rows(self.directions, CONSTRUCTION_NORM_TOL, "direction")

    @property
    def terms(self):
        """The (coefficient, direction) pairs, in storage order."""
        return list(zip(self.coefficients.tolist(), self.directions))


@dataclass(frozen=True)
class DenseTensor4:
    """Explicit d**4 array of entries.  Test oracle only; O(d^4) storage."""

    d: int
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _readonly(self.entries))
        if self.entries.shape != (self.d,) * 4:
            raise ValueError(f"entries must have shape {(self.d,) * 4}")

    def contract_full(self, w) -> float:
        w = require_unit(w, self.d)
        return float(np.einsum("abce,a,b,c,e->", self.entries, w, w, w, w))

    def contract_vector(self, w) -> np.ndarray:
        w = require_unit(w, self.d)
        return np.einsum("abce,b,c,e->a", self.entries, w, w, w)


def build_tensor(components: ComponentSet) -> Rank1SumTensor:
    """Assemble the weighted fourth-power sum for a component set."""
    return Rank1SumTensor(
        d=components.d,
        coefficients=components.weights,
        directions=components.vectors,
    )


def _dots(t: Rank1SumTensor, w: np.ndarray) -> np.ndarray:
    return t.directions @ w


def _full_from_dots(coefficients: np.ndarray, dots: np.ndarray) -> float:
    return float(np.dot(coefficients, dots**4))


def _vector_from_dots(
    coefficients: np.ndarray, directions: np.ndarray, dots: np.ndarray
) -> np.ndarray:
    return (coefficients * dots**3) @ directions


def contract_full(t: Rank1SumTensor, w) -> float:
    """Scalar contraction against four copies of the unit vector w."""
    w = require_unit(w, t.d)
    return _full_from_dots(t.coefficients, _dots(t, w))


def contract_vector(t: Rank1SumTensor, w) -> np.ndarray:
    """Vector contraction against three copies of w: sum_i c_i (u_i.w)^3 u_i."""
    w = require_unit(w, t.d)
    return _vector_from_dots(t.coefficients, t.directions, _dots(t, w))


def deflate(t: Rank1SumTensor, u_hat, lambda_hat: float) -> Rank1SumTensor:
    """Return a new tensor with the signed term (-lambda_hat, u_hat) appended.

    The input tensor is not modified.  ``u_hat`` is renormalized defensively
    so stored directions always satisfy the construction tolerance.
    """
    u_hat = require_unit(u_hat, t.d)
    u_hat = u_hat / np.linalg.norm(u_hat)
    return Rank1SumTensor(
        d=t.d,
        coefficients=np.concatenate([t.coefficients, [-float(lambda_hat)]]),
        directions=np.vstack([t.directions, u_hat[None, :]]),
    )


def to_dense(t: Rank1SumTensor, max_dim: int = DENSE_DIM_CAP) -> DenseTensor4:
    """Materialize all d**4 entries.  Guarded by ``max_dim`` (default 8)."""
    if t.d > max_dim:
        raise ValueError(f"refusing to materialize d={t.d} > cap {max_dim}")
    u = t.directions
    entries = np.einsum("i,ia,ib,ic,ie->abce", t.coefficients, u, u, u, u)
    return DenseTensor4(d=t.d, entries=entries)
