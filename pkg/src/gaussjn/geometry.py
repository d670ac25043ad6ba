"""Cubes, balls, and the admissibility geometry of the Gauss measure.

The ambient space is R^d equipped with the Gaussian probability measure

    dgamma(x) = pi^(-d/2) * exp(-|x|^2) dx.

Cubes are open and axis-aligned.  A cube Q with center c_Q and side l_Q is
*admissible* for a parameter a > 0 when

    l_Q <= a * m(c_Q),      m(x) = min(1, 1/|x|)  (m(0) = 1),

i.e. cubes must shrink like 1/|center| far from the origin.  The comparison
is exact -- no epsilon slack -- so membership in the family Q_a is a crisp
predicate.

Measures of boxes factor across axes; the one-dimensional factors are
evaluated with the in-repo error integral from :mod:`gaussjn.kernels`,
giving absolute accuracy near machine precision (well inside the 1e-12
contract used by callers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels


#: Relative slack for boundary comparisons between cubes.  Cube boundaries
#: are rendered as center +- side/2 in floating point, which wobbles exact
#: abutments by a few ulps (~1e-16 relative); structural overlaps are never
#: smaller than a fixed fraction of a side.  1e-12 separates the two regimes
#: by several orders of magnitude on each side.
BOUNDARY_REL_TOL = 1e-12


def _as_float_tuple(values: Iterable[float]) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if len(out) == 0:
        raise ValueError("dimension must be >= 1")
    if not all(math.isfinite(v) for v in out):
        raise ValueError("coordinates must be finite")
    return out


@dataclass(frozen=True)
class Cube:
    """Open axis-aligned cube given by its center and common side length."""

    center: tuple[float, ...]
    side: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _as_float_tuple(self.center))
        object.__setattr__(self, "side", float(self.side))
        if not (math.isfinite(self.side) and self.side > 0.0):
            raise ValueError(f"cube side must be positive and finite, got {self.side}")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def lo(self) -> tuple[float, ...]:
        h = 0.5 * self.side
        return tuple(c - h for c in self.center)

    @property
    def hi(self) -> tuple[float, ...]:
        h = 0.5 * self.side
        return tuple(c + h for c in self.center)

    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64)

    def lo_array(self) -> np.ndarray:
        return self.center_array() - 0.5 * self.side

    def hi_array(self) -> np.ndarray:
        return self.center_array() + 0.5 * self.side

    def center_norm(self) -> float:
        return float(np.linalg.norm(self.center_array()))

    def contains_point(self, x: Sequence[float]) -> bool:
        xs = np.asarray(x, dtype=np.float64)
        return bool(np.all(xs > self.lo_array()) and np.all(xs < self.hi_array()))

    def contains_points(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        return np.all((pts > self.lo_array()) & (pts < self.hi_array()), axis=-1)

    def contains_cube(self, other: "Cube") -> bool:
        """Containment up to boundary-rounding slack (see BOUNDARY_REL_TOL)."""
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        tol = BOUNDARY_REL_TOL * min(self.side, other.side)
        return all(
            ol >= sl - tol and oh <= sh + tol
            for ol, sl, oh, sh in zip(other.lo, self.lo, other.hi, self.hi)
        )

    def dyadic_children(self) -> tuple["Cube", ...]:
        """The 2^d half-side cubes tiling this cube (up to a null set)."""
        h = 0.25 * self.side
        kids = []
        for signs in np.ndindex(*(2,) * self.dim):
            off = np.array([h if s else -h for s in signs])
            kids.append(Cube(tuple(self.center_array() + off), 0.5 * self.side))
        return tuple(kids)


@dataclass(frozen=True)
class Ball:
    """Open Euclidean ball."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _as_float_tuple(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise ValueError(f"ball radius must be positive and finite, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64)

    def center_norm(self) -> float:
        return float(np.linalg.norm(self.center_array()))


def m_weight(x: Sequence[float]) -> float:
    """Admissibility weight m(x) = min(1, 1/|x|), with m(0) = 1."""
    r = float(np.linalg.norm(np.asarray(x, dtype=np.float64)))
    return 1.0 if r <= 1.0 else 1.0 / r


def m_weight_points(pts: np.ndarray) -> np.ndarray:
    """Vectorized m over rows of pts (n, d)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    r = np.linalg.norm(pts, axis=-1)
    return np.where(r <= 1.0, 1.0, 1.0 / np.maximum(r, 1.0))


def is_admissible(cube: Cube, a: float) -> bool:
    """Exact membership test for the family Q_a: l_Q <= a * m(c_Q)."""
    if not (a > 0.0):
        raise ValueError(f"admissibility parameter must be positive, got {a}")
    return cube.side <= a * m_weight(cube.center)


def lebesgue_measure(cube: Cube) -> float:
    return cube.side**cube.dim


def gaussian_measure(cube: Cube) -> float:
    """gamma(Q) as the product of exact per-axis error-integral factors."""
    out = 1.0
    for alpha, beta in zip(cube.lo, cube.hi):
        out *= kernels.gauss1d(alpha, beta)
    return out


def gauss1d_array(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Vectorized one-dimensional interval measures (same branches as gauss1d)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    out = np.zeros(np.broadcast(alpha, beta).shape, dtype=np.float64)
    alpha, beta = np.broadcast_arrays(alpha, beta)
    valid = beta > alpha
    right = valid & (alpha >= 0.0)
    left = valid & (beta <= 0.0)
    mid = valid & ~right & ~left
    if np.any(right):
        out[right] = 0.5 * (kernels.erfc_array(alpha[right]) - kernels.erfc_array(beta[right]))
    if np.any(left):
        out[left] = 0.5 * (kernels.erfc_array(-beta[left]) - kernels.erfc_array(-alpha[left]))
    if np.any(mid):
        out[mid] = 0.5 * (kernels.erf_array(beta[mid]) - kernels.erf_array(alpha[mid]))
    return out


def gaussian_measure_boxes(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """gamma of many boxes at once; lo, hi of shape (m, d) -> (m,)."""
    lo = np.atleast_2d(np.asarray(lo, dtype=np.float64))
    hi = np.atleast_2d(np.asarray(hi, dtype=np.float64))
    factors = gauss1d_array(lo, hi)
    return np.prod(factors, axis=1)


def cubes_disjoint(q1: Cube, q2: Cube) -> bool:
    """Whether two open cubes are disjoint (shared faces count as disjoint).

    Boundaries are derived from (center, side) in floating point, so cubes
    that abut exactly in the mathematical model can render with an
    overlap of a few ulps (e.g. dyadic halves of a cube whose side is not
    a binary fraction).  Overlap up to BOUNDARY_REL_TOL times the smaller
    side therefore still counts as disjoint; genuine overlaps in this
    code base are larger by many orders of magnitude.
    """
    if q1.dim != q2.dim:
        raise ValueError("dimension mismatch")
    tol = BOUNDARY_REL_TOL * min(q1.side, q2.side)
    for l1, h1, l2, h2 in zip(q1.lo, q1.hi, q2.lo, q2.hi):
        if h1 <= l2 + tol or h2 <= l1 + tol:
            return True
    return False


def comparability_ratio(inner: Cube, outer: Cube, b: float) -> float:
    """exp(-|c_D|^2) * lambda(H) / gamma(H) for H = inner inside D = outer.

    On admissible cubes the Gauss measure behaves like the Lebesgue measure
    damped by the density at the cube center; this ratio quantifies that
    equivalence.  Requires H to be contained in D and D in Q_b.
    """
    if not outer.contains_cube(inner):
        raise ValueError("inner cube must be contained in the outer cube")
    if not is_admissible(outer, b):
        raise ValueError(f"outer cube is not admissible for b={b}")
    g = gaussian_measure(inner)
    if g <= 0.0:
        raise ValueError("inner cube has vanishing Gauss measure (underflow)")
    c2 = outer.center_norm() ** 2
    return math.exp(-c2) * lebesgue_measure(inner) / g
