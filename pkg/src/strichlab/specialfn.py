"""Zonal and highest-weight spherical harmonics on S^d.

Normalization is against the probability surface measure, so a unit-norm
mode has ``mean(|Y|^2) = 1``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "MAX_DEGREE",
    "SphereMode",
    "SpherePoint",
    "gegenbauer",
    "zonal_harmonic",
    "highest_weight_harmonic",
    "evaluate_mode",
    "normalization_constant",
    "random_sphere_points",
]

MAX_DEGREE = 256

ZONAL = "zonal"
HIGHEST_WEIGHT = "highest_weight"


def gegenbauer(alpha: float, n: int, x):
    """``C_n^{(alpha)}(x)`` by the three-term recurrence in extended precision."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    x_arr = np.asarray(x, dtype=np.longdouble)
    a = np.longdouble(alpha)
    prev = np.ones_like(x_arr)
    if n == 0:
        return _out(prev, x)
    cur = 2 * a * x_arr
    for m in range(2, n + 1):
        prev, cur = cur, (2 * x_arr * (m + a - 1) * cur - (m + 2 * a - 2) * prev) / m
    return _out(cur, x)


def _out(values, like):
    values = values.astype(np.float64)
    return float(values) if np.ndim(like) == 0 else values


@dataclass(frozen=True)
class SpherePoint:
    dim: int
    coords: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coords)
        if len(c) != self.dim + 1:
            raise ValueError(f"S^{self.dim} point needs {self.dim + 1} coordinates")
        if abs(math.fsum(v * v for v in c) - 1.0) > 1e-12:
            raise ValueError("coordinates must have unit length")
        object.__setattr__(self, "coords", c)

    @classmethod
    def normalized(cls, coords) -> "SpherePoint":
        v = np.asarray(coords, dtype=float)
        return cls(len(v) - 1, tuple(v / np.linalg.norm(v)))

    def array(self) -> np.ndarray:
        return np.asarray(self.coords)


@dataclass(frozen=True)
class SphereMode:
    """A degree-``n`` witness on ``S^dim``.

    ``axis`` is the pole index (1-based) for zonal modes and an ordered pair
    of coordinate indices for highest-weight modes.
    """

    dim: int
    degree: int
    kind: str = ZONAL
    axis: Union[int, tuple, None] = None

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if not 0 <= self.degree <= MAX_DEGREE:
            raise ValueError(f"degree must be in [0, {MAX_DEGREE}]")
        if self.kind not in (ZONAL, HIGHEST_WEIGHT):
            raise ValueError(f"unknown mode kind {self.kind!r}")
        axis = self.axis
        if self.kind == ZONAL:
            axis = 1 if axis is None else int(axis)
            if not 1 <= axis <= self.dim + 1:
                raise ValueError("pole index out of range")
        else:
            axis = (1, 2) if axis is None else tuple(int(i) for i in axis)
            if len(axis) != 2 or axis[0] == axis[1] or not all(1 <= i <= self.dim + 1 for i in axis):
                raise ValueError("highest-weight axis must be two distinct coordinate indices")
        object.__setattr__(self, "axis", axis)

    @property
    def frequency(self) -> int:
        return self.degree

    @property
    def eigenvalue(self) -> int:
        """Laplace-Beltrami eigenvalue ``-n(n+d-1)``."""
        return -self.degree * (self.degree + self.dim - 1)


_norm_cache: dict = {}
_norm_lock = threading.Lock()


def _jacobi_mean(poly_degree: int, a: float, b: float, fn):
    """Mean of ``fn(y)`` against ``(1-y)^a (1+y)^b`` on [-1, 1], exact for polynomials."""
    m = poly_degree // 2 + 1
    y, w = roots_jacobi(m, a, b)
    return float(np.dot(w, fn(y)) / w.sum())


def _zonal_sq_mean(d: int, n: int) -> float:
    # <p, pole> on S^d has density proportional to (1-x^2)^{(d-2)/2}
    a = (d - 2) / 2
    return _jacobi_mean(2 * n, a, a, lambda x: gegenbauer((d - 1) / 2, n, x) ** 2)


def _hw_sq_mean(d: int, n: int) -> float:
    # s = p_i^2 + p_j^2 has density proportional to (1-s)^{(d-3)/2}; s = (1+y)/2
    return _jacobi_mean(n, (d - 3) / 2, 0.0, lambda y: ((1 + y) / 2) ** n)


def normalization_constant(mode: SphereMode) -> float:
    """Positive constant making the mode unit-norm in L^2 of the probability measure."""
    key = (mode.dim, mode.degree, mode.kind)
    c = _norm_cache.get(key)
    if c is None:
        if mode.degree == 0:
            c = 1.0
        elif mode.kind == ZONAL:
            c = 1.0 / math.sqrt(_zonal_sq_mean(mode.dim, mode.degree))
        else:
            c = 1.0 / math.sqrt(_hw_sq_mean(mode.dim, mode.degree))
        with _norm_lock:
            c = _norm_cache.setdefault(key, c)
    return c


def _coords(mode: SphereMode, p) -> np.ndarray:
    if isinstance(p, SpherePoint):
        if p.dim != mode.dim:
            raise ValueError(f"point on S^{p.dim} for a mode on S^{mode.dim}")
        return p.array()
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1] != mode.dim + 1:
        raise ValueError(f"expected trailing axis of length {mode.dim + 1}")
    return arr


def zonal_harmonic(mode: SphereMode, p):
    if mode.kind != ZONAL:
        raise ValueError("not a zonal mode")
    x = _coords(mode, p)
    t = x[..., mode.axis - 1]
    vals = normalization_constant(mode) * np.asarray(gegenbauer((mode.dim - 1) / 2, mode.degree, t))
    return _complex_out(vals, x)


def highest_weight_harmonic(mode: SphereMode, p):
    if mode.kind != HIGHEST_WEIGHT:
        raise ValueError("not a highest-weight mode")
    x = _coords(mode, p)
    i, j = mode.axis
    z = x[..., i - 1] + 1j * x[..., j - 1]
    vals = normalization_constant(mode) * z ** mode.degree
    return _complex_out(vals, x)


def _complex_out(vals, x):
    vals = np.asarray(vals, dtype=complex)
    return complex(vals) if x.ndim == 1 else vals


def evaluate_mode(mode: SphereMode, p):
    if mode.kind == ZONAL:
        return zonal_harmonic(mode, p)
    return highest_weight_harmonic(mode, p)


def random_sphere_points(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((count, dim + 1))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
