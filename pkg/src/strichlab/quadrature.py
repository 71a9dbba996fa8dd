"""Exact-degree integration on spheres, periodic grids and their products."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "DEFAULT_NODE_BUDGET",
    "BudgetExceeded",
    "SphereQuadrature",
    "PeriodicGrid",
    "ProductDomain",
    "build_sphere_quadrature",
    "integrate",
    "mixed_norm",
    "grid_size_for",
    "converged_norm",
    "sphere_moment",
]

DEFAULT_NODE_BUDGET = 4_000_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    dim: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    exact_degree: int

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on ``[0, period)``.

    With ``measure="probability"`` the weights sum to 1; ``"raw"`` gives the
    Lebesgue weights ``period/m``.
    """

    num_points: int
    period: float = 2 * math.pi
    measure: str = "probability"

    def __post_init__(self):
        if self.num_points < 1:
            raise ValueError("num_points must be >= 1")
        if self.measure not in ("probability", "raw"):
            raise ValueError("measure must be 'probability' or 'raw'")

    @property
    def nodes(self) -> np.ndarray:
        return self.period * np.arange(self.num_points) / self.num_points

    @property
    def weights(self) -> np.ndarray:
        total = 1.0 if self.measure == "probability" else self.period
        return np.full(self.num_points, total / self.num_points)

    def __len__(self):
        return self.num_points


@lru_cache(maxsize=256)
def _latitude_rule(m: int, a: float):
    t, w = roots_jacobi(m, a, a)
    return t, w / w.sum()


@lru_cache(maxsize=64)
def _sphere_rule(dim: int, degree: int):
    n_lat = degree // 2 + 1
    n_az = degree + 1
    phi = 2 * math.pi * np.arange(n_az) / n_az
    # coordinates built from the last azimuth inward: x_{d+1}, x_d = sin.. (cos phi, sin phi)
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    wts = np.full(n_az, 1.0 / n_az)
    for k in range(dim - 1, 0, -1):
        # latitude k on S^dim carries weight (1 - t^2)^{(dim - k - 1)/2}
        t, w = _latitude_rule(n_lat, (dim - k - 1) / 2)
        s = np.sqrt(np.clip(1 - t * t, 0.0, None))
        pts = np.concatenate([
            np.repeat(t, len(pts))[:, None],
            np.repeat(s, len(pts))[:, None] * np.tile(pts, (len(t), 1)),
        ], axis=1)
        wts = np.outer(w, wts).ravel()
    wts = wts / wts.sum()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def build_sphere_quadrature(dim: int, exact_degree: int, budget: int = DEFAULT_NODE_BUDGET) -> SphereQuadrature:
    """Product Gauss-Gegenbauer rule on ``S^dim`` exact for polynomials of degree ``exact_degree``."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if exact_degree < 0:
        raise ValueError("exact_degree must be >= 0")
    count = (exact_degree // 2 + 1) ** (dim - 1) * (exact_degree + 1)
    if count > budget:
        raise BudgetExceeded(f"S^{dim} rule of degree {exact_degree} needs {count} nodes (budget {budget})")
    pts, wts = _sphere_rule(dim, exact_degree)
    return SphereQuadrature(dim, pts, wts, exact_degree)


@dataclass(frozen=True)
class ProductDomain:
    factors: tuple

    def __init__(self, factors: Sequence):
        object.__setattr__(self, "factors", tuple(factors))

    @property
    def shape(self) -> tuple:
        return tuple(len(f) for f in self.factors)

    def broadcast_nodes(self) -> list:
        """Node arrays shaped to broadcast over the tensor grid.

        Sphere factors get a trailing coordinate axis of length ``dim + 1``.
        """
        n = len(self.factors)
        out = []
        for i, f in enumerate(self.factors):
            if isinstance(f, SphereQuadrature):
                shape = [1] * n + [f.dim + 1]
                shape[i] = len(f)
                out.append(f.nodes.reshape(shape))
            else:
                shape = [1] * n
                shape[i] = len(f)
                out.append(f.nodes.reshape(shape))
        return out


def _as_domain(q) -> ProductDomain:
    if isinstance(q, ProductDomain):
        return q
    if isinstance(q, (list, tuple)):
        return ProductDomain(q)
    return ProductDomain([q])


def _values(domain: ProductDomain, f) -> np.ndarray:
    if callable(f):
        vals = f(*domain.broadcast_nodes())
    else:
        vals = f
    return np.broadcast_to(np.asarray(vals), domain.shape)


def integrate(q, f: Callable | np.ndarray) -> complex:
    """Weighted sum of ``f`` over a quadrature, grid, or product of them.

    ``f`` receives one broadcastable node array per factor, or is a
    precomputed array of values on the tensor grid.
    """
    domain = _as_domain(q)
    vals = _values(domain, f)
    for factor in reversed(domain.factors):
        vals = vals @ factor.weights
    return complex(vals)


def mixed_norm(domain, spec: Sequence[tuple[int, float]], f) -> float:
    """Iterated norm ``L^{p_1}_{v_1} L^{p_2}_{v_2} ...``, innermost ``(v_1, p_1)`` first.

    Variables are factor indices into ``domain``. ``p = inf`` is a max over
    nodes and therefore a lower bound for the true supremum.
    """
    domain = _as_domain(domain)
    ids = [v for v, _ in spec]
    if sorted(ids) != list(range(len(domain.factors))):
        raise ValueError("norm spec must name every domain factor exactly once")
    vals = np.abs(_values(domain, f)).astype(float)
    remaining = list(range(len(domain.factors)))
    for var, p in spec:
        axis = remaining.index(var)
        w = domain.factors[var].weights
        if p == math.inf:
            vals = vals.max(axis=axis)
        else:
            if p < 1:
                raise ValueError("exponents must be >= 1")
            moved = np.moveaxis(vals, axis, -1)
            vals = (moved ** p @ w) ** (1.0 / p)
        remaining.pop(axis)
    return float(vals)


def grid_size_for(max_freq: int, p: float = 2) -> int:
    """Grid size that integrates ``|g|^p`` exactly for a trig polynomial ``g`` of degree ``max_freq``.

    Even integer ``p`` is exact; other ``p`` get a factor-4 oversample and
    should be paired with :func:`converged_norm`.
    """
    F = int(max_freq)
    if p == math.inf:
        return 4 * (2 * F + 1)
    if float(p).is_integer() and int(p) % 2 == 0:
        return 2 * F * int(p) // 2 + 1
    return 4 * (2 * F + 1)


def converged_norm(compute: Callable[[int], float], m0: int, tol: float = 1e-6, max_doublings: int = 8) -> tuple[float, int]:
    """Double the grid until the relative change drops below ``tol``."""
    m = m0
    prev = compute(m)
    for _ in range(max_doublings):
        m *= 2
        cur = compute(m)
        if abs(cur - prev) <= tol * max(abs(cur), 1e-300):
            return cur, m
        prev = cur
    raise RuntimeError(f"norm did not converge to {tol} within {max_doublings} doublings")


def sphere_moment(alpha: Sequence[int]) -> float:
    """Mean of ``x^alpha`` over the unit sphere in ``R^len(alpha)`` (probability measure)."""
    if any(a % 2 for a in alpha):
        return 0.0
    n = len(alpha)
    # E[x^alpha] = prod Gamma((a_i+1)/2) / Gamma(1/2)^n * Gamma(n/2) / Gamma((|a|+n)/2)
    lg = sum(math.lgamma((a + 1) / 2) for a in alpha) - n * math.lgamma(0.5)
    lg += math.lgamma(n / 2) - math.lgamma((sum(alpha) + n) / 2)
    return math.exp(lg)
