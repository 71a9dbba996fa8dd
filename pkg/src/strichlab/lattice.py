"""Frequency lattices: shifted cubes, slabs, level sets of |xi|^2, circle counts."""

from __future__ import annotations

import csv
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "DEFAULT_POINT_BUDGET",
    "BudgetExceeded",
    "Cube",
    "Slab",
    "SpectralWindow",
    "CircleCountResult",
    "norm2",
    "enumerate_cube",
    "slab_parameter",
    "slab_index",
    "slab_decompose",
    "level_sets",
    "circle_count",
    "max_circle_count",
    "window_enumerate",
    "write_frequencies_csv",
]

DEFAULT_POINT_BUDGET = 10_000_000

Frequency = tuple


class BudgetExceeded(RuntimeError):
    pass


def norm2(xi: Sequence[int]) -> int:
    return sum(int(v) * int(v) for v in xi)


def _q(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(x)


@dataclass(frozen=True)
class Cube:
    """Closed cube ``prod [b_i, b_i + N]``."""

    b: tuple
    N: Fraction

    def __init__(self, b: Sequence, N):
        object.__setattr__(self, "b", tuple(_q(v) for v in b))
        object.__setattr__(self, "N", _q(N))
        if self.N <= 0:
            raise ValueError("side length must be positive")

    @property
    def r(self) -> int:
        return len(self.b)

    @property
    def center(self) -> tuple:
        return tuple(v + self.N / 2 for v in self.b)

    def contains(self, xi: Sequence[int], r0: int = 0) -> bool:
        return all(bi <= n <= bi + self.N for bi, n in zip(self.b, xi)) and all(n >= 0 for n in xi[:r0])

    def coordinate_ranges(self, r0: int = 0) -> list:
        out = []
        for i, bi in enumerate(self.b):
            lo, hi = math.ceil(bi), math.floor(bi + self.N)
            if i < r0:
                lo = max(lo, 0)
            out.append(range(lo, hi + 1))
        return out

    def count(self, r0: int = 0) -> int:
        return math.prod(len(rg) for rg in self.coordinate_ranges(r0))


def enumerate_cube(c: Cube, r0: int = 0, budget: int = DEFAULT_POINT_BUDGET) -> list:
    """Lattice points of ``c`` with the first ``r0`` coordinates nonnegative, lexicographic."""
    if c.count(r0) > budget:
        raise BudgetExceeded(f"cube holds {c.count(r0)} points (budget {budget})")
    return list(itertools.product(*c.coordinate_ranges(r0)))


@dataclass(frozen=True)
class Slab:
    parent: Cube
    m: int
    M: Fraction
    center: tuple
    points: tuple

    def contains(self, xi: Sequence[int], r0: int = 0) -> bool:
        return self.parent.contains(xi, r0) and slab_index(xi, self.center, self.M) == self.m


def slab_parameter(N1, N2) -> Fraction:
    """Slab thickness ``max(N2^2 / N1, 1)``."""
    return max(_q(N2) ** 2 / _q(N1), Fraction(1))


def _integer_direction(center: Sequence[Fraction]) -> list:
    den = math.lcm(*(v.denominator for v in center))
    return [int(v * den) for v in center]


def _floor_div_sqrt(A: int, B: int) -> int:
    """``floor(A / sqrt(B))`` for integers ``A`` and ``B > 0``, exactly."""
    k = math.isqrt(A * A // B)
    if A >= 0:
        return k
    return -k if k * k * B == A * A else -k - 1


def slab_index(xi: Sequence[int], center: Sequence, M) -> int:
    """``m`` with ``<xi, c>/|c|`` in ``[(m-1)M, mM)``, in exact arithmetic."""
    v = _integer_direction([_q(x) for x in center])
    B0 = sum(x * x for x in v)
    if B0 == 0:
        raise ValueError("slab direction is the zero vector")
    M = _q(M)
    # <xi,v>/|v| / M = (<xi,v> * M.den) / (M.num * |v|)
    A = sum(int(a) * b for a, b in zip(xi, v)) * M.denominator
    B = M.numerator ** 2 * B0
    return _floor_div_sqrt(A, B) + 1


def slab_decompose(c: Cube, N1, N2, r0: int = 0, budget: int = DEFAULT_POINT_BUDGET) -> list:
    """Split ``c`` into the nonempty slabs orthogonal to its center direction."""
    N1, N2 = _q(N1), _q(N2)
    if not N1 >= N2 >= 1:
        raise ValueError("need N1 >= N2 >= 1")
    if c.N != N2:
        raise ValueError(f"cube side {c.N} does not match N2={N2}")
    center = c.center
    if all(v == 0 for v in center):
        raise ValueError("cube is centred at the origin; slab direction undefined")
    M = slab_parameter(N1, N2)
    groups = defaultdict(list)
    for xi in enumerate_cube(c, r0, budget):
        groups[slab_index(xi, center, M)].append(xi)
    return [Slab(c, m, M, center, tuple(groups[m])) for m in sorted(groups)]


def level_sets(freqs: Iterable[Sequence[int]], keep_torus: bool = False, r0: int = 0) -> dict:
    """Group frequencies by ``|xi|^2``, or by ``(|xi|^2, xi_1)`` with the torus part ``xi_1 = xi[r0:]``."""
    out = defaultdict(list)
    for xi in freqs:
        xi = tuple(int(v) for v in xi)
        key = (norm2(xi), xi[r0:]) if keep_torus else norm2(xi)
        out[key].append(xi)
    return dict(out)


def _square_root(n: int):
    if n < 0:
        return None
    s = math.isqrt(n)
    return s if s * s == n else None


def circle_count(b1, b2, N, A: int) -> int:
    """Lattice points of ``[b1, b1+N] x [b2, b2+N]`` on ``n1^2 + n2^2 = A``."""
    if A < 0:
        raise ValueError("A must be >= 0")
    b1, b2, N = _q(b1), _q(b2), _q(N)
    count = 0
    for n1 in range(math.ceil(b1), math.floor(b1 + N) + 1):
        s = _square_root(A - n1 * n1)
        if s is None:
            continue
        for n2 in {s, -s}:
            if b2 <= n2 <= b2 + N:
                count += 1
    return count


@dataclass(frozen=True)
class CircleCountResult:
    max_count: int
    arg: tuple  # (b1, b2, A) attaining it; None if nothing was counted
    evaluated: int


def _circle_points(A: int) -> list:
    pts = []
    for n1 in range(-math.isqrt(A), math.isqrt(A) + 1):
        s = _square_root(A - n1 * n1)
        if s is not None:
            pts.extend({(n1, s), (n1, -s)})
    return pts


def max_circle_count(N: int, A_range: tuple, b_samples="origin", budget: int = DEFAULT_POINT_BUDGET) -> CircleCountResult:
    """Supremum of :func:`circle_count` over ``A`` in ``A_range`` (inclusive) and sampled offsets.

    ``b_samples`` is ``"origin"``, ``"exhaustive"`` (every integer offset whose
    box meets the circle) or an explicit list of ``(b1, b2)``.
    """
    a_lo, a_hi = int(A_range[0]), int(A_range[1])
    if a_lo < 0 or a_hi < a_lo:
        raise ValueError("bad A range")
    best, arg, evaluated = 0, None, 0
    if b_samples == "exhaustive":
        N = int(N)
        for A in range(a_lo, a_hi + 1):
            pts = _circle_points(A)
            offsets = {(p1 - i, p2 - j) for p1, p2 in pts for i in range(N + 1) for j in range(N + 1)}
            evaluated += len(offsets)
            if evaluated > budget:
                raise BudgetExceeded("exhaustive offset scan over budget")
            for b1, b2 in sorted(offsets):
                c = sum(1 for p1, p2 in pts if b1 <= p1 <= b1 + N and b2 <= p2 <= b2 + N)
                if c > best:
                    best, arg = c, (b1, b2, A)
        return CircleCountResult(best, arg, evaluated)
    offsets = [(0, 0)] if b_samples == "origin" else [tuple(b) for b in b_samples]
    for b1, b2 in offsets:
        box = Cube((b1, b2), N)
        if box.count() > budget:
            raise BudgetExceeded("box over budget")
        hist = defaultdict(int)
        r1, r2 = box.coordinate_ranges()
        for n1 in r1:
            for n2 in r2:
                A = n1 * n1 + n2 * n2
                if a_lo <= A <= a_hi:
                    hist[A] += 1
        evaluated += 1
        for A in sorted(hist):
            if hist[A] > best:
                best, arg = hist[A], (b1, b2, A)
    return CircleCountResult(best, arg, evaluated)


@dataclass(frozen=True)
class SpectralWindow:
    """``N <= |xi| <= 2N``."""

    N: Fraction

    def __init__(self, N):
        object.__setattr__(self, "N", _q(N))
        if self.N <= 0:
            raise ValueError("N must be positive")

    def contains(self, xi: Sequence[int]) -> bool:
        n2 = norm2(xi)
        return self.N ** 2 <= n2 <= 4 * self.N ** 2


def window_enumerate(w: SpectralWindow, spec, budget: int = DEFAULT_POINT_BUDGET) -> list:
    """Every ``xi`` with ``N <= |xi| <= 2N``, sphere coordinates nonnegative; lexicographic."""
    r, r0 = spec.r, spec.r0
    R = math.floor(2 * w.N)
    ranges = [range(0, R + 1) if i < r0 else range(-R, R + 1) for i in range(r)]
    if math.prod(len(rg) for rg in ranges) > budget:
        raise BudgetExceeded("window enumeration over budget")
    return [xi for xi in itertools.product(*ranges) if w.contains(xi)]


def write_frequencies_csv(freqs: Iterable[Sequence[int]], fh) -> None:
    freqs = list(freqs)
    r = len(freqs[0]) if freqs else 0
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([f"n{i + 1}" for i in range(r)] + ["norm2"])
    for xi in freqs:
        writer.writerow(list(xi) + [norm2(xi)])
