"""Quadratic exponential sums over shifted lattice cubes.

Two time conventions live here. Sums of the form
``sum a_xi exp(-i t |xi|^2 + i <x1, xi_1>)`` are taken over ``t in [0, 2pi)``;
the cutoff/Weyl-sum machinery (``weyl_sum``, arcs, ``level_set_measure``,
``eval_F``/``eval_G``) uses period 1 with phases ``exp(2 pi i .)``. Norms are
always with respect to the probability measure on the full period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .experiments import FitResult, fit_exponent
from .lattice import Cube, enumerate_cube, norm2, slab_decompose
from .quadrature import converged_norm

__all__ = [
    "DEFAULT_GRID_BUDGET",
    "FAMILIES",
    "GridTooSmall",
    "GridBudgetExceeded",
    "CoefficientVector",
    "CutoffSeq",
    "RationalApprox",
    "ArcLabel",
    "I1Report",
    "I2Report",
    "LevelSetReport",
    "exp_sum",
    "exp_sum_grid",
    "exp_sum_norm",
    "exact_grid_sizes",
    "coefficient_family",
    "verify_i1",
    "verify_i2",
    "build_cutoff",
    "weyl_sum",
    "dirichlet_approx",
    "classify_arc",
    "major_arc_ratio",
    "minor_arc_ratio",
    "level_set_measure",
    "farey_fractions",
    "eval_F",
    "eval_G",
    "eval_FG",
]

DEFAULT_GRID_BUDGET = 1 << 23

FAMILIES = ("constant", "signs", "gaussian", "slab")


class GridTooSmall(ValueError):
    pass


class GridBudgetExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------- coefficients

@dataclass(frozen=True)
class CoefficientVector:
    support: tuple
    values: np.ndarray = field(compare=False)

    def __init__(self, support: Iterable[Sequence[int]], values):
        sup = tuple(tuple(int(v) for v in xi) for xi in support)
        vals = np.asarray(values, dtype=complex).reshape(-1)
        if len(sup) != len(vals):
            raise ValueError("support and values differ in length")
        if len(set(sup)) != len(sup):
            raise ValueError("support has duplicate frequencies")
        if sup and len({len(xi) for xi in sup}) != 1:
            raise ValueError("frequencies of mixed dimension")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_dict(cls, d: dict) -> "CoefficientVector":
        keys = sorted(d)
        return cls(keys, [d[k] for k in keys])

    @property
    def r(self) -> int:
        return len(self.support[0]) if self.support else 0

    @property
    def norm2(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)))

    def __len__(self):
        return len(self.support)

    def shifted(self, c: Sequence[int]) -> "CoefficientVector":
        return CoefficientVector([tuple(a + int(b) for a, b in zip(xi, c)) for xi in self.support], self.values)

    def normalized(self) -> "CoefficientVector":
        return CoefficientVector(self.support, self.values / self.norm2)

    def conj(self) -> "CoefficientVector":
        return CoefficientVector(self.support, np.conj(self.values))


def _time_and_torus(a: CoefficientVector, r1: int):
    if r1 < 0 or r1 > a.r:
        raise ValueError(f"r1={r1} incompatible with frequencies in Z^{a.r}")
    sup = np.array(a.support, dtype=np.int64).reshape(len(a), a.r)
    l = np.array([norm2(xi) for xi in a.support], dtype=np.int64)
    mu = sup[:, a.r - r1:]
    return l, mu


# ---------------------------------------------------------------- sums and norms

def exp_sum(a: CoefficientVector, t: float, x1: Sequence[float] = ()) -> complex:
    """``sum a_xi exp(-i t |xi|^2 + i <x1, xi_1>)`` with ``xi_1`` the last ``len(x1)`` coordinates."""
    x1 = np.asarray(x1, dtype=float).reshape(-1)
    l, mu = _time_and_torus(a, len(x1))
    phase = -t * l.astype(float) + (mu @ x1 if len(x1) else 0.0)
    return complex(np.sum(a.values * np.exp(1j * phase)))


def exact_grid_sizes(a: CoefficientVector, p: float, r1: int) -> tuple:
    """Per-axis grid sizes on which ``|sum|^p`` integrates exactly (even integer ``p``).

    For frequencies spanning ``W`` on an axis, ``|g|^p = |g^{p/2}|^2`` is a trig
    polynomial of degree ``(p/2) W``, so ``(p/2) W + 1`` nodes suffice. Other
    ``p`` get a 4x oversampled starting size for a doubling check.
    """
    l, mu = _time_and_torus(a, r1)
    spans = [int(l.max() - l.min())] + [int(mu[:, i].max() - mu[:, i].min()) for i in range(r1)]
    if _is_even(p):
        return tuple(int(p) // 2 * w + 1 for w in spans)
    return tuple(4 * (w + 1) for w in spans)


def _is_even(p) -> bool:
    return p != math.inf and float(p).is_integer() and int(p) % 2 == 0 and p >= 2


def exp_sum_grid(a: CoefficientVector, r1: int, sizes: Sequence[int], budget: int = DEFAULT_GRID_BUDGET) -> np.ndarray:
    """Moduli of the sum on the uniform grid ``t_j = P j / m_0``, ``x_k = 2 pi k / m_k``.

    The values do not depend on the period ``P`` (2pi or 1) once ``t`` is
    measured in grid steps; only ``|.|`` is returned because the frequency
    offsets contribute a unimodular factor.
    """
    l, mu = _time_and_torus(a, r1)
    sizes = tuple(int(m) for m in sizes)
    if len(sizes) != 1 + r1:
        raise ValueError(f"need {1 + r1} grid sizes")
    if math.prod(sizes) > budget:
        raise GridBudgetExceeded(f"grid of {math.prod(sizes)} points over budget {budget}")
    lo = [int(l.min())] + [int(mu[:, i].min()) for i in range(r1)]
    idx = [l - lo[0]] + [mu[:, i] - lo[i + 1] for i in range(r1)]
    spans = [int(v.max()) + 1 for v in idx]
    if any(s > m for s, m in zip(spans, sizes)):
        raise GridTooSmall(f"grid {sizes} aliases frequency spans {spans}")
    C = np.zeros(spans, dtype=complex)
    np.add.at(C, tuple(idx), a.values)
    # exp(-i t l) along time, exp(+i x mu) along torus axes
    vals = np.fft.fft(C, n=sizes[0], axis=0)
    for ax in range(1, 1 + r1):
        vals = np.fft.ifft(vals, n=sizes[ax], axis=ax) * sizes[ax]
    return np.abs(vals)


def _grid_norm(absvals: np.ndarray, p: float) -> float:
    if p == math.inf:
        return float(absvals.max())
    return float(np.mean(absvals ** p) ** (1.0 / p))


def exp_sum_norm(a: CoefficientVector, p: float, r1: int = 0, grid: Sequence[int] | int | None = None,
                 tol: float = 1e-6, budget: int = DEFAULT_GRID_BUDGET) -> float:
    """``L^p_{t, x1}`` norm of :func:`exp_sum` over a full period (probability measure).

    Exact for even integer ``p``; otherwise the grid is doubled until the
    relative change is below ``tol``. ``p = inf`` returns the grid maximum.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if len(a) == 0:
        return 0.0
    need = exact_grid_sizes(a, p, r1)
    if grid is None:
        sizes = need
    else:
        sizes = (int(grid),) * (1 + r1) if np.isscalar(grid) else tuple(int(m) for m in grid)
        if len(sizes) != 1 + r1:
            raise ValueError(f"need {1 + r1} grid sizes")
        if _is_even(p) and any(m < n for m, n in zip(sizes, need)):
            raise GridTooSmall(f"grid {sizes} below exact sizes {need} for p={p}")
    if _is_even(p):
        return _grid_norm(exp_sum_grid(a, r1, sizes, budget), p)
    base = sizes

    def at(scale: int) -> float:
        return _grid_norm(exp_sum_grid(a, r1, [m * scale for m in base], budget), p)

    val, _ = converged_norm(at, 1, tol=tol)
    return val


# ---------------------------------------------------------------- sweeps

def coefficient_family(name: str, support: Sequence, rng: np.random.Generator | None = None) -> CoefficientVector:
    """One draw from a test family on ``support`` (``slab`` is an indicator, like ``constant``)."""
    n = len(support)
    if name in ("constant", "slab"):
        vals = np.ones(n)
    elif name == "signs":
        vals = rng.choice([-1.0, 1.0], size=n)
    elif name == "gaussian":
        vals = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    else:
        raise ValueError(f"unknown coefficient family {name!r}")
    return CoefficientVector(support, vals)


def _random_shift(rng: np.random.Generator, N: int, r0: int, r: int) -> tuple:
    # sphere-type coordinates stay in the nonnegative orthant; torus ones range over [-N, N]
    return tuple(int(rng.integers(0, N + 1)) if i < r0 else int(rng.integers(-N, N + 1)) for i in range(r))


def _nondegenerate(b: tuple, N: int) -> tuple:
    """Shift a cube centred at the origin by its own side."""
    if all(2 * v + N == 0 for v in b):
        return tuple(v + N for v in b)
    return b


def _largest_slab(cube: Cube, N1: int, N2: int, r0: int):
    slabs = slab_decompose(cube, N1, N2, r0)
    return max(slabs, key=lambda s: (len(s.points), -s.m))


def _shift_label(b: Sequence[int]) -> str:
    return ";".join(str(int(v)) for v in b)


def _family_ratio(family: str, support, p, r1, trials, rng) -> float:
    draws = trials if family in ("signs", "gaussian") else 1
    best = 0.0
    for _ in range(draws):
        a = coefficient_family(family, support, rng)
        best = max(best, exp_sum_norm(a, p, r1) / a.norm2)
    return best


@dataclass
class I1Report:
    fit: FitResult | None
    rows: list  # dicts with columns (N, p, r0, r1, family, shift, ratio)
    max_ratio: dict  # N -> max over families and shifts
    spread: dict  # N -> (max - min)/max of the per-shift maximum
    exponent: float  # r/2 - (r1+2)/p
    seed: int

    CSV_COLUMNS = ("N", "p", "r0", "r1", "family", "shift", "ratio")


def verify_i1(r0: int, r1: int, p: float, N_list: Sequence[int], trials: int = 4, seed: int = 0,
              shifts: int = 20, families: Sequence[str] = FAMILIES) -> I1Report:
    """Max of ``||sum||_{L^p} / ||a||_2`` over coefficient families and random cube shifts, per ``N``."""
    r = r0 + r1
    if r < 1:
        raise ValueError("need r >= 1")
    rows, max_ratio, spread = [], {}, {}
    for N in N_list:
        N = int(N)
        per_shift = []
        for s in range(shifts):
            rng = np.random.default_rng([seed, N, s])
            b = _nondegenerate(_random_shift(rng, N, r0, r), N)
            cube = Cube(b, N)
            pts = enumerate_cube(cube, r0)
            shift_best = 0.0
            for fam in families:
                support = _largest_slab(cube, N * N, N, r0).points if fam == "slab" else pts
                ratio = _family_ratio(fam, support, p, r1, trials, rng)
                rows.append({"N": N, "p": p, "r0": r0, "r1": r1, "family": fam,
                             "shift": _shift_label(b), "ratio": ratio})
                shift_best = max(shift_best, ratio)
            per_shift.append(shift_best)
        max_ratio[N] = max(per_shift)
        spread[N] = (max(per_shift) - min(per_shift)) / max(per_shift)
    fit = fit_exponent(list(max_ratio.items())) if len(max_ratio) >= 3 else None
    return I1Report(fit, rows, max_ratio, spread, r / 2 - (r1 + 2) / p, seed)


@dataclass
class I2Report:
    rows: list  # one dict per schedule point
    gain_fit: FitResult | None  # log(gain) against log(N2/N1 + 1/N2)
    exponent: float
    seed: int

    CSV_COLUMNS = ("N1", "N2", "M", "slab_size", "shift", "ratio_i2", "ratio_i1", "factor", "gain")


def verify_i2(r0: int, r1: int, p: float, schedule: Sequence[tuple[int, int]], trials: int = 4, seed: int = 0,
              shifts: int = 5) -> I2Report:
    """Slab-restricted version of :func:`verify_i1` for declared ``(N1, N2)`` pairs.

    ``gain`` is the slab ratio over the full-cube ratio at the same shift; the
    fitted slope of ``log gain`` against ``log(N2/N1 + 1/N2)`` is a measured
    stand-in for the existential exponent in the slab estimate.
    """
    r = r0 + r1
    rows = []
    for k, (N1, N2) in enumerate(schedule):
        N1, N2 = int(N1), int(N2)
        if not N1 >= N2 >= 1:
            raise ValueError("need N1 >= N2 >= 1")
        best = None
        for s in range(shifts):
            rng = np.random.default_rng([seed, k, s])
            b0 = _random_shift(rng, N2, r0, r)
            b = _nondegenerate(b0, N2)
            cube = Cube(b, N2)
            slab = _largest_slab(cube, N1, N2, r0)
            pts = enumerate_cube(cube, r0)
            fams = ("constant", "signs", "gaussian")
            ri2 = max(_family_ratio(f, slab.points, p, r1, trials, rng) for f in fams)
            ri1 = max(_family_ratio(f, pts, p, r1, trials, rng) for f in fams)
            row = {"N1": N1, "N2": N2, "M": str(slab.M), "slab_size": len(slab.points),
                   "shift": _shift_label(b), "shift_moved": b != b0, "ratio_i2": ri2, "ratio_i1": ri1,
                   "factor": N2 / N1 + 1 / N2, "gain": ri2 / ri1}
            if best is None or ri2 > best["ratio_i2"]:
                best = row
        rows.append(best)
    fit = None
    if len({row["factor"] for row in rows}) >= 3:
        fit = fit_exponent([(row["factor"], row["gain"]) for row in rows])
    return I2Report(rows, fit, r / 2 - (r1 + 2) / p, seed)


# ---------------------------------------------------------------- cutoff and Weyl sums

@dataclass(frozen=True)
class CutoffSeq:
    """Raised-cosine cutoff: 1 on ``[b, b+N]``, 0 outside ``(b-N, b+2N)``."""

    b: int
    N: int
    profile: str = "raised_cosine"

    def __call__(self, n):
        m = np.asarray(n, dtype=np.int64) - self.b
        N = self.N
        up = 0.5 * (1 - np.cos(np.pi * (m + N) / N))
        down = 0.5 * (1 - np.cos(np.pi * (2 * N - m) / N))
        out = np.where((m >= 0) & (m <= N), 1.0, 0.0)
        out = np.where((m > -N) & (m < 0), up, out)
        out = np.where((m > N) & (m < 2 * N), down, out)
        return float(out) if np.ndim(out) == 0 else out

    def support(self) -> np.ndarray:
        return np.arange(self.b - self.N, self.b + 2 * self.N + 1)

    def increments(self, squared: bool = False) -> np.ndarray:
        n = np.arange(self.b - self.N - 1, self.b + 2 * self.N + 1)
        s = self(n)
        return np.diff(s * s if squared else s)

    def increment_constant(self, squared: bool = False) -> float:
        """``N * max |sigma(n+1) - sigma(n)|``."""
        return float(self.N * np.abs(self.increments(squared)).max())

    def variation_constant(self, squared: bool = False) -> float:
        """``N *`` total variation of the increment sequence."""
        return float(self.N * np.abs(np.diff(self.increments(squared))).sum())


def build_cutoff(b: int, N: int) -> CutoffSeq:
    if int(N) < 2:
        raise ValueError("N must be >= 2")
    return CutoffSeq(int(b), int(N))


def _phase_frac(t, n2: np.ndarray) -> np.ndarray:
    """``t * n2 mod 1``; exact when ``t`` is a Fraction."""
    if isinstance(t, Fraction):
        num, den = t.numerator, t.denominator
        return np.array([float(Fraction((num * int(v)) % den, den)) for v in n2])
    return np.mod(float(t) * n2.astype(float), 1.0)


def weyl_sum(c: CutoffSeq, t) -> complex:
    """``f_b(t) = sum_n sigma_b(n)^2 exp(2 pi i t n^2)`` (period 1)."""
    n = c.support()
    w = c(n) ** 2
    keep = w > 0
    n, w = n[keep], w[keep]
    return complex(np.sum(w * np.exp(2j * np.pi * _phase_frac(t, n * n))))


# ---------------------------------------------------------------- rational approximation

@dataclass(frozen=True)
class RationalApprox:
    a: int
    q: int
    error: float  # distance from t to a/q modulo 1

    def __post_init__(self):
        if not (1 <= self.a <= self.q and math.gcd(self.a, self.q) == 1):
            raise ValueError(f"need 1 <= a <= q with gcd 1, got {self.a}/{self.q}")


def _circular_distance(t: Fraction, a: int, q: int) -> Fraction:
    d = (t - Fraction(a, q)) % 1
    return min(d, 1 - d)


def dirichlet_approx(t, Q: int) -> RationalApprox:
    """Last continued-fraction convergent of ``t`` with denominator ``<= Q``.

    Satisfies ``|t - a/q| < 1/(qQ)`` (distance taken modulo 1). The residue
    ``0/1`` is reported as ``1/1``.
    """
    Q = int(Q)
    if Q < 1:
        raise ValueError("Q must be >= 1")
    x = Fraction(t)
    # convergents h/k of x
    h0, k0, h1, k1 = 0, 1, 1, 0
    y = x
    while True:
        ai = math.floor(y)
        h2, k2 = ai * h1 + h0, ai * k1 + k0
        if k2 > Q:
            break
        h0, k0, h1, k1 = h1, k1, h2, k2
        if y == ai:
            break
        y = 1 / (y - ai)
    a, q = h1 % k1, k1
    if a == 0:
        a, q = 1, 1
    err = _circular_distance(x, a, q)
    return RationalApprox(a, q, float(err))


@dataclass(frozen=True)
class ArcLabel:
    kind: str  # "major" or "minor"
    N: int
    a: int | None = None
    q: int | None = None
    distance: float | None = None

    @property
    def is_major(self) -> bool:
        return self.kind == "major"


def _max_arc_q(N: int) -> int:
    q = 1
    while (q + 1) ** 10 <= N:
        q += 1
    return q


def classify_arc(t, N: int) -> ArcLabel:
    """Major iff ``|t - a/q| <= N^{1/10 - 2}`` (mod 1) for some ``1 <= a <= q <= N^{1/10}``, ``gcd(a, q) = 1``.

    Every admissible ``q`` is scanned; for ``N >= 1`` the arcs are disjoint, so
    the nearest match is the match.
    """
    N = int(N)
    width = N ** (0.1 - 2)
    x = Fraction(t)
    best = None
    for q in range(1, _max_arc_q(N) + 1):
        for a in range(1, q + 1):
            if math.gcd(a, q) != 1:
                continue
            d = _circular_distance(x, a, q)
            if d <= width and (best is None or d < best[2]):
                best = (a, q, d)
    if best is None:
        return ArcLabel("minor", N)
    return ArcLabel("major", N, best[0], best[1], float(best[2]))


def _sample_shifts(b_samples) -> list:
    return [int(b) for b in b_samples] if b_samples is not None else [0]


def major_arc_ratio(N: int, samples: Sequence[tuple], b_samples: Sequence[int] | None = None) -> float:
    """Max of ``|f_b(t)| q^{1/2} (|t - a/q| + N^{-2})^{1/2}`` over ``t = a/q + offset`` and shifts ``b``."""
    N = int(N)
    best = 0.0
    cuts = [build_cutoff(b, N) for b in _sample_shifts(b_samples)]
    for a, q, offset in samples:
        a, q = int(a), int(q)
        if not (1 <= a <= q < N and math.gcd(a, q) == 1):
            raise ValueError(f"need 1 <= a <= q < N with gcd 1, got {a}/{q}")
        off = Fraction(offset)
        if not abs(off) < Fraction(1, q * N):
            raise ValueError(f"offset {offset} outside |t - a/q| < 1/(qN)")
        t = Fraction(a, q) + off
        scale = math.sqrt(q) * math.sqrt(abs(float(off)) + N ** -2.0)
        for c in cuts:
            best = max(best, abs(weyl_sum(c, t)) * scale)
    return best


def minor_arc_ratio(N: int, t_samples: Sequence, b_samples: Sequence[int] | None = None) -> float:
    """Max of ``|f_b(t)| / N^{1 - 1/20}``; every sample must be minor for this ``N``."""
    N = int(N)
    for t in t_samples:
        if classify_arc(t, N).is_major:
            raise ValueError(f"t={t} lies on a major arc for N={N}")
    cuts = [build_cutoff(b, N) for b in _sample_shifts(b_samples)]
    return max(abs(weyl_sum(c, Fraction(t))) for t in t_samples for c in cuts) / N ** (1 - 1 / 20)


# ---------------------------------------------------------------- distributional measurement

@dataclass(frozen=True)
class LevelSetReport:
    measure: float
    bound: float  # N^{-2} delta^{-2-eps}
    grid_points: int

    @property
    def ratio(self) -> float:
        return self.measure / self.bound


def level_set_measure(a: CoefficientVector, delta: float, N: int, b: Sequence[int] | None = None,
                      grid_m: int | None = None, eps: float = 0.0) -> LevelSetReport:
    """Fraction of ``t_j = j/m`` with ``|sum sigma_b(xi) a_xi exp(-2 pi i t |xi|^2)| > delta N^{r/2}``."""
    if abs(a.norm2 - 1) > 1e-9:
        raise ValueError("coefficients must be normalized to ||a|| = 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    r = a.r
    b = tuple(0 for _ in range(r)) if b is None else tuple(int(v) for v in b)
    cuts = [build_cutoff(bi, N) for bi in b]
    sup = np.array(a.support, dtype=np.int64)
    weight = np.prod([cuts[i](sup[:, i]) for i in range(r)], axis=0)
    keep = weight > 0
    weighted = CoefficientVector([a.support[i] for i in np.flatnonzero(keep)], (weight * a.values)[keep])
    lmax = max((norm2(xi) for xi in weighted.support), default=0)
    m = int(grid_m) if grid_m is not None else max(8 * lmax, 8)
    if m < 8 * lmax:
        raise GridTooSmall(f"grid of {m} points below 8 x max frequency {lmax}")
    if len(weighted) == 0:
        measure = 0.0
    else:
        vals = exp_sum_grid(weighted, 0, (m,))
        measure = float(np.count_nonzero(vals > delta * N ** (r / 2)) / m)
    return LevelSetReport(measure, N ** -2.0 * delta ** (-2 - eps), m)


# ---------------------------------------------------------------- F and G

def farey_fractions(Q: int) -> list:
    """All ``(a, q)`` with ``1 <= a <= q <= Q`` and ``gcd(a, q) = 1``, ordered by ``q`` then ``a``."""
    return [(a, q) for q in range(1, int(Q) + 1) for a in range(1, q + 1) if math.gcd(a, q) == 1]


def _check_rg(r: int, gamma: float):
    if not r * gamma > 2:
        raise ValueError("need r * gamma > 2")


def eval_F(theta, N: int, r: int, gamma: float):
    """``(N^2 |sin theta| + 1)^{-r gamma / 2}``."""
    _check_rg(r, gamma)
    out = (N * N * np.abs(np.sin(theta)) + 1.0) ** (-r * gamma / 2)
    return float(out) if np.ndim(out) == 0 else out


def eval_G(t, N: int, Q: int, r: int, gamma: float):
    """``sum_{q <= Q, (a,q)=1} q^{-r gamma/2} F(t - a/q)``."""
    _check_rg(r, gamma)
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for a, q in farey_fractions(Q):
        total = total + q ** (-r * gamma / 2) * eval_F(t - a / q, N, r, gamma)
    return float(total) if np.ndim(total) == 0 else total


def eval_FG(x, N: int, Q: int, r: int, gamma: float) -> tuple:
    return eval_F(x, N, r, gamma), eval_G(x, N, Q, r, gamma)
