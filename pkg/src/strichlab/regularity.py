"""Exponent arithmetic for NLS on products of spheres and tori.

Everything here is exact: exponents are :class:`fractions.Fraction` and the
free slack parameters (``delta``, ``eta``, ``eps``) are carried as named
symbols until a numeric value is requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

__all__ = [
    "UNBOUNDED",
    "ManifoldSpec",
    "SlackExpr",
    "EstimateConstant",
    "ThresholdRow",
    "LinearThreshold",
    "NoAdmissibleTriple",
    "critical_regularity",
    "sogge_delta",
    "gamma_exponent",
    "mls_constant",
    "mljspe_constant",
    "mlspe_constant",
    "lwp_threshold",
    "lwp_candidates",
    "llwp_threshold",
    "optimize_linear_threshold",
    "threshold_rows",
    "THRESHOLD_CSV_COLUMNS",
]

SLACK_SYMBOLS = ("delta", "eta", "eps")


class _Unbounded:
    """Sentinel for ``min`` over an empty set of dimensions."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("strichlab.UNBOUNDED")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


UNBOUNDED = _Unbounded()


@dataclass(frozen=True)
class ManifoldSpec:
    """``S^{d_1} x ... x S^{d_{r0}} x T^{r1}``."""

    sphere_dims: tuple[int, ...] = ()
    torus_dim: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sphere_dims", tuple(int(d) for d in self.sphere_dims))
        if any(d < 2 for d in self.sphere_dims):
            raise ValueError(f"sphere dimensions must be >= 2, got {self.sphere_dims}")
        if self.torus_dim < 0:
            raise ValueError("torus_dim must be >= 0")
        if self.r < 1:
            raise ValueError("manifold needs at least one factor")

    @classmethod
    def parse(cls, spheres: str | Sequence[int] | None = None, torus: int = 0) -> "ManifoldSpec":
        if spheres is None or spheres == "":
            dims: tuple[int, ...] = ()
        elif isinstance(spheres, str):
            dims = tuple(int(s) for s in spheres.split(",") if s.strip())
        else:
            dims = tuple(spheres)
        return cls(dims, int(torus))

    @property
    def r0(self) -> int:
        return len(self.sphere_dims)

    @property
    def r1(self) -> int:
        return self.torus_dim

    @property
    def r(self) -> int:
        return self.r0 + self.r1

    @property
    def d(self) -> int:
        return sum(self.sphere_dims) + self.torus_dim

    @property
    def r2(self) -> int:
        return sum(1 for d in self.sphere_dims if d == 2)

    @property
    def r3(self) -> int:
        return sum(1 for d in self.sphere_dims if d == 3)

    @property
    def d_prime(self):
        """Smallest sphere dimension other than 2, or :data:`UNBOUNDED`."""
        rest = [d for d in self.sphere_dims if d != 2]
        return min(rest) if rest else UNBOUNDED

    @property
    def sphere_part(self) -> "ManifoldSpec":
        return ManifoldSpec(self.sphere_dims, 0)

    @property
    def label(self) -> str:
        parts = [f"S{d}" for d in self.sphere_dims]
        if self.torus_dim:
            parts.append(f"T{self.torus_dim}")
        return "x".join(parts)

    def __str__(self):
        return self.label


# ---------------------------------------------------------------------------
# symbolic slack


@dataclass(frozen=True)
class SlackExpr:
    """``const + sum(coeff * symbol)`` with exact rational coefficients."""

    const: Fraction = Fraction(0)
    coeffs: tuple[tuple[str, Fraction], ...] = ()

    @classmethod
    def of(cls, value=0, **symbols) -> "SlackExpr":
        terms = tuple(sorted((k, Fraction(v)) for k, v in symbols.items() if v))
        return cls(Fraction(value), terms)

    def coeff(self, name: str) -> Fraction:
        return dict(self.coeffs).get(name, Fraction(0))

    def _combine(self, other, sign):
        other = other if isinstance(other, SlackExpr) else SlackExpr(Fraction(other))
        merged = dict(self.coeffs)
        for k, v in other.coeffs:
            merged[k] = merged.get(k, Fraction(0)) + sign * v
        return SlackExpr(self.const + sign * other.const,
                         tuple(sorted((k, v) for k, v in merged.items() if v)))

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return SlackExpr(Fraction(other)) - self

    def __mul__(self, scalar):
        s = Fraction(scalar)
        return SlackExpr(self.const * s, tuple((k, v * s) for k, v in self.coeffs if v * s))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.coeffs)

    def evaluate(self, values: Mapping[str, float | Fraction]):
        total = self.const
        for k, v in self.coeffs:
            if k not in values or values[k] is None:
                raise ValueError(f"slack parameter {k!r} has no value")
            total = total + v * values[k]
        return total

    def __str__(self):
        out = str(self.const)
        for k, v in self.coeffs:
            sign = "+" if v > 0 else "-"
            mag = abs(v)
            out += f" {sign} {'' if mag == 1 else str(mag) + '*'}{k}"
        return out


@dataclass(frozen=True)
class EstimateConstant:
    """Symbolic right-hand side ``gain^delta * prod N_j^{e_j} (log N_j)^{l_j}``.

    ``gain`` is ``N_{gain_index}/N_1 + 1/N_2``; ``gain_exponent`` is None when
    the estimate carries no gain factor.
    """

    base_exponents: Mapping[int, SlackExpr]
    log_powers: Mapping[int, Fraction] = field(default_factory=dict)
    gain_exponent: SlackExpr | None = None
    gain_index: int = 2
    epsilon_slack: bool = False
    params: Mapping[str, float | Fraction | None] = field(default_factory=dict)
    case: str = ""

    def _values(self, overrides):
        vals = dict(self.params)
        vals.update({k: v for k, v in overrides.items() if v is not None})
        return vals

    def exponent(self, j: int, **overrides):
        expr = self.base_exponents.get(j)
        if expr is None:
            return Fraction(0)
        return expr.evaluate(self._values(overrides))

    def evaluate(self, Ns: Sequence[float], include_gain: bool = True, **overrides) -> float:
        """Value at spectral parameters ``Ns = (N_1, ..., N_{k+1})``."""
        vals = self._values(overrides)
        log_val = 0.0
        for j, expr in self.base_exponents.items():
            log_val += float(expr.evaluate(vals)) * math.log(Ns[j - 1])
        for j, power in self.log_powers.items():
            if power:
                log_val += float(power) * math.log(math.log(Ns[j - 1]))
        if include_gain and self.gain_exponent is not None:
            gain = Ns[self.gain_index - 1] / Ns[0] + 1.0 / Ns[1]
            log_val += float(self.gain_exponent.evaluate(vals)) * math.log(gain)
        return math.exp(log_val)

    def total_exponent(self, **overrides) -> Fraction:
        """Exponent of N when all spectral parameters equal N (gain ignored)."""
        vals = self._values(overrides)
        return sum((e.evaluate(vals) for e in self.base_exponents.values()), Fraction(0))

    def describe(self) -> str:
        parts = []
        if self.gain_exponent is not None:
            parts.append(f"(N{self.gain_index}/N1 + 1/N2)^({self.gain_exponent})")
        for j in sorted(self.base_exponents):
            parts.append(f"N{j}^({self.base_exponents[j]})")
        for j in sorted(self.log_powers):
            if self.log_powers[j]:
                parts.append(f"(log N{j})^({self.log_powers[j]})")
        return " * ".join(parts) or "1"


# ---------------------------------------------------------------------------
# basic exponents


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9) if x != int(x) else Fraction(int(x))
    return Fraction(x)


def _inv(p) -> Fraction:
    """``1/p`` with ``p = inf`` mapped to 0."""
    if p == math.inf:
        return Fraction(0)
    return 1 / _frac(p)


def critical_regularity(spec: ManifoldSpec, k: int) -> Fraction:
    if k < 1:
        raise ValueError("k must be >= 1")
    return Fraction(spec.d, 2) - Fraction(1, k)


def sogge_junction(dim) -> Fraction:
    """``2(d+1)/(d-1)``; tends to 2 as ``d`` is unbounded."""
    if dim is UNBOUNDED:
        return Fraction(2)
    return Fraction(2 * (dim + 1), dim - 1)


def sogge_delta(p, dim: int) -> Fraction:
    if dim < 2:
        raise ValueError("dim must be >= 2")
    u = _inv(p)
    if u > Fraction(1, 2):
        raise ValueError("p must be >= 2")
    if p == math.inf or _frac(p) >= sogge_junction(dim):
        return Fraction(dim - 1, 2) - dim * u
    return Fraction(dim - 1, 2) * (Fraction(1, 2) - u)


def gamma_exponent(spec: ManifoldSpec, p, eps=0):
    """Smallest admissible restricted-Strichartz exponent, or None if unknown."""
    u = _inv(p)
    if u > Fraction(1, 2):
        raise ValueError("p must be >= 2")
    r, r0, r1 = spec.r, spec.r0, spec.r1
    half_r = Fraction(r, 2)
    p_is_two = u == Fraction(1, 2)
    candidates = []
    if not p_is_two and r1 == 0:
        candidates.append(half_r - 2 * u)
    if u < Fraction(r, 2 * (r + 2)):
        candidates.append(half_r - (2 + r1) * u)
    if r0 >= 2:
        candidates.append(half_r - (2 + r1) * u + _frac(eps))
    if p_is_two and r0 <= 1:
        candidates.append(Fraction(0))
    return min(candidates) if candidates else None


# ---------------------------------------------------------------------------
# estimate constants


def _bind(delta, delta0, eta, eps):
    if delta is None and delta0 is not None:
        delta = _frac(delta0) / 2
    return {"delta": delta, "eta": eta, "eps": eps}


def mls_constant(spec: ManifoldSpec, k: int, *, delta=None, delta0=None, eta=None,
                 eps=None) -> EstimateConstant:
    """Right-hand constant of the multilinear Strichartz estimate.

    ``delta`` defaults to ``delta0/2`` when only the knob ``delta0`` is given;
    any slack left unset stays symbolic.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    r, d, r2, r3 = spec.r, spec.d, spec.r2, spec.r3
    if r < 2:
        raise ValueError(f"no multilinear Strichartz case covers r={r}")
    params = _bind(delta, delta0, eta, eps)
    half_d = Fraction(d, 2)
    delta_sym = SlackExpr.of(delta=1)
    logs = {2: Fraction(r3, 2)} if r3 else {}

    if k == 1:
        if spec.r0 == 2 and spec.r1 == 0 and min(spec.sphere_dims) >= 4:
            return EstimateConstant({2: SlackExpr.of(half_d - 1)}, {}, delta_sym, 2,
                                    False, params, "iii")
        if r >= 3:
            return EstimateConstant({2: SlackExpr.of(half_d - 1 + Fraction(r2, 4))}, logs,
                                    delta_sym, 2, False, params, "i")
        return EstimateConstant({2: SlackExpr.of(half_d - 1 + Fraction(r2, 4), eps=1)}, logs,
                                None, 2, True, params, "ii")

    q = Fraction(r2, 4)
    eps_coeff = 1 if r == 2 else 0
    exps = {
        2: SlackExpr.of(half_d - 1 + q, eta=r3, eps=eps_coeff, delta=k - 1),
        3: SlackExpr.of(half_d - q, eta=-r3, eps=-eps_coeff, delta=-1),
    }
    for j in range(4, k + 2):
        exps[j] = SlackExpr.of(half_d, delta=-1)
    return EstimateConstant(exps, {}, delta_sym, k + 1, r == 2, params,
                            "v" if r == 2 else "iv")


def mljspe_constant(spec: ManifoldSpec, k: int, eta=None) -> EstimateConstant:
    """Joint spectral projector constant ``C(N_1, ..., N_{k+1})`` on a product of spheres."""
    if spec.r1 != 0 or spec.r0 < 1:
        raise ValueError("joint projector bound needs a product of spheres only")
    if k < 1:
        raise ValueError("k must be >= 1")
    if k >= 2 and eta is not None and eta <= 0:
        raise ValueError("eta must be > 0")
    d, r, r2, r3 = spec.d, spec.r, spec.r2, spec.r3
    base = Fraction(d - 2 * r, 2) + Fraction(r2, 4)
    if k == 1:
        logs = {2: Fraction(r3, 2)} if r3 else {}
        return EstimateConstant({2: SlackExpr.of(base)}, logs, None, 2, False,
                                {"eta": eta}, "k=1")
    exps = {
        2: SlackExpr.of(base, eta=r3),
        3: SlackExpr.of(Fraction(d - r, 2) - Fraction(r2, 4), eta=-r3),
    }
    for j in range(4, k + 2):
        exps[j] = SlackExpr.of(Fraction(d - r, 2))
    return EstimateConstant(exps, {}, None, 2, False, {"eta": eta}, "k>=2")


def mlspe_constant(dim: int, k: int, eta=None) -> EstimateConstant:
    """Single-manifold multilinear projector constant on a ``dim``-manifold."""
    d2 = 1 if dim == 2 else 0
    d3 = 1 if dim == 3 else 0
    base = Fraction(dim - 2, 2) + Fraction(d2, 4)
    if k == 1:
        logs = {2: Fraction(d3, 2)} if d3 else {}
        return EstimateConstant({2: SlackExpr.of(base)}, logs, None, 2, False, {"eta": eta})
    exps = {
        2: SlackExpr.of(base, eta=d3),
        3: SlackExpr.of(Fraction(dim - 1, 2) - Fraction(d2, 4), eta=-d3),
    }
    for j in range(4, k + 2):
        exps[j] = SlackExpr.of(Fraction(dim - 1, 2))
    return EstimateConstant(exps, {}, None, 2, False, {"eta": eta})


# ---------------------------------------------------------------------------
# well-posedness thresholds


@dataclass(frozen=True)
class ThresholdRow:
    regime: str
    s_bound: Fraction
    strict: bool
    source: str
    rule: str

    @property
    def relation(self) -> str:
        return ">" if self.strict else ">="


@dataclass(frozen=True)
class _Rule:
    source: str
    rule: str
    applies: Callable[[ManifoldSpec, int], bool]
    bound: Callable[[ManifoldSpec, int], Fraction]
    strict: bool


def _sc(m, k):
    return critical_regularity(m, k)


def _below_half_d(offset):
    return lambda m, k: Fraction(m.d, 2) - offset(m, k)


def _const(x):
    return lambda m, k: Fraction(x)


def _r_over_r4(m, k):
    return Fraction(m.r, m.r + 4)


def _is_torus(m, n=None):
    return m.r0 == 0 and (n is None or m.r1 == n)


def _is_sphere(m):
    return m.r0 == 1 and m.r1 == 0


def _two_big_spheres(m):
    return m.r0 == 2 and m.r1 == 0 and min(m.sphere_dims) >= 4


def _prod(pred):
    # pure tori are handled by their own rows
    return lambda m, k: m.r >= 2 and m.r0 >= 1 and pred(m, k)


# Ordered most specific first. Ties on (bound, strictness) go to the earlier rule.
_LWP_RULES: tuple[_Rule, ...] = (
    # new multilinear results, tried before the literature rows
    _Rule("multilinear", "r2=0,1, k>=2: s>=s_c", _prod(lambda m, k: m.r2 <= 1 and k >= 2), _sc, False),
    _Rule("multilinear", "S^d1xS^d2, d1,d2>=4, k>=1: s>=s_c", _prod(lambda m, k: _two_big_spheres(m)), _sc, False),
    _Rule("multilinear", "r2=2, k>=3: s>=s_c", _prod(lambda m, k: m.r2 == 2 and k >= 3), _sc, False),
    _Rule("multilinear", "r2=3, k>=5: s>=s_c", _prod(lambda m, k: m.r2 == 3 and k >= 5), _sc, False),
    _Rule("multilinear", "r2=2, r=2,3, k=2: s>s_c", _prod(lambda m, k: m.r2 == 2 and m.r in (2, 3) and k == 2), _sc, True),
    _Rule("multilinear", "r2=1, r<=11, k=1: s>d/2-3/4",
          _prod(lambda m, k: m.r2 == 1 and m.r <= 11 and k == 1), _below_half_d(lambda m, k: Fraction(3, 4)), True),
    # tori
    _Rule("Bou93", "T^1, k=1: s>=0", lambda m, k: _is_torus(m, 1) and k == 1, _const(0), False),
    _Rule("HTT11+Wan13", "T^1, k>=3: s>=s_c", lambda m, k: _is_torus(m, 1) and k >= 3, _sc, False),
    _Rule("Bou93", "T^1, k>=2: s>s_c", lambda m, k: _is_torus(m, 1) and k >= 2, _sc, True),
    _Rule("Bou93+GOW14", "T^2, k>=2: s>s_c", lambda m, k: _is_torus(m, 2) and k >= 2, _sc, True),
    _Rule("HTT11+HTT14+Wan13+GOW14+BD15+KV16", "T^d, d>=3, k>=1: s>=s_c",
          lambda m, k: _is_torus(m) and m.r1 >= 3, _sc, False),
    # spheres
    _Rule("BGT05", "S^2, k=1: s>1/4", lambda m, k: _is_sphere(m) and m.d == 2 and k == 1, _const(Fraction(1, 4)), True),
    _Rule("Zha16", "S^2, k>=3: s>=s_c", lambda m, k: _is_sphere(m) and m.d == 2 and k >= 3, _sc, False),
    _Rule("Yan15", "S^2, k>=2: s>s_c", lambda m, k: _is_sphere(m) and m.d == 2 and k >= 2, _sc, True),
    _Rule("Her13+Zha16", "S^d, d>=3, k>=2: s>=s_c", lambda m, k: _is_sphere(m) and m.d >= 3 and k >= 2, _sc, False),
    _Rule("Yan15", "S^d, d>=3, k>=1: s>s_c", lambda m, k: _is_sphere(m) and m.d >= 3, _sc, True),
    # products of spheres and tori
    _Rule("DZZ25", "S^3xT^r1, r1>=2, k=1: s>=s_c",
          _prod(lambda m, k: m.sphere_dims == (3,) and m.r1 >= 2 and k == 1), _sc, False),
    _Rule("multilinear", "S^d1xS^d2, d1,d2>=4, k=1: s>=s_c", _prod(lambda m, k: _two_big_spheres(m) and k == 1), _sc, False),
    _Rule("Zha21", "r2=r3=0, r>=3, k=1: s>=s_c", _prod(lambda m, k: m.r2 == 0 and m.r3 == 0 and m.r >= 3 and k == 1), _sc, False),
    _Rule("multilinear", "r2=0, k>=2: s>=s_c", _prod(lambda m, k: m.r2 == 0 and k >= 2), _sc, False),
    _Rule("BGT04+Zha21+multilinear", "r2=0, k>=1: s>s_c", _prod(lambda m, k: m.r2 == 0), _sc, True),
    _Rule("multilinear", "r2=1, r<=11, k=1: s>d/2-3/4",
          _prod(lambda m, k: m.r2 == 1 and m.r <= 11 and k == 1), _below_half_d(lambda m, k: Fraction(3, 4)), True),
    _Rule("Zha21", "r2=1, r>=12, k=1: s>d/2-r/(r+4)",
          _prod(lambda m, k: m.r2 == 1 and m.r >= 12 and k == 1), _below_half_d(_r_over_r4), True),
    _Rule("HS15+multilinear", "r2=1, k>=2: s>=s_c", _prod(lambda m, k: m.r2 == 1 and k >= 2), _sc, False),
    _Rule("BGT04", "r2=2, r<=4, k=1: s>=d/2-1/2",
          _prod(lambda m, k: m.r2 == 2 and m.r <= 4 and k == 1), _below_half_d(lambda m, k: Fraction(1, 2)), False),
    _Rule("Zha21", "r2=2, r>=5, k=1: s>=d/2-r/(r+4)",
          _prod(lambda m, k: m.r2 == 2 and m.r >= 5 and k == 1), _below_half_d(_r_over_r4), False),
    _Rule("multilinear", "r2=2, k>=3: s>=s_c", _prod(lambda m, k: m.r2 == 2 and k >= 3), _sc, False),
    _Rule("Zha21+multilinear", "r2=2, k>=2: s>s_c", _prod(lambda m, k: m.r2 == 2 and k >= 2), _sc, True),
    _Rule("BGT04", "r2=3, r<=4, k=1: s>d/2-1/2",
          _prod(lambda m, k: m.r2 == 3 and m.r <= 4 and k == 1), _below_half_d(lambda m, k: Fraction(1, 2)), True),
    _Rule("Zha21", "r2=3, r>=5, k=1: s>d/2-r/(r+4)",
          _prod(lambda m, k: m.r2 == 3 and m.r >= 5 and k == 1), _below_half_d(_r_over_r4), True),
    _Rule("Zha21", "S^2xS^2xS^2, k=2: s>d/2-3/7",
          _prod(lambda m, k: m.sphere_dims == (2, 2, 2) and m.r1 == 0 and k == 2),
          _below_half_d(lambda m, k: Fraction(3, 7)), True),
    _Rule("Zha21", "r2=3, r>=4, k=2: s>s_c", _prod(lambda m, k: m.r2 == 3 and m.r >= 4 and k == 2), _sc, True),
    _Rule("multilinear", "r2=3, k>=5: s>=s_c", _prod(lambda m, k: m.r2 == 3 and k >= 5), _sc, False),
    _Rule("BGT04", "r2=3, k>=3: s>s_c", _prod(lambda m, k: m.r2 == 3 and k >= 3), _sc, True),
    _Rule("Zha21", "r2>=4, k=1: s>d/2-r/(r+4)",
          _prod(lambda m, k: m.r2 >= 4 and k == 1), _below_half_d(_r_over_r4), True),
    _Rule("Zha21", "r2>=4, k>=2: s>s_c", _prod(lambda m, k: m.r2 >= 4 and k >= 2), _sc, True),
    # any compact manifold
    _Rule("BGT04", "general: s>d/2-1/(2k)", lambda m, k: True,
          _below_half_d(lambda m, k: Fraction(1, 2 * k)), True),
)


def _regime(spec, k, bound, strict):
    sc = critical_regularity(spec, k)
    if bound < sc:
        raise AssertionError(f"threshold {bound} below scaling {sc}")
    if bound > sc:
        return "subcritical"
    return "almost-critical" if strict else "critical"


def _row(spec, k, rule: _Rule) -> ThresholdRow:
    bound = rule.bound(spec, k)
    return ThresholdRow(_regime(spec, k, bound, rule.strict), bound, rule.strict,
                        rule.source, rule.rule)


def lwp_candidates(spec: ManifoldSpec, k: int) -> list[ThresholdRow]:
    """Every tabulated well-posedness statement that applies to ``(spec, k)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return [_row(spec, k, rule) for rule in _LWP_RULES if rule.applies(spec, k)]


def _best(rows: Iterable[ThresholdRow]) -> ThresholdRow:
    best = None
    for row in rows:
        if best is None or (row.s_bound, row.strict) < (best.s_bound, best.strict):
            best = row
    return best


def lwp_threshold(spec: ManifoldSpec, k: int) -> ThresholdRow:
    """Best known local well-posedness threshold; always defined via the general row."""
    return _best(lwp_candidates(spec, k))


# ---------------------------------------------------------------------------
# linear Strichartz route


def _frac_or_inf(x):
    return x if x is UNBOUNDED else Fraction(x)


def _dp_ratio(dp) -> Fraction:
    """``d'/(2(d'+1))``, which is 1/2 when ``d'`` is unbounded."""
    if dp is UNBOUNDED:
        return Fraction(1, 2)
    return Fraction(dp, 2 * (dp + 1))


def _odd_upgrade_exponent(dp, r) -> Fraction:
    """``2 + 4(d'+1)/(d' r)``."""
    if dp is UNBOUNDED:
        return 2 + Fraction(4, r)
    return 2 + Fraction(4 * (dp + 1), dp * r)


def _all_odd_spheres(m: ManifoldSpec) -> bool:
    return m.r1 == 0 and all(d % 2 == 1 for d in m.sphere_dims)


def _llwp_p0_multi(m: ManifoldSpec) -> Fraction:
    dp = m.d_prime
    second = _odd_upgrade_exponent(dp, m.r) if _all_odd_spheres(m) else 2 + Fraction(8, m.r)
    return min(sogge_junction(dp), second)


def _llwp_p0_single(m: ManifoldSpec) -> Fraction:
    dp = m.d_prime
    second = _odd_upgrade_exponent(dp, m.r) if _all_odd_spheres(m) else 2 + Fraction(8, m.r)
    return min(max(Fraction(2 * (m.r + 2), m.r), sogge_junction(dp)), second)


_LLWP_RULES: tuple[_Rule, ...] = (
    _Rule("linear-strichartz", "k=1, r2>=1, r=2,3,4: s>d/2-1/2",
          lambda m, k: k == 1 and m.r2 >= 1 and 2 <= m.r <= 4, _below_half_d(lambda m, k: Fraction(1, 2)), True),
    _Rule("linear-strichartz", "k=1, r2>=1, r>=5: s>d/2-r/(r+4)",
          lambda m, k: k == 1 and m.r2 >= 1 and m.r >= 5, _below_half_d(_r_over_r4), True),
    _Rule("linear-strichartz", "k=1, r2=0, r0>=2: s>d/2-2/p0",
          lambda m, k: k == 1 and m.r2 == 0 and m.r0 >= 2, _below_half_d(lambda m, k: 2 / _llwp_p0_multi(m)), True),
    _Rule("linear-strichartz", "k=1, r2=0, r0=1: s>d/2-2/p0",
          lambda m, k: k == 1 and m.r2 == 0 and m.r0 == 1, _below_half_d(lambda m, k: 2 / _llwp_p0_single(m)), True),
    _Rule("linear-strichartz", "k=2, r>=4: s>s_c", lambda m, k: k == 2 and m.r >= 4, _sc, True),
    _Rule("linear-strichartz", "k=2, r=3, r2=2,3: s>d/2-3/7",
          lambda m, k: k == 2 and m.r == 3 and m.r2 in (2, 3), _below_half_d(lambda m, k: Fraction(3, 7)), True),
    _Rule("linear-strichartz", "k=2, S^2xS^2: s>d/2-1/3",
          lambda m, k: k == 2 and m.sphere_dims == (2, 2) and m.r1 == 0,
          _below_half_d(lambda m, k: Fraction(1, 3)), True),
    _Rule("linear-strichartz", "k=2, r2=1, r=2: s>d/2-d'/(2(d'+1))",
          lambda m, k: k == 2 and m.r2 == 1 and m.r == 2, _below_half_d(lambda m, k: _dp_ratio(m.d_prime)), True),
    _Rule("linear-strichartz", "k=2, r2=1, r=3, d'<=6: s>d/2-3/7",
          lambda m, k: k == 2 and m.r2 == 1 and m.r == 3 and m.d_prime <= 6,
          _below_half_d(lambda m, k: Fraction(3, 7)), True),
    _Rule("linear-strichartz", "k=2, r2=1, r=3, d'>=7: s>d/2-d'/(2(d'+1))",
          lambda m, k: k == 2 and m.r2 == 1 and m.r == 3 and m.d_prime >= 7,
          _below_half_d(lambda m, k: _dp_ratio(m.d_prime)), True),
    _Rule("linear-strichartz", "k=2, r2=0: s>s_c", lambda m, k: k == 2 and m.r2 == 0, _sc, True),
    _Rule("linear-strichartz", "k>=3: s>s_c", lambda m, k: k >= 3, _sc, True),
)


def llwp_threshold(spec: ManifoldSpec, k: int) -> ThresholdRow | None:
    """Threshold claimed through linear Strichartz estimates, None if no case applies."""
    if spec.r < 2:
        raise ValueError("linear-route table needs r >= 2")
    rows = [_row(spec, k, rule) for rule in _LLWP_RULES if rule.applies(spec, k)]
    return _best(rows) if rows else None


class NoAdmissibleTriple(ValueError):
    pass


@dataclass(frozen=True)
class LinearThreshold:
    """Minimiser of ``s0 + d/q0``; ``attained`` is False at an open endpoint."""

    p0: object
    q0: object
    s0: Fraction
    threshold: Fraction
    case: int
    attained: bool


def _triples_at(spec: ManifoldSpec, p, eps=0):
    """Admissible ``(q, s, case)`` at time exponent ``p`` (closure of each case's range)."""
    u = _inv(p)
    d, r = spec.d, spec.r
    out = [(Fraction(2), Fraction(0), 1)]
    # case 2: 2/p + d/q = d/2 with q < inf needs p > 4/d
    if 2 * u < Fraction(d, 2):
        inv_q = (Fraction(d, 2) - 2 * u) / d
        q = 1 / inv_q if inv_q else UNBOUNDED
        out.append((q, u, 2))
    elif 2 * u == Fraction(d, 2):
        out.append((UNBOUNDED, u, 2))
    p_eq_q = UNBOUNDED if u == 0 else 1 / u
    gam = _gamma_closure(spec, u, eps)
    if gam is not None:
        s = gam + sum((sogge_delta(math.inf if u == 0 else 1 / u, di) for di in spec.sphere_dims), Fraction(0))
        out.append((p_eq_q, s, 3))
    if u <= 1 / (2 + Fraction(8, r)):
        out.append((p_eq_q, Fraction(d, 2) - (d + 2) * u, 4))
    if _all_odd_spheres(spec) and u <= 1 / _odd_upgrade_exponent(spec.d_prime, r):
        out.append((p_eq_q, Fraction(d, 2) - (d + 2) * u, 5))
    return out


def _gamma_closure(spec, u, eps):
    # open side conditions of gamma(p) are relaxed to their closure; the
    # resulting well-posedness statement is strict anyway
    r, r0, r1 = spec.r, spec.r0, spec.r1
    half_r = Fraction(r, 2)
    cands = []
    if r1 == 0:
        cands.append(half_r - 2 * u)
    if u <= Fraction(r, 2 * (r + 2)):
        cands.append(half_r - (2 + r1) * u)
    if r0 >= 2:
        cands.append(half_r - (2 + r1) * u + _frac(eps))
    if u == Fraction(1, 2) and r0 <= 1:
        cands.append(Fraction(0))
    return min(cands) if cands else None


def _breakpoints(spec: ManifoldSpec, k: int) -> set:
    r, d = spec.r, spec.d
    pts = {Fraction(2 * k), Fraction(2), Fraction(2 * (r + 2), r), 2 + Fraction(8, r), math.inf}
    if d > 0:
        pts.add(Fraction(4, d))
    for di in set(spec.sphere_dims):
        pts.add(sogge_junction(di))
    if _all_odd_spheres(spec):
        pts.add(_odd_upgrade_exponent(spec.d_prime, r))
    return pts


def default_grid(k: int, p_max=32, step=Fraction(1, 4)) -> list:
    grid = []
    p = Fraction(2 * k) + step
    while p <= p_max:
        grid.append(p)
        p += step
    grid.append(math.inf)
    return grid


def optimize_linear_threshold(spec: ManifoldSpec, k: int, search_grid: Sequence | None = None,
                              p_max=math.inf) -> LinearThreshold:
    """Minimise ``s0 + d/q0`` over admissible triples with ``p0 > 2k``.

    The supplied grid is augmented with every breakpoint of the piecewise
    linear (in ``1/p``) thresholds, so the infimum is found exactly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    grid = list(search_grid) if search_grid is not None else default_grid(k)
    lo = Fraction(2 * k)
    cap = math.inf if p_max == math.inf else Fraction(p_max)
    if grid and not any((g == math.inf or Fraction(g) > lo) for g in grid):
        raise NoAdmissibleTriple(f"grid has no exponent above 2k={lo}")
    cands = {g if g == math.inf else Fraction(g) for g in grid}
    cands |= _breakpoints(spec, k)
    cands = {c for c in cands if (c == math.inf and cap == math.inf)
             or (c != math.inf and lo <= c and (cap == math.inf or c <= cap))}
    best = None
    d = spec.d
    for p in sorted(cands, key=lambda c: (c == math.inf, c if c != math.inf else 0)):
        for q, s, case in _triples_at(spec, p):
            thr = s + (0 if q is UNBOUNDED else Fraction(d) / q)
            attained = p != lo
            key = (thr, not attained, case)
            if best is None or key < best[0]:
                best = (key, LinearThreshold(p, q, s, thr, case, attained))
    if best is None:
        raise NoAdmissibleTriple("no admissible triple on the grid")
    return best[1]


# ---------------------------------------------------------------------------
# tables

THRESHOLD_CSV_COLUMNS = ("r2", "r3", "r", "k", "regime", "s_bound", "strict", "source")


def threshold_rows(spec: ManifoldSpec, ks: Iterable[int]) -> list[dict]:
    rows = []
    for k in ks:
        row = lwp_threshold(spec, k)
        rows.append({
            "r2": spec.r2, "r3": spec.r3, "r": spec.r, "k": k,
            "regime": row.regime, "s_bound": str(row.s_bound),
            "strict": int(row.strict), "source": row.source,
            "rule": row.rule,
        })
    return rows
