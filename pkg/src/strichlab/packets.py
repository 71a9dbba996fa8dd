"""Joint eigenfunction packets on products of spheres and tori, and their multilinear space-time norms.

Phases use the model spectrum: a joint mode with frequency
``xi = (n_1, ..., n_r0, mu)`` evolves as ``exp(-i t |xi|^2)``. All L^2 norms
are taken with respect to probability measures, on ``M`` and on ``[0, 2pi]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import roots_jacobi

from .lattice import Cube, SpectralWindow, norm2, slab_decompose, window_enumerate
from .quadrature import build_sphere_quadrature
from .regularity import ManifoldSpec, mljspe_constant, mls_constant
from .specialfn import HIGHEST_WEIGHT, ZONAL, SphereMode, evaluate_mode

__all__ = [
    "DEFAULT_TUPLE_BUDGET",
    "DEFAULT_GRID_BUDGET",
    "PacketBudgetExceeded",
    "JointMode",
    "Packet",
    "ProductNormReport",
    "evaluate_packet",
    "packet_l2_norm",
    "product_L2_factorized",
    "level_set_cells",
    "strichartz_lhs",
    "strichartz_lhs_grid",
    "inner_product_grid",
    "orthogonality_probe",
    "projector_experiment",
    "strichartz_experiment",
    "PACKET_FAMILIES",
]

DEFAULT_TUPLE_BUDGET = 2_000_000
DEFAULT_GRID_BUDGET = 20_000_000

PACKET_FAMILIES = ("single", "random", "slab")


class PacketBudgetExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------- modes and packets

@dataclass(frozen=True)
class JointMode:
    sphere_modes: tuple = ()
    torus_freq: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "sphere_modes", tuple(self.sphere_modes))
        object.__setattr__(self, "torus_freq", tuple(int(v) for v in self.torus_freq))

    @classmethod
    def of(cls, spec: ManifoldSpec, xi: Sequence[int], kinds: Sequence[str] | str = ZONAL) -> "JointMode":
        """Joint mode with frequency ``xi``; ``kinds`` picks zonal or highest-weight per sphere."""
        if len(xi) != spec.r:
            raise ValueError(f"frequency {tuple(xi)} does not fit {spec.label}")
        if isinstance(kinds, str):
            kinds = [kinds] * spec.r0
        modes = tuple(SphereMode(d, int(n), kind) for d, n, kind in zip(spec.sphere_dims, xi, kinds))
        return cls(modes, tuple(xi[spec.r0:]))

    @property
    def xi(self) -> tuple:
        return tuple(m.degree for m in self.sphere_modes) + self.torus_freq

    @property
    def frequency(self) -> int:
        """``|xi|^2``, the model phase frequency."""
        return norm2(self.xi)

    def phase_frequency(self, true_spectrum: bool = False) -> int:
        if not true_spectrum:
            return self.frequency
        return sum(-m.eigenvalue for m in self.sphere_modes) + norm2(self.torus_freq)

    def fits(self, spec: ManifoldSpec) -> bool:
        return (tuple(m.dim for m in self.sphere_modes) == tuple(spec.sphere_dims)
                and len(self.torus_freq) == spec.r1)


def _sphere_inner(a: SphereMode, b: SphereMode) -> complex:
    q = build_sphere_quadrature(a.dim, a.degree + b.degree)
    return complex(np.sum(q.weights * evaluate_mode(a, q.nodes) * np.conj(evaluate_mode(b, q.nodes))))


def _mode_inner(a: JointMode, b: JointMode) -> complex:
    if a.torus_freq != b.torus_freq or a.xi != b.xi:
        return 0j
    return complex(np.prod([_sphere_inner(x, y) for x, y in zip(a.sphere_modes, b.sphere_modes)]))


@dataclass(frozen=True)
class Packet:
    terms: tuple
    window: SpectralWindow | None = None

    def __init__(self, terms: Sequence[tuple], window: SpectralWindow | None = None):
        terms = tuple((m, complex(c)) for m, c in terms)
        if not terms:
            raise ValueError("a packet needs at least one term")
        if len({(len(m.sphere_modes), len(m.torus_freq)) for m, _ in terms}) != 1:
            raise ValueError("terms live on different manifolds")
        if window is not None:
            for m, _ in terms:
                if not window.contains(m.xi):
                    raise ValueError(f"mode {m.xi} outside the window [{window.N}, {2 * window.N}]")
        by_xi: dict = {}
        for m, _ in terms:
            by_xi.setdefault(m.xi, []).append(m)
        for group in by_xi.values():
            for a, b in itertools.combinations(group, 2):
                if abs(_mode_inner(a, b)) > 1e-10:
                    raise ValueError(f"non-orthogonal modes share the frequency {a.xi}")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "window", window)

    @classmethod
    def single(cls, mode: JointMode, coef: complex = 1.0) -> "Packet":
        return cls([(mode, coef)])

    @property
    def modes(self) -> list:
        return [m for m, _ in self.terms]

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for _, c in self.terms], dtype=complex)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))

    def scaled(self, factors) -> "Packet":
        factors = np.broadcast_to(np.asarray(factors, dtype=complex), (len(self.terms),))
        return Packet([(m, c * f) for (m, c), f in zip(self.terms, factors)], self.window)

    def conj(self) -> "Packet":
        return Packet([(m, np.conj(c)) for m, c in self.terms], self.window)


# ---------------------------------------------------------------- pointwise evaluation

def evaluate_packet(p: Packet, x0: Sequence, x1: Sequence[float], t: float, true_spectrum: bool = False) -> complex:
    """Model flow ``exp(i t Delta) f`` at one point ``(x0, x1)``."""
    x1 = np.asarray(x1, dtype=float).reshape(-1)
    total = 0j
    for m, c in p.terms:
        if len(x0) != len(m.sphere_modes) or len(x1) != len(m.torus_freq):
            raise ValueError("point does not match the packet's manifold")
        val = c * np.exp(-1j * t * m.phase_frequency(true_spectrum))
        for mode, pt in zip(m.sphere_modes, x0):
            val *= complex(evaluate_mode(mode, pt))
        val *= np.exp(1j * float(np.dot(x1, m.torus_freq))) if len(x1) else 1.0
        total += val
    return complex(total)


# ---------------------------------------------------------------- factorized products

def _one_variable_rule(factor: Sequence[SphereMode]):
    """Nodes on the sphere and weights when ``|prod f|^2`` depends on a single variable.

    Coaxial zonal modes depend on ``x_a`` only (density ``(1-x^2)^{(d-2)/2}``);
    coaxial highest-weight modes have modulus depending on ``s = x_i^2 + x_j^2``
    only (density ``(1-s)^{(d-3)/2}``). Returns None otherwise.
    """
    d = factor[0].dim
    kinds = {(f.kind, f.axis) for f in factor if f.degree > 0}
    if len(kinds) > 1:
        return None
    total = sum(f.degree for f in factor)
    m = total + 1
    pts = np.zeros((m, d + 1))
    if not kinds or next(iter(kinds))[0] == ZONAL:
        axis = next(iter(kinds))[1] if kinds else 1
        x, w = roots_jacobi(m, (d - 2) / 2, (d - 2) / 2)
        other = axis % (d + 1)  # any coordinate other than the pole
        pts[:, axis - 1] = x
        pts[:, other] = np.sqrt(np.clip(1 - x * x, 0, None))
    else:
        i, j = next(iter(kinds))[1]
        y, w = roots_jacobi(m, (d - 3) / 2, 0.0)
        s = (1 + y) / 2
        other = next(c for c in range(d + 1) if c not in (i - 1, j - 1))
        pts[:, i - 1] = np.sqrt(s)
        pts[:, other] = np.sqrt(np.clip(1 - s, 0, None))
    return pts, w / w.sum()


def _factor_norm(factor: Sequence[SphereMode], budget: int | None) -> float:
    rule = _one_variable_rule(factor)
    if rule is None:
        kw = {} if budget is None else {"budget": budget}
        q = build_sphere_quadrature(factor[0].dim, 2 * sum(f.degree for f in factor), **kw)
        nodes, weights = q.nodes, q.weights
    else:
        nodes, weights = rule
    prod = np.ones(len(weights), dtype=complex)
    for f in factor:
        prod = prod * evaluate_mode(f, nodes)
    return math.sqrt(float(np.dot(weights, np.abs(prod) ** 2)))


def product_L2_factorized(modes: Sequence[JointMode], budget: int | None = None,
                          reduce: bool = True) -> float:
    """``|| prod_j f^j ||_{L^2(M)}`` for single joint modes, one sphere factor at a time.

    With ``reduce`` a factor whose modes are all coaxial zonal or all coaxial
    highest-weight is integrated by a one-variable Gauss-Jacobi rule.
    """
    if not modes:
        raise ValueError("need at least one mode")
    r0 = len(modes[0].sphere_modes)
    total = 1.0
    for i in range(r0):
        factor = [m.sphere_modes[i] for m in modes]
        if reduce:
            total *= _factor_norm(factor, budget)
        else:
            kw = {} if budget is None else {"budget": budget}
            q = build_sphere_quadrature(factor[0].dim, 2 * sum(f.degree for f in factor), **kw)
            prod = np.ones(len(q.weights), dtype=complex)
            for f in factor:
                prod = prod * evaluate_mode(f, q.nodes)
            total *= math.sqrt(float(np.dot(q.weights, np.abs(prod) ** 2)))
    # torus parts are unimodular
    return total


@dataclass(frozen=True)
class _Expansion:
    keys: np.ndarray  # (cells, 1 + r1): total phase frequency and torus frequency
    cell_of: np.ndarray  # cell index per tuple
    coef: np.ndarray  # product of coefficients per tuple
    index: np.ndarray  # (tuples, k+1) term indices


def _expand(packets: Sequence[Packet], r1: int, true_spectrum: bool, budget: int) -> _Expansion:
    sizes = [len(p.terms) for p in packets]
    if math.prod(sizes) > budget:
        raise PacketBudgetExceeded(f"{math.prod(sizes)} term tuples over budget {budget}")
    grids = np.meshgrid(*[np.arange(n) for n in sizes], indexing="ij")
    index = np.stack([g.reshape(-1) for g in grids], axis=1)
    l = np.zeros(len(index), dtype=np.int64)
    mu = np.zeros((len(index), r1), dtype=np.int64)
    coef = np.ones(len(index), dtype=complex)
    for j, p in enumerate(packets):
        lj = np.array([m.phase_frequency(true_spectrum) for m in p.modes], dtype=np.int64)
        muj = np.array([m.torus_freq for m in p.modes], dtype=np.int64).reshape(len(lj), r1)
        l += lj[index[:, j]]
        mu += muj[index[:, j]]
        coef *= p.coefficients[index[:, j]]
    keys, cell_of = np.unique(np.column_stack([l, mu]), axis=0, return_inverse=True)
    return _Expansion(keys, cell_of.reshape(-1), coef, index)


def level_set_cells(packets: Sequence[Packet], true_spectrum: bool = False) -> set:
    """Keys ``(sum |xi^j|^2, sum xi_1^j)`` of the term tuples of a product of packets."""
    r1 = len(packets[0].modes[0].torus_freq)
    exp = _expand(packets, r1, true_spectrum, DEFAULT_TUPLE_BUDGET)
    return {tuple(int(v) for v in k) for k in exp.keys}


class _SphereTables:
    """Mode values at quadrature nodes, one exact rule per sphere factor."""

    def __init__(self, packets: Sequence[Packet], extra: Sequence[Packet] = ()):
        allp = list(packets) + list(extra)
        r0 = len(allp[0].modes[0].sphere_modes)
        self.rules = []
        self.values = []  # values[i][j] -> (terms_j, nodes_i)
        for i in range(r0):
            # the widest product that gets integrated is prod_j f^j times its conjugate
            deg = 2 * sum(max(m.sphere_modes[i].degree for m in p.modes) for p in packets)
            if extra:
                deg = max(deg, 2 * sum(max(m.sphere_modes[i].degree for m in p.modes) for p in extra))
            q = build_sphere_quadrature(allp[0].modes[0].sphere_modes[i].dim, deg)
            self.rules.append(q)
            cache = {}
            vals = []
            for p in allp:
                rows = []
                for m in p.modes:
                    sm = m.sphere_modes[i]
                    if sm not in cache:
                        cache[sm] = evaluate_mode(sm, q.nodes)
                    rows.append(cache[sm])
                vals.append(np.array(rows))
            self.values.append(vals)

    def products(self, i: int, index: np.ndarray, offset: int = 0) -> np.ndarray:
        """Rows ``prod_j f^j`` on factor ``i`` for term tuples ``index``."""
        vals = self.values[i]
        out = np.ones((len(index), len(self.rules[i].weights)), dtype=complex)
        for j in range(index.shape[1]):
            out *= vals[offset + j][index[:, j]]
        return out


def strichartz_lhs(packets: Sequence[Packet], spec: ManifoldSpec, true_spectrum: bool = False,
                   budget: int = DEFAULT_TUPLE_BUDGET, node_budget: int = 50_000_000) -> float:
    """``|| prod_j exp(i t Delta) f^j ||_{L^2([0,2pi] x M)}`` via the level-set expansion.

    Squared norm is the sum over cells ``(l, mu)`` of the ``L^2(M_0)`` norm of
    the cell's sum; sphere inner products factor over the sphere components.
    """
    if len(packets) < 2:
        raise ValueError("need at least two packets")
    for p in packets:
        if not all(m.fits(spec) for m in p.modes):
            raise ValueError(f"packet modes do not fit {spec.label}")
    exp = _expand(packets, spec.r1, true_spectrum, budget)
    if spec.r0 == 0:
        cells = np.zeros(len(exp.keys), dtype=complex)
        np.add.at(cells, exp.cell_of, exp.coef)
        return float(np.sqrt(np.sum(np.abs(cells) ** 2)))
    tables = _SphereTables(packets)
    nodes = sum(len(q.weights) for q in tables.rules)
    if nodes * len(exp.coef) > node_budget:
        raise PacketBudgetExceeded(f"{len(exp.coef)} tuples x {nodes} nodes over budget {node_budget}")
    order = np.argsort(exp.cell_of, kind="stable")
    bounds = np.flatnonzero(np.diff(exp.cell_of[order])) + 1
    total = 0.0
    for cell in np.split(order, bounds):
        c = exp.coef[cell]
        gram = np.ones((len(cell), len(cell)), dtype=complex)
        for i, q in enumerate(tables.rules):
            V = tables.products(i, exp.index[cell])
            gram *= (V * q.weights) @ V.conj().T
        total += float(np.real(c @ gram @ c.conj()))
    return math.sqrt(max(total, 0.0))


# ---------------------------------------------------------------- full grid route

def _grid_axes(packet_groups: Sequence[Sequence[Packet]], spec: ManifoldSpec, true_spectrum: bool):
    """Time grid size, sphere rules and torus grid sizes exact for every ``|prod_j f^j|^2`` and cross term."""
    lo_l, hi_l = [], []
    lo_mu, hi_mu = [], []
    for group in packet_groups:
        lo_l.append(sum(min(m.phase_frequency(true_spectrum) for m in p.modes) for p in group))
        hi_l.append(sum(max(m.phase_frequency(true_spectrum) for m in p.modes) for p in group))
        lo_mu.append([sum(min(m.torus_freq[i] for m in p.modes) for p in group) for i in range(spec.r1)])
        hi_mu.append([sum(max(m.torus_freq[i] for m in p.modes) for p in group) for i in range(spec.r1)])
    m_t = max(hi_l) - min(lo_l) + 1
    m_x = [max(h[i] for h in hi_mu) - min(lo[i] for lo in lo_mu) + 1 for i in range(spec.r1)]
    rules = []
    for i, d in enumerate(spec.sphere_dims):
        deg = 2 * max(sum(max(m.sphere_modes[i].degree for m in p.modes) for p in group) for group in packet_groups)
        rules.append(build_sphere_quadrature(d, deg))
    return m_t, rules, m_x


def _packet_on_grid(p: Packet, t: np.ndarray, rules, xs: Sequence[np.ndarray], true_spectrum: bool) -> np.ndarray:
    shape = (len(t),) + tuple(len(q.weights) for q in rules) + tuple(len(x) for x in xs)
    out = np.zeros(shape, dtype=complex)
    for m, c in p.terms:
        term = c * np.exp(-1j * t * m.phase_frequency(true_spectrum))
        for mode, q in zip(m.sphere_modes, rules):
            term = np.multiply.outer(term, evaluate_mode(mode, q.nodes))
        for mu, x in zip(m.torus_freq, xs):
            term = np.multiply.outer(term, np.exp(1j * mu * x))
        out += term
    return out


def _weights(rules, m_t: int, m_x: Sequence[int]) -> np.ndarray:
    w = np.full(m_t, 1.0 / m_t)
    for q in rules:
        w = np.multiply.outer(w, q.weights)
    for m in m_x:
        w = np.multiply.outer(w, np.full(m, 1.0 / m))
    return w


def _check_grid(m_t, rules, m_x, nterms, budget):
    size = m_t * math.prod(len(q.weights) for q in rules) * math.prod(m_x)
    if size * max(nterms, 1) > budget:
        raise PacketBudgetExceeded(f"product grid of {size} points x {nterms} terms over budget {budget}")


def _product_on_grid(packets, t, rules, xs, true_spectrum):
    prod = None
    for p in packets:
        v = _packet_on_grid(p, t, rules, xs, true_spectrum)
        prod = v if prod is None else prod * v
    return prod


def strichartz_lhs_grid(packets: Sequence[Packet], spec: ManifoldSpec, true_spectrum: bool = False,
                        budget: int = DEFAULT_GRID_BUDGET) -> float:
    """Same norm as :func:`strichartz_lhs`, by direct integration on a full product grid."""
    m_t, rules, m_x = _grid_axes([packets], spec, true_spectrum)
    _check_grid(m_t, rules, m_x, sum(len(p.terms) for p in packets), budget)
    t = 2 * np.pi * np.arange(m_t) / m_t
    xs = [2 * np.pi * np.arange(m) / m for m in m_x]
    prod = _product_on_grid(packets, t, rules, xs, true_spectrum)
    return math.sqrt(float(np.sum(_weights(rules, m_t, m_x) * np.abs(prod) ** 2)))


def inner_product_grid(left: Sequence[Packet], right: Sequence[Packet], spec: ManifoldSpec,
                       true_spectrum: bool = False, budget: int = DEFAULT_GRID_BUDGET) -> complex:
    """``< prod exp(itD) left_j, prod exp(itD) right_j >`` on ``[0,2pi] x M``, integrated on an exact grid."""
    m_t, rules, m_x = _grid_axes([left, right], spec, true_spectrum)
    _check_grid(m_t, rules, m_x, sum(len(p.terms) for p in list(left) + list(right)), budget)
    t = 2 * np.pi * np.arange(m_t) / m_t
    xs = [2 * np.pi * np.arange(m) / m for m in m_x]
    a = _product_on_grid(left, t, rules, xs, true_spectrum)
    b = _product_on_grid(right, t, rules, xs, true_spectrum)
    return complex(np.sum(_weights(rules, m_t, m_x) * a * np.conj(b)))


def packet_l2_norm(p: Packet, spec: ManifoldSpec, t: float = 0.0, true_spectrum: bool = False,
                   budget: int = DEFAULT_GRID_BUDGET) -> float:
    """``|| exp(i t Delta) f ||_{L^2(M)}`` by quadrature at a fixed time."""
    _, rules, m_x = _grid_axes([[p]], spec, true_spectrum)
    _check_grid(1, rules, m_x, len(p.terms), budget)
    xs = [2 * np.pi * np.arange(m) / m for m in m_x]
    vals = _packet_on_grid(p, np.array([float(t)]), rules, xs, true_spectrum)
    return math.sqrt(float(np.sum(_weights(rules, 1, m_x) * np.abs(vals) ** 2)))


def orthogonality_probe(spec: ManifoldSpec, first_a: Packet, first_b: Packet, second: Packet,
                        budget: int = DEFAULT_GRID_BUDGET) -> float:
    """Normalized ``|<u_A, u_B>|`` for ``u_X = exp(itD) X * exp(itD) second`` on ``[0,2pi] x M``.

    The inner product is integrated on a product grid, independently of the
    level-set bookkeeping, so disjoint cells show up as a numerical zero.
    """
    ab = inner_product_grid([first_a, second], [first_b, second], spec, budget=budget)
    na = strichartz_lhs([first_a, second], spec)
    nb = strichartz_lhs([first_b, second], spec)
    if na == 0 or nb == 0:
        return 0.0
    return abs(ab) / (na * nb)


# ---------------------------------------------------------------- experiments

@dataclass
class ProductNormReport:
    lhs: float
    rhs_constant: float
    ratio: float
    parameters: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {"lhs": self.lhs, "rhs": self.rhs_constant, "ratio": self.ratio}
        row.update(self.parameters)
        return row


def _norm_param(lam: Sequence[int]) -> float:
    # N_j = |lambda^j|, floored at 1 so that constant witnesses keep logs finite
    return max(math.sqrt(sum(v * v for v in lam)), 1.0)


def projector_experiment(spec: ManifoldSpec, k: int, schedule: Sequence[Sequence[Sequence[int]]],
                         kinds: Sequence[str] | str = HIGHEST_WEIGHT, eta: float | None = None) -> list:
    """``||prod_j f^j|| / prod ||f^j||`` for exact joint eigenfunctions at each ``(lambda^1, ..., lambda^{k+1})``.

    The witnesses are eigenfunctions, so any joint projector around ``lambda^j``
    acts on them as the identity.
    """
    if spec.r1 != 0:
        raise ValueError("projector experiments run on products of spheres")
    const = mljspe_constant(spec, k, eta)
    out = []
    for lams in schedule:
        if len(lams) != k + 1:
            raise ValueError(f"need {k + 1} spectral parameters per point")
        modes = [JointMode.of(spec, lam, kinds) for lam in lams]
        lhs = product_L2_factorized(modes)
        Ns = [_norm_param(lam) for lam in lams]
        rhs = const.evaluate(Ns, eta=eta)
        out.append(ProductNormReport(lhs, rhs, lhs / rhs, {
            "spec": spec.label, "k": k, "lambdas": [list(map(int, lam)) for lam in lams],
            "N": Ns, "kinds": kinds if isinstance(kinds, str) else list(kinds), "case": const.case,
        }))
    return out


def _random_packet(points: Sequence, spec: ManifoldSpec, rng, max_modes: int, window, kinds=ZONAL) -> Packet:
    pts = list(points)
    if len(pts) > max_modes:
        pick = sorted(rng.choice(len(pts), size=max_modes, replace=False))
        pts = [pts[i] for i in pick]
    coef = rng.standard_normal(len(pts)) + 1j * rng.standard_normal(len(pts))
    return Packet([(JointMode.of(spec, xi, kinds), c) for xi, c in zip(pts, coef)], window)


def _slab_points(spec: ManifoldSpec, N1: int, N2: int, window_pts: Sequence, rng) -> tuple:
    """Largest slab of a side-``N2`` cube anchored at a random window point, kept inside the window."""
    anchor = window_pts[int(rng.integers(len(window_pts)))]
    b = tuple(v - N2 // 2 for v in anchor)
    moved = False
    if all(2 * v + N2 == 0 for v in b):
        b = tuple(v + N2 for v in b)
        moved = True
    cube = Cube(b, N2)
    inside = set(window_pts)
    slabs = slab_decompose(cube, N1, N2, spec.r0)
    best = max(slabs, key=lambda s: (sum(1 for xi in s.points if xi in inside), -s.m))
    pts = [xi for xi in best.points if xi in inside] or [anchor]
    return pts, b, moved


def strichartz_experiment(spec: ManifoldSpec, k: int, schedule: Sequence[Sequence[int]],
                          families: Sequence[str] = PACKET_FAMILIES, trials: int = 2, seed: int = 0,
                          max_modes: int = 12, kinds: str = ZONAL, delta=0, eps=0, eta=0) -> list:
    """Max over trials of ``lhs / (C(N) prod ||f^j||)`` per schedule point and packet family.

    Unset slack parameters of the bound default to 0; the gain factor then
    drops out and the comparison is against the weakest form of the estimate.
    """
    const = mls_constant(spec, k, delta=delta, eps=eps, eta=eta)
    reports = []
    for s_idx, Ns in enumerate(schedule):
        Ns = [int(n) for n in Ns]
        if len(Ns) != k + 1 or any(a < b for a, b in zip(Ns, Ns[1:])):
            raise ValueError("schedule points are nonincreasing (N_1, ..., N_{k+1})")
        windows = [SpectralWindow(n) for n in Ns]
        pts = [window_enumerate(w, spec) for w in windows]
        rhs = const.evaluate(Ns)
        for fam in families:
            best, best_params = 0.0, {}
            for trial in range(trials):
                rng = np.random.default_rng([seed, s_idx, PACKET_FAMILIES.index(fam), trial])
                extra = {}
                if fam == "single":
                    packets = [Packet.single(JointMode.of(spec, p[int(rng.integers(len(p)))], kinds))
                               for p in pts]
                elif fam == "random":
                    packets = [_random_packet(p, spec, rng, max_modes, w, kinds) for p, w in zip(pts, windows)]
                elif fam == "slab":
                    sp, b, moved = _slab_points(spec, Ns[0], Ns[1], pts[0], rng)
                    first = _random_packet(sp, spec, rng, max_modes, windows[0], kinds)
                    packets = [first] + [_random_packet(p, spec, rng, max_modes, w, kinds)
                                         for p, w in zip(pts[1:], windows[1:])]
                    extra = {"cube_corner": list(b), "cube_moved": moved}
                else:
                    raise ValueError(f"unknown packet family {fam!r}")
                lhs = strichartz_lhs(packets, spec)
                ratio = lhs / (rhs * math.prod(p.norm for p in packets))
                if ratio >= best:
                    best, best_params = ratio, {"lhs": lhs, "trial": trial, "normalized": ratio * rhs, **extra}
            reports.append(ProductNormReport(best_params["lhs"], rhs, best, {
                "spec": spec.label, "k": k, "N": Ns, "family": fam, "case": const.case,
                "trial": best_params["trial"], "normalized": best_params["normalized"],
                **{key: v for key, v in best_params.items() if key.startswith("cube")},
            }))
    return reports
