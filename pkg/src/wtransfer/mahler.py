"""Compound boxes, bivectors, and randomized checks of the Mahler-type implications."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_decomp

from .errors import BudgetExceeded, DomainError, NotPrimitive
from .lattice import DEFAULT_BUDGET, LatticeBasis, enumerate_in_box
from .powers import PowerProduct, root_constant
from .transference import Constraint, ConstraintReport, exact, gamma_delta_map, BoundInput
from .weights import WeightedBox, Weights

HYPOTHESIS_EMPTY = "hypothesis-empty"
VERIFIED = "implication-verified"
COUNTEREXAMPLE = "COUNTEREXAMPLE"
INCONCLUSIVE = "inconclusive"


def first_constant(d: int) -> PowerProduct:
    """d ** (1 / (2(d - 1)))."""
    if d < 2:
        raise DomainError("needs d >= 2")
    return root_constant(d, Fraction(1, 2 * (d - 1)))


def second_constant(d: int) -> PowerProduct:
    """(d(d - 1)/2) ** (1 / (2(d - 2)))."""
    if d < 3:
        raise DomainError("needs d >= 3")
    return root_constant(d * (d - 1) // 2, Fraction(1, 2 * (d - 2)))


def _widths(box):
    if isinstance(box, WeightedBox):
        return list(box.half_widths)
    out = [x if isinstance(x, PowerProduct) else exact(x) for x in box]
    if any(not x > 0 for x in out):
        raise DomainError("half-widths must be positive")
    return out


def _product(values):
    out = values[0]
    for v in values[1:]:
        out = out * v
    return out


def pseudo_compound(box) -> list:
    """Half-widths prod(lambda) / lambda_i."""
    w = _widths(box)
    total = _product(w)
    return [total / x for x in w]


def second_pseudo_compound(box) -> dict:
    """Bounds prod(lambda) / (lambda_i lambda_j) for 0-based pairs i < j."""
    w = _widths(box)
    if len(w) < 3:
        raise DomainError("needs d >= 3")
    total = _product(w)
    return {(i, j): total / (w[i] * w[j]) for i, j in itertools.combinations(range(len(w)), 2)}


@dataclass(frozen=True)
class Bivector:
    """Coordinates Z_ij (0-based, i < j) in the basis e_i ^ e_j."""

    dim: int
    coeffs: dict

    def __post_init__(self):
        expected = self.dim * (self.dim - 1) // 2
        if len(self.coeffs) != expected:
            raise ValueError(f"a bivector in dim {self.dim} has {expected} coordinates")

    def __getitem__(self, key):
        i, j = key
        if i == j:
            return 0
        return self.coeffs[(i, j)] if i < j else -self.coeffs[(j, i)]

    def __add__(self, other: "Bivector") -> "Bivector":
        return Bivector(self.dim, {k: v + other.coeffs[k] for k, v in self.coeffs.items()})

    def __eq__(self, other):
        return isinstance(other, Bivector) and self.dim == other.dim and self.coeffs == other.coeffs

    __hash__ = None

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.coeffs.values())

    def vector(self) -> list:
        return [self.coeffs[k] for k in sorted(self.coeffs)]


def wedge(v1, v2) -> Bivector:
    if len(v1) != len(v2):
        raise ValueError("vectors must have equal length")
    d = len(v1)
    return Bivector(d, {(i, j): v1[i] * v2[j] - v1[j] * v2[i] for i, j in itertools.combinations(range(d), 2)})


def in_second_compound(Z: Bivector, bounds: dict) -> bool:
    """Exact |Z_ij| <= bound_ij for rational coordinates."""
    for k, z in Z.coeffs.items():
        z = abs(Fraction(z))
        if z and PowerProduct.of(z) > PowerProduct.of(bounds[k]):
            return False
    return True


def exterior_square_coordinates(basis: LatticeBasis, Z: Bivector) -> list[Fraction]:
    """Coordinates of Z in the basis b_i ^ b_j of the exterior square (rational bases)."""
    rows = basis.rational_rows()
    d = basis.dim
    cols = [[rows[r][k] for r in range(d)] for k in range(d)]
    pairs = list(itertools.combinations(range(d), 2))
    M = Matrix([[wedge(cols[a], cols[b]).coeffs[p] for a, b in pairs] for p in pairs])
    sol = M.LUsolve(Matrix([Z.coeffs[p] for p in pairs]))
    return [Fraction(str(x)) for x in sol]


def in_exterior_square(basis: LatticeBasis, Z: Bivector) -> bool:
    return all(c.denominator == 1 for c in exterior_square_coordinates(basis, Z))


# -- box inclusion --------------------------------------------------------------


def q_subset_pstar_check(sigma: Weights, rho: Weights, t, gamma) -> ConstraintReport:
    """Exponent-wise check that Q(s, delta) lies inside the pseudo-compound of P(t, gamma).

    Both boxes are powers of t > 1, so each axis reduces to comparing rational
    exponents of t.
    """
    t = exact(t)
    if not t > 1:
        raise DomainError("t must exceed 1")
    g = exact(gamma)
    a, delta = gamma_delta_map(g, BoundInput.from_weights(sigma, rho)) if len(sigma) + len(rho) >= 3 \
        else (Fraction(1), Fraction(1))
    cons = []
    for j, s in enumerate(sigma):
        cons.append(Constraint(f"x_{j + 1}", -a * delta * s, "<=", -s + 1 - g))
    for i, r in enumerate(rho):
        cons.append(Constraint(f"y_{i + 1}", a * r, "<=", g * r + 1 - g))
    return ConstraintReport(tuple(cons), note=f"s = t^{a}, delta = {delta}")


# -- area estimate ----------------------------------------------------------------


def area_estimate_check(a_vec, b_vec, bounds) -> tuple[bool, object, object]:
    """|a ^ b| <= 2 max(aB, bA) for a_vec in box (a, b) and b_vec in box (A, B).

    Returns (holds, lhs, rhs).
    """
    a, b, A, B = bounds
    if not (abs(a_vec[0]) <= a and abs(a_vec[1]) <= b and abs(b_vec[0]) <= A and abs(b_vec[1]) <= B):
        raise DomainError("vectors are outside their boxes")
    lhs = abs(a_vec[0] * b_vec[1] - a_vec[1] * b_vec[0])
    rhs = 2 * max(a * B, b * A)
    return lhs <= rhs, lhs, rhs


# -- orthogonal sublattices --------------------------------------------------------


@dataclass(frozen=True)
class SublatticePair:
    gamma_basis: tuple[tuple[int, ...], ...]
    gamma_perp_basis: tuple[tuple[int, ...], ...]
    gram_gamma: int
    gram_perp: int

    @property
    def equal(self) -> bool:
        return self.gram_gamma == self.gram_perp

    @property
    def det_gamma(self) -> float:
        return math.sqrt(self.gram_gamma)

    @property
    def det_perp(self) -> float:
        return math.sqrt(self.gram_perp)

    def as_dict(self) -> dict:
        return {
            "gamma_basis": [list(v) for v in self.gamma_basis],
            "gamma_perp_basis": [list(v) for v in self.gamma_perp_basis],
            "gram_det_gamma": self.gram_gamma,
            "gram_det_perp": self.gram_perp,
            "det_gamma": self.det_gamma,
            "det_perp": self.det_perp,
            "equal": self.equal,
        }


def _gram_det(vectors) -> int:
    if not vectors:
        return 1
    G = Matrix(vectors)
    return int((G * G.T).det())


def orthogonal_sublattice_check(d: int, k: int, gamma_basis) -> SublatticePair:
    """Integer orthogonal complement of a primitive sublattice and both Gram determinants."""
    basis = [tuple(int(x) for x in v) for v in gamma_basis]
    if len(basis) != k or any(len(v) != d for v in basis):
        raise DomainError(f"expected {k} vectors of length {d}")
    if not 1 <= k < d:
        raise DomainError("needs 1 <= k < d")
    A = Matrix(basis)
    S, _, V = smith_normal_decomp(A, domain=ZZ)
    factors = [int(S[i, i]) for i in range(k)]
    if any(f == 0 for f in factors):
        raise DomainError("basis vectors are linearly dependent")
    if any(abs(f) != 1 for f in factors):
        raise NotPrimitive(f"sublattice is not saturated (invariant factors {factors})")
    perp = [tuple(int(V[r, c]) for r in range(d)) for c in range(k, d)]
    return SublatticePair(tuple(basis), tuple(perp), _gram_det(basis), _gram_det(perp))


def random_primitive_sublattice(d: int, k: int, rng: random.Random, spread: int = 3) -> list[tuple[int, ...]]:
    """k rows of a random unimodular matrix: always a primitive sublattice."""
    M = [[int(i == j) for j in range(d)] for i in range(d)]
    for _ in range(4 * d):
        i, j = rng.sample(range(d), 2)
        c = rng.randint(-spread, spread)
        M[i] = [a + c * b for a, b in zip(M[i], M[j])]
        if rng.random() < 0.5:
            for row in M:
                row[i], row[j] = row[j], row[i]
    return [tuple(M[i]) for i in range(k)]


# -- random lattices and boxes ------------------------------------------------------

_SCALES = (Fraction(1, 2), Fraction(2, 3), Fraction(1), Fraction(3, 2), Fraction(2))


def random_unimodular_lattice(d: int, rng: random.Random, ops: int = 12, integer: bool = False) -> LatticeBasis:
    """Product of random elementary shears with a det-1 diagonal factor.

    With ``integer=True`` the multipliers are integers in [-3, 3] and the
    lattice is Z^d in a skewed basis. Otherwise multipliers are p/q with
    q <= 3 and a rational diagonal factor of determinant 1 is applied, which
    gives lattices that are genuinely different from Z^d.
    """
    M = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for k in range(ops):
        i, j = rng.sample(range(d), 2)
        p = rng.choice([-3, -2, -1, 1, 2, 3])
        c = Fraction(p) if integer else Fraction(p, rng.randint(1, 3))
        if k % 2 == 0:
            M[i] = [a + c * b for a, b in zip(M[i], M[j])]
        else:
            for row in M:
                row[i] += c * row[j]
    if not integer:
        diag = [rng.choice(_SCALES) for _ in range(d - 1)]
        diag.append(1 / _product(diag))
        M = [[x * diag[c] for c, x in enumerate(row)] for row in M]
    return LatticeBasis.from_rows(M, det_is_unit=True)


def random_box(d: int, rng: random.Random, volume=None) -> list[Fraction]:
    """Rational half-widths with log-uniform shape and product ``volume``.

    The default volume is drawn log-uniformly from [1/8, 1].
    """
    if volume is None:
        volume = Fraction(max(32, round(256 * 2 ** (-3 * rng.random()))), 256)
    volume = Fraction(volume)
    raw = [Fraction(round(2 ** rng.uniform(-2, 2) * 12), 12) for _ in range(d - 1)]
    last = volume / _product(raw)
    return raw + [last]


# -- trials --------------------------------------------------------------------------


@dataclass
class TrialOutcome:
    outcome: str
    dim: int
    lambdas: list
    constant: float
    hypothesis_witness: tuple | None = None
    conclusion_witness: tuple | None = None
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "dim": self.dim,
            "lambdas": [str(x) for x in self.lambdas],
            "constant": round(self.constant, 12),
            "hypothesis_witness": None if self.hypothesis_witness is None else [str(x) for x in self.hypothesis_witness],
            "conclusion_witness": None if self.conclusion_witness is None else [str(x) for x in self.conclusion_witness],
            "diagnostics": self.diagnostics,
        }


def _check_unimodular(L: LatticeBasis):
    if abs(L.determinant()) != 1:
        raise DomainError("lattice must have determinant +-1")


def _search_conclusion(L, lambdas, constant, budget, out: TrialOutcome):
    box = WeightedBox.from_lambdas(lambdas).scaled(constant)
    pts = enumerate_in_box(L, box, budget=budget)
    if not pts:
        out.outcome = COUNTEREXAMPLE
        return out
    out.outcome = VERIFIED
    scales = [max(abs(z) / lam for z, lam in zip(p.rational(), lambdas)) for p in pts]
    best = min(range(len(pts)), key=lambda k: (scales[k], pts[k].coords))
    out.conclusion_witness = pts[best].rational()
    out.diagnostics["min_scale"] = str(scales[best])
    out.diagnostics["classical_constant"] = out.dim - 1
    out.diagnostics["classical_constant_suffices"] = scales[best] <= out.dim - 1
    return out


def mahler_implication_trial(L: LatticeBasis, lambdas, budget: int = DEFAULT_BUDGET) -> TrialOutcome:
    """A dual point in the pseudo-compound must force a primal point in c * P."""
    _check_unimodular(L)
    lambdas = [exact(x) for x in lambdas]
    d = L.dim
    c = first_constant(d)
    out = TrialOutcome(INCONCLUSIVE, d, lambdas, float(c))
    try:
        dual = L.inverse_transpose()
        hyp = enumerate_in_box(dual, pseudo_compound(lambdas), limit=1, budget=budget)
        if not hyp:
            out.outcome = HYPOTHESIS_EMPTY
            return out
        out.hypothesis_witness = hyp[0].rational()
        return _search_conclusion(L, lambdas, c, budget, out)
    except BudgetExceeded as exc:
        out.outcome = INCONCLUSIVE
        out.diagnostics["reason"] = str(exc)
        return out


def _shortest_scaled(dual: LatticeBasis, scale: list[float], budget: int) -> float:
    """Shortest nonzero length of the dual lattice in the norm |diag(scale) z|."""
    r = 1.0
    while True:
        box = [Fraction(math.ceil(r / s * 10**6), 10**6) for s in scale]
        pts = enumerate_in_box(dual, box, budget=budget)
        lengths = [_scaled_norm(p, scale) for p in pts]
        if lengths and min(lengths) <= r:
            return min(lengths)
        r = 2 * r if not lengths else min(lengths) * (1 + 1e-9)


def _scaled_norm(p, scale) -> float:
    return math.sqrt(sum((float(z) * s) ** 2 for z, s in zip(p.rational(), scale)))


def second_mahler_trial(L: LatticeBasis, lambdas, budget: int = DEFAULT_BUDGET,
                        pair_budget: int = 20_000_000) -> TrialOutcome:
    """A decomposable dual bivector in the second pseudo-compound must force a primal point in c' * P.

    The wedge search is complete. Rescaling axis i by lambda_i / sqrt(prod
    lambda) turns the bivector box into the unit cube, so a hit has scaled
    Euclidean size at most sqrt(d(d-1)/2). It may be replaced by the wedge of
    a reduced basis (w1, w2) of its primitive plane, and then
    |w1| |w2| <= (2/sqrt 3) |Z| with lambda_1 <= |w1| <= |w2|, which bounds
    both vectors.
    """
    _check_unimodular(L)
    lambdas = [exact(x) for x in lambdas]
    d = L.dim
    c2 = second_constant(d)
    out = TrialOutcome(INCONCLUSIVE, d, lambdas, float(c2))
    bounds = second_pseudo_compound(lambdas)
    root = math.sqrt(float(_product(lambdas)))
    scale = [float(x) / root for x in lambdas]
    try:
        dual = L.inverse_transpose()
        shortest = _shortest_scaled(dual, scale, budget) * (1 - 1e-9)
        area = (2 / math.sqrt(3)) * math.sqrt(d * (d - 1) / 2) * (1 + 1e-9)
        long_r = area / shortest
        short_r = min(math.sqrt(area), long_r)
        hit = None
        # a cheap partial search first; only an empty result needs the full radius
        for radius in sorted({min(long_r, 2 * short_r), long_r}):
            box = [Fraction(math.ceil(radius / s * 10**6), 10**6) for s in scale]
            pts = enumerate_in_box(dual, box, budget=budget)
            norms = [_scaled_norm(p, scale) for p in pts]
            longs = [p for p, r in zip(pts, norms) if r <= radius]
            shorts = [p for p, r in zip(pts, norms) if r <= short_r]
            out.diagnostics["dual_points"] = len(longs)
            if len(shorts) * len(longs) > pair_budget:
                raise BudgetExceeded(f"{len(shorts)} x {len(longs)} wedge pairs exceed the pair budget")
            hit = _find_wedge(shorts, longs, bounds)
            if hit is not None:
                break
        if hit is None:
            out.outcome = HYPOTHESIS_EMPTY
            return out
        out.hypothesis_witness = tuple(hit.vector())
        return _search_conclusion(L, lambdas, c2, budget, out)
    except BudgetExceeded as exc:
        out.outcome = INCONCLUSIVE
        out.diagnostics["reason"] = str(exc)
        return out


def _find_wedge(shorts, longs, bounds):
    if not shorts or not longs:
        return None
    P = np.array([[float(z) for z in p.rational()] for p in shorts])
    Q = np.array([[float(z) for z in p.rational()] for p in longs])
    ok = np.ones((len(shorts), len(longs)), dtype=bool)
    for (i, j), b in bounds.items():
        Z = np.outer(P[:, i], Q[:, j]) - np.outer(P[:, j], Q[:, i])
        ok &= np.abs(Z) <= float(b) * (1 + 1e-9) + 1e-12
    for a, b in zip(*np.nonzero(ok)):
        Z = wedge(shorts[a].rational(), longs[b].rational())
        if not Z.is_zero() and in_second_compound(Z, bounds):
            return Z
    return None


def trial_rng(seed: int, index: int) -> random.Random:
    return random.Random(seed * 1_000_003 + index)


def mahler_campaign(dims, trials: int, seed: int, second: bool = False,
                    budget: int = 2_000_000, integer: bool = False):
    """Yield one result dict per seeded trial; identical seeds give identical output."""
    for k in range(trials):
        rng = trial_rng(seed, k)
        d = dims[k % len(dims)]
        L = random_unimodular_lattice(d, rng, integer=integer)
        lambdas = random_box(d, rng)
        if second:
            res = second_mahler_trial(L, lambdas, budget=budget)
        else:
            res = mahler_implication_trial(L, lambdas, budget=budget)
        row = {"trial": k, "seed": seed, "mode": "second" if second else "first"}
        row.update(res.as_dict())
        row["basis"] = [[str(x.rational_part) for x in r] for r in L.rows]
        yield row


def ortho_campaign(trials: int, seed: int, dim: int | None = None, rank: int | None = None,
                   max_dim: int = 6, max_rank: int = 3):
    """Seeded random primitive sublattices; each row reports both Gram determinants."""
    for k in range(trials):
        rng = trial_rng(seed, k)
        d = dim if dim is not None else rng.randint(2, max_dim)
        r = rank if rank is not None else rng.randint(1, min(max_rank, d - 1))
        basis = random_primitive_sublattice(d, r, rng)
        row = {"trial": k, "seed": seed, "dim": d, "rank": r}
        row.update(orthogonal_sublattice_check(d, r, basis).as_dict())
        yield row
