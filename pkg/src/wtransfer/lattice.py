"""Lattice bases attached to a matrix, and exact enumeration inside boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from sympy import Matrix
from sympy.matrices.normalforms import hermite_normal_form

from .entries import RealConst, iv_precision
from .errors import BudgetExceeded, PrecisionExhausted
from .powers import PowerProduct
from .weights import ProblemInstance, WeightedBox

DEFAULT_BUDGET = 10**8


def _rc(x) -> RealConst:
    return x if isinstance(x, RealConst) else RealConst.rational(Fraction(x))


@dataclass(frozen=True)
class LatticeBasis:
    """Square basis matrix; the lattice is generated by its columns."""

    rows: tuple[tuple[RealConst, ...], ...]
    det_is_unit: bool = False

    def __post_init__(self):
        rows = tuple(tuple(_rc(x) for x in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        d = len(rows)
        if d == 0 or any(len(r) != d for r in rows):
            raise ValueError("basis must be a non-empty square matrix")
        if self.det_is_unit and self.is_rational() and abs(self.determinant()) != 1:
            raise ValueError("basis flagged unimodular but det != +-1")

    @classmethod
    def from_rows(cls, rows, det_is_unit: bool = False) -> "LatticeBasis":
        return cls(tuple(tuple(r) for r in rows), det_is_unit)

    @classmethod
    def identity(cls, d: int) -> "LatticeBasis":
        return cls(tuple(tuple(int(i == j) for j in range(d)) for i in range(d)), True)

    @property
    def dim(self) -> int:
        return len(self.rows)

    def entry(self, i: int, j: int) -> RealConst:
        return self.rows[i][j]

    def is_rational(self) -> bool:
        return all(x.is_rational() for row in self.rows for x in row)

    def rational_rows(self) -> list[list[Fraction]]:
        if not self.is_rational():
            raise ValueError("basis has irrational entries")
        return [[x.rational_part for x in row] for row in self.rows]

    def shape(self) -> str:
        """'lower', 'upper' or 'general' (triangularity is checked exactly)."""
        d = self.dim
        if all(self.rows[i][j].is_zero() for i in range(d) for j in range(i + 1, d)):
            return "lower"
        if all(self.rows[i][j].is_zero() for i in range(d) for j in range(i)):
            return "upper"
        return "general"

    def determinant(self):
        if self.shape() != "general":
            out = RealConst.rational(1)
            for i in range(self.dim):
                out = out * self.rows[i][i]
            return out.rational_part if out.is_rational() else out
        return Fraction(str(Matrix(self.rational_rows()).det()))

    def apply(self, coords) -> tuple[RealConst, ...]:
        """Ambient point B @ coords."""
        out = []
        for row in self.rows:
            acc = RealConst()
            for b, u in zip(row, coords):
                if u:
                    acc = acc + b * int(u)
            out.append(acc)
        return tuple(out)

    def floats(self) -> list[list[float]]:
        return [[float(x) for x in row] for row in self.rows]

    def inverse_transpose(self) -> "LatticeBasis":
        """Basis of the dual lattice (rational bases only)."""
        inv = Matrix(self.rational_rows()).inv().T
        return LatticeBasis(
            tuple(tuple(Fraction(str(inv[i, j])) for j in range(self.dim)) for i in range(self.dim)),
            self.det_is_unit,
        )


@dataclass(frozen=True)
class LatticePoint:
    coords: tuple[int, ...]
    embedding: tuple[RealConst, ...]

    def floats(self) -> tuple[float, ...]:
        return tuple(float(z) for z in self.embedding)

    def rational(self) -> tuple[Fraction, ...]:
        return tuple(z.rational_part for z in self.embedding)

    def is_rational(self) -> bool:
        return all(z.is_rational() for z in self.embedding)


class PointList(list):
    """List of lattice points with a ``truncated`` flag."""

    truncated: bool = False


def primal_lattice(inst: ProblemInstance) -> LatticeBasis:
    """[[I_m, 0], [-Theta, I_n]]."""
    m, n = inst.m, inst.n
    rows = []
    for i in range(m):
        rows.append(tuple(int(i == j) for j in range(m + n)))
    for i in range(n):
        rows.append(tuple(-inst.entry(i, j) for j in range(m)) + tuple(int(i == k) for k in range(n)))
    return LatticeBasis(tuple(rows), True)


def dual_lattice(inst: ProblemInstance) -> LatticeBasis:
    """[[I_m, Theta^T], [0, I_n]]."""
    m, n = inst.m, inst.n
    rows = []
    for j in range(m):
        rows.append(tuple(int(j == k) for k in range(m)) + tuple(inst.entry(i, j) for i in range(n)))
    for i in range(n):
        rows.append(tuple(0 for _ in range(m)) + tuple(int(i == k) for k in range(n)))
    return LatticeBasis(tuple(rows), True)


def inner(u, v) -> RealConst:
    """Exact inner product of two ambient vectors (one side must be rational per term)."""
    acc = RealConst()
    for a, b in zip(u, v):
        acc = acc + _rc(a) * _rc(b)
    return acc


# -- exact box membership ------------------------------------------------------


def abs_within(z, bound: PowerProduct, prec: int = 128) -> bool:
    """Decide |z| <= bound exactly for a RealConst (or rational) z."""
    z = _rc(z)
    if z.is_zero():
        return True
    if z.is_rational():
        return PowerProduct.of(abs(z.rational_part)) <= bound
    if len(z.terms) == 1:
        (key, c), = z.terms.items()
        if key[0] == "sqrt":
            return PowerProduct.of(c * c * key[1]) <= bound ** 2
    while prec <= 4096:
        with iv_precision(prec):
            zi = abs(z.interval(prec))
            bi = bound.interval(prec)
            if zi.b < bi.a:
                return True
            if zi.a > bi.b:
                return False
        prec *= 2
    raise PrecisionExhausted(f"cannot compare |{z!r}| with {bound!r}")


def in_box(point, box: WeightedBox) -> bool:
    return all(abs_within(z, w) for z, w in zip(point, box.half_widths))


# -- enumeration -------------------------------------------------------------


def _triangular_form(L: LatticeBasis):
    """Return (rows, order, to_coords) with rows triangular in the given order.

    ``to_coords`` maps coefficients in the triangular basis back to L's basis.
    """
    shape = L.shape()
    if shape == "lower":
        return L, list(range(L.dim)), None
    if shape == "upper":
        return L, list(range(L.dim - 1, -1, -1)), None
    rows = L.rational_rows()
    den = 1
    for row in rows:
        for x in row:
            den = den * x.denominator // math.gcd(den, x.denominator)
    M = Matrix([[int(x * den) for x in row] for row in rows])
    H = hermite_normal_form(M)
    if H.shape != M.shape:
        raise ValueError("basis is singular")
    tri = LatticeBasis(
        tuple(tuple(Fraction(int(H[i, j]), den) for j in range(L.dim)) for i in range(L.dim))
    )
    # coefficients of the triangular columns in the original basis
    T = M.inv() * H
    to_coords = [[int(T[i, j]) for j in range(L.dim)] for i in range(L.dim)]
    return tri, list(range(L.dim - 1, -1, -1)), to_coords


def _rational_leaf_test(tri: LatticeBasis, box: WeightedBox):
    """Integer-arithmetic membership test for a rational basis.

    Returns a function mapping coefficients to the exact embedding, or None
    when the point lies outside the box.
    """
    rows = tri.rational_rows()
    den = 1
    for row in rows:
        for x in row:
            den = den * x.denominator // math.gcd(den, x.denominator)
    B = [[int(x * den) for x in row] for row in rows]
    widths = []
    for w in box.half_widths:
        if w.is_rational():
            q = w.to_fraction() * den
            widths.append((q.numerator, q.denominator, None, None))
        else:
            widths.append((None, None, float(w) * den, w))

    def test(coef):
        ints = []
        for row, (num, wden, wf, w) in zip(B, widths):
            z = 0
            for b, u in zip(row, coef):
                if u and b:
                    z += b * u
            a = abs(z)
            if num is not None:
                if a * wden > num:
                    return None
            elif a:
                r = a / wf
                if r > 1 + 1e-9 or (r >= 1 - 1e-9 and PowerProduct.of(Fraction(a, den)) > w):
                    return None
            ints.append(z)
        return tuple(RealConst.rational(Fraction(z, den)) for z in ints)

    return test


def _normalize_sign(coords, emb):
    for z in emb:
        s = z.sign()
        if s:
            if s < 0:
                return tuple(-c for c in coords), tuple(-x for x in emb)
            return tuple(coords), tuple(emb)
    return tuple(coords), tuple(emb)


def enumerate_in_box(
    L: LatticeBasis,
    box,
    limit: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> PointList:
    """All nonzero lattice points in a closed axis-aligned box, one per +- pair.

    ``box`` is a WeightedBox or a sequence of positive half-widths. Each point
    is normalized so its first nonzero ambient coordinate is positive; the
    list is sorted by coefficient vector.
    """
    if not isinstance(box, WeightedBox):
        box = WeightedBox.from_lambdas(box)
    if box.dim != L.dim:
        raise ValueError(f"box has dim {box.dim}, lattice has dim {L.dim}")
    tri, order, to_coords = _triangular_form(L)
    d = L.dim
    B = tri.floats()
    lam = box.floats()
    coef = [0] * d
    found: dict = {}
    nodes = 0
    truncated = False

    exact_leaf = _rational_leaf_test(tri, box) if tri.is_rational() else None

    def leaf():
        nonlocal truncated
        if not any(coef):
            return
        if exact_leaf is not None:
            emb = exact_leaf(coef)
            if emb is None:
                return
        else:
            emb = tri.apply(coef)
            if not in_box(emb, box):
                return
        coords = coef if to_coords is None else [
            sum(to_coords[i][j] * coef[j] for j in range(d)) for i in range(d)
        ]
        c, e = _normalize_sign(coords, emb)
        if c not in found:
            found[c] = e
            if limit is not None and len(found) >= limit:
                truncated = True

    def descend(level: int):
        nonlocal nodes
        if truncated:
            return
        if level == d:
            leaf()
            return
        k = order[level]
        partial = 0.0
        scale = 0.0
        for prev in order[:level]:
            term = B[k][prev] * coef[prev]
            partial += term
            scale += abs(term)
        diag = B[k][k]
        slack = 1e-9 * (lam[k] + scale) + 1e-12
        a = (-lam[k] - partial - slack) / diag
        b = (lam[k] - partial + slack) / diag
        lo, hi = math.ceil(min(a, b)), math.floor(max(a, b))
        if level == 0:
            lo = max(lo, 0)
        count = hi - lo + 1
        if count <= 0:
            return
        nodes += count
        if nodes > budget:
            raise BudgetExceeded(f"enumeration exceeded {budget} nodes")
        for u in range(lo, hi + 1):
            coef[k] = u
            descend(level + 1)
            if truncated:
                break
        coef[k] = 0

    descend(0)
    out = PointList(LatticePoint(c, e) for c, e in sorted(found.items()))
    out.truncated = truncated
    return out
