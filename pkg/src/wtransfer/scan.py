"""Best-approximation scans over integer boxes.

A scan runs in two phases. The compiled (or numpy) kernel evaluates every
integer point of the box in floating point together with a rigorous error
enclosure and discards points that provably cannot be records. The few
survivors are then certified exactly: heights are compared as prime-power
products and errors as exact linear forms in the matrix entries, refined with
interval arithmetic and a relative guard band of 2**(-precision/2).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import iv

from . import kernels
from .entries import RealConst, interval_ceil, interval_floor, iv_fraction, iv_precision
from .errors import BudgetExceeded, IndeterminateComparison, PrecisionExhausted
from .lattice import DEFAULT_BUDGET, abs_within
from .powers import PowerProduct, pp_max
from .weights import ProblemInstance, Weights, weighted_norm_exact

TAU = 1e-9
BLOCK = 1 << 18
START_PRECISION = 128
MAX_PRECISION = 4096


# -- exact errors --------------------------------------------------------------


def nearest_integer(value: RealConst, prec: int) -> tuple[int, bool]:
    """Nearest integer, ties to even; the flag reports an exact half-integer tie."""
    if value.is_rational():
        q = value.rational_part
        n = round(q)
        return n, (q - math.floor(q)) == Fraction(1, 2)
    with iv_precision(prec):
        lo, hi = interval_floor(value.interval(prec) + iv_fraction(Fraction(1, 2)))
        if lo == hi:
            return lo, False
    raise IndeterminateComparison("value too close to a half-integer at this precision")


@dataclass(frozen=True)
class ErrorValue:
    """max_i |residual_i| ** power_i, kept exact."""

    residuals: tuple[RealConst, ...]
    powers: tuple[Fraction, ...]

    def is_zero(self) -> bool:
        return all(r.is_zero() for r in self.residuals)

    def _terms(self, prec: int):
        out = []
        for r, p in zip(self.residuals, self.powers):
            if r.is_zero():
                continue
            if r.is_rational():
                val = PowerProduct.of(abs(r.rational_part)) ** p
                out.append(("exact", val, val.interval(prec)))
            else:
                a = abs(r)
                with iv_precision(prec):
                    ivl = iv.exp(iv.log(a.interval(prec)) * iv_fraction(p))
                out.append(((a, p), None, ivl))
        return out

    def interval(self, prec: int = 128):
        terms = self._terms(prec)
        with iv_precision(prec):
            if not terms:
                return iv.mpf(0)
            lo = max(t[2].a for t in terms)
            hi = max(t[2].b for t in terms)
            return iv.mpf([lo, hi])

    def dominant(self, prec: int):
        """The largest term: ('zero',), ('exact', PowerProduct) or (key, interval)."""
        terms = self._terms(prec)
        if not terms:
            return ("zero", None, None)
        floor_ = max(t[2].a for t in terms)
        cands = [t for t in terms if not (t[2].b < floor_)]
        if len(cands) > 1:
            if all(t[0] == "exact" for t in cands):
                best = pp_max([t[1] for t in cands])
                return ("exact", best, best.interval(prec))
            keys = {t[0] for t in cands}
            if len(keys) == 1:
                return cands[0]
            raise IndeterminateComparison("error terms not separated at this precision")
        return cands[0]

    def to_mpf(self, prec: int = 64):
        x = self.interval(prec + 16)
        with mpmath.workprec(prec):
            return (mpmath.mpf(x.a) + mpmath.mpf(x.b)) / 2

    def __float__(self) -> float:
        x = self.interval(80)
        return 0.5 * (float(x.a) + float(x.b))

    def log(self, prec: int = 64):
        if self.is_zero():
            return mpmath.mpf("-inf")
        with mpmath.workprec(prec):
            return mpmath.log(self.to_mpf(prec))


def _widen(x, prec):
    eps = iv.mpf(2) ** (-(prec // 2))
    return iv.mpf([x.a * (1 - eps), x.b * (1 + eps)])


def compare_errors(a: ErrorValue, b: ErrorValue, prec: int) -> int:
    """Exact three-way comparison; raises IndeterminateComparison inside the guard band."""
    if a.is_zero() or b.is_zero():
        return (not a.is_zero()) - (not b.is_zero())
    da, db = a.dominant(prec), b.dominant(prec)
    if da[0] == "exact" and db[0] == "exact":
        return da[1].compare(db[1])
    if da[0] == db[0]:
        return 0
    with iv_precision(prec):
        xa, xb = _widen(da[2], prec), _widen(db[2], prec)
        if xa.b < xb.a:
            return -1
        if xa.a > xb.b:
            return 1
    raise IndeterminateComparison("errors coincide within the guard band")


# -- records -------------------------------------------------------------------


@dataclass(frozen=True)
class ApproxRecord:
    """A witness (x, y) with its exact height |x|_sigma and error."""

    x: tuple[int, ...]
    y: tuple[int, ...]
    height: PowerProduct
    error: ErrorValue
    exact_zero: bool = False
    half_tie: bool = False

    @property
    def height_float(self) -> float:
        return float(self.height)

    @property
    def error_float(self) -> float:
        return 0.0 if self.exact_zero else float(self.error)

    def log_height(self, prec: int = 64):
        return self.height.log(prec)

    def log_error(self, prec: int = 64):
        return self.error.log(prec)

    @property
    def residuals(self) -> tuple[RealConst, ...]:
        return self.error.residuals


@dataclass
class ScanStats:
    points: int = 0
    candidates: int = 0
    precision: int = START_PRECISION
    backend: str = field(default_factory=lambda: kernels.BACKEND)


def axis_limit(bound: PowerProduct) -> int:
    """Largest integer k >= 0 with k <= bound (exact)."""
    k = int(math.floor(float(bound)))
    while k > 0 and PowerProduct.of(k) > bound:
        k -= 1
    while PowerProduct.of(k + 1) <= bound:
        k += 1
    return k


def height_limits(weights: Weights, t) -> list[int]:
    base = PowerProduct.of(t)
    return [axis_limit(base ** w) for w in weights]


def _subboxes(limits, symmetric: bool):
    """Integer boxes partitioning the nonzero points (lex-positive half if symmetric)."""
    m = len(limits)
    boxes = []
    for k in range(m):
        if limits[k] == 0:
            continue
        head_lo, head_hi = [0] * k, [0] * k
        tail_lo = [-h for h in limits[k + 1:]]
        tail_hi = list(limits[k + 1:])
        boxes.append((head_lo + [1] + tail_lo, head_hi + [limits[k]] + tail_hi))
        if not symmetric:
            boxes.append((head_lo + [-limits[k]] + tail_lo, head_hi + [-1] + tail_hi))
    return [(np.array(lo, dtype=np.int64), np.array(hi, dtype=np.int64)) for lo, hi in boxes]


def _decode_indices(lo, hi, idx):
    sizes = hi - lo + 1
    idx = np.array(idx, dtype=np.int64)
    out = np.empty((len(idx), len(lo)), dtype=np.int64)
    for j in range(len(lo) - 1, -1, -1):
        out[:, j] = idx % sizes[j] + lo[j]
        idx //= sizes[j]
    return out


class _FloatSetup:
    def __init__(self, inst: ProblemInstance, inhomogeneous: bool):
        self.theta = np.array([[float(e) for e in row] for row in inst.theta], dtype=np.float64)
        if inhomogeneous and inst.eta is not None:
            self.shift = -np.array([float(e) for e in inst.eta], dtype=np.float64)
        else:
            self.shift = np.zeros(inst.n)
        self.inv_sigma = np.array([float(1 / s) for s in inst.sigma])
        self.inv_rho = np.array([float(1 / r) for r in inst.rho])


def _staircase(front_h, front_e, h, e):
    """Sort the union of points and return (sorted heights, prefix minima, raw errors)."""
    H = np.concatenate([front_h, h])
    E = np.concatenate([front_e, e])
    order = np.argsort(H, kind="stable")
    Hs, Es = H[order], E[order]
    return Hs, np.minimum.accumulate(Es), Es


def _threshold(Hs, Pm, q):
    idx = np.searchsorted(Hs, q - TAU, side="left")
    out = np.full(len(q), np.inf)
    pos = idx > 0
    out[pos] = Pm[idx[pos] - 1]
    return out


def _pareto(Hs, Pm, Es):
    prev = np.concatenate([[np.inf], Pm[:-1]])
    keep = Es < prev
    return Hs[keep], Es[keep]


def _rational_cap(inst: ProblemInstance):
    """Height of a guaranteed exact zero for homogeneous scans, if any."""
    best = None
    for j in range(inst.m):
        col = [inst.entry(i, j) for i in range(inst.n)]
        if all(c.is_rational() for c in col):
            den = math.lcm(*(c.rational_part.denominator for c in col))
            h = PowerProduct.of(den) ** (1 / inst.sigma[j])
            if best is None or h < best:
                best = h
    return best


def _effective_t(inst, t, inhomogeneous):
    tp = PowerProduct.of(t)
    if inhomogeneous:
        return tp
    cap = _rational_cap(inst)
    if cap is not None and cap < tp:
        return cap
    return tp


def _record_candidates(inst, t, inhomogeneous, budget, eval_block, stats):
    setup = _FloatSetup(inst, inhomogeneous)
    tp = _effective_t(inst, t, inhomogeneous)
    limits = [axis_limit(tp ** s) for s in inst.sigma]
    boxes = _subboxes(limits, symmetric=not inhomogeneous)
    total = sum(int(np.prod(hi - lo + 1)) for lo, hi in boxes)
    if total > budget:
        raise BudgetExceeded(f"scan needs {total} points, budget is {budget}")
    stats.points = total
    zero_scale = np.zeros(inst.n)
    front_h = np.empty(0)
    front_e = np.empty(0)
    kept_x, kept_h, kept_lo = [], [], []
    for lo, hi in boxes:
        size = int(np.prod(hi - lo + 1))
        for start in range(0, size, BLOCK):
            count = min(BLOCK, size - start)
            h, elo, ehi = eval_block(
                setup.theta, setup.shift, setup.inv_sigma, setup.inv_rho, zero_scale, lo, hi, start, count
            )
            Hs, Pm, Es = _staircase(front_h, front_e, h, ehi)
            keep = np.nonzero(elo < _threshold(Hs, Pm, h))[0]
            front_h, front_e = _pareto(Hs, Pm, Es)
            if len(keep):
                kept_x.append(_decode_indices(lo, hi, start + keep))
                kept_h.append(h[keep])
                kept_lo.append(elo[keep])
    X = np.concatenate(kept_x)
    H = np.concatenate(kept_h)
    ELO = np.concatenate(kept_lo)
    Hs, Pm, _ = _staircase(front_h, front_e, np.empty(0), np.empty(0))
    keep = ELO < _threshold(Hs, Pm, H)
    X, H = X[keep], H[keep]
    order = np.lexsort((H,))
    stats.candidates = len(order)
    return X[order], H[order]


def _exact_error(inst, x, prec, inhomogeneous):
    residuals, ys, tie = [], [], False
    for i in range(inst.n):
        val = RealConst()
        for j, xj in enumerate(x):
            if xj:
                val = val + inst.entry(i, j) * int(xj)
        if inhomogeneous:
            val = val - inst.eta_value(i)
        y, t = nearest_integer(val, prec)
        residuals.append(val - y)
        ys.append(y)
        tie = tie or t
    ev = ErrorValue(tuple(residuals), tuple(1 / r for r in inst.rho))
    return tuple(ys), ev, tie


def _height_cmp(a, b):
    c = a[0].compare(b[0])
    if c:
        return c
    return (a[1] > b[1]) - (a[1] < b[1])


def _certify(inst, X, H, prec, inhomogeneous):
    records = []
    best = None
    N = len(X)
    i = 0
    while i < N:
        j = i + 1
        while j < N and H[j] - H[j - 1] <= TAU:
            j += 1
        cluster = [(weighted_norm_exact([int(v) for v in X[k]], inst.sigma), tuple(int(v) for v in X[k])) for k in range(i, j)]
        cluster.sort(key=functools.cmp_to_key(_height_cmp))
        g = 0
        while g < len(cluster):
            h0 = cluster[g][0]
            group = [cluster[g]]
            g += 1
            while g < len(cluster) and cluster[g][0] == h0:
                group.append(cluster[g])
                g += 1
            winner = None
            for _, x in group:
                y, ev, tie = _exact_error(inst, x, prec, inhomogeneous)
                if winner is None or compare_errors(ev, winner[2], prec) < 0:
                    winner = (x, y, ev, tie)
            x, y, ev, tie = winner
            if best is None or compare_errors(ev, best, prec) < 0:
                best = ev
                rec = ApproxRecord(x, y, h0, ev, ev.is_zero(), tie)
                records.append(rec)
                if rec.exact_zero:
                    return records
        i = j
    return records


def scan_records(
    inst: ProblemInstance,
    t,
    inhomogeneous: bool = False,
    precision: int = START_PRECISION,
    budget: int = DEFAULT_BUDGET,
    backend: str | None = None,
    stats: ScanStats | None = None,
) -> list[ApproxRecord]:
    """All error-improving records with height <= t, ascending in height."""
    if PowerProduct.of(t) <= 1:
        raise ValueError("scan height must exceed 1")
    if inhomogeneous and not inst.has_shift():
        inhomogeneous = False
    stats = stats if stats is not None else ScanStats()
    eval_block = kernels.get_backend(backend)
    stats.backend = backend or kernels.BACKEND
    X, H = _record_candidates(inst, t, inhomogeneous, budget, eval_block, stats)
    prec = precision
    while True:
        try:
            records = _certify(inst, X, H, prec, inhomogeneous)
            stats.precision = prec
            return records
        except IndeterminateComparison:
            prec *= 2
            if prec > MAX_PRECISION:
                raise PrecisionExhausted(f"records not separable at {MAX_PRECISION} bits") from None


def best_error(inst: ProblemInstance, t, precision: int = START_PRECISION, budget: int = DEFAULT_BUDGET) -> ApproxRecord:
    """Smallest |Theta x - y|_rho over nonzero x with |x|_sigma <= t (first minimizer by height, then lex)."""
    return scan_records(inst, t, precision=precision, budget=budget)[-1]


def best_error_dual(inst: ProblemInstance, s, precision: int = START_PRECISION, budget: int = DEFAULT_BUDGET) -> ApproxRecord:
    """Same scan for the transposed system: x is b, y is -a in |Theta^T b + a|_sigma."""
    return best_error(inst.transposed(), s, precision, budget)


# -- threshold scans -------------------------------------------------------------


@dataclass(frozen=True)
class BoxHit:
    x: tuple[int, ...]
    y: tuple[int, ...]
    residuals: tuple[RealConst, ...]


def _valid_ys(val: RealConst, bound: PowerProduct, prec: int) -> list[int]:
    with iv_precision(prec):
        x = val.interval(prec)
        b = bound.interval(prec)
        lo = interval_floor(x - b)[0]
        hi = interval_ceil(x + b)[1]
    return [y for y in range(lo, hi + 1) if abs_within(val - y, bound, prec)]


def box_points(
    inst: ProblemInstance,
    x_limits,
    y_bounds,
    symmetric: bool = True,
    include_zero_x: bool = True,
    limit: int = 100_000,
    budget: int = DEFAULT_BUDGET,
    precision: int = START_PRECISION,
    backend: str | None = None,
) -> list[BoxHit]:
    """All (x, y) != 0 with |x_j| <= x_limits[j] and |theta_i.x - eta_i - y_i| <= y_bounds[i].

    With ``symmetric`` one representative per +- pair is returned (the lex-positive one).
    """
    x_limits = [int(v) for v in x_limits]
    y_bounds = [PowerProduct.of(b) for b in y_bounds]
    inhomogeneous = inst.has_shift()
    if inhomogeneous:
        symmetric = False
    hits: list[BoxHit] = []
    if include_zero_x:
        shift = [RealConst() - inst.eta_value(i) for i in range(inst.n)]
        ranges = [_valid_ys(v, b, precision) for v, b in zip(shift, y_bounds)]
        for y in _product(ranges):
            if any(y) and (not symmetric or _lex_positive(y)):
                hits.append(BoxHit((0,) * inst.m, y, tuple(v - yi for v, yi in zip(shift, y))))
    total = 1
    for h in x_limits:
        total *= 2 * h + 1
    if total > budget:
        raise BudgetExceeded(f"scan needs {total} points, budget is {budget}")
    setup = _FloatSetup(inst, inhomogeneous)
    eval_block = kernels.get_backend(backend)
    log_scale = np.array([float(b.log(64)) for b in y_bounds])
    ones = np.ones(inst.n)
    for lo, hi in _subboxes(x_limits, symmetric):
        size = int(np.prod(hi - lo + 1))
        for start in range(0, size, BLOCK):
            count = min(BLOCK, size - start)
            _, elo, _ = eval_block(setup.theta, setup.shift, setup.inv_sigma, ones, log_scale, lo, hi, start, count)
            keep = np.nonzero(elo <= 0.0)[0]
            if not len(keep):
                continue
            for x in _decode_indices(lo, hi, start + keep):
                x = tuple(int(v) for v in x)
                vals = []
                for i in range(inst.n):
                    v = RealConst()
                    for j, xj in enumerate(x):
                        if xj:
                            v = v + inst.entry(i, j) * xj
                    vals.append(v - inst.eta_value(i))
                ranges = [_valid_ys(v, b, precision) for v, b in zip(vals, y_bounds)]
                for y in _product(ranges):
                    hits.append(BoxHit(x, y, tuple(v - yi for v, yi in zip(vals, y))))
                    if len(hits) > limit:
                        raise BudgetExceeded(f"more than {limit} points in the box")
    hits.sort(key=lambda h: (h.x, h.y))
    return hits


def _product(ranges):
    out = [()]
    for r in ranges:
        out = [p + (v,) for p in out for v in r]
    return out


def _lex_positive(v) -> bool:
    for c in v:
        if c:
            return c > 0
    return False
