"""Estimating regular and uniform exponents from best-approximation records."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .entries import EntrySpec, RealConst, interval_floor, iv_precision
from .errors import IndeterminateComparison, PrecisionExhausted, TooFewRecords
from .lattice import DEFAULT_BUDGET
from .scan import MAX_PRECISION, START_PRECISION, ApproxRecord, ScanStats, scan_records
from .powers import as_fraction
from .weights import ProblemInstance

INF = math.inf


@dataclass
class RecordSequence:
    """Records sorted by strictly increasing height and strictly decreasing error."""

    records: list[ApproxRecord]
    t_max: Fraction
    inhomogeneous: bool = False
    name: str = ""
    stats: ScanStats | None = field(default=None, compare=False)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, k):
        return self.records[k]

    @property
    def has_zero(self) -> bool:
        return any(r.exact_zero for r in self.records)

    def gamma_regular(self) -> list[float | None]:
        """-log e_k / log t_k per record (None when t_k = 1)."""
        out = []
        for r in self.records:
            lt = float(r.log_height())
            if r.exact_zero:
                out.append(INF)
            elif lt <= 0:
                out.append(None)
            else:
                out.append(-float(r.log_error()) / lt)
        return out

    def gamma_uniform(self) -> list[float | None]:
        """-log e_k / log t_{k+1} per record (None for the last one)."""
        out = []
        for r, nxt in zip(self.records, self.records[1:]):
            out.append(INF if r.exact_zero else -float(r.log_error()) / float(nxt.log_height()))
        out.append(None)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if not self.records:
            w.writerow(["height", "error", "gamma_reg", "gamma_unif"])
            return buf.getvalue()
        m, n = len(self.records[0].x), len(self.records[0].y)
        w.writerow(["height", "error", "gamma_reg", "gamma_unif"]
                   + [f"x{j + 1}" for j in range(m)] + [f"y{i + 1}" for i in range(n)])
        for r, g, u in zip(self.records, self.gamma_regular(), self.gamma_uniform()):
            w.writerow([_fmt(r.height_float), _fmt(r.error_float), _fmt(g), _fmt(u), *r.x, *r.y])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if v == INF:
        return "inf"
    return format(v, ".12g")


def record_scan(
    inst: ProblemInstance,
    t_max,
    inhomogeneous: bool = False,
    precision: int = START_PRECISION,
    budget: int = DEFAULT_BUDGET,
    backend: str | None = None,
) -> RecordSequence:
    """Full record sequence up to height t_max (homogeneous or shifted by eta)."""
    stats = ScanStats()
    recs = scan_records(inst, t_max, inhomogeneous, precision, budget, backend, stats)
    return RecordSequence(recs, as_fraction(t_max), inhomogeneous and inst.has_shift(), inst.name, stats)


@dataclass(frozen=True)
class ExponentEstimate:
    omega_low: float
    omega_high: float
    omega_hat_low: float
    omega_hat_high: float
    n_records: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    def as_dict(self) -> dict:
        return {
            "omega_low": _json_num(self.omega_low),
            "omega_high": _json_num(self.omega_high),
            "omega_hat_low": _json_num(self.omega_hat_low),
            "omega_hat_high": _json_num(self.omega_hat_high),
            "n_records": self.n_records,
        }

    @property
    def is_infinite(self) -> bool:
        return self.omega_high == INF


def _json_num(v):
    return "+inf" if v == INF else round(v, 12)


def _intercept(values, logs):
    """Intercept a of the least-squares fit values ~ a + b / logs, with RMS residual."""
    x = 1.0 / np.asarray(logs, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(y) < 2 or np.ptp(x) == 0:
        return float(np.mean(y)), 0.0
    b, a = np.polyfit(x, y, 1)
    resid = y - (a + b * x)
    return float(a), float(np.sqrt(np.mean(resid**2)))


def estimate_exponents(seq: RecordSequence) -> ExponentEstimate:
    """Regular (limsup) and uniform (liminf) estimates over the last half of the records.

    Homogeneous estimates are clipped below at 1; inhomogeneous ones at 0,
    since shifted exponents may legitimately fall below 1.
    """
    recs = list(seq.records)
    if seq.has_zero:
        return ExponentEstimate(INF, INF, INF, INF, len(recs), {"exact_zero": True})
    if len(recs) < 3:
        raise TooFewRecords(f"need at least 3 records, got {len(recs)}")
    start = len(recs) // 2
    log_t = [float(r.log_height()) for r in recs]
    log_e = [float(r.log_error()) for r in recs]
    reg = [(-log_e[k] / log_t[k], log_t[k]) for k in range(start, len(recs)) if log_t[k] > 0]
    unif = [(-log_e[k] / log_t[k + 1], log_t[k + 1]) for k in range(start, len(recs) - 1)]
    if not reg or not unif:
        raise TooFewRecords("tail window has no usable records")
    floor = 0.0 if seq.inhomogeneous else 1.0
    omega_high = max(floor, max(v for v, _ in reg))
    low, res_reg = _intercept([v for v, _ in reg], [lt for _, lt in reg])
    omega_low = min(max(floor, low), omega_high)
    hat_high = max(floor, min(v for v, _ in unif))
    hat_low, res_unif = _intercept([v for v, _ in unif], [lt for _, lt in unif])
    hat_low = min(max(floor, hat_low), hat_high)
    diag = {
        "window_start": start,
        "gamma_regular": [v for v, _ in reg],
        "gamma_uniform": [v for v, _ in unif],
        "fit_residual_regular": res_reg,
        "fit_residual_uniform": res_unif,
    }
    return ExponentEstimate(omega_low, omega_high, hat_low, hat_high, len(recs), diag)


def scalar_uniform_cap(inst: ProblemInstance):
    """1/rho_k for the first row k whose (single) entry is irrational; inf if none."""
    if inst.m != 1:
        raise ValueError("the cap applies to single-column matrices (m = 1)")
    for k in range(inst.n):
        if not inst.entry(k, 0).is_rational():
            return 1 / inst.rho[k]
    return INF


def convergents(theta, count: int, max_precision: int = MAX_PRECISION) -> list[tuple[int, int]]:
    """Continued-fraction convergents p/q of theta, certified by interval arithmetic.

    The degenerate convergent 0/1 of a number in (0, 1) is omitted.
    """
    if count < 1:
        raise ValueError("count must be positive")
    value = EntrySpec.parse(theta).value if not isinstance(theta, RealConst) else theta
    need = count + 1
    if value.is_rational():
        terms = _rational_cf(value.rational_part, need)
    else:
        prec = START_PRECISION
        while True:
            try:
                terms = _interval_cf(value, need, prec)
                break
            except IndeterminateComparison:
                prec *= 2
                if prec > max_precision:
                    raise PrecisionExhausted(f"cannot certify {count} partial quotients") from None
    out = []
    p0, q0, p1, q1 = 1, 0, terms[0], 1
    out.append((p1, q1))
    for a in terms[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
    if out[0][0] == 0:
        out = out[1:]
    return out[:count]


def _rational_cf(q: Fraction, count: int) -> list[int]:
    terms = []
    while len(terms) < count:
        a = math.floor(q)
        terms.append(a)
        if q == a:
            break
        q = 1 / (q - a)
    return terms


def _interval_cf(value: RealConst, count: int, prec: int) -> list[int]:
    terms = []
    with iv_precision(prec):
        x = value.interval(prec)
        for _ in range(count):
            lo, hi = interval_floor(x)
            if lo != hi:
                raise IndeterminateComparison("partial quotient not certified")
            terms.append(lo)
            frac = x - lo
            if not frac.a > 0:
                raise IndeterminateComparison("fractional part not separated from 0")
            x = 1 / frac
    return terms
