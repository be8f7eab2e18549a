"""Closed-form transference bounds between a matrix and its transpose.

Every function takes exact rationals (floats are converted exactly, so no
rounding enters the formulas) and returns a Fraction or ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError
from .weights import Weights

INF = math.inf


def exact(x):
    """Fraction for finite input, ``math.inf`` for +inf; None passes through."""
    if x is None:
        return None
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "+inf", "infinity"):
            return INF
        return Fraction(x.strip())
    if isinstance(x, float):
        if math.isnan(x) or x == -INF:
            raise DomainError(f"not an exponent value: {x}")
        if x == INF:
            return INF
    return Fraction(x)


def _inv(x):
    """1/x with 1/inf = 0."""
    return Fraction(0) if x == INF else 1 / x


def _cap(rho_n):
    """(1 - rho_n)^-1, which is +inf for rho_n = 1."""
    return INF if rho_n == 1 else 1 / (1 - rho_n)


def _check_weight(w, name):
    if not 0 < w <= 1:
        raise DomainError(f"{name} must lie in (0, 1], got {w}")


@dataclass(frozen=True)
class BoundInput:
    """Extreme weights of both sides plus the exponents of the matrix."""

    sigma_m: Fraction
    sigma_1: Fraction
    rho_n: Fraction
    rho_1: Fraction
    m: int
    n: int
    omega: Fraction | float | None = None
    omega_hat: Fraction | float | None = None

    def __post_init__(self):
        for name in ("sigma_m", "sigma_1", "rho_n", "rho_1"):
            v = exact(getattr(self, name))
            if v == INF:
                raise DomainError(f"{name} must be finite")
            _check_weight(v, name)
            object.__setattr__(self, name, v)
        for name in ("omega", "omega_hat"):
            v = exact(getattr(self, name))
            if v is not None and v < 1:
                raise DomainError(f"{name} must be >= 1, got {v}")
            object.__setattr__(self, name, v)
        if self.m < 1 or self.n < 1:
            raise DomainError("m and n must be positive")
        if self.m + self.n < 3:
            raise DomainError("transference needs m + n >= 3")
        for lo, hi, k, side in ((self.sigma_m, self.sigma_1, self.m, "sigma"),
                                (self.rho_n, self.rho_1, self.n, "rho")):
            if lo > hi:
                raise DomainError(f"{side}: smallest weight exceeds largest")
            if lo * k > 1 or hi * k < 1:
                raise DomainError(f"{side}: extremes inconsistent with {k} weights summing to 1")
            if k == 1 and lo != 1:
                raise DomainError(f"{side}: a single weight must equal 1")
            if k == 2 and lo + hi != 1:
                raise DomainError(f"{side}: two weights must sum to 1")

    @classmethod
    def from_weights(cls, sigma: Weights, rho: Weights, omega=None, omega_hat=None) -> "BoundInput":
        return cls(sigma.last, sigma.first, rho.last, rho.first, len(sigma), len(rho), omega, omega_hat)

    @classmethod
    def make(cls, sigma_m, rho_n, m: int = 2, n: int = 1, *, sigma_1=None, rho_1=None,
             omega=None, omega_hat=None) -> "BoundInput":
        """Fill in the largest weights as 1 - (k-1) * smallest unless given."""
        sigma_m, rho_n = exact(sigma_m), exact(rho_n)
        if sigma_1 is None:
            sigma_1 = 1 - (m - 1) * sigma_m
        if rho_1 is None:
            rho_1 = 1 - (n - 1) * rho_n
        return cls(sigma_m, sigma_1, rho_n, rho_1, m, n, omega, omega_hat)

    def transposed(self, omega=None, omega_hat=None) -> "BoundInput":
        """Roles of the two sides swapped, carrying the given exponents."""
        return BoundInput(self.rho_n, self.rho_1, self.sigma_m, self.sigma_1, self.n, self.m, omega, omega_hat)

    def with_exponents(self, omega=None, omega_hat=None) -> "BoundInput":
        return BoundInput(self.sigma_m, self.sigma_1, self.rho_n, self.rho_1, self.m, self.n, omega, omega_hat)

    def need_omega(self):
        if self.omega is None:
            raise DomainError("omega is required")
        return self.omega

    def need_omega_hat(self):
        if self.omega_hat is None:
            raise DomainError("omega_hat is required")
        return self.omega_hat


# -- homogeneous bounds ----------------------------------------------------------


def dyson_bound(inp: BoundInput):
    """Lower bound for the regular exponent of the transpose."""
    w = inp.need_omega()
    sm, rn = inp.sigma_m, inp.rho_n
    if w == INF:
        return INF if sm == 1 else 1 / (1 - sm)
    return ((1 / rn - 1) + w / sm) / (1 / rn + (1 / sm - 1) * w)


def german_bound(inp: BoundInput):
    """Lower bound for the uniform exponent of the transpose (two regimes)."""
    wh = inp.need_omega_hat()
    sm, rn = inp.sigma_m, inp.rho_n
    if wh >= sm / rn:
        if sm == 1:
            return INF
        return (1 - sm * _inv(wh)) / (1 - sm)
    return (1 - rn) / (1 - rn * wh)


def dyson_inverse(inp: BoundInput):
    """Upper bound for the regular exponent of the transpose."""
    w = inp.need_omega()
    sm, rn = inp.sigma_m, inp.rho_n
    if not w < _cap(rn):
        raise DomainError(f"omega = {w} is outside [1, (1 - rho_n)^-1)")
    return (rn / sm) * (w - (1 - sm)) / (1 - (1 - rn) * w)


def german_inverse(inp: BoundInput):
    """Upper bound for the uniform exponent of the transpose."""
    wh = inp.need_omega_hat()
    sm, rn = inp.sigma_m, inp.rho_n
    cap = _cap(rn)
    if not wh < cap:
        raise DomainError(f"omega_hat = {wh} is outside [1, (1 - rho_n)^-1)")
    seam = INF if rn == 1 else (1 - sm) / (1 - rn)
    if wh >= seam:
        return rn / (1 - (1 - rn) * wh)
    return (1 - (1 - sm) / wh) / sm


def chow_ghosh_bound(inp: BoundInput):
    """The competing lower bound with the (m + n - 1) weighting."""
    w = inp.need_omega()
    k = inp.m + inp.n - 1
    sm, s1, rn, r1 = inp.sigma_m, inp.sigma_1, inp.rho_n, inp.rho_1
    if w == INF:
        den = k / sm - 1 / r1
        return INF if den <= 0 else (k / sm + 1 / s1) / den
    base = k * (1 / rn + w / sm)
    return (base + (w - 1) / s1) / (base - (w - 1) / r1)


# -- one linear form ----------------------------------------------------------------


def n1_dyson_interval(inp: BoundInput):
    """(lower, upper) for the regular exponent of the transpose when n = 1."""
    if inp.n != 1:
        raise DomainError("requires n = 1")
    w = inp.need_omega()
    sm = inp.sigma_m
    if w == INF:
        return 1 / (1 - sm), INF
    return w / (sm + (1 - sm) * w), (w - (1 - sm)) / sm


_SENSES = {
    ">=": lambda v, b: v >= b,
    "<=": lambda v, b: v <= b,
    ">": lambda v, b: v > b,
    "<": lambda v, b: v < b,
    "==": lambda v, b: v == b,
}


@dataclass(frozen=True)
class Constraint:
    name: str
    value: object
    sense: str
    bound: object

    @property
    def satisfied(self) -> bool:
        return _SENSES[self.sense](self.value, self.bound)

    @property
    def slack(self):
        """Signed distance to the boundary; nonnegative when satisfied (for <, >, strictly positive)."""
        if self.value == self.bound:
            return Fraction(0)
        if self.sense in (">=", ">"):
            return self.value - self.bound
        if self.sense in ("<=", "<"):
            return self.bound - self.value
        return -abs(self.value - self.bound)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": fmt_value(self.value),
            "sense": self.sense,
            "bound": fmt_value(self.bound),
            "slack": fmt_value(self.slack),
            "satisfied": self.satisfied,
        }


@dataclass(frozen=True)
class ConstraintReport:
    constraints: tuple[Constraint, ...]
    note: str = ""

    @property
    def satisfied(self) -> bool:
        return all(c.satisfied for c in self.constraints)

    @property
    def violated(self) -> list[str]:
        return [c.name for c in self.constraints if not c.satisfied]

    def __getitem__(self, name: str) -> Constraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        out = {"satisfied": self.satisfied, "constraints": [c.as_dict() for c in self.constraints]}
        if self.note:
            out["note"] = self.note
        return out


def fmt_value(v):
    """JSON-friendly rendering: exact rationals as strings, inf as '+inf'."""
    if v is None:
        return None
    if v == INF:
        return "+inf"
    if v == -INF:
        return "-inf"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return round(v, 12)
    return v


def n1_german_constraints(inp: BoundInput, dual_omega_hat, sigma_k=None,
                          first_entry_rational: bool = False) -> ConstraintReport:
    """Constraints linking the uniform exponents of a row and its transpose (n = 1).

    ``sigma_k`` is the weight of the first irrational entry; when given, the
    cap sigma_k * dual <= 1 is added. With m = 2 and a rational first entry
    the pair is forced to (+inf, 1/sigma_2), which is what gets checked.
    """
    if inp.n != 1:
        raise DomainError("requires n = 1")
    wh = inp.need_omega_hat()
    dual = exact(dual_omega_hat)
    sm = inp.sigma_m
    if first_entry_rational:
        if inp.m != 2:
            raise DomainError("the rational-first-entry classification needs m = 2")
        return ConstraintReport((
            Constraint("omega_hat_infinite", wh, "==", INF),
            Constraint("dual_equals_inverse_sigma_2", dual, "==", 1 / sm),
        ), note="rational first entry: (omega_hat, dual) = (+inf, 1/sigma_2)")
    inv = _inv(wh)
    cons = [
        Constraint("lower", (1 - sm) * dual + sm * inv, ">=", Fraction(1)),
        Constraint("upper", sm * dual + (1 - sm) * inv, "<=", Fraction(1)),
    ]
    if sigma_k is not None:
        cons.append(Constraint("first_irrational_cap", exact(sigma_k) * dual, "<=", Fraction(1)))
    return ConstraintReport(tuple(cons))


def marnat_region(sigma, a, b) -> ConstraintReport:
    """Membership of (a, b) in the region of realizable (1/omega_hat, dual) pairs for m = 2."""
    if isinstance(sigma, Weights):
        sigma = tuple(sigma)
    if len(sigma) != 2:
        raise DomainError("the region is defined for two weights")
    s1, s2 = (exact(x) for x in sigma)
    a, b = exact(a), exact(b)
    return ConstraintReport((
        Constraint("a_positive", a, ">", Fraction(0)),
        Constraint("a_below_third", a, "<", 1 / (3 * s1)),
        Constraint("lower", s1 * b + s2 * a, ">=", Fraction(1)),
        Constraint("upper", s2 * b + s1 * a, "<=", Fraction(1)),
        Constraint("cap", s1 * b, "<=", Fraction(1)),
    ))


# -- inhomogeneous ---------------------------------------------------------------


def inhom_bounds(inp: BoundInput, which: str):
    """Lower bounds for the shifted exponents.

    ``dyson``: bound on the uniform shifted exponent from omega.
    ``german``: bound on the regular shifted exponent from omega_hat.
    ``n1`` / ``m1``: the pair (uniform bound, regular bound) for a single
    form or a single column; entries are None when the input is missing.
    """
    sm, rn = inp.sigma_m, inp.rho_n
    cap = _cap(rn)
    if which == "dyson":
        w = inp.need_omega()
        if not w < cap:
            raise DomainError(f"omega = {w} is outside [1, (1 - rho_n)^-1)")
        return (sm / rn) * (1 - (1 - rn) * w) / (w - (1 - sm))
    if which == "german":
        wh = inp.need_omega_hat()
        if not wh < cap:
            raise DomainError(f"omega_hat = {wh} is outside [1, (1 - rho_n)^-1)")
        seam = INF if rn == 1 else (1 - sm) / (1 - rn)
        if wh >= seam:
            return (1 - (1 - rn) * wh) / rn
        return sm / (1 - (1 - sm) / wh)
    if which == "n1":
        if inp.n != 1:
            raise DomainError("requires n = 1")
        hat = None if inp.omega is None else sm / (inp.omega - (1 - sm)) if inp.omega != INF else Fraction(0)
        reg = None if inp.omega_hat is None else sm / (1 - (1 - sm) * _inv(inp.omega_hat))
        return hat, reg
    if which == "m1":
        if inp.m != 1:
            raise DomainError("requires m = 1")
        for name, v in (("omega", inp.omega), ("omega_hat", inp.omega_hat)):
            if v is not None and not v < cap:
                raise DomainError(f"{name} = {v} is outside [1, (1 - rho_n)^-1)")
        hat = None if inp.omega is None else (1 / inp.omega - (1 - rn)) / rn
        reg = None if inp.omega_hat is None else (1 - (1 - rn) * inp.omega_hat) / rn
        return hat, reg
    raise ValueError(f"unknown bound family {which!r}")


def bugeaud_laurent_check(est_inhom, est_dual, tol: float = 0.2) -> ConstraintReport:
    """Shifted exponents against reciprocals of the transpose's exponents.

    Violation needs the optimistic end of the left side to fall below the
    pessimistic end of the right side by more than ``tol``.
    """
    rhs_reg = 0.0 if est_dual.omega_hat_high == INF else 1.0 / est_dual.omega_hat_high
    rhs_unif = 0.0 if est_dual.omega_high == INF else 1.0 / est_dual.omega_high
    return ConstraintReport((
        Constraint("regular", est_inhom.omega_high, ">=", rhs_reg - tol),
        Constraint("uniform", est_inhom.omega_hat_high, ">=", rhs_unif - tol),
    ))


def estimate_conformance(sigma: Weights, rho: Weights, est, est_t, tol: float = 0.2) -> ConstraintReport:
    """Check both transference bounds, in both directions, on estimated exponents.

    The bound is evaluated at the low end of the source window and compared
    with the high end of the target window plus ``tol``.
    """
    fwd = BoundInput.from_weights(sigma, rho)
    back = BoundInput.from_weights(rho, sigma)
    cons = []
    for label, src, dst, inp in (("", est, est_t, fwd), ("transpose_", est_t, est, back)):
        if src.is_infinite or dst.is_infinite:
            continue
        lo = exact(src.omega_low)
        d = dyson_bound(inp.with_exponents(omega=lo))
        cons.append(Constraint(label + "dyson", dst.omega_high + tol, ">=", float(d)))
        g = german_bound(inp.with_exponents(omega_hat=exact(src.omega_hat_low)))
        cons.append(Constraint(label + "german", dst.omega_hat_high + tol, ">=", float(g)))
    note = "" if cons else "infinite exponents: bounds hold trivially"
    return ConstraintReport(tuple(cons), note)


# -- parameter correspondences ------------------------------------------------------


def gamma_delta_map(gamma, inp: BoundInput):
    """(a, delta) with s = t^a for the box pair attached to gamma."""
    g = exact(gamma)
    if g == INF or g < 1 or not g < _cap(inp.rho_n):
        raise DomainError(f"gamma = {g} is outside [1, (1 - rho_n)^-1)")
    a = g - (g - 1) / inp.rho_n
    return a, (1 + (g - 1) / inp.sigma_m) / a


def gamma_from_delta(delta, inp: BoundInput):
    """Inverse of the delta coordinate of ``gamma_delta_map``."""
    d = exact(delta)
    if d == INF:
        return _cap(inp.rho_n)
    if d < 1:
        raise DomainError("delta must be >= 1")
    sm, rn = inp.sigma_m, inp.rho_n
    return ((1 / sm - 1) + d / rn) / (1 / sm + (1 / rn - 1) * d)


def alpha_gamma_map(alpha, inp: BoundInput):
    """gamma attached to a leaf exponent alpha >= 1."""
    al = exact(alpha)
    if al == INF or al < 1:
        raise DomainError("alpha must be a finite value >= 1")
    sm, rn = inp.sigma_m, inp.rho_n
    if al >= rn / sm:
        if rn == 1:
            return Fraction(1) if al == 1 else INF
        return (1 - rn / al) / (1 - rn)
    return (1 - sm) / (1 - sm * al)


def sign_conditions(alpha, inp: BoundInput) -> ConstraintReport:
    """Both expressions must be <= 0 with gamma = alpha_gamma_map(alpha)."""
    al = exact(alpha)
    g = alpha_gamma_map(al, inp)
    sm, rn = inp.sigma_m, inp.rho_n
    first_coef, second_coef = 1 - rn, 1 - sm * al
    first = (0 if first_coef == 0 else g * first_coef) - (1 - rn / al)
    second = (0 if second_coef == 0 else g * second_coef) - (1 - sm)
    return ConstraintReport((
        Constraint("rho_side", first, "<=", Fraction(0)),
        Constraint("sigma_side", second, "<=", Fraction(0)),
    ))


@dataclass(frozen=True)
class GeneralBoxChoice:
    """Log-exponents of a general comparison box: widths t^mu_j and t^nu_i."""

    mu: tuple
    nu: tuple
    gamma: Fraction

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(exact(x) for x in self.mu))
        object.__setattr__(self, "nu", tuple(exact(x) for x in self.nu))
        object.__setattr__(self, "gamma", exact(self.gamma))

    @property
    def total(self) -> Fraction:
        return sum(self.mu, Fraction(0)) + sum(self.nu, Fraction(0))

    @classmethod
    def standard(cls, sigma: Weights, rho: Weights, gamma) -> "GeneralBoxChoice":
        g = exact(gamma)
        return cls(tuple(sigma), tuple(-g * r for r in rho), g)


@dataclass(frozen=True)
class BoxDelta:
    feasible: bool
    a: Fraction | None = None
    b: Fraction | None = None
    delta: Fraction | None = None
    violated: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "a": fmt_value(self.a),
            "b": fmt_value(self.b),
            "delta": fmt_value(self.delta),
            "violated": list(self.violated),
        }


def general_box_delta(choice: GeneralBoxChoice, sigma: Weights, rho: Weights) -> BoxDelta:
    """Best (a, b, delta) for which the comparison box sits between the two standard boxes."""
    if len(choice.mu) != len(sigma) or len(choice.nu) != len(rho):
        raise DomainError("box exponents do not match the weight lengths")
    g = choice.gamma
    if g < 1:
        raise DomainError("gamma must be >= 1")
    bad = [f"mu_{j + 1}" for j, (mu, s) in enumerate(zip(choice.mu, sigma)) if mu > s]
    bad += [f"nu_{i + 1}" for i, (nu, r) in enumerate(zip(choice.nu, rho)) if nu > -g * r]
    if bad:
        return BoxDelta(False, violated=tuple(bad))
    total = choice.total
    b = max((mu - total) / s for mu, s in zip(choice.mu, sigma))
    a = min((total - nu) / r for nu, r in zip(choice.nu, rho))
    if a <= 0:
        return BoxDelta(False, a, b, violated=("a_positive",))
    return BoxDelta(True, a, b, b / a)
