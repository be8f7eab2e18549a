"""Weights, weighted norms, problem instances and weighted boxes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import mpmath

from .entries import EntrySpec, RealConst
from .errors import InstanceParseError
from .powers import PowerProduct, as_fraction, pp_max

MAX_WEIGHT_DENOMINATOR = 10**6


@dataclass(frozen=True)
class Weights:
    """Positive, non-increasing exact rationals summing to 1."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("weights need at least one entry")
        if any(v <= 0 for v in vals):
            raise ValueError(f"weights must be positive: {vals}")
        if any(a < b for a, b in zip(vals, vals[1:])):
            raise ValueError(f"weights must be non-increasing: {vals}")
        if sum(vals) != 1:
            raise ValueError(f"weights must sum to 1, got {sum(vals)}")

    @classmethod
    def parse(cls, items) -> "Weights":
        """Accepts rational strings/ints/Fractions; floats are rationalised."""
        vals = []
        for it in items:
            if isinstance(it, float):
                vals.append(Fraction(it).limit_denominator(MAX_WEIGHT_DENOMINATOR))
            else:
                vals.append(Fraction(str(it)) if isinstance(it, str) else Fraction(it))
        return cls(tuple(vals))

    @classmethod
    def uniform(cls, k: int) -> "Weights":
        return cls(tuple(Fraction(1, k) for _ in range(k)))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __iter__(self):
        return iter(self.values)

    @property
    def first(self) -> Fraction:
        return self.values[0]

    @property
    def last(self) -> Fraction:
        return self.values[-1]

    def is_uniform(self) -> bool:
        return len(set(self.values)) == 1

    def to_json(self) -> list[str]:
        return [str(v) for v in self.values]


def weighted_norm(v: Sequence, w: Weights, prec: int = 113):
    """max_j |v_j|**(1/w_j).

    Rational input is evaluated exactly and the result returned as an mpf
    correctly rounded at ``prec`` bits; use :func:`weighted_norm_exact` to keep
    the exact PowerProduct.
    """
    if len(v) != len(w):
        raise ValueError(f"dimension mismatch: {len(v)} entries, {len(w)} weights")
    try:
        exact = weighted_norm_exact(v, w)
    except TypeError:
        exact = None
    if exact is not None:
        return mpmath.mpf(0) if exact == 0 else exact.to_mpf(prec)
    with mpmath.workprec(prec + 16):
        best = mpmath.mpf(0)
        for x, wj in zip(v, w):
            x = abs(mpmath.mpf(x))
            if x:
                best = max(best, x ** (mpmath.mpf(wj.denominator) / wj.numerator))
    return +best


def weighted_norm_exact(v: Sequence, w: Weights):
    """Exact weighted norm of a rational vector: 0 or a PowerProduct."""
    if len(v) != len(w):
        raise ValueError(f"dimension mismatch: {len(v)} entries, {len(w)} weights")
    terms = []
    for x, wj in zip(v, w):
        if isinstance(x, float) or not isinstance(x, (int, Fraction)):
            raise TypeError("exact weighted norm needs rational entries")
        if x:
            terms.append(PowerProduct.of(abs(Fraction(x))) ** (1 / wj))
    return pp_max(terms) if terms else 0


@dataclass(frozen=True)
class ProblemInstance:
    """Dimensions, weight pair, matrix Theta (n x m) and optional shift eta."""

    sigma: Weights
    rho: Weights
    theta: tuple[tuple[EntrySpec, ...], ...]
    eta: tuple[EntrySpec, ...] | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        theta = tuple(tuple(EntrySpec.parse(e) for e in row) for row in self.theta)
        object.__setattr__(self, "theta", theta)
        if self.eta is not None:
            object.__setattr__(self, "eta", tuple(EntrySpec.parse(e) for e in self.eta))
        n, m = len(self.rho), len(self.sigma)
        if len(theta) != n or any(len(row) != m for row in theta):
            raise ValueError(f"theta must be {n}x{m} to match the weights")
        if self.eta is not None and len(self.eta) != n:
            raise ValueError("eta must have n entries")
        if m + n < 2:
            raise ValueError("m + n must be at least 2")

    @property
    def m(self) -> int:
        return len(self.sigma)

    @property
    def n(self) -> int:
        return len(self.rho)

    @property
    def d(self) -> int:
        return self.m + self.n

    def entry(self, i: int, j: int) -> RealConst:
        return self.theta[i][j].value

    def eta_value(self, i: int) -> RealConst:
        if self.eta is None:
            return RealConst()
        return self.eta[i].value

    def is_rational(self) -> bool:
        return all(e.is_rational() for row in self.theta for e in row)

    def has_shift(self) -> bool:
        return self.eta is not None and any(not e.value.is_zero() for e in self.eta)

    def transposed(self) -> "ProblemInstance":
        """(m, n, sigma, rho, Theta) -> (n, m, rho, sigma, Theta^T); eta is dropped."""
        theta_t = tuple(tuple(self.theta[i][j] for i in range(self.n)) for j in range(self.m))
        name = f"{self.name}^T" if self.name else ""
        return ProblemInstance(self.rho, self.sigma, theta_t, None, name)

    def with_eta(self, eta) -> "ProblemInstance":
        return ProblemInstance(self.sigma, self.rho, self.theta, eta, self.name)

    # -- file format ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "sigma": self.sigma.to_json(),
            "rho": self.rho.to_json(),
            "theta": [[e.token for e in row] for row in self.theta],
            "eta": None if self.eta is None else [e.token for e in self.eta],
        }

    @classmethod
    def from_dict(cls, data: dict, name: str = "") -> "ProblemInstance":
        try:
            sigma = Weights.parse(data["sigma"])
            rho = Weights.parse(data["rho"])
            inst = cls(sigma, rho, data["theta"], data.get("eta"), name or data.get("name", ""))
        except KeyError as exc:
            raise InstanceParseError(f"missing field {exc}") from None
        except (ValueError, TypeError) as exc:
            raise InstanceParseError(str(exc)) from None
        if "m" in data and data["m"] != inst.m or "n" in data and data["n"] != inst.n:
            raise InstanceParseError("declared m/n do not match the weights")
        return inst


def load_instance(path) -> ProblemInstance:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceParseError(f"{path}: {exc}") from None
    if isinstance(data, dict) and isinstance(data.get("instance"), dict):
        # corpus entry wrapping an instance
        return ProblemInstance.from_dict(data["instance"], name=data.get("id", path.stem))
    if not isinstance(data, dict):
        raise InstanceParseError(f"{path}: expected a JSON object")
    return ProblemInstance.from_dict(data, name=data.get("name", path.stem))


def dump_instance(inst: ProblemInstance, path) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(), indent=2) + "\n")


# -- boxes ---------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedBox:
    """Axis-aligned box with exact half-widths.

    ``kind`` is "P", "Q" or "lambda". Boxes built from a parameter keep
    ``base`` and the per-axis ``exponents`` so that half_width_i equals
    base**exponents[i] (times ``scale`` when scaled).
    """

    half_widths: tuple[PowerProduct, ...]
    kind: str = "lambda"
    base: PowerProduct | None = None
    exponents: tuple[Fraction, ...] | None = None

    @property
    def dim(self) -> int:
        return len(self.half_widths)

    @classmethod
    def from_lambdas(cls, lambdas) -> "WeightedBox":
        return cls(tuple(PowerProduct.of(x) for x in lambdas), "lambda")

    def volume_factor(self) -> PowerProduct:
        """Product of the half-widths (volume / 2**d)."""
        out = PowerProduct.one()
        for w in self.half_widths:
            out = out * w
        return out

    def scaled(self, c) -> "WeightedBox":
        c = PowerProduct.of(c)
        return WeightedBox(tuple(w * c for w in self.half_widths), "lambda")

    def floats(self) -> list[float]:
        return [float(w) for w in self.half_widths]

    def mpfs(self, prec: int = 113) -> list:
        return [w.to_mpf(prec) for w in self.half_widths]

    def contains(self, point) -> bool:
        """Exact closed-box membership for a rational point."""
        if len(point) != self.dim:
            raise ValueError("dimension mismatch")
        for z, w in zip(point, self.half_widths):
            z = abs(as_fraction(z))
            if z and PowerProduct.of(z) > w:
                return False
        return True

    def is_subset_of(self, other: "WeightedBox") -> bool:
        return all(a <= b for a, b in zip(self.half_widths, other.half_widths))


def _exact_param(x, name: str) -> Fraction:
    try:
        return as_fraction(x)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a finite real number") from None


def p_box(t, gamma, inst: ProblemInstance) -> WeightedBox:
    """P(t, gamma): |x|_sigma <= t, |y-part|_rho <= t**-gamma."""
    t, gamma = _exact_param(t, "t"), _exact_param(gamma, "gamma")
    if t <= 1:
        raise ValueError("p_box needs t > 1")
    exps = tuple(inst.sigma) + tuple(-gamma * r for r in inst.rho)
    base = PowerProduct.of(t)
    return WeightedBox(tuple(base ** e for e in exps), "P", base, exps)


def q_box(s, delta, inst: ProblemInstance) -> WeightedBox:
    """Q(s, delta): |x-part|_sigma <= s**-delta, |y-part|_rho <= s."""
    s, delta = _exact_param(s, "s"), _exact_param(delta, "delta")
    if s <= 1:
        raise ValueError("q_box needs s > 1")
    exps = tuple(-delta * sg for sg in inst.sigma) + tuple(inst.rho)
    base = PowerProduct.of(s)
    return WeightedBox(tuple(base ** e for e in exps), "Q", base, exps)


def q_box_pp(s: PowerProduct, delta: Fraction, sigma: Weights, rho: Weights) -> WeightedBox:
    """Q(s, delta) for an exact, possibly irrational, base s."""
    exps = tuple(-delta * sg for sg in sigma) + tuple(rho)
    return WeightedBox(tuple(s ** e for e in exps), "Q", s, exps)
