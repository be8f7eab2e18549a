"""Exact positive reals of the form prod p_k ** e_k with primes p_k and rational e_k.

Every half-width the toolkit works with (t**sigma_j, s**(-delta*sigma_j),
d**(1/(2(d-1))), ...) is such a product when the parameters are rational.
Because the logarithms of distinct primes are linearly independent over Q,
equality is decided on the exponent map and an order comparison always
terminates: the logarithm is evaluated at increasing precision until its sign
is certain.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import mpmath
from sympy import factorint


@lru_cache(maxsize=4096)
def _factor(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(factorint(n).items()))


def as_fraction(value) -> Fraction:
    """Exact rational from int, Fraction, decimal string or float (bitwise)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot convert {value!r} to an exact rational")
        return Fraction(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


class PowerProduct:
    """Immutable positive real prod p**e, p prime, e rational."""

    __slots__ = ("_exps", "_hash")

    def __init__(self, exps=None):
        clean = {}
        for p, e in (exps or {}).items():
            e = Fraction(e)
            if e:
                clean[int(p)] = e
        self._exps = tuple(sorted(clean.items()))
        self._hash = hash(self._exps)

    # -- construction -------------------------------------------------
    @classmethod
    def one(cls) -> "PowerProduct":
        return cls()

    @classmethod
    def of(cls, value) -> "PowerProduct":
        """Wrap a positive rational (or an existing PowerProduct)."""
        if isinstance(value, PowerProduct):
            return value
        q = as_fraction(value)
        if q <= 0:
            raise ValueError(f"PowerProduct needs a positive value, got {q}")
        exps: dict[int, Fraction] = {}
        for p, k in _factor(q.numerator):
            if p > 1:
                exps[p] = exps.get(p, Fraction(0)) + k
        for p, k in _factor(q.denominator):
            if p > 1:
                exps[p] = exps.get(p, Fraction(0)) - k
        return cls(exps)

    # -- algebra --------------------------------------------------------
    @property
    def exponents(self) -> dict[int, Fraction]:
        return dict(self._exps)

    def __mul__(self, other):
        other = PowerProduct.of(other)
        exps = dict(self._exps)
        for p, e in other._exps:
            exps[p] = exps.get(p, Fraction(0)) + e
        return PowerProduct(exps)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * PowerProduct.of(other) ** -1

    def __rtruediv__(self, other):
        return PowerProduct.of(other) * self ** -1

    def __pow__(self, k):
        k = as_fraction(k)
        return PowerProduct({p: e * k for p, e in self._exps})

    def is_rational(self) -> bool:
        return all(e.denominator == 1 for _, e in self._exps)

    def to_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        num, den = 1, 1
        for p, e in self._exps:
            if e > 0:
                num *= p ** int(e)
            else:
                den *= p ** int(-e)
        return Fraction(num, den)

    # -- evaluation -----------------------------------------------------
    def log(self, prec: int = 113):
        with mpmath.workprec(prec + 16):
            return mpmath.fsum(e.numerator * mpmath.log(p) / e.denominator for p, e in self._exps)

    def to_mpf(self, prec: int = 113):
        with mpmath.workprec(prec + 16):
            val = mpmath.exp(self.log(prec))
        return +val

    def __float__(self) -> float:
        return float(self.to_mpf(64))

    def interval(self, prec: int = 128):
        """Rigorous ``mpmath.iv`` enclosure."""
        from .entries import iv_fraction, iv_precision

        if self.is_rational():
            with iv_precision(prec):
                return iv_fraction(self.to_fraction())
        with iv_precision(prec + 16):
            total = mpmath.iv.mpf(0)
            for p, e in self._exps:
                total += mpmath.iv.log(mpmath.iv.mpf(p)) * iv_fraction(e)
            return mpmath.iv.exp(total)

    # -- comparison -----------------------------------------------------
    def _log_sign(self) -> int:
        if not self._exps:
            return 0
        weight = sum(abs(e) * math.log(p) for p, e in self._exps) + 1.0
        prec = 64
        while True:
            val = self.log(prec)
            if abs(val) > weight * mpmath.mpf(2) ** (8 - prec):
                return 1 if val > 0 else -1
            prec *= 2

    def compare(self, other) -> int:
        return (self / PowerProduct.of(other))._log_sign()

    def __eq__(self, other):
        if isinstance(other, PowerProduct):
            return self._exps == other._exps
        try:
            return self._exps == PowerProduct.of(other)._exps
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __repr__(self) -> str:
        if not self._exps:
            return "PowerProduct(1)"
        terms = "*".join(f"{p}^({e})" for p, e in self._exps)
        return f"PowerProduct({terms})"

    def __str__(self) -> str:
        if self.is_rational():
            return str(self.to_fraction())
        return mpmath.nstr(self.to_mpf(64), 15)


def root_constant(base: int, exponent: Fraction) -> PowerProduct:
    """base ** exponent as an exact PowerProduct, e.g. d**(1/(2(d-1)))."""
    return PowerProduct.of(base) ** exponent


def pp_max(values):
    values = list(values)
    best = values[0]
    for v in values[1:]:
        if v > best:
            best = v
    return best
