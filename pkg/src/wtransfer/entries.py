"""Matrix entries: exact rationals and named irrational constants.

Each constant is stored as a Q-linear combination over a fixed set of basis
reals: 1, sqrt(f) for squarefree f > 1, and Liouville-type digit series.
Square roots of distinct squarefree integers are linearly independent over Q
together with 1, so a linear form in these is zero exactly when all its
coefficients vanish; Liouville series are treated as independent basis
elements as well.

Intervals come from ``mpmath.iv`` and enclose the true value at any
requested binary precision.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from functools import lru_cache

from mpmath import iv, libmp
from sympy import factorint

from .errors import InstanceParseError, PrecisionExhausted

ONE = "1"


@contextmanager
def iv_precision(prec: int):
    """Temporarily set the working precision of ``mpmath.iv``."""
    saved = iv.prec
    iv.prec = prec
    try:
        yield
    finally:
        iv.prec = saved


def interval_floor(x) -> tuple[int, int]:
    """(floor of lower endpoint, floor of upper endpoint) of an iv interval."""
    a, b = x._mpi_
    return int(libmp.to_int(libmp.mpf_floor(a))), int(libmp.to_int(libmp.mpf_floor(b)))


def interval_ceil(x) -> tuple[int, int]:
    a, b = x._mpi_
    return int(libmp.to_int(libmp.mpf_ceil(a))), int(libmp.to_int(libmp.mpf_ceil(b)))


def iv_fraction(q: Fraction):
    """Rigorous enclosure of a rational at the current iv precision."""
    q = Fraction(q)
    return iv.mpf(q.numerator) / q.denominator


def _squarefree_split(n: int) -> tuple[int, int]:
    """n = a**2 * f with f squarefree; returns (a, f)."""
    a, f = 1, 1
    for p, k in factorint(n).items():
        a *= p ** (k // 2)
        if k % 2:
            f *= p
    return a, f


def liouville_positions(ratio: Fraction, count: int) -> list[int]:
    """Digit positions a_1 = 1, a_{k+1} = ceil(ratio * a_k)."""
    out = [1]
    while len(out) < count:
        out.append(math.ceil(ratio * out[-1]))
    return out


@lru_cache(maxsize=256)
def _basis_interval(key, prec: int):
    with iv_precision(prec):
        if key == ONE:
            return iv.mpf(1)
        kind = key[0]
        if kind == "sqrt":
            return iv.sqrt(iv.mpf(key[1]))
        if kind == "liouville":
            base, ratio = key[1], Fraction(key[2])
            # terms below 2**-(prec+8) go into the tail enclosure
            limit = (prec + 8) * math.log(2) / math.log(base)
            total = iv.mpf(0)
            a = 1
            while a <= limit:
                total += iv.mpf(1) / iv.mpf(base) ** a
                a = math.ceil(ratio * a)
            # tail sum_{l>K} base**-a_l <= 2 * base**-a_{K+1}
            tail = iv.mpf(2) / iv.mpf(base) ** a
            return total + iv.mpf([0, tail.b])
        raise KeyError(key)


class RealConst:
    """Immutable Q-linear combination of basis reals."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for k, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[k] = clean.get(k, Fraction(0)) + c
        self.terms = {k: c for k, c in clean.items() if c}

    @classmethod
    def rational(cls, q) -> "RealConst":
        return cls({ONE: Fraction(q)})

    def is_rational(self) -> bool:
        return all(k == ONE for k in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def rational_part(self) -> Fraction:
        return self.terms.get(ONE, Fraction(0))

    def irrational_part(self) -> "RealConst":
        return RealConst({k: c for k, c in self.terms.items() if k != ONE})

    def __add__(self, other):
        other = _coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return RealConst(out)

    __radd__ = __add__

    def __neg__(self):
        return RealConst({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, RealConst):
            if other.is_rational():
                other = other.rational_part
            elif self.is_rational():
                return other * self.rational_part
            else:
                raise TypeError("product of two irrational constants is not representable")
        q = Fraction(other)
        return RealConst({k: c * q for k, c in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        try:
            return self.terms == _coerce(other).terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def interval(self, prec: int = 128):
        with iv_precision(prec):
            total = iv.mpf(0)
            for k, c in self.terms.items():
                total += _basis_interval(k, prec) * iv_fraction(c)
            return total

    def __float__(self) -> float:
        if self.is_rational():
            return float(self.rational_part)
        x = self.interval(128)
        return 0.5 * (float(x.a) + float(x.b))

    def sign(self, prec: int = 128, max_prec: int = 4096) -> int:
        """Exact sign; irrational values are separated from 0 by refining."""
        if self.is_rational():
            q = self.rational_part
            return (q > 0) - (q < 0)
        while prec <= max_prec:
            x = self.interval(prec)
            if x.a > 0:
                return 1
            if x.b < 0:
                return -1
            prec *= 2
        raise PrecisionExhausted(f"cannot decide the sign of {self!r}")

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __repr__(self):
        parts = []
        for k, c in sorted(self.terms.items(), key=lambda kv: str(kv[0])):
            parts.append(str(c) if k == ONE else f"{c}*{_key_name(k)}")
        return "RealConst(" + (" + ".join(parts) or "0") + ")"


def _key_name(k) -> str:
    if k[0] == "sqrt":
        return f"sqrt({k[1]})"
    return f"L({k[1]},{k[2]})"


def _coerce(x) -> RealConst:
    if isinstance(x, RealConst):
        return x
    if isinstance(x, EntrySpec):
        return x.value
    if isinstance(x, (int, Fraction)):
        return RealConst.rational(x)
    raise TypeError(f"cannot use {type(x).__name__} as an exact constant")


class EntrySpec:
    """A parsed matrix entry; keeps the source token for lossless round trips."""

    __slots__ = ("token", "value")

    def __init__(self, token: str, value: RealConst):
        self.token = token
        self.value = value

    @classmethod
    def parse(cls, token) -> "EntrySpec":
        if isinstance(token, EntrySpec):
            return token
        if isinstance(token, (int, Fraction)):
            q = Fraction(token)
            return cls(str(q), RealConst.rational(q))
        if not isinstance(token, str):
            raise InstanceParseError(f"entry must be a string, got {token!r}")
        raw = token.strip()
        sign = 1
        body = raw
        if body.startswith("-") and not _is_rational_literal(body):
            sign, body = -1, body[1:]
        try:
            value = _parse_body(body)
        except (ValueError, ZeroDivisionError, InvalidOperation) as exc:
            raise InstanceParseError(f"bad entry {token!r}: {exc}") from None
        return cls(raw, value * sign)

    def is_rational(self) -> bool:
        return self.value.is_rational()

    def interval(self, prec: int = 128):
        return self.value.interval(prec)

    def __float__(self):
        return float(self.value)

    def __eq__(self, other):
        return isinstance(other, EntrySpec) and self.token == other.token

    def __hash__(self):
        return hash(self.token)

    def __repr__(self):
        return f"EntrySpec({self.token!r})"

    def __str__(self):
        return self.token


def _is_rational_literal(s: str) -> bool:
    try:
        Fraction(s)
        return True
    except (ValueError, ZeroDivisionError):
        return False


def _parse_body(body: str) -> RealConst:
    if body == "golden":
        return RealConst({ONE: Fraction(-1, 2), ("sqrt", 5): Fraction(1, 2)})
    if body.startswith("sqrt:"):
        q = Fraction(body[5:])
        if q <= 0:
            raise ValueError("sqrt needs a positive rational")
        a, f = _squarefree_split(q.numerator * q.denominator)
        coeff = Fraction(a, q.denominator)
        if f == 1:
            return RealConst.rational(coeff)
        return RealConst({("sqrt", f): coeff})
    if body.startswith("liouville:"):
        parts = body.split(":")
        if len(parts) != 3:
            raise ValueError("expected liouville:<base>:<ratio>")
        base = int(parts[1])
        ratio = Fraction(parts[2])
        if base < 2 or ratio <= 1:
            raise ValueError("liouville needs base >= 2 and ratio > 1")
        return RealConst({("liouville", base, str(ratio)): 1})
    if body.startswith("dec:"):
        return RealConst.rational(Fraction(Decimal(body[4:])))
    return RealConst.rational(Fraction(body))


def liouville_partial_sum(base: int, ratio, terms: int) -> Fraction:
    ratio = Fraction(ratio)
    return sum((Fraction(1, base ** a) for a in liouville_positions(ratio, terms)), Fraction(0))
