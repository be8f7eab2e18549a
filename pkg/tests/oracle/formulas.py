"""Reference transference formulas written directly in sympy rationals.

Kept separate from the package so the tests compare two independent
transcriptions of the same closed forms.
"""

from sympy import Rational, oo


def R(x):
    return oo if x in (oo, float("inf")) else Rational(str(x)) if not isinstance(x, Rational) else x


def classical_dyson(m, n, w):
    return (Rational(n - 1) + m * w) / (n + (m - 1) * w)


def classical_german(m, n, wh):
    if wh >= Rational(n, m):
        return (m - 1 / wh) / Rational(m - 1)
    return Rational(n - 1) / (n - wh)


def jarnik_dual(wh):
    return 2 - 1 / wh


def weighted_dyson(sm, rn, w):
    return ((1 / rn - 1) + w / sm) / (1 / rn + (1 / sm - 1) * w)


def weighted_german(sm, rn, wh):
    if wh >= sm / rn:
        return (1 - sm / wh) / (1 - sm)
    return (1 - rn) / (1 - rn * wh)


def competing_dyson(m, n, s1, sm, r1, rn, w):
    k = m + n - 1
    top = k * (1 / rn + w / sm) + (w - 1) / s1
    bottom = k * (1 / rn + w / sm) - (w - 1) / r1
    return top / bottom


def dyson_upper(sm, rn, w):
    return (rn / sm) * (w - (1 - sm)) / (1 - (1 - rn) * w)


def s_exponent(gamma, rn):
    return gamma - (gamma - 1) / rn


def delta_of_gamma(gamma, sm, rn):
    return (1 + (gamma - 1) / sm) / (gamma - (gamma - 1) / rn)


def gamma_of_delta(delta, sm, rn):
    return ((1 / sm - 1) + delta / rn) / (1 / sm + (1 / rn - 1) * delta)


def gamma_of_alpha(alpha, sm, rn):
    if alpha >= rn / sm:
        return (1 - rn / alpha) / (1 - rn)
    return (1 - sm) / (1 - sm * alpha)


def sign_expressions(alpha, gamma, sm, rn):
    return gamma * (1 - rn) - (1 - rn / alpha), gamma * (1 - sm * alpha) - (1 - sm)


def general_box(mu, nu, sigma, rho):
    total = sum(mu) + sum(nu)
    b = max((m_ - total) / s for m_, s in zip(mu, sigma))
    a = min((total - n_) / r for n_, r in zip(nu, rho))
    return a, b
