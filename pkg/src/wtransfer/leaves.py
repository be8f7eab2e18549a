"""Stem, anti-stem and leaf box families, and checks of the two-point-leaf argument."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import iv

from .entries import RealConst, iv_fraction, iv_precision
from .errors import DomainError, IndeterminateComparison, RangeError
from .powers import PowerProduct, pp_max, root_constant
from .scan import MAX_PRECISION, START_PRECISION, ErrorValue, box_points, axis_limit
from .transference import BoundInput, alpha_gamma_map, exact, gamma_delta_map
from .weights import ProblemInstance, WeightedBox, Weights, weighted_norm_exact

HYPOTHESES_FAIL = "hypotheses-fail"
VERIFIED = "verified"
COUNTEREXAMPLE = "COUNTEREXAMPLE"


# -- nonnegative magnitudes -------------------------------------------------------


@dataclass(frozen=True)
class Magnitude:
    """coeff * base ** power, with base an error value (or absent, making it exact).

    ``zero`` and ``infinite`` cover the degenerate cases.
    """

    coeff: PowerProduct | None = None
    base: ErrorValue | None = None
    power: Fraction = Fraction(1)
    zero: bool = False
    infinite: bool = False

    @classmethod
    def of(cls, value) -> "Magnitude":
        if isinstance(value, Magnitude):
            return value
        if isinstance(value, PowerProduct):
            return cls(value)
        if isinstance(value, ErrorValue):
            if value.is_zero():
                return cls(zero=True)
            if all(r.is_rational() for r in value.residuals):
                terms = [PowerProduct.of(abs(r.rational_part)) ** p
                         for r, p in zip(value.residuals, value.powers) if not r.is_zero()]
                return cls(pp_max(terms))
            return cls(PowerProduct.one(), value)
        if value == 0:
            return cls(zero=True)
        return cls(PowerProduct.of(value))

    @property
    def is_exact(self) -> bool:
        return self.base is None

    def __pow__(self, k) -> "Magnitude":
        k = Fraction(k)
        if self.zero:
            if k < 0:
                return Magnitude(infinite=True)
            return self if k > 0 else Magnitude(PowerProduct.one())
        if self.infinite:
            return Magnitude(zero=True) if k < 0 else self
        if self.base is None:
            return Magnitude(self.coeff ** k)
        return Magnitude(self.coeff ** k, self.base, self.power * k)

    def scaled(self, c) -> "Magnitude":
        if self.zero or self.infinite:
            return self
        return Magnitude(self.coeff * PowerProduct.of(c), self.base, self.power)

    def interval(self, prec: int):
        with iv_precision(prec):
            if self.zero:
                return iv.mpf(0)
            if self.infinite:
                return iv.mpf([iv.inf, iv.inf])
            c = self.coeff.interval(prec)
            if self.base is None:
                return c
            b = self.base.interval(prec)
            return c * iv.exp(iv.log(b) * iv_fraction(self.power))

    def __float__(self) -> float:
        if self.zero:
            return 0.0
        if self.infinite:
            return float("inf")
        x = self.interval(80)
        return 0.5 * (float(x.a) + float(x.b))

    def compare(self, other) -> int:
        other = Magnitude.of(other)
        for flag in ("zero", "infinite"):
            a, b = getattr(self, flag), getattr(other, flag)
            if a or b:
                if a and b:
                    return 0
                sign = -1 if flag == "zero" else 1
                return sign if a else -sign
        if self.is_exact and other.is_exact:
            return self.coeff.compare(other.coeff)
        if self.base is not None and self.base == other.base and self.power == other.power:
            return self.coeff.compare(other.coeff)
        prec = START_PRECISION
        while prec <= MAX_PRECISION:
            x, y = self.interval(prec), other.interval(prec)
            if x.b < y.a:
                return -1
            if x.a > y.b:
                return 1
            prec *= 2
        raise IndeterminateComparison("magnitudes coincide at the maximal precision")

    def __le__(self, other):
        return self.compare(other) <= 0

    def __lt__(self, other):
        return self.compare(other) < 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __str__(self):
        if self.zero:
            return "0"
        if self.infinite:
            return "+inf"
        if self.is_exact:
            return str(self.coeff)
        return format(float(self), ".12g")


def _mmax(a: Magnitude, b: Magnitude) -> Magnitude:
    return a if a >= b else b


def _mmin(a: Magnitude, b: Magnitude) -> Magnitude:
    return a if a <= b else b


# -- families ----------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyParams:
    """s > 1 (rational or an exact power product), 1 <= alpha <= delta."""

    s: Fraction | PowerProduct
    delta: Fraction
    alpha: Fraction

    def __post_init__(self):
        for name in ("delta", "alpha"):
            object.__setattr__(self, name, exact(getattr(self, name)))
        if not isinstance(self.s, PowerProduct):
            object.__setattr__(self, "s", exact(self.s))
        if not self.s > 1:
            raise DomainError("s must exceed 1")
        if not 1 <= self.alpha <= self.delta:
            raise DomainError("need 1 <= alpha <= delta")

    @property
    def s_pp(self) -> PowerProduct:
        return _pp(self.s)

    @property
    def S(self) -> PowerProduct:
        return self.s_pp ** (self.delta / self.alpha)

    @property
    def sS(self) -> PowerProduct:
        return self.s_pp * self.S

    @property
    def middle(self) -> PowerProduct:
        return self.sS ** Fraction(1, 2)


def _pp(r) -> PowerProduct:
    return r if isinstance(r, PowerProduct) else PowerProduct.of(exact(r))


def _in_range(r, lo, hi, what):
    if r < lo or r > hi:
        raise RangeError(f"r = {r} is outside the {what} range [{lo}, {hi}]")


@dataclass(frozen=True)
class NodeBox:
    r: PowerProduct
    family: str
    box: WeightedBox


def q_r_box(params: FamilyParams, r: PowerProduct, sigma: Weights, rho: Weights) -> WeightedBox:
    x = (params.sS / r) ** (-params.alpha)
    widths = tuple(x ** sg for sg in sigma) + tuple(r ** rh for rh in rho)
    return WeightedBox(widths, "Q")


def node(params: FamilyParams, r, sigma: Weights, rho: Weights, family: str = "stem") -> NodeBox:
    """The box Q_r of the stem (r in [s, sqrt(sS)]) or anti-stem (r in [sqrt(sS), S])."""
    r = _pp(r)
    if family == "stem":
        _in_range(r, params.s_pp, params.middle, "stem")
    elif family == "anti-stem":
        _in_range(r, params.middle, params.S, "anti-stem")
    else:
        raise ValueError(f"unknown family {family!r}")
    return NodeBox(r, family, q_r_box(params, r, sigma, rho))


def leaf(params: FamilyParams, r, sigma: Weights, rho: Weights) -> WeightedBox:
    """Q(r, alpha) for r in [s, S]."""
    r = _pp(r)
    _in_range(r, params.s_pp, params.S, "leaf")
    x = r ** (-params.alpha)
    return WeightedBox(tuple(x ** sg for sg in sigma) + tuple(r ** rh for rh in rho), "Q")


def produces(params: FamilyParams, node_r, leaf_r) -> bool:
    node_r, leaf_r = _pp(node_r), _pp(leaf_r)
    return node_r == leaf_r or node_r * leaf_r == params.sS


def producer(params: FamilyParams, leaf_r) -> PowerProduct:
    """The unique stem node producing the leaf."""
    r = _pp(leaf_r)
    return r if r <= params.middle else params.sS / r


def _widths_le(a: WeightedBox, b: WeightedBox, strict: bool = False) -> bool:
    if strict:
        return all(x < y for x, y in zip(a.half_widths, b.half_widths))
    return all(x <= y for x, y in zip(a.half_widths, b.half_widths))


def check_prop4(params: FamilyParams, grid, sigma: Weights, rho: Weights) -> dict:
    """Nesting, leaf-pair and unique-producer checks on a grid of r values, in exact arithmetic."""
    rs = sorted({_pp(r) for r in grid})
    for r in rs:
        _in_range(r, params.s_pp, params.S, "family")
    checks = {}
    root = q_r_box(params, params.s_pp, sigma, rho)
    q = params.s_pp ** (-params.delta)
    root_expected = tuple(q ** sg for sg in sigma) + tuple(params.s_pp ** rh for rh in rho)
    checks["root_equals_q_s_delta"] = root.half_widths == root_expected
    boxes = [q_r_box(params, r, sigma, rho) for r in rs]
    checks["nesting"] = all(_widths_le(a, b, strict=True) for a, b in zip(boxes, boxes[1:]))
    pair_ok = True
    table = []
    for r, box in zip(rs, boxes):
        row = {"r": str(r), "node": [str(w) for w in box.half_widths]}
        if r <= params.middle:
            partner = params.sS / r
            la, lb = leaf(params, r, sigma, rho), leaf(params, partner, sigma, rho)
            anti = q_r_box(params, partner, sigma, rho)
            inter = tuple(min(x, y) for x, y in zip(la.half_widths, lb.half_widths))
            union_ok = _widths_le(la, anti) and _widths_le(lb, anti)
            pair_ok &= inter == box.half_widths and union_ok
            row.update(leaves=[[str(w) for w in la.half_widths], [str(w) for w in lb.half_widths]],
                       anti_node=[str(w) for w in anti.half_widths])
        table.append(row)
    checks["leaf_pairs"] = pair_ok
    unique = True
    for r in rs:
        cands = {c for c in (r, params.sS / r) if params.s_pp <= c <= params.middle}
        unique &= len(cands) == 1 and producer(params, r) in cands and produces(params, producer(params, r), r)
    checks["unique_producer"] = unique
    return {"passed": all(checks.values()), "checks": checks, "table": table}


# -- two-point leaves -----------------------------------------------------------------


@dataclass(frozen=True)
class SigmaPoint:
    """A point with its y-side size h = |y-part|_rho and x-side size e = |x-part|_sigma."""

    point: tuple
    h: Magnitude
    e: Magnitude

    @classmethod
    def make(cls, point, h, e) -> "SigmaPoint":
        return cls(tuple(point), Magnitude.of(h), Magnitude.of(e))

    def leaf_interval(self, alpha) -> tuple[Magnitude, Magnitude]:
        """r-values whose leaf contains the point: [h, e^(-1/alpha)]."""
        return self.h, self.e ** (-1 / Fraction(alpha))

    def node_threshold(self, params: FamilyParams) -> Magnitude:
        """Smallest r with the point in Q_r."""
        return _mmax(self.h, (self.e ** (1 / params.alpha)).scaled(params.sS))

    def in_leaf(self, params: FamilyParams, r) -> bool:
        r = Magnitude.of(r)
        return self.h <= r and self.e <= r ** (-params.alpha)


def leaf_cover(params: FamilyParams, points: list[SigmaPoint]) -> dict:
    """Whether every leaf r in [s, S] contains a point; reports the first gap otherwise."""
    s, S = Magnitude.of(params.s), Magnitude(params.S)
    ivals = sorted((p.leaf_interval(params.alpha) for p in points), key=lambda iv_: _SortKey(iv_[0]))
    cur, reach, i = s, None, 0
    while True:
        while i < len(ivals) and ivals[i][0] <= cur:
            reach = ivals[i][1] if reach is None else _mmax(reach, ivals[i][1])
            i += 1
        if reach is None or reach < cur:
            return {"covered": False, "gap_from": str(cur)}
        if reach >= S:
            return {"covered": True}
        if reach.compare(cur) == 0:
            return {"covered": False, "gap_from": str(cur)}
        cur = reach


class _SortKey:
    def __init__(self, m: Magnitude):
        self.m = m

    def __lt__(self, other):
        return self.m < other.m


@dataclass
class LeafWitness:
    found: bool
    failed: list[str] = field(default_factory=list)
    r0: Magnitude | None = None
    leaf_r: Magnitude | None = None
    node_point: SigmaPoint | None = None
    other_point: SigmaPoint | None = None
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"found": self.found, "failed": list(self.failed)}
        if self.found:
            out.update(
                r0=str(self.r0),
                leaf_r=str(self.leaf_r),
                node_point=[str(x) for x in self.node_point.point],
                other_point=[str(x) for x in self.other_point.point],
            )
        out.update(self.details)
        return out


def find_two_point_leaf(params: FamilyParams, points: list[SigmaPoint]) -> LeafWitness:
    """Check both hypotheses, then produce a leaf holding two points, one in its producing node.

    Points are taken one per +- pair, so "two distinct points" means two
    points that are not negatives of each other.
    """
    if not params.alpha < params.delta:
        raise DomainError("needs alpha < delta")
    failed = []
    cover = leaf_cover(params, points)
    if not cover["covered"]:
        failed.append("every_leaf_nonempty")
    s = Magnitude.of(params.s)
    root_e = Magnitude.of(params.s) ** (-params.delta)
    if any(p.h <= s and p.e <= root_e for p in points):
        failed.append("root_node_empty")
    if failed:
        return LeafWitness(False, failed, details=cover)
    thresholds = [(p.node_threshold(params), k) for k, p in enumerate(points)]
    r0, k0 = thresholds[0]
    for r, k in thresholds[1:]:
        if r < r0:
            r0, k0 = r, k
    v = points[k0]
    middle = Magnitude(params.middle)
    if r0 > middle:
        return LeafWitness(False, ["node_threshold_in_stem"])
    y_binding = v.h >= (v.e ** (1 / params.alpha)).scaled(params.sS)
    r1 = r0 if y_binding else _divide(params.sS, r0)
    others = [p for k, p in enumerate(points) if k != k0 and p.in_leaf(params, r1)]
    if not others:
        return LeafWitness(False, ["two_point_leaf"], r0, r1, v)
    w = others[0]
    return LeafWitness(True, [], r0, r1, v, w, {"binding_side": "y" if y_binding else "x"})


def _divide(num: PowerProduct, m: Magnitude) -> Magnitude:
    """num / m for a positive magnitude."""
    inv = m ** -1
    return inv.scaled(num)


# -- trials on lattices -------------------------------------------------------------


def dual_sigma_points(inst: ProblemInstance, height: PowerProduct, error: PowerProduct,
                      budget: int, limit: int = 200_000) -> list[SigmaPoint]:
    """Nonzero dual points (one per +- pair) with h <= height and e <= error.

    The dual point attached to an integer vector v and the nearest integer
    vector u is (transpose(Theta) v - u, v).
    """
    t_inst = inst.transposed()
    x_limits = [axis_limit(height ** r) for r in inst.rho]
    y_bounds = [error ** sg for sg in inst.sigma]
    hits = box_points(t_inst, x_limits, y_bounds, limit=limit, budget=budget)
    out = []
    for hit in hits:
        h = weighted_norm_exact(hit.x, inst.rho)
        e = ErrorValue(hit.residuals, tuple(1 / sg for sg in inst.sigma))
        out.append(SigmaPoint.make(hit.residuals + tuple(RealConst.rational(v) for v in hit.x), h, e))
    return out


def uniform_parameters(inst: ProblemInstance, t, alpha):
    """(gamma, s, delta, S) for the leaf exponent alpha at scale t."""
    inp = BoundInput.from_weights(inst.sigma, inst.rho)
    gamma = alpha_gamma_map(alpha, inp)
    a, delta = gamma_delta_map(gamma, inp)
    s = PowerProduct.of(exact(t)) ** a
    return gamma, s, delta, s ** (delta / exact(alpha))


def _wedge_intervals(v1, v2, prec):
    with iv_precision(prec):
        a = [x.interval(prec) for x in v1]
        b = [x.interval(prec) for x in v2]
        d = len(a)
        return {(i, j): a[i] * b[j] - a[j] * b[i] for i in range(d) for j in range(i + 1, d)}


def _wedge_exponents(inst: ProblemInstance, gamma):
    m = inst.m
    w = list(inst.sigma) + [-gamma * r for r in inst.rho]
    d = inst.d
    return {(i, j): w[i] + w[j] - 1 + gamma for i in range(d) for j in range(i + 1, d)}, m


def wedge_bound_check(inst: ProblemInstance, t, gamma, v1, v2) -> dict:
    """|V_ij| * t^(w_i + w_j - 1 + gamma) <= 2 for V = v1 ^ v2, w = (sigma, -gamma rho)."""
    t = PowerProduct.of(exact(t))
    exps, _ = _wedge_exponents(inst, gamma)
    prec = START_PRECISION
    while prec <= MAX_PRECISION:
        V = _wedge_intervals(v1, v2, prec)
        verdicts, undecided = {}, False
        with iv_precision(prec):
            for key, e in exps.items():
                val = abs(V[key]) * (t ** e).interval(prec)
                if val.b <= 2:
                    verdicts[key] = True
                elif val.a > 2:
                    verdicts[key] = False
                else:
                    undecided = True
        if not undecided:
            return {"holds": all(verdicts.values()),
                    "violations": [f"{i + 1},{j + 1}" for (i, j), ok in sorted(verdicts.items()) if not ok]}
        prec *= 2
    raise IndeterminateComparison("wedge bound undecided at the maximal precision")


@dataclass
class LemmaOutcome:
    outcome: str
    params: dict
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"outcome": self.outcome, "params": self.params, **self.details}


def _param_dict(t, alpha, gamma, s, delta, S) -> dict:
    return {"t": str(exact(t)), "alpha": str(exact(alpha)), "gamma": str(gamma),
            "s": str(s), "delta": str(delta), "S": str(S)}


def main_lemma_trial(inst: ProblemInstance, t, alpha, budget: int = 10**8) -> LemmaOutcome:
    """Run the two-point-leaf argument on the dual lattice and test the wedge bounds."""
    alpha = exact(alpha)
    if not alpha > 1:
        raise DomainError("needs alpha > 1")
    if not exact(t) > 1:
        raise DomainError("needs t > 1")
    gamma, s, delta, S = uniform_parameters(inst, t, alpha)
    info = _param_dict(t, alpha, gamma, s, delta, S)
    params = FamilyParams(s, delta, alpha)
    points = dual_sigma_points(inst, S, s ** (-alpha), budget)
    witness = find_two_point_leaf(params, points)
    details = {"dual_points": len(points), "witness": witness.as_dict()}
    if not witness.found:
        if witness.failed and witness.failed[0] in ("two_point_leaf", "node_threshold_in_stem"):
            return LemmaOutcome(COUNTEREXAMPLE, info, details)
        return LemmaOutcome(HYPOTHESES_FAIL, info, details)
    v1, v2 = witness.node_point.point, witness.other_point.point
    check = wedge_bound_check(inst, t, gamma, v1, v2)
    details["wedge_bounds"] = check
    return LemmaOutcome(VERIFIED if check["holds"] else COUNTEREXAMPLE, info, details)


def uniform_constant(d: int) -> PowerProduct:
    """(2d(d - 1)) ** (1 / (2(d - 2)))."""
    if d < 3:
        raise DomainError("needs d >= 3")
    return root_constant(2 * d * (d - 1), Fraction(1, 2 * (d - 2)))


def doubling_constant(d: int) -> PowerProduct:
    """2 ** (1 / (d - 2))."""
    if d < 3:
        raise DomainError("needs d >= 3")
    return root_constant(2, Fraction(1, d - 2))


def uniform_implication_trial(inst: ProblemInstance, t, alpha, budget: int = 10**8) -> LemmaOutcome:
    """If every leaf in [s, S] meets the dual lattice, c'' P(t, gamma) must meet the lattice."""
    alpha = exact(alpha)
    if alpha < 1:
        raise DomainError("needs alpha >= 1")
    d = inst.d
    c2 = uniform_constant(d)
    gamma, s, delta, S = uniform_parameters(inst, t, alpha)
    info = _param_dict(t, alpha, gamma, s, delta, S)
    info["constant"] = round(float(c2), 12)
    info["doubling_constant"] = round(float(doubling_constant(d)), 12)
    params = FamilyParams(s, delta, alpha)
    points = dual_sigma_points(inst, S, s ** (-alpha), budget)
    cover = leaf_cover(params, points)
    details = {"dual_points": len(points), "cover": cover}
    if not cover["covered"]:
        return LemmaOutcome(HYPOTHESES_FAIL, info, details)
    tp = PowerProduct.of(exact(t))
    x_limits = [axis_limit(c2 * tp ** sg) for sg in inst.sigma]
    y_bounds = [c2 * tp ** (-gamma * r) for r in inst.rho]
    hits = box_points(inst, x_limits, y_bounds, limit=1_000_000, budget=budget)
    details["primal_points"] = len(hits)
    if hits:
        details["primal_witness"] = {"x": list(hits[0].x), "y": list(hits[0].y)}
        return LemmaOutcome(VERIFIED, info, details)
    return LemmaOutcome(COUNTEREXAMPLE, info, details)


CAMPAIGN_ALPHAS = (Fraction(11, 10), Fraction(6, 5), Fraction(5, 4), Fraction(3, 2), Fraction(2))


def _campaign_alpha(inst: ProblemInstance, rng) -> Fraction | None:
    inp = BoundInput.from_weights(inst.sigma, inst.rho)
    choices = list(CAMPAIGN_ALPHAS)
    rng.shuffle(choices)
    for alpha in choices:
        try:
            gamma_delta_map(alpha_gamma_map(alpha, inp), inp)
        except DomainError:
            continue
        return alpha
    return None


def leaves_campaign(instances, runs: int, seed: int, mode: str = "lemma",
                    t_range: tuple[int, int] = (3, 400), budget: int = 10**8):
    """Yield one seeded lemma or uniform trial per run, cycling through ``instances``.

    Each run draws t uniformly from ``t_range`` and alpha from a fixed list,
    keeping only values for which the parameter maps are defined.
    """
    import random

    trial = {"lemma": main_lemma_trial, "uniform": uniform_implication_trial}[mode]
    instances = [i for i in instances if i.m + i.n >= 3]
    if not instances:
        raise DomainError("needs at least one instance with m + n >= 3")
    for k in range(runs):
        rng = random.Random(seed * 1_000_003 + k)
        inst = instances[k % len(instances)]
        t = rng.randint(*t_range)
        alpha = _campaign_alpha(inst, rng)
        row = {"run": k, "seed": seed, "mode": mode, "instance": inst.name}
        if alpha is None:
            row.update(outcome=HYPOTHESES_FAIL, reason="no admissible alpha")
        else:
            row.update(trial(inst, t, alpha, budget=budget).as_dict())
        yield row
