"""Curated and seeded problem instances with known or derivable exponent behaviour."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import DomainError, InstanceParseError
from .weights import ProblemInstance, Weights

PROVENANCES = ("analytic", "derived-by-oracle", "none")
QUANTITIES = ("omega", "omega_hat", "omega_T", "omega_hat_T")
DEFAULT_T_MAX = 10**6
SEED = 2024


@dataclass(frozen=True)
class Expectation:
    """``quantity`` is approximately ``value`` (relation "approx") or at most it ("at_most")."""

    quantity: str
    relation: str
    value: float
    tolerance: float
    provenance: str

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ValueError(f"unknown quantity {self.quantity!r}")
        if self.relation not in ("approx", "at_most"):
            raise ValueError(f"unknown relation {self.relation!r}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def check(self, low: float, high: float) -> bool:
        """Compare against an estimate window [low, high]."""
        if self.value == math.inf:
            return high == math.inf
        if self.relation == "at_most":
            return high <= self.value + self.tolerance
        return low - self.tolerance <= self.value <= high + self.tolerance

    def to_json(self) -> dict:
        return {
            "quantity": self.quantity,
            "relation": self.relation,
            "value": "+inf" if self.value == math.inf else _num(self.value),
            "tolerance": _num(self.tolerance),
            "provenance": self.provenance,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Expectation":
        value = math.inf if data["value"] == "+inf" else float(Fraction(data["value"]))
        return cls(data["quantity"], data["relation"], value, float(Fraction(data["tolerance"])), data["provenance"])


def _num(x: float) -> str:
    return str(Fraction(x).limit_denominator(10**6)) if x != int(x) else str(int(x))


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    instance: ProblemInstance
    expected: tuple[Expectation, ...] = ()
    notes: str = ""
    t_max: int = DEFAULT_T_MAX
    tags: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "instance": self.instance.to_dict(),
            "expected": [e.to_json() for e in self.expected],
            "notes": self.notes,
            "t_max": self.t_max,
            "tags": list(self.tags),
        }

    @classmethod
    def from_json(cls, data: dict) -> "CorpusEntry":
        try:
            inst = ProblemInstance.from_dict(data["instance"], name=data["id"])
            expected = tuple(Expectation.from_json(e) for e in data.get("expected", []))
        except (KeyError, ValueError) as exc:
            raise InstanceParseError(f"bad corpus entry: {exc}") from None
        return cls(data["id"], inst, expected, data.get("notes", ""), int(data.get("t_max", DEFAULT_T_MAX)),
                   tuple(data.get("tags", [])))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def check_expected(self, est, est_t=None) -> list[dict]:
        """One verdict per expectation against ExponentEstimate windows."""
        out = []
        for e in self.expected:
            src = est_t if e.quantity.endswith("_T") else est
            if src is None:
                continue
            hat = e.quantity.startswith("omega_hat")
            low, high = (src.omega_hat_low, src.omega_hat_high) if hat else (src.omega_low, src.omega_high)
            out.append({**e.to_json(), "low": low, "high": high, "passed": e.check(low, high)})
        return out


def _inst(sigma, rho, theta, name) -> ProblemInstance:
    return ProblemInstance(Weights.parse(sigma), Weights.parse(rho), tuple(tuple(r) for r in theta), None, name)


def _inf(q: str) -> Expectation:
    return Expectation(q, "approx", math.inf, 0.0, "analytic")


def liouville_instance(base: int, ratio, shape: str = "scalar") -> ProblemInstance:
    """Liouville-type entry sum base^-a_k with a_1 = 1, a_(k+1) = ceil(ratio a_k).

    ``shape`` is "scalar", "row" (paired with sqrt 2, weights 1/2, 1/2) or
    "column" (the same pair stacked).
    """
    ratio = Fraction(ratio)
    if base < 2 or ratio <= 1:
        raise DomainError("needs base >= 2 and ratio > 1")
    token = f"liouville:{base}:{ratio}"
    name = f"liouville_{base}_{ratio}".replace("/", "_")
    half = ["1/2", "1/2"]
    if shape == "scalar":
        return _inst(["1"], ["1"], [[token]], name)
    if shape == "row":
        return _inst(half, ["1"], [[token, "sqrt:2"]], name + "_row")
    if shape == "column":
        return _inst(["1"], half, [[token], ["sqrt:2"]], name + "_column")
    raise ValueError(f"unknown shape {shape!r}")


def _random_decimal(rng: random.Random, digits: int = 12) -> str:
    return "dec:0." + "".join(str(rng.randrange(10)) for _ in range(digits - 1)) + str(rng.randrange(1, 10))


_DEC_WEIGHTS = (["1/2", "1/2"], ["7/10", "3/10"], ["3/5", "2/5"])


def seeded_decimal_entries(seed: int = SEED, count: int = 4) -> list[CorpusEntry]:
    """Pseudo-random decimal rows and columns; rational, but with denominators far beyond t_max."""
    rng = random.Random(seed)
    out = []
    for k in range(count):
        w = list(_DEC_WEIGHTS[rng.randrange(len(_DEC_WEIGHTS))])
        a, b = _random_decimal(rng), _random_decimal(rng)
        if k % 2 == 0:
            inst = _inst(w, ["1"], [[a, b]], f"dec_{seed}_{k}")
        else:
            inst = _inst(["1"], w, [[a], [b]], f"dec_{seed}_{k}")
        out.append(CorpusEntry(inst.name, inst, (), "seeded decimal entries; no analytic values", tags=("seeded",)))
    return out


def curated_entries() -> list[CorpusEntry]:
    all_inf = tuple(_inf(q) for q in QUANTITIES)
    half, skew = ["1/2", "1/2"], ["7/10", "3/10"]
    out = [
        CorpusEntry("rational_scalar", _inst(["1"], ["1"], [["3/7"]], "rational_scalar"), all_inf,
                    "rational entry: every exponent is infinite", tags=("rational",)),
        CorpusEntry("rational_row", _inst(half, ["1"], [["1/2", "1/3"]], "rational_row"), all_inf,
                    "rational row", tags=("rational",)),
        CorpusEntry("rational_column", _inst(["1"], skew, [["2/5"], ["1/3"]], "rational_column"), all_inf,
                    "rational column", tags=("rational",)),
        CorpusEntry("rational_square", _inst(half, half, [["1/2", "1/3"], ["1/5", "1/7"]], "rational_square"),
                    all_inf, "rational 2x2 matrix", tags=("rational",)),
        CorpusEntry("golden", _inst(["1"], ["1"], [["golden"]], "golden"),
                    tuple(Expectation(q, "approx", 1.0, 0.2, "analytic") for q in QUANTITIES),
                    "badly approximable scalar: both exponents equal 1", tags=("scalar",)),
        CorpusEntry("sqrt23_uniform", _inst(half, ["1"], [["sqrt:2", "sqrt:3"]], "sqrt23_uniform"), (),
                    "no analytic values; used for transference conformance", tags=("row",)),
        CorpusEntry("sqrt23_weighted", _inst(skew, ["1"], [["sqrt:2", "sqrt:3"]], "sqrt23_weighted"), (),
                    "no analytic values; used for transference conformance", tags=("row",)),
    ]
    for ratio in (2, 3):
        inst = liouville_instance(10, ratio)
        exp = tuple(Expectation(q, "approx", float(ratio - 1), 0.3, "analytic") for q in ("omega", "omega_T"))
        out.append(CorpusEntry(inst.name, inst, exp, f"Liouville-type scalar; omega = {ratio - 1}",
                               tags=("scalar", "liouville")))
    for shape in ("row", "column"):
        inst = liouville_instance(10, 3, shape)
        out.append(CorpusEntry(inst.name, inst, (), "Liouville-type entry paired with sqrt 2",
                               tags=(shape, "liouville")))
    cols = (("column_sqrt2_half", [["sqrt:2"], ["1/2"]], Fraction(4, 3)),
            ("column_half_sqrt2", [["1/2"], ["sqrt:2"]], Fraction(4)))
    for name, theta, cap in cols:
        inst = _inst(["1"], ["3/4", "1/4"], theta, name)
        out.append(CorpusEntry(name, inst, (Expectation("omega_hat", "at_most", float(cap), 0.1, "analytic"),),
                               f"single column; uniform exponent at most {cap}", tags=("column", "cap")))
    return out


def generate_entries(seed: int = SEED) -> list[CorpusEntry]:
    return curated_entries() + seeded_decimal_entries(seed)


def corpus_dir() -> Path:
    return Path(str(resources.files("wtransfer") / "data" / "corpus"))


def write_corpus(directory: Path | None = None, seed: int = SEED) -> list[Path]:
    directory = Path(directory or corpus_dir())
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for entry in generate_entries(seed):
        path = directory / f"{entry.id}.json"
        path.write_text(entry.dumps())
        paths.append(path)
    return paths


def load_corpus(directory: Path | None = None) -> list[CorpusEntry]:
    directory = Path(directory or corpus_dir())
    return [CorpusEntry.from_json(json.loads(p.read_text())) for p in sorted(directory.glob("*.json"))]


def builtin_corpus() -> list[CorpusEntry]:
    """The shipped corpus files, in id order."""
    return load_corpus()
