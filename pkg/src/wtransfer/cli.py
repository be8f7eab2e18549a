"""Command-line driver: estimation, bound evaluation and seeded geometry campaigns.

Exit codes: 0 success, 1 a checked inequality failed, 2 domain error,
3 budget exhausted, 4 unparsable arguments or instance file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import corpus as corpus_mod
from .errors import BudgetExceeded, DomainError, InstanceParseError, RangeError, TooFewRecords
from .exponents import estimate_exponents, record_scan
from .kernels import BACKEND
from .lattice import DEFAULT_BUDGET
from .leaves import (
    FamilyParams,
    check_prop4,
    leaves_campaign,
    main_lemma_trial,
    q_r_box,
    uniform_implication_trial,
)
from .mahler import COUNTEREXAMPLE, mahler_campaign, ortho_campaign
from .powers import PowerProduct
from .scan import START_PRECISION
from .transference import (
    BoundInput,
    chow_ghosh_bound,
    dyson_bound,
    dyson_inverse,
    estimate_conformance,
    exact,
    fmt_value,
    german_bound,
    german_inverse,
    inhom_bounds,
    n1_dyson_interval,
)
from .weights import Weights, load_instance

EXIT_OK, EXIT_VIOLATION, EXIT_DOMAIN, EXIT_BUDGET, EXIT_PARSE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class Report:
    header: dict
    summary: dict = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)
    plot: list[tuple] | None = None
    stream: bool = False
    failed: bool = False


# -- helpers -------------------------------------------------------------------


def _number(text: str):
    """Exact rational from '1e6', '3/2', '0.25' or 'inf'."""
    try:
        value = exact(text)
    except (ValueError, ZeroDivisionError):
        value = None
    if value is None:
        raise UsageError(f"bad number {text!r}")
    return value


def _weights(values) -> Weights:
    try:
        return Weights.parse(values)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from None


def _int_number(text: str) -> int:
    value = _number(text)
    if value == math.inf or value != int(value):
        raise UsageError(f"expected an integer, got {text!r}")
    return int(value)


def _jsonable(v):
    if isinstance(v, (Fraction, PowerProduct)):
        return str(v)
    if isinstance(v, float):
        return "+inf" if v == math.inf else round(v, 12)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _header(args, **params) -> dict:
    return {
        "command": args.command,
        "seed": args.seed,
        "precision": args.precision,
        "budget": args.budget,
        "backend": BACKEND if args.command in ("estimate", "check", "corpus") else None,
        "parameters": {k: _jsonable(v) for k, v in params.items()},
    }


# -- subcommands -------------------------------------------------------------------


def _estimate_pair(args, inst, t_max):
    seq = record_scan(inst, t_max, precision=args.precision, budget=args.budget)
    est = estimate_exponents(seq)
    return seq, est


def cmd_estimate(args) -> Report:
    inst = load_instance(args.instance)
    t_max = _int_number(args.t_max)
    header = _header(args, instance=inst.to_dict(), t_max=t_max, transpose=args.transpose,
                     inhomogeneous=args.inhomogeneous)
    seq = record_scan(inst, t_max, inhomogeneous=args.inhomogeneous, precision=args.precision, budget=args.budget)
    est = estimate_exponents(seq)
    summary = {"estimate": est.as_dict()}
    if args.transpose:
        _, est_t = _estimate_pair(args, inst.transposed(), t_max)
        summary["estimate_transpose"] = est_t.as_dict()
    rows = list(csv.DictReader(io.StringIO(seq.to_csv())))
    plot = [(math.log(r.height_float), g) for r, g in zip(seq.records, seq.gamma_regular())
            if g is not None and g != math.inf and r.height_float > 1]
    return Report(header, summary, rows, plot)


def _bound_input(args) -> BoundInput:
    sigma, rho = _weights(args.sigma), _weights(args.rho)
    omega = None if args.omega is None else _number(args.omega)
    omega_hat = None if args.omega_hat is None else _number(args.omega_hat)
    return BoundInput.from_weights(sigma, rho, omega, omega_hat)


def _try(fn, *a):
    try:
        return fn(*a)
    except DomainError as exc:
        return f"undefined: {exc}"


def _bound_rows(inp: BoundInput) -> list[dict]:
    rows = []

    def add(name, fn, needs):
        if getattr(inp, needs) is None:
            return
        v = _try(fn, inp)
        rows.append({"bound": name, "input": needs, "value": v if isinstance(v, str) else fmt_value(v)})

    add("dyson_bound", dyson_bound, "omega")
    add("chow_ghosh_bound", chow_ghosh_bound, "omega")
    add("dyson_inverse", dyson_inverse, "omega")
    add("german_bound", german_bound, "omega_hat")
    add("german_inverse", german_inverse, "omega_hat")
    if inp.n == 1:
        add("n1_dyson_interval", lambda i: list(n1_dyson_interval(i)), "omega")
    add("inhom_dyson", lambda i: inhom_bounds(i, "dyson"), "omega")
    add("inhom_german", lambda i: inhom_bounds(i, "german"), "omega_hat")
    for k, row in enumerate(rows):
        if isinstance(row["value"], list):
            rows[k]["value"] = [fmt_value(x) for x in row["value"]]
    return rows


def cmd_bounds(args) -> Report:
    inp = _bound_input(args)
    header = _header(args, sigma=args.sigma, rho=args.rho, omega=inp.omega, omega_hat=inp.omega_hat)
    rows = _bound_rows(inp)
    summary = {}
    if inp.omega is not None:
        d, c = dyson_bound(inp), chow_ghosh_bound(inp)
        summary["dyson_minus_chow_ghosh"] = fmt_value(d - c)
    return Report(header, summary, rows)


def cmd_check(args) -> Report:
    inst = load_instance(args.instance)
    t_max = _int_number(args.t_max)
    tol = float(_number(args.tolerance))
    header = _header(args, instance=inst.to_dict(), t_max=t_max, tolerance=tol)
    _, est = _estimate_pair(args, inst, t_max)
    _, est_t = _estimate_pair(args, inst.transposed(), t_max)
    summary = {"estimate": est.as_dict(), "estimate_transpose": est_t.as_dict()}
    if inst.m + inst.n < 3:
        summary["note"] = "transference bounds need m + n >= 3; nothing to check"
        return Report(header, summary, [])
    report = estimate_conformance(inst.sigma, inst.rho, est, est_t, tol)
    rows = [dict(c.as_dict(), verdict="satisfied" if c.satisfied else "violated") for c in report.constraints]
    summary["verdict"] = "satisfied" if report.satisfied else "violated"
    if report.note:
        summary["note"] = report.note
    if args.compare and not est.is_infinite:
        inp = BoundInput.from_weights(inst.sigma, inst.rho, omega=exact(est.omega_low))
        summary["dyson_bound"] = fmt_value(dyson_bound(inp))
        summary["chow_ghosh_bound"] = fmt_value(chow_ghosh_bound(inp))
        summary["gap"] = fmt_value(dyson_bound(inp) - chow_ghosh_bound(inp))
    return Report(header, summary, rows, failed=not report.satisfied)


def _campaign_summary(rows, key="outcome") -> dict:
    counts: dict[str, int] = {}
    for r in rows:
        counts[r[key]] = counts.get(r[key], 0) + 1
    return {"trials": len(rows), "outcomes": dict(sorted(counts.items())),
            "counterexamples": counts.get(COUNTEREXAMPLE, 0)}


def cmd_mahler(args) -> Report:
    dims = args.dim or [3, 4]
    header = _header(args, dims=dims, trials=args.trials, second=args.second, integer=args.integer)
    rows = list(mahler_campaign(dims, args.trials, args.seed, second=args.second,
                                budget=args.budget, integer=args.integer))
    summary = _campaign_summary(rows)
    return Report(header, summary, rows, stream=True, failed=summary["counterexamples"] > 0)


def cmd_ortho(args) -> Report:
    header = _header(args, dim=args.dim, rank=args.rank, trials=args.trials)
    rows = list(ortho_campaign(args.trials, args.seed, args.dim, args.rank))
    failures = sum(not r["equal"] for r in rows)
    summary = {"trials": len(rows), "equalities": len(rows) - failures, "failures": failures}
    return Report(header, summary, rows, stream=True, failed=failures > 0)


def _pp(r) -> PowerProduct:
    return r if isinstance(r, PowerProduct) else PowerProduct.of(r)


def _default_grid(params: FamilyParams) -> list:
    grid = {params.s_pp, params.S, params.middle}
    lo, hi = math.ceil(float(params.s_pp)), math.floor(float(params.S))
    step = max(1, (hi - lo) // 48)
    grid.update(PowerProduct.of(k) for k in range(lo, hi + 1, step))
    return sorted(g for g in grid if params.s_pp <= g <= params.S)


def cmd_leaves(args) -> Report:
    if args.mode == "prop4":
        sigma = _weights(args.sigma or ["1"])
        rho = _weights(args.rho or ["1"])
        params = FamilyParams(_number(args.s), _number(args.delta), _number(args.alpha))
        grid = [_number(r) for r in args.grid] if args.grid else _default_grid(params)
        header = _header(args, s=params.s, delta=params.delta, alpha=params.alpha, S=params.S,
                         sigma=sigma.to_json(), rho=rho.to_json(), mode="prop4")
        res = check_prop4(params, grid, sigma, rho)
        plot = [(float(_pp(r)),) + tuple(float(w) for w in q_r_box(params, _pp(r), sigma, rho).half_widths)
                for r in grid]
        return Report(header, {"passed": res["passed"], "checks": res["checks"]}, res["table"], plot,
                      failed=not res["passed"])
    trial = main_lemma_trial if args.mode == "lemma" else uniform_implication_trial
    if args.instance:
        inst = load_instance(args.instance)
        if args.t is None or args.alpha is None:
            raise UsageError("--t and --alpha are required with --instance")
        t, alpha = _number(args.t), _number(args.alpha)
        header = _header(args, instance=inst.to_dict(), t=t, alpha=alpha, mode=args.mode)
        out = trial(inst, t, alpha, budget=args.budget).as_dict()
        failed = out["outcome"] == COUNTEREXAMPLE
        return Report(header, {"outcome": out["outcome"]}, [out], failed=failed)
    instances = [e.instance for e in corpus_mod.builtin_corpus()]
    header = _header(args, runs=args.trials, mode=args.mode, corpus="builtin")
    rows = list(leaves_campaign(instances, args.trials, args.seed, args.mode, budget=args.budget))
    summary = _campaign_summary(rows)
    return Report(header, summary, rows, stream=True, failed=summary["counterexamples"] > 0)


def cmd_corpus(args) -> Report:
    if args.write:
        paths = corpus_mod.write_corpus(Path(args.write), seed=args.corpus_seed)
        header = _header(args, write=args.write, corpus_seed=args.corpus_seed)
        return Report(header, {"written": len(paths)}, [{"path": p.name} for p in paths])
    entries = corpus_mod.builtin_corpus()
    header = _header(args, run=args.run)
    if not args.run:
        rows = [{"id": e.id, "m": e.instance.m, "n": e.instance.n, "tags": ",".join(e.tags),
                 "expectations": len(e.expected)} for e in entries]
        return Report(header, {"entries": len(rows)}, rows)
    rows, failed = [], False
    for e in entries:
        t_max = _int_number(args.t_max) if args.t_max else e.t_max
        _, est = _estimate_pair(args, e.instance, t_max)
        _, est_t = _estimate_pair(args, e.instance.transposed(), t_max)
        checks = e.check_expected(est, est_t)
        row = {"id": e.id, "t_max": t_max, "estimate": est.as_dict(), "estimate_transpose": est_t.as_dict(),
               "expectations_passed": all(c["passed"] for c in checks)}
        if e.instance.m + e.instance.n >= 3:
            rep = estimate_conformance(e.instance.sigma, e.instance.rho, est, est_t)
            row["conformance"] = rep.satisfied
        failed |= not row["expectations_passed"] or row.get("conformance") is False
        rows.append(row)
    return Report(header, {"entries": len(rows), "all_passed": not failed}, rows, failed=failed)


# -- output ----------------------------------------------------------------------------


def _flatten(row: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in row.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(_jsonable(v))
        else:
            out[key] = _jsonable(v)
    return out


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        if report.stream:
            lines = [json.dumps({"header": report.header})]
            lines += [json.dumps(_jsonable(r)) for r in report.rows]
            lines.append(json.dumps({"summary": _jsonable(report.summary)}))
            return "\n".join(lines) + "\n"
        doc = {"header": report.header, "summary": _jsonable(report.summary), "rows": _jsonable(report.rows)}
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "csv":
        flat = [_flatten(r) for r in report.rows]
        cols: list[str] = []
        for r in flat:
            cols += [c for c in r if c not in cols]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(flat)
        return buf.getvalue()
    if report.plot is None:
        raise UsageError(f"{report.header['command']} has no plot data")
    lines = [f"# {report.header['command']} seed={report.header['seed']} precision={report.header['precision']}"]
    lines += [" ".join(format(v, ".12g") for v in p) for p in report.plot]
    return "\n".join(lines) + "\n"


# -- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--precision", type=int, default=START_PRECISION, help="starting precision in bits")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximal lattice points per scan")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "plotdata"), default="json")

    p = _Parser(prog="wtransfer", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("estimate", parents=[common], help="exponent estimates from record scans")
    s.add_argument("--instance", required=True)
    s.add_argument("--t-max", default="1e6")
    s.add_argument("--transpose", action="store_true")
    s.add_argument("--inhomogeneous", action="store_true")

    s = sub.add_parser("bounds", parents=[common], help="closed-form bounds for given weights and exponents")
    s.add_argument("--sigma", nargs="+", required=True)
    s.add_argument("--rho", nargs="+", required=True)
    s.add_argument("--omega")
    s.add_argument("--omega-hat")

    s = sub.add_parser("check", parents=[common], help="transference conformance of estimates")
    s.add_argument("--instance", required=True)
    s.add_argument("--t-max", default="1e6")
    s.add_argument("--tolerance", default="0.2")
    s.add_argument("--compare", action="store_true", help="also report the gap to the classical weighted bound")

    s = sub.add_parser("mahler", parents=[common], help="seeded Mahler implication campaign")
    s.add_argument("--dim", type=int, action="append")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--second", action="store_true", help="bivector version")
    s.add_argument("--integer", action="store_true", help="integer unimodular lattices only")

    s = sub.add_parser("leaves", parents=[common], help="node and leaf families, lemma trials")
    s.add_argument("--mode", choices=("prop4", "lemma", "uniform"), default="prop4")
    s.add_argument("--s", default="4")
    s.add_argument("--delta", default="3")
    s.add_argument("--alpha")
    s.add_argument("--sigma", nargs="+")
    s.add_argument("--rho", nargs="+")
    s.add_argument("--grid", nargs="+")
    s.add_argument("--instance")
    s.add_argument("--t")
    s.add_argument("--trials", type=int, default=50)

    s = sub.add_parser("ortho", parents=[common], help="orthogonal complement Gram determinants")
    s.add_argument("--dim", type=int)
    s.add_argument("--rank", type=int)
    s.add_argument("--trials", type=int, default=200)

    s = sub.add_parser("corpus", parents=[common], help="list, run or regenerate the instance corpus")
    s.add_argument("--run", action="store_true")
    s.add_argument("--t-max")
    s.add_argument("--write")
    s.add_argument("--corpus-seed", type=int, default=corpus_mod.SEED)
    return p


COMMANDS = {
    "estimate": cmd_estimate,
    "bounds": cmd_bounds,
    "check": cmd_check,
    "mahler": cmd_mahler,
    "leaves": cmd_leaves,
    "ortho": cmd_ortho,
    "corpus": cmd_corpus,
}


def run(argv=None) -> tuple[int, str]:
    """Execute a command line; returns (exit code, rendered output or error message)."""
    try:
        args = build_parser().parse_args(argv)
        if args.command == "leaves" and args.mode == "prop4" and args.alpha is None:
            args.alpha = "2"
        report = COMMANDS[args.command](args)
        text = render(report, args.format)
    except (UsageError, InstanceParseError) as exc:
        return EXIT_PARSE, f"error: {exc}\n"
    except BudgetExceeded as exc:
        return EXIT_BUDGET, f"budget exceeded: {exc}\n"
    except (DomainError, RangeError, TooFewRecords) as exc:
        return EXIT_DOMAIN, f"domain error: {exc}\n"
    if args.out:
        Path(args.out).write_text(text)
        text = ""
    return (EXIT_VIOLATION if report.failed else EXIT_OK), text


def main(argv=None) -> int:
    code, text = run(argv)
    stream = sys.stdout if code in (EXIT_OK, EXIT_VIOLATION) else sys.stderr
    stream.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
