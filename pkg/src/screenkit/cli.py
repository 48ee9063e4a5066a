"""Command-line interface.

Four command groups: ``design`` (construct and save experiment plans),
``analyze`` (run analyses on saved designs and responses), ``screen``
(adaptive methods driven by built-in oracles or saved data) and ``bench``
(the comparison study driver). Exit codes: 0 success, 2 usage error,
3 numeric failure. SCREENKIT_SEED provides a default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bench import (
    DEFAULT_COEFF_SEED, MorrisBenchmark, benchmark_function, ee_auto_select,
    run_benchmark, welch_function, welch_function_modified,
)
from .core import Design, ScreeningOutcome, TermSet, build_model_matrix
from .dantzig import gauss_dantzig
from .ee import cotter_contrasts, cotter_sensitivity, ee_indices, elementary_effects
from .errors import ScreenkitError
from .factorial import (
    definitive_screening, full_factorial, ofaat, plackett_burman, regular_fraction, sfrd,
)
from .gp import rdvs, sgpvs
from .groupscreen import Grouping, group_screen, sequential_bifurcation
from .io import (
    outcome_to_dict, read_design, read_response, write_design, write_report,
    write_table_csv,
)
from .spacefill import lhs_optimize, lhs_random, morris_plan, read_morris_plan, write_morris_plan
from .ssd import bayes_d, es2, search_ssd


def _default_seed(value):
    if value is not None:
        return value
    env = os.environ.get("SCREENKIT_SEED")
    return int(env) if env else None


def _parse_words(spec: str) -> list[tuple[int, ...]]:
    words = []
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "," in chunk or " " in chunk:
            parts = [p for p in chunk.replace(",", " ").split() if p]
            words.append(tuple(int(p) for p in parts))
        else:
            words.append(tuple(int(ch) for ch in chunk))
    if not words:
        raise ValueError("empty --words specification")
    return words


def _builtin_oracle(name: str, coeff_seed: int):
    registry = {
        "welch": lambda: welch_function,
        "welch-modified": lambda: welch_function_modified,
        "morris": lambda: MorrisBenchmark(coeff_seed),
        "morris-modified": lambda: MorrisBenchmark(coeff_seed, variant="cancel"),
    }
    if not name.startswith("builtin:"):
        raise ValueError("only 'builtin:<name>' oracles are supported from the CLI")
    key = name.split(":", 1)[1]
    if key not in registry:
        raise ValueError(f"unknown oracle {key!r}; available: {sorted(registry)}")
    return registry[key]()


def _print_outcome(outcome: ScreeningOutcome, method: str) -> None:
    print(json.dumps(outcome_to_dict(outcome, method), indent=2))


def _cmd_design_factorial(args) -> int:
    seed = _default_seed(args.seed)
    report = None
    if args.kind == "full":
        design = full_factorial(args.d)
    elif args.kind == "regular":
        if not args.words:
            raise ValueError("--kind regular requires --words")
        design, report = regular_fraction(args.d, _parse_words(args.words))
    elif args.kind == "pb":
        design = plackett_burman(args.n or (args.d + 1 if args.d else 12))
    elif args.kind == "dsd":
        design = definitive_screening(args.d, seed=seed)
    elif args.kind == "sfrd":
        design = sfrd(args.d)
    else:
        design = ofaat(args.d)
    write_design(design, args.output)
    print(f"wrote {design.n} x {design.d} design to {args.output} ({design.provenance})")
    if report is not None:
        alias_path = Path(args.output).with_suffix(".alias.json")
        alias_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        print(f"wrote alias report to {alias_path} (resolution {report.resolution})")
    return 0


def _cmd_design_ssd(args) -> int:
    seed = _default_seed(args.seed)
    design = search_ssd(args.n, args.d, criterion=args.criterion, tau2=args.tau2, seed=seed)
    write_design(design, args.output)
    if args.criterion == "es2":
        val = es2(design)
        bound = "unavailable" if val.lower_bound is None else f"{val.lower_bound:.6g}"
        print(f"criterion value {val.value:.6g} (lower bound {bound}), "
              f"{val.orthogonal_pairs} orthogonal pairs, max |s_ij| = {val.max_abs_inner:.0f}")
    else:
        val = bayes_d(design, args.tau2)
        print(f"criterion value {val.value:.6g} (tau2 = {args.tau2}), "
              f"{val.orthogonal_pairs} orthogonal pairs")
    print(f"wrote {design.n} x {design.d} design to {args.output}")
    return 0


def _cmd_design_lhs(args) -> int:
    seed = _default_seed(args.seed)
    if args.optimize:
        design = lhs_optimize(args.n, args.d, objective=args.optimize, q=args.q, seed=seed)
    else:
        design = lhs_random(args.n, args.d, seed=seed)
    write_design(design, args.output)
    print(f"wrote {design.n} x {design.d} design to {args.output} ({design.provenance})")
    return 0


def _cmd_design_morris(args) -> int:
    seed = _default_seed(args.seed)
    plan = morris_plan(args.d, args.r, f=args.f, delta=args.delta, seed=seed)
    meta = Path(args.output).with_suffix(".json")
    write_morris_plan(plan, args.output, meta)
    print(f"wrote {plan.design.n}-run trajectory plan to {args.output} "
          f"(r={plan.r}, delta={plan.delta:.6g}, f={plan.f}; metadata in {meta})")
    return 0


def _cmd_analyze_ee(args) -> int:
    plan = read_morris_plan(args.plan, args.meta)
    y = read_response(args.y)
    indices = ee_indices(elementary_effects(plan, y))
    selected = ee_auto_select(indices, args.gamma)
    outcome = ScreeningOutcome.build(
        selected,
        {"mu": tuple(indices.mu), "sigma": tuple(indices.sigma),
         "mu_star": tuple(indices.mu_star)},
        method="ee")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_report(outcome, out / "ee_report.json", extra={"gamma": args.gamma})
        write_table_csv(out / "ee_scatter.csv", ["mu_star", "sigma"],
                        np.column_stack([indices.mu_star, indices.sigma]))
    _print_outcome(outcome, "ee")
    return 0


def _cmd_analyze_cotter(args) -> int:
    y = read_response(args.y)
    contr = cotter_contrasts(y, args.d)
    outcome = cotter_sensitivity(contr, args.threshold)
    _print_outcome(outcome, "sfrd-cotter")
    return 0


def _cmd_analyze_dantzig(args) -> int:
    design = read_design(args.design)
    y = read_response(args.y)
    terms = (TermSet.main_effects(design.d) if args.terms == "main"
             else TermSet.full_quadratic(design.d))
    H = build_model_matrix(design, terms)
    res = gauss_dantzig(H, y, threshold=args.t)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        head = ["s"] + list(H.labels)
        write_table_csv(out / "shrinkage_path.csv", head,
                        np.column_stack([res.path.s_grid, res.path.coefficients]))
        write_report(res.outcome, out / "dantzig_report.json",
                     extra={"chosen_s": res.chosen_s, "threshold": args.t})
    _print_outcome(res.outcome, "gauss-dantzig")
    print(f"chosen s = {res.chosen_s:.6g}")
    return 0


def _cmd_screen_group(args) -> int:
    oracle = _builtin_oracle(args.oracle, args.coeff_seed)
    grouping = Grouping.balanced(args.d, args.groups)
    run = group_screen(oracle, grouping, stage1=args.mode, delta=args.delta,
                       seed=_default_seed(args.seed))
    doc = outcome_to_dict(run.outcome, f"group-{args.mode}")
    doc.update({
        "carried_groups": list(run.carried_groups),
        "carried_variables": list(run.carried_variables),
        "n1": run.n1, "n2": run.n2, "total_runs": run.total_runs,
        "stage1_effects": run.stage1_effects,
    })
    print(json.dumps(doc, indent=2))
    return 0


def _cmd_screen_sb(args) -> int:
    oracle = _builtin_oracle(args.oracle, args.coeff_seed)
    res = sequential_bifurcation(oracle, args.d, delta=args.delta,
                                 foldover=args.foldover, replicates=args.replicates)
    doc = outcome_to_dict(res.outcome, "sequential-bifurcation")
    doc["runs"] = res.runs
    doc["trace"] = list(res.trace)
    print(json.dumps(doc, indent=2))
    return 0


def _cmd_screen_sgpvs(args) -> int:
    design = read_design(args.design)
    y = read_response(args.y)
    res = sgpvs(design, y, c=args.c, alpha=args.alpha, seed=_default_seed(args.seed))
    doc = outcome_to_dict(res.outcome, "sgpvs")
    doc["released"] = list(res.released)
    doc["loglik_path"] = list(res.loglik_path)
    print(json.dumps(doc, indent=2))
    return 0


def _cmd_screen_rdvs(args) -> int:
    design = read_design(args.design)
    y = read_response(args.y)
    res = rdvs(design, y, b=args.b, percentile=args.pct, iters=args.iters,
               burn=args.burn, seed=_default_seed(args.seed))
    doc = outcome_to_dict(res.outcome, "rdvs")
    doc["threshold"] = res.reference.threshold
    doc["acceptance_rate"] = res.acceptance_rate
    doc["warnings"] = list(res.warnings)
    print(json.dumps(doc, indent=2))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_table_csv(out / "rdvs_reference.csv", ["median_theta"],
                        res.reference.medians[:, None])
        write_table_csv(out / "rdvs_medians.csv", ["median_theta"],
                        res.real_medians[:, None])
    return 0


def _cmd_bench(args) -> int:
    seed = _default_seed(args.seed) or 0
    report = run_benchmark(
        args.method, args.example, args.n, seed=seed, coeff_seed=args.coeff_seed,
        out_dir=args.out, threshold=args.threshold, dsd_analysis=args.dsd_analysis,
        rdvs_b=args.rdvs_b, rdvs_iters=args.rdvs_iters, rdvs_burn=args.rdvs_burn,
        gp_alpha=args.gp_alpha)
    doc = outcome_to_dict(report.outcome, report.method)
    doc.update({"example": report.example, "n": report.n, "seed": report.seed,
                "oracle_calls": report.oracle_calls})
    print(json.dumps(doc, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="screenkit",
                                description="screening experiment toolkit")
    top = p.add_subparsers(dest="group", required=True)

    pd = top.add_parser("design", help="construct experiment plans")
    sd = pd.add_subparsers(dest="cmd", required=True)

    f = sd.add_parser("factorial", help="factorial-family designs")
    f.add_argument("--kind", required=True,
                   choices=["full", "regular", "pb", "dsd", "sfrd", "ofaat"])
    f.add_argument("--d", type=int, default=0)
    f.add_argument("--words", help="defining words, e.g. '1234;235' or '1,2,10;3,11'")
    f.add_argument("--n", type=int, help="run count (pb)")
    f.add_argument("--seed", type=int)
    f.add_argument("-o", "--output", required=True)
    f.set_defaults(fn=_cmd_design_factorial)

    s = sd.add_parser("ssd", help="supersaturated design search")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--criterion", choices=["es2", "bayesd"], default="es2")
    s.add_argument("--tau2", type=float, default=5.0)
    s.add_argument("--seed", type=int)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(fn=_cmd_design_ssd)

    l = sd.add_parser("lhs", help="Latin hypercube samples")
    l.add_argument("--n", type=int, required=True)
    l.add_argument("--d", type=int, required=True)
    l.add_argument("--optimize", choices=["phi_q", "maxpro"])
    l.add_argument("--q", type=float, default=15.0)
    l.add_argument("--seed", type=int)
    l.add_argument("-o", "--output", required=True)
    l.set_defaults(fn=_cmd_design_lhs)

    m = sd.add_parser("morris", help="trajectory plans")
    m.add_argument("--d", type=int, required=True)
    m.add_argument("--r", type=int, required=True)
    m.add_argument("--f", type=int, default=4)
    m.add_argument("--delta", type=float)
    m.add_argument("--seed", type=int)
    m.add_argument("-o", "--output", required=True)
    m.set_defaults(fn=_cmd_design_morris)

    pa = top.add_parser("analyze", help="analyses on saved data")
    sa = pa.add_subparsers(dest="cmd", required=True)

    e = sa.add_parser("ee", help="elementary effects from a trajectory plan")
    e.add_argument("--plan", required=True)
    e.add_argument("--meta", required=True)
    e.add_argument("--y", required=True)
    e.add_argument("--gamma", type=float, default=0.25)
    e.add_argument("--out")
    e.set_defaults(fn=_cmd_analyze_ee)

    c = sa.add_parser("cotter", help="odd/even contrast sensitivity indices")
    c.add_argument("--y", required=True)
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--threshold", type=float, default=0.01)
    c.set_defaults(fn=_cmd_analyze_cotter)

    dz = sa.add_parser("dantzig", help="L1 selector path plus refit")
    dz.add_argument("--design", required=True)
    dz.add_argument("--y", required=True)
    dz.add_argument("--terms", choices=["main", "main+2fi+quad"], default="main")
    dz.add_argument("--t", type=float, default=0.0)
    dz.add_argument("--out")
    dz.set_defaults(fn=_cmd_analyze_dantzig)

    ps = top.add_parser("screen", help="adaptive screening drivers")
    ss = ps.add_subparsers(dest="cmd", required=True)

    gg = ss.add_parser("group", help="two-stage group screening")
    gg.add_argument("--oracle", required=True, help="builtin:<welch|morris|...>")
    gg.add_argument("--d", type=int, required=True)
    gg.add_argument("--groups", type=int, required=True)
    gg.add_argument("--mode", choices=["classical", "interaction"], default="classical")
    gg.add_argument("--delta", type=float, default=1.0)
    gg.add_argument("--coeff-seed", type=int, default=DEFAULT_COEFF_SEED)
    gg.add_argument("--seed", type=int)
    gg.set_defaults(fn=_cmd_screen_group)

    sb = ss.add_parser("sb", help="sequential bifurcation")
    sb.add_argument("--oracle", required=True)
    sb.add_argument("--d", type=int, default=20)
    sb.add_argument("--delta", type=float, default=1.0)
    sb.add_argument("--foldover", action="store_true")
    sb.add_argument("--replicates", type=int, default=1)
    sb.add_argument("--coeff-seed", type=int, default=DEFAULT_COEFF_SEED)
    sb.set_defaults(fn=_cmd_screen_sb)

    sg = ss.add_parser("sgpvs", help="stepwise GP variable selection")
    sg.add_argument("--design", required=True)
    sg.add_argument("--y", required=True)
    sg.add_argument("--c", type=float, default=6.0)
    sg.add_argument("--alpha", type=float, default=2.0)
    sg.add_argument("--seed", type=int)
    sg.set_defaults(fn=_cmd_screen_sgpvs)

    rv = ss.add_parser("rdvs", help="reference-distribution GP selection")
    rv.add_argument("--design", required=True)
    rv.add_argument("--y", required=True)
    rv.add_argument("--b", type=int, default=100)
    rv.add_argument("--pct", type=float, default=0.9)
    rv.add_argument("--iters", type=int, default=2000)
    rv.add_argument("--burn", type=int, default=500)
    rv.add_argument("--seed", type=int)
    rv.add_argument("--out")
    rv.set_defaults(fn=_cmd_screen_rdvs)

    pb = top.add_parser("bench", help="benchmark comparison driver")
    pb.add_argument("--method", required=True,
                    choices=["sgpvs", "rdvs", "ee", "sfrd", "ssd", "dsd"])
    pb.add_argument("--example", required=True, choices=["1", "2"])
    pb.add_argument("--n", type=int, required=True)
    pb.add_argument("--seed", type=int)
    pb.add_argument("--coeff-seed", type=int, default=DEFAULT_COEFF_SEED)
    pb.add_argument("--threshold", type=float, default=0.01)
    pb.add_argument("--dsd-analysis", choices=["dantzig", "mains"], default="dantzig")
    pb.add_argument("--rdvs-b", type=int, default=100)
    pb.add_argument("--rdvs-iters", type=int, default=2000)
    pb.add_argument("--rdvs-burn", type=int, default=500)
    pb.add_argument("--gp-alpha", type=float, default=2.0)
    pb.add_argument("--out")
    pb.set_defaults(fn=_cmd_bench)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, IndexError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScreenkitError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
