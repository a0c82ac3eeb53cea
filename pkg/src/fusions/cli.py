"""Command-line front end: one scenario, one command, one JSON report."""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .categorize import (Categorization, cheap_information_threshold, coarsen_to_convex_partitional,
                         solve_k_categorization, verify_coarsening, DegenerateObjective, StallDetected)
from .exact import fmt
from .exposure import build_certificate, necessary_convex_independence
from .extremality import INCONCLUSIVE, NOT_DOMINATED, certify_across_resolutions, certify_extreme, discover_partition
from .measure import ConvexPartition, barycenter
from .order import cartier_decompose, check_convex_order
from .persuasion import canonical_decompose, solve_grid_lp
from .power import PowerDiagram, diagram_partition, region_vertices
from .render import svg
from .scenario import ScenarioError, load

COMMANDS = ["check-order", "decompose", "certify-extreme", "certify-exposed", "solve-persuasion",
            "coarsen", "categorize", "threshold", "render"]
OK, ERROR, UNDECIDED = 0, 1, 2


def ser(v):
    """JSON form: exact rationals as strings, floats rounded for stable output."""
    if isinstance(v, Fraction):
        return fmt(v)
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(f"{float(v):.12g}")
    if isinstance(v, np.ndarray):
        return [ser(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): ser(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [ser(x) for x in v]
    return str(v)


def _atoms(m):
    return [{"point": ser(p), "mass": ser(w)} for p, w in zip(m.points, m.masses)]


def _fl(p):
    return [float(c) for c in p]


def _cells_geometry(partition: ConvexPartition, box):
    if box.dim != 2 or partition is None:
        return []
    return [[_fl(v) for v in region_vertices(c, box)] for c in partition.cells]


def _geometry(sc, partition=None, atoms=None, sites=None, flow=None):
    g = {"box": [_fl(sc.box.lower), _fl(sc.box.upper)]}
    if partition is not None:
        g["cells"] = _cells_geometry(partition, sc.box)
    if atoms is not None:
        g["atoms"] = [_fl(p) + [float(w)] for p, w in zip(atoms.points, atoms.masses)]
    if sites is not None:
        g["sites"] = [_fl(s) for s in sites]
    if flow is not None:
        g["flow"] = flow
        g["spacing"] = float(min(sc.prior().spacing))
    return ser(g)


# ---------------------------------------------------------------- commands


def cmd_check_order(sc):
    mu, nu = sc.prior(), sc.fusion()
    v = check_convex_order(mu, nu, sc.mode)
    res = {"dominated": v.dominated, "arithmetic": v.mode}
    if v.kernel is not None:
        k = v.kernel
        res["kernel"] = {"sources": ser(k.sources), "targets": ser(k.targets), "matrix": ser(k.pi)}
    return ("Dominated" if v.dominated else "NotDominated"), res, _geometry(sc, atoms=nu), OK


def cmd_decompose(sc):
    mu, nu = sc.prior(), sc.fusion()
    comps = cartier_decompose(mu, nu, sc.mode)
    res = {"components": [{"atom": ser(p), "mass": ser(c.total_mass), "barycenter": ser(barycenter(c)),
                           "support": len(c.support())} for p, c in zip(nu.points, comps)]}
    disc = discover_partition(mu, nu, sc.mode)
    res["partition_found"] = disc.found
    res["groups"] = ser(disc.groups)
    return "Decomposed", res, _geometry(sc, disc.partition, nu), OK


def cmd_certify_extreme(sc):
    mu, nu = sc.prior(), sc.fusion()
    rep = certify_extreme(mu, nu, sc.partition(), sc.mode)
    res = {"verdict": rep.verdict, "notes": rep.notes,
           "cells": [{"index": c.index, "mu_mass": ser(c.mu_mass), "nu_mass": ser(c.nu_mass),
                      "atoms": ser(c.atoms), "dominated": c.dominated,
                      "affinely_independent": c.affinely_independent} for c in rep.cells]}
    flow = None
    if rep.flow is not None:
        res["flow_optimum"] = ser(rep.flow.optimum)
        res["flow_arithmetic"] = rep.flow.mode
        if not rep.flow.flow.is_zero():
            res["flow"] = ser(rep.flow.flow.flows)
            tot = np.zeros(len(mu))
            for u in rep.flow.flow.flows:
                tot += np.abs(np.array([float(x) for x in u]))
            top = tot.max() or 1.0
            flow = [_fl(mu.points[i]) + [tot[i] / top] for i in range(len(mu)) if tot[i] > 0]
    if rep.pair is not None:
        res["pair"] = [_atoms(rep.pair[0]), _atoms(rep.pair[1])]
    # the same partition on block-coarsened grids; disagreement is flagged, not resolved
    coarse, agree = certify_across_resolutions(mu, nu, rep.partition, sc.mode, factors=(2, 4))
    res["resolutions"] = [{"grid": list(mu.res), "verdict": rep.verdict}] + \
        [{"grid": list(r.resolution), "verdict": r.verdict} for r in coarse]
    res["resolutions_agree"] = agree and all(r.verdict in (rep.verdict, NOT_DOMINATED) for r in coarse)
    if not res["resolutions_agree"]:
        res["notes"] = rep.notes + ["verdicts differ across grid resolutions"]
    code = UNDECIDED if rep.verdict == INCONCLUSIVE else OK
    return rep.verdict, res, _geometry(sc, rep.partition, nu, flow=flow), code


def cmd_certify_exposed(sc):
    mu, nu = sc.prior(), sc.fusion()
    ci = necessary_convex_independence(mu, nu)
    pd = sc.diagram() or ci.diagram
    res = {"convex_independence": ci.holds}
    if pd is None:
        # nothing better to test: the one-cell diagram, whose objective is -dist(., supp nu)
        pd = PowerDiagram([barycenter(nu)], [0], sc.box)
        res["diagram_source"] = "one-cell fallback"
    else:
        res["diagram_source"] = "scenario" if sc.diagram() else "convex-independence search"
    cert = build_certificate(mu, nu, pd, sc.raw.get("full_revelation_cells", ()), sc.mode, sc.seed,
                             int(sc.options.get("probes", 4)), sc.tolerances())
    res.update({"primal": ser(cert.primal), "dual": ser(cert.dual), "eq1": cert.eq1, "unique": cert.unique,
                "valid": cert.valid, "arithmetic": cert.mode, "lp_arithmetic": cert.lp_mode,
                "cell_modes": cert.modes, "probes": cert.probes, "seed": cert.seed, "notes": cert.notes,
                "diagram": {"sites": ser(pd.sites), "weights": ser(pd.weights)}})
    if cert.counterexample is not None:
        res["counterexample"] = _atoms(cert.counterexample)
    if cert.valid:
        verdict, code = "Exposed", OK
    elif not cert.unique and cert.counterexample is not None:
        verdict, code = "NotUnique", OK
    else:
        verdict, code = INCONCLUSIVE, UNDECIDED
    return verdict, res, _geometry(sc, diagram_partition(pd), nu, sites=pd.sites), code


def cmd_solve_persuasion(sc):
    mu, obj = sc.prior(), sc.objective()
    lp = solve_grid_lp(mu, obj, mode=sc.mode, tol=sc.tolerances())
    cs = canonical_decompose(mu, obj, lp, sc.tolerances())
    res = {"value": ser(lp.value), "dual_value": ser(lp.dual_value), "gap": ser(lp.gap),
           "discretization_bound": ser(lp.bound), "arithmetic": lp.mode, "optimizer": _atoms(lp.nu),
           "canonical": cs.canonical, "full_revelation": cs.full_revelation,
           "snapped": _atoms(cs.nu), "payoff": ser(cs.payoff), "formula_payoff": ser(cs.formula_payoff),
           "cells": [{"index": c.index, "mode": c.mode, "mu_mass": ser(c.mu_mass), "barycenter": ser(c.barycenter),
                      "value": ser(c.value), "cav_value": ser(c.cav_value), "dominated": c.dominated}
                     for c in cs.cells],
           "price": ser(lp.price)}
    return ("Canonical" if cs.canonical else "PartiallyCanonical"), res, _geometry(sc, cs.partition, cs.nu), OK


def _categorization(cat: Categorization):
    return {"K": cat.K, "prototypes": _atoms(cat.prototypes), "payoff": ser(cat.payoff),
            "upper_bound": ser(cat.upper_bound), "convex_partitional": cat.convex_partitional,
            "stalled": cat.stalled, "steps": cat.steps, "trace": ser(cat.trace)}


def cmd_coarsen(sc):
    mu, nu = sc.prior(), sc.fusion()
    cat = coarsen_to_convex_partitional(mu, nu, mode=sc.mode)
    res = _categorization(cat)
    up, down, cp = verify_coarsening(mu, nu, cat)
    res.update({"nu_below_lambda": up, "lambda_below_mu": down, "verified_convex_partitional": cp,
                "strict": cat.prototypes != nu})
    if cat.stalled:
        return "Stalled", res, _geometry(sc, cat.partition, cat.prototypes), UNDECIDED
    return "ConvexPartitional", res, _geometry(sc, cat.partition, cat.prototypes), OK


def cmd_categorize(sc):
    mu, obj = sc.prior(), sc.objective()
    K = int(sc.options.get("K", 2))
    cat = solve_k_categorization(mu, obj, K, int(sc.options.get("restarts", 4)), sc.seed)
    return "Categorized", _categorization(cat), _geometry(sc, cat.partition, cat.prototypes), OK


def cmd_threshold(sc):
    mu, obj, cost = sc.prior(), sc.objective(), sc.objective("cost")
    kappa = sc.options.get("kappa")
    r = cheap_information_threshold(mu, obj, cost, kappa if kappa is None else Fraction(str(kappa)))
    res = {"alpha": ser(r.alpha), "beta": ser(r.beta), "kappa_bar": ser(r.kappa_bar), "kappa": ser(r.kappa),
           "verdict": r.verdict}
    geo = _geometry(sc)
    if r.solution is not None:
        res["cells"] = [{"mode": c.mode, "barycenter": ser(c.barycenter), "mu_mass": ser(c.mu_mass)}
                        for c in r.solution.cells]
        geo = _geometry(sc, r.solution.partition, r.solution.nu)
    return r.verdict, res, geo, OK


def cmd_render(sc):
    mu = sc.prior()
    nu = sc.fusion() if "fusion" in sc.raw else None
    part, sites, source = sc.partition(), None, "partition"
    if part is None and nu is not None:
        disc = discover_partition(mu, nu, sc.mode)
        part, source = (disc.partition, "discovered") if disc.found else (None, "none")
    if part is None and sc.diagram() is not None:
        pd = sc.diagram()
        part, sites, source = diagram_partition(pd), pd.sites, "diagram"
    res = {"cells_from": source, "cells": len(part) if part is not None else 0,
           "atoms": 0 if nu is None else len(nu)}
    return "Rendered", res, _geometry(sc, part, nu, sites), OK


HANDLERS = {"check-order": cmd_check_order, "decompose": cmd_decompose, "certify-extreme": cmd_certify_extreme,
            "certify-exposed": cmd_certify_exposed, "solve-persuasion": cmd_solve_persuasion,
            "coarsen": cmd_coarsen, "categorize": cmd_categorize, "threshold": cmd_threshold,
            "render": cmd_render}


def run(command, sc):
    """(report dict, exit code). Everything but 'timing' is deterministic."""
    t0 = time.perf_counter()
    verdict, result, geometry, code = HANDLERS[command](sc)
    report = {"format": "fusions-report", "format_version": 1, "tool_version": __version__,
              "command": command, "input_hash": sc.text_hash, "resolution": list(sc.res),
              "mode": sc.mode, "seed": sc.seed, "verdict": verdict, "result": result, "geometry": geometry,
              "timing": {"seconds": round(time.perf_counter() - t0, 3)}}
    return report, code


def dumps(report):
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


def _grid(s):
    try:
        return tuple(int(v) for v in s.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 40x20, got {s!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="fusions", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("scenario")
    p.add_argument("--grid", type=_grid, help="override the grid, e.g. 40x20")
    p.add_argument("--mode", choices=["auto", "rational", "float"])
    p.add_argument("--seed", type=int)
    p.add_argument("--tol-feas", type=float, dest="tol_feasibility")
    p.add_argument("--tol-duality", type=float)
    p.add_argument("--tol-uniqueness", type=float)
    p.add_argument("--tol-cert", type=float, dest="tol_certificate")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--svg", help="write an SVG figure of the report geometry")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    tols = {"feasibility": args.tol_feasibility, "duality": args.tol_duality,
            "uniqueness": args.tol_uniqueness, "certificate": args.tol_certificate}
    try:
        sc = load(args.scenario, grid=args.grid, mode=args.mode, seed=args.seed, tolerances=tols)
        report, code = run(args.command, sc)
    except (ScenarioError, OSError) as e:
        print(f"fusions: {e}", file=sys.stderr)
        return ERROR
    except (ValueError, RuntimeError, ArithmeticError, DegenerateObjective, StallDetected) as e:
        print(f"fusions: {args.command} failed: {type(e).__name__}: {e}", file=sys.stderr)
        return ERROR
    text = dumps(report)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    if args.svg:
        try:
            with open(args.svg, "w") as f:
                f.write(svg(report["geometry"]))
        except ValueError as e:
            print(f"fusions: {e}", file=sys.stderr)
            return ERROR
    print(f"{args.command}: {report['verdict']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
