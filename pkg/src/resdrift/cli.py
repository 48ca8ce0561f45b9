"""Command-line front end.

Exit codes: 0 ok, 2 invalid input, 3 missing inputs, 4 numeric failure
(including a verification that ran but did not pass).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import checks
from .errors import CapabilityError, ConstructionError, ResdriftError
from .flow import poincare_section
from .io import read_json, write_csv, write_json
from .perturbation import polar_map_T
from .scenario import ScenarioError, load_scenario

EXIT_OK, EXIT_VALIDATION, EXIT_MISSING, EXIT_NUMERIC = 0, 2, 3, 4
COMMANDS = ("construct", "resonances", "simulate", "verify-drift", "verify-gevrey",
            "poincare", "report")
REPORT_INPUTS = {"construct": "construct.json", "resonances": "resonances.json",
                 "drift": "drift.json", "gevrey": "gevrey.json"}


class MissingInput(Exception):
    pass


def _all_pass(doc):
    ok = all(c["pass"] for c in doc.get("checks", {}).values())
    if "toy" in doc:
        ok &= doc["toy"]["check"]["pass"]
    return ok


def _status(doc):
    return EXIT_OK if _all_pass(doc) else EXIT_NUMERIC


def _print_checks(doc):
    for key, c in doc.get("checks", {}).items():
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {key}: {c['value']:.6g} (tol {c['tolerance']:.3g})")


def cmd_construct(scn, out, args):
    doc = checks.construct_report(scn)
    write_json(out / "construct.json", doc)
    print(f"kolmogorov_det = {doc['kolmogorov_det']:.17g}, "
          f"elliptic_admissible = {str(doc['conditions']['elliptic_admissible']).lower()}")
    _print_checks(doc)
    return _status(doc)


def cmd_resonances(scn, out, args):
    doc = checks.resonance_report(scn)
    write_json(out / "resonances.json", doc)
    for c in doc["channels"]:
        print(f"n={c['n']} y={c['y']:.12g} k={tuple(c['k'])} active={c['active']}")
    _print_checks(doc)
    return _status(doc)


def cmd_simulate(scn, out, args):
    n = args.channel or 1
    rows = checks.drift_csv_rows(scn, n, args.epsilon)
    write_csv(out / f"trajectory_n{n}.csv", ["t", "q1", "q2", "p1", "p2", "H", "d_line"], rows)
    print(f"wrote {len(rows)} samples to {out / f'trajectory_n{n}.csv'}")
    return EXIT_OK


def cmd_verify_drift(scn, out, args):
    doc = checks.drift_report(scn, args.channel, args.epsilon)
    write_json(out / "drift.json", doc)
    for r in doc["drift"]:
        print(f"n={r['n']} speed={r['speed_fit']:.12g} predicted={r['speed_predicted']:.12g} "
              f"deviation={r['relative_line_deviation']:.3g} exit={r['escape_time']}")
    _print_checks(doc)
    toy = doc["toy"]["check"]
    print(f"{'PASS' if toy['pass'] else 'FAIL'}  toy: {toy['value']:.6g} (tol {toy['tolerance']:.3g})")
    return _status(doc)


def cmd_verify_gevrey(scn, out, args):
    doc = checks.gevrey_report(scn)
    write_json(out / "gevrey.json", doc)
    _print_checks(doc)
    return _status(doc)


def cmd_poincare(scn, out, args):
    system = scn.system(args.epsilon)
    spec = scn.poincare
    rng = np.random.default_rng(scn.seed)
    seeds = []
    for _ in range(spec.seeds):
        # actions away from the origin, inside the strip and in no particular slab
        R = np.array([rng.uniform(0.1, 0.5) * system.delta, rng.uniform(0.05, 0.2)])
        th = rng.uniform(-np.pi, np.pi, 2)
        seeds.append(np.concatenate([th, R]) if system.chart == "action_angle" else polar_map_T(th, R))
    cloud = poincare_section(system, {"coordinate": spec.coordinate, "value": spec.value,
                                      "u": spec.u, "v": spec.v}, seeds, scn.integrator,
                             spec.crossings, spec.t_max)
    write_csv(out / "poincare.csv", ["u", "v"], [p[1:] for p in cloud["points"]])
    write_json(out / "poincare.json", {"name": scn.name, "section": cloud["section"],
                                      "seeds": [s.tolist() for s in seeds],
                                      "points": len(cloud["points"]), "note": cloud["note"]})
    print(f"{len(cloud['points'])} crossings" + (f" ({cloud['note']})" if cloud["note"] else ""))
    return EXIT_OK


def _collect(out):
    """``{scenario: {source: doc}}`` from ``out`` or from its immediate subdirectories."""
    dirs = [out] if (out / "construct.json").exists() else sorted(p for p in out.glob("*")
                                                                  if p.is_dir())
    found = {}
    for d in dirs:
        docs = {}
        for key, fname in REPORT_INPUTS.items():
            f = d / fname
            if not f.exists():
                raise MissingInput(f"missing {f}")
            docs[key] = read_json(f)
        found[docs["construct"]["name"]] = docs
    if not found:
        raise MissingInput(f"no verification outputs under {out}")
    return found


def cmd_report(scn, out, args):
    rows = checks.criteria_table(_collect(out))
    write_json(out / "report.json", {"criteria": rows})
    for r in rows:
        state = "PASS" if r["pass"] else ("FAIL" if r["applied"] else "N/A ")
        print(f"{state}  criterion {r['criterion']}: {r['label']}")
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_NUMERIC


HANDLERS = {"construct": cmd_construct, "resonances": cmd_resonances, "simulate": cmd_simulate,
            "verify-drift": cmd_verify_drift, "verify-gevrey": cmd_verify_gevrey,
            "poincare": cmd_poincare, "report": cmd_report}


def build_parser():
    p = argparse.ArgumentParser(prog="resdrift", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--scenario", help="scenario JSON file or bundled name")
    p.add_argument("--out", help="output directory (default: the scenario's 'out')")
    p.add_argument("--channel", type=int, help="resonance channel index")
    p.add_argument("--epsilon", type=float, help="override the perturbation strength")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        scn = None
        if args.scenario is not None:
            scn = load_scenario(args.scenario)
            if args.epsilon is not None:
                scn = replace(scn, epsilon=args.epsilon)
        elif args.command != "report":
            print("error: --scenario is required", file=sys.stderr)
            return EXIT_VALIDATION
        out = Path(args.out or (scn.out if scn else "out"))
        if args.command != "report":
            out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](scn, out, args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ScenarioError, ConstructionError, CapabilityError, KeyError) as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ResdriftError, ArithmeticError, RuntimeError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
