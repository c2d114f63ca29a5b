"""Command-line interface: spec loading, check orchestration, reports.

Reports are JSON on stdout.  Exit codes: 0 pass, 1 fail, 2 inconclusive,
3 usage or spec error.  Rationals serialize as "p/q" strings, never
floats.  The report body is byte-stable for identical inputs; wall-clock
timings live in a separate top-level field excluded from the stable body
(and from its hash).
"""

import argparse
import hashlib
import json
import os
import sys

from qva import __version__
from qva import verify
from qva.algspec import SpecParseError, induced_smap, parse_spec, validate
from qva.states import Model, State

EXIT = {"pass": 0, "fail": 1, "inconclusive": 2}


def _default_window():
    raw = os.environ.get("QVA_DEFAULT_WINDOW")
    if raw:
        try:
            w = int(raw)
            if w > 0:
                return w
        except ValueError:
            pass
    return 4


def load_spec(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_spec(text), text


def _aggregate(reports):
    agg = "pass"
    for rep in reports:
        if rep.status == "fail":
            return "fail"
        if rep.status == "inconclusive":
            agg = "inconclusive"
    return agg


def make_document(command, spec_text, reports):
    body = {
        "tool": "qva",
        "version": __version__,
        "spec_sha256": hashlib.sha256(spec_text.encode("utf-8")).hexdigest(),
        "command": command,
        "reports": [rep.as_dict() for rep in reports],
        "aggregate": _aggregate(reports),
    }
    timings = {f"{rep.name}[{i}]": round(rep.timing, 6)
               for i, rep in enumerate(reports)}
    return {"body": body, "timings": timings}


def emit(document, out_path=None):
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _validate_report(spec):
    diags = validate(spec)
    if diags:
        return verify.CheckReport("validate", {}, "fail", diags)
    return verify.CheckReport("validate", {}, "pass", [])


def _pairs(model):
    for a in model.gens:
        for b in model.gens:
            yield a, b


def cmd_validate(spec, args):
    return [_validate_report(spec)]


def cmd_check_relations(spec, args):
    return [verify.check_structure_relations(spec, level=args.level,
                                             window=args.window)]


def cmd_find_slocality(spec, args):
    model = Model(spec)
    reports = []
    pairs = [(args.pair.split(",")[0], args.pair.split(",")[1])] if args.pair \
        else list(_pairs(model))
    for a, b in pairs:
        _, _, rep = verify.find_slocality(spec, a, b, k_max=args.kmax,
                                          f_degree_bound=args.fdeg,
                                          level=args.level,
                                          window=min(args.window, 3))
        reports.append(rep)
    return reports


def cmd_check_jacobi(spec, args):
    model = Model(spec)
    reports = []
    probes = verify.probe_states(model, args.level)
    for a, b in _pairs(model):
        for w in probes:
            reports.append(verify.check_s_jacobi(spec, a, b, w,
                                                 window=args.window))
    return reports


def cmd_check_assoc(spec, args):
    model = Model(spec)
    reports = []
    gens = [model.apply_mode(g, -1, State.vacuum())
            for g in range(len(model.gens))]
    probes = verify.probe_states(model, args.level)
    for u in gens:
        for v in gens:
            for w in probes:
                reports.append(verify.check_weak_assoc(spec, u, v, w,
                                                       l_max=args.lmax,
                                                       window=min(args.window, 3)))
    return reports


def cmd_check_qyb(spec, args):
    smap = induced_smap(spec)
    return [verify.check_qyb(smap, order=args.order)]


def cmd_check_unitarity(spec, args):
    smap = induced_smap(spec)
    return [verify.check_unitarity(smap, order=args.order)]


def cmd_extract_s(spec, args):
    _, reports = verify.extract_qyb_operator(spec, k_max=args.kmax,
                                             f_degree_bound=args.fdeg,
                                             level=args.level,
                                             window=min(args.window, 3),
                                             order=args.order)
    return reports


def cmd_probe_z(spec, args):
    return [verify.probe_z(spec, n=args.n, level=args.level,
                           coeff_range=args.coeff_range, d_max=args.dmax,
                           window=args.window)]


def cmd_ker_d(spec, args):
    return [verify.ker_d_probe(spec, level=args.level)]


def cmd_gr_dims(spec, args):
    return [verify.gr_dims_report(spec, max_level=args.level)]


def cmd_check_filtration(spec, args):
    return [verify.check_filtration(spec, max_level=args.level)]


def cmd_run_suite(spec, args):
    reports = [_validate_report(spec)]
    if reports[0].status == "fail":
        return reports
    reports.append(verify.check_structure_relations(spec, level=min(args.level, 2),
                                                    window=args.window))
    reports.append(verify.check_filtration(spec, max_level=4))
    model_families = ("affine", "half-current", "heisenberg", "zf-rmatrix",
                      "semidirect")
    if spec.family in model_families:
        model = Model(spec)
        smap, srep = verify.extract_qyb_operator(
            spec, k_max=args.kmax, f_degree_bound=args.fdeg,
            level=min(args.level, 2), window=min(args.window, 3),
            order=args.order)
        reports.extend(srep)
        probes = verify.probe_states(model, 1)
        for a, b in _pairs(model):
            for w in probes:
                reports.append(verify.check_s_jacobi(spec, a, b, w,
                                                     window=min(args.window, 3)))
        gens = [model.apply_mode(g, -1, State.vacuum())
                for g in range(len(model.gens))]
        for u in gens:
            for v in gens:
                reports.append(verify.check_weak_assoc(spec, u, v,
                                                       State.vacuum(),
                                                       l_max=args.lmax,
                                                       window=min(args.window, 3)))
        reports.append(verify.gr_dims_report(spec, max_level=3))
    else:
        reports.append(verify.check_weak_assoc_derivation(spec, l_max=args.lmax))
    reports.append(verify.ker_d_probe(spec, level=args.level))
    reports.append(verify.probe_z(spec, n=args.n, level=min(args.level, 1),
                                  coeff_range=min(args.coeff_range, 2),
                                  d_max=args.dmax, window=args.window))
    return reports


COMMANDS = {
    "validate": cmd_validate,
    "check-relations": cmd_check_relations,
    "find-slocality": cmd_find_slocality,
    "check-jacobi": cmd_check_jacobi,
    "check-assoc": cmd_check_assoc,
    "check-qyb": cmd_check_qyb,
    "check-unitarity": cmd_check_unitarity,
    "extract-s": cmd_extract_s,
    "probe-z": cmd_probe_z,
    "ker-d": cmd_ker_d,
    "gr-dims": cmd_gr_dims,
    "check-filtration": cmd_check_filtration,
    "run-suite": cmd_run_suite,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qva",
        description="Exact verification of quantum vertex algebra identities. "
                    "Every 'pass' is relative to the window/level/order "
                    "parameters echoed in the report.")
    parser.add_argument("verb", choices=sorted(COMMANDS))
    parser.add_argument("spec", help="algebra spec file")
    w = _default_window()
    parser.add_argument("--window", type=int, default=w,
                        help=f"comparison window half-width (default {w}; "
                             "env QVA_DEFAULT_WINDOW)")
    parser.add_argument("--level", type=int, default=2,
                        help="probe state / basis level bound (default 2)")
    parser.add_argument("--order", type=int, default=8,
                        help="series order for qyb/unitarity (default 8)")
    parser.add_argument("--kmax", type=int, default=4,
                        help="largest locality exponent tried (default 4)")
    parser.add_argument("--fdeg", type=int, default=4,
                        help="Laurent degree bound for exchange rows (default 4)")
    parser.add_argument("--lmax", type=int, default=4,
                        help="largest associativity exponent tried (default 4)")
    parser.add_argument("--n", type=int, default=2,
                        help="tensor slots for probe-z (default 2)")
    parser.add_argument("--dmax", type=int, default=2,
                        help="difference-pole order bound for probe-z (default 2)")
    parser.add_argument("--coeff-range", dest="coeff_range", type=int, default=3,
                        help="coefficient exponent range for probe-z (default 3)")
    parser.add_argument("--pair", default=None,
                        help="generator pair 'a,b' for find-slocality")
    parser.add_argument("--out", default=None, help="also write the report here")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec, text = load_spec(args.spec)
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except SpecParseError as exc:
        doc = {"body": {"tool": "qva", "version": __version__,
                        "command": [args.verb, args.spec],
                        "errors": [{"line": ln, "message": msg}
                                   for ln, msg in exc.errors],
                        "aggregate": "error"},
               "timings": {}}
        emit(doc, args.out)
        return 3
    reports = COMMANDS[args.verb](spec, args)
    doc = make_document([args.verb, os.path.basename(args.spec)], text, reports)
    emit(doc, args.out)
    return EXIT[doc["body"]["aggregate"]]


if __name__ == "__main__":
    sys.exit(main())
