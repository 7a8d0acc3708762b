"""Command-line entry point.

Subcommands: generate, detect, energy, flatnorm, deform, deform-scaling,
fubini-check, sgrid-consistency, energy-bound, stability, norm-estimate,
chain-diff.  Exit codes: 0 success, 1 domain error (class name on stderr),
2 usage error.  Every report embeds the config, seed, and code version, so
re-running a report's config reproduces its numbers bit-exactly.  The
FLATCHAIN_THREADS environment variable caps the worker count (loops here
run on a single worker, which always respects the cap).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .chains import BoxDomain, Chain, load_chain, save_chain
from .errors import FlatChainError, InsufficientResolution, OnSkeleton
from .fields import (
    dirichlet_energy,
    energy_bound_test,
    extract_sgrid,
    load_field,
    save_field,
    sgrid_consistency,
    stability_test,
)
from .flatnorm import NormResult, flat_norm
from .grids import (
    Grid,
    deform,
    deformation_scaling_test,
    skeleton_average_test,
)
from .homotopy import homotopy_norm_curve
from .synth import DefectSpec, dipole_cylinder_field, hedgehog_field, \
    vortex_field


def worker_cap() -> int:
    """Worker count cap from FLATCHAIN_THREADS (>= 1)."""
    try:
        return max(1, int(os.environ.get("FLATCHAIN_THREADS", "1")))
    except ValueError:
        return 1


def _parse_y(text: str, dim: int, seed: int):
    if text == "random":
        rng = np.random.default_rng(seed)
        return tuple(rng.random(dim)), True
    parts = tuple(float(t) for t in text.split(","))
    if len(parts) != dim:
        raise ValueError(f"offset needs {dim} components")
    return parts, False


def _norm_result_json(res: NormResult) -> dict:
    return {
        "value": res.value,
        "exact": res.exact,
        "method": res.method,
        "certificate": {
            "monopoles": [{"x": list(x), "c": c}
                          for x, c in res.certificate.monopoles],
            "dipoles": [{"x": list(x), "v": list(v), "c": c}
                        for x, v, c in res.certificate.dipoles],
        },
    }


def _emit(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def _write_csv(path: str, config: dict, header: list, rows: list):
    with open(path, "w", newline="") as f:
        f.write("# config: " + json.dumps(
            {"version": __version__, **config}, sort_keys=True) + "\n")
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in row])


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    with open(args.spec) as f:
        spec_json = json.load(f)
    domain = BoxDomain.from_dict(spec_json["domain"])
    h_ref = float(spec_json.get("h_ref", 0.1))
    pad = spec_json.get("pad")
    background = spec_json.get("background")
    if args.kind == "dipole":
        field, truth = dipole_cylinder_field(
            (spec_json["a"], spec_json["b"]), int(spec_json["sigma"]),
            float(spec_json["r"]), domain, args.spacing,
            target=spec_json.get("target", "S1"), background=background,
            pad=pad, h_ref=h_ref)
    else:
        defects = [(tuple(d["x"]), int(d["d"]))
                   for d in spec_json["defects"]]
        spec = DefectSpec(defects=defects,
                          target=spec_json.get(
                              "target",
                              "S1" if args.kind == "vortex" else "S2"),
                          background=background)
        maker = vortex_field if args.kind == "vortex" else hedgehog_field
        field, truth = maker(spec, domain, args.spacing, h_ref, pad=pad)
    save_field(field, args.out)
    if args.truth:
        save_chain(truth, args.truth)
    return 0


def _cmd_detect(args) -> int:
    field = load_field(args.field)
    y, random_y = _parse_y(args.y, field.dim, args.seed)
    attempts = 100 if random_y else 1
    rng = np.random.default_rng(args.seed)
    last = None
    for k in range(attempts):
        try:
            result = extract_sgrid(field, args.h, y)
            break
        except (OnSkeleton, InsufficientResolution) as e:
            last = e
            y = tuple(rng.random(field.dim))
    else:
        raise last
    save_chain(result.chain, args.out)
    print(json.dumps({"version": __version__, "h": args.h,
                      "y": list(result.y), "seed": args.seed,
                      "atoms": len(result.chain.atoms)}))
    return 0


def _cmd_energy(args) -> int:
    field = load_field(args.field)
    value = dirichlet_energy(field, args.p)
    print(json.dumps({"energy": value, "p": args.p,
                      "version": __version__}))
    return 0


def _cmd_flatnorm(args) -> int:
    chain = load_chain(args.chain)
    method = "auto"
    if args.oracle:
        method = "oracle"
    elif args.flow:
        method = "flow"
    res = flat_norm(chain, args.mode, method=method)
    _emit({"version": __version__, "mode": args.mode,
           **_norm_result_json(res)}, args.out)
    return 0


def _cmd_deform(args) -> int:
    chain = load_chain(args.chain)
    y, random_y = _parse_y(args.y, chain.domain.dim, args.seed)
    rng = np.random.default_rng(args.seed)
    attempts = 100 if random_y else 1
    last = None
    for _ in range(attempts):
        try:
            out = deform(chain, Grid(args.h, y, chain.domain))
            break
        except OnSkeleton as e:
            last = e
            y = tuple(rng.random(chain.domain.dim))
    else:
        raise last
    if args.out:
        save_chain(out, args.out)
    else:
        print(json.dumps(out.to_dict()))
    return 0


def _cmd_deform_scaling(args) -> int:
    chain = load_chain(args.chain)
    h_values = [float(t) for t in args.h_list.split(",")]
    report = deformation_scaling_test(chain, h_values, args.samples,
                                      args.seed)
    config = {"chain": args.chain, "h_list": h_values,
              "samples": args.samples, "seed": args.seed}
    rows = [(h, m, s, r) for h, m, s, r in
            zip(report.h_values, report.means, report.stderrs,
                report.ratios)]
    rows.append(("slope", report.slope, "", ""))
    _write_csv(args.out, config,
               ["h", "mean_flat", "stderr", "ratio_to_hM"], rows)
    return 0


def _cmd_fubini(args) -> int:
    dim = {"unit2": 2, "unit3": 3}[args.domain]
    box = BoxDomain((0.0,) * dim, (1.0,) * dim)
    if args.f == "one":
        f = lambda pts: np.ones(len(pts))
        integral = 1.0
    else:  # linear ramp in the first coordinate
        f = lambda pts: pts[:, 0]
        integral = 0.5
    report = skeleton_average_test(f, integral, box, args.j, args.h,
                                   args.samples, args.seed)
    config = {"f": args.f, "domain": args.domain, "j": args.j, "h": args.h,
              "samples": args.samples, "seed": args.seed}
    payload = {"version": __version__, "config": config,
               "estimate": report.estimate, "stderr": report.stderr,
               "target": report.target,
               "relative_error": report.relative_error}
    _emit(payload, args.out)
    return 0


def _cmd_sgrid_consistency(args) -> int:
    field = load_field(args.field)
    truth = load_chain(args.truth)
    h_values = [float(t) for t in args.h_list.split(",")]
    report = sgrid_consistency(field, truth, h_values, args.samples,
                               args.seed)
    config = {"field": args.field, "truth": args.truth,
              "h_list": h_values, "samples": args.samples,
              "seed": args.seed}
    rows = [(h, m, s, r) for h, m, s, r in
            zip(report.h_values, report.means, report.stderrs,
                report.ratios)]
    rows.append(("slope", report.slope, "mismatches", report.mismatches))
    _write_csv(args.out, config,
               ["h", "mean_flat_discrepancy", "stderr", "ratio_to_hM"],
               rows)
    return 0


def _cmd_energy_bound(args) -> int:
    with open(args.pairs) as f:
        manifest = json.load(f)
    instances = [(load_field(e["field"]), load_chain(e["truth"]))
                 for e in manifest]
    report = energy_bound_test(instances, args.p)
    payload = {"version": __version__,
               "config": {"pairs": args.pairs, "p": args.p},
               "ratios": report.ratios, "energies": report.energies,
               "flat_norms": report.flat_norms,
               "max_ratio": report.max_ratio}
    _emit(payload, args.out)
    return 0


def _cmd_stability(args) -> int:
    field = load_field(args.field)
    y, _ = _parse_y(args.y, field.dim, args.seed)
    epsilons = [float(t) for t in args.epsilons.split(",")]
    report = stability_test(field, epsilons, args.h, y, args.seed)
    payload = {"version": __version__,
               "config": {"field": args.field, "h": args.h,
                          "y": list(y), "epsilons": epsilons,
                          "seed": args.seed},
               "unchanged": report.unchanged,
               "threshold": report.threshold}
    _emit(payload, args.out)
    return 0


def _cmd_norm_estimate(args) -> int:
    curve = homotopy_norm_curve(args.target, args.d, args.mesh)
    print(json.dumps({"version": __version__, "target": args.target,
                      "d": args.d, "levels": curve,
                      "estimate": curve[-1]}))
    return 0


def chain_diff(a: Chain, b: Chain, mode: str = "flat",
               method: str = "auto") -> NormResult:
    """Flat or flat-size norm of the difference a - b (same domain/group)."""
    return flat_norm(a - b, mode, method=method)


def _cmd_chain_diff(args) -> int:
    a = load_chain(args.a)
    b = load_chain(args.b)
    res = chain_diff(a, b, args.mode)
    _emit({"version": __version__, "mode": args.mode,
           **_norm_result_json(res)}, args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flatchain",
        description="flat chains, deformation, and defect detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a field with known "
                                        "singular chain")
    p.add_argument("kind", choices=["vortex", "hedgehog", "dipole"])
    p.add_argument("--spec", required=True)
    p.add_argument("--spacing", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truth")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("detect", help="extract the singular chain of a field")
    p.add_argument("--field", required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--y", default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("energy", help="discrete p-Dirichlet energy")
    p.add_argument("--field", required=True)
    p.add_argument("--p", type=int, required=True)
    p.set_defaults(func=_cmd_energy)

    p = sub.add_parser("flatnorm", help="flat / flat-size norm of a chain")
    p.add_argument("--chain", required=True)
    p.add_argument("--mode", choices=["flat", "flatsize"], default="flat")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--flow", action="store_true")
    p.add_argument("--auto", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_flatnorm)

    p = sub.add_parser("deform", help="snap a chain to a grid")
    p.add_argument("--chain", required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--y", default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_deform)

    p = sub.add_parser("deform-scaling",
                       help="Monte-Carlo deformation error vs h")
    p.add_argument("--chain", required=True)
    p.add_argument("--h-list", required=True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_deform_scaling)

    p = sub.add_parser("fubini-check",
                       help="skeleton average vs volume integral")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--h", type=float, default=0.15)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--f", choices=["one", "ramp"], default="one")
    p.add_argument("--domain", choices=["unit2", "unit3"], default="unit2")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fubini)

    p = sub.add_parser("sgrid-consistency",
                       help="detector vs deformed ground truth")
    p.add_argument("--field", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--h-list", required=True)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sgrid_consistency)

    p = sub.add_parser("energy-bound",
                       help="flat norm vs discrete energy over a corpus")
    p.add_argument("--pairs", required=True,
                   help="JSON manifest: [{field, truth}, ...]")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_energy_bound)

    p = sub.add_parser("stability", help="extraction under renormalized "
                                         "noise")
    p.add_argument("--field", required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--y", default="0.5,0.5")
    p.add_argument("--epsilons", default="1e-4,1e-3,1e-2,1e-1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("norm-estimate",
                       help="descent estimate of a class norm")
    p.add_argument("--target", choices=["S1", "S2"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--mesh", type=int, default=4)
    p.set_defaults(func=_cmd_norm_estimate)

    p = sub.add_parser("chain-diff", help="norm of the difference of two "
                                          "chains")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--mode", choices=["flat", "flatsize"], default="flat")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_chain_diff)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 2
    try:
        return args.func(args)
    except FlatChainError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
