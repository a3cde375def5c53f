"""Command-line interface: ``fourier-sampling <subcommand> ...``.

Exit codes: 0 success, 2 bad parameters or input data, 3 numerical failure
(solver did not converge, rerun not reproducible), 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from . import __version__
from .core import ParameterError, evaluate_on_grid, read_coefficients_csv, write_coefficients_csv, write_pgm
from .designs import DesignFileError, design_read, design_write, make_design
from .experiments import (MANIFEST_NAME, ExperimentError, ExperimentSpec, RunManifest, compare_manifests,
                          compare_runs, rerun, run_experiment, standard_experiments)
from .metrics import recovery_report
from .phantoms import load_phantom
from .reconstruction import AdmmParams, InfeasibleError, Measurements, reconstruct
from .witness import GroupSpec, greedy_select, phase_search, riesz_product, theorem2_witness, write_witness
from .witness import write_witness_polynomial

EXIT_OK, EXIT_PARAM, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class NumericalFailure(RuntimeError):
    pass


def _path(args, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else Path(args.out_dir) / p


def _input(p) -> Path:
    p = Path(p)
    if not p.is_file():
        raise FileNotFoundError(f"input file not found: {p}")
    return p


def _phantom(spec):
    return load_phantom(spec if spec == "standard" else _input(spec))


def cmd_phantom(args):
    ph = _phantom(args.spec)
    grid = ph.render(args.render)
    out = _path(args, args.out)
    meta = write_pgm(grid, out)
    if args.coeffs is not None:
        from .core import TrigPolynomial, coefficient_block

        write_coefficients_csv(TrigPolynomial(coefficient_block(ph, args.coeffs, 2), real=True),
                               _path(args, args.coeffs_out))
    print(json.dumps({"phantom": ph.name, "G": args.render, "out": str(out), **meta}))


def cmd_design(args):
    if args.scheme == "lowest-block":
        params = {"m": args.m, "d": args.d}
    elif args.scheme == "hierarchical":
        params = {"n_target": args.n, "alpha": args.alpha, "k0": args.k0, "k_cap": args.k_cap, "d": args.d}
    else:
        params = {"n_target": args.n, "half_width": args.half_width, "d": args.d}
    des = make_design(args.scheme, params, args.seed)
    out = _path(args, args.out)
    design_write(des, out)
    print(json.dumps({"scheme": des.scheme, "n": len(des), "max_degree": des.max_degree, "out": str(out)}))


def _measurements(args):
    if getattr(args, "measurements", None):
        return Measurements.read_csv(_input(args.measurements))
    if not (args.design and args.phantom):
        raise ParameterError("give --measurements, or both --design and --phantom")
    ph = _phantom(args.phantom)
    return Measurements.from_source(design_read(_input(args.design)), ph, ph.name)


def cmd_measure(args):
    meas = _measurements(args)
    out = _path(args, args.out)
    meas.write_csv(out)
    print(json.dumps({"n": len(meas.freqs), "out": str(out)}))


def cmd_reconstruct(args):
    meas = _measurements(args)
    params = None
    if args.method == "bvmin":
        params = AdmmParams(m=args.m, rho=args.rho, max_iter=args.max_iter, eps_primal=args.eps,
                            eps_dual=args.eps, oversample=args.oversample)
    poly, rep = reconstruct(args.method, meas, args.m, params)
    write_coefficients_csv(poly, _path(args, args.out))
    summary = {"method": args.method, "m": args.m, "out": str(_path(args, args.out))}
    if rep is not None:
        rep.to_json(_path(args, args.report), history=args.history)
        summary.update(rep.to_dict())
    print(json.dumps(summary))
    if rep is not None and not rep.converged and not args.accept_max_iter:
        raise NumericalFailure(f"ADMM stopped after {rep.iterations} iterations without meeting tolerances")


def cmd_metrics(args):
    poly = read_coefficients_csv(_input(args.recon))
    ph = _phantom(args.phantom)
    design = design_read(_input(args.design)) if args.design else None
    rep = recovery_report(poly, ph, design, args.G)
    rep.to_json(_path(args, args.out), phantom=ph.name, recon=str(args.recon),
                design=str(args.design) if args.design else None)
    if args.image:
        write_pgm(evaluate_on_grid(poly, args.G), _path(args, args.image))
    print(json.dumps(rep.to_dict()))


def cmd_witness(args):
    if args.k is not None:
        sampled = design_read(_input(args.design)) if args.design else np.zeros((0, args.d), dtype=np.int64)
        poly, rep = theorem2_witness(args.k, args.d, sampled, args.delta, args.trials, args.seed)
        write_witness_polynomial(poly, rep, _path(args, args.prefix + "_coeffs.csv"),
                                 _path(args, args.prefix + ".json"))
        print(json.dumps(rep.to_dict()))
        return
    G = GroupSpec(tuple(args.group))
    if not 0 < args.lambda_frac <= 1:
        raise ParameterError("--lambda-frac must lie in (0, 1]")
    lam = np.zeros(G.size, dtype=bool)
    lam[: math.ceil(args.lambda_frac * G.size)] = True
    greedy = greedy_select(G, lam.reshape(G.moduli), args.delta)
    search = phase_search(G, greedy.S, greedy.h, args.trials, args.seed)
    w = riesz_product(G, greedy.S, greedy.h, search.phases)
    meta = write_witness(
        w, _path(args, args.prefix + "_coeffs.csv"), _path(args, args.prefix + ".json"), args.delta,
        extra={"Lambda_sizes": greedy.Lambda_sizes, "size_bound": greedy.size_bound(),
               "phase_target": search.target, "phase_mean": search.mean_ell1, "phase_met": search.met},
    )
    print(json.dumps(meta))


def _run_and_report(spec):
    man = run_experiment(spec)
    met = man.results["metrics"]
    print(json.dumps({"name": spec.name, "out_dir": spec.out_dir, "edge_discrepancy": met["edge_discrepancy"],
                      "converged": man.results.get("convergence", {}).get("converged", True)}))
    return man


def cmd_experiment(args):
    if args.rerun:
        old = RunManifest.load(_input(args.rerun))
        target = _path(args, args.rerun_dir or (Path(old.spec["out_dir"]).name + "_rerun"))
        new = rerun(args.rerun, target)
        verdict = compare_manifests(old, new, args.tol)
        print(json.dumps(verdict))
        if not verdict["ok"]:
            raise NumericalFailure("rerun does not reproduce the recorded run")
        return
    if args.spec:
        base = [ExperimentSpec.load(_input(args.spec))]
    else:
        suite = standard_experiments(Path(args.out_dir), args.seed)
        names = args.only or list(suite)
        unknown = set(names) - set(suite)
        if unknown:
            raise ParameterError(f"unknown experiments {sorted(unknown)}; choose from {list(suite)}")
        base = [suite[n] for n in names]
    seeds = args.seed_sweep or [None]
    nonconv = []
    for spec in base:
        for s in seeds:
            d = spec.to_dict()
            if args.max_iter is not None:
                d["max_iter"] = args.max_iter
            if s is not None:
                d["seed"] = s
                d["name"] = f"{spec.name}_seed{s}"
                d["out_dir"] = f"{spec.out_dir}_seed{s}"
            man = _run_and_report(ExperimentSpec.from_dict(d))
            if not man.results.get("convergence", {}).get("converged", True):
                nonconv.append(d["name"])
    if nonconv and not args.accept_max_iter:
        raise NumericalFailure(f"solver hit max_iter in: {', '.join(nonconv)}")


def cmd_compare(args):
    mans = [m if m.endswith(".json") else str(Path(m) / MANIFEST_NAME) for m in args.manifests]
    rows = compare_runs([RunManifest.load(_input(m)) for m in mans],
                        _path(args, args.csv), _path(args, args.json))
    for r in rows:
        print(json.dumps(r))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="root RNG seed")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for relative output paths")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="FFT worker threads")

    p = argparse.ArgumentParser(prog="fourier-sampling", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--threads", type=int, default=1)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("phantom", parents=[common], help="render a phantom to PGM")
    s.add_argument("--spec", default="standard", help="phantom JSON file or 'standard'")
    s.add_argument("--render", type=int, default=1024, metavar="G")
    s.add_argument("--out", default="phantom.pgm")
    s.add_argument("--coeffs", type=int, metavar="M", help="also dump exact coefficients up to degree M")
    s.add_argument("--coeffs-out", default="phantom_coeffs.csv")
    s.set_defaults(func=cmd_phantom)

    s = sub.add_parser("design", parents=[common], help="build a sampling design")
    s.add_argument("scheme", choices=["lowest-block", "hierarchical", "uniform"])
    s.add_argument("--m", type=int, default=8)
    s.add_argument("--n", type=int, default=289)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--k0", type=int)
    s.add_argument("--k-cap", type=int)
    s.add_argument("--half-width", type=int, default=1024)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--out", default="design.txt")
    s.set_defaults(func=cmd_design)

    def meas_args(s):
        s.add_argument("--design")
        s.add_argument("--phantom", default="standard")
        s.add_argument("--measurements", help="measurement CSV (instead of design + phantom)")

    s = sub.add_parser("measure", parents=[common], help="sample phantom coefficients at a design")
    meas_args(s)
    s.add_argument("--out", default="measurements.csv")
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("reconstruct", parents=[common], help="recover a polynomial from measurements")
    s.add_argument("--method", choices=["partial", "vdp", "bvmin"], required=True)
    meas_args(s)
    s.add_argument("--m", type=int, default=32)
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--max-iter", type=int, default=5000)
    s.add_argument("--eps", type=float, default=1e-7)
    s.add_argument("--oversample", type=int, default=4)
    s.add_argument("--out", default="coeffs.csv")
    s.add_argument("--report", default="report.json")
    s.add_argument("--history", action="store_true", help="include residual histories in the report")
    s.add_argument("--accept-max-iter", action="store_true", help="exit 0 even if tolerances were not met")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("metrics", parents=[common], help="evaluate a reconstruction against a phantom")
    s.add_argument("--recon", required=True)
    s.add_argument("--phantom", default="standard")
    s.add_argument("--design")
    s.add_argument("--G", type=int, default=1024)
    s.add_argument("--out", default="metrics.json")
    s.add_argument("--image", help="also write the reconstruction as PGM")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("witness", parents=[common], help="greedy set + Riesz product witness")
    s.add_argument("--group", type=int, nargs="+", default=[64], help="moduli N_1 ... N_r")
    s.add_argument("--lambda-frac", type=float, default=0.5)
    s.add_argument("--delta", type=float, default=0.5)
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--k", type=int, help="build the degree-2^k polynomial witness instead")
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--design", help="sampled frequencies for --k mode")
    s.add_argument("--prefix", default="witness")
    s.set_defaults(func=cmd_witness)

    s = sub.add_parser("experiment", parents=[common], help="run experiment pipelines")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--spec", help="experiment spec JSON")
    g.add_argument("--rerun", metavar="MANIFEST", help="rerun a manifest and check reproducibility")
    s.add_argument("--only", nargs="+", help="subset of the standard suite")
    s.add_argument("--seed-sweep", type=int, nargs="+", help="run once per seed")
    s.add_argument("--max-iter", type=int)
    s.add_argument("--rerun-dir")
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--accept-max-iter", action="store_true")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("compare", parents=[common], help="tabulate several runs")
    s.add_argument("manifests", nargs="+", help="manifest files or run directories")
    s.add_argument("--csv", default="comparison.csv")
    s.add_argument("--json", default="comparison.json")
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARAM if exc.code else EXIT_OK
    try:
        if args.threads < 1:
            raise ParameterError("--threads must be >= 1")
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        with sfft.set_workers(args.threads):
            args.func(args)
        return EXIT_OK
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        cause = exc.cause
        return EXIT_IO if isinstance(cause, OSError) else EXIT_PARAM
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParameterError, DesignFileError, InfeasibleError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
