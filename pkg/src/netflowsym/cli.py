"""Batch front-end.

    netflowsym classify|wellposed|symmetry|simulate <bundle.json> [overrides]

Each command reads one problem bundle, runs the requested checks, and writes
``report.json`` (plus trajectory CSV/JSON and figures for ``simulate``) into
the output directory.  Exit codes: 0 all checks passed, 2 parse/validation
error, 3 numerical failure, 4 expected-invariance assertion failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import assembly, evolution, symmetry
from .bundle import ProblemBundle, parse_bundle, write_report
from .coupling import classify_semigroup
from .errors import (
    BadIndex,
    DiscontinuousAtNode,
    DimensionMismatch,
    IsolatedNode,
    NetflowError,
    NotAdmissible,
    NotBipartite,
    NotConstant,
    NotContinuous,
    NotLayerGraph,
    NotProjection,
    NotSelfAdjoint,
    NotSymmetricLayerGraph,
    OutOfDomain,
    ParseError,
    SelfLoop,
    SolverFailure,
)
from .graph import classify, graph_to_dict

_VALIDATION_ERRORS = (
    ParseError, DimensionMismatch, BadIndex, IsolatedNode, SelfLoop,
    NotProjection, DiscontinuousAtNode, NotBipartite, NotSymmetricLayerGraph,
    NotLayerGraph, NotConstant, OutOfDomain, NotContinuous, NotAdmissible,
)
_NUMERICAL_ERRORS = (SolverFailure, NotSelfAdjoint)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERICAL = 3
EXIT_ASSERTION = 4


def _initial_state(bundle: ProblemBundle, sys) -> np.ndarray:
    spec = bundle.initial
    kind = spec.get("kind", "random") if isinstance(spec, dict) else "random"
    dof = sys.dof
    if kind == "random":
        rng = np.random.default_rng(bundle.seed)
        return rng.uniform(0.0, 1.0, dof.total_dofs).astype(complex)
    if kind == "constant":
        return np.full(dof.total_dofs, complex(spec.get("value", 1.0)))
    if kind == "cos_pi":
        fns = [lambda x: np.cos(np.pi * x)] * sys.graph.n_edges
        return assembly.interpolate(sys.graph, dof, fns).coefficients
    if kind == "poly":
        coeffs = spec.get("coeffs")
        if coeffs is None or len(coeffs) != sys.graph.n_edges:
            raise ParseError("initial.poly needs one coefficient list per edge")
        fns = [np.polynomial.polynomial.Polynomial(c) for c in coeffs]
        return assembly.interpolate(sys.graph, dof, fns).coefficients
    if kind == "samples":
        data = spec.get("data")
        if data is None or len(data) != sys.graph.n_edges:
            raise ParseError("initial.samples needs one sample list per edge")
        grid = dof.grid
        fns = [
            (lambda vals: (lambda x: np.interp(x, np.linspace(0, 1, len(vals)), vals)))(
                np.asarray(row, dtype=float))
            for row in data
        ]
        return assembly.interpolate(sys.graph, dof, fns).coefficients
    raise ParseError(f"unknown initial data kind {kind!r}")


def cmd_classify(bundle: ProblemBundle, args) -> tuple[dict, int]:
    return {"graph_class": classify(bundle.graph).to_dict()}, EXIT_OK


def cmd_wellposed(bundle: ProblemBundle, args) -> tuple[dict, int]:
    C, M = bundle.require_coefficients()
    report = classify_semigroup(C, M, bundle.graph)
    return {"wellposed": report.to_dict()}, EXIT_OK


def cmd_symmetry(bundle: ProblemBundle, args) -> tuple[dict, int]:
    C, M = bundle.require_coefficients()
    g = bundle.graph

    def one(spec):
        proj = spec.projection(g)
        rep = symmetry.full_report(
            g, C, M, proj, numeric=bundle.numeric, n_per_edge=bundle.n_per_edge,
            dt=bundle.dt, T=bundle.T, trials=bundle.trials, seed=bundle.seed,
        )
        entry = {"label": spec.label, **rep.to_dict()}
        entry["expect_invariant"] = spec.expect_invariant
        entry["matched"] = (None if spec.expect_invariant is None
                            else rep.invariant == spec.expect_invariant)
        return entry

    if args.jobs > 1 and len(bundle.projections) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            entries = list(pool.map(one, bundle.projections))
    else:
        entries = [one(spec) for spec in bundle.projections]

    code = EXIT_OK
    for entry in entries:
        if entry["matched"] is False or entry.get("numeric_consistent") is False:
            code = EXIT_ASSERTION
    return {"symmetry": entries}, code


def cmd_simulate(bundle: ProblemBundle, args) -> tuple[dict, int]:
    C, M = bundle.require_coefficients()
    g = bundle.graph
    dof = assembly.build_dof_map(g, bundle.n_per_edge)
    sys_ = assembly.assemble(g, dof, C, M)
    dt = bundle.dt if bundle.dt is not None else evolution.default_dt(dof.h, bundle.scheme)
    u0 = _initial_state(bundle, sys_)
    if bundle.mode == "schrodinger":
        traj = evolution.simulate_schrodinger(sys_, u0, dt, bundle.T, stride=bundle.stride)
    else:
        traj = evolution.simulate_parabolic(sys_, u0, dt, bundle.T,
                                            scheme=bundle.scheme, stride=bundle.stride)
    csv_path = os.path.join(args.out_dir, "trajectory_0.csv")
    obs_path = os.path.join(args.out_dir, "trajectory_0_observables.json")
    evolution.write_trajectory_csv(traj, csv_path)
    evolution.write_observables_json(traj, obs_path)
    figures = []
    if args.plot:
        from .plots import render_trajectory_figures

        figures = render_trajectory_figures(traj, sys_, os.path.join(args.out_dir, "trajectory_0"))
    fragment = {
        "simulate": {
            "mode": bundle.mode,
            "scheme": bundle.scheme,
            "dt": dt,
            "T": bundle.T,
            "n_per_edge": bundle.n_per_edge,
            "n_times": int(traj.times.size),
            "final_l2_norm": float(traj.observables["l2_norm"][-1]),
            "trajectories": [csv_path],
            "observables": [obs_path],
            "figures": figures,
        }
    }
    return fragment, EXIT_OK


_COMMANDS = {
    "classify": cmd_classify,
    "wellposed": cmd_wellposed,
    "symmetry": cmd_symmetry,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netflowsym", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("bundle", help="path to the problem bundle JSON file")
        p.add_argument("--out-dir", default="./out")
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--T", dest="T", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=1)
        if name == "simulate":
            p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True,
                           help="render PNG figures next to the CSV output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        overrides = {"dt": args.dt, "T": args.T, "seed": args.seed}
        bundle = parse_bundle(args.bundle, overrides)
        os.makedirs(args.out_dir, exist_ok=True)
        fragment, code = _COMMANDS[args.command](bundle, args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NetflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    report = {
        "command": args.command,
        "seed": bundle.seed,
        "graph": graph_to_dict(bundle.graph),
        **fragment,
        "timings": {"wall_s": time.perf_counter() - t0},
    }
    path = os.path.join(args.out_dir, "report.json")
    write_report(report, path)
    print(f"wrote {path}" + ("" if code == EXIT_OK else f" (exit {code})"))
    return code


if __name__ == "__main__":
    raise SystemExit(main())
