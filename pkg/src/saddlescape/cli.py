"""Command-line front end.

Subcommands: ``sd`` and ``gpsd`` run a single saddle search and write a
result JSON (plus optional trajectory CSV and subproblem log); ``landscape``
builds and writes a solution-landscape graph; ``verify-index`` classifies a
given point; ``bench`` reproduces published reference tables and prints a
comparison report.

Configuration comes from a JSON file of flat per-module sections passed via
--config, overridable by flags; the SADDLE_SEED environment variable
overrides the configured seed. Exit codes: 0 success, 2 non-convergence,
3 configuration error.
"""

from __future__ import annotations

import argparse
import importlib.util
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import benchmarks as bm
from .dynamics import (DimerSchedule, RunStatus, SdParams, SdState, run_sd,
                       write_trajectory_csv)
from .errors import ConfigError, Diverged, FitFailure, SaddleSearchError
from .landscape import (LandscapeConfig, build_landscape,
                        classify_stationary_point, export_graph)
from .learner import GpsdParams, TrustRegion, run_gpsd, write_subproblem_log
from .linalg import fd_jacobian_sym
from .forces import ForceOracle

_SCHEMA = {
    "run": {"benchmark", "case", "engine", "seed", "output_dir",
            "emit_trajectory", "k"},
    "sd": {"tau", "beta", "gamma", "tol_x", "max_steps", "dimer_kind",
           "dimer_l0", "divergence_bound"},
    "gpsd": {"tol_l", "tol_u", "n_sam", "n_new", "delta", "delta_min",
             "delta_max", "max_shrink_streak", "fit_restarts", "fit_max_iter"},
    "benchmark": {"a", "b", "c", "d", "x0", "alpha", "h", "kappa",
                  "inv_eta_sq", "module"},
    "landscape": {"perturb_eps", "dedup_tol", "residual_bound", "max_nodes",
                  "exhaustive", "jobs"},
}

#: Per-benchmark defaults for the published experiment settings.
_DEFAULTS = {
    "rosenbrock": {
        "sd": {"tau": 0.01, "beta": 1.0, "gamma": 1.0, "tol_x": 1e-6,
               "max_steps": 20000, "dimer_kind": "polynomial", "dimer_l0": 0.01},
        "gpsd": {"tol_l": 0.05, "tol_u": 0.15, "n_sam": 100, "n_new": 100,
                 "delta": 0.025},
        "landscape": {"perturb_eps": 0.1, "dedup_tol": 1e-3,
                      "residual_bound": 1e-4},
    },
    "codesign": {
        "sd": {"tau": 0.0025, "beta": 1.0, "gamma": 1.0, "tol_x": 1e-6,
               "max_steps": 20000, "dimer_kind": "polynomial", "dimer_l0": 0.0025},
        "gpsd": {"tol_l": 0.05, "tol_u": 0.15, "n_sam": 300, "n_new": 300,
                 "delta": 0.1},
        "landscape": {"perturb_eps": 0.1, "dedup_tol": 1e-3,
                      "residual_bound": 1e-3},
    },
    "phasefield": {
        "sd": {"tau": 0.00025, "beta": 100.0, "gamma": 100.0, "tol_x": 1e-5,
               "max_steps": 20000, "dimer_kind": "exponential",
               "dimer_l0": 0.00025},
        "gpsd": {"tol_l": 0.05, "tol_u": 0.15, "n_sam": 120, "n_new": 120,
                 "delta": 0.01},
        "landscape": {"perturb_eps": 0.01, "dedup_tol": 1e-2,
                      "residual_bound": 1e-4},
    },
    "custom-file": {
        "sd": {"tau": 0.01, "beta": 1.0, "gamma": 1.0, "tol_x": 1e-8,
               "max_steps": 50000, "dimer_kind": "polynomial", "dimer_l0": 0.01},
        "gpsd": {"tol_l": 0.05, "tol_u": 0.15, "n_sam": 30, "n_new": 30,
                 "delta": 0.5},
        "landscape": {"perturb_eps": 0.1, "dedup_tol": 1e-3,
                      "residual_bound": 1e-6},
    },
}

_PHASEFIELD_CASES = {"i": (30.0, 1), "ii": (80.0, 2), "iii": (120.0, 3)}


def _validate_config(doc):
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    for section, entries in doc.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(entries, dict):
            raise ConfigError(f"section {section!r} must be an object")
        for key in entries:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")


def _load_config(path):
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    _validate_config(doc)
    return doc


class _Setup:
    """Fully resolved run inputs: oracle, initial state pieces, parameters."""

    def __init__(self, cfg):
        run = cfg.get("run", {})
        self.benchmark = run.get("benchmark", "rosenbrock")
        if self.benchmark not in _DEFAULTS:
            raise ConfigError(f"unknown run.benchmark {self.benchmark!r}")
        self.case = run.get("case", "i")
        self.seed = int(os.environ.get("SADDLE_SEED", run.get("seed", 0)))
        self.output_dir = Path(run.get("output_dir", "."))
        self.emit_trajectory = bool(run.get("emit_trajectory", False))
        defaults = _DEFAULTS[self.benchmark]
        sd_cfg = {**defaults["sd"], **cfg.get("sd", {})}
        self.gpsd_cfg = {**defaults["gpsd"], **cfg.get("gpsd", {})}
        self.landscape_cfg = {**defaults["landscape"], **cfg.get("landscape", {})}
        bench_cfg = cfg.get("benchmark", {})
        self.sampler = None
        self.n_s_source = None

        if self.benchmark == "rosenbrock":
            if self.case not in bm.ROSENBROCK_CASES:
                raise ConfigError(f"unknown rosenbrock case {self.case!r}")
            params = bm.ROSENBROCK_CASES[self.case]
            if {"a", "b", "c", "d"} & set(bench_cfg):
                params = bm.RosenbrockParams(
                    a=bench_cfg.get("a", params.a), b=bench_cfg.get("b", params.b),
                    c=bench_cfg.get("c", params.c), d=bench_cfg.get("d", params.d))
            self.params = params
            self.make_oracle = lambda: bm.rosenbrock_oracle(params)
            self.x0 = np.array(bench_cfg.get("x0", bm.ROSENBROCK_X0), dtype=float)
            default_k = {"i": 1, "ii": 2, "iii": 3, "iv": 4}[self.case]
            self.k = int(run.get("k", default_k))
            self.init_frame = "fd"
            self.jacobian_fn = None
        elif self.benchmark == "codesign":
            if self.case not in bm.CODESIGN_CASES:
                raise ConfigError(f"unknown codesign case {self.case!r}")
            level = bench_cfg.get("x0", bm.CODESIGN_CASES[self.case])
            self.make_oracle = bm.codesign_oracle
            self.x0 = np.full(bm.CODESIGN_DIM, float(level))
            self.k = int(run.get("k", 1))
            self.init_frame = "ones"
            self.jacobian_fn = None
        elif self.benchmark == "phasefield":
            if self.case not in _PHASEFIELD_CASES:
                raise ConfigError(f"unknown phasefield case {self.case!r}")
            inv_eta_sq, default_k = _PHASEFIELD_CASES[self.case]
            pf = bm.PhaseFieldConfig(
                alpha=float(bench_cfg.get("alpha", 1.5)),
                h=float(bench_cfg.get("h", 2.0 ** -5)),
                kappa=float(bench_cfg.get("kappa", 0.02)),
                inv_eta_sq=float(bench_cfg.get("inv_eta_sq", inv_eta_sq)))
            a_matrix = bm.frac_laplacian_matrix(pf)
            self.params = pf
            self.make_oracle = lambda: bm.phasefield_oracle(pf, a_matrix)
            self.x0 = bm.phasefield_initial_state(pf)
            self.k = int(run.get("k", default_k))
            self.init_frame = "analytic"
            self.jacobian_fn = lambda u: bm.phasefield_jacobian(u, pf, a_matrix)
            self.sampler = bm.smooth_curve_sampler(pf)
        else:  # custom-file
            module_path = bench_cfg.get("module")
            if not module_path:
                raise ConfigError("benchmark.module is required for custom-file")
            mod = _load_custom_module(module_path)
            self.make_oracle = mod.make_oracle
            self.x0 = np.array(bench_cfg.get("x0", mod.initial_point()), dtype=float)
            self.k = int(run.get("k", getattr(mod, "DEFAULT_K", 1)))
            self.init_frame = "fd"
            self.jacobian_fn = getattr(mod, "jacobian", None)

        self.sd = SdParams(
            tau=float(sd_cfg["tau"]), k=self.k,
            schedule=DimerSchedule(sd_cfg["dimer_kind"], float(sd_cfg["dimer_l0"])),
            tol_x=float(sd_cfg["tol_x"]), max_steps=int(sd_cfg["max_steps"]),
            beta=float(sd_cfg["beta"]), gamma=float(sd_cfg["gamma"]),
            divergence_bound=float(sd_cfg.get("divergence_bound", 1e6)))

    def initial_state(self, oracle):
        """Initial frame per benchmark convention; returns (state, setup queries)."""
        before = oracle.query_counter
        if self.k == 0:
            from .linalg import DirectionFrame
            frame = DirectionFrame.empty(self.x0.size)
        elif self.init_frame == "ones":
            ones = np.ones(self.x0.size)
            from .linalg import gram_schmidt
            frame = gram_schmidt(ones[None, :] / np.linalg.norm(ones)).take(1)
        elif self.init_frame == "analytic":
            frame = bm.init_directions(self.jacobian_fn(self.x0), self.k)
        else:
            jac = fd_jacobian_sym(oracle, self.x0, step=1e-5)
            frame = bm.init_directions(jac, self.k)
        return SdState.initial(self.x0, frame, self.sd), oracle.query_counter - before

    def gpsd_params(self):
        g = self.gpsd_cfg
        region = TrustRegion(center=self.x0.copy(), half_width=float(g["delta"]))
        kwargs = dict(sd=self.sd, initial_region=region,
                      n_sam=int(g["n_sam"]), n_new=int(g["n_new"]),
                      tol_l=float(g["tol_l"]), tol_u=float(g["tol_u"]),
                      seed=self.seed)
        for key in ("delta_min", "delta_max", "max_shrink_streak",
                    "fit_restarts", "fit_max_iter"):
            if key in g:
                kwargs[key] = g[key]
        return GpsdParams(**kwargs)

    def verification_jacobian(self):
        if self.jacobian_fn is not None:
            return self.jacobian_fn
        make = self.make_oracle

        def fd(x):
            return fd_jacobian_sym(make(), x, step=1e-5)

        return fd


def _load_custom_module(path):
    spec = importlib.util.spec_from_file_location("saddlescape_custom", path)
    if spec is None or spec.loader is None:
        raise ConfigError(f"cannot load benchmark module {path}")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    if not hasattr(mod, "make_oracle"):
        raise ConfigError(f"benchmark module {path} lacks make_oracle()")
    return mod


def _result_document(setup, oracle, result, setup_queries, engine):
    source = getattr(oracle, "simulation_source", None)
    n_simulations = source.n_simulations if source is not None else None
    record = classify_stationary_point(result.final.x,
                                       setup.verification_jacobian(),
                                       force_value=oracle.peek(result.final.x))
    doc = {
        "benchmark": setup.benchmark,
        "case": setup.case,
        "engine": engine,
        "seed": setup.seed,
        "x_final": [float(v) for v in result.final.x],
        "status": result.status.value,
        "index": record.index,
        "degenerate": record.degenerate,
        "eigenvalues": [float(v) for v in record.eigenvalues],
        "N_f": result.N_f,
        "N_f_setup": setup_queries,
        "n_steps": result.n_steps,
        "residual_infnorm": record.residual_infnorm,
    }
    if n_simulations is not None:
        doc["N_s"] = n_simulations
    return doc


def _write_json(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _cmd_run(args, engine):
    cfg = _load_config(args.config)
    _apply_overrides(cfg, args)
    setup = _Setup(cfg)
    oracle = setup.make_oracle()
    state, setup_queries = setup.initial_state(oracle)
    out = setup.output_dir
    status_code = 0
    try:
        if engine == "sd":
            result = run_sd(oracle, state, setup.sd,
                            record_trajectory=setup.emit_trajectory)
        else:
            result = run_gpsd(oracle, state, setup.gpsd_params(),
                              sampler=setup.sampler)
    except (Diverged, FitFailure) as exc:
        result = getattr(exc, "partial", None)
        print(f"run failed: {exc}", file=sys.stderr)
        if result is None:
            return 2
        status_code = 2
    doc = _result_document(setup, oracle, result, setup_queries, engine)
    _write_json(out / "result.json", doc)
    if setup.emit_trajectory and result.trajectory:
        write_trajectory_csv(out / "trajectory.csv", result.trajectory, setup.sd)
    if engine == "gpsd" and result.subproblems:
        write_subproblem_log(out / "subproblems.jsonl", result.subproblems)
    print(json.dumps(doc, indent=2, sort_keys=True))
    if result.status is not RunStatus.CONVERGED:
        status_code = max(status_code, 2)
    return status_code


def _cmd_landscape(args):
    cfg = _load_config(args.config)
    _apply_overrides(cfg, args)
    setup = _Setup(cfg)
    ls = setup.landscape_cfg
    oracle = setup.make_oracle()
    state, _ = setup.initial_state(oracle)
    parent_run = run_sd(oracle, state, setup.sd)
    if parent_run.status is not RunStatus.CONVERGED:
        print(f"parent search did not converge (status {parent_run.status.value})",
              file=sys.stderr)
        return 2
    jac = setup.verification_jacobian()
    root = classify_stationary_point(parent_run.final.x, jac,
                                     force_value=oracle.peek(parent_run.final.x))
    root.N_f = parent_run.N_f
    if root.index == 0:
        print("parent converged to a minimum; nothing to search below",
              file=sys.stderr)
        return 2
    config = LandscapeConfig(
        sd=setup.sd, oracle_factory=setup.make_oracle, engine=args.engine,
        jacobian_fn=jac, perturb_eps=float(ls["perturb_eps"]),
        dedup_tol=float(ls["dedup_tol"]),
        residual_bound=float(ls["residual_bound"]),
        seed=setup.seed, max_nodes=int(ls.get("max_nodes", 64)),
        exhaustive=bool(ls.get("exhaustive", False)),
        jobs=int(args.jobs or ls.get("jobs", 1)),
        gpsd_delta=float(setup.gpsd_cfg["delta"]),
        gpsd_n_sam=int(setup.gpsd_cfg["n_sam"]),
        gpsd_n_new=int(setup.gpsd_cfg["n_new"]),
        gpsd_tol_l=float(setup.gpsd_cfg["tol_l"]),
        gpsd_tol_u=float(setup.gpsd_cfg["tol_u"]),
        gpsd_sampler=setup.sampler)
    graph = build_landscape(root, config)
    stem = f"landscape_{setup.benchmark}_{setup.seed}"
    out = setup.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(export_graph(graph, "JSON") + "\n")
    (out / f"{stem}.dot").write_text(export_graph(graph, "DOT") + "\n")
    print(f"landscape: {len(graph.nodes)} nodes, "
          f"{sum(1 for _ in graph.edges())} edges, "
          f"{len(graph.failed_probes)} failed probes -> {out / stem}.json/.dot")
    return 0


def _cmd_verify_index(args):
    cfg = _load_config(args.config)
    _apply_overrides(cfg, args)
    setup = _Setup(cfg)
    if args.point is not None:
        point = np.array([float(v) for v in args.point.split(",")])
    elif args.point_file is not None:
        point = np.array(json.loads(Path(args.point_file).read_text()), dtype=float)
    else:
        raise ConfigError("verify-index needs --point or --point-file")
    oracle = setup.make_oracle()
    record = classify_stationary_point(point, setup.verification_jacobian(),
                                       force_value=oracle.peek(point))
    doc = {"x": point.tolist(), "index": record.index,
           "degenerate": record.degenerate,
           "eigenvalues": [float(v) for v in record.eigenvalues],
           "residual_infnorm": record.residual_infnorm}
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _apply_overrides(cfg, args):
    run = cfg.setdefault("run", {})
    for key in ("benchmark", "case", "seed", "output_dir", "k"):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            run[key] = value
    if getattr(args, "emit_trajectory", False):
        run["emit_trajectory"] = True
    _validate_config(cfg)


# ----------------------------------------------------------------------
# bench: reference-table reproduction


def _bench_rosenbrock_index():
    rows = []
    for case, expected in (("i", 1), ("ii", 2), ("iii", 3), ("iv", 4)):
        oracle = bm.rosenbrock_oracle(bm.ROSENBROCK_CASES[case])
        record = classify_stationary_point(
            np.ones(4), lambda x, o=oracle: fd_jacobian_sym(o, x, 1e-5))
        rows.append((f"index({case})", expected, record.index, 0,
                     record.index == expected))
    return rows


def _bench_rosenbrock_sd():
    rows = []
    for case in ("i", "ii", "iii", "iv"):
        cfg = {"run": {"benchmark": "rosenbrock", "case": case}}
        setup = _Setup(cfg)
        oracle = setup.make_oracle()
        state, _ = setup.initial_state(oracle)
        result = run_sd(oracle, state, setup.sd)
        err = float(np.max(np.abs(result.final.x - 1.0)))
        rows.append((f"sd({case}) error", 0.0, err, 1e-2, err <= 1e-2))
        rows.append((f"sd({case}) N_f", None, result.N_f, None, True))
    return rows


def _bench_rosenbrock_gpsd(seeds):
    rows = []
    for case in ("i", "ii", "iii", "iv"):
        hits = 0
        queries = []
        for seed in range(seeds):
            cfg = {"run": {"benchmark": "rosenbrock", "case": case, "seed": seed}}
            setup = _Setup(cfg)
            oracle = setup.make_oracle()
            state, _ = setup.initial_state(oracle)
            try:
                result = run_gpsd(oracle, state, setup.gpsd_params())
            except (Diverged, FitFailure):
                continue
            err = float(np.max(np.abs(result.final.x - 1.0)))
            if result.status is RunStatus.CONVERGED and err <= 5e-2:
                hits += 1
                queries.append(result.N_f)
        med = float(np.median(queries)) if queries else float("nan")
        rows.append((f"gpsd({case}) hits/{seeds}", seeds * 0.8, hits, None,
                     hits >= int(np.ceil(0.8 * seeds))))
        rows.append((f"gpsd({case}) median N_f", None, med, None, True))
    return rows


def _bench_codesign(engine, seeds):
    rows = []
    for case in ("i", "ii", "iii"):
        cfg = {"run": {"benchmark": "codesign", "case": case}}
        setup = _Setup(cfg)
        if engine == "sd":
            oracle = setup.make_oracle()
            state, _ = setup.initial_state(oracle)
            result = run_sd(oracle, state, setup.sd)
            err = float(np.max(np.abs(result.final.x)))
            n_s = oracle.simulation_source.n_simulations
            rows.append((f"sd({case}) error", 0.0, err, 1e-2, err <= 1e-2))
            rows.append((f"sd({case}) N_s", None, n_s, None, True))
        else:
            hits, sims = 0, []
            for seed in range(seeds):
                cfg["run"]["seed"] = seed
                setup = _Setup(cfg)
                oracle = setup.make_oracle()
                state, _ = setup.initial_state(oracle)
                try:
                    result = run_gpsd(oracle, state, setup.gpsd_params())
                except (Diverged, FitFailure):
                    continue
                err = float(np.max(np.abs(result.final.x)))
                if result.status is RunStatus.CONVERGED and err <= 2e-2:
                    hits += 1
                    sims.append(oracle.simulation_source.n_simulations)
            med = float(np.median(sims)) if sims else float("nan")
            rows.append((f"gpsd({case}) hits/{seeds}", seeds * 0.7, hits, None,
                         hits >= int(np.ceil(0.7 * seeds))))
            rows.append((f"gpsd({case}) median N_s", None, med, None, True))
    return rows


def _bench_phasefield_sd():
    rows = []
    cfg = {"run": {"benchmark": "phasefield", "case": "i"}}
    setup = _Setup(cfg)
    oracle = setup.make_oracle()
    state, _ = setup.initial_state(oracle)
    try:
        result = run_sd(oracle, state, setup.sd)
        converged = result.status is RunStatus.CONVERGED
        u = result.final.x
        nonconstant = float(np.ptp(u)) > 1e-3
        resid = float(np.max(np.abs(oracle.peek(u))))
        record = classify_stationary_point(u, setup.verification_jacobian())
        ok = converged and nonconstant and resid <= 1e-4 and record.index == 1
        rows.append(("sd(i) index-1 saddle", 1, record.index if converged else None,
                     None, ok))
        rows.append(("sd(i) residual", 0.0, resid if converged else None, 1e-4,
                     converged and resid <= 1e-4))
    except (Diverged, FitFailure) as exc:
        rows.append(("sd(i) index-1 saddle", 1, f"failed: {type(exc).__name__}",
                     None, False))
    return rows


_BENCHES = {
    "rosenbrock-index": lambda args: _bench_rosenbrock_index(),
    "rosenbrock-sd": lambda args: _bench_rosenbrock_sd(),
    "rosenbrock-gpsd": lambda args: _bench_rosenbrock_gpsd(args.seeds),
    "codesign-sd": lambda args: _bench_codesign("sd", args.seeds),
    "codesign-gpsd": lambda args: _bench_codesign("gpsd", args.seeds),
    "phasefield-sd": lambda args: _bench_phasefield_sd(),
}


def _cmd_bench(args):
    if args.table not in _BENCHES:
        raise ConfigError(f"unknown bench table {args.table!r}; "
                          f"choose from {sorted(_BENCHES)}")
    rows = _BENCHES[args.table](args)
    width = max(len(r[0]) for r in rows)
    all_ok = True
    print(f"{'metric':<{width}}  {'reference':>12}  {'reproduced':>14}  "
          f"{'tol':>8}  verdict")
    for name, ref, got, tol, ok in rows:
        all_ok &= ok
        ref_s = "-" if ref is None else f"{ref:g}" if isinstance(ref, (int, float)) else str(ref)
        got_s = "-" if got is None else (f"{got:.6g}" if isinstance(got, (int, float)) else str(got))
        tol_s = "-" if tol is None else f"{tol:g}"
        print(f"{name:<{width}}  {ref_s:>12}  {got_s:>14}  {tol_s:>8}  "
              f"{'PASS' if ok else 'FAIL'}")
    return 0 if all_ok else 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="saddlescape",
        description="Index-k saddle search and solution landscapes for "
                    "black-box forces.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--benchmark", choices=sorted(_DEFAULTS))
        p.add_argument("--case")
        p.add_argument("--seed", type=int)
        p.add_argument("--k", type=int, help="target saddle index")
        p.add_argument("--output-dir", dest="output_dir")

    p_sd = sub.add_parser("sd", help="saddle dynamics on the true force")
    common(p_sd)
    p_sd.add_argument("--emit-trajectory", action="store_true")

    p_gpsd = sub.add_parser("gpsd", help="surrogate-based saddle dynamics")
    common(p_gpsd)
    p_gpsd.add_argument("--emit-trajectory", action="store_true")

    p_land = sub.add_parser("landscape", help="downward-search landscape")
    common(p_land)
    p_land.add_argument("--engine", choices=("sd", "gpsd"), default="sd")
    p_land.add_argument("--jobs", type=int, default=None)

    p_ver = sub.add_parser("verify-index", help="classify a stationary point")
    common(p_ver)
    p_ver.add_argument("--point", help="comma-separated coordinates")
    p_ver.add_argument("--point-file", help="JSON array of coordinates")

    p_bench = sub.add_parser("bench", help="reference-table reproduction")
    p_bench.add_argument("--table", required=True)
    p_bench.add_argument("--seeds", type=int, default=10)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sd":
            return _cmd_run(args, "sd")
        if args.command == "gpsd":
            return _cmd_run(args, "gpsd")
        if args.command == "landscape":
            return _cmd_landscape(args)
        if args.command == "verify-index":
            return _cmd_verify_index(args)
        if args.command == "bench":
            return _cmd_bench(args)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except SaddleSearchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
