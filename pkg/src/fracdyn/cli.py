"""Command-line front end: simulate, analyze, and report.

Subcommands
-----------
simulate      integrate a catalog system and write the trajectory CSV
lyapunov      exponent spectrum + stability report as a JSON document
dimension     box-counting dimension of a trajectory CSV point cloud
stability     equilibria, eigenvalue sector margins, and chaos criteria
mlf           evaluate the one/two-parameter Mittag-Leffler function
list-systems  one line per catalog system with defaults
reproduce     run the full pipeline for a documented benchmark case

Configuration precedence is flags > config document (--config JSON) >
catalog defaults.  All file writes are atomic (temp file + rename), JSON
reports carry ``schema_version`` and fixed field order, and repeated
identical invocations produce byte-identical files.  Exit codes: 0 on
success, 1 on domain errors, 2 on usage errors.  ``FRACDYN_THREADS`` caps
how many sub-analyses ``reproduce`` runs concurrently.
"""

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .chaos import (
    classify_attractor,
    dimension_instability_check,
    lyapunov_spectrum,
    stability_report,
)
from .errors import ConfigError, FracdynError
from .geometry import box_dimension
from .mlf import ml_two
from .solvers import (
    SolverConfig,
    read_trajectory_csv,
    solve,
    write_trajectory_csv,
)
from .systems import BENCHMARK_NAMES, BenchmarkId, make_system

__all__ = ["main", "build_parser"]

SCHEMA_VERSION = 1


# --------------------------------------------------------------- plumbing

def _atomic_write(path, text):
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)),
                               suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def _write_json(path, report):
    _atomic_write(path, json.dumps(_jsonable(report), indent=2) + "\n")


def _load_config_doc(path):
    if path is None:
        return {}
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError(f"config document {path!r} must hold an object")
    return doc


def _resolve(args, doc, key, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in doc:
        return doc[key]
    return default


def _usage_error(message):
    print(f"usage error: {message}", file=sys.stderr)
    return 2


def _parse_params(pairs, doc):
    params = dict(doc.get("params", {}))
    for pair in pairs or ():
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise ConfigError(f"--param needs NAME=VALUE, got {pair!r}")
        params[name] = float(value)
    return params


def _build_system(args, doc):
    name = _resolve(args, doc, "system")
    if name is None:
        return None, None
    params = _parse_params(getattr(args, "param", None), doc)
    alpha = _resolve(args, doc, "alpha")
    bid = BenchmarkId(name=name, params=params,
                      **({} if alpha is None else {"alpha": alpha}))
    return bid, make_system(bid)


def _parse_x0(text, system):
    values = np.array([float(v) for v in text.split(",")], dtype=float)
    if values.size == system.dim:
        return values
    if system.observables and values.size == 1:
        padded = np.zeros(system.dim)
        padded[0] = values[0]
        return padded
    raise ConfigError(
        f"x0 needs {system.dim} components for {system.name}, "
        f"got {values.size}")


def _solver_config(args, doc, system):
    x0 = _resolve(args, doc, "x0")
    if x0 is None:
        x0 = np.asarray(system.params["default_x0"], dtype=float)
    elif isinstance(x0, str):
        x0 = _parse_x0(x0, system)
    else:
        x0 = _parse_x0(",".join(repr(float(v)) for v in x0), system)
    kwargs = {}
    window = _resolve(args, doc, "memory_window")
    if window is not None:
        kwargs["memory_window"] = int(window)
    iters = _resolve(args, doc, "corrector_iters")
    if iters is not None:
        kwargs["corrector_iters"] = int(iters)
    return SolverConfig(
        alpha=float(system.params["default_alpha"]),
        h=float(_resolve(args, doc, "h", 0.005)),
        t_end=float(_resolve(args, doc, "t_end", 100.0)),
        x0=x0,
        t0=float(_resolve(args, doc, "t0", 0.0)),
        scheme=_resolve(args, doc, "scheme", "gl"),
        **kwargs,
    )


# --------------------------------------------------------------- commands

def _cmd_simulate(args):
    doc = _load_config_doc(args.config)
    bid, system = _build_system(args, doc)
    if system is None:
        return _usage_error("--system is required (flag or config document)")
    config = _solver_config(args, doc, system)
    traj = solve(system, config)
    write_trajectory_csv(traj, args.out)
    print(f"wrote {traj.t.size} rows for {system.name} "
          f"(alpha={config.alpha}, scheme={config.scheme}) to {args.out}")
    return 0


def _equilibrium_entries(report):
    entries = []
    for a in report.equilibria:
        entries.append({
            "point": a.equilibrium.point,
            "eigenvalues": list(a.equilibrium.eigenvalues),
            "margins": a.margins,
            "classification": a.classification,
            "spectral": {
                "flag": a.spectral.flag,
                "witnesses": list(a.spectral.witnesses),
                "threshold": a.spectral.threshold,
                "sign_split": a.spectral.sign_split,
            },
        })
    return entries


def _lyapunov_report(system, config, result, renorm_every, reset_blocks):
    stab = stability_report(system, config.alpha)
    equilibria = _equilibrium_entries(stab)
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "lyapunov",
        "system": system.name,
        "alpha": config.alpha,
        "settings": {
            "h": config.h,
            "t_end": config.t_end,
            "t0": config.t0,
            "scheme": config.scheme,
            "renorm_every": renorm_every,
            "history_reset_blocks": reset_blocks,
            "transient_discarded": result.transient_discarded,
        },
        "exponents": result.exponents,
        "d_ky": result.d_ky,
        "classification": classify_attractor(result),
        "converged": result.converged,
        "drift": result.drift,
        "equilibria": equilibria,
        "criteria": {
            "spectral_chaos": any(e["spectral"]["flag"] for e in equilibria),
            "dimension_instability": dimension_instability_check(
                result.d_ky, result.exponents.size),
        },
    }


def _cmd_lyapunov(args):
    doc = _load_config_doc(args.config)
    bid, system = _build_system(args, doc)
    if system is None:
        return _usage_error("--system is required (flag or config document)")
    config = _solver_config(args, doc, system)
    renorm = int(_resolve(args, doc, "renorm_every", 10))
    reset = _resolve(args, doc, "history_reset_blocks", 1)
    reset = None if reset in (None, "none") else int(reset)
    result = lyapunov_spectrum(
        system, config,
        renorm_every=renorm,
        transient=_resolve(args, doc, "transient"),
        history_reset_blocks=reset,
    )
    report = _lyapunov_report(system, config, result, renorm, reset)
    _write_json(args.out, report)
    lams = ", ".join(f"{v:.4f}" for v in result.exponents)
    print(f"{system.name}: exponents ({lams}), d_ky={result.d_ky:.4f}, "
          f"{report['classification']} -> {args.out}")
    return 0


def _parse_columns(text, dim):
    if text is None:
        return list(range(dim))
    cols = []
    for piece in text.split(","):
        idx = int(piece)
        if idx < 2 or idx > dim + 1:
            raise ConfigError(
                f"column {idx} out of range (2..{dim + 1}; column 1 is time)")
        cols.append(idx - 2)
    return cols


def _cmd_dimension(args):
    traj = read_trajectory_csv(args.input)
    cols = _parse_columns(args.columns, traj.x.shape[1])
    skip = int(round(args.transient * traj.x.shape[0]))
    pts = traj.x[skip:, cols]
    if pts.shape[0] == 0:
        raise ConfigError("transient fraction discards every row")
    kwargs = {}
    if args.eps_max is not None:
        kwargs["eps_max"] = args.eps_max
    if args.eps_min is not None:
        kwargs["eps_min"] = args.eps_min
    if args.levels is not None:
        kwargs["levels"] = args.levels
    res = box_dimension(pts, **kwargs)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "dimension",
        "input": args.input,
        "columns": [c + 2 for c in cols],
        "transient": args.transient,
        "n_points": pts.shape[0],
        "scales": res.scales,
        "counts": res.counts,
        "d_f": res.slope,
        "intercept": res.intercept,
        "r2": res.r2,
        "window": list(res.window),
    }
    _write_json(args.out, report)
    plot_out = args.plot_out
    if plot_out is None:
        stem = args.out[:-5] if args.out.endswith(".json") else args.out
        plot_out = stem + ".plot.txt"
    lines = ["# log(1/eps) logN"]
    for eps, count in zip(res.scales, res.counts):
        lines.append("%.17g %.17g" % (math.log(1.0 / eps), math.log(count)))
    _atomic_write(plot_out, "\n".join(lines) + "\n")
    print(f"d_f={res.slope:.4f} (r2={res.r2:.5f}, {pts.shape[0]} points) "
          f"-> {args.out}, {plot_out}")
    return 0


def _cmd_stability(args):
    doc = _load_config_doc(args.config)
    bid, system = _build_system(args, doc)
    if system is None:
        return _usage_error("--system is required (flag or config document)")
    alpha = float(_resolve(args, doc, "sector_alpha",
                           system.params["default_alpha"]))
    rep = stability_report(system, alpha, t=args.t)
    equilibria = _equilibrium_entries(rep)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "stability",
        "system": system.name,
        "alpha": alpha,
        "equilibria": equilibria,
        "criteria": {
            "spectral_chaos": any(e["spectral"]["flag"] for e in equilibria),
        },
    }
    if args.out:
        _write_json(args.out, report)
    n_stable = sum(e["classification"] == "stable" for e in equilibria)
    print(f"{system.name} at alpha={alpha}: {len(equilibria)} equilibria, "
          f"{n_stable} stable, spectral_chaos="
          f"{report['criteria']['spectral_chaos']}"
          + (f" -> {args.out}" if args.out else ""))
    return 0


def _cmd_mlf(args):
    z = complex(args.z)
    value = ml_two(args.alpha, args.beta, z)
    value = complex(value)
    if args.out:
        _write_json(args.out, {
            "schema_version": SCHEMA_VERSION,
            "command": "mlf",
            "alpha": args.alpha,
            "beta": args.beta,
            "z": z,
            "value": value,
        })
    shown = value.real if value.imag == 0.0 else value
    print(f"E_[{args.alpha},{args.beta}]({args.z}) = {shown}")
    return 0


def _cmd_list_systems(args):
    for name in BENCHMARK_NAMES:
        bid = BenchmarkId(name=name)
        system = make_system(bid)
        if isinstance(bid.alpha, tuple):
            alpha = ",".join(repr(a) for a in bid.alpha)
        else:
            alpha = repr(bid.alpha)
        params = " ".join(f"{k}={bid.params[k]!r}" for k in bid.params)
        print(f"{name}  {system.dim}  {alpha}  {params}")
    return 0


# --------------------------------------------------------------- reproduce

_EXAMPLES = {
    1: {"system": "lorenz", "h": 0.005, "t_end": 500.0, "renorm_every": 20},
    2: {"system": "duffing", "h": 0.01, "t_end": 300.0, "renorm_every": 10},
    3: {"system": "chen", "h": 0.002, "t_end": 200.0, "renorm_every": 20},
    4: {"system": "rossler", "h": 0.005, "t_end": 500.0, "renorm_every": 20},
    5: {"system": "chua", "h": 0.002, "t_end": 200.0, "renorm_every": 20},
}

# documented target values and qualitative claims per benchmark case
_CLAIMS = {
    1: [("classification", "strange"), ("d_ky_in", (2.0, 3.0))],
    2: [("lambda", 0, 0.143), ("lambda", 1, -0.245), ("d_ky_near", 1.584)],
    3: [("sign_pattern", None), ("d_ky_noninteger", None)],
    4: [("sign_pattern", None), ("d_ky_noninteger", None)],
    5: [("sign_pattern", None), ("d_ky_noninteger", None)],
}


def _verdict_rows(example_id, result, classification):
    lam = result.exponents
    rows = []
    for claim in _CLAIMS[example_id]:
        kind = claim[0]
        if kind == "classification":
            expected = claim[1]
            verdict = "pass" if classification == expected else "fail"
            rows.append(("classification", expected, classification, verdict))
        elif kind == "d_ky_in":
            lo, hi = claim[1]
            inside = lo < result.d_ky < hi
            noninteger = abs(result.d_ky - round(result.d_ky)) > 0.01
            verdict = "pass" if inside and noninteger else "fail"
            rows.append(("kaplan-yorke dimension",
                         f"non-integer in ({lo}, {hi})",
                         f"{result.d_ky:.4f}", verdict))
        elif kind == "lambda":
            idx, target = claim[1], claim[2]
            got = lam[idx] if idx < lam.size else float("nan")
            err = abs(got - target)
            if err <= max(0.02, 0.1 * abs(target)):
                verdict = "pass"
            elif err <= 0.15:
                verdict = "soft-pass"
            else:
                verdict = "fail"
            rows.append((f"exponent {idx + 1}", f"{target:+.3f}",
                         f"{got:+.4f}", verdict))
        elif kind == "d_ky_near":
            target = claim[1]
            err = abs(result.d_ky - target)
            verdict = ("pass" if err <= 0.05
                       else "soft-pass" if err <= 0.15 else "fail")
            rows.append(("kaplan-yorke dimension", f"{target:.3f}",
                         f"{result.d_ky:.4f}", verdict))
        elif kind == "sign_pattern":
            l1, l2, l3 = lam[0], lam[1], lam[-1]
            if l1 > 0.01 and abs(l2) <= 0.05 and l3 < -0.01:
                verdict = "pass"
            elif l1 > 0.0 and l3 < 0.0 and abs(l2) <= 0.1:
                verdict = "soft-pass"
            else:
                verdict = "fail"
            rows.append(("exponent signs", "+, 0, -",
                         ", ".join(f"{v:+.4f}" for v in lam), verdict))
        elif kind == "d_ky_noninteger":
            ok = result.d_ky > 0.0 and \
                abs(result.d_ky - round(result.d_ky)) > 0.01
            rows.append(("kaplan-yorke dimension", "non-integer",
                         f"{result.d_ky:.4f}", "pass" if ok else "fail"))
    return rows


def _format_table(example_id, system_name, rows):
    width = (max(len(r[0]) for r in rows) + 2,
             max(len(r[1]) for r in rows) + 2,
             max(len(r[2]) for r in rows) + 2)
    lines = [f"benchmark case {example_id} ({system_name}): "
             "computed vs documented values",
             "{:<{w0}}{:<{w1}}{:<{w2}}verdict".format(
                 "claim", "expected", "computed",
                 w0=width[0], w1=width[1], w2=width[2])]
    for name, expected, computed, verdict in rows:
        lines.append("{:<{w0}}{:<{w1}}{:<{w2}}{}".format(
            name, expected, computed, verdict,
            w0=width[0], w1=width[1], w2=width[2]))
    return "\n".join(lines) + "\n"


def _cmd_reproduce(args):
    example_id = args.example
    if example_id not in _EXAMPLES:
        return _usage_error(f"example must be 1..5, got {example_id}")
    spec = dict(_EXAMPLES[example_id])
    if args.h is not None:
        spec["h"] = args.h
    if args.t_end is not None:
        spec["t_end"] = args.t_end
    os.makedirs(args.out_dir, exist_ok=True)

    bid = BenchmarkId(name=spec["system"])
    system = make_system(bid)
    config = SolverConfig(
        alpha=float(system.params["default_alpha"]),
        h=spec["h"],
        t_end=spec["t_end"],
        x0=np.asarray(system.params["default_x0"], dtype=float),
    )
    traj = solve(system, config)
    write_trajectory_csv(traj, os.path.join(args.out_dir, "trajectory.csv"))

    threads = int(os.environ.get("FRACDYN_THREADS", os.cpu_count() or 1))
    renorm = spec["renorm_every"]

    def run_lyapunov():
        return lyapunov_spectrum(system, config, renorm_every=renorm,
                                 base_trajectory=traj)

    def run_dimension():
        rows = traj.x.shape[0]
        pts = traj.x[int(0.2 * rows):, list(system.observables or
                                            range(system.dim))]
        return box_dimension(pts)

    def run_stability():
        return stability_report(system, config.alpha)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        f_lyap = pool.submit(run_lyapunov)
        f_dim = pool.submit(run_dimension)
        f_stab = pool.submit(run_stability)
        result = f_lyap.result()
        dim_res = f_dim.result()
        stab = f_stab.result()

    report = _lyapunov_report(system, config, result, renorm, 1)
    _write_json(os.path.join(args.out_dir, "lyapunov.json"), report)
    _write_json(os.path.join(args.out_dir, "dimension.json"), {
        "schema_version": SCHEMA_VERSION,
        "command": "dimension",
        "system": system.name,
        "d_f": dim_res.slope,
        "r2": dim_res.r2,
        "scales": dim_res.scales,
        "counts": dim_res.counts,
        "window": list(dim_res.window),
    })
    equilibria = _equilibrium_entries(stab)
    _write_json(os.path.join(args.out_dir, "stability.json"), {
        "schema_version": SCHEMA_VERSION,
        "command": "stability",
        "system": system.name,
        "alpha": config.alpha,
        "equilibria": equilibria,
        "criteria": {
            "spectral_chaos": any(e["spectral"]["flag"] for e in equilibria),
        },
    })
    rows = _verdict_rows(example_id, result, report["classification"])
    _format = _format_table(example_id, system.name, rows)
    _atomic_write(os.path.join(args.out_dir, "comparison.txt"), _format)

    verdicts = [r[3] for r in rows]
    print(f"case {example_id} ({system.name}): 4 artifacts in "
          f"{args.out_dir}; claims: {verdicts.count('pass')} pass, "
          f"{verdicts.count('soft-pass')} soft-pass, "
          f"{verdicts.count('fail')} fail")
    return 0


# ------------------------------------------------------------------ parser

def _add_system_flags(sp):
    sp.add_argument("--system", help="catalog system name (see list-systems)")
    sp.add_argument("--config", help="JSON document supplying flag defaults")
    sp.add_argument("--param", action="append", metavar="NAME=VALUE",
                    help="override one system parameter (repeatable)")
    sp.add_argument("--alpha", type=float,
                    help="derivative order (default: catalog value)")


def _add_solver_flags(sp):
    sp.add_argument("--h", type=float, help="step size (default 0.005)")
    sp.add_argument("--t-end", type=float, dest="t_end",
                    help="integration horizon (default 100)")
    sp.add_argument("--t0", type=float, help="start time (default 0)")
    sp.add_argument("--x0", help="comma-separated initial state")
    sp.add_argument("--scheme", choices=["gl", "abm"],
                    help="integration scheme (default gl)")
    sp.add_argument("--memory-window", type=int, dest="memory_window",
                    help="history truncation length (default: full memory)")
    sp.add_argument("--corrector-iters", type=int, dest="corrector_iters",
                    help="corrector sweeps for the abm scheme (default 1)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fracdyn",
        description="Simulate fractional-order systems and quantify chaos. "
                    "Flag precedence: command line > --config document > "
                    "catalog defaults.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="integrate and write trajectory CSV")
    _add_system_flags(sp)
    _add_solver_flags(sp)
    sp.add_argument("--out", required=True, help="output CSV path")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("lyapunov", help="exponent spectrum JSON report")
    _add_system_flags(sp)
    _add_solver_flags(sp)
    sp.add_argument("--renorm-every", type=int, dest="renorm_every",
                    help="steps between orthonormalizations (default 10)")
    sp.add_argument("--transient", type=float,
                    help="time discarded before accumulation (default 20%%)")
    sp.add_argument("--history-reset-blocks", dest="history_reset_blocks",
                    help="blocks between tangent-history restarts "
                         "(integer or 'none'; default 1)")
    sp.add_argument("--out", required=True, help="output JSON path")
    sp.set_defaults(func=_cmd_lyapunov)

    sp = sub.add_parser("dimension",
                        help="box-counting dimension of a trajectory CSV")
    sp.add_argument("--input", required=True, help="trajectory CSV path")
    sp.add_argument("--columns",
                    help="1-based CSV columns to use (column 1 is time; "
                         "default: all state columns)")
    sp.add_argument("--transient", type=float, default=0.0,
                    help="fraction of leading rows to discard (default 0)")
    sp.add_argument("--eps-max", type=float, dest="eps_max",
                    help="largest scale (default extent/4)")
    sp.add_argument("--eps-min", type=float, dest="eps_min",
                    help="smallest scale (default extent/4096)")
    sp.add_argument("--levels", type=int, help="ladder size (default 12)")
    sp.add_argument("--out", required=True, help="output JSON path")
    sp.add_argument("--plot-out", dest="plot_out",
                    help="two-column log-log data path "
                         "(default: OUT with .plot.txt suffix)")
    sp.set_defaults(func=_cmd_dimension)

    sp = sub.add_parser("stability",
                        help="equilibria and eigenvalue criteria report")
    _add_system_flags(sp)
    sp.add_argument("--sector-alpha", type=float, dest="sector_alpha",
                    help="order for the sector test (default: system order)")
    sp.add_argument("--t", type=float, default=0.0,
                    help="time at which forced fields are frozen (default 0)")
    sp.add_argument("--out", help="optional output JSON path")
    sp.set_defaults(func=_cmd_stability)

    sp = sub.add_parser("mlf", help="evaluate E_[alpha,beta](z)")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--beta", type=float, default=1.0)
    sp.add_argument("--z", required=True,
                    help="argument, real or complex ('1.5', '-2+0.5j')")
    sp.add_argument("--out", help="optional output JSON path")
    sp.set_defaults(func=_cmd_mlf)

    sp = sub.add_parser("list-systems", help="print the system catalog")
    sp.set_defaults(func=_cmd_list_systems)

    sp = sub.add_parser("reproduce",
                        help="full pipeline for one documented case (1-5)")
    sp.add_argument("example", type=int, help="case number, 1-5")
    sp.add_argument("--out-dir", required=True, dest="out_dir")
    sp.add_argument("--h", type=float, help="override the documented step")
    sp.add_argument("--t-end", type=float, dest="t_end",
                    help="override the documented horizon")
    sp.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FracdynError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
