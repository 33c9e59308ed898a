"""Command-line front end: flat key=value configs, flag overrides, and
deterministic artifact emission for every experiment in the package.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .disorder import SmallWorldExp
from .dispersion import (
    DispersionParams,
    classify_regime,
    curve_to_csv,
    hopf_curve_fixed_a,
    hopf_curve_fixed_beta,
    rightmost_root,
)
from .grid import InitialCondition, SimConfig
from .harness import annealed_convergence, chaos_pairs, quenched_convergence
from .meanfield import build_quadrature, moments_to_csv, picard_meanfield, simulate_moments
from .model import ConfigurationError, SimulationDiverged, single_population_model
from .netsim import simulate_network, trajectory_to_csv

COMMANDS = (
    "simulate-network",
    "simulate-moments",
    "picard",
    "hopf-curve",
    "dispersion-root",
    "classify",
    "converge",
    "chaos-pairs",
)

# key -> (type tag, default); None default means the key must be set either
# in the file or on the command line before a command may use it.
_INT, _FLOAT, _STR, _INTS = "int", "float", "str", "ints"
KEY_SPECS = {
    "theta": (_FLOAT, None),
    "lambda": (_FLOAT, None),
    "j_bar": (_FLOAT, None),
    "a": (_FLOAT, 1.0),
    "beta": (_FLOAT, 0.0),
    "tau_s": (_FLOAT, 1.0),
    "n": (_INT, 1000),
    "dt": (_FLOAT, 0.01),
    "t_end": (_FLOAT, 10.0),
    "disorder_seed": (_INT, 0),
    "noise_seed": (_INT, 0),
    "root_seed": (_INT, 0),
    "stride": (_INT, 1),
    "jobs": (_INT, os.cpu_count() or 1),
    "out": (_STR, "out"),
    "fix_beta": (_FLOAT, ""),
    "fix_a": (_FLOAT, ""),
    "ns": (_INTS, (100, 200, 400, 800)),
    "trials": (_INT, 8),
    "panels": (_INT, 64),
    "m": (_INT, 1000),
    "iters": (_INT, 6),
    "mode": (_STR, "quenched"),
    "beta_max": (_FLOAT, 1.0),
    "grid_points": (_INT, 200),
    "init_mean": (_FLOAT, 0.0),
    "init_var": (_FLOAT, 0.0),
    "slope_min": (_FLOAT, -1.3),
    "slope_max": (_FLOAT, -0.7),
}
REQUIRED = ("j_bar", "theta", "lambda")


class RunConfig(dict):
    """Resolved key/value map for one command invocation."""

    command = None


def _parse_value(key, raw):
    kind, _ = KEY_SPECS[key]
    raw = raw.strip()
    try:
        if kind == _INT:
            return int(raw)
        if kind == _FLOAT:
            return "" if raw == "" else float(raw)
        if kind == _INTS:
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
        return raw
    except ValueError:
        raise ConfigurationError(f"bad value for key {key}: {raw!r}")


def _read_config_file(path):
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in KEY_SPECS:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key}")
            values[key] = _parse_value(key, raw)
    return values


def parse_config(command, config_path=None, overrides=None):
    """Resolve defaults, then file values, then flag overrides; reject
    unknown keys and missing required keys."""
    if command not in COMMANDS:
        raise ConfigurationError(f"unknown command {command}")
    cfg = RunConfig((k, d) for k, (_, d) in KEY_SPECS.items())
    cfg.command = command
    if config_path:
        cfg.update(_read_config_file(config_path))
    for key, raw in (overrides or {}).items():
        if key not in KEY_SPECS:
            raise ConfigurationError(f"unknown key {key}")
        if raw is not None:
            cfg[key] = _parse_value(key, raw) if isinstance(raw, str) else raw
    for key in REQUIRED:
        if cfg[key] is None:
            raise ConfigurationError(f"missing required key {key}")
    return cfg


def emit_config(cfg, path):
    """Round-trip-parseable echo of the fully resolved configuration."""
    with open(path, "w") as f:
        for key in KEY_SPECS:
            val = cfg[key]
            if val is None or val == "":
                continue
            if isinstance(val, tuple):
                val = ",".join(str(v) for v in val)
            elif isinstance(val, float):
                val = repr(val)
            f.write(f"{key} = {val}\n")


def _law(cfg):
    return SmallWorldExp(
        a=cfg["a"], beta=cfg["beta"], tau_s=cfg["tau_s"], j_bar=cfg["j_bar"]
    )


def _model(cfg, count=1):
    return single_population_model(
        theta=cfg["theta"], lam=cfg["lambda"], j_bar=cfg["j_bar"], count=count
    )


def _simcfg(cfg, seed_key="noise_seed"):
    kind = "gaussian" if cfg["init_var"] > 0 else "constant"
    init = InitialCondition(kind, cfg["init_mean"], cfg["init_var"])
    return SimConfig(dt=cfg["dt"], t_end=cfg["t_end"], seed=cfg[seed_key], initial=init)


def _disp_params(cfg, **replace):
    p = DispersionParams(
        theta=cfg["theta"], j_bar=cfg["j_bar"], lam=cfg["lambda"],
        a=cfg["a"], beta=cfg["beta"], tau_s=cfg["tau_s"],
    )
    return p.replace(**replace) if replace else p


def _plot_script(path, csv_name, title, xlabel, ylabel, using="1:2"):
    with open(path, "w") as f:
        f.write("set datafile separator ','\n")
        f.write(f"set title '{title}'\n")
        f.write(f"set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n")
        f.write(f"plot '{csv_name}' using {using} with lines notitle\n")


def _cmd_simulate_network(cfg, out):
    from .disorder import sample_realization

    real = sample_realization(_law(cfg), cfg["n"], cfg["disorder_seed"])
    traj = simulate_network(_model(cfg, cfg["n"]), real, _simcfg(cfg))
    csv = os.path.join(out, "trajectory.csv")
    trajectory_to_csv(traj, csv, stride=cfg["stride"])
    _plot_script(
        os.path.join(out, "trajectory.gp"), "trajectory.csv",
        "population mean", "t", "mean", using="1:2",
    )
    return 0


def _cmd_simulate_moments(cfg, out):
    quad = build_quadrature(_law(cfg), cfg["panels"])
    traj = simulate_moments(
        _model(cfg), quad, _simcfg(cfg), init=(cfg["init_mean"], cfg["init_var"])
    )
    csv = os.path.join(out, "moments.csv")
    moments_to_csv(traj, csv)
    _plot_script(
        os.path.join(out, "moments.gp"), "moments.csv",
        "mean-field moments", "t", "u", using="1:2",
    )
    return 0


def _cmd_picard(cfg, out):
    res = picard_meanfield(
        _model(cfg), _law(cfg), m=cfg["m"], iters=cfg["iters"],
        cfg=_simcfg(cfg), n_panels=cfg["panels"],
    )
    with open(os.path.join(out, "picard_moments.csv"), "w") as f:
        f.write("t,u,v\n")
        for t, u, v in zip(res.times, res.u, res.v):
            f.write(f"{float(t)!r},{float(u)!r},{float(v)!r}\n")
    with open(os.path.join(out, "contraction.csv"), "w") as f:
        f.write("iteration,distance\n")
        for i, d in enumerate(res.distances, 1):
            f.write(f"{i},{float(d)!r}\n")
    return 0


def _cmd_hopf_curve(cfg, out):
    fix_beta, fix_a = cfg["fix_beta"], cfg["fix_a"]
    if (fix_beta == "") == (fix_a == ""):
        raise ConfigurationError("hopf-curve needs exactly one of fix_beta / fix_a")
    if fix_beta != "":
        curve = hopf_curve_fixed_beta(fix_beta, _disp_params(cfg, beta=fix_beta))
        xlabel = "a"
    else:
        grid = np.linspace(0.0, cfg["beta_max"], cfg["grid_points"])
        curve = hopf_curve_fixed_a(fix_a, _disp_params(cfg, a=fix_a), grid)
        xlabel = "beta"
    curve_to_csv(curve, os.path.join(out, "hopf_curve.csv"))
    col = "1:3" if xlabel == "a" else "2:3"
    _plot_script(
        os.path.join(out, "hopf_curve.gp"), "hopf_curve.csv",
        "oscillation onset", xlabel, "tau_s", using=col,
    )
    if curve.subcritical:
        print("sub-critical gain: no oscillation onset at any frequency")
    return 0


def _cmd_dispersion_root(cfg, out):
    root, ok = rightmost_root(_disp_params(cfg))
    if not ok:
        print("root search did not converge from any seed")
        return 1
    from .dispersion import dispersion_residual

    res = float(abs(dispersion_residual(root, _disp_params(cfg))))
    re, im = float(root.real), float(root.imag)
    with open(os.path.join(out, "root.csv"), "w") as f:
        f.write("re,im,residual\n")
        f.write(f"{re!r},{im!r},{res!r}\n")
    print(f"rightmost root: {re!r} + {im!r}i (|residual| {res:.3e})")
    return 0


def _cmd_classify(cfg, out):
    report = classify_regime(_disp_params(cfg), n_panels=cfg["panels"])
    blob = ",".join(f"{k}={cfg[k]}" for k in sorted(KEY_SPECS))
    phash = hashlib.sha256(blob.encode()).hexdigest()[:12]
    with open(os.path.join(out, "classification.csv"), "w") as f:
        f.write("param_hash,methodA,methodB,agree\n")
        f.write(
            f"{phash},{'oscillatory' if report.oscillatory_roots else 'stationary'},"
            f"{'oscillatory' if report.oscillatory_sim else 'stationary'},"
            f"{str(report.agree).lower()}\n"
        )
    print(report.regime)
    return 0


def _cmd_converge(cfg, out):
    runner = {"quenched": quenched_convergence, "annealed": annealed_convergence}.get(
        cfg["mode"]
    )
    if runner is None:
        raise ConfigurationError(f"mode must be quenched or annealed, got {cfg['mode']}")
    report = runner(
        _law(cfg), _model(cfg), ns=cfg["ns"], trials=cfg["trials"],
        root_seed=cfg["root_seed"], cfg=_simcfg(cfg), jobs=cfg["jobs"],
    )
    report.to_csv(os.path.join(out, "convergence.csv"))
    summary = report.summary_json((cfg["slope_min"], cfg["slope_max"]))
    print(summary)
    return 0 if json.loads(summary)["pass"] else 1


def _cmd_chaos_pairs(cfg, out):
    report = chaos_pairs(
        _law(cfg), _model(cfg), ns=cfg["ns"], trials=cfg["trials"],
        root_seed=cfg["root_seed"], cfg=_simcfg(cfg), jobs=cfg["jobs"],
    )
    report.to_csv(os.path.join(out, "chaos_pairs.csv"))
    return 0


_DISPATCH = {
    "simulate-network": _cmd_simulate_network,
    "simulate-moments": _cmd_simulate_moments,
    "picard": _cmd_picard,
    "hopf-curve": _cmd_hopf_curve,
    "dispersion-root": _cmd_dispersion_root,
    "classify": _cmd_classify,
    "converge": _cmd_converge,
    "chaos-pairs": _cmd_chaos_pairs,
}

_FLAG_TO_KEY = {
    "--config": None,
    "--theta": "theta",
    "--lambda": "lambda",
    "--j-bar": "j_bar",
    "--a": "a",
    "--beta": "beta",
    "--tau-s": "tau_s",
    "--n": "n",
    "--dt": "dt",
    "--t-end": "t_end",
    "--disorder-seed": "disorder_seed",
    "--noise-seed": "noise_seed",
    "--root-seed": "root_seed",
    "--stride": "stride",
    "--jobs": "jobs",
    "--out": "out",
    "--fix-beta": "fix_beta",
    "--fix-a": "fix_a",
    "--ns": "ns",
    "--trials": "trials",
    "--panels": "panels",
    "--m": "m",
    "--iters": "iters",
    "--mode": "mode",
    "--beta-max": "beta_max",
    "--grid-points": "grid_points",
    "--init-mean": "init_mean",
    "--init-var": "init_var",
    "--slope-min": "slope_min",
    "--slope-max": "slope_max",
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="delaynet",
        description="delayed stochastic networks: simulation and analysis",
    )
    parser.add_argument("command", choices=COMMANDS)
    for flag, key in _FLAG_TO_KEY.items():
        if flag == "--config":
            parser.add_argument("--config", default=None, metavar="PATH")
        else:
            parser.add_argument(flag, dest=f"key_{key}", default=None, metavar="V")
    return parser


def run(cfg):
    """Dispatch a resolved configuration; returns the process exit code."""
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    emit_config(cfg, os.path.join(out, "resolved.config"))
    return _DISPATCH[cfg.command](cfg, out)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    overrides = {
        key: getattr(args, f"key_{key}")
        for key in KEY_SPECS
        if getattr(args, f"key_{key}", None) is not None
    }
    try:
        cfg = parse_config(args.command, args.config, overrides)
        code = run(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SimulationDiverged as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
