"""Command-line entry point: ``micropolar <subcommand> [options]``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .decay import ExperimentSpec, comparison_table, fit_power_law, run_decay_experiment
from .gevrey import radius_fit
from .linear import asymptotics_report
from .littlewood_paley import BesovSpec, DyadicPartition, NormSeries, besov_norm, block_table, write_block_table
from .solver import InitialData, SolverConfig, simulate
from .spectral import Grid3, Viscosities, load_snapshot, save_snapshot
from .verify import verify

log = logging.getLogger("micropolar")


# ---------------------------------------------------------------------------
# config files: flat ``key = value`` lines, ``#`` comments

def read_config(path) -> dict[str, str]:
    cfg = {}
    if path is None:
        return cfg
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (x.strip() for x in line.split("=", 1))
        cfg[key] = value
    return cfg


def _num(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "infinity"):
        return np.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _pairs(text: str) -> list[tuple[float, float]]:
    out = []
    for item in text.replace(",", " ").split():
        l, r = item.split(":")
        out.append((float(l), float(r)))
    return out


def grid_from(cfg: dict) -> Grid3:
    return Grid3(int(cfg.get("grid.n", 32)), float(cfg.get("grid.L", 2 * np.pi)))


def visc_from(cfg: dict) -> Viscosities:
    d = Viscosities.normalized()
    return Viscosities(*(float(cfg.get(f"visc.{k}", getattr(d, k))) for k in ("nu", "chi", "mu", "kappa")))


def solver_config_from(cfg: dict) -> SolverConfig:
    t_end = float(cfg.get("solver.t_end", 1.0))
    snaps = _floats(cfg.get("snapshots.times", str(t_end)))
    norm_times = _floats(cfg["norms.times"]) if "norms.times" in cfg else None
    return SolverConfig(
        dt=float(cfg.get("solver.dt", 0.01)),
        t_end=t_end,
        integrator=cfg.get("solver.integrator", "if_rk4"),
        visc=visc_from(cfg),
        snapshot_times=snaps,
        norm_times=norm_times,
        norm_requests=_pairs(cfg.get("norms.requests", "0:2")),
        j0=int(cfg.get("norms.j0", 0)),
        nonlinear=bool(_num(cfg.get("solver.nonlinear", "true"))),
    )


def initial_from(cfg: dict, seed: int) -> InitialData:
    kind = cfg.get("init.kind", "taylor_green")
    params = {k[len("init.params."):]: _num(v) for k, v in cfg.items() if k.startswith("init.params.")}
    if kind == "random_slope":
        params.setdefault("seed", seed)
        if "band" in params:
            params["band"] = tuple(_floats(str(cfg["init.params.band"])))
    return InitialData(kind, params)


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args, cfg) -> dict:
    grid = grid_from(cfg)
    config = solver_config_from(cfg)
    state = initial_from(cfg, args.seed).build(grid)
    res = simulate(state, config)
    out = Path(args.out_dir)
    res.series.to_csv(out / "norms.csv")
    files = []
    for snap in res.snapshots:
        path = out / f"snapshot_t{snap.time:.6g}.mps"
        save_snapshot(snap, path, config.visc)
        files.append(str(path))
    return {"norms": str(out / "norms.csv"), "snapshots": files, "growth_factor": res.growth_factor,
            "steps": res.steps, "passed": True}


def cmd_analyze_besov(args, cfg) -> dict:
    state = load_snapshot(args.snapshot)
    part = DyadicPartition(state.grid)
    f = state.u if args.field == "u" else state.omega
    f = f.copy()
    f[:, 0, 0, 0] = 0.0
    spec = BesovSpec(args.s, args.p, args.q, args.j0)
    rows = block_table(part, f, spec)
    path = Path(args.out_dir) / f"besov_{args.field}.csv"
    write_block_table(path, rows)
    rep = {"norm": besov_norm(part, f, spec), "table": str(path), "passed": True}
    if args.j0 is not None:
        rep["low"] = besov_norm(part, f, spec, "low")
        rep["high"] = besov_norm(part, f, spec, "high")
    return rep


def cmd_linear_spectrum(args, cfg) -> dict:
    visc = visc_from(cfg)
    xi = np.geomspace(args.xi_min, args.xi_max, args.points)
    rep = asymptotics_report(visc, xi)
    path = Path(args.out_dir) / "linear_spectrum.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi", "lambda_plus", "lambda_minus", "ratio_lowfreq", "ratio_highfreq"])
        for row in zip(xi, rep["lambda_plus"], rep["lambda_minus"], rep["ratio_minus_low"], rep["ratio_product_high"]):
            w.writerow([repr(float(x)) for x in row])
    return {"csv": str(path), "checks": rep["checks"], "passed": rep["passed"]}


def cmd_decay_fit(args, cfg) -> dict:
    if args.series:
        series = NormSeries.from_csv(args.series)
        window = tuple(args.window) if args.window else (series.times[0], series.times[-1])
        fit = fit_power_law(series, args.label, window)
        return {"label": args.label, "exponent": fit.exponent, "stderr": fit.stderr, "window": list(fit.window),
                "n_points": fit.n_points, "passed": True}
    window = tuple(args.window) if args.window else tuple(_floats(cfg.get("decay.window", "1 50")))
    spec = ExperimentSpec(
        config=SolverConfig(
            dt=float(cfg.get("solver.dt", 0.1)),
            t_end=window[1],
            integrator=cfg.get("solver.integrator", "if_rk4"),
            visc=visc_from(cfg),
            j0=int(cfg.get("norms.j0", 0)),
            nonlinear=bool(_num(cfg.get("solver.nonlinear", "false"))),
        ),
        sigma=float(cfg.get("decay.sigma", 1.5)),
        p=float(cfg.get("decay.p", 2.0)),
        r_values=_floats(cfg.get("decay.r", "2")),
        derivative_orders=_floats(cfg.get("decay.l", "0")),
        fit_window=window,
        repetitions=int(cfg.get("decay.repetitions", 5)),
        amplitude=float(cfg.get("decay.amplitude", 1e-2)),
        n=int(cfg.get("grid.n", 128)),
        L=float(cfg.get("grid.L", 32 * np.pi)),
        seed=args.seed,
        samples=int(cfg.get("decay.samples", 40)),
    )
    rep = run_decay_experiment(spec)
    rows = comparison_table(rep)
    path = Path(args.out_dir) / "decay_fits.csv"
    if rows:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    rep["csv"] = str(path)
    return rep


def _shells(text: str) -> tuple[int, int]:
    lo, hi = text.split("..")
    return int(lo), int(hi)


def cmd_gevrey_radius(args, cfg) -> dict:
    state = load_snapshot(args.snapshot)
    f = state.u if args.field == "u" else state.omega
    fit = radius_fit(state.grid, f, _shells(args.shells))
    return {"radius": fit.radius_estimate, "residual": fit.residual, "window": list(fit.fit_window), "passed": True}


def cmd_verify(args, cfg) -> dict:
    return verify(args.suite, seed=args.seed)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="micropolar", description="Pseudo-spectral micropolar laboratory")
    parser.add_argument("--config", type=str, default=None, help="key = value configuration file")
    parser.add_argument("--out-dir", type=str, default=".", help="directory for CSV / snapshot output")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", action="store_true", help="print a JSON summary on stdout")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", help="run the solver from a config file")

    p = sub.add_parser("analyze-besov", help="dyadic block table and Besov norm of a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--field", choices=["u", "omega"], default="u")
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--j0", type=int, default=None)

    p = sub.add_parser("linear-spectrum", help="eigenvalues of the linear symbol")
    p.add_argument("--xi-min", type=float, default=1e-3)
    p.add_argument("--xi-max", type=float, default=1e3)
    p.add_argument("--points", type=int, default=121)

    p = sub.add_parser("decay-fit", help="fit a NormSeries CSV or run a decay experiment")
    p.add_argument("--series", type=str, default=None)
    p.add_argument("--label", type=str, default="u:0:2")
    p.add_argument("--window", type=float, nargs=2, default=None)

    p = sub.add_parser("gevrey-radius", help="analyticity radius of a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--shells", type=str, default="2..10", help="integer shell range lo..hi")
    p.add_argument("--field", choices=["u", "omega"], default="u")

    p = sub.add_parser("verify", help="run invariant suites")
    p.add_argument("--suite", choices=["core", "lp", "linear", "solver", "gevrey", "all"], default="all")
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "analyze-besov": cmd_analyze_besov,
    "linear-spectrum": cmd_linear_spectrum,
    "decay-fit": cmd_decay_fit,
    "gevrey-radius": cmd_gevrey_radius,
    "verify": cmd_verify,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    try:
        report = _COMMANDS[args.command](args, read_config(args.config))
    except (ValueError, OSError, RuntimeError) as exc:
        report = {"passed": False, "error": f"{type(exc).__name__}: {exc}"}
        print(report["error"], file=sys.stderr)
    report.pop("series", None)
    if args.json:
        print(json.dumps(_jsonable(report), indent=2))
    else:
        for key, value in report.items():
            # tables go to CSV / --json; print scalars and flat values only
            nested = isinstance(value, dict) and any(isinstance(v, dict) for v in value.values())
            table = isinstance(value, list) and value and isinstance(value[0], dict)
            if not (nested or table):
                print(f"{key}: {value}")
    return 0 if report.get("passed", False) else 1


if __name__ == "__main__":
    sys.exit(main())
