"""Command-line front end: synth / eval / sweep.

Exit codes: 0 success, 2 configuration or parsing error, 3 numerical failure,
4 infeasible dual parameter.  Failures emit a single machine-readable JSON
record on stderr.  CSV outputs are deterministic for a fixed configuration
and seed; files are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import io as drro_io
from .baselines import h2_controller, import_controller, ro_limit_controller
from .context import PlantContext, prepare_plant
from .errors import (
    DimensionMismatch,
    DisturbanceNotScalar,
    DrroError,
    GammaInfeasible,
    GridMismatch,
    NotStabilizable,
    ParseError,
)
from .gamma import estimate_gamma_ro, solve_gamma_star
from .model import FrequencyGrid, load_plant
from .regret import evaluate_controllers, regret_spectrum, worst_case_expected_regret
from .synthesis import impulse_response

__all__ = ["main"]

CONFIG_ERRORS = (
    ParseError,
    DimensionMismatch,
    DisturbanceNotScalar,
    NotStabilizable,
    GridMismatch,
)

OUT_DIR_ENV = "DRRO_OUT"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drro",
        description="Synthesize and evaluate distributionally robust regret-optimal controllers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--plant", required=True, help="plant JSON file (A, B_u, B_w, Q, R)")
        p.add_argument("--grid-k", type=int, default=12, help="grid exponent, N = 2^k (8..20)")
        p.add_argument("--out", default=None, help=f"output directory (default $%s or .)" % OUT_DIR_ENV)
        p.add_argument("--seed", type=int, default=0, help="seed recorded with the run")
        p.add_argument("--jobs", type=int, default=1, help="concurrent sweep points")
        p.add_argument("--tol-fp", type=float, default=1e-9, help="fixed-point step tolerance")
        p.add_argument("--tol-gamma", type=float, default=1e-8, help="radius-equation residual tolerance")

    p_synth = sub.add_parser("synth", help="synthesize the robust controller at one radius")
    common(p_synth)
    p_synth.add_argument("--radius", type=float, action="append", default=None)
    p_synth.add_argument("--gamma", type=float, default=None, help="expert override: fixed dual parameter, skips the radius solve")

    p_eval = sub.add_parser("eval", help="cross-evaluate controllers at one radius")
    common(p_eval)
    p_eval.add_argument("--radius", type=float, action="append", default=None)
    p_eval.add_argument("--import-controller", action="append", default=[], metavar="FILE",
                        help="additional controller (cache .npz or state-space JSON); repeatable")

    p_sweep = sub.add_parser("sweep", help="evaluate controllers across several radii")
    common(p_sweep)
    p_sweep.add_argument("--radius", type=float, action="append", default=None)

    return parser


def _out_dir(args) -> str:
    out = args.out or os.environ.get(OUT_DIR_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _validate_common(args):
    if not (8 <= args.grid_k <= 20):
        raise DimensionMismatch(f"--grid-k must lie in [8, 20], got {args.grid_k}")
    if args.jobs < 1:
        raise DimensionMismatch("--jobs must be at least 1")
    if args.tol_fp <= 0 or args.tol_gamma <= 0:
        raise DimensionMismatch("tolerances must be positive")


def _radii(args, *, minimum: int) -> list:
    radii = args.radius or []
    for r in radii:
        if not (r > 0.0):
            raise DimensionMismatch(f"--radius must be positive, got {r}")
    unique = sorted(set(radii))
    if len(unique) < len(radii):
        print("warning: duplicate --radius values deduplicated", file=sys.stderr)
    if len(unique) < minimum:
        raise DimensionMismatch(
            f"at least {minimum} --radius value(s) required, got {len(unique)}"
        )
    return unique


def _prepare(args) -> tuple:
    plant = load_plant(args.plant)
    ctx = prepare_plant(plant, FrequencyGrid(args.grid_k))
    return ctx, plant.content_hash()


def _json_dump(path, payload):
    drro_io.atomic_write_bytes(path, (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode())


def cmd_synth(args) -> int:
    _validate_common(args)
    out = _out_dir(args)
    t0 = time.perf_counter()
    ctx, plant_hash = _prepare(args)
    diag = {
        "command": "synth",
        "plant_hash": plant_hash,
        "grid_k": args.grid_k,
        "seed": args.seed,
    }
    if args.gamma is not None:
        state, controller = ctx.synthesize(args.gamma, fp_tol=args.tol_fp, max_iters=2000)
        r_used = None
        diag.update(gamma=args.gamma, gamma_star=None, residual=None)
    else:
        radii = _radii(args, minimum=1)
        if len(radii) != 1:
            raise DimensionMismatch("synth takes exactly one --radius")
        r_used = radii[0]
        sol = solve_gamma_star(ctx, r_used, tol_resid=args.tol_gamma, fp_tol=args.tol_fp)
        state, controller = sol.synthesis, sol.controller
        diag.update(
            r=r_used,
            gamma_star=sol.gamma_star,
            residual=sol.residual,
            gamma_ro_estimate=sol.gamma_ro_estimate,
            bracket_evaluations=len(sol.bracket_history),
        )

    cache_path = os.path.join(out, "controller_dr.npz")
    drro_io.save_controller_cache(cache_path, controller, plant_hash=plant_hash, r=r_used)
    lags = min(512, ctx.grid.N // 2)
    taps, tail = impulse_response(controller, lags)
    rows = []
    d, p = taps.shape[0], taps.shape[1]
    for t in range(lags):
        rows.append([float(t)] + [taps[i, j, t] for i in range(d) for j in range(p)])
    drro_io.write_csv(
        os.path.join(out, "impulse_dr.csv"),
        ["lag"] + [f"k{i}{j}" for i in range(d) for j in range(p)],
        rows,
    )
    diag.update(
        iterations=state.iters,
        kkt_residual=state.kkt_residual,
        controller_causal_leak=controller.causal_leak(),
        impulse_tail_energy=tail,
        runtime_sec=time.perf_counter() - t0,
        cache=os.path.basename(cache_path),
    )
    _json_dump(os.path.join(out, "diagnostics.json"), diag)
    return 0


def _assemble_controllers(ctx: PlantContext, args, r, plant_hash):
    gamma_ro = estimate_gamma_ro(ctx, fp_tol=max(args.tol_fp, 1e-7))
    sol = solve_gamma_star(ctx, r, gamma_ro_est=gamma_ro, tol_resid=args.tol_gamma, fp_tol=args.tol_fp)
    controllers = {
        "DR": sol.controller,
        "H2": h2_controller(ctx.factors),
        "RO": ro_limit_controller(ctx, gamma_ro_est=gamma_ro, fp_tol=args.tol_fp),
    }
    for path in getattr(args, "import_controller", []):
        imported = import_controller(path, ctx.grid, plant_hash=plant_hash)
        name = os.path.splitext(os.path.basename(path))[0]
        while name in controllers:
            name += "_"
        controllers[name] = imported.samples
    return controllers, sol


def cmd_eval(args) -> int:
    _validate_common(args)
    out = _out_dir(args)
    ctx, plant_hash = _prepare(args)
    radii = _radii(args, minimum=1)
    if len(radii) != 1:
        raise DimensionMismatch("eval takes exactly one --radius")
    r = radii[0]
    controllers, _ = _assemble_controllers(ctx, args, r, plant_hash)
    reports = evaluate_controllers(ctx, controllers, r)

    drro_io.write_csv(
        os.path.join(out, "report.csv"),
        ["controller", "r", "gamma_star", "worst_case_regret", "nominal_regret"],
        [
            [rep.controller, rep.r, rep.gamma_star, rep.worst_case_expected_regret, rep.nominal_expected_regret]
            for rep in reports
        ],
    )
    names = [rep.controller for rep in reports]
    drro_io.write_csv(
        os.path.join(out, "cross.csv"),
        ["controller", "r"] + [f"under_worst_of_{n}" for n in names],
        [[rep.controller, rep.r] + [rep.cross[n] for n in names] for rep in reports],
    )
    profile_rows = []
    for idx, om in enumerate(ctx.grid.omegas):
        profile_rows.append([om] + [float(rep.profile[idx]) for rep in reports])
    drro_io.write_csv(
        os.path.join(out, "profiles.csv"),
        ["omega"] + [f"sigma_max_{n}" for n in names],
        profile_rows,
    )
    return 0


def cmd_sweep(args) -> int:
    _validate_common(args)
    out = _out_dir(args)
    ctx, plant_hash = _prepare(args)
    radii = _radii(args, minimum=2)

    gamma_ro = estimate_gamma_ro(ctx, fp_tol=max(args.tol_fp, 1e-7))
    fixed = {
        "H2": h2_controller(ctx.factors),
        "RO": ro_limit_controller(ctx, gamma_ro_est=gamma_ro, fp_tol=args.tol_fp),
    }
    fixed_spectra = {name: regret_spectrum(K, ctx) for name, K in fixed.items()}

    partial_path = os.path.join(out, "sweep.partial.csv")
    partial_lock = threading.Lock()
    with open(partial_path, "w", encoding="utf-8") as fh:
        fh.write("r,controller,gamma_star,worst_case_regret,nominal_regret\n")

    def run_radius(r):
        sol = solve_gamma_star(ctx, r, gamma_ro_est=gamma_ro, tol_resid=args.tol_gamma, fp_tol=args.tol_fp)
        C_dr = regret_spectrum(sol.controller, ctx)
        rows = []
        for name, C in (("DR", C_dr),) + tuple(fixed_spectra.items()):
            value, wcs = worst_case_expected_regret(C, r)
            rows.append((r, name, wcs.gamma_star, value, float(np.mean(C.values))))
        with partial_lock:
            with open(partial_path, "a", encoding="utf-8") as fh:
                for row in rows:
                    fh.write(",".join([drro_io.fmt(row[0]), row[1]] + [drro_io.fmt(v) for v in row[2:]]) + "\n")
        return rows

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            all_rows = list(pool.map(run_radius, radii))
    else:
        all_rows = [run_radius(r) for r in radii]

    # final deterministic table, sorted by (r, controller), with monotonicity flags
    flat = [row for group in all_rows for row in group]
    flat.sort(key=lambda row: (row[0], row[1]))
    last_value = {}
    out_rows = []
    for r, name, gstar, value, nominal in flat:
        ok = value >= last_value.get(name, -np.inf) * (1.0 - 1e-9)
        last_value[name] = value
        out_rows.append([r, name, gstar, value, nominal, "1" if ok else "0"])
    drro_io.write_csv(
        os.path.join(out, "sweep.csv"),
        ["r", "controller", "gamma_star", "worst_case_regret", "nominal_regret", "monotone_in_r_ok"],
        out_rows,
    )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    handlers = {"synth": cmd_synth, "eval": cmd_eval, "sweep": cmd_sweep}
    try:
        return handlers[args.command](args)
    except GammaInfeasible as exc:
        _emit_error(exc)
        return 4
    except CONFIG_ERRORS as exc:
        _emit_error(exc)
        return 2
    except DrroError as exc:
        _emit_error(exc)
        return 3


def _emit_error(exc: Exception):
    record = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
