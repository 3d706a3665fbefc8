"""Command line front end: run experiments and emit plot-ready data."""

import argparse
import os
import sys
import time

import numpy as np

from . import harness, kernels, pilot_allocation, power_control, scenario


def _parse_int_list(text):
    return [int(part) for part in text.replace(",", " ").split()]


def _parse_float_list(text):
    return [float(part) for part in text.replace(",", " ").split()]


def _add_common(parser):
    parser.add_argument("--rf", type=int, choices=(1, 3), default=1)
    parser.add_argument("--drops", type=int, default=10000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--workers", type=int, default=1)


def _experiment_config(args):
    overrides = {}
    if getattr(args, "config", None):
        file_cfg = scenario.load_scenario_config(args.config)
        mapping = {
            "reuse_factor": "rf",
            "radius_m": "cell_radius_m",
            "K": "num_users",
            "lambda": "path_loss_exponent",
            "shadow_sigma_db": "shadow_sigma_db",
            "seed": "seed",
        }
        overrides = {mapping[k]: v for k, v in file_cfg.items()}
    cfg = harness.ExperimentConfig(
        rf=overrides.get("rf", args.rf),
        cell_radius_m=overrides.get("cell_radius_m", 1600.0),
        num_users=overrides.get("num_users", 4),
        path_loss_exponent=overrides.get("path_loss_exponent", 3.8),
        shadow_sigma_db=overrides.get("shadow_sigma_db", 8.0),
        criterion=args.criterion,
        pc=args.pc,
        zeta_db=args.zeta_db,
        num_drops=args.drops,
        seed=overrides.get("seed", args.seed),
    )
    return cfg


def _cmd_run(args):
    cfg = _experiment_config(args)
    if args.paper_scale:
        cfg.num_drops = max(cfg.num_drops, 100000)
    start = time.time()
    summary = harness.run_experiment(cfg, workers=args.workers)
    harness.write_run_outputs(args.out, cfg, summary, fmt=args.format)
    if args.dump_game or args.dump_pc_trace:
        _dump_single_drop(cfg, args)
    stats = summary.stats_row()
    print(f"drops={cfg.num_drops} criterion={cfg.criterion} pc={cfg.pc}")
    for key, value in stats.items():
        print(f"  {key} = {value:.4f}")
    print(f"outputs in {args.out} ({time.time() - start:.1f}s)")
    return 0


def _dump_single_drop(cfg, args):
    """Re-run drop 0 keeping the intermediate objects for the dumps."""
    layout = scenario.generate_layout(cfg.rf, cfg.cell_radius_m)
    rng = harness.drop_rng(cfg.seed, 0)
    drop = scenario.drop_users(layout, cfg.num_users, rng, cfg.exclusion_radius_m)
    beta = scenario.compute_beta(
        layout, drop, cfg.path_loss_exponent, cfg.shadow_sigma_db, rng,
        cfg.ref_distance_m, cfg.shadow_correlation,
    )
    L, K, _ = beta.shape
    gamma = np.full((L, K), 10.0 ** (cfg.uplink_snr_db / 10.0))
    phi = np.full((L, K), 10.0 ** (cfg.downlink_snr_db / 10.0))
    if cfg.criterion == "random":
        assign = np.tile(np.arange(K, dtype=np.int64), (L, 1))
        trace = None
    else:
        assign, trace = pilot_allocation.best_response_rounds(
            cfg.criterion, beta, gamma, phi, max_rounds=cfg.max_rounds
        )
    if args.dump_game:
        pilot_allocation.write_assignment_json(
            os.path.join(args.out, "assignment_drop0.json"), assign
        )
        if trace is not None:
            pilot_allocation.write_game_trace_csv(
                os.path.join(args.out, "game_trace_drop0.csv"), trace
            )
    if args.dump_pc_trace and cfg.pc != "off":
        pc_cfg = power_control.PowerControlConfig(
            target_sinr=10.0 ** (cfg.zeta_db / 10.0),
            iterations=cfg.pc_iterations,
            algorithm=cfg.pc,
            phi_max=float(phi[0, 0]),
        )
        _, pc_trace = power_control.run_power_control(pc_cfg, beta, gamma, assign)
        power_control.write_power_trace_csv(
            os.path.join(args.out, "power_trace_drop0.csv"), pc_trace
        )


def _cmd_table1(args):
    drops = 100000 if args.paper_scale else args.drops
    start = time.time()
    results = harness.table1_report(
        num_drops=drops, seed=args.seed, out_dir=args.out, workers=args.workers
    )
    print(harness.format_table1(results))
    print(f"outputs in {args.out} ({time.time() - start:.1f}s)")
    return 0


def _cmd_sweep(args):
    cfg = harness.ExperimentConfig(
        rf=args.rf,
        criterion=args.criterion,
        pc=args.pc if args.pc != "off" else "opc",
        num_drops=args.drops,
        seed=args.seed,
    )
    grid = _parse_float_list(args.zeta_grid_db)
    best, curve = harness.sweep_target_experiment(cfg, grid, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    power_control.write_sweep_csv(os.path.join(args.out, "sweep_target.csv"), curve)
    harness.write_manifest(
        os.path.join(args.out, "sweep_manifest.json"), cfg,
        extra={"zeta_grid_db": grid, "best_zeta_db": best},
    )
    for row in curve:
        print(
            f"zeta={row['zeta_db']:>6.1f} dB  p5={row['p5_rate']:.4f} Mbps  "
            f"mean={row['mean_rate']:.3f} Mbps"
        )
    print(f"best target: {best:g} dB")
    return 0


def _cmd_convergence(args):
    n_values = _parse_int_list(args.n_values)
    if args.paper_scale and max(n_values) < 16384:
        n_values.append(16384)
    result = harness.convergence_experiment(
        n_values=n_values, num_drops=args.drops, rf=args.rf, seed=args.seed
    )
    os.makedirs(args.out, exist_ok=True)
    harness.write_convergence_csv(
        os.path.join(args.out, "convergence.csv"), result["rows"]
    )
    for row in result["rows"]:
        print(
            f"N={row['N']:>6} {row['precoder']}  mean SINR {row['mean_SINR_dB']:7.2f} dB"
            f"  (bound {row['bound_SINR_dB']:7.2f} dB)  mean BER {row['mean_BER']:.4f}"
            f"  (bound {row['bound_BER']:.4f})"
        )
    return 0


def _cmd_layout(args):
    layout = scenario.generate_layout(args.rf, args.radius)
    rng = harness.drop_rng(args.seed, 0)
    drop = scenario.drop_users(layout, args.k, rng)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"layout_rf{args.rf}.csv")
    scenario.write_drop_csv(path, layout, drop)
    print(f"wrote {path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mcmimo",
        description="multi-cell massive MIMO downlink experiments "
        f"(kernel backend: {kernels.BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one Monte Carlo experiment")
    _add_common(p_run)
    p_run.add_argument("--criterion", choices=harness.CRITERIA, default="random")
    p_run.add_argument("--pc", choices=harness.PC_MODES, default="off")
    p_run.add_argument("--zeta-db", type=float, default=0.0)
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")
    p_run.add_argument("--config", help="scenario config file (key = value)")
    p_run.add_argument("--paper-scale", action="store_true")
    p_run.add_argument("--dump-game", action="store_true")
    p_run.add_argument("--dump-pc-trace", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_t1 = sub.add_parser("table1", help="full eight-row summary grid")
    _add_common(p_t1)
    p_t1.add_argument("--paper-scale", action="store_true")
    p_t1.set_defaults(func=_cmd_table1)

    p_sw = sub.add_parser("sweep-target", help="power-control target sweep")
    _add_common(p_sw)
    p_sw.add_argument("--criterion", choices=harness.CRITERIA, default="maxminsinr")
    p_sw.add_argument("--pc", choices=("tpc", "opc"), default="opc")
    p_sw.add_argument(
        "--zeta-grid-db", default="0,2,4,6,8,10,12", help="comma-separated dB grid"
    )
    p_sw.set_defaults(func=_cmd_sweep)

    p_cv = sub.add_parser("convergence", help="finite-N MF/ZF convergence study")
    _add_common(p_cv)
    p_cv.add_argument("--n-values", default="64,256,1024,4096")
    p_cv.add_argument("--paper-scale", action="store_true")
    p_cv.set_defaults(func=_cmd_convergence)

    p_ly = sub.add_parser("layout", help="dump a layout / drop scatter CSV")
    _add_common(p_ly)
    p_ly.add_argument("--radius", type=float, default=1600.0)
    p_ly.add_argument("--k", type=int, default=4)
    p_ly.set_defaults(func=_cmd_layout)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
