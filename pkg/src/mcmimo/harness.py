"""Monte Carlo experiment driver and statistics layer.

Runs independent user drops, composes pilot allocation with power
control, and accumulates the per-user limit metrics of the central cell
only (those users see the realistic interference condition).  Per-drop
RNG streams derive from (seed, drop index), so a worker pool partitions
the drops without changing any number.
"""

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__, kernels, power_control
from .asymptotics import (
    asymptotic_ber,
    asymptotic_sinr,
    identity_assignment,
    user_rate,
)
from .channel import PowerProfile, generate_channel, make_pilot_book, simulate_training
from .pilot_allocation import CRITERION_CODES, best_response_rounds
from .precoding import (
    empirical_metrics,
    make_symbol_frame,
    mf_precoder,
    simulate_downlink,
    zf_precoder,
)
from .scenario import FrameConfig, compute_beta, drop_users, generate_layout

CRITERIA = ("random",) + tuple(sorted(CRITERION_CODES))
PC_MODES = ("off", "tpc", "opc")


@dataclass
class ExperimentConfig:
    """Fully resolved description of one Monte Carlo experiment."""

    rf: int = 1
    cell_radius_m: float = 1600.0
    num_users: int = 4
    path_loss_exponent: float = 3.8
    shadow_sigma_db: float = 8.0
    shadow_correlation: float = 0.5
    ref_distance_m: float = 1000.0
    exclusion_radius_m: float = 100.0
    uplink_snr_db: float = 10.0
    uplink_power_policy: str = "transmit"
    downlink_snr_db: float = 10.0
    criterion: str = "random"
    max_rounds: int = 20
    pc: str = "off"
    zeta_db: float = 0.0
    pc_iterations: int = 10
    num_drops: int = 10000
    seed: int = 1
    sinr_cap_db: float = 40.0
    frame: FrameConfig = field(default_factory=FrameConfig)

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.pc not in PC_MODES:
            raise ValueError(f"pc must be one of {PC_MODES}")
        if self.uplink_power_policy not in ("transmit", "received"):
            raise ValueError("uplink_power_policy must be 'transmit' or 'received'")
        if self.num_drops < 1:
            raise ValueError("need at least one drop")


@dataclass(eq=False)
class MetricsSummary:
    """Aggregate statistics plus the raw per-user sample arrays."""

    num_drops: int
    num_users: int
    mean_ber_pct: float
    frac_ber_zero_pct: float
    frac_ber_ge_01_pct: float
    mean_rate_mbps: float
    p5_rate_mbps: float
    ber_samples: np.ndarray
    sinr_samples: np.ndarray  # linear
    rate_samples: np.ndarray  # bit/s

    def stats_row(self):
        return {
            "mean_ber_pct": self.mean_ber_pct,
            "frac_ber_zero_pct": self.frac_ber_zero_pct,
            "frac_ber_ge_01_pct": self.frac_ber_ge_01_pct,
            "mean_rate_mbps": self.mean_rate_mbps,
            "p5_rate_mbps": self.p5_rate_mbps,
        }


def drop_rng(seed, drop_index):
    """Independent per-drop stream; stable under any drop partitioning."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(drop_index,))
    )


def nearest_rank_percentile(samples, pct):
    """Nearest-rank percentile: value at rank ceil(pct/100 * n)."""
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValueError("no samples")
    rank = max(1, math.ceil(pct / 100.0 * samples.size))
    return float(np.sort(samples, kind="stable")[rank - 1])


def compute_cdf(samples):
    """Empirical CDF with exact step semantics.

    Returns (values, fractions) where fractions[i] = P(X <= values[i]);
    repeated values collapse into one step, so an atom at zero stays an
    atom.  The complementary curve is 1 - fractions.
    """
    samples = np.asarray(samples)
    if samples.size == 0:
        raise ValueError("no samples")
    values, counts = np.unique(samples, return_counts=True)
    fractions = np.cumsum(counts) / samples.size
    return values, fractions


def _run_drop(cfg, layout, drop_index):
    rng = drop_rng(cfg.seed, drop_index)
    drop = drop_users(layout, cfg.num_users, rng, cfg.exclusion_radius_m)
    beta = compute_beta(
        layout,
        drop,
        cfg.path_loss_exponent,
        cfg.shadow_sigma_db,
        rng,
        cfg.ref_distance_m,
        cfg.shadow_correlation,
    )
    L, K, _ = beta.shape
    powers = PowerProfile.uniform(L, K, cfg.uplink_snr_db, cfg.downlink_snr_db)
    if cfg.uplink_power_policy == "received":
        own = beta[np.arange(L)[:, None], np.arange(K)[None, :], np.arange(L)[:, None]]
        powers.gamma = 10.0 ** (cfg.uplink_snr_db / 10.0) / own
    if cfg.criterion == "random":
        # the drop order is already uniform, so identity is a random draw
        assign = identity_assignment(L, K)
    else:
        assign, _ = best_response_rounds(
            cfg.criterion, beta, powers.gamma, powers.phi, max_rounds=cfg.max_rounds
        )
    if cfg.pc != "off":
        pc_cfg = power_control.PowerControlConfig(
            target_sinr=10.0 ** (cfg.zeta_db / 10.0),
            iterations=cfg.pc_iterations,
            algorithm=cfg.pc,
            phi_max=powers.phi_max,
        )
        powers.phi, _ = power_control.run_power_control(
            pc_cfg, beta, powers.gamma, assign
        )
    sinr = asymptotic_sinr(beta, powers.gamma, powers.phi, assign)[0]
    ber = asymptotic_ber(beta, powers.gamma, powers.phi, assign)[0]
    rate = user_rate(sinr, cfg.frame, cfg.rf, cfg.sinr_cap_db)
    return sinr, ber, rate


def _drop_chunk(args):
    cfg, start, stop = args
    layout = generate_layout(cfg.rf, cfg.cell_radius_m)
    K = cfg.num_users
    sinr = np.empty((stop - start, K))
    ber = np.empty((stop - start, K))
    rate = np.empty((stop - start, K))
    for i, drop_index in enumerate(range(start, stop)):
        sinr[i], ber[i], rate[i] = _run_drop(cfg, layout, drop_index)
    return sinr, ber, rate


def run_experiment(cfg, workers=1):
    """Run all drops and summarize the central-cell user metrics."""
    n = cfg.num_drops
    if workers is None or workers < 1:
        workers = 1
    workers = min(workers, n)
    if workers == 1:
        chunks = [_drop_chunk((cfg, 0, n))]
    else:
        bounds = np.linspace(0, n, workers + 1, dtype=int)
        jobs = [(cfg, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_drop_chunk, jobs))
    sinr = np.concatenate([c[0] for c in chunks]).ravel()
    ber = np.concatenate([c[1] for c in chunks]).ravel()
    rate = np.concatenate([c[2] for c in chunks]).ravel()
    return MetricsSummary(
        num_drops=n,
        num_users=cfg.num_users,
        mean_ber_pct=float(100.0 * ber.mean()),
        frac_ber_zero_pct=float(100.0 * np.mean(ber == 0.0)),
        frac_ber_ge_01_pct=float(100.0 * np.mean(ber >= 0.1)),
        mean_rate_mbps=float(rate.mean() / 1e6),
        p5_rate_mbps=nearest_rank_percentile(rate, 5.0) / 1e6,
        ber_samples=ber,
        sinr_samples=sinr,
        rate_samples=rate,
    )


def sweep_target_experiment(base_cfg, zeta_db_grid, workers=1):
    """95%-likely-rate sweep over downlink SINR targets.

    Every grid point reuses the same seed, so the comparison is paired
    across targets.  The base config must have power control enabled.
    """
    if base_cfg.pc == "off":
        raise ValueError("target sweep needs power control enabled")

    def evaluate(zeta_db):
        cfg = replace(base_cfg, zeta_db=float(zeta_db))
        summary = run_experiment(cfg, workers=workers)
        return {
            "p5_rate": summary.p5_rate_mbps,
            "mean_rate": summary.mean_rate_mbps,
        }

    return power_control.sweep_target(zeta_db_grid, evaluate)


# Published reference statistics for the eight standard configurations:
# (mean BER %, users with BER=0 %, users with BER>=0.1 %, mean rate Mbps,
# 95%-likely rate Mbps), keyed by (reuse factor, criterion, power control).
REFERENCE_TABLE1 = {
    (1, "random", False): (9.84, 75.41, 23.63, 48.50, 0.1344),
    (1, "random", True): (8.44, 75.47, 23.57, 30.89, 1.4610),
    (1, "maxminsinr", False): (6.17, 82.45, 16.28, 52.62, 0.7937),
    (1, "maxminsinr", True): (2.73, 92.61, 6.65, 34.24, 6.7430),
    (3, "random", False): (1.41, 96.33, 3.47, 29.07, 4.79),
    (3, "random", True): (1.29, 97.17, 2.82, 24.39, 10.41),
    (3, "maxminsinr", False): (0.39, 98.78, 1.09, 31.68, 11.15),
    (3, "maxminsinr", True): (0.45, 98.94, 1.01, 25.95, 17.31),
}

# Reference power-control targets (dB) per (reuse factor, criterion).
REFERENCE_ZETA_DB = {
    (1, "random"): 0.0,
    (1, "maxminsinr"): 6.0,
    (3, "random"): 20.0,
    (3, "maxminsinr"): 25.0,
}

TABLE1_STAT_KEYS = (
    "mean_ber_pct",
    "frac_ber_zero_pct",
    "frac_ber_ge_01_pct",
    "mean_rate_mbps",
    "p5_rate_mbps",
)


def table1_rows(rf_values=(1, 3)):
    """The eight (rf, criterion, pc) combinations in presentation order."""
    rows = []
    for rf in rf_values:
        for criterion in ("random", "maxminsinr"):
            for pc in (False, True):
                rows.append((rf, criterion, pc))
    return rows


def table1_report(num_drops, seed, out_dir=None, rf_values=(1, 3), pc_algorithm="opc", workers=1):
    """Run the eight-row summary grid and lay it beside the references.

    Returns one dict per row with the measured and reference statistics;
    optionally writes ``table1.csv`` and a readable ``table1.txt``.
    """
    results = []
    for rf, criterion, pc in table1_rows(rf_values):
        zeta_db = REFERENCE_ZETA_DB[(rf, criterion)]
        cfg = ExperimentConfig(
            rf=rf,
            criterion=criterion,
            pc=pc_algorithm if pc else "off",
            zeta_db=zeta_db,
            num_drops=num_drops,
            seed=seed,
        )
        summary = run_experiment(cfg, workers=workers)
        row = {
            "rf": rf,
            "criterion": criterion,
            "pc": pc,
            "zeta_db": zeta_db if pc else None,
            **summary.stats_row(),
        }
        reference = REFERENCE_TABLE1.get((rf, criterion, pc))
        if reference is not None:
            for key, value in zip(TABLE1_STAT_KEYS, reference):
                row[f"ref_{key}"] = value
        results.append(row)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        _write_table1_csv(os.path.join(out_dir, "table1.csv"), results)
        with open(os.path.join(out_dir, "table1.txt"), "w") as fh:
            fh.write(format_table1(results))
    return results


def _row_label(row):
    label = "Random" if row["criterion"] == "random" else "MaxminSINR"
    if row["pc"]:
        label += f" + PC ({row['zeta_db']:g} dB)"
    return label


def _write_table1_csv(path, results):
    fields = ["rf", "scheme"] + list(TABLE1_STAT_KEYS) + [
        f"ref_{key}" for key in TABLE1_STAT_KEYS
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in results:
            record = [row["rf"], _row_label(row)]
            record += [f"{row[key]:.4f}" for key in TABLE1_STAT_KEYS]
            record += [
                f"{row.get(f'ref_{key}', float('nan')):.4f}" for key in TABLE1_STAT_KEYS
            ]
            writer.writerow(record)


def format_table1(results):
    header = (
        f"{'scheme':<28} {'BER%':>8} {'BER=0%':>8} {'BER>=.1%':>9} "
        f"{'rate':>8} {'p5 rate':>8}"
    )
    lines = []
    current_rf = None
    for row in results:
        if row["rf"] != current_rf:
            current_rf = row["rf"]
            lines.append(f"-- reuse factor {current_rf} " + "-" * 52)
            lines.append(header)
        values = [row[key] for key in TABLE1_STAT_KEYS]
        lines.append(
            f"{_row_label(row):<28} {values[0]:>8.2f} {values[1]:>8.2f} "
            f"{values[2]:>9.2f} {values[3]:>8.2f} {values[4]:>8.4f}"
        )
        if f"ref_{TABLE1_STAT_KEYS[0]}" in row:
            refs = [row[f"ref_{key}"] for key in TABLE1_STAT_KEYS]
            lines.append(
                f"{'  (reference)':<28} {refs[0]:>8.2f} {refs[1]:>8.2f} "
                f"{refs[2]:>9.2f} {refs[3]:>8.2f} {refs[4]:>8.4f}"
            )
    return "\n".join(lines) + "\n"


def convergence_experiment(
    n_values=(64, 256, 1024, 4096),
    num_drops=200,
    rf=1,
    num_users=4,
    seed=7,
    trials_floor=2000,
    trials_per_antenna=16,
    trials_cap=65536,
):
    """Finite-antenna convergence of MF and ZF toward the limit formulas.

    For every drop the same fading block feeds both precoders at each
    antenna count.  Returns per-(N, precoder) records carrying the grand
    mean curves plus the pooled per-user SINR gaps to the bound, and the
    six-column rows for the convergence CSV.
    """
    layout = generate_layout(rf, 1600.0)
    records = {
        (int(n), prec): {"emp_sinr_db": [], "emp_ber": [], "gap_db": []}
        for n in n_values
        for prec in ("mf", "zf")
    }
    bound_sinr_db_all = []
    bound_ber_all = []
    for drop_index in range(num_drops):
        rng = drop_rng(seed, drop_index)
        drop = drop_users(layout, num_users, rng)
        beta = compute_beta(layout, drop, rng=rng)
        L, K, _ = beta.shape
        gamma = np.full((L, K), 10.0)
        phi = np.full((L, K), 10.0)
        bound_sinr = asymptotic_sinr(beta, gamma, phi)[0]
        bound_sinr_db = 10.0 * np.log10(bound_sinr)
        bound_sinr_db_all.append(bound_sinr_db)
        bound_ber_all.append(asymptotic_ber(beta, gamma, phi)[0])
        book = make_pilot_book(K)
        for n in n_values:
            chan = generate_channel(beta, int(n), rng)
            csi = simulate_training(book, chan, gamma, rng)
            trials = int(min(max(trials_floor, trials_per_antenna * int(n)), trials_cap))
            frame = make_symbol_frame(L, K, trials, rng)
            for prec_name, precoder in (("mf", mf_precoder), ("zf", zf_precoder)):
                received = simulate_downlink(precoder(csi), chan, phi, frame, rng)
                ber, sinr = empirical_metrics(received, frame)
                emp_db = 10.0 * np.log10(sinr[0])
                rec = records[(int(n), prec_name)]
                rec["emp_sinr_db"].append(emp_db)
                rec["emp_ber"].append(ber[0])
                rec["gap_db"].append(bound_sinr_db - emp_db)
    rows = []
    bound_ber = float(np.mean(bound_ber_all))
    bound_sinr_db = float(np.mean(bound_sinr_db_all))
    for (n, prec), rec in sorted(records.items()):
        for key in ("emp_sinr_db", "emp_ber", "gap_db"):
            rec[key] = np.asarray(rec[key])
        rows.append(
            {
                "N": n,
                "precoder": prec,
                "mean_BER": float(rec["emp_ber"].mean()),
                "mean_SINR_dB": float(rec["emp_sinr_db"].mean()),
                "bound_BER": bound_ber,
                "bound_SINR_dB": bound_sinr_db,
            }
        )
    return {"records": records, "rows": rows}


def write_convergence_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["N", "precoder", "mean_BER", "mean_SINR_dB", "bound_BER", "bound_SINR_dB"]
        )
        for row in rows:
            writer.writerow(
                [
                    row["N"],
                    row["precoder"],
                    f"{row['mean_BER']:.6g}",
                    f"{row['mean_SINR_dB']:.6f}",
                    f"{row['bound_BER']:.6g}",
                    f"{row['bound_SINR_dB']:.6f}",
                ]
            )


def write_metrics_csv(path, summary):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        keys = list(summary.stats_row())
        writer.writerow(keys + ["num_drops", "num_users"])
        writer.writerow(
            [f"{summary.stats_row()[k]:.6f}" for k in keys]
            + [summary.num_drops, summary.num_users]
        )


def write_metrics_json(path, summary):
    payload = dict(summary.stats_row())
    payload.update({"num_drops": summary.num_drops, "num_users": summary.num_users})
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_cdf_csv(path, samples, transform=None):
    values, fractions = compute_cdf(samples if transform is None else transform(samples))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "cdf"])
        for value, frac in zip(values, fractions):
            writer.writerow([f"{value:.10g}", f"{frac:.10g}"])


def write_manifest(path, cfg, extra=None):
    payload = {
        "config": asdict(cfg),
        "backend": kernels.BACKEND,
        "version": __version__,
    }
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run_outputs(out_dir, cfg, summary, fmt="csv"):
    """Standard artifact set of one experiment: stats, CDFs, manifest."""
    os.makedirs(out_dir, exist_ok=True)
    if fmt == "json":
        write_metrics_json(os.path.join(out_dir, "metrics.json"), summary)
    else:
        write_metrics_csv(os.path.join(out_dir, "metrics.csv"), summary)
    cap = 10.0 ** (cfg.sinr_cap_db / 10.0)
    sinr_db = 10.0 * np.log10(np.minimum(summary.sinr_samples, cap))
    write_cdf_csv(os.path.join(out_dir, "cdf_ber.csv"), summary.ber_samples)
    write_cdf_csv(os.path.join(out_dir, "cdf_sinr_db.csv"), sinr_db)
    write_cdf_csv(os.path.join(out_dir, "cdf_rate_mbps.csv"), summary.rate_samples / 1e6)
    write_manifest(os.path.join(out_dir, "manifest.json"), cfg)
