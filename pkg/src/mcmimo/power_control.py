"""Distributed downlink power updates toward a common SINR target.

Both algorithms react to the effective interference I of a user, i.e. the
power that would buy the user an SINR of one.  The tracking update takes
target*I capped at the power budget; the interference-aware variant backs
off instead (budget^2 / (target*I)) once the target is out of reach, which
both saves power and reduces the interference it radiates.  All users
update synchronously from the previous iterate.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .asymptotics import identity_assignment

ALGORITHMS = ("tpc", "opc")


def _validate_nonnegative(**named):
    for name, value in named.items():
        if np.any(np.asarray(value) < 0.0):
            raise ValueError(f"{name} must be nonnegative")


def tpc_step(interference, target_sinr, phi_max):
    """Target-tracking update: min(target * I, budget)."""
    _validate_nonnegative(
        interference=interference, target_sinr=target_sinr, phi_max=phi_max
    )
    return np.minimum(np.multiply(target_sinr, interference), phi_max)


def opc_step(interference, target_sinr, phi_max):
    """Interference-aware update: track while feasible, back off otherwise.

    Continuous at the switchover I = budget/target, where both branches
    equal the budget; never exceeds the budget.
    """
    _validate_nonnegative(
        interference=interference, target_sinr=target_sinr, phi_max=phi_max
    )
    interference = np.asarray(interference, dtype=np.float64)
    tracked = np.multiply(target_sinr, interference)
    with np.errstate(divide="ignore", invalid="ignore"):
        backed_off = np.where(tracked > 0.0, np.square(phi_max) / tracked, 0.0)
    out = np.where(tracked <= np.asarray(phi_max, dtype=np.float64), tracked, backed_off)
    if out.ndim == 0:
        return float(out)
    return out


def effective_interference(beta, gamma, phi, assign=None):
    """Effective interference per user, ``out[cell, pilot]``.

    Algebraically equals phi/SINR of the current powers but is evaluated
    from the closed-form interference sum, so zero own power is fine.
    """
    L, K, _ = beta.shape
    if assign is None:
        assign = identity_assignment(L, K)
    alpha2 = kernels.pilot_alpha_sq(beta, gamma, assign)
    return kernels.interference_pilotwise(beta, phi, assign, alpha2)


@dataclass
class PowerControlConfig:
    """Knobs of the iteration; targets and budgets are linear scale."""

    target_sinr: float = 1.0
    iterations: int = 10
    algorithm: str = "opc"
    phi_max: float = 10.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if np.any(np.asarray(self.target_sinr) <= 0.0):
            raise ValueError("target SINR must be positive")
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if np.any(np.asarray(self.phi_max) <= 0.0):
            raise ValueError("power budget must be positive")


@dataclass(eq=False)
class PowerTrace:
    """Iterates of the synchronous update, all arrays user-indexed."""

    phi: np.ndarray  # (iterations + 1, L, K)
    sinr: np.ndarray  # (iterations + 1, L, K)


def _to_user_order(pilotwise, assign):
    out = np.empty_like(pilotwise)
    np.put_along_axis(out, assign, pilotwise, axis=1)
    return out


def run_power_control(config, beta, gamma, assign=None, initial_phi=None):
    """Run the configured number of synchronous updates.

    Starts from the full budget unless ``initial_phi`` says otherwise.
    Returns the final user-indexed power matrix and the full trace.
    """
    L, K, _ = beta.shape
    if assign is None:
        assign = identity_assignment(L, K)
    phi_max = np.broadcast_to(
        np.asarray(config.phi_max, dtype=np.float64), (L, K)
    ).copy()
    target = np.broadcast_to(
        np.asarray(config.target_sinr, dtype=np.float64), (L, K)
    ).copy()
    if initial_phi is None:
        phi = phi_max.copy()
    else:
        phi = np.array(initial_phi, dtype=np.float64)
        if np.any(phi <= 0.0) or np.any(phi > phi_max):
            raise ValueError("initial powers must lie in (0, phi_max]")
    step = tpc_step if config.algorithm == "tpc" else opc_step
    alpha2 = kernels.pilot_alpha_sq(beta, gamma, assign)
    target_pilot = np.take_along_axis(target, assign, axis=1)
    cap_pilot = np.take_along_axis(phi_max, assign, axis=1)

    phi_hist = np.empty((config.iterations + 1, L, K))
    sinr_hist = np.empty((config.iterations + 1, L, K))
    phi_hist[0] = phi
    sinr_hist[0] = _to_user_order(
        kernels.sinr_pilotwise(beta, phi, assign, alpha2), assign
    )
    for it in range(1, config.iterations + 1):
        interference = kernels.interference_pilotwise(beta, phi, assign, alpha2)
        new_pilot = step(interference, target_pilot, cap_pilot)
        phi = _to_user_order(new_pilot, assign)
        phi_hist[it] = phi
        sinr_hist[it] = _to_user_order(
            kernels.sinr_pilotwise(beta, phi, assign, alpha2), assign
        )
    return phi, PowerTrace(phi=phi_hist, sinr=sinr_hist)


def sweep_target(zeta_db_grid, evaluate):
    """Pick the target (in dB) that maximizes the 95%-likely rate.

    ``evaluate`` maps one target in dB to a dict with at least
    ``p5_rate`` and ``mean_rate``.  Returns the best target and the full
    sweep curve; ties resolve to the first grid point.
    """
    grid = list(zeta_db_grid)
    if not grid:
        raise ValueError("target grid is empty")
    curve = []
    for zeta_db in grid:
        stats = evaluate(zeta_db)
        curve.append(
            {
                "zeta_db": float(zeta_db),
                "p5_rate": float(stats["p5_rate"]),
                "mean_rate": float(stats["mean_rate"]),
            }
        )
    best = max(curve, key=lambda row: row["p5_rate"])
    return best["zeta_db"], curve


def write_power_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "cell", "user", "phi", "sinr_db"])
        iters, L, K = trace.phi.shape
        for it in range(iters):
            for cell in range(L):
                for user in range(K):
                    sinr = trace.sinr[it, cell, user]
                    sinr_db = 10.0 * np.log10(sinr) if sinr > 0 else -np.inf
                    writer.writerow(
                        [
                            it,
                            cell,
                            user,
                            f"{trace.phi[it, cell, user]:.10g}",
                            f"{sinr_db:.6f}",
                        ]
                    )


def write_sweep_csv(path, curve):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["zeta_db", "p5_rate", "mean_rate"])
        for row in curve:
            writer.writerow(
                [
                    f"{row['zeta_db']:.6g}",
                    f"{row['p5_rate']:.10g}",
                    f"{row['mean_rate']:.10g}",
                ]
            )
