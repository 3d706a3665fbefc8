"""Closed-form large-antenna limits: per-user SINR, exact 4-QAM BER, rate.

In the infinite-antenna regime the received sample of a user reduces to a
real positive gain on its own symbol plus one real gain per co-pilot
interferer, all noise averaged out.  SINR is then a ratio of those squared
gains, and the bit error probability is the fraction of interferer sign
patterns whose sum reaches the desired amplitude, which is exact for
4-QAM.  Both quantities are invariant to a common rescale of the downlink
powers, and to beta -> c*beta combined with gamma -> gamma/c.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

MAX_SIGN_CELLS = 20  # 2**(L-1) row guard


def identity_assignment(num_cells, num_users):
    """Pilot k -> user k in every cell (the unoptimized baseline)."""
    return np.tile(np.arange(num_users, dtype=np.int64), (num_cells, 1))


def build_sign_matrix(num_cells, serving):
    """All interferer sign combinations, serving column forced to +1.

    Rows follow binary counting (first column is the most significant
    bit), so the all-plus row comes first and the order is deterministic.
    """
    if not 1 <= num_cells <= MAX_SIGN_CELLS:
        raise ValueError(f"need 1 <= num_cells <= {MAX_SIGN_CELLS}, got {num_cells}")
    if not 0 <= serving < num_cells:
        raise ValueError(f"serving index {serving} out of range for {num_cells} cells")
    rows = 2 ** (num_cells - 1)
    counts = np.arange(rows, dtype=np.int64)
    shifts = np.arange(num_cells - 2, -1, -1, dtype=np.int64)
    bits = (counts[:, None] >> shifts[None, :]) & 1
    partial = 1.0 - 2.0 * bits  # (rows, num_cells - 1)
    full = np.ones((rows, num_cells))
    full[:, :serving] = partial[:, :serving]
    full[:, serving + 1 :] = partial[:, serving:]
    return full


def interferer_signs(num_cells):
    """Sign matrix without the serving column, as consumed by the kernels."""
    return build_sign_matrix(num_cells, 0)[:, 1:].copy()


def _resolve_assign(beta, assign):
    L, K, _ = beta.shape
    if assign is None:
        return identity_assignment(L, K)
    assign = np.asarray(assign, dtype=np.int64)
    if assign.shape != (L, K):
        raise ValueError(f"assignment must be {L}x{K}, got {assign.shape}")
    return assign


def asymptotic_sinr(beta, gamma, phi, assign=None):
    """Per-user SINR limits, ``out[cell, pilot]`` for the pilot's holder.

    An isolated cell (empty interference sum) yields the ``+inf`` sentinel
    rather than raising.
    """
    assign = _resolve_assign(beta, assign)
    alpha2 = kernels.pilot_alpha_sq(beta, gamma, assign)
    return kernels.sinr_pilotwise(beta, phi, assign, alpha2)


def asymptotic_ber(beta, gamma, phi, assign=None):
    """Per-user exact BER limits, ``out[cell, pilot]`` for the pilot's holder.

    Values are multiples of 2**-(L-1); sign ties count as errors.
    """
    assign = _resolve_assign(beta, assign)
    L = beta.shape[0]
    alpha2 = kernels.pilot_alpha_sq(beta, gamma, assign)
    signs = interferer_signs(L)
    return kernels.ber_pilotwise(beta, phi, assign, alpha2, signs)


def ber_bruteforce_oracle(beta, gamma, phi, pilot, cell, num_symbols, rng, assign=None):
    """Monte Carlo BER of one user from the noiseless limit signal.

    Draws independent equiprobable 4-QAM symbols for the user and its
    co-pilot interferers, forms the limit-signal sample directly from the
    link amplitudes (no sign enumeration) and sign-detects both rails.
    Kept free of the kernel code paths so it can arbitrate them.
    """
    assign = _resolve_assign(beta, assign)
    L, K, _ = beta.shape
    users = assign[:, pilot]
    # alpha^2 per BS for this pilot, written out longhand on purpose
    alpha2 = np.full(L, 1.0 / K)
    for j in range(L):
        for jj in range(L):
            u = users[jj]
            alpha2[j] += gamma[jj, u] * beta[j, u, jj]
    own = users[cell]
    amps = np.array(
        [
            np.sqrt(phi[j, users[j]]) * beta[j, own, cell] / np.sqrt(alpha2[j])
            for j in range(L)
        ]
    )
    sym = (
        rng.choice((-1.0, 1.0), size=(L, num_symbols))
        + 1j * rng.choice((-1.0, 1.0), size=(L, num_symbols))
    ) / np.sqrt(2.0)
    r = amps @ sym
    x = sym[cell]
    errors = np.count_nonzero(np.sign(r.real) != np.sign(x.real))
    errors += np.count_nonzero(np.sign(r.imag) != np.sign(x.imag))
    return errors / (2 * num_symbols)


def user_rate(sinr, frame, reuse_factor, sinr_cap_db=40.0):
    """Downlink rate map: (BW/RF) * (D/T) * log2(1 + SINR), in bit/s.

    ``+inf`` SINR (isolated-cell sentinel) is clamped to ``sinr_cap_db``
    before the log; finite values pass through untouched.
    """
    sinr = np.asarray(sinr, dtype=np.float64)
    if np.any(sinr < 0.0):
        raise ValueError("SINR cannot be negative")
    cap = 10.0 ** (sinr_cap_db / 10.0)
    capped = np.where(np.isinf(sinr), cap, sinr)
    prefactor = (frame.bandwidth_hz / reuse_factor) * (
        frame.symbols_downlink / frame.symbols_total
    )
    return prefactor * np.log2(1.0 + capped)


@dataclass(eq=False)
class AsymptoticReport:
    """Per-user limit metrics of one drop, all arrays ``[cell, pilot]``."""

    sinr: np.ndarray
    ber: np.ndarray
    rate: np.ndarray


def asymptotic_report(beta, gamma, phi, frame, reuse_factor, assign=None, sinr_cap_db=40.0):
    sinr = asymptotic_sinr(beta, gamma, phi, assign)
    ber = asymptotic_ber(beta, gamma, phi, assign)
    rate = user_rate(sinr, frame, reuse_factor, sinr_cap_db)
    return AsymptoticReport(sinr=sinr, ber=ber, rate=rate)
