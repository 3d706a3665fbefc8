"""Finite-antenna MF and ZF precoding and the downlink symbol simulation.

Used by the convergence study: measured per-user SINR and uncoded 4-QAM
BER at growing antenna counts approach the closed-form limits in
:mod:`mcmimo.asymptotics`.  Both precoders normalize every column to unit
norm, which is what makes their limits coincide.
"""

from dataclasses import dataclass

import numpy as np


class DegenerateChannelError(ValueError):
    """CSI row with zero norm; cannot point a beam."""


class SingularChannelError(ValueError):
    """Estimated channel matrix too ill-conditioned to invert."""

    def __init__(self, message, condition):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


def mf_precoder(csi):
    """Matched filter: column k of BS j is the normalized conjugate of
    its pilot-k estimate."""
    ghat = csi.ghat  # (L, K, N)
    norms = np.linalg.norm(ghat, axis=2)
    if np.any(norms == 0.0):
        raise DegenerateChannelError("zero-norm CSI row")
    return (ghat.conj() / norms[:, :, None]).transpose(0, 2, 1)  # (L, N, K)


def zf_precoder(csi, cond_limit=1e10):
    """Zero forcing: columns of Ghat^H (Ghat Ghat^H)^-1, normalized.

    Raises :class:`SingularChannelError` with the condition estimate when
    the Gram matrix is numerically rank deficient.
    """
    ghat = csi.ghat
    L, K, N = ghat.shape
    if N < K:
        raise SingularChannelError("need at least as many antennas as users", np.inf)
    out = np.empty((L, N, K), dtype=np.complex128)
    for l in range(L):
        gram = ghat[l] @ ghat[l].conj().T
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularChannelError(f"rank-deficient estimate at BS {l}", cond)
        w = ghat[l].conj().T @ np.linalg.solve(gram, np.eye(K))
        out[l] = w / np.linalg.norm(w, axis=0)[None, :]
    return out


@dataclass(eq=False)
class SymbolFrame:
    """Gray-mapped 4-QAM payload, unit average symbol power."""

    symbols: np.ndarray  # (L, K, T) complex
    bits: np.ndarray  # (L, K, T, 2) in {0, 1}


def make_symbol_frame(num_cells, num_users, num_trials, rng):
    bits = rng.integers(0, 2, size=(num_cells, num_users, num_trials, 2))
    symbols = ((1 - 2 * bits[..., 0]) + 1j * (1 - 2 * bits[..., 1])) / np.sqrt(2.0)
    return SymbolFrame(symbols=symbols, bits=bits)


def simulate_downlink(precoders, chan, phi, frame, rng, noise_scale=1.0):
    """Received sample of every user for every trial, shape (L, K, T).

    Sums the beamformed transmissions of all BSs over the true channels
    and adds unit-variance receiver noise (scaled by ``noise_scale``).
    """
    L, K, _ = chan.beta.shape
    if precoders.shape[0] != L or precoders.shape[2] != K:
        raise ValueError("precoder tensor shape mismatch")
    if phi.shape != (L, K):
        raise ValueError(f"phi must be {L}x{K}, got {phi.shape}")
    # hp[j, l, k, m]: response of user k of cell l to stream m of BS j;
    # reception is the plain channel-times-precoder product, the
    # conjugation sits inside the precoding vectors
    hp = np.einsum("jlkn,jnm->jlkm", chan.h, precoders)
    b = chan.beta.transpose(0, 2, 1)  # b[j, l, k] = beta[j, k, l]
    eff = np.sqrt(phi)[:, None, None, :] * np.sqrt(b)[:, :, :, None] * hp
    r = np.einsum("jlkm,jmt->lkt", eff, frame.symbols)
    if noise_scale != 0.0:
        T = frame.symbols.shape[2]
        noise = rng.standard_normal((L, K, T)) + 1j * rng.standard_normal((L, K, T))
        r = r + noise_scale * noise / np.sqrt(2.0)
    return r


def empirical_metrics(received, frame):
    """Uncoded BER and measured SINR per user from Monte Carlo trials.

    BER sign-detects each quadrature rail against the transmitted bits.
    SINR regresses the received samples on the known symbols: the fitted
    coefficient gives the useful power, the residual the interference plus
    noise.  Needs enough trials for the regression to settle; the
    estimator saturates around the trial count.
    """
    if received.shape != frame.symbols.shape:
        raise ValueError("received block and frame shapes differ")
    if received.shape[2] < 1:
        raise ValueError("need at least one trial")
    bits_re = (received.real < 0.0).astype(np.int64)
    bits_im = (received.imag < 0.0).astype(np.int64)
    errs = (bits_re != frame.bits[..., 0]) + (bits_im != frame.bits[..., 1])
    ber = errs.sum(axis=2) / (2.0 * received.shape[2])
    x = frame.symbols
    coeff = (received * x.conj()).mean(axis=2) / (np.abs(x) ** 2).mean(axis=2)
    resid = received - coeff[:, :, None] * x
    resid_power = (np.abs(resid) ** 2).mean(axis=2)
    with np.errstate(divide="ignore"):
        sinr = np.abs(coeff) ** 2 / resid_power
    return ber, sinr
