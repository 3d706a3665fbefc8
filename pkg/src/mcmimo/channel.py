"""Fast fading, uplink pilot training and the contaminated CSI estimate.

Every BS correlates its received pilot block with the shared orthogonal
sequence set, so its estimate for pilot k mixes the channels of every
cell's pilot-k user plus a correlator noise term of variance 1/K.  The
per-antenna norm of an estimated row concentrates, as the antenna count
grows, at sqrt(sum_j gamma_j * beta_j + 1/K); that limit drives all the
asymptotic formulas.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import pilot_alpha_sq


def make_pilot_book(num_pilots):
    """Unit-modulus orthogonal pilot matrix (DFT basis), column k = pilot k."""
    if num_pilots < 1:
        raise ValueError("need at least one pilot")
    idx = np.arange(num_pilots)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / num_pilots)


@dataclass(eq=False)
class ChannelRealization:
    """Fast fading block ``h[l, j, k, :]`` from BS l to user k of cell j."""

    h: np.ndarray  # (L, L, K, N) complex, i.i.d. unit-variance entries
    beta: np.ndarray  # (L, K, L)

    @property
    def num_antennas(self):
        return self.h.shape[3]

    def g(self, bs, cell):
        """Composite channel matrix G_{bs,cell} of shape (K, N)."""
        return np.sqrt(self.beta[bs, :, cell])[:, None] * self.h[bs, cell]


def generate_channel(beta, num_antennas, rng):
    """Draw an i.i.d. circular complex normal fading block for one frame."""
    L, K, _ = beta.shape
    shape = (L, L, K, num_antennas)
    h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return ChannelRealization(h=h, beta=beta)


@dataclass(eq=False)
class CsiEstimate:
    """Correlator output per BS: ``ghat[l, k, :]`` is the pilot-k estimate."""

    ghat: np.ndarray  # (L, K, N) complex
    alpha_hat: np.ndarray  # (L, K): per-antenna row norms


@dataclass(eq=False)
class PowerProfile:
    """Per-user powers, all (L, K) and linear relative to unit noise."""

    gamma: np.ndarray  # uplink training powers
    phi: np.ndarray  # downlink transmit powers
    phi_max: np.ndarray  # downlink budgets

    def __post_init__(self):
        if not (self.gamma.shape == self.phi.shape == self.phi_max.shape):
            raise ValueError("power arrays must share one (L, K) shape")
        if np.any(self.gamma < 0) or np.any(self.phi < 0) or np.any(self.phi_max <= 0):
            raise ValueError("powers must be nonnegative and budgets positive")

    @classmethod
    def uniform(cls, num_cells, num_users, uplink_snr_db=10.0, downlink_snr_db=10.0):
        """Equal-power profile at the given SNRs, budget at the downlink level."""
        shape = (num_cells, num_users)
        return cls(
            gamma=np.full(shape, 10.0 ** (uplink_snr_db / 10.0)),
            phi=np.full(shape, 10.0 ** (downlink_snr_db / 10.0)),
            phi_max=np.full(shape, 10.0 ** (downlink_snr_db / 10.0)),
        )


def simulate_training(pilot_book, chan, gamma, rng, noise_scale=1.0):
    """Synchronized uplink training followed by pilot correlation.

    Per BS l the received block is ``Y_l = sum_j G_lj^T sqrt(Gamma_j) Psi + N``
    with unit-variance AWGN (scaled by ``noise_scale``; zero disables noise
    for algebra checks), and the estimate is ``Ghat_l^T = Y_l Psi^H / K``.
    """
    L, K, _ = chan.beta.shape
    N = chan.num_antennas
    if pilot_book.shape != (K, K):
        raise ValueError(f"pilot book must be {K}x{K}, got {pilot_book.shape}")
    if gamma.shape != (L, K):
        raise ValueError(f"gamma must be {L}x{K}, got {gamma.shape}")
    ghat = np.empty((L, K, N), dtype=np.complex128)
    psi_h = pilot_book.conj().T
    for l in range(L):
        y = np.zeros((N, K), dtype=np.complex128)
        for j in range(L):
            gt = chan.g(l, j).T * np.sqrt(gamma[j])[None, :]  # (N, K)
            y += gt @ pilot_book
        if noise_scale != 0.0:
            noise = rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K))
            y += noise_scale * noise / np.sqrt(2.0)
        ghat[l] = (y @ psi_h).T / K
    alpha_hat = np.linalg.norm(ghat, axis=2) / np.sqrt(N)
    return CsiEstimate(ghat=ghat, alpha_hat=alpha_hat)


def alpha_asymptotic(beta, gamma, pilot, bs, assign=None):
    """Almost-sure limit of the per-antenna CSI row norm for one pilot.

    Returns sqrt(sum over cells of gamma*beta for the pilot's users, plus
    the 1/K correlator noise floor).
    """
    L, K, _ = beta.shape
    if not (0 <= pilot < K and 0 <= bs < L):
        raise ValueError("pilot or BS index out of range")
    if assign is None:
        assign = np.tile(np.arange(K, dtype=np.int64), (L, 1))
    alpha2 = pilot_alpha_sq(beta, gamma, assign)
    return float(np.sqrt(alpha2[bs, pilot]))


def check_alpha_convergence(beta, gamma, antenna_counts, trials, rng, noise_scale=1.0):
    """Measured-vs-limit gap of the CSI row norms for growing antenna counts.

    Returns one row per antenna count with the median and mean absolute
    error between the measured squared norms and their limits, pooled over
    trials, BSs and pilots.  The error should shrink as N grows.
    """
    L, K, _ = beta.shape
    assign = np.tile(np.arange(K, dtype=np.int64), (L, 1))
    limit = pilot_alpha_sq(beta, gamma, assign)
    book = make_pilot_book(K)
    rows = []
    for n in antenna_counts:
        errs = np.empty((trials, L, K))
        for t in range(trials):
            chan = generate_channel(beta, n, rng)
            csi = simulate_training(book, chan, gamma, rng, noise_scale=noise_scale)
            errs[t] = np.abs(csi.alpha_hat**2 - limit)
        rows.append(
            {
                "num_antennas": int(n),
                "median_abs_error": float(np.median(errs)),
                "mean_abs_error": float(np.mean(errs)),
            }
        )
    return rows


def dump_csi(path, ghat):
    """Raw CSI dump: row-major float64 little-endian (re, im) pairs."""
    flat = np.empty(ghat.shape + (2,))
    flat[..., 0] = ghat.real
    flat[..., 1] = ghat.imag
    flat.astype("<f8").tofile(path)


def load_csi(path, shape):
    flat = np.fromfile(path, dtype="<f8").reshape(tuple(shape) + (2,))
    return flat[..., 0] + 1j * flat[..., 1]
