"""Vectorized numpy implementations of the hot per-drop kernels.

All kernels work on the pilot-resolved representation:

* ``beta[l, k, j]``  -- long-term channel gain from BS ``l`` to user ``k``
  of cell ``j`` (path loss times shadowing, linear scale).
* ``gamma[j, k]``    -- uplink training power of user ``k`` of cell ``j``.
* ``phi[j, k]``      -- downlink power cell ``j`` spends on its user ``k``.
* ``assign[j, k]``   -- index of the user of cell ``j`` holding pilot ``k``.

Outputs indexed ``[cell, pilot]`` refer to the user currently holding that
pilot in that cell.  The numba backend implements the same contracts with
explicit loops; ``MCMIMO_BACKEND=numpy`` selects this module.
"""

import numpy as np


def _amp_terms(beta, phi, assign):
    """Per-link quantities shared by the SINR/BER/interference kernels.

    Returns ``phi_sel[j, k]`` (power of the pilot-k user of cell j) and
    ``b[j, ell, k]`` (gain from BS j to the pilot-k user of cell ell).
    """
    L = beta.shape[0]
    cells = np.arange(L)
    phi_sel = np.take_along_axis(phi, assign, axis=1)
    b = beta[cells[:, None, None], assign[None, :, :], cells[None, :, None]]
    return phi_sel, b


def pilot_alpha_sq(beta, gamma, assign):
    """Large-antenna limit of the squared per-antenna CSI row norm.

    Returns ``a2[l, k] = sum_j gamma[j, u_jk] * beta[l, u_jk, j] + 1/K``
    where ``u_jk = assign[j, k]``: the training power BS ``l`` receives on
    pilot ``k`` (own user plus contamination) plus the correlator noise
    floor.
    """
    L, K, _ = beta.shape
    g = np.take_along_axis(gamma, assign, axis=1)  # (L, K)
    b = beta[:, assign, np.arange(L)[:, None]]  # (L, L, K): [l, j, k]
    return np.einsum("jk,ljk->lk", g, b) + 1.0 / K


def sinr_pilotwise(beta, phi, assign, alpha2):
    """Asymptotic downlink SINR of the pilot-``k`` user of each cell.

    Signal and interference are both weighted by the inverse CSI norms
    ``alpha2`` (precoder normalization); an empty interference sum yields
    ``+inf``.
    """
    L = beta.shape[0]
    cells = np.arange(L)
    phi_sel, b = _amp_terms(beta, phi, assign)
    terms = phi_sel[:, None, :] * b * b / alpha2[:, None, :]  # (j, ell, k)
    num = terms[cells, cells, :]
    den = terms.sum(axis=0) - num
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0.0, num / den, np.inf)


def ber_pilotwise(beta, phi, assign, alpha2, signs):
    """Exact asymptotic 4-QAM bit error rate of each pilot-``k`` user.

    ``signs`` is the ``(2**(L-1), L-1)`` matrix of interferer sign
    combinations; an error is counted whenever the signed interference sum
    reaches the desired amplitude (ties included).
    """
    L, K, _ = beta.shape
    cells = np.arange(L)
    phi_sel, b = _amp_terms(beta, phi, assign)
    amp = np.sqrt(phi_sel)[:, None, :] * b / np.sqrt(alpha2)[:, None, :]
    out = np.empty((L, K))
    for ell in range(L):
        others = [j for j in range(L) if j != ell]
        arg = signs @ amp[others, ell, :] - amp[ell, ell, :][None, :]
        out[ell] = (arg >= 0.0).mean(axis=0)
    return out


def interference_pilotwise(beta, phi, assign, alpha2):
    """Effective interference of each pilot-``k`` user.

    Equals ``phi / SINR`` of the previous iterate but is computed from the
    closed-form sum, so it stays defined when the user's own power is zero.
    """
    L = beta.shape[0]
    cells = np.arange(L)
    phi_sel, b = _amp_terms(beta, phi, assign)
    terms = phi_sel[:, None, :] * b * b / alpha2[:, None, :]
    own = terms[cells, cells, :]
    b_own = b[cells, cells, :]
    gain_own = b_own * b_own / alpha2  # (ell, k)
    return (terms.sum(axis=0) - own) / gain_own


def score_permutations(perms, beta, gamma, phi, assign, cell, criterion, signs):
    """Score every candidate pilot permutation of one cell.

    Other cells keep their current ``assign`` rows.  ``criterion`` codes:
    0 mean BER, 1 mean SINR, 2 max BER, 3 min SINR (raw values; the caller
    knows the optimization direction).
    """
    P, K = perms.shape
    L = beta.shape[0]
    others = np.array([j for j in range(L) if j != cell], dtype=np.int64)

    # base[k, l]: alpha^2 contribution of the frozen cells plus noise floor
    vu = assign[others, :]  # (L-1, K)
    g = gamma[others[:, None], vu]
    b_frozen = beta[:, vu, others[:, None]]  # (L, L-1, K)
    base = np.einsum("jk,ljk->kl", g, b_frozen) + 1.0 / K  # (K, L)

    # cross_phi[k, j]: downlink power of the pilot-k user of frozen cell j
    cross_phi = np.zeros((K, L))
    cross_phi[:, others] = np.take_along_axis(phi, assign, axis=1)[others, :].T

    bu = beta[:, :, cell][:, perms]  # (L, P, K): beta[l, candidate, cell]
    g_own = gamma[cell, perms]
    phi_own = phi[cell, perms]
    a2 = base.T[:, None, :] + g_own[None, :, :] * bu  # (L, P, K)

    if criterion in (1, 3):
        num = phi_own * bu[cell] ** 2 / a2[cell]
        weights = cross_phi.T[:, None, :]  # (L, 1, K), zero at own cell
        den = (weights * bu**2 / a2).sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(den > 0.0, num / den, np.inf)
        return vals.mean(axis=1) if criterion == 1 else vals.min(axis=1)

    s = np.sqrt(phi_own) * bu[cell] / np.sqrt(a2[cell])  # (P, K)
    t = np.sqrt(cross_phi.T[others, None, :]) * bu[others] / np.sqrt(a2[others])
    arg = np.einsum("rj,jpk->pkr", signs, t) - s[:, :, None]
    pe = (arg >= 0.0).mean(axis=2)  # (P, K)
    return pe.mean(axis=1) if criterion == 0 else pe.max(axis=1)
