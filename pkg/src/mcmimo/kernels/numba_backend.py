"""Numba-jitted loop implementations of the hot per-drop kernels.

Same contracts and index conventions as :mod:`mcmimo.kernels.numpy_backend`;
see that module for the argument layout.  These versions win once the
permutation search and Monte Carlo loops dominate the runtime.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def pilot_alpha_sq(beta, gamma, assign):
    L, K, _ = beta.shape
    out = np.empty((L, K))
    for l in range(L):
        for k in range(K):
            acc = 1.0 / K
            for j in range(L):
                u = assign[j, k]
                acc += gamma[j, u] * beta[l, u, j]
            out[l, k] = acc
    return out


@njit(cache=True)
def sinr_pilotwise(beta, phi, assign, alpha2):
    L, K, _ = beta.shape
    out = np.empty((L, K))
    for ell in range(L):
        for k in range(K):
            u = assign[ell, k]
            b_own = beta[ell, u, ell]
            num = phi[ell, u] * b_own * b_own / alpha2[ell, k]
            den = 0.0
            for j in range(L):
                if j == ell:
                    continue
                v = assign[j, k]
                b = beta[j, u, ell]
                den += phi[j, v] * b * b / alpha2[j, k]
            out[ell, k] = num / den if den > 0.0 else np.inf
    return out


@njit(cache=True)
def ber_pilotwise(beta, phi, assign, alpha2, signs):
    L, K, _ = beta.shape
    rows = signs.shape[0]
    out = np.empty((L, K))
    t = np.empty(max(L - 1, 1))
    for ell in range(L):
        for k in range(K):
            u = assign[ell, k]
            s = np.sqrt(phi[ell, u]) * beta[ell, u, ell] / np.sqrt(alpha2[ell, k])
            idx = 0
            for j in range(L):
                if j == ell:
                    continue
                v = assign[j, k]
                t[idx] = np.sqrt(phi[j, v]) * beta[j, u, ell] / np.sqrt(alpha2[j, k])
                idx += 1
            hits = 0
            for r in range(rows):
                acc = -s
                for c in range(L - 1):
                    acc += signs[r, c] * t[c]
                if acc >= 0.0:
                    hits += 1
            out[ell, k] = hits / rows
    return out


@njit(cache=True)
def interference_pilotwise(beta, phi, assign, alpha2):
    L, K, _ = beta.shape
    out = np.empty((L, K))
    for ell in range(L):
        for k in range(K):
            u = assign[ell, k]
            b_own = beta[ell, u, ell]
            gain_own = b_own * b_own / alpha2[ell, k]
            acc = 0.0
            for j in range(L):
                if j == ell:
                    continue
                v = assign[j, k]
                b = beta[j, u, ell]
                acc += phi[j, v] * b * b / alpha2[j, k]
            out[ell, k] = acc / gain_own
    return out


@njit(cache=True)
def score_permutations(perms, beta, gamma, phi, assign, cell, criterion, signs):
    P, K = perms.shape
    L = beta.shape[0]
    rows = signs.shape[0]

    base = np.empty((K, L))
    cross_phi = np.zeros((K, L))
    for k in range(K):
        for l in range(L):
            acc = 1.0 / K
            for j in range(L):
                if j == cell:
                    continue
                v = assign[j, k]
                acc += gamma[j, v] * beta[l, v, j]
            base[k, l] = acc
            if l != cell:
                cross_phi[k, l] = phi[l, assign[l, k]]

    scores = np.empty(P)
    a2 = np.empty(L)
    t = np.empty(max(L - 1, 1))
    for p in range(P):
        if criterion == 2:
            agg = -np.inf
        elif criterion == 3:
            agg = np.inf
        else:
            agg = 0.0
        for k in range(K):
            u = perms[p, k]
            g_own = gamma[cell, u]
            for l in range(L):
                a2[l] = base[k, l] + g_own * beta[l, u, cell]
            b_own = beta[cell, u, cell]
            if criterion == 1 or criterion == 3:
                num = phi[cell, u] * b_own * b_own / a2[cell]
                den = 0.0
                for j in range(L):
                    if j == cell:
                        continue
                    b = beta[j, u, cell]
                    den += cross_phi[k, j] * b * b / a2[j]
                val = num / den if den > 0.0 else np.inf
                if criterion == 1:
                    agg += val
                elif val < agg:
                    agg = val
            else:
                s = np.sqrt(phi[cell, u]) * b_own / np.sqrt(a2[cell])
                idx = 0
                for j in range(L):
                    if j == cell:
                        continue
                    t[idx] = np.sqrt(cross_phi[k, j]) * beta[j, u, cell] / np.sqrt(a2[j])
                    idx += 1
                hits = 0
                for r in range(rows):
                    acc2 = -s
                    for c in range(L - 1):
                        acc2 += signs[r, c] * t[c]
                    if acc2 >= 0.0:
                        hits += 1
                val = hits / rows
                if criterion == 0:
                    agg += val
                elif val > agg:
                    agg = val
        if criterion == 0 or criterion == 1:
            agg /= K
        scores[p] = agg
    return scores
