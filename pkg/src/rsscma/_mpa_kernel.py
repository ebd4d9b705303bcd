"""Compiled inner loop of the SCMA message passing detector."""

import numpy as np
from numba import njit

# group sums below this are recomputed with their own maximum to avoid underflow
_TINY = 1e-250


@njit(cache=True, nogil=True)
def _resource_update(L, b, c0, c1, combos, e0, d, M, v2r, r2v, T, E, S):
    n = c1 - c0
    tmax = -np.inf
    for c in range(n):
        t = L[b, c0 + c]
        for p in range(d):
            t += v2r[e0 + p, combos[c0 + c, p]]
        T[c] = t
        if t > tmax:
            tmax = t
    S[:d, :] = 0.0
    for c in range(n):
        ec = np.exp(T[c] - tmax)
        E[c] = ec
        for p in range(d):
            S[p, combos[c0 + c, p]] += ec
    for p in range(d):
        for m in range(M):
            if S[p, m] > _TINY:
                r2v[e0 + p, m] = np.log(S[p, m]) + tmax - v2r[e0 + p, m]
            else:
                gmax = -np.inf
                for c in range(n):
                    if combos[c0 + c, p] == m and T[c] > gmax:
                        gmax = T[c]
                acc = 0.0
                for c in range(n):
                    if combos[c0 + c, p] == m:
                        acc += np.exp(T[c] - gmax)
                r2v[e0 + p, m] = np.log(acc) + gmax - v2r[e0 + p, m]


@njit(cache=True, nogil=True)
def mpa_kernel(L, combo_off, combos, edge_off, user_edges, M, iterations):
    """Run ``iterations`` flooding rounds for each row of ``L``; return log posteriors (B, J, M)."""
    B = L.shape[0]
    K = combo_off.shape[0] - 1
    n_edges = edge_off[K]
    J = user_edges.shape[0]
    cmax = 0
    dmax = combos.shape[1]
    for k in range(K):
        cmax = max(cmax, combo_off[k + 1] - combo_off[k])
    out = np.empty((B, J, M))
    v2r = np.empty((n_edges, M))
    r2v = np.empty((n_edges, M))
    T = np.empty(cmax)
    E = np.empty(cmax)
    S = np.empty((dmax, M))
    tot = np.empty(M)
    for b in range(B):
        v2r[:, :] = 0.0
        for _ in range(iterations):
            for k in range(K):
                _resource_update(
                    L, b, combo_off[k], combo_off[k + 1], combos, edge_off[k],
                    edge_off[k + 1] - edge_off[k], M, v2r, r2v, T, E, S,
                )
            for u in range(J):
                tot[:] = 0.0
                for i in range(user_edges.shape[1]):
                    e = user_edges[u, i]
                    if e >= 0:
                        for m in range(M):
                            tot[m] += r2v[e, m]
                for i in range(user_edges.shape[1]):
                    e = user_edges[u, i]
                    if e >= 0:
                        mx = -np.inf
                        for m in range(M):
                            v2r[e, m] = tot[m] - r2v[e, m]
                            if v2r[e, m] > mx:
                                mx = v2r[e, m]
                        for m in range(M):
                            v2r[e, m] -= mx
        for u in range(J):
            tot[:] = 0.0
            for i in range(user_edges.shape[1]):
                e = user_edges[u, i]
                if e >= 0:
                    for m in range(M):
                        tot[m] += r2v[e, m]
            mx = tot.max()
            acc = 0.0
            for m in range(M):
                acc += np.exp(tot[m] - mx)
            lse = np.log(acc) + mx
            for m in range(M):
                out[b, u, m] = tot[m] - lse
    return out
