"""Exact grid maximization kernels (numba-compiled).

For each node x the candidate list is a precomputed offset schedule
sorted by (distance^2, lexicographic offset); the scan keeps the first
maximizer under that order and counts exact ties.  Penalties are
nondecreasing along the schedule, so the scan stops as soon as
pens[k] > max(u) - best: no later candidate can win or tie.  The padded
array carries -inf outside the domain; the zero offset comes first, so
every node starts from the finite candidate u(x) and the padding never
ties.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def brute_max_1d(padded, pens, dz, pad, n):
    best = np.empty(n)
    bestk = np.zeros(n, dtype=np.int64)
    ties = np.zeros(n, dtype=np.int64)
    m = dz.shape[0]
    umax = -np.inf
    for i in range(n):
        if padded[pad + i] > umax:
            umax = padded[pad + i]
    for i in range(n):
        b = -np.inf
        bk = 0
        t = 0
        for k in range(m):
            if pens[k] > umax - b:
                break
            c = padded[pad + i + dz[k]] - pens[k]
            if c > b:
                b = c
                bk = k
                t = 0
            elif c == b:
                t += 1
        best[i] = b
        bestk[i] = bk
        ties[i] = t
    return best, bestk, ties


@njit(cache=True)
def brute_max_2d(padded, pens, dzx, dzy, padx, pady, nx, ny):
    best = np.empty((nx, ny))
    bestk = np.zeros((nx, ny), dtype=np.int64)
    ties = np.zeros((nx, ny), dtype=np.int64)
    m = dzx.shape[0]
    umax = -np.inf
    for i in range(nx):
        for j in range(ny):
            if padded[padx + i, pady + j] > umax:
                umax = padded[padx + i, pady + j]
    for i in range(nx):
        for j in range(ny):
            b = -np.inf
            bk = 0
            t = 0
            for k in range(m):
                if pens[k] > umax - b:
                    break
                c = padded[padx + i + dzx[k], pady + j + dzy[k]] - pens[k]
                if c > b:
                    b = c
                    bk = k
                    t = 0
                elif c == b:
                    t += 1
            best[i, j] = b
            bestk[i, j] = bk
            ties[i, j] = t
    return best, bestk, ties
