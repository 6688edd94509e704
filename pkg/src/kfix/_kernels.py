"""Compiled inner loops for the collision sums.

For slices ``a`` and ``b`` on the velocity grid the routine returns, at the
requested output nodes ``v``,

    gab(v) = sum_u sum_k w_k dv^n B(omega_k, u - v) a(u') b(v')
    gba(v) = sum_u sum_k w_k dv^n B(omega_k, u - v) b(u') a(v')
    wa(v)  = sum_u sum_k w_k dv^n B(omega_k, u - v) a(u)
    wb(v)  = sum_u sum_k w_k dv^n B(omega_k, u - v) b(u)

with ``a(u')`` read by multilinear interpolation (zero outside the grid).
Every collision operator in the package is assembled from these four sums.
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange

HARD_SPHERE, MAXWELL, VHS = 0, 1, 2
# below this relative speed u and v are the same node; the direction is undefined
COINCIDENT = 1e-12


@njit(cache=True, inline="always")
def _kernel(form, strength, lam, r, p):
    p = abs(p)
    if form == HARD_SPHERE:
        return strength * p
    if r <= COINCIDENT:
        return 0.0
    if form == MAXWELL:
        return strength * p / r
    return strength * r**lam * p / r


@njit(cache=True, inline="always")
def _locate(x, n, edge_tol):
    """Cell index and fraction for index-space coordinate ``x``; -1 if outside."""
    if x < -edge_tol or x > n - 1 + edge_tol:
        return -1, 0.0
    if x < 0.0:
        x = 0.0
    elif x > n - 1:
        x = n - 1.0
    i0 = int(x)
    if i0 >= n - 1:
        i0 = n - 2
    return i0, x - i0


@njit(cache=True, inline="always")
def _interp2(arr, s, i, j, tx, ty, n):
    base = i * n + j
    return ((1.0 - tx) * ((1.0 - ty) * arr[s, base] + ty * arr[s, base + 1])
            + tx * ((1.0 - ty) * arr[s, base + n] + ty * arr[s, base + n + 1]))


@njit(cache=True, inline="always")
def _interp3(arr, s, i, j, k, tx, ty, tz, n):
    nn = n * n
    b0 = i * nn + j * n + k
    b1 = b0 + nn
    c00 = (1.0 - tz) * arr[s, b0] + tz * arr[s, b0 + 1]
    c01 = (1.0 - tz) * arr[s, b0 + n] + tz * arr[s, b0 + n + 1]
    c10 = (1.0 - tz) * arr[s, b1] + tz * arr[s, b1 + 1]
    c11 = (1.0 - tz) * arr[s, b1 + n] + tz * arr[s, b1 + n + 1]
    return ((1.0 - tx) * ((1.0 - ty) * c00 + ty * c01)
            + tx * ((1.0 - ty) * c10 + ty * c11))


@njit(parallel=True, cache=True)
def pair_sums(a, b, nodes, order, r2, out_idx, omegas, weights, form, strength, lam,
              lo, dv, n, r2max, both, edge_tol):
    """See module docstring.

    ``order`` lists node indices sorted by ``r2 = |u|^2``; nodes with
    ``|u|^2 + |v|^2 > r2max`` contribute nothing (the caller derives
    ``r2max`` from the supports) and are skipped. ``both=False`` skips
    ``gba``/``wb`` when ``a is b``.
    """
    S = a.shape[0]
    K = out_idx.shape[0]
    dim = nodes.shape[1]
    nw = omegas.shape[0]
    cell = dv**dim
    inv = 1.0 / dv
    wk = weights * cell
    gab = np.zeros((S, K))
    gba = np.zeros((S, K))
    wa = np.zeros((S, K))
    wb = np.zeros((S, K))
    for task in prange(S * K):
        s = task // K
        j = task % K
        vi = out_idx[j]
        rem = r2max - r2[vi]
        if rem < 0.0:
            continue
        v0 = nodes[vi, 0]
        v1 = nodes[vi, 1]
        v2 = nodes[vi, 2] if dim == 3 else 0.0
        acc_ab = 0.0
        acc_ba = 0.0
        acc_a = 0.0
        acc_b = 0.0
        for m in range(order.shape[0]):
            ui = order[m]
            if r2[ui] > rem:
                break
            u0 = nodes[ui, 0]
            u1 = nodes[ui, 1]
            u2 = nodes[ui, 2] if dim == 3 else 0.0
            g0 = u0 - v0
            g1 = u1 - v1
            g2 = u2 - v2
            gn = np.sqrt(g0 * g0 + g1 * g1 + g2 * g2)
            wsum = 0.0
            for k in range(nw):
                o0 = omegas[k, 0]
                o1 = omegas[k, 1]
                o2 = omegas[k, 2] if dim == 3 else 0.0
                proj = o0 * g0 + o1 * g1 + o2 * g2
                B = _kernel(form, strength, lam, gn, proj) * wk[k]
                if B == 0.0:
                    continue
                wsum += B
                iu0, tu0 = _locate((u0 - proj * o0 - lo) * inv, n, edge_tol)
                iu1, tu1 = _locate((u1 - proj * o1 - lo) * inv, n, edge_tol)
                iv0, tv0 = _locate((v0 + proj * o0 - lo) * inv, n, edge_tol)
                iv1, tv1 = _locate((v1 + proj * o1 - lo) * inv, n, edge_tol)
                if iu0 < 0 or iu1 < 0 or iv0 < 0 or iv1 < 0:
                    continue
                if dim == 3:
                    iu2, tu2 = _locate((u2 - proj * o2 - lo) * inv, n, edge_tol)
                    iv2, tv2 = _locate((v2 + proj * o2 - lo) * inv, n, edge_tol)
                    if iu2 < 0 or iv2 < 0:
                        continue
                    au = _interp3(a, s, iu0, iu1, iu2, tu0, tu1, tu2, n)
                    bv = _interp3(b, s, iv0, iv1, iv2, tv0, tv1, tv2, n)
                    acc_ab += B * au * bv
                    if both:
                        bu = _interp3(b, s, iu0, iu1, iu2, tu0, tu1, tu2, n)
                        av = _interp3(a, s, iv0, iv1, iv2, tv0, tv1, tv2, n)
                        acc_ba += B * bu * av
                else:
                    au = _interp2(a, s, iu0, iu1, tu0, tu1, n)
                    bv = _interp2(b, s, iv0, iv1, tv0, tv1, n)
                    acc_ab += B * au * bv
                    if both:
                        bu = _interp2(b, s, iu0, iu1, tu0, tu1, n)
                        av = _interp2(a, s, iv0, iv1, tv0, tv1, n)
                        acc_ba += B * bu * av
            acc_a += wsum * a[s, ui]
            if both:
                acc_b += wsum * b[s, ui]
        gab[s, j] = acc_ab
        wa[s, j] = acc_a
        if both:
            gba[s, j] = acc_ba
            wb[s, j] = acc_b
        else:
            gba[s, j] = acc_ab
            wb[s, j] = acc_a
    return gab, gba, wa, wb
