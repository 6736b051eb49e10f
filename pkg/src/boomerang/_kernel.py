"""Compiled inner loop for the pairwise update.

Every code path that changes opinions (single updates, sampled runs, replays)
goes through ``_apply`` so results agree bit for bit.
"""

import numba as nb
import numpy as np


@nb.njit(cache=True, inline="always")
def _settle(v, lo, hi, slack):
    # the exact result lies in [lo, hi]; anything beyond ``slack`` is a logic error
    if v < lo:
        if lo - v > slack:
            return v, False
        return lo, True
    if v > hi:
        if v - hi > slack:
            return v, False
        return hi, True
    return v, True


@nb.njit(cache=True)
def _apply(x, i, j, s, w, o_min, o_max, slack):
    xi = x[i]
    xj = x[j]
    if s > 0:
        ni = xi + w[i] * (xj - xi)
        nj = xj + w[j] * (xi - xj)
        lo = min(xi, xj)
        hi = max(xi, xj)
        ni, ok_i = _settle(ni, lo, hi, slack)
        nj, ok_j = _settle(nj, lo, hi, slack)
    elif xi < xj:
        ni = xi + w[i] * (o_min - xi)
        nj = xj + w[j] * (o_max - xj)
        ni, ok_i = _settle(ni, o_min, xi, slack)
        nj, ok_j = _settle(nj, xj, o_max, slack)
    elif xj < xi:
        ni = xi + w[i] * (o_max - xi)
        nj = xj + w[j] * (o_min - xj)
        ni, ok_i = _settle(ni, xi, o_max, slack)
        nj, ok_j = _settle(nj, o_min, xj, slack)
    else:
        # tie: each agent satisfies x_i >= x_j, so both move up
        ni = xi + w[i] * (o_max - xi)
        nj = xj + w[j] * (o_max - xj)
        ni, ok_i = _settle(ni, xi, o_max, slack)
        nj, ok_j = _settle(nj, xj, o_max, slack)
    x[i] = ni
    x[j] = nj
    return ok_i and ok_j


@nb.njit(cache=True)
def run_edges(x, idx, ei, ej, es, w, o_min, o_max, slack, t0, stride, rec, rec_t, r0):
    """Apply edges ``idx`` in order to ``x`` (in place).

    After global step ``t0 + k + 1`` the state is copied into ``rec[r]`` when
    that step is a multiple of ``stride``. Returns ``(fail, r)`` where ``fail``
    is the local index of a range violation or -1, and ``r`` the next free
    record slot.
    """
    r = r0
    for k in range(idx.size):
        e = idx[k]
        if not _apply(x, ei[e], ej[e], es[e], w, o_min, o_max, slack):
            return k, r
        t = t0 + k + 1
        if t % stride == 0:
            rec[r, :] = x
            rec_t[r] = t
            r += 1
    return -1, r


def slack_for(o_min: float, o_max: float) -> float:
    """Four units in the last place at the magnitude of the opinion bounds."""
    return 4.0 * float(np.spacing(max(abs(o_min), abs(o_max), 1e-300)))
