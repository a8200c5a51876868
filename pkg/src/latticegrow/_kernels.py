"""Numba kernels for the long one-dimensional runs.

Mirrors ``ChainState`` in ``fast`` mode draw for draw: boundary sites
and occupied sites are indexed in increasing order.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

_CAP = 1 << 14
_CHUNK = 1 << 16


@nb.njit(cache=True)
def _pick(u, m):
    j = int(math.ceil(u * m))
    if j < 1:
        return 1
    if j > m:
        return m
    return j


@nb.njit(cache=True)
def _proximity_counts(gl, gr, gn, G, only_new, buf):
    m = 0
    for k in range(G):
        if only_new and gn[k] == 0:
            continue
        for x in range(gl[k], gr[k] + 1):
            buf[m] = x
            m += 1
    c1 = 0
    c2 = 0
    lo = 0
    hi = 0
    for k in range(m):
        s = buf[k]
        while buf[lo] < s - 4:
            lo += 1
        while hi < m and buf[hi] <= s + 4:
            hi += 1
        others = hi - lo - 1
        if others >= 1:
            c1 += 1
        if others >= 2:
            c2 += 1
    return c1, c2


@nb.njit(cache=True)
def _periods(meta, gl, gr, gn, K, draws, out, row0, buf):
    lo = meta[0]
    hi = meta[1]
    G = meta[2]
    L = meta[3]
    kappa = 2 * K - 1
    nper = draws.shape[0] // kappa
    for p in range(nper):
        ra = 0
        rd = 0
        for i in range(kappa):
            u = draws[p * kappa + i]
            if i < K:
                m = 2
                for k in range(G):
                    m += 1 if gl[k] == gr[k] else 2
                j = _pick(u, m)
                if j == 1:
                    lo -= 1
                elif j == m:
                    hi += 1
                else:
                    j -= 1
                    k = 0
                    while True:
                        nb_ = 1 if gl[k] == gr[k] else 2
                        if j <= nb_:
                            break
                        j -= nb_
                        k += 1
                    ra += 1
                    L -= 1
                    if gl[k] == gr[k]:
                        for q in range(k, G - 1):
                            gl[q] = gl[q + 1]
                            gr[q] = gr[q + 1]
                            gn[q] = gn[q + 1]
                        G -= 1
                    elif j == 1:
                        gl[k] += 1
                    else:
                        gr[k] -= 1
            else:
                n = hi - lo + 1 - L
                j = _pick(u, n)
                y = lo + j - 1
                k = 0
                while k < G and gl[k] <= y:
                    y += gr[k] - gl[k] + 1
                    k += 1
                # k is the index of the first gap right of y
                if y == lo:
                    if G > 0 and gl[0] == y + 1:
                        lo = gr[0] + 1
                        L -= gr[0] - gl[0] + 1
                        for q in range(0, G - 1):
                            gl[q] = gl[q + 1]
                            gr[q] = gr[q + 1]
                            gn[q] = gn[q + 1]
                        G -= 1
                    else:
                        lo = y + 1
                elif y == hi:
                    if G > 0 and gr[G - 1] == y - 1:
                        hi = gl[G - 1] - 1
                        L -= gr[G - 1] - gl[G - 1] + 1
                        G -= 1
                    else:
                        hi = y - 1
                else:
                    rd += 1
                    L += 1
                    has_left = k > 0 and gr[k - 1] == y - 1
                    has_right = k < G and gl[k] == y + 1
                    old = (has_left and gn[k - 1] == 0) or (has_right and gn[k] == 0)
                    new = 0 if old else 1
                    if has_left and has_right:
                        gr[k - 1] = gr[k]
                        gn[k - 1] = new
                        for q in range(k, G - 1):
                            gl[q] = gl[q + 1]
                            gr[q] = gr[q + 1]
                            gn[q] = gn[q + 1]
                        G -= 1
                    elif has_left:
                        gr[k - 1] = y
                        gn[k - 1] = new
                    elif has_right:
                        gl[k] = y
                        gn[k] = new
                    else:
                        if G + 1 > gl.shape[0]:
                            meta[0] = lo
                            meta[1] = hi
                            meta[2] = G
                            meta[3] = L
                            return -1
                        for q in range(G, k, -1):
                            gl[q] = gl[q - 1]
                            gr[q] = gr[q - 1]
                            gn[q] = gn[q - 1]
                        gl[k] = y
                        gr[k] = y
                        gn[k] = 1
                        G += 1
        r = row0 + p
        out[r, 1] = hi - lo + 1 - L
        out[r, 2] = L
        out[r, 3] = G
        g2 = 0
        li = 0
        gi = 0
        g2i = 0
        for k in range(G):
            s = gr[k] - gl[k] + 1
            if s >= 2:
                g2 += 1
            if gn[k] == 1:
                li += s
                gi += 1
                if s >= 2:
                    g2i += 1
        out[r, 4] = g2
        out[r, 5] = li
        out[r, 6] = gi
        out[r, 7] = g2i
        if buf.shape[0] < L:
            meta[0] = lo
            meta[1] = hi
            meta[2] = G
            meta[3] = L
            return -(p + 2)
        c1, c2 = _proximity_counts(gl, gr, gn, G, False, buf)
        out[r, 8] = c1
        out[r, 9] = c2
        c1, c2 = _proximity_counts(gl, gr, gn, G, True, buf)
        out[r, 10] = c1
        out[r, 11] = c2
        out[r, 12] = ra
        out[r, 13] = rd
    meta[0] = lo
    meta[1] = hi
    meta[2] = G
    meta[3] = L
    return nper


def run_fast(st, K, periods, stream):
    """Run ``periods`` periods from ``st`` (mutated in place); return rows."""
    from .lattice1d import COLUMNS

    kappa = 2 * K - 1
    G = len(st.gaps)
    L = st.L()
    cap = max(_CAP, 2 * G + 16)
    gl = np.zeros(cap, np.int64)
    gr = np.zeros(cap, np.int64)
    gn = np.zeros(cap, np.int8)
    for k, (l, r, new) in enumerate(st.gaps):
        gl[k], gr[k], gn[k] = l, r, 1 if new else 0
    meta = np.array([st.lo, st.hi, G, L], np.int64)
    out = np.zeros((periods + 1, len(COLUMNS)), np.int64)
    out[:, 0] = np.arange(periods + 1)
    out[0, 1:12] = st.observables()
    buf = np.zeros(max(_CAP, 2 * L + 16), np.int64)
    done = 0
    while done < periods:
        n = min(_CHUNK, periods - done)
        draws = stream.take(n * kappa)
        got = _periods(meta, gl, gr, gn, K, draws, out, done + 1, buf)
        if got < 0:
            raise RuntimeError("gap buffer capacity exceeded; rerun with the python backend")
        done += n
    lo, hi, G, _ = (int(v) for v in meta)
    st.lo, st.hi = lo, hi
    st.gaps = [[int(gl[k]), int(gr[k]), bool(gn[k])] for k in range(G)]
    return out
