"""Numba JIT kernel backend.

The scatter kernels parallelize over *output rows*: source pixels are binned
by the upper grid row their footprint touches (done with a stable argsort on
the host side), and each output row consumes its two relevant bins in a fixed
source order.  Every output element is therefore written by exactly one
thread in one fixed order, making results bitwise identical for any worker
count.  The backward kernels parallelize over source pixels and only read
from shared arrays, which is race-free by construction.
"""

import os

os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from contextlib import contextmanager

import numba
import numpy as np
from numba import njit, prange

name = "numba"


@contextmanager
def _worker_limit(workers):
    if workers is None:
        yield
        return
    limit = int(numba.config.NUMBA_NUM_THREADS)
    prev = numba.get_num_threads()
    numba.set_num_threads(max(1, min(int(workers), limit)))
    try:
        yield
    finally:
        numba.set_num_threads(prev)


@njit(cache=True, parallel=True)
def _scatter(vals, ixi, wxl, wxr, wyt, wyb, qidx, starts, out):
    height, width, k = out.shape
    for r in prange(height):
        # bin r: sources one row up splatting their south corners (weight fy);
        # bin r+1: sources on this row splatting north corners (weight 1-fy)
        for half in range(2):
            b = r + half
            for o in range(starts[b], starts[b + 1]):
                q = qidx[o]
                wy = wyb[q] if half == 0 else wyt[q]
                if wy == 0.0:
                    continue
                x0 = ixi[q]
                wl = wy * wxl[q]
                if 0 <= x0 < width and wl != 0.0:
                    for j in range(k):
                        out[r, x0, j] += vals[q, j] * wl
                x1 = x0 + 1
                wr = wy * wxr[q]
                if 0 <= x1 < width and wr != 0.0:
                    for j in range(k):
                        out[r, x1, j] += vals[q, j] * wr


@njit(cache=True, parallel=True)
def _scatter_norm(src, wq, den, cov, ixi, wxl, wxr, wyt, wyb, qidx, starts, out):
    height, width, c = out.shape
    for r in prange(height):
        for half in range(2):
            b = r + half
            for o in range(starts[b], starts[b + 1]):
                q = qidx[o]
                wy = wyb[q] if half == 0 else wyt[q]
                if wy == 0.0:
                    continue
                for cx in range(2):
                    x = ixi[q] + cx
                    if x < 0 or x >= width or not cov[r, x]:
                        continue
                    wx = wxl[q] if cx == 0 else wxr[q]
                    if wx == 0.0:
                        continue
                    # dividing the corner weight by the target total keeps a
                    # sole contributor exactly equal to its source (w/w == 1)
                    t = (wq[q] * (wx * wy)) / den[r, x]
                    for j in range(c):
                        out[r, x, j] += t * src[q, j]


@njit(cache=True, parallel=True)
def _gather_backward(src, g, den, cov, outn, wq, dz_kind, ixi, iyi,
                     wxl, wxr, wyt, wyb, xact, yact, valid,
                     ds, dfx, dfy, dz):
    n, c = src.shape
    height, width, _ = g.shape
    for q in prange(n):
        if not valid[q]:
            continue
        wqq = wq[q]
        afx = 0.0
        afy = 0.0
        az = 0.0
        for half in range(2):
            r = iyi[q] + half
            if r < 0 or r >= height:
                continue
            wy = wyt[q] if half == 0 else wyb[q]
            sy = -1.0 if half == 0 else 1.0
            for cx in range(2):
                x = ixi[q] + cx
                if x < 0 or x >= width or not cov[r, x]:
                    continue
                wx = wxl[q] if cx == 0 else wxr[q]
                sx = -1.0 if cx == 0 else 1.0
                d = den[r, x]
                w = wy * wx
                t = (wqq * w) / d
                bs = 0.0
                for j in range(c):
                    gj = g[r, x, j]
                    ds[q, j] += t * gj
                    bs += gj * (src[q, j] - outn[r, x, j])
                q2 = bs / d
                bf = wqq * q2
                afx += (sx * wy) * bf
                afy += (sy * wx) * bf
                if dz_kind == 1:
                    az += w * q2
                elif dz_kind == 2:
                    az += w * bf
        if xact[q]:
            dfx[q] = afx
        if yact[q]:
            dfy[q] = afy
        if dz_kind != 0:
            dz[q] = az


@njit(cache=True, parallel=True)
def _bilinear(src, sx, sy, out):
    hs, ws, c = src.shape
    ho, wo = sx.shape
    for r in prange(ho):
        for col in range(wo):
            x = sx[r, col]
            y = sy[r, col]
            if not (-1.0 < x < ws and -1.0 < y < hs):
                continue
            x0 = int(np.floor(x))
            y0 = int(np.floor(y))
            fx = x - x0
            fy = y - y0
            x1 = x0 + 1
            y1 = y0 + 1
            for j in range(c):
                acc = 0.0
                if 0 <= y0 < hs:
                    if 0 <= x0 < ws:
                        acc += (1.0 - fy) * (1.0 - fx) * src[y0, x0, j]
                    if 0 <= x1 < ws:
                        acc += (1.0 - fy) * fx * src[y0, x1, j]
                if 0 <= y1 < hs:
                    if 0 <= x0 < ws:
                        acc += fy * (1.0 - fx) * src[y1, x0, j]
                    if 0 <= x1 < ws:
                        acc += fy * fx * src[y1, x1, j]
                out[r, col, j] = acc


def scatter(vals, fp, workers=None):
    out = np.zeros((fp.height, fp.width, vals.shape[1]), dtype=vals.dtype)
    with _worker_limit(workers):
        _scatter(vals, fp.ixi, fp.wxl, fp.wxr, fp.wyt, fp.wyb,
                 fp.qidx, fp.starts, out)
    return out


def scatter_norm(src, wq, den, covered, fp, workers=None):
    out = np.zeros((fp.height, fp.width, src.shape[1]), dtype=src.dtype)
    with _worker_limit(workers):
        _scatter_norm(src, wq, den, covered, fp.ixi, fp.wxl, fp.wxr,
                      fp.wyt, fp.wyb, fp.qidx, fp.starts, out)
    return out


def gather_backward(src, g, den, covered, outn, wq, dz_kind, fp, workers=None):
    n, c = src.shape
    ds = np.zeros((n, c), dtype=src.dtype)
    dfx = np.zeros(n, dtype=src.dtype)
    dfy = np.zeros(n, dtype=src.dtype)
    dz = np.zeros(n, dtype=src.dtype)
    with _worker_limit(workers):
        _gather_backward(src, g, den, covered, outn, wq, dz_kind,
                         fp.ixi, fp.iyi, fp.wxl, fp.wxr, fp.wyt, fp.wyb,
                         fp.xact, fp.yact, fp.valid, ds, dfx, dfy, dz)
    return ds, dfx, dfy, (dz if dz_kind != 0 else None)


def bilinear_gather(src, sx, sy, workers=None):
    out = np.zeros(sx.shape + (src.shape[2],), dtype=src.dtype)
    with _worker_limit(workers):
        _bilinear(src, sx, sy, out)
    return out
