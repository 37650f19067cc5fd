"""Pure-numpy kernel backend.

Sequential reference implementation of the kernel contract.  Scatters run as
four fixed-order masked ``np.add.at`` passes (north-west, north-east,
south-west, south-east), so results are deterministic; the ``workers``
argument is accepted for interface parity and ignored.
"""

import numpy as np

name = "numpy"

# (x-weight field, y-weight field, x offset, y offset, d wx / d fx, d wy / d fy)
_CORNERS = (
    ("wxl", "wyt", 0, 0, -1.0, -1.0),
    ("wxr", "wyt", 1, 0, +1.0, -1.0),
    ("wxl", "wyb", 0, 1, -1.0, +1.0),
    ("wxr", "wyb", 1, 1, +1.0, +1.0),
)


def _corner_select(fp, cx, cy, wxf, wyf):
    """Indices of source pixels whose (cx, cy) corner lands inside the grid."""
    px = fp.ixi + cx
    py = fp.iyi + cy
    m = fp.valid & (px >= 0) & (px < fp.width) & (py >= 0) & (py < fp.height)
    q = np.flatnonzero(m)
    idx = py[q] * fp.width + px[q]
    return q, idx, getattr(fp, wxf)[q], getattr(fp, wyf)[q]


def scatter(vals, fp, workers=None):
    """Unnormalized splat: out[p] += b(corner) * vals[q] over all footprints."""
    k = vals.shape[1]
    out = np.zeros((fp.height * fp.width, k), dtype=vals.dtype)
    for wxf, wyf, cx, cy, _, _ in _CORNERS:
        q, idx, wx, wy = _corner_select(fp, cx, cy, wxf, wyf)
        np.add.at(out, idx, vals[q] * (wx * wy)[:, None])
    return out.reshape(fp.height, fp.width, k)


def scatter_norm(src, wq, den, covered, fp, workers=None):
    """Normalized splat: out[p] += ((wq * b) / den[p]) * src[q] at covered p.

    Dividing the per-corner weight by the target's total keeps a pixel whose
    footprint is its sole contributor exactly equal to the source (w / w is
    exactly 1.0), which the identity invariants rely on.
    """
    c = src.shape[1]
    out = np.zeros((fp.height * fp.width, c), dtype=src.dtype)
    denf = den.ravel()
    covf = covered.ravel()
    for wxf, wyf, cx, cy, _, _ in _CORNERS:
        q, idx, wx, wy = _corner_select(fp, cx, cy, wxf, wyf)
        ok = covf[idx]
        q = q[ok]
        idx = idx[ok]
        t = (wq[q] * (wx[ok] * wy[ok])) / denf[idx]
        np.add.at(out, idx, t[:, None] * src[q])
    return out.reshape(fp.height, fp.width, c)


def gather_backward(src, g, den, covered, outn, wq, dz_kind, fp, workers=None):
    """Gradients of a splat, gathered per source pixel (race-free).

    dz_kind selects the importance gradient: 0 none, 1 raw (weights are the
    importance values themselves), 2 scaled by wq (weights are exponentials
    of the importance values).
    """
    n, c = src.shape
    gf = g.reshape(-1, c)
    of = outn.reshape(-1, c)
    denf = den.ravel()
    covf = covered.ravel()
    ds = np.zeros((n, c), dtype=src.dtype)
    afx = np.zeros(n, dtype=src.dtype)
    afy = np.zeros(n, dtype=src.dtype)
    az = np.zeros(n, dtype=src.dtype)
    for wxf, wyf, cx, cy, sx, sy in _CORNERS:
        q, idx, wx, wy = _corner_select(fp, cx, cy, wxf, wyf)
        ok = covf[idx]
        q = q[ok]
        idx = idx[ok]
        wx = wx[ok]
        wy = wy[ok]
        d = denf[idx]
        w = wy * wx
        gc = gf[idx]
        ds[q] += ((wq[q] * w) / d)[:, None] * gc
        q2 = np.sum(gc * (src[q] - of[idx]), axis=1) / d
        bf = wq[q] * q2
        afx[q] += (sx * wy) * bf
        afy[q] += (sy * wx) * bf
        if dz_kind == 1:
            az[q] += w * q2
        elif dz_kind == 2:
            az[q] += w * bf
    zero = src.dtype.type(0)
    dfx = np.where(fp.xact, afx, zero)
    dfy = np.where(fp.yact, afy, zero)
    dz = az if dz_kind != 0 else None
    return ds, dfx, dfy, dz


def bilinear_gather(src, sx, sy, workers=None):
    """Sample src at absolute coordinates (sx, sy) with zero padding outside."""
    hs, ws, c = src.shape
    inb = (sx > -1.0) & (sx < ws) & (sy > -1.0) & (sy < hs)
    # Clamp before the integer cast so absurd displacements cannot overflow;
    # clamped pixels are all outside `inb` and contribute nothing.
    x = np.clip(sx, -4.0, ws + 4.0)
    y = np.clip(sy, -4.0, hs + 4.0)
    ix = np.floor(x)
    iy = np.floor(y)
    fx = x - ix
    fy = y - iy
    ixi = ix.astype(np.int64)
    iyi = iy.astype(np.int64)
    wxs = (1.0 - fx, fx)
    wys = (1.0 - fy, fy)
    srcf = src.reshape(-1, c)
    out = np.zeros(sx.shape + (c,), dtype=src.dtype)
    for cy in range(2):
        for cx in range(2):
            px = ixi + cx
            py = iyi + cy
            m = inb & (px >= 0) & (px < ws) & (py >= 0) & (py < hs)
            w = (wxs[cx] * wys[cy])[m]
            out[m] += w[:, None] * srcf[py[m] * ws + px[m]]
    return out
