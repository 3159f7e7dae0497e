"""Hot inner-loop kernels, each with a numba-jitted and a pure-numpy path.

The jitted path is used when numba imports and the environment flag
``AOA_NUMBA`` is not set to ``0``; otherwise the vectorized numpy fallbacks
are bound to the public names. Both variants of every kernel are importable
directly (``*_numpy`` / ``*_jit``) so tests and ``benchmarks/bench_kernels.py``
can compare them in one process.

Integer-valued outputs (ray pixels, disc pixels, component labels) are
bit-identical across the two paths; float cost sums may differ at the last
ulp because summation order differs.
"""

from __future__ import annotations

import math
import os

import numpy as np

TWO_PI = 2.0 * math.pi
_PI = math.pi

_ENV_FLAG = os.environ.get("AOA_NUMBA", "1").strip().lower()
_WANT_JIT = _ENV_FLAG not in ("0", "false", "off", "no")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-free installs
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# maximum-likelihood bearing cost, evaluated for a batch of candidate points


def _ml_cost_loop(cand_x, cand_y, plat_x, plat_y, theta, out):
    m = cand_x.shape[0]
    n = plat_x.shape[0]
    for i in range(m):
        acc = 0.0
        for j in range(n):
            ang = math.atan2(cand_y[i] - plat_y[j], cand_x[i] - plat_x[j])
            r = theta[j] - ang
            r = r - TWO_PI * math.floor((r + _PI) / TWO_PI)
            acc += r * r
        out[i] = acc
    return out


def ml_cost_batch_numpy(cand_x, cand_y, plat_x, plat_y, theta):
    dx = cand_x[:, None] - plat_x[None, :]
    dy = cand_y[:, None] - plat_y[None, :]
    r = theta[None, :] - np.arctan2(dy, dx)
    r -= TWO_PI * np.floor((r + _PI) / TWO_PI)
    return np.einsum("ij,ij->i", r, r)


# ---------------------------------------------------------------------------
# binary ray stamping: 1-pixel-wide half-line from a (fractional) origin
#
# The line is stepped along its major axis; the minor coordinate follows the
# exact slope and is rounded with floor(x + 0.5) so both paths pick identical
# pixels. Once the minor coordinate leaves the image it cannot re-enter
# (it is monotone), so masking and early exit are equivalent.


def _ray_geometry(row_f, col_f, drow, dcol, height, width):
    if abs(dcol) >= abs(drow):
        return col_f, row_f, dcol, drow, width, height, True
    return row_f, col_f, drow, dcol, height, width, False


def _stamp_ray_loop(values, row_f, col_f, drow, dcol):
    height, width = values.shape
    if abs(dcol) >= abs(drow):
        maj_f, min_f, dmaj, dmin = col_f, row_f, dcol, drow
        maj_n, min_n = width, height
        major_is_col = True
    else:
        maj_f, min_f, dmaj, dmin = row_f, col_f, drow, dcol
        maj_n, min_n = height, width
        major_is_col = False
    if dmaj == 0.0:
        return
    slope = dmin / dmaj
    step = 1 if dmaj > 0.0 else -1
    k0 = int(math.floor(maj_f + 0.5))
    if k0 < 0:
        if step < 0:  # off-canvas start pointing further away
            return
        k0 = 0
    elif k0 > maj_n - 1:
        if step > 0:
            return
        k0 = maj_n - 1
    end = maj_n - 1 if step > 0 else 0
    k = k0
    while True:
        mn = int(math.floor(min_f + slope * (k - maj_f) + 0.5))
        if 0 <= mn < min_n:
            if major_is_col:
                values[mn, k] = 1.0
            else:
                values[k, mn] = 1.0
        if k == end:
            break
        k += step


def stamp_ray_numpy(values, row_f, col_f, drow, dcol):
    height, width = values.shape
    maj_f, min_f, dmaj, dmin, maj_n, min_n, major_is_col = _ray_geometry(
        row_f, col_f, drow, dcol, height, width
    )
    if dmaj == 0.0:
        return
    slope = dmin / dmaj
    step = 1 if dmaj > 0.0 else -1
    k0 = int(np.floor(maj_f + 0.5))
    if (k0 < 0 and step < 0) or (k0 > maj_n - 1 and step > 0):
        return  # off-canvas start pointing further away
    k0 = min(max(k0, 0), maj_n - 1)
    end = maj_n - 1 if step > 0 else 0
    ks = np.arange(k0, end + step, step, dtype=np.int64)
    mins = np.floor(min_f + slope * (ks - maj_f) + 0.5).astype(np.int64)
    keep = (mins >= 0) & (mins < min_n)
    ks, mins = ks[keep], mins[keep]
    if major_is_col:
        values[mins, ks] = 1.0
    else:
        values[ks, mins] = 1.0


# ---------------------------------------------------------------------------
# filled disc stamping


def _stamp_disc_loop(values, row, col, radius):
    height, width = values.shape
    rsq = radius * radius
    for dr in range(-radius, radius + 1):
        r = row + dr
        if r < 0 or r >= height:
            continue
        for dc in range(-radius, radius + 1):
            c = col + dc
            if c < 0 or c >= width:
                continue
            if dr * dr + dc * dc <= rsq:
                values[r, c] = 1.0


def stamp_disc_numpy(values, row, col, radius):
    height, width = values.shape
    r0, r1 = max(row - radius, 0), min(row + radius, height - 1)
    c0, c1 = max(col - radius, 0), min(col + radius, width - 1)
    if r0 > r1 or c0 > c1:
        return
    rr = np.arange(r0, r1 + 1, dtype=np.int64)[:, None] - row
    cc = np.arange(c0, c1 + 1, dtype=np.int64)[None, :] - col
    inside = rr * rr + cc * cc <= radius * radius
    patch = values[r0 : r1 + 1, c0 : c1 + 1]
    patch[inside] = 1.0


# ---------------------------------------------------------------------------
# connected-component labeling
#
# Both paths number components 1..K in raster-scan order of each component's
# first foreground pixel, so their label arrays match exactly.


def _uf_find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _label_loop(mask, eight, parent):
    height, width = mask.shape
    labels = np.zeros((height, width), np.int32)
    next_label = 1
    for r in range(height):
        for c in range(width):
            if mask[r, c] == 0:
                continue
            best = 2147483647
            n0 = n1 = n2 = n3 = 0
            if c > 0 and mask[r, c - 1] != 0:
                n0 = _uf_find(parent, labels[r, c - 1])
                if n0 < best:
                    best = n0
            if r > 0:
                if mask[r - 1, c] != 0:
                    n1 = _uf_find(parent, labels[r - 1, c])
                    if n1 < best:
                        best = n1
                if eight:
                    if c > 0 and mask[r - 1, c - 1] != 0:
                        n2 = _uf_find(parent, labels[r - 1, c - 1])
                        if n2 < best:
                            best = n2
                    if c < width - 1 and mask[r - 1, c + 1] != 0:
                        n3 = _uf_find(parent, labels[r - 1, c + 1])
                        if n3 < best:
                            best = n3
            if best == 2147483647:
                parent[next_label] = next_label
                labels[r, c] = next_label
                next_label += 1
            else:
                labels[r, c] = best
                if n0 > best:
                    parent[n0] = best
                if n1 > best:
                    parent[n1] = best
                if n2 > best:
                    parent[n2] = best
                if n3 > best:
                    parent[n3] = best
    # second pass: resolve roots, renumber in raster order of first pixel
    remap = np.zeros(next_label, np.int32)
    count = 0
    for r in range(height):
        for c in range(width):
            lab = labels[r, c]
            if lab == 0:
                continue
            root = _uf_find(parent, lab)
            if remap[root] == 0:
                count += 1
                remap[root] = count
            labels[r, c] = remap[root]
    return labels, count


_SHIFTS_4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
_SHIFTS_8 = _SHIFTS_4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def _shifted_min(labels, out, dr, dc):
    height, width = labels.shape
    src = labels[
        max(dr, 0) : height + min(dr, 0),
        max(dc, 0) : width + min(dc, 0),
    ]
    dst = out[
        max(-dr, 0) : height + min(-dr, 0),
        max(-dc, 0) : width + min(-dc, 0),
    ]
    np.minimum(dst, np.where(src > 0, src, np.int64(2**62)), out=dst)


def label_components_numpy(mask, connectivity=8):
    """Min-label propagation to a fixed point; slower than the jitted
    union-find on long thin components but dependency-free."""
    fg = mask != 0
    height, width = mask.shape
    labels = np.where(
        fg, np.arange(1, mask.size + 1, dtype=np.int64).reshape(height, width), 0
    )
    shifts = _SHIFTS_8 if connectivity == 8 else _SHIFTS_4
    while True:
        candidate = labels.copy()
        for dr, dc in shifts:
            _shifted_min(labels, candidate, dr, dc)
        candidate[~fg] = 0
        if np.array_equal(candidate, labels):
            break
        labels = candidate
    # canonical numbering: component label == min linear index == raster-first pixel
    flat = labels.ravel()
    values = np.unique(flat[flat > 0])
    remap = np.zeros(int(values[-1]) + 1 if values.size else 1, np.int64)
    remap[values] = np.arange(1, values.size + 1)
    return remap[flat].reshape(height, width).astype(np.int32), int(values.size)


# ---------------------------------------------------------------------------
# backend binding

if HAVE_NUMBA:
    _jit = njit(cache=True)
    # rebind so the jitted label loop resolves the global to the dispatcher
    _uf_find = _jit(_uf_find)
    _ml_cost_jit_inner = _jit(_ml_cost_loop)
    stamp_ray_jit = _jit(_stamp_ray_loop)
    stamp_disc_jit = _jit(_stamp_disc_loop)
    _label_loop_jit = _jit(_label_loop)

    def ml_cost_batch_jit(cand_x, cand_y, plat_x, plat_y, theta):
        out = np.empty(cand_x.shape[0], np.float64)
        return _ml_cost_jit_inner(cand_x, cand_y, plat_x, plat_y, theta, out)

    def label_components_jit(mask, connectivity=8):
        parent = np.zeros(mask.size + 2, np.int32)
        return _label_loop_jit(np.ascontiguousarray(mask), connectivity == 8, parent)


USE_JIT = HAVE_NUMBA and _WANT_JIT
BACKEND = "numba" if USE_JIT else "numpy"

if USE_JIT:
    ml_cost_batch_xy = ml_cost_batch_jit
    stamp_ray = stamp_ray_jit
    stamp_disc = stamp_disc_jit
    label_components = label_components_jit
else:
    ml_cost_batch_xy = ml_cost_batch_numpy
    stamp_ray = stamp_ray_numpy
    stamp_disc = stamp_disc_numpy
    label_components = label_components_numpy


def ml_cost_batch(cand_xy, plat_xy, theta_meas):
    """Sum of squared wrapped bearing residuals for each candidate point.

    cand_xy: (M, 2) candidates; plat_xy: (N, 2) platform positions;
    theta_meas: (N,) measured bearings in radians. Returns (M,) costs.
    """
    cand_xy = np.ascontiguousarray(cand_xy, dtype=np.float64)
    plat_xy = np.ascontiguousarray(plat_xy, dtype=np.float64)
    theta = np.ascontiguousarray(theta_meas, dtype=np.float64)
    return ml_cost_batch_xy(
        np.ascontiguousarray(cand_xy[:, 0]),
        np.ascontiguousarray(cand_xy[:, 1]),
        np.ascontiguousarray(plat_xy[:, 0]),
        np.ascontiguousarray(plat_xy[:, 1]),
        theta,
    )
