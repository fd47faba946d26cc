"""numba-jitted implementations of the hot kernels.

Loop bodies mirror the numpy backend expression-for-expression so results are
bitwise identical (no fastmath, no parallel reductions).
"""

import numpy as np
from numba import njit

FAM_IDENTITY = 0
FAM_EXAMPLE1 = 1
FAM_PITCHFORK = 2
FAM_SUBCRITICAL = 3

BLOWUP = 1e9

name = "numba"


@njit(cache=True)
def _discrete_points(fam, x, drive):
    n = x.shape[0]
    y = np.empty(n, dtype=np.float64)
    for i in range(n):
        if fam == FAM_IDENTITY:
            y[i] = x[i]
        else:
            if x[i] >= -0.5:
                y[i] = x[i] + x[i] * x[i] + drive
            else:
                y[i] = -0.5 * x[i] + drive
    return y


def discrete_points(fam, x, drive):
    return _discrete_points(fam, np.asarray(x, dtype=np.float64), drive)


@njit(cache=True)
def _discrete_box_images(fam, lo, hi, drive):
    n = lo.shape[0]
    elo = np.empty(n, dtype=np.float64)
    ehi = np.empty(n, dtype=np.float64)
    for i in range(n):
        if fam == FAM_IDENTITY:
            elo[i] = lo[i]
            ehi[i] = hi[i]
            continue
        lo_i = lo[i]
        hi_i = hi[i]
        # snap 1-ulp misalignments onto the branch point (see numpy backend)
        if abs(lo_i + 0.5) <= 1e-9:
            lo_i = -0.5
        if abs(hi_i + 0.5) <= 1e-9:
            hi_i = -0.5
        a = np.inf
        b = -np.inf
        if hi_i > -0.5:  # half-open boxes: hi == -0.5 is pure left branch
            rl = max(lo_i, -0.5)
            rr = hi_i
            if rl > 0.0:
                sq_lo = rl * rl
            elif rr < 0.0:
                sq_lo = rr * rr
            else:
                sq_lo = 0.0
            sq_hi = max(rl * rl, rr * rr)
            r_lo = rl + sq_lo + drive
            r_hi = rr + sq_hi + drive
            a = min(a, r_lo)
            b = max(b, r_hi)
        if lo_i < -0.5:
            lr = min(hi_i, -0.5)
            l_lo = -0.5 * lr + drive
            l_hi = -0.5 * lo_i + drive
            a = min(a, l_lo)
            b = max(b, l_hi)
        elo[i] = a
        ehi[i] = b
    return elo, ehi


def discrete_box_images(fam, lo, hi, drive):
    return _discrete_box_images(
        fam, np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64), drive
    )


@njit(cache=True, inline="always")
def _rhs(fam, y, lam, force):
    if fam == FAM_PITCHFORK:
        return lam * y - y * y * y + force
    return lam * y + y * y * y + force


@njit(cache=True)
def _ode_points(fam, x, lam, force, nsub, direction):
    n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    h = direction / float(nsub)
    for i in range(n):
        y = x[i]
        for _ in range(nsub):
            k1 = _rhs(fam, y, lam, force)
            k2 = _rhs(fam, y + 0.5 * h * k1, lam, force)
            k3 = _rhs(fam, y + 0.5 * h * k2, lam, force)
            k4 = _rhs(fam, y + h * k3, lam, force)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if abs(y) > BLOWUP:
                y = np.nan
        out[i] = y
    return out


def ode_points(fam, x, lam, force, nsub, direction):
    return _ode_points(fam, np.asarray(x, dtype=np.float64), lam, force, nsub, direction)


@njit(cache=True)
def _ode_box_images(fam, lo, hi, lam, force, nsub, pad, cap):
    n = lo.shape[0]
    samples = np.empty(3 * n, dtype=np.float64)
    for i in range(n):
        samples[i] = lo[i]
        samples[n + i] = 0.5 * (lo[i] + hi[i])
        samples[2 * n + i] = hi[i]
    imgs = _ode_points(fam, samples, lam, force, nsub, 1.0)
    elo = np.empty(n, dtype=np.float64)
    ehi = np.empty(n, dtype=np.float64)
    for i in range(n):
        s0 = imgs[i]
        s1 = imgs[n + i]
        s2 = imgs[2 * n + i]
        # min/max comparisons silently drop nan operands, so test each sample
        if not (np.isfinite(s0) and np.isfinite(s1) and np.isfinite(s2)):
            elo[i] = np.nan
            ehi[i] = np.nan
            continue
        a = min(min(s0, s1), s2) - pad
        b = max(max(s0, s1), s2) + pad
        if max(abs(a), abs(b)) > cap:
            # near blow-up the RK4 step is not monotone in x, so the corner
            # hull is no bound; declare divergence
            a = np.nan
            b = np.nan
        elo[i] = a
        ehi[i] = b
    return elo, ehi


def ode_box_images(fam, lo, hi, lam, force, nsub, pad, cap):
    return _ode_box_images(
        fam,
        np.asarray(lo, dtype=np.float64),
        np.asarray(hi, dtype=np.float64),
        lam,
        force,
        nsub,
        pad,
        cap,
    )


@njit(cache=True)
def _prune_alive(succ_lo, succ_hi, alive):
    F, B = succ_lo.shape
    out = alive.copy()
    changed = True
    while changed:
        changed = False
        for t in range(F - 1, -1, -1):
            for b in range(B):
                if not out[t, b]:
                    continue
                lo = succ_lo[t, b]
                hi = succ_hi[t, b]
                has = False
                if lo <= hi:
                    for s in range(lo, hi + 1):
                        if out[t + 1, s]:
                            has = True
                            break
                if not has:
                    out[t, b] = False
                    changed = True
        for t in range(F):
            covered = np.zeros(B, dtype=np.bool_)
            for b in range(B):
                if out[t, b]:
                    lo = succ_lo[t, b]
                    hi = succ_hi[t, b]
                    if lo <= hi:
                        for s in range(lo, hi + 1):
                            covered[s] = True
            for b in range(B):
                if out[t + 1, b] and not covered[b]:
                    out[t + 1, b] = False
                    changed = True
    return out


def prune_alive(succ_lo, succ_hi, alive):
    return _prune_alive(
        np.ascontiguousarray(succ_lo),
        np.ascontiguousarray(succ_hi),
        np.ascontiguousarray(np.asarray(alive, dtype=np.bool_)),
    )
