"""Vectorized numpy reference implementations of the hot kernels.

This backend is always available and is the ground truth the numba backend is
tested against. Element-wise arithmetic uses the same expressions as the numba
loops so both backends agree bitwise.
"""

import numpy as np

# family codes shared by both backends
FAM_IDENTITY = 0
FAM_EXAMPLE1 = 1
FAM_PITCHFORK = 2
FAM_SUBCRITICAL = 3

BLOWUP = 1e9

name = "numpy"


def discrete_points(fam, x, drive):
    """Batched one-step map for discrete families. drive = lambda * xi."""
    x = np.asarray(x, dtype=np.float64)
    if fam == FAM_IDENTITY:
        return x.copy()
    # example1 piecewise map
    return np.where(x >= -0.5, x + x * x + drive, -0.5 * x + drive)


def discrete_box_images(fam, lo, hi, drive):
    """Interval images of boxes [lo_i, hi_i] under a discrete family.

    example1 uses the natural interval extension per monotone branch with a
    union hull across branches intersecting the box.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if fam == FAM_IDENTITY:
        return lo.copy(), hi.copy()

    # snap bounds within 1e-9 of the branch point so off-lattice grids do not
    # glue the two branch images through a 1-ulp sliver
    lo = np.where(np.abs(lo + 0.5) <= 1e-9, -0.5, lo)
    hi = np.where(np.abs(hi + 0.5) <= 1e-9, -0.5, hi)

    elo = np.full_like(lo, np.inf)
    ehi = np.full_like(hi, -np.inf)

    # right branch part: [max(lo, -0.5), hi] when hi > -0.5 (boxes are taken
    # half-open on the right, so a box ending exactly at the branch point is
    # pure left branch; the point -0.5 itself belongs to the next box)
    right = hi > -0.5
    rl = np.maximum(lo, -0.5)
    rr = hi
    # exact square range on [rl, rr]
    sq_lo = np.where(rl > 0.0, rl * rl, np.where(rr < 0.0, rr * rr, 0.0))
    sq_hi = np.maximum(rl * rl, rr * rr)
    r_lo = rl + sq_lo + drive
    r_hi = rr + sq_hi + drive
    elo = np.where(right, np.minimum(elo, r_lo), elo)
    ehi = np.where(right, np.maximum(ehi, r_hi), ehi)

    # left branch part: [lo, min(hi, -0.5)] when lo < -0.5 (map decreasing)
    left = lo < -0.5
    ll = lo
    lr = np.minimum(hi, -0.5)
    l_lo = -0.5 * lr + drive
    l_hi = -0.5 * ll + drive
    elo = np.where(left, np.minimum(elo, l_lo), elo)
    ehi = np.where(left, np.maximum(ehi, l_hi), ehi)
    return elo, ehi


def _ode_rhs(fam, y, lam, force):
    if fam == FAM_PITCHFORK:
        return lam * y - y * y * y + force
    # subcritical
    return lam * y + y * y * y + force


def ode_points(fam, x, lam, force, nsub, direction):
    """Unit-time RK4 flow of dx/dt = f(x) + force, batched over points.

    direction=+1 integrates forward, -1 backward (reverse time). Trajectories
    exceeding BLOWUP in magnitude are marked nan and stay nan.
    """
    y = np.asarray(x, dtype=np.float64).copy()
    h = direction / float(nsub)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(nsub):
            k1 = _ode_rhs(fam, y, lam, force)
            k2 = _ode_rhs(fam, y + 0.5 * h * k1, lam, force)
            k3 = _ode_rhs(fam, y + 0.5 * h * k2, lam, force)
            k4 = _ode_rhs(fam, y + h * k3, lam, force)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            y = np.where(np.abs(y) > BLOWUP, np.nan, y)
    return y


def ode_box_images(fam, lo, hi, lam, force, nsub, pad, cap):
    """Enclosures of box images under the unit-time flow.

    Samples the two corners and the center, hulls them and inflates by pad
    (Lipschitz-slack plus integrator tolerance). Non-finite samples, or
    samples beyond cap (where near-blow-up RK4 steps are no longer monotone
    in the initial condition, so the corner hull stops being a bound), mark
    the box divergent (nan bounds).
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    mid = 0.5 * (lo + hi)
    samples = np.concatenate([lo, mid, hi])
    imgs = ode_points(fam, samples, lam, force, nsub, 1.0)
    n = lo.shape[0]
    a = imgs[:n]
    b = imgs[n : 2 * n]
    c = imgs[2 * n :]
    elo = np.minimum(np.minimum(a, b), c) - pad
    ehi = np.maximum(np.maximum(a, b), c) + pad
    bad = ~(np.isfinite(elo) & np.isfinite(ehi))
    bad |= np.maximum(np.abs(elo), np.abs(ehi)) > cap
    elo = np.where(bad, np.nan, elo)
    ehi = np.where(bad, np.nan, ehi)
    return elo, ehi


def prune_alive(succ_lo, succ_hi, alive):
    """Bidirectional viability pruning on a fibered transition graph.

    succ_lo/succ_hi: (F, B) inclusive successor index ranges for the maps
    fiber t -> t+1 (lo > hi means no successors). alive: (F+1, B) bool.
    Deletes boxes lacking an alive successor (except on the last fiber) or an
    alive predecessor (except on the first) until a fixpoint; returns the new
    alive array.
    """
    succ_lo = np.asarray(succ_lo)
    succ_hi = np.asarray(succ_hi)
    alive = np.asarray(alive, dtype=bool).copy()
    F, B = succ_lo.shape
    changed = True
    while changed:
        changed = False
        # forward sweep: needs an alive successor
        for t in range(F - 1, -1, -1):
            cur = alive[t]
            if not cur.any():
                continue
            nxt = alive[t + 1]
            csum = np.zeros(B + 1, dtype=np.int64)
            np.cumsum(nxt, out=csum[1:])
            lo = succ_lo[t]
            hi = succ_hi[t]
            ok = lo <= hi
            has = np.zeros(B, dtype=bool)
            idx = np.nonzero(cur & ok)[0]
            if idx.size:
                has[idx] = (csum[hi[idx] + 1] - csum[lo[idx]]) > 0
            new = cur & has
            if not np.array_equal(new, cur):
                alive[t] = new
                changed = True
        # backward sweep: needs an alive predecessor
        for t in range(F):
            nxt = alive[t + 1]
            if not nxt.any():
                continue
            cur = alive[t]
            lo = succ_lo[t]
            hi = succ_hi[t]
            idx = np.nonzero(cur & (lo <= hi))[0]
            cov = np.zeros(B + 1, dtype=np.int64)
            if idx.size:
                np.add.at(cov, lo[idx], 1)
                np.add.at(cov, hi[idx] + 1, -1)
            covered = np.cumsum(cov[:B]) > 0
            new = nxt & covered
            if not np.array_equal(new, nxt):
                alive[t + 1] = new
                changed = True
    return alive
