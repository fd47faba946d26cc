"""Pointed quotient maps and the conservative index fingerprint.

The pointed space at fiber k is the set of box-connected components of
(N \\ L)_k plus a base point; the induced map sends a component to the
component its enclosure image meets in the next fiber, and to the base point
when the image lands only in L or outside N. The fingerprint (component
counts, exit-set emptiness, a triviality flag) is a conservative invariant of
the index class: "different" fingerprints certify different indices,
"incomparable" never does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RefinementError, UsageError

STAR = -1


@dataclass(frozen=True)
class PointedSystem:
    """Finite pointed sets per fiber plus base-point-preserving maps between them.

    comps[i] lists the component box-id arrays at fiber k_lo + i; maps[i] maps
    component index at fiber k_lo+i to a component index at the next fiber,
    with STAR (-1) for the base point.
    """

    k_lo: int
    comps: tuple
    maps: tuple

    @property
    def k_hi(self):
        return self.k_lo + len(self.comps) - 1

    def count(self, k):
        return len(self.comps[k - self.k_lo])

    def step(self, k, c):
        """Apply the pointed map at fiber k to component index c (STAR maps to STAR)."""
        if c == STAR:
            return STAR
        return int(self.maps[k - self.k_lo][c])

    def iterate(self, k, c, steps):
        for j in range(steps):
            c = self.step(k + j, c)
        return c


def _components(mask):
    """Split a fiber mask into runs of consecutive boxes (Chebyshev components)."""
    ids = np.nonzero(mask)[0]
    comps = []
    if ids.size == 0:
        return comps
    start = 0
    for i in range(1, ids.size):
        if ids[i] != ids[i - 1] + 1:
            comps.append(ids[start:i])
            start = i
    comps.append(ids[start:])
    return comps


def pointed_map(sys, path, P, graph=None):
    """Build the pointed system induced by the filtration pair on the window core.

    An image meeting two or more components at the next fiber is unresolved at
    this resolution and raises RefinementError; the caller subdivides.
    """
    N, L, S = P.N, P.L, P.S
    from .topology import _graph_for

    G = _graph_for(sys, path, N, graph)
    M = N.difference(L)
    grid = M.grid
    k_lo, k_hi = S.core_lo, S.core_hi
    comps = [(_components(M.row(k))) for k in range(k_lo, k_hi + 1)]
    maps = []
    for k in range(k_lo, k_hi):
        cur = comps[k - k_lo]
        nxt = comps[k - k_lo + 1]
        label = np.full(grid.n, STAR, dtype=np.int64)
        for ci, ids in enumerate(nxt):
            label[ids] = ci
        lo_row, hi_row, _esc = G.trans_row(k)
        row = np.full(len(cur), STAR, dtype=np.int64)
        nxt_mask = M.row(k + 1)
        for ci, ids in enumerate(cur):
            targets = set()
            for b in ids:
                i0, i1 = lo_row[b], hi_row[b]
                if i1 < i0:
                    continue
                hit = np.nonzero(nxt_mask[i0 : i1 + 1])[0]
                for h in hit:
                    targets.add(int(label[i0 + h]))
            if len(targets) > 1:
                raise RefinementError(
                    "pointed map unresolved at fiber %d: component %d maps onto "
                    "%d components" % (k, ci, len(targets))
                )
            row[ci] = targets.pop() if targets else STAR
        maps.append(row)
    return PointedSystem(k_lo=k_lo, comps=tuple(tuple(c) for c in comps),
                         maps=tuple(maps))


@dataclass(frozen=True)
class IndexFingerprint:
    """Comparable conservative summary of the index class."""

    counts: tuple  # components per fiber, base point excluded
    l_flags: tuple  # True when L is nonempty on that fiber
    trivial: bool
    horizon: int


def fingerprint(PS, L, horizon):
    """Fingerprint of a pointed system; trivial iff every component dies within horizon.

    Triviality composes the pointed maps `horizon` steps from every start
    fiber that has that much runway inside the core.
    """
    horizon = int(horizon)
    span = PS.k_hi - PS.k_lo
    if horizon < 1 or horizon > span:
        raise UsageError("horizon %d outside core window length %d" % (horizon, span))
    counts = tuple(PS.count(k) for k in range(PS.k_lo, PS.k_hi + 1))
    l_flags = tuple(bool(L.row(k).any()) for k in range(PS.k_lo, PS.k_hi + 1))
    trivial = True
    for k in range(PS.k_lo, PS.k_hi - horizon + 1):
        for c in range(PS.count(k)):
            if PS.iterate(k, c, horizon) != STAR:
                trivial = False
                break
        if not trivial:
            break
    return IndexFingerprint(counts=counts, l_flags=l_flags, trivial=trivial,
                            horizon=horizon)


def trivial_fingerprint(horizon, n_fibers):
    """The fingerprint of the one-base-point system with constant maps."""
    return IndexFingerprint(counts=(0,) * n_fibers, l_flags=(False,) * n_fibers,
                            trivial=True, horizon=int(horizon))


def compare_fingerprints(a, b):
    """'equal' | 'different' | 'incomparable' per the conservative comparison rule.

    Triviality flags differing is conclusive; matching triviality with matching
    (count, l_flag) multisets over the core is 'equal'; anything else is
    'incomparable' (reported, never conclusive on its own).
    """
    if a.horizon != b.horizon:
        raise UsageError("fingerprints have different horizons (%d vs %d)"
                         % (a.horizon, b.horizon))
    if a.trivial != b.trivial:
        return "different"
    if sorted(zip(a.counts, a.l_flags)) == sorted(zip(b.counts, b.l_flags)):
        return "equal"
    return "incomparable"


@dataclass(frozen=True)
class ShiftWitness:
    """Candidate shift-equivalence data between pointed systems C and D.

    n1/n2 are per-fiber integer lags; r[i] maps component indices of C at
    fiber k_lo+i into D at fiber k_lo+i+n1[i] (STAR allowed), s[i] the other
    direction with lag n2.
    """

    k_lo: int
    n1: tuple
    n2: tuple
    r: tuple
    s: tuple

    def lag1(self, k):
        return int(self.n1[k - self.k_lo])

    def lag2(self, k):
        return int(self.n2[k - self.k_lo])

    def apply_r(self, k, c):
        if c == STAR:
            return STAR
        return int(self.r[k - self.k_lo][c])

    def apply_s(self, k, c):
        if c == STAR:
            return STAR
        return int(self.s[k - self.k_lo][c])


def identity_witness(PS):
    """r = s = identity with zero lags on PS's fiber range."""
    n = PS.k_hi - PS.k_lo + 1
    r = tuple(np.arange(PS.count(PS.k_lo + i), dtype=np.int64) for i in range(n))
    return ShiftWitness(k_lo=PS.k_lo, n1=(0,) * n, n2=(0,) * n, r=r, s=r)


def _fits(PS, k, steps=0):
    return PS.k_lo <= k and k + steps <= PS.k_hi


def verify_shift_witness(C, D, w):
    """Check quasi-commutativity and the composition identities on every fiber
    where the lag-adjusted compositions stay inside the window.

    Returns (ok, report); report lists the first violation per fiber and the
    number of fibers skipped for lack of window room. Raises UsageError when
    no fiber can be checked at all.
    """
    violations = []
    checked = 0
    skipped = 0
    equal_lag_fibers = 0

    def _has_lag(arr_len, k):
        return w.k_lo <= k and k - w.k_lo < arr_len

    # quasi-commutativity of r with (c, d), two cases by the lag ordering
    for k in range(C.k_lo, C.k_hi):
        if not (_has_lag(len(w.n1), k) and _has_lag(len(w.n1), k + 1)):
            skipped += 1
            continue
        m1, m1n = w.lag1(k), w.lag1(k + 1)
        if m1n == m1:
            equal_lag_fibers += 1
        lo_needed = min(k + m1, k + 1 + min(m1n, m1))
        hi_needed = k + 1 + max(m1n, m1)
        if not (D.k_lo <= lo_needed and hi_needed <= D.k_hi):
            skipped += 1
            continue
        checked += 1
        for c in range(C.count(k)):
            cx = C.step(k, c)
            lhs = w.apply_r(k + 1, cx)
            base = D.step(k + m1, w.apply_r(k, c))
            if m1n >= m1:
                rhs = base
                for j in range(m1n - m1):
                    rhs = D.step(k + m1 + 1 + j, rhs)
                if lhs != rhs:
                    violations.append(("r-quasi", k, c))
                    break
            else:
                adj = lhs
                for j in range(m1 - m1n):
                    adj = D.step(k + 1 + m1n + j, adj)
                if adj != base:
                    violations.append(("r-quasi", k, c))
                    break

    # quasi-commutativity of s with (d, c)
    for k in range(D.k_lo, D.k_hi):
        if not (_has_lag(len(w.n2), k) and _has_lag(len(w.n2), k + 1)):
            skipped += 1
            continue
        m2, m2n = w.lag2(k), w.lag2(k + 1)
        lo_needed = min(k + m2, k + 1 + min(m2n, m2))
        hi_needed = k + 1 + max(m2n, m2)
        if not (C.k_lo <= lo_needed and hi_needed <= C.k_hi):
            skipped += 1
            continue
        checked += 1
        for c in range(D.count(k)):
            dx = D.step(k, c)
            lhs = w.apply_s(k + 1, dx)
            base = C.step(k + m2, w.apply_s(k, c))
            if m2n >= m2:
                rhs = base
                for j in range(m2n - m2):
                    rhs = C.step(k + m2 + 1 + j, rhs)
                if lhs != rhs:
                    violations.append(("s-quasi", k, c))
                    break
            else:
                adj = lhs
                for j in range(m2 - m2n):
                    adj = C.step(k + 1 + m2n + j, adj)
                if adj != base:
                    violations.append(("s-quasi", k, c))
                    break

    # composition identities: r(s(.)) = d^{n2+n1'}, s(r(.)) = c^{n1+n2'}
    for k in range(D.k_lo, D.k_hi + 1):
        if not _has_lag(len(w.n2), k):
            skipped += 1
            continue
        m2 = w.lag2(k)
        if not _has_lag(len(w.n1), k + m2):
            skipped += 1
            continue
        total = m2 + w.lag1(k + m2)
        if total < 0 or not _fits(D, k, total) or not (C.k_lo <= k + m2 <= C.k_hi):
            skipped += 1
            continue
        checked += 1
        for c in range(D.count(k)):
            lhs = w.apply_r(k + m2, w.apply_s(k, c))
            rhs = D.iterate(k, c, total)
            if lhs != rhs:
                violations.append(("rs-power", k, c))
                break

    for k in range(C.k_lo, C.k_hi + 1):
        if not _has_lag(len(w.n1), k):
            skipped += 1
            continue
        m1 = w.lag1(k)
        if not _has_lag(len(w.n2), k + m1):
            skipped += 1
            continue
        total = m1 + w.lag2(k + m1)
        if total < 0 or not _fits(C, k, total) or not (D.k_lo <= k + m1 <= D.k_hi):
            skipped += 1
            continue
        checked += 1
        for c in range(C.count(k)):
            lhs = w.apply_s(k + m1, w.apply_r(k, c))
            rhs = C.iterate(k, c, total)
            if lhs != rhs:
                violations.append(("sr-power", k, c))
                break

    if checked == 0:
        raise UsageError("witness lags leave no fiber checkable inside the window")
    report = {
        "checked": checked,
        "skipped": skipped,
        "violations": violations,
        "equal_lag_fibers": equal_lag_fibers,
    }
    return len(violations) == 0, report
