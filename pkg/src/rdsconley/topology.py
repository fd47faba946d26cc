"""Maximal invariant sets, isolation checks, exit sets and filtration pairs.

All sets are unions of closed grid boxes, so the regularity assumption
N = cl(int N) is structural. Finite windows cannot witness bi-infinite
orbits: compute_inv prunes over the whole window but its result is asserted
only on a core fiber range with margin m, which quarantines window-edge
effects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .boxes import RandomBoxSet, build_transition_graph, combinatorial_interior
from .errors import FiltrationError, UsageError

DEFAULT_MARGIN = 4
DEFAULT_RING_LIMIT = 5


@dataclass(frozen=True)
class InvariantFamily:
    """Combinatorial over-approximation of Inv N on the window core."""

    boxes: RandomBoxSet
    core_lo: int
    core_hi: int
    resolution: float

    def core_fibers(self):
        return range(self.core_lo, self.core_hi + 1)

    def fiber_ids(self, k):
        return self.boxes.fiber_ids(k)

    def is_core_empty(self):
        return not self.boxes.restrict(self.core_lo, self.core_hi).masks.any()


@dataclass(frozen=True)
class FiltrationPair:
    """Compact pair (N, L) with L subset of N, for the invariant family S."""

    N: RandomBoxSet
    L: RandomBoxSet
    S: InvariantFamily


def _graph_for(sys, path, N, graph):
    if graph is None:
        return build_transition_graph(sys, path, N)
    if graph.grid != N.grid or graph.k_lo > N.k_lo or graph.k_hi < N.k_hi:
        raise UsageError("supplied graph does not cover the box set")
    return graph


def compute_inv(G, N, margin=DEFAULT_MARGIN):
    """Bidirectional viability pruning of N over the window; escape boxes die first.

    Over-approximates the true invariant set restricted to the window core
    [k_lo + margin, k_hi - margin]. An empty result is a valid output.
    """
    k_lo, k_hi = N.k_lo, N.k_hi
    F = k_hi - k_lo
    if margin < 1 or 2 * margin >= F:
        raise UsageError("margin %d incompatible with window [%d, %d]" % (margin, k_lo, k_hi))
    t0 = k_lo - G.k_lo
    succ_lo = G.succ_lo[t0 : t0 + F]
    succ_hi = G.succ_hi[t0 : t0 + F]
    alive = N.masks.copy()
    alive[:F] &= ~G.escape[t0 : t0 + F]
    alive = K.prune_alive(succ_lo, succ_hi, alive)
    return InvariantFamily(
        boxes=RandomBoxSet(N.grid, k_lo, alive),
        core_lo=k_lo + margin,
        core_hi=k_hi - margin,
        resolution=N.grid.width,
    )


def is_isolating_neighborhood(N, inv):
    """True iff the invariant family lies in N's combinatorial interior per core fiber."""
    interior = combinatorial_interior(N)
    witness = []
    for k in inv.core_fibers():
        bad = inv.boxes.row(k) & ~interior.row(k)
        for b in np.nonzero(bad)[0]:
            witness.append((k, int(b)))
    return len(witness) == 0, witness


def is_isolating_block(sys, path, N, margin=DEFAULT_MARGIN, graph=None):
    """Block test: forward image of N, N itself and preimage of N meet inside int N.

    Combinatorial version per core fiber k: boxes of N_k that are successors of
    N_{k-1} and predecessors of N_{k+1} must lie in the interior.
    """
    G = _graph_for(sys, path, N, graph)
    interior = combinatorial_interior(N)
    B = N.grid.n
    for k in range(N.k_lo + max(1, margin), N.k_hi - max(1, margin) + 1):
        lo_prev, hi_prev, _ = G.trans_row(k - 1)
        prev_mask = N.row(k - 1)
        hit = np.zeros(B, dtype=bool)
        for b in np.nonzero(prev_mask)[0]:
            if lo_prev[b] <= hi_prev[b]:
                hit[lo_prev[b] : hi_prev[b] + 1] = True
        lo_cur, hi_cur, _ = G.trans_row(k)
        nxt_mask = N.row(k + 1)
        csum = np.zeros(B + 1, dtype=np.int64)
        np.cumsum(nxt_mask, out=csum[1:])
        cur_ids = np.nonzero(N.row(k))[0]
        for b in cur_ids:
            if not hit[b]:
                continue
            if lo_cur[b] > hi_cur[b]:
                continue
            if csum[hi_cur[b] + 1] - csum[lo_cur[b]] <= 0:
                continue
            if not interior.row(k)[b]:
                return False
    return True


def exit_set(sys, path, N, graph=None):
    """Boxes of N whose enclosure is not contained in the next fiber's interior.

    Computed on fibers [k_lo, k_hi - 1]; the last fiber has no image data and
    stays empty. Over-approximates the pointwise exit set.
    """
    G = _graph_for(sys, path, N, graph)
    grid = N.grid
    B = grid.n
    interior = combinatorial_interior(N)
    out = np.zeros_like(N.masks)
    for k in range(N.k_lo, N.k_hi):
        ids = N.fiber_ids(k)
        if ids.size == 0:
            continue
        elo_all, ehi_all = G.img_row(k)
        elo = elo_all[ids]
        ehi = ehi_all[ids]
        int_next = interior.row(k + 1)
        pref = np.zeros(B + 1, dtype=np.int64)
        np.cumsum(int_next, out=pref[1:])
        finite = np.isfinite(elo) & np.isfinite(ehi)
        inside = finite & (elo >= grid.lo) & (ehi <= grid.hi)
        c_lo = grid.coords(np.where(finite, elo, grid.lo))
        c_hi = grid.coords(np.where(finite, ehi, grid.lo))
        i0 = np.floor(c_lo).astype(np.int64)
        i1 = np.ceil(c_hi).astype(np.int64) - 1
        i0c = np.clip(i0, 0, B - 1)
        i1c = np.clip(i1, 0, B - 1)
        need = i1c - i0c + 1
        have = pref[i1c + 1] - pref[i0c]
        covered = inside & ((i1 < i0) | (have == need))
        out[k - N.k_lo, ids[~covered]] = True
    return RandomBoxSet(grid, N.k_lo, out)


def _subspace_interior(L, N):
    """Boxes of L all of whose neighbors *within N* are also in L."""
    m = L.masks.copy()
    nm = N.masks
    lm = L.masks
    # a neighbor inside N but outside L disqualifies
    left_bad = np.zeros_like(m)
    left_bad[:, 1:] = nm[:, :-1] & ~lm[:, :-1]
    right_bad = np.zeros_like(m)
    right_bad[:, :-1] = nm[:, 1:] & ~lm[:, 1:]
    return RandomBoxSet(L.grid, L.k_lo, m & ~(left_bad | right_bad))


def _within_one_ring(A, B_set, core_lo, core_hi):
    """A subset of dilate(B, 1) on every core fiber."""
    dil = B_set.dilate(1)
    for k in range(core_lo, core_hi + 1):
        if np.any(A.row(k) & ~dil.row(k)):
            return False
    return True


def verify_filtration_pair(sys, path, P, margin=DEFAULT_MARGIN, graph=None,
                           exit_boxes=None):
    """Check the three filtration-pair conditions combinatorially.

    (i)   Inv of cl(N \\ L) stays in its interior and equals S within one ring;
    (ii)  the exit set of N lies in the interior of L taken within N;
    (iii) no box of L has a successor in (N \\ L) on the next fiber.

    exit_boxes may carry a precomputed exit_set(sys, path, N) (it depends on N
    only, so pair constructors reuse it across L candidates).
    """
    N, L, S = P.N, P.L, P.S
    if np.any(L.masks & ~N.masks):
        raise UsageError("L must be a subset of N per fiber")
    G = _graph_for(sys, path, N, graph)
    M = N.difference(L)
    core_lo, core_hi = S.core_lo, S.core_hi

    inv_m = compute_inv(G, M, margin=margin)
    interior_m = combinatorial_interior(M)
    cond_i = True
    for k in range(core_lo, core_hi + 1):
        if np.any(inv_m.boxes.row(k) & ~interior_m.row(k)):
            cond_i = False
            break
    if cond_i:
        cond_i = (
            _within_one_ring(inv_m.boxes, S.boxes, core_lo, core_hi)
            and _within_one_ring(S.boxes, inv_m.boxes, core_lo, core_hi)
        )

    ex = exit_boxes if exit_boxes is not None else exit_set(sys, path, N, graph=G)
    int_L = _subspace_interior(L, N)
    cond_ii = True
    for k in range(core_lo, core_hi + 1):
        if np.any(ex.row(k) & ~int_L.row(k)):
            cond_ii = False
            break

    cond_iii = True
    B = N.grid.n
    for k in range(core_lo, min(core_hi, N.k_hi - 1) + 1):
        lo, hi, esc = G.trans_row(k)
        nxt = M.row(k + 1)
        csum = np.zeros(B + 1, dtype=np.int64)
        np.cumsum(nxt, out=csum[1:])
        for b in np.nonzero(L.row(k))[0]:
            if lo[b] <= hi[b] and csum[hi[b] + 1] - csum[lo[b]] > 0:
                cond_iii = False
                break
        if not cond_iii:
            break

    ok = cond_i and cond_ii and cond_iii
    report = {"i": cond_i, "ii": cond_ii, "iii": cond_iii}
    return ok, report


def build_filtration_pair(sys, path, N, S, ring_limit=DEFAULT_RING_LIMIT,
                          margin=DEFAULT_MARGIN, graph=None):
    """Grow L from the exit set by whole rings until the pair verifies.

    Raises FiltrationError (with the failing condition) when ring_limit is
    exhausted; the caller should subdivide the grid and retry.
    """
    ok, _ = is_isolating_neighborhood(N, S)
    if not ok:
        raise UsageError("N is not an isolating neighborhood of S")
    G = _graph_for(sys, path, N, graph)
    ex = exit_set(sys, path, N, graph=G)
    L = ex
    last_report = None
    for _ in range(ring_limit + 1):
        P = FiltrationPair(N=N, L=L, S=S)
        ok, report = verify_filtration_pair(sys, path, P, margin=margin, graph=G,
                                            exit_boxes=ex)
        if ok:
            return P
        last_report = report
        L = L.dilate(1, within=N)
    failing = next((k for k in ("i", "ii", "iii") if not last_report[k]), None)
    raise FiltrationError(
        "filtration pair construction exhausted ring budget (condition %s failing)"
        % failing,
        condition=failing,
    )
