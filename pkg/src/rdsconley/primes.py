"""Prime decomposition of the maximal invariant set and the bifurcation detector.

Pipeline per (system, noise realization):

1. prune the full-domain fibered graph to the viable (invariant) boxes;
2. find recurrent skeletons: strongly connected components of the
   union-over-core-fibers transition graph (size > 1 or self-loop);
3. widen each skeleton to its directed saturation (forward-reach intersected
   with backward-reach through the viable graph) and merge candidates whose
   prospective two-ring neighborhoods touch (not separable at this width);
4. resolve each candidate inside a fixed region (its two-ring dilation):
   compute the invariant family, verify isolation, and probe primality by
   re-running the decomposition at half the width inside the same region —
   a split re-anchors fresh regions per piece, a failed isolation or a
   pending split past the refinement budget is reported unresolved, and a
   candidate whose refined invariant set vanishes is dropped as debris;
5. fingerprint each certified prime through a filtration pair built with
   adaptive padding on a purpose-built local grid.

M is the number of primes (a range when candidates stay unresolved). A sweep
evaluates M and the fingerprints over a lambda grid with common random
numbers; a change interval is flagged when a majority of realizations sees an
M change or a fingerprint that compares "different"; bisection refines
flagged intervals to a bracket.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .boxes import BoxGrid, RandomBoxSet, build_grid, build_transition_graph
from .errors import FiltrationError, RefinementError, UsageError
from .index import (
    IndexFingerprint,
    compare_fingerprints,
    fingerprint,
    pointed_map,
)
from .noise import DEFAULT_WINDOW_RADIUS, sample_path
from .topology import (
    DEFAULT_MARGIN,
    DEFAULT_RING_LIMIT,
    FiltrationPair,
    InvariantFamily,
    build_filtration_pair,
    compute_inv,
    is_isolating_neighborhood,
)


@dataclass(frozen=True)
class DecompSettings:
    """Knobs of the decomposition and detector; defaults match the run config."""

    width: float = 0.05
    refine_rounds: int = 3
    margin: int = DEFAULT_MARGIN
    ring_limit: int = DEFAULT_RING_LIMIT
    horizon: int = 0  # 0 = auto: K - margin
    pads: tuple = (2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96)
    K: int = DEFAULT_WINDOW_RADIUS

    def auto_horizon(self):
        return self.horizon if self.horizon > 0 else self.K - self.margin


@dataclass(frozen=True)
class PrimeFamily:
    """A minimal isolated invariant family certified at a resolution."""

    boxes: InvariantFamily
    neighborhood: RandomBoxSet
    fingerprint: IndexFingerprint | None
    resolution_certified: float
    support_span: tuple  # fiber-0 hull (lo, hi)
    pair: FiltrationPair | None = None

    def l_profile(self):
        if self.fingerprint is None:
            return "unknown"
        flags = self.fingerprint.l_flags
        if all(flags):
            return "nonempty"
        if not any(flags):
            return "empty"
        return "mixed"


@dataclass(frozen=True)
class UnresolvedFamily:
    """A candidate the refinement budget could not certify or split."""

    support_span: tuple
    resolution: float
    reason: str


@dataclass(frozen=True)
class DecompositionResult:
    primes: tuple
    unresolved: tuple
    warnings: tuple = ()
    escape_fraction: float = 0.0  # share of fiber-0 boxes whose image leaves the domain


def count_M(result):
    """Number of prime families; a (lo, hi) range when candidates are unresolved."""
    if isinstance(result, DecompositionResult):
        primes, unresolved = result.primes, result.unresolved
    else:
        primes, unresolved = tuple(result), ()
    n = len(primes)
    if unresolved:
        return (n, n + len(unresolved))
    return n


# ---------------------------------------------------------------------------
# decomposition internals
# ---------------------------------------------------------------------------


def _union_scc_clusters(G, inv):
    """Recurrence clusters: nontrivial SCCs of the union-over-core-fibers graph."""
    alive = inv.boxes.masks
    B = inv.boxes.grid.n
    k_lo = inv.boxes.k_lo
    rows = []
    cols = []
    for k in range(inv.core_lo, inv.core_hi):
        t = k - k_lo
        lo, hi, _ = G.trans_row(k)
        cur = alive[t]
        nxt = alive[t + 1]
        ids = np.nonzero(cur & (lo <= hi))[0]
        for b in ids:
            tg = np.arange(lo[b], hi[b] + 1)
            tg = tg[nxt[tg]]
            if tg.size:
                rows.append(np.full(tg.size, b, dtype=np.int64))
                cols.append(tg)
    if not rows:
        return []
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    keys = rows * B + cols
    keys = np.unique(keys)
    rows = keys // B
    cols = keys % B
    adj = csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(B, B))
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    self_loop = np.zeros(B, dtype=bool)
    self_loop[rows[rows == cols]] = True
    sizes = np.bincount(labels, minlength=n_comp)
    ever_alive = alive.any(axis=0)
    clusters = []
    for lab in range(n_comp):
        ids = np.nonzero((labels == lab) & ever_alive)[0]
        if ids.size == 0:
            continue
        if sizes[lab] > 1 or self_loop[ids].any():
            clusters.append(ids)
    # window-edge artifacts and chain debris are filtered later: a real
    # family's Inv of its two-ring neighborhood keeps fiber-0 content, debris
    # does not (a fiber-0 test on raw clusters would lose wandering random
    # attractors whose recurrence sits at other fibers)
    clusters.sort(key=lambda c: int(c[0]))
    return clusters


def _saturate_spatial(G, inv, cluster_ids):
    """Spatial support of the family carried by a recurrent skeleton.

    Forward-reach intersected with backward-reach of the skeleton through the
    viable fibered graph: a wandering random orbit is swept in (its positions
    reach the skeleton both ways), while one-way connecting debris between two
    families is excluded. Returns the union of the per-fiber masks.
    """
    alive = inv.boxes.masks
    Fp1, B = alive.shape
    k_lo = inv.boxes.k_lo
    seed = np.zeros(B, dtype=bool)
    seed[cluster_ids] = True
    fwd = alive & seed[None, :]
    for t in range(Fp1 - 1):
        lo, hi, _ = G.trans_row(k_lo + t)
        cov = np.zeros(B + 1, dtype=np.int64)
        ids = np.nonzero(fwd[t] & (lo <= hi))[0]
        if ids.size:
            np.add.at(cov, lo[ids], 1)
            np.add.at(cov, hi[ids] + 1, -1)
        reach = np.cumsum(cov[:B]) > 0
        fwd[t + 1] |= alive[t + 1] & reach
    bwd = alive & seed[None, :]
    for t in range(Fp1 - 2, -1, -1):
        lo, hi, _ = G.trans_row(k_lo + t)
        csum = np.zeros(B + 1, dtype=np.int64)
        np.cumsum(bwd[t + 1], out=csum[1:])
        ok = (lo <= hi) & alive[t]
        hits = np.zeros(B, dtype=bool)
        ids = np.nonzero(ok)[0]
        if ids.size:
            hits[ids] = (csum[hi[ids] + 1] - csum[lo[ids]]) > 0
        bwd[t] |= hits
    sat = fwd & bwd
    spatial = np.nonzero(sat.any(axis=0))[0]
    return spatial if spatial.size else np.asarray(cluster_ids)


def _merge_touching(clusters, B):
    """Union clusters whose two-ring dilations intersect; keep sorted order."""
    if not clusters:
        return []
    n = len(clusters)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    masks = []
    for c in clusters:
        m = np.zeros(B, dtype=bool)
        m[c] = True
        # merge when prospective 2-ring neighborhoods would intersect
        g = m
        for _ in range(2):
            grown = g.copy()
            grown[1:] |= g[:-1]
            grown[:-1] |= g[1:]
            g = grown
        masks.append(g)
    for i in range(n):
        for j in range(i + 1, n):
            if np.any(masks[i] & masks[j]):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    merged = []
    for g in groups.values():
        ids = np.unique(np.concatenate([clusters[i] for i in g]))
        merged.append((ids, len(g) > 1))
    merged.sort(key=lambda t: int(t[0][0]))
    return merged


def _fiber_constant_set(grid, k_lo, k_hi, ids):
    m = np.zeros(grid.n, dtype=bool)
    m[ids] = True
    return RandomBoxSet(grid, k_lo, np.tile(m, (k_hi - k_lo + 1, 1)))


def _region_candidates(sys, path, grid, within_ids, st):
    """Decomposition step inside one region: graph, Inv, merged candidates.

    Candidate supports are the directed saturations of the recurrent
    skeletons, merged when their prospective two-ring neighborhoods touch.
    """
    K = st.K
    if within_ids is None:
        N = RandomBoxSet.full(grid, -K, K)
    else:
        N = _fiber_constant_set(grid, -K, K, within_ids)
    G = build_transition_graph(sys, path, N)
    inv = compute_inv(G, N, margin=st.margin)
    clusters = _union_scc_clusters(G, inv)
    supports = [_saturate_spatial(G, inv, c) for c in clusters]
    merged = _merge_touching(supports, grid.n)
    return grid, G, inv, merged


def _refined_region(parent_grid, region_ids, factor=2):
    """Nested half-width grid over the hull of a parent-box id set."""
    i_min = int(region_ids[0])
    i_max = int(region_ids[-1])
    hull_lo = parent_grid.edge(i_min)
    hull_hi = parent_grid.edge(i_max + 1)
    n_sub = (i_max + 1 - i_min) * factor
    sub_grid = BoxGrid(hull_lo, hull_hi, max(n_sub, 4))
    keep = np.zeros(sub_grid.n, dtype=bool)
    id_set = set(int(i) for i in region_ids)
    for j in range(n_sub):
        if (i_min + j // factor) in id_set:
            keep[j] = True
    return sub_grid, np.nonzero(keep)[0]


def _resolve(sys, path, grid, G, support_ids, depth, st):
    """Resolve one candidate: fix its working region, then refine inside it."""
    K = st.K
    region = _fiber_constant_set(grid, -K, K, support_ids).dilate(2)
    region_ids = np.nonzero(region.row(0))[0]
    return _resolve_region(sys, path, grid, G, region_ids, depth, st)


def _resolve_region(sys, path, grid, G, region_ids, depth, st):
    """Resolve the invariant content of a fixed region into primes.

    Between splits the region is held fixed in absolute coordinates and only
    its grid refines: re-tightening the neighborhood at every level starves
    wandering random orbits whose recurrent skeleton under-covers their
    support. A split (>= 2 recurrence candidates) re-enters _resolve, which
    fixes a fresh region per piece. A candidate is certified prime only when
    the probe chain down to the budget floor never splits it.
    """
    K = st.K
    N_c = _fiber_constant_set(grid, -K, K, region_ids)
    S_c = compute_inv(G, N_c, margin=st.margin)
    if S_c.is_core_empty() or not S_c.boxes.row(0).any():
        return [], []  # over-approximation artifact, no fiber-0 content
    iso_ok, _ = is_isolating_neighborhood(N_c, S_c)

    def _unresolved(reason):
        spans = _ids_to_spans(grid, region_ids)
        return [UnresolvedFamily(support_span=(spans[0][0], spans[-1][1]),
                                 resolution=grid.width, reason=reason)]

    if depth + 1 > st.refine_rounds + 1:
        return [], _unresolved("refinement budget exhausted")
    sub_grid, within = _refined_region(grid, region_ids)
    _, G_sub, inv_sub, sub_candidates = _region_candidates(sys, path, sub_grid,
                                                           within, st)
    prime_here = PrimeFamily(
        boxes=S_c,
        neighborhood=N_c,
        fingerprint=None,
        resolution_certified=grid.width,
        support_span=S_c.boxes.fiber_span(0),
    )
    if len(sub_candidates) == 0:
        # no recurrent cluster at the finer width: either the candidate was
        # chain debris (its refined invariant set is gone) or it is a
        # wandering family whose finite sample never revisits a finer box;
        # the refined Inv distinguishes the two
        if inv_sub.is_core_empty() or not inv_sub.boxes.row(0).any():
            return [], []
        if iso_ok:
            return [prime_here], []
        return [], _unresolved("isolation unverified")
    can_recurse = depth + 1 <= st.refine_rounds

    if len(sub_candidates) >= 2 or not iso_ok:
        if not can_recurse:
            reason = ("split pending" if len(sub_candidates) >= 2
                      else "isolation unverified")
            return [], _unresolved(reason)
        primes = []
        unresolved = []
        for ids, _m in sub_candidates:
            p, u = _resolve(sys, path, sub_grid, G_sub, ids, depth + 1, st)
            primes.extend(p)
            unresolved.extend(u)
        return primes, unresolved

    if not can_recurse:
        return [prime_here], []  # single probe level at the floor: no split seen
    p, u = _resolve_region(sys, path, sub_grid, G_sub, within, depth + 1, st)
    if len(p) == 1 and not u:
        return [prime_here], []  # confirmed single all the way down
    return p, u  # split (or trouble) deeper: report the refined outcome


def _ids_to_spans(grid, ids):
    spans = []
    start = prev = int(ids[0])
    for i in ids[1:]:
        i = int(i)
        if i != prev + 1:
            spans.append((grid.edge(start), grid.edge(prev + 1)))
            start = i
        prev = i
    spans.append((grid.edge(start), grid.edge(prev + 1)))
    return spans


def _pair_for(sys, path, grid, G, support_ids, st, other_islands=()):
    """Filtration pair around a certified support with adaptive padding.

    Weakly hyperbolic families need wide pads (the exit set must clear the
    invariant cluster by several rings), so a cheap screen skips pads whose
    exit set still touches the cluster's two-ring collar before paying for
    the L-dilation loop. Pads whose neighborhood would reach another prime's
    islands stop the ladder.
    """
    from .topology import exit_set as _exit_set

    K = st.K
    collar = _fiber_constant_set(grid, -K, K, support_ids).dilate(3)
    for pad in st.pads:
        if pad >= grid.n:
            break
        N_f = _fiber_constant_set(grid, -K, K, support_ids).dilate(pad)
        n_islands = _ids_to_spans(grid, np.nonzero(N_f.row(0))[0])
        if _intervals_overlap(n_islands, other_islands):
            break  # would swallow a neighboring prime
        S_f = compute_inv(G, N_f, margin=st.margin)
        if S_f.is_core_empty():
            continue
        ok, _ = is_isolating_neighborhood(N_f, S_f)
        if not ok:
            continue
        ex = _exit_set(sys, path, N_f, graph=G)
        if np.any(ex.masks & collar.masks):
            continue  # exit still reaches the cluster collar: pad hopeless
        try:
            return build_filtration_pair(
                sys, path, N_f, S_f, ring_limit=st.ring_limit,
                margin=st.margin, graph=G,
            )
        except FiltrationError:
            continue
    return None


def _core_support_ids(fam):
    """Union of the family's boxes over core fibers (edge fibers carry junk)."""
    lo = fam.core_lo - fam.boxes.k_lo
    hi = fam.core_hi - fam.boxes.k_lo
    return np.nonzero(fam.boxes.masks[lo : hi + 1].any(axis=0))[0]


def _fingerprint_prime(sys, path, prime, st, own_islands, other_islands,
                       _depth=0):
    """Fingerprint a prime on a purpose-built local grid around its support.

    The grid leaves room for the whole pad ladder regardless of how cramped
    the certification grid was. Matching between the local decomposition and
    this prime happens island-by-island, so interleaved supports (cycles)
    stay distinguishable. On failure the width is halved (twice at most).
    """
    w = prime.resolution_certified / (2 ** _depth)
    hull_lo = own_islands[0][0]
    hull_hi = own_islands[-1][1]
    pad_abs = (max(st.pads) + 6) * w
    dom_lo = max(sys.domain[0], hull_lo - pad_abs)
    dom_hi = min(sys.domain[1], hull_hi + pad_abs)
    # clip by neighboring islands that lie fully outside this prime's hull
    for lo, hi in other_islands:
        if hi <= hull_lo:
            dom_lo = max(dom_lo, hi)
        if lo >= hull_hi:
            dom_hi = min(dom_hi, lo)
    grid_f = build_grid((dom_lo, dom_hi), w)
    grid_f, G, inv_f, cands = _region_candidates(sys, path, grid_f, None, st)
    matching = []
    for c, _m in cands:
        c_islands = _ids_to_spans(grid_f, c)
        if _intervals_overlap(c_islands, own_islands) and not _intervals_overlap(
            c_islands, other_islands
        ):
            matching.append(c)
    if len(matching) == 0 and not inv_f.is_core_empty():
        # wandering families carry no recurrent cluster at this width; fall
        # back to the prime's own islands as the support
        ids = []
        for lo, hi in own_islands:
            i0, i1 = grid_f.needed_range(lo, hi)
            ids.extend(range(i0, i1 + 1))
        if ids:
            matching = [np.array(sorted(set(ids)), dtype=np.int64)]
    if len(matching) == 1:
        support_ids = matching[0]
        pair = _pair_for(sys, path, grid_f, G, support_ids, st,
                         other_islands=other_islands)
        if pair is not None:
            try:
                PS = pointed_map(sys, path, pair, graph=G)
                fp = fingerprint(PS, pair.L, st.auto_horizon())
                return fp, pair
            except RefinementError:
                pass
    if _depth >= 2:
        return None, None
    return _fingerprint_prime(sys, path, prime, st, own_islands, other_islands,
                              _depth=_depth + 1)


def prime_decomposition(sys, path, domain_N=None, settings=None):
    """Decompose the maximal invariant set over the domain into prime families.

    domain_N defaults to the full grid over the system domain at the configured
    width. Unresolved candidates are returned separately; M is then a range.
    """
    st = settings or DecompSettings()
    if path.radius != st.K:
        st = replace(st, K=path.radius)
    warnings = []
    if domain_N is None:
        grid = build_grid(sys.domain, st.width)
        within = None
    else:
        grid = domain_N.grid
        within = np.nonzero(domain_N.row(0))[0]
    grid, G, inv, merged = _region_candidates(sys, path, grid, within, st)
    esc_row = G.escape[0 - G.k_lo]
    escape_fraction = float(esc_row.sum()) / float(esc_row.size)
    primes = []
    unresolved = []
    for ids, _mflag in merged:
        p, u = _resolve(sys, path, grid, G, ids, 0, st)
        primes.extend(p)
        unresolved.extend(u)
    primes.sort(key=lambda p: p.support_span[0])
    # fingerprints; each prime's pad ladder must stay clear of the others
    islands = [
        _ids_to_spans(p.boxes.boxes.grid, _core_support_ids(p.boxes))
        for p in primes
    ]
    out = []
    for i, p in enumerate(primes):
        other = tuple(
            span for j, spans in enumerate(islands) if j != i for span in spans
        )
        fp, pair = _fingerprint_prime(sys, path, p, st, islands[i], other)
        if fp is None:
            warnings.append(
                "fingerprint unavailable for prime at [%.6g, %.6g]" % p.support_span
            )
        out.append(replace(p, fingerprint=fp, pair=pair))
    return DecompositionResult(primes=tuple(out), unresolved=tuple(unresolved),
                               warnings=tuple(warnings),
                               escape_fraction=escape_fraction)


# ---------------------------------------------------------------------------
# lemma-backed checks
# ---------------------------------------------------------------------------


def _fiber_intervals(fam, k):
    boxes = fam.boxes if isinstance(fam, InvariantFamily) else fam
    ids = boxes.fiber_ids(k)
    if ids.size == 0:
        return []
    return _ids_to_spans(boxes.grid, ids)


def _intervals_overlap(a, b, strict=True):
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            if max(lo1, lo2) < min(hi1, hi2):
                return True
            if not strict and max(lo1, lo2) <= min(hi1, hi2):
                return True
    return False


def check_pairwise_disjoint(primes):
    """All pairs of prime families have disjoint supports at every core fiber."""
    primes = list(primes)
    for i in range(len(primes)):
        for j in range(i + 1, len(primes)):
            a, b = primes[i], primes[j]
            k_lo = max(a.boxes.core_lo, b.boxes.core_lo)
            k_hi = min(a.boxes.core_hi, b.boxes.core_hi)
            for k in range(k_lo, k_hi + 1):
                if _intervals_overlap(_fiber_intervals(a.boxes, k),
                                      _fiber_intervals(b.boxes, k)):
                    return False, (i, j, k)
    return True, None


def union_isolated_check(p1, p2, sys, path, settings=None):
    """Union of two disjoint primes' neighborhoods is again isolating."""
    st = settings or DecompSettings()
    if path.radius != st.K:
        st = replace(st, K=path.radius)
    if p1 is p2:
        raise UsageError("need two distinct prime families")
    ok, _ = check_pairwise_disjoint([p1, p2])
    if not ok:
        raise UsageError("prime families are not disjoint")
    # one-ring dilations of the neighborhoods must not share a box
    n1 = [_fiber_intervals(p.neighborhood.dilate(1), p.boxes.core_lo)
          for p in (p1, p2)]
    if _intervals_overlap(n1[0], n1[1], strict=True):
        raise UsageError("one-ring neighborhoods are not disjoint")
    width = min(p1.resolution_certified, p2.resolution_certified)
    grid = build_grid(sys.domain, width)
    K = st.K
    mask = np.zeros(grid.n, dtype=bool)
    for p in (p1, p2):
        for lo, hi in _fiber_intervals(p.neighborhood, p.boxes.core_lo):
            i0, i1 = grid.needed_range(lo, hi)  # covering, no face-tie widening
            mask[i0 : i1 + 1] = True
    N = RandomBoxSet(grid, -K, np.tile(mask, (2 * K + 1, 1)))
    G = build_transition_graph(sys, path, RandomBoxSet.full(grid, -K, K))
    inv = compute_inv(G, N, margin=st.margin)
    ok, _ = is_isolating_neighborhood(N, inv)
    return ok


# ---------------------------------------------------------------------------
# sweeps and bisection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    lam: float
    seed: int
    M: object  # int or (lo, hi)
    primes: tuple  # (span, trivial, l_profile, fingerprint) per prime
    warnings: tuple
    escape_fraction: float = 0.0

    def to_dict(self):
        d = {"lambda": self.lam, "seed": self.seed,
             "escape_fraction": self.escape_fraction}
        if isinstance(self.M, tuple):
            d["M"] = self.M[0]
            d["M_range"] = list(self.M)
        else:
            d["M"] = self.M
        primes = []
        for span, _tr, lprof, fp in self.primes:
            entry = {
                "bbox_fiber0": [span[0], span[1]],
                "trivial": (None if fp is None else fp.trivial),
                "l_flags": lprof,
            }
            if fp is None:
                entry["fingerprint"] = None
            else:
                entry["fingerprint"] = {
                    "counts": list(fp.counts),
                    "l_flags": [bool(b) for b in fp.l_flags],
                    "trivial": fp.trivial,
                    "horizon": fp.horizon,
                }
            primes.append(entry)
        d["primes"] = primes
        if self.warnings:
            d["warnings"] = list(self.warnings)
        return d


@dataclass(frozen=True)
class BifurcationCertificate:
    lo: float
    hi: float
    left_M: object
    right_M: object
    left_l_profiles: tuple
    right_l_profiles: tuple
    conclusive: bool
    warnings: tuple

    def to_dict(self):
        return {
            "lo": self.lo,
            "hi": self.hi,
            "left_M": list(self.left_M) if isinstance(self.left_M, tuple) else self.left_M,
            "right_M": list(self.right_M) if isinstance(self.right_M, tuple) else self.right_M,
            "left_l_profiles": list(self.left_l_profiles),
            "right_l_profiles": list(self.right_l_profiles),
            "conclusive": self.conclusive,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class SweepReport:
    lambdas: tuple
    seeds: tuple
    runs: tuple  # row-major: runs[i][j] for lambda i, seed j
    changes: tuple  # ((lo, hi, votes), ...)
    certificates: tuple
    interpretation: str = (
        "comparisons pair runs sharing a seed across parameter values "
        "(common random numbers); majority vote across seeds raises a change flag"
    )

    def to_dict(self, config=None):
        d = {}
        if config is not None:
            d["config"] = config
        d["interpretation_note"] = self.interpretation
        d["lambdas"] = list(self.lambdas)
        d["seeds"] = list(self.seeds)
        d["runs"] = [r.to_dict() for row in self.runs for r in row]
        d["changes"] = [
            {"lo": lo, "hi": hi, "votes": v, "realizations": len(self.seeds)}
            for (lo, hi, v) in self.changes
        ]
        d["certificates"] = [c.to_dict() for c in self.certificates]
        return d

    def csv_lines(self):
        lines = ["lambda,seed,M"]
        for row in self.runs:
            for r in row:
                m = "%d:%d" % r.M if isinstance(r.M, tuple) else str(r.M)
                lines.append("%s,%d,%s" % (repr(r.lam), r.seed, m))
        return lines


def evaluate_run(make_system, lam, seed, st):
    """Decompose one (lambda, seed) point into a RunResult."""
    sys = make_system(lam)
    path = sample_path(sys.noise, st.K, seed)
    res = prime_decomposition(sys, path, settings=st)
    primes = tuple(
        (p.support_span, None if p.fingerprint is None else p.fingerprint.trivial,
         p.l_profile(), p.fingerprint)
        for p in res.primes
    )
    return RunResult(lam=float(lam), seed=int(seed), M=count_M(res), primes=primes,
                     warnings=res.warnings, escape_fraction=res.escape_fraction)


def _run_changed(a, b):
    """True/False change verdict between two runs of one seed; None = inconclusive."""
    if isinstance(a.M, tuple) or isinstance(b.M, tuple):
        return None
    if a.M != b.M:
        return True
    verdict = False
    for pa, pb in zip(a.primes, b.primes):
        fa, fb = pa[3], pb[3]
        if fa is None or fb is None:
            verdict = None if verdict is False else verdict
            continue
        if compare_fingerprints(fa, fb) == "different":
            return True
    return verdict


def _majority(R):
    return (R + 2) // 2  # ceil((R+1)/2)


def sweep(make_system, lambdas, realizations=8, seeds=None, base_seed=20260808,
          settings=None, tol=0.02, mapper=None, refine=True):
    """Parameter sweep with common random numbers and majority change flags."""
    st = settings or DecompSettings()
    lambdas = [float(v) for v in lambdas]
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise UsageError("lambdas must be strictly increasing")
    if realizations < 1:
        raise UsageError("realizations must be >= 1")
    if seeds is None:
        seeds = [int(base_seed) + i for i in range(realizations)]
    seeds = [int(s) for s in seeds][:realizations]
    if len(seeds) != realizations:
        raise UsageError("need one seed per realization")
    tasks = [(lam, seed) for lam in lambdas for seed in seeds]
    runner = mapper if mapper is not None else map
    flat = list(runner(lambda t: evaluate_run(make_system, t[0], t[1], st), tasks))
    R = len(seeds)
    rows = tuple(tuple(flat[i * R : (i + 1) * R]) for i in range(len(lambdas)))
    changes = []
    for i in range(len(lambdas) - 1):
        votes = 0
        for j in range(R):
            if _run_changed(rows[i][j], rows[i + 1][j]) is True:
                votes += 1
        if votes >= _majority(R):
            changes.append((lambdas[i], lambdas[i + 1], votes))
    certificates = []
    if refine:
        for lo, hi, _v in changes:
            certificates.append(
                bisect_refine(make_system, (lo, hi), tol, realizations, seeds, st)
            )
    return SweepReport(lambdas=tuple(lambdas), seeds=tuple(seeds), runs=rows,
                       changes=tuple(changes), certificates=tuple(certificates))


def bisect_refine(make_system, interval, tol, realizations=1, seeds=None,
                  settings=None, base_seed=20260808):
    """Bisect a flagged interval down to width <= tol with common random numbers.

    When the midpoint carries a third signature (differs from both endpoints),
    both halves contain changes; the left half is kept and a warning recorded.
    An inconclusive midpoint stops the loop and the last conclusive bracket is
    returned with a warning.
    """
    st = settings or DecompSettings()
    if seeds is None:
        seeds = [int(base_seed) + i for i in range(realizations)]
    seeds = [int(s) for s in seeds][:realizations]
    lo, hi = float(interval[0]), float(interval[1])
    if hi <= lo:
        raise UsageError("interval must have positive width")
    cache = {}

    def runs_at(lam):
        if lam not in cache:
            cache[lam] = [evaluate_run(make_system, lam, s, st) for s in seeds]
        return cache[lam]

    def majority_change(a_runs, b_runs):
        votes = 0
        inconclusive = 0
        for ra, rb in zip(a_runs, b_runs):
            v = _run_changed(ra, rb)
            if v is True:
                votes += 1
            elif v is None:
                inconclusive += 1
        if votes >= _majority(len(a_runs)):
            return True
        if inconclusive >= _majority(len(a_runs)):
            return None
        return False

    warnings = []
    conclusive = True
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ch_left = majority_change(runs_at(lo), runs_at(mid))
        ch_right = majority_change(runs_at(mid), runs_at(hi))
        if ch_left is True and ch_right is True:
            warnings.append(
                "midpoint %.6g shows a third signature; both halves change, "
                "continuing left" % mid
            )
            hi = mid
        elif ch_left is True:
            hi = mid
        elif ch_right is True:
            lo = mid
        else:
            warnings.append(
                "change test inconclusive at midpoint %.6g; returning last "
                "conclusive bracket" % mid
            )
            conclusive = False
            break

    left = runs_at(lo)
    right = runs_at(hi)

    def agg_M(runs):
        cnt = {}
        for r in runs:
            cnt[r.M] = cnt.get(r.M, 0) + 1
        return sorted(cnt.items(), key=lambda kv: (-kv[1], str(kv[0])))[0][0]

    return BifurcationCertificate(
        lo=lo,
        hi=hi,
        left_M=agg_M(left),
        right_M=agg_M(right),
        left_l_profiles=tuple(p[2] for p in left[0].primes),
        right_l_profiles=tuple(p[2] for p in right[0].primes),
        conclusive=conclusive,
        warnings=tuple(warnings),
    )
