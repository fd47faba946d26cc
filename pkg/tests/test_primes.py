import json

import numpy as np
import pytest

import rdsconley as rc
from rdsconley import (
    ConjugacyDef,
    bisect_refine,
    check_pairwise_disjoint,
    conjugate_system,
    count_M,
    make_system,
    prime_decomposition,
    sample_path,
    sweep,
    union_isolated_check,
)
from rdsconley.errors import UsageError
from rdsconley.primes import DecompSettings, DecompositionResult, UnresolvedFamily


def test_decomposition_example1_two_primes(ex1_decomp):
    assert count_M(ex1_decomp) == 2
    attr, rep = ex1_decomp.primes
    # attracting family contains -0.3 and has empty exit sets
    assert attr.support_span[0] <= -0.3 <= attr.support_span[1]
    assert attr.l_profile() == "empty"
    # repelling family contains +0.3 with nonempty exit sets
    assert rep.support_span[0] <= 0.3 <= rep.support_span[1]
    assert rep.l_profile() == "nonempty"


def test_decomposition_escape_regime(const1, path1):
    sys = make_system("example1", 0.1, const1)
    res = prime_decomposition(sys, path1)
    assert res.primes == () and count_M(res) == 0


def test_decomposition_pitchfork_three_primes(pitchfork_decomp):
    assert count_M(pitchfork_decomp) == 3
    spans = [p.support_span for p in pitchfork_decomp.primes]
    import math

    for target, (lo, hi) in zip((-math.sqrt(0.5), 0.0, math.sqrt(0.5)), spans):
        assert lo <= target <= hi
    profiles = [p.l_profile() for p in pitchfork_decomp.primes]
    assert profiles == ["empty", "nonempty", "empty"]


def test_count_M_variants(ex1_decomp):
    assert count_M([]) == 0
    assert count_M(ex1_decomp.primes) == 2
    partial = DecompositionResult(
        primes=ex1_decomp.primes,
        unresolved=(UnresolvedFamily((0.0, 0.1), 0.05, "split pending"),),
    )
    assert count_M(partial) == (2, 3)


def test_pairwise_disjoint(ex1_decomp, pitchfork_decomp):
    for res in (ex1_decomp, pitchfork_decomp):
        ok, witness = check_pairwise_disjoint(res.primes)
        assert ok and witness is None
    assert check_pairwise_disjoint([ex1_decomp.primes[0]])[0]
    dup = [ex1_decomp.primes[0], ex1_decomp.primes[0]]
    ok, witness = check_pairwise_disjoint(dup)
    assert not ok and witness is not None


def test_union_isolated(ex1_sys, path1, ex1_decomp, pitchfork_sys, path0,
                        pitchfork_decomp):
    assert union_isolated_check(ex1_decomp.primes[0], ex1_decomp.primes[1],
                                ex1_sys, path1)
    # center prime and one outer attractor of the pitchfork
    assert union_isolated_check(pitchfork_decomp.primes[1],
                                pitchfork_decomp.primes[2],
                                pitchfork_sys, path0)
    with pytest.raises(UsageError):
        union_isolated_check(ex1_decomp.primes[0], ex1_decomp.primes[0],
                             ex1_sys, path1)


def test_sweep_example1_change_interval(const1):
    mk = lambda lam: make_system("example1", lam, const1)
    rep = sweep(mk, [-0.3, -0.2, -0.1, 0.1, 0.2, 0.3], realizations=1, seeds=[7],
                refine=False)
    Ms = [row[0].M for row in rep.runs]
    assert Ms == [2, 2, 2, 0, 0, 0]
    assert [(c[0], c[1]) for c in rep.changes] == [(-0.1, 0.1)]


def test_sweep_pitchfork_change_interval(const0):
    mk = lambda lam: make_system("pitchfork", lam, const0, noise_scale=0.0)
    rep = sweep(mk, [-0.5, -0.25, 0.25, 0.5], realizations=1, seeds=[1],
                refine=False)
    assert [row[0].M for row in rep.runs] == [1, 1, 3, 3]
    assert [(c[0], c[1]) for c in rep.changes] == [(-0.25, 0.25)]


def test_sweep_pitchfork_with_small_noise(const0):
    # mean-zero forcing at amplitude 0.02 leaves the 1 -> 3 family-count
    # change detectable in every realization
    noise = rc.NoiseModel.uniform(-1.0, 1.0)
    mk = lambda lam: make_system("pitchfork", lam, noise, noise_scale=0.02)
    rep = sweep(mk, [-0.25, 0.25], realizations=4, seeds=[11, 12, 13, 14],
                refine=False)
    for row, m in zip(rep.runs, (1, 3)):
        assert all(r.M == m for r in row)
    assert len(rep.changes) == 1 and rep.changes[0][2] == 4


def test_sweep_subcritical_m_change_and_flag_flip(const0):
    mk = lambda lam: make_system("subcritical", lam, const0, noise_scale=0.0)
    rep = sweep(mk, [-0.4, 0.4], realizations=1, seeds=[1], refine=False)
    left, right = rep.runs[0][0], rep.runs[1][0]
    assert left.M == 3 and right.M == 1
    assert [(c[0], c[1]) for c in rep.changes] == [(-0.4, 0.4)]
    # the prime containing 0 flips from attractor (L empty) to repeller
    center_left = [p for p in left.primes if p[0][0] <= 0.0 <= p[0][1]]
    center_right = [p for p in right.primes if p[0][0] <= 0.0 <= p[0][1]]
    assert center_left[0][2] == "empty"
    assert center_right[0][2] == "nonempty"


def test_sweep_validation(const1):
    mk = lambda lam: make_system("example1", lam, const1)
    with pytest.raises(UsageError):
        sweep(mk, [0.2, 0.1], realizations=1, seeds=[7])
    with pytest.raises(UsageError):
        sweep(mk, [0.1, 0.2], realizations=0, seeds=[])


def test_sweep_deterministic_reports(const1):
    mk = lambda lam: make_system("example1", lam, const1)
    kwargs = dict(realizations=2, seeds=[7, 8], refine=False)
    r1 = sweep(mk, [-0.2, 0.2], **kwargs)
    r2 = sweep(mk, [-0.2, 0.2], **kwargs)
    assert json.dumps(r1.to_dict()) == json.dumps(r2.to_dict())
    assert r1.csv_lines() == r2.csv_lines()


def test_sweep_uniform_noise_majority(const1):
    noise = rc.NoiseModel.uniform(0.5, 1.5)
    mk = lambda lam: make_system("example1", lam, noise)
    rep = sweep(mk, [-0.1, 0.1], realizations=8, seeds=list(range(50, 58)),
                refine=False)
    assert len(rep.changes) == 1
    assert rep.changes[0][2] >= 7  # votes


def test_no_false_alarm_on_conjugated_family(const1):
    def mk(lam):
        base = make_system("example1", -0.2, const1)
        return conjugate_system(base, ConjugacyDef.affine(1.0, 0.25 * lam))

    rep = sweep(mk, [-0.4, 0.0, 0.4], realizations=1, seeds=[7], refine=False)
    assert rep.changes == ()
    Ms = [row[0].M for row in rep.runs]
    assert Ms == [2, 2, 2]


def test_detector_quiet_on_period_doubling(const1):
    # between these lambdas the attracting family turns from a fixed point
    # into a 2-cycle while M stays 2 and both sides stay nontrivial: the
    # sufficient condition (M change or triviality flip) does not fire, and
    # equal/incomparable fingerprints never raise a flag on their own
    mk = lambda lam: make_system("example1", lam, const1)
    st = DecompSettings(width=0.05, refine_rounds=4)
    rep = sweep(mk, [-0.45, -0.2], realizations=1, seeds=[7], settings=st,
                refine=False)
    assert [row[0].M for row in rep.runs] == [2, 2]
    assert rep.changes == ()


def test_bisect_interval_already_within_tol(const1):
    mk = lambda lam: make_system("example1", lam, const1)
    cert = bisect_refine(mk, (-0.011, 0.005), 0.02, realizations=1, seeds=[7])
    assert (cert.lo, cert.hi) == (-0.011, 0.005)


def test_bisect_example1_brackets_zero(const1):
    mk = lambda lam: make_system("example1", lam, const1)
    cert = bisect_refine(mk, (-0.1, 0.1), 0.02, realizations=1, seeds=[7])
    assert cert.hi - cert.lo <= 0.02
    assert cert.lo <= 0.0 <= cert.hi
    assert cert.left_M == 2


def test_decomposition_robust_to_branch_misaligned_widths(ex1_sys, path1):
    # widths 0.04 and 0.033 put grid edges off the branch point -1/2, so one
    # box genuinely straddles it; the union-hull enclosure of that box must
    # not fabricate or destroy families
    for w in (0.04, 0.033):
        res = prime_decomposition(ex1_sys, path1, settings=DecompSettings(width=w))
        assert count_M(res) == 2
        assert [p.l_profile() for p in res.primes] == ["empty", "nonempty"]


def test_decomposition_with_domain_restriction(ex1_sys, path1):
    from rdsconley import RandomBoxSet, build_grid

    grid = build_grid(ex1_sys.domain, 0.05)
    domain_N = RandomBoxSet.from_interval(grid, -32, 32, (-0.5, 0.5))
    res = prime_decomposition(ex1_sys, path1, domain_N=domain_N)
    assert count_M(res) == 2
    assert res.primes[0].support_span[0] <= -0.3 <= res.primes[0].support_span[1]


def test_decomposition_discrete_noise(const0):
    noise = rc.NoiseModel.discrete([0.8, 1.2], [0.5, 0.5])
    sys = make_system("example1", -0.2, noise)
    path = sample_path(noise, 32, 9)
    res = prime_decomposition(sys, path)
    assert count_M(res) == 2
    assert [p.l_profile() for p in res.primes] == ["empty", "nonempty"]


def test_wandering_attractor_not_dropped(const1):
    # uniform noise at lambda=-0.2 pushes the random attractor across the
    # branch point, so its finite-window orbit wanders without box-level
    # recurrence at fine widths; the decomposition must keep it (M = 2)
    noise = rc.NoiseModel.uniform(0.5, 1.5)
    sys = make_system("example1", -0.2, noise)
    st = DecompSettings(width=0.05, refine_rounds=4)
    for seed in (300, 301, 303):
        res = prime_decomposition(sys, sample_path(noise, 32, seed), settings=st)
        assert count_M(res) == 2
        assert res.primes[0].l_profile() == "empty"


def test_bisect_uniform_noise_alternate_seeds(const1):
    noise = rc.NoiseModel.uniform(0.5, 1.5)
    mk = lambda lam: make_system("example1", lam, noise)
    st = DecompSettings(refine_rounds=4)
    hits = 0
    for seed in (200, 201, 202):
        c = bisect_refine(mk, (-0.1, 0.1), 0.02, realizations=1, seeds=[seed],
                          settings=st)
        hits += (c.hi - c.lo) <= 0.02 and c.lo <= 0.0 <= c.hi
    assert hits == 3


def test_enclosure_soundness_conjugated_orientation_flip(ex1_sys, path1):
    import numpy as np
    from rdsconley.boxes import _box_images_batch
    from rdsconley.systems import _map_points

    sys2 = conjugate_system(ex1_sys, ConjugacyDef.affine(-1.3, 0.2))
    rng = np.random.default_rng(41)
    lo_d, hi_d = sys2.domain
    a = rng.uniform(lo_d, hi_d - 1e-6, 2000)
    b = np.minimum(a + rng.uniform(1e-4, 0.1, 2000), hi_d)
    xs = a + rng.uniform(0, 1, 2000) * (b - a)
    elo, ehi = _box_images_batch(sys2, 1.0, a, b)
    ys = _map_points(sys2, 1.0, xs)
    assert np.all((elo <= ys + 1e-9) & (ys - 1e-9 <= ehi))


def test_conjugacy_invariance_of_M(ex1_sys, path1, ex1_decomp):
    rng = np.random.default_rng(31)
    base_fps = [p.fingerprint for p in ex1_decomp.primes]
    for _ in range(3):
        a = float(rng.uniform(0.5, 2.0)) * (1 if rng.random() < 0.5 else -1)
        b = float(rng.uniform(-0.3, 0.3))
        sys2 = conjugate_system(ex1_sys, ConjugacyDef.affine(a, b))
        res2 = prime_decomposition(sys2, path1)
        assert count_M(res2) == 2
        fps2 = [p.fingerprint for p in res2.primes]
        if a < 0:
            fps2 = fps2[::-1]  # orientation-reversing conjugacy mirrors the order
        for f1, f2 in zip(base_fps, fps2):
            assert rc.compare_fingerprints(f1, f2) != "different"
