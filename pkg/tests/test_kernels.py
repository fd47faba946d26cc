import subprocess
import sys

import numpy as np
import pytest

from rdsconley import _kernels as K
from rdsconley._kernels import _numpy_impl as NP

numba_impl = pytest.importorskip("rdsconley._kernels._numba_impl")


def _random_boxes(rng, n, lo=-1.0, hi=1.0):
    a = rng.uniform(lo, hi - 1e-4, n)
    w = rng.uniform(1e-4, 0.2, n)
    b = np.minimum(a + w, hi)
    return a, b


def test_discrete_points_bitwise_equal():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, 5000)
    for fam in (K.FAM_IDENTITY, K.FAM_EXAMPLE1):
        for drive in (-0.09, 0.0, 0.17):
            a = NP.discrete_points(fam, x, drive)
            b = numba_impl.discrete_points(fam, x, drive)
            assert np.array_equal(a, b)


def test_discrete_box_images_bitwise_equal():
    rng = np.random.default_rng(1)
    lo, hi = _random_boxes(rng, 5000)
    for drive in (-0.4, -0.09, 0.1):
        a = NP.discrete_box_images(K.FAM_EXAMPLE1, lo, hi, drive)
        b = numba_impl.discrete_box_images(K.FAM_EXAMPLE1, lo, hi, drive)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_ode_points_bitwise_equal():
    rng = np.random.default_rng(2)
    x = rng.uniform(-1.2, 1.2, 2000)
    for fam in (K.FAM_PITCHFORK, K.FAM_SUBCRITICAL):
        for lam, force, direction in [(0.5, 0.0, 1.0), (-0.4, 0.05, 1.0),
                                      (0.25, 0.0, -1.0)]:
            a = NP.ode_points(fam, x, lam, force, 64, direction)
            b = numba_impl.ode_points(fam, x, lam, force, 64, direction)
            assert np.array_equal(a, b, equal_nan=True)


def test_ode_box_images_bitwise_equal():
    rng = np.random.default_rng(3)
    lo, hi = _random_boxes(rng, 2000, -1.2, 1.2)
    for fam in (K.FAM_PITCHFORK, K.FAM_SUBCRITICAL):
        a = NP.ode_box_images(fam, lo, hi, 0.4, 0.0, 64, 0.01, 4.8)
        b = numba_impl.ode_box_images(fam, lo, hi, 0.4, 0.0, 64, 0.01, 4.8)
        assert np.array_equal(a[0], b[0], equal_nan=True)
        assert np.array_equal(a[1], b[1], equal_nan=True)


def test_blowup_marks_nan():
    x = np.array([5.0])
    out = NP.ode_points(K.FAM_SUBCRITICAL, x, 0.5, 0.0, 64, 1.0)
    assert np.isnan(out[0])
    out2 = numba_impl.ode_points(K.FAM_SUBCRITICAL, x, 0.5, 0.0, 64, 1.0)
    assert np.isnan(out2[0])


def _random_graph(rng, F, B):
    succ_lo = rng.integers(0, B, (F, B))
    spans = rng.integers(-1, 4, (F, B))
    succ_hi = np.minimum(succ_lo + spans, B - 1)
    alive = rng.random((F + 1, B)) < 0.7
    return succ_lo, succ_hi, alive


def test_prune_alive_backends_agree():
    rng = np.random.default_rng(4)
    for _ in range(20):
        succ_lo, succ_hi, alive = _random_graph(rng, 12, 40)
        a = NP.prune_alive(succ_lo, succ_hi, alive)
        b = numba_impl.prune_alive(succ_lo, succ_hi, alive)
        assert np.array_equal(a, b)


def test_prune_alive_fixpoint_property():
    rng = np.random.default_rng(5)
    succ_lo, succ_hi, alive = _random_graph(rng, 10, 30)
    out = NP.prune_alive(succ_lo, succ_hi, alive)
    F, B = succ_lo.shape
    # every surviving box (away from the window ends) has an alive successor
    # and an alive predecessor
    for t in range(F):
        for b in range(B):
            if not out[t, b]:
                continue
            lo, hi = succ_lo[t, b], succ_hi[t, b]
            assert lo <= hi and out[t + 1, lo : hi + 1].any()
    for t in range(1, F + 1):
        covered = np.zeros(B, dtype=bool)
        for b in range(B):
            if out[t - 1, b]:
                lo, hi = succ_lo[t - 1, b], succ_hi[t - 1, b]
                if lo <= hi:
                    covered[lo : hi + 1] = True
        assert not np.any(out[t] & ~covered)


def test_numpy_backend_forced_by_env():
    code = (
        "import rdsconley; "
        "print(rdsconley.BACKEND)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"PATH": "/usr/bin:/bin", "RDSCONLEY_BACKEND": "numpy",
             "HOME": "/root"},
    )
    assert out.stdout.strip() == "numpy"


def test_pipeline_matches_across_backends():
    code = (
        "import rdsconley as rc\n"
        "m = rc.NoiseModel.constant(1.0)\n"
        "p = rc.sample_path(m, 32, 7)\n"
        "s = rc.make_system('example1', -0.09, m)\n"
        "res = rc.prime_decomposition(s, p)\n"
        "print(rc.count_M(res), [pr.l_profile() for pr in res.primes])\n"
    )
    outs = []
    for backend in ("numpy", "numba"):
        r = subprocess.run(
            [sys.executable, "-c", code],
            capture_output=True, text=True,
            env={"PATH": "/usr/bin:/bin", "RDSCONLEY_BACKEND": backend,
                 "HOME": "/root"},
        )
        assert r.returncode == 0, r.stderr
        outs.append(r.stdout)
    assert outs[0] == outs[1] == "2 ['empty', 'nonempty']\n"
