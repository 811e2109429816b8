"""Compiled and pure-Python backends must consume streams identically.

Every draw routine here is run through both implementations from clones of
the same streams; results must agree to rounding and the stream states must
be bit-identical afterwards, so a later consumer cannot tell which backend
produced the draws.
"""
import os
import subprocess
import sys

import numpy as np
import pytest

from gwcheck import backend, ptest
from gwcheck import _pycore
from gwcheck.gwishart import (
    build_claimed_prep,
    build_clique_prep,
    build_exact_prep,
)
from gwcheck.matrix import cholesky
from gwcheck.rng import substream

_core = pytest.importorskip("gwcheck._core")


def gens_pair(seed, n):
    a = [substream(seed, i).generator for i in range(1, n + 1)]
    b = [substream(seed, i).generator for i in range(1, n + 1)]
    return a, b


def states(gens):
    return [g.bit_generator.state for g in gens]


def assert_same_states(ga, gb):
    for x, y in zip(states(ga), states(gb)):
        assert x == y


def test_wishart_batch_equivalent():
    gen0 = np.random.default_rng(2)
    m = gen0.standard_normal((5, 5))
    d = m @ m.T + 5 * np.eye(5)
    chol_d = cholesky(0.5 * (d + d.T))
    ga, gb = gens_pair(100, 8)
    out_c = _core.wishart_batch(9.0, chol_d, 8, ga)
    out_p = _pycore.wishart_batch(9.0, chol_d, 8, gb)
    assert np.allclose(out_c, out_p, rtol=1e-10, atol=1e-12)
    assert_same_states(ga, gb)


def test_wishart_batch_single_stream_mode():
    chol_d = np.eye(3)
    ga, gb = gens_pair(101, 1)
    out_c = _core.wishart_batch(7.0, chol_d, 6, ga)
    out_p = _pycore.wishart_batch(7.0, chol_d, 6, gb)
    assert out_c.shape == (6, 3, 3)
    assert np.allclose(out_c, out_p, rtol=1e-10, atol=1e-12)
    assert_same_states(ga, gb)


def test_exact_batch_equivalent(params_a, params_c):
    for seed, params in ((102, params_a), (103, params_c)):
        prep = build_exact_prep(params)
        ga, gb = gens_pair(seed, 12)
        out_c = _core.exact_batch(prep, 12, ga)
        out_p = _pycore.exact_batch(prep, 12, gb)
        assert np.allclose(out_c, out_p, rtol=1e-10, atol=1e-12)
        # structural zeros are exact in both
        assert np.array_equal(out_c == 0.0, out_p == 0.0)
        assert_same_states(ga, gb)


def test_claimed_batch_equivalent(params_b, params_c, params_d):
    for seed, params in ((104, params_b), (105, params_c), (106, params_d)):
        prep = build_claimed_prep(params)
        ga, gb = gens_pair(seed, 10)
        out_c, sw_c, ch_c, cv_c = _core.claimed_batch(prep, 10, ga)
        out_p, sw_p, ch_p, cv_p = _pycore.claimed_batch(prep, 10, gb)
        assert np.allclose(out_c, out_p, rtol=1e-9, atol=1e-12)
        assert np.array_equal(sw_c, sw_p)
        assert np.array_equal(cv_c, cv_p)
        assert np.allclose(ch_c, ch_p, rtol=0, atol=1e-12)
        assert_same_states(ga, gb)


def test_run_chains_equivalent(params_a, params_c):
    codes = ptest.summary_codes(
        [ptest.make_summary("logdet"), ptest.make_summary("element_2_3")]
    )
    for seed, params in ((107, params_a), (108, params_c)):
        prep = build_clique_prep(params)
        n = 6
        init_a, init_b = gens_pair(seed, n)
        q0 = _core.exact_batch(build_exact_prep(params), n, init_a)
        q0_p = _pycore.exact_batch(build_exact_prep(params), n, init_b)
        for kernel_code, record_all in ((0, True), (1, True), (0, False)):
            ga, gb = gens_pair(seed + 50, n)
            rec_c = _core.run_chains(q0, prep, 7, kernel_code, ga, codes, record_all)
            rec_p = _pycore.run_chains(q0_p, prep, 7, kernel_code, gb, codes, record_all)
            assert rec_c.shape == rec_p.shape
            assert np.allclose(rec_c, rec_p, rtol=1e-9, atol=1e-11)
            assert_same_states(ga, gb)


def test_resample_gaps_identical():
    gen = np.random.default_rng(3)
    s, b = 41, 33
    t1 = gen.standard_normal(s)
    t2 = gen.standard_normal(s) + 0.4
    v = (gen.random((b, s)) < 0.5).astype(np.uint8)
    sort_idx = np.argsort(np.concatenate([t1, t2]), kind="stable")
    jstar = ptest.quantile_index(0.1, s)
    out_c = _core.resample_gaps(t1, t2, v, sort_idx, jstar)
    out_p = _pycore.resample_gaps(t1, t2, v, sort_idx, jstar)
    # selection-only computation: both pick the same elements, so the
    # results are bit-identical, not merely close
    assert np.array_equal(out_c, out_p)


def test_backend_names():
    assert _core.BACKEND_NAME == "compiled"
    assert _pycore.BACKEND_NAME == "python"
    assert backend.name in ("compiled", "python")


def run_with_env(value):
    env = dict(os.environ)
    if value is None:
        env.pop("GWCHECK_BACKEND", None)
    else:
        env["GWCHECK_BACKEND"] = value
    return subprocess.run(
        [sys.executable, "-c", "from gwcheck import backend; print(backend.name)"],
        capture_output=True,
        text=True,
        env=env,
    )


def test_backend_env_selection():
    forced_py = run_with_env("python")
    assert forced_py.returncode == 0 and forced_py.stdout.strip() == "python"
    forced_c = run_with_env("compiled")
    assert forced_c.returncode == 0 and forced_c.stdout.strip() == "compiled"
    default = run_with_env(None)
    assert default.returncode == 0 and default.stdout.strip() == "compiled"
    bogus = run_with_env("turbo")
    assert bogus.returncode != 0 and "ImportError" in bogus.stderr


def test_full_run_test_backend_agreement(params_a):
    """End-to-end report agreement across backends via subprocesses."""
    code = (
        "import numpy as np\n"
        "from gwcheck import graphs, ptest\n"
        "from gwcheck.gwishart import GWishartParams, SamplerSpec\n"
        "g = graphs.benchmark_graphs()['a']\n"
        "params = GWishartParams(delta=10.0, d=np.eye(4), graph=g)\n"
        "rep = ptest.run_test(SamplerSpec('claimed', params), s=120, r=4, q=199, master_seed=9)\n"
        "print(repr(rep.p_value), repr(float(rep.omega_star)))\n"
    )
    outs = {}
    for name in ("python", "compiled"):
        env = dict(os.environ, GWCHECK_BACKEND=name)
        r = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
        assert r.returncode == 0, r.stderr
        outs[name] = r.stdout.strip().split()
    p_py, w_py = float(outs["python"][0]), float(outs["python"][1])
    p_c, w_c = float(outs["compiled"][0]), float(outs["compiled"][1])
    assert p_py == p_c
    assert abs(w_py - w_c) < 1e-10
