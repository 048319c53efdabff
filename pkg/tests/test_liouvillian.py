import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heatlab import (
    BathSpec,
    HybridSystem,
    TwoQubitSystem,
    bose_occupation,
    build_rate_matrices,
    build_two_qubit_rate_matrices,
    displacement_table,
    transition_rate,
    weak_coupling_generators,
)
from heatlab.hilbert import DOWN, UP, DressedState

from _util import bath


def _check_generator(w):
    off = w - np.diag(np.diag(w))
    assert np.all(off >= 0)
    scale = max(np.max(np.abs(w)), 1e-300)
    assert np.max(np.abs(w.sum(axis=0))) <= 1e-12 * scale


@given(st.floats(0, 3), st.floats(0.2, 2), st.floats(0, 2), st.floats(0, 2))
def test_generator_invariants(lam, eps, ta, ts):
    r = build_rate_matrices(HybridSystem(eps, 1.0, lam, 15), bath(ta, "a"), bath(ts, "sigma"))
    for w in r.per_bath.values():
        _check_generator(w)


def test_mode_bath_rates(fig2):
    s, ba, bs = fig2(0.7)
    r = build_rate_matrices(s, ba, bs)
    w = r.per_bath["a"]
    g = 0.00452419
    na = bose_occupation(1.0, 1.5)
    basis = r.basis
    for branch in (UP, DOWN):
        for m in range(30):
            i, j = basis.index(branch, m), basis.index(branch, m + 1)
            assert w[j, i] == pytest.approx(g * na * (m + 1), rel=1e-6)
            assert w[i, j] == pytest.approx(g * (1 + na) * (m + 1), rel=1e-6)
            assert w[j, i] / w[i, j] == pytest.approx(math.exp(-1 / 1.5), rel=1e-12)
    # only same-branch nearest neighbours
    lv = basis.levels
    mask = np.zeros_like(w, dtype=bool)
    for b in range(2):
        for m in range(lv - 1):
            mask[b * lv + m + 1, b * lv + m] = mask[b * lv + m, b * lv + m + 1] = True
    np.fill_diagonal(mask, True)
    assert np.all(w[~mask] == 0)


def test_transition_rate_examples(fig2):
    s, ba, bs = fig2(0.2)
    r = build_rate_matrices(s, ba, bs)
    basis = r.basis
    kp = 0.005 * math.exp(-0.1) * bose_occupation(1.0, 1.5)
    up3 = DressedState(UP, 3, 0.0)
    up4 = DressedState(UP, 4, 0.0)
    assert transition_rate(up3, up4, ba, basis) == pytest.approx(4 * kp, rel=1e-12)
    assert transition_rate(up4, up3, ba, basis) == pytest.approx(4 * kp * math.exp(1 / 1.5), rel=1e-12)
    # resonance: (up, n) -> (down, n+1) has zero gap and no rate
    assert transition_rate(basis.index(UP, 2), basis.index(DOWN, 3), bs, basis) == 0.0
    assert r.per_bath["sigma"][basis.index(DOWN, 3), basis.index(UP, 2)] == 0.0


@given(st.floats(0, 2.5), st.floats(0.2, 2), st.floats(0.05, 2), st.floats(0.05, 2))
def test_scalar_rates_match_matrix(lam, eps, ta, ts):
    s = HybridSystem(eps, 1.0, lam, 6)
    ba, bs = bath(ta, "a"), bath(ts, "sigma")
    r = build_rate_matrices(s, ba, bs)
    for label, b in (("a", ba), ("sigma", bs)):
        w = r.per_bath[label]
        for i in range(r.basis.size):
            for j in range(r.basis.size):
                if i != j:
                    assert transition_rate(i, j, b, r.basis) == pytest.approx(w[j, i], rel=1e-12, abs=1e-300)


def test_sigma_block_at_zero_coupling():
    s = HybridSystem(1.0, 1.0, 0.0, 1)
    bs = bath(0.7, "sigma")
    r = build_rate_matrices(s, bath(1.0, "a"), bs)
    w = r.per_bath["sigma"]
    g = 0.005 * math.exp(-0.1)
    n = bose_occupation(1.0, 0.7)
    for m in range(2):
        up, dn = m, 2 + m
        assert w[up, dn] == pytest.approx(g * n)
        assert w[dn, up] == pytest.approx(g * (1 + n))
    off = w.copy()
    for m in range(2):
        off[m, 2 + m] = off[2 + m, m] = 0
    np.fill_diagonal(off, 0)
    assert np.all(off == 0)


def test_decoupled_mode_bath_is_zero():
    r = build_rate_matrices(HybridSystem(1.0, 1.0, 0.4, 10), BathSpec(0.0, 10, 1.0, "a"), bath(0.5, "sigma"))
    assert np.all(r.per_bath["a"] == 0)
    r2 = build_two_qubit_rate_matrices(TwoQubitSystem(1, 1, 0.1, 0.4, 1.0, 8), BathSpec(0.0, 10, 1.0, "a"),
                                       bath(0.5, "sigma_L"), bath(0.2, "sigma_R"))
    assert np.all(r2.per_bath["a"] == 0)


@pytest.mark.parametrize("eps", [1.0, 0.6, 1.7])
@pytest.mark.parametrize("lam,n_max", [(5e-4, 30), (1e-3, 10)])
def test_weak_coupling_reduction(eps, lam, n_max):
    s = HybridSystem(eps, 1.0, lam, n_max)
    ba, bs = bath(1.5, "a"), bath(0.5, "sigma")
    r = build_rate_matrices(s, ba, bs)
    m0, ml = weak_coupling_generators(s, ba, bs)
    approx = m0 + s.x**2 * ml
    full = r.total
    off = ~np.eye(full.shape[0], dtype=bool)
    live = off & ((full > 0) | (approx > 0))
    # entries dropped by the expansion are O(x^4) relative to the live ones
    rel = np.abs(full[live] - approx[live]) / np.maximum(np.abs(approx[live]), 1e-300)
    big = approx[live] > 0
    assert np.all(rel[big] <= 1e-4)
    assert np.all(full[live][~big] <= 1e-4 * s.x**2 * np.max(ml))


@pytest.mark.parametrize("lam", [0.0, 0.3, 1.5, 3.0])
@pytest.mark.parametrize("t", [0.4, 1.0, 2.0])
def test_gibbs_fixed_point(lam, t):
    r = build_rate_matrices(HybridSystem(0.8, 1.0, lam, 30), bath(t, "a"), bath(t, "sigma"))
    e = r.basis.energies
    p = np.exp(-(e - e.min()) / t)
    p /= p.sum()
    w = r.total
    assert np.max(np.abs(w @ p)) / np.max(np.abs(np.diag(w))) < 1e-10


def test_two_qubit_structure():
    s = TwoQubitSystem(1.0, 1.0, 0.1, 0.4, 1.0, 12)
    r = build_two_qubit_rate_matrices(s, bath(1.2, "a"), bath(0.5, "sigma_L"), bath(0.2, "sigma_R"))
    lv = 13
    blocks = lambda w: {(a, b) for a in range(4) for b in range(4)  # noqa: E731
                        if a != b and np.any(w[a * lv:(a + 1) * lv, b * lv:(b + 1) * lv])}
    assert blocks(r.per_bath["sigma_L"]) == {(0, 2), (2, 0), (1, 3), (3, 1)}
    assert blocks(r.per_bath["sigma_R"]) == {(0, 1), (1, 0), (2, 3), (3, 2)}
    for w in r.per_bath.values():
        _check_generator(w)
    d = displacement_table(12, 0.8)
    # right-qubit flips from branch 2 into branch 1 weighted by D(2 lam_R)^2
    i = 1 * lv + 3
    j = 0 * lv + 3
    gap = r.gap_table[j, i]
    assert gap == pytest.approx(1.0 - (0.5**2 - 0.3**2))
    expected = (0.005 * gap * math.exp(-gap / 10)) * bose_occupation(gap, 0.2) * d[3, 3] ** 2
    assert r.per_bath["sigma_R"][j, i] == pytest.approx(expected, rel=1e-12)


def test_two_qubit_zero_coupling_blocks_diagonal():
    s = TwoQubitSystem(1.0, 1.3, 0.0, 0.0, 1.0, 6)
    r = build_two_qubit_rate_matrices(s, bath(1.2, "a"), bath(0.5, "sigma_L"), bath(0.2, "sigma_R"))
    lv = 7
    for label in ("sigma_L", "sigma_R"):
        w = r.per_bath[label]
        for a in range(4):
            for b in range(4):
                if a != b:
                    blk = w[a * lv:(a + 1) * lv, b * lv:(b + 1) * lv]
                    assert np.all(blk == np.diag(np.diag(blk)))
