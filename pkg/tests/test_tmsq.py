import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvqnet import measures as m
from cvqnet import tmsq
from cvqnet.gaussian import GaussianState, apply, gain_db_to_r, two_mode_squeeze

LN2 = np.log(2)


def test_ideal_cov_values():
    assert np.allclose(tmsq.ideal_tmsq_cov(0), 0.25 * np.eye(4))
    V = tmsq.ideal_tmsq_cov(LN2)
    assert V[0, 0] == pytest.approx(17 / 32) and V[0, 2] == pytest.approx(15 / 32)
    assert V[1, 3] == pytest.approx(-15 / 32)


@given(st.floats(0, 2.5), st.floats(-np.pi, np.pi))
def test_ideal_cov_equals_core_pipeline(r, phi):
    V = apply(two_mode_squeeze(r, phi), GaussianState.vacuum(2)).cov
    assert np.allclose(V, tmsq.ideal_tmsq_cov(r, phi), atol=1e-12 * np.cosh(2 * r))


def test_lossy_cov_limits():
    assert np.allclose(tmsq.lossy_tmsq_cov(0.7, 1, 1), tmsq.ideal_tmsq_cov(0.7))
    r, a = 0.9, 0.3
    V = tmsq.lossy_tmsq_cov(r, 1 - a, 1 - a)
    assert 4 * m.nu_minus(V) == pytest.approx((1 - a) * np.exp(-2 * r) + a)
    assert 4 * m.nu_minus(V) < 1
    with pytest.raises(ValueError):
        tmsq.lossy_tmsq_cov(0.5, 1.1, 1)


@given(st.floats(0, 2), st.floats(0, 1), st.floats(0, 1))
def test_lossy_cov_matches_pipeline(r, a, b):
    V = tmsq.lossy_tmsq_state(r, a, b).cov
    assert np.abs(V - tmsq.lossy_tmsq_cov(r, a, b)).max() <= 1e-10


def test_phase_sweep_values():
    vm, vp = tmsq.epr_variance_vs_phase(0.0, 0.62, 1.0, np.linspace(0, 6, 7))
    assert np.allclose(vm, 0.5) and np.allclose(vp, 0.5)
    vm, _ = tmsq.epr_variance_vs_phase(LN2, 1, 1, 0.4, phi_p=0.4)
    assert vm == pytest.approx(1 / 8)
    phis = np.linspace(0, 2 * np.pi, 361)
    r = gain_db_to_r(4)
    vm, _ = tmsq.epr_variance_vs_phase(r, 0.62, 1.0, phis)
    assert vm.min() == pytest.approx(tmsq.asy_loss_xm(r, 0.62, 1.0))
    # model squeezing ~4.2 dB below vacuum; the measured 9.2 dB is not reached by this fit
    assert 10 * np.log10(vm.min() / 0.5) == pytest.approx(-4.198, abs=1e-3)


def test_symmetric_forms_reduce():
    r, ab = 0.8, 0.7
    assert tmsq.asy_loss_xm(r, ab, ab) == pytest.approx(0.5 * (1 - ab + ab * np.exp(-2 * r)))


@pytest.mark.parametrize("r", [2.0, 2.5, 3.0])
@pytest.mark.parametrize("a,b", [(0.1, 0.2), (0.2, 0.1), (0.3, 0.3), (0.05, 0.3), (0.25, 0.35)])
def test_large_r_en_approximation_within_5pct(r, a, b):
    V = tmsq.lossy_tmsq_cov(r, 1 - a, 1 - b)
    assert tmsq.en_asym_large_r(r, a, b) == pytest.approx(m.log_negativity(V), rel=0.05)


@pytest.mark.parametrize("r", [2.0, 3.0])
@pytest.mark.parametrize("a,b", [(0.1, 0.2), (0.3, 0.3), (0.25, 0.35)])
def test_large_r_purity_approximation_within_5pct(r, a, b):
    V = tmsq.lossy_tmsq_cov(r, 1 - a, 1 - b)
    assert tmsq.mu_asym_large_r(r, a, b) == pytest.approx(m.purity(V), rel=0.05)


def test_large_r_purity_approximation_degrades_with_asymmetry():
    V = tmsq.lossy_tmsq_cov(3.0, 0.95, 0.7)
    err = abs(tmsq.mu_asym_large_r(3.0, 0.05, 0.3) / m.purity(V) - 1)
    assert 0.05 < err < 0.1


def test_dynamical_bandwidth():
    assert tmsq.dynamical_bandwidth(5e7, 5e7, 1) == pytest.approx(5e7)
    g0 = 2 * 103 * 78 / 181
    assert g0 == pytest.approx(88.8, abs=0.05)
    G = (g0 / 56) ** 2
    assert 10 * np.log10(G) == pytest.approx(4.0, abs=0.05)
    assert tmsq.JmConfig().bandwidth_hz() == pytest.approx(56e6, rel=1e-3)
    with pytest.raises(ValueError):
        tmsq.dynamical_bandwidth(1, 1, 0.5)


def test_eraser_limit():
    q = ([1.0], [2.0], [3.0], [4.0])
    assert tmsq.eraser_referred_quadratures(1.0, q) == (pytest.approx([1.0]), pytest.approx([2.0]))
    i, _ = tmsq.eraser_referred_quadratures(10 ** 1.5, ([1.0], [0.0], [1.0], [0.0]))
    assert i[0] == pytest.approx(1.9841, abs=1e-4)
    i, qq = tmsq.eraser_referred_quadratures(np.inf, q)
    assert i[0] == 4 and qq[0] == -2


def test_gain_sweep_fig1_shape():
    cfg = tmsq.JmConfig()
    res = tmsq.gain_sweep(cfg, np.linspace(0, 8, 17), require_symmetric_eof=False)
    en = [rep.log_negativity for _, _, rep in res]
    mu = [rep.purity for _, _, rep in res]
    assert en[0] == 0 and all(np.diff(en) > 0)
    assert mu[0] == pytest.approx(1) and all(np.diff(mu) < 0)
    assert res[8][0] == 4.0 and res[8][1] == pytest.approx(56e6, rel=1e-3)


def test_config_validation():
    with pytest.raises(ValueError):
        tmsq.JmConfig(f_a=10e9)
    with pytest.raises(ValueError):
        tmsq.JmConfig(alpha_bar=1.5)
    with pytest.raises(ValueError):
        tmsq.JmConfig(gain_db=-1)
