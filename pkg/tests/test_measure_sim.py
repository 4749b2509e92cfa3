import numpy as np
import pytest

from cvqnet import measure_sim as ms
from cvqnet import measures, tmsq
from cvqnet.gaussian import GaussianState, gain_db_to_r

W = 2 * np.pi
CH = (ms.OutputChain(6.8e6, 16.1, W * 7.23e9), ms.OutputChain(1.3e7, 15.7, W * 9.707e9))
VAC = GaussianState.vacuum(2)
TMS4 = tmsq.lossy_tmsq_state(gain_db_to_r(4), 0.62, 1.0)


def test_noiseless_chain_returns_vacuum():
    ch = (ms.OutputChain(1e6, 0.0, W * 7e9), ms.OutputChain(2e6, 0.0, W * 9e9))
    rec = ms.sample_records(VAC, ch, 100_000, 1)
    sd = np.sqrt(ms.estimator_variance(0.25 * np.eye(4), rec.N))
    assert np.all(np.abs(rec.cov() - 0.25 * np.eye(4)) <= 3 * sd + 1e-15)


def test_added_noise_level():
    ch = (ms.OutputChain(2.7e6, 16.6, W * 7.23e9), ms.OutputChain(2.7e6, 16.6, W * 7.23e9))
    rec = ms.sample_records(VAC, ch, 100_000, 2)
    v = 0.25 * (1 + 2 * 16.6)
    assert v == pytest.approx(8.55)
    sd = np.sqrt(2 * v * v / (rec.N - 1))
    assert np.all(np.abs(np.diag(rec.cov()) - v) <= 4 * sd)


def test_same_seed_identical_and_thread_independent():
    a = ms.sample_records(TMS4, CH, 200_000, 7, threads=1).samples
    b = ms.sample_records(TMS4, CH, 200_000, 7, threads=4).samples
    c = ms.sample_records(TMS4, CH, 200_000, 8).samples
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_labels_give_independent_streams():
    a = ms.sample_records(VAC, CH, 1000, 7, "on").samples
    b = ms.sample_records(VAC, CH, 1000, 7, "off").samples
    assert abs(np.corrcoef(a[:, 0], b[:, 0])[0, 1]) < 0.15


def test_record_validation():
    with pytest.raises(ValueError):
        ms.QuadratureRecord(np.zeros((1, 4)), 0, CH)
    with pytest.raises(ValueError):
        ms.QuadratureRecord(np.array([[np.nan] * 4] * 3), 0, CH)
    with pytest.raises(ValueError):
        ms.sample_records(VAC, CH, 1, 0)
    with pytest.raises(ValueError):
        ms.OutputChain(-1, 1, 1)


def test_reconstruct_identical_records():
    rec = ms.sample_records(TMS4, CH, 5000, 3)
    est = ms.reconstruct_cov(rec, rec)
    assert np.allclose(est.V_hat, 0.25 * np.eye(4))
    other = ms.sample_records(TMS4, CH, 4000, 3)
    with pytest.raises(ValueError):
        ms.reconstruct_cov(rec, other)


def test_variance_formula_hand_value():
    var = ms.estimator_variance(0.25 * np.eye(2), 100_000)
    assert np.sqrt(var[0, 0]) == pytest.approx(np.sqrt(2 * 0.0625 / 99999), rel=1e-12)
    assert np.sqrt(var[0, 0]) == pytest.approx(1.118e-3, rel=1e-3)


def test_reconstruct_recovers_tmsq():
    on = ms.sample_records(TMS4, CH, 100_000, 11, "on")
    off = ms.sample_records(VAC, CH, 100_000, 11, "off")
    est = ms.reconstruct_cov(on, off)
    z = np.abs(est.V_hat - TMS4.cov) / np.sqrt(est.stat_var)
    assert z.max() < 4.5
    assert np.all(est.worst_case_lo <= est.V_hat) and np.all(est.V_hat <= est.worst_case_hi)


def test_en_of_reconstruction_within_3_sigma():
    # at N = 1e5 the chain noise (~16 photons) swamps nu_- of a 4 dB state, so
    # the E_N check runs at N = 1e6 on the lossy state
    en = []
    for seed in range(20):
        on = ms.sample_records(TMS4, CH, 1_000_000, seed, "on", threads=4)
        off = ms.sample_records(VAC, CH, 1_000_000, seed, "off", threads=4)
        en.append(measures.log_negativity(ms.reconstruct_cov(on, off).V_hat))
    en = np.array(en)
    true = measures.log_negativity(TMS4.cov)
    assert np.all(np.abs(en - true) <= 3 * en.std(ddof=1))


def test_pure_state_reconstruction_often_unphysical_at_1e5():
    state = GaussianState(np.zeros(4), tmsq.ideal_tmsq_cov(gain_db_to_r(4)))
    bad = 0
    for seed in range(20):
        on = ms.sample_records(state, CH, 100_000, seed, "on")
        off = ms.sample_records(VAC, CH, 100_000, seed, "off")
        try:
            measures.nu_minus(ms.reconstruct_cov(on, off).V_hat)
        except measures.InvalidCovariance:
            bad += 1
    assert bad >= 5


def test_histogram_normalization_and_ridge():
    on = ms.sample_records(TMS4, CH, 100_000, 5, "on")
    off = ms.sample_records(VAC, CH, 100_000, 5, "off")
    h = ms.histogram2d(off, (0, 1), bins=32)
    assert h.density.sum() * h.bin_area == pytest.approx(1, abs=0.01)
    d = ms.histogram_difference(on, off, (0, 2), bins=32)
    assert abs(d.density.sum() * d.bin_area) < 0.01
    n = d.density.shape[0]
    diag = np.mean([d.density[i, i] for i in range(n)])
    anti = np.mean([d.density[i, n - 1 - i] for i in range(n)])
    assert diag > anti
    with pytest.raises(ValueError):
        ms.histogram2d(off, bins=4)
    with pytest.raises(ValueError):
        ms.histogram2d(off, range=((1, 0), (0, 1)))


def test_histogram_difference_sums_to_zero_inside_range():
    on = ms.sample_records(TMS4, CH, 20_000, 5, "on")
    off = ms.sample_records(VAC, CH, 20_000, 5, "off")
    rng = ((-1e3, 1e3), (-1e3, 1e3))
    d = ms.histogram_difference(on, off, (0, 2), bins=16, range=rng)
    assert abs(d.density.sum() * d.bin_area) < 1e-6


def test_worst_case_collapse_and_monotone_widening():
    V = TMS4.cov
    est = ms.CovEstimate(V, np.zeros((4, 4)), V, V, 10)
    rep = ms.worst_case_report(est, 0.0)
    lo, hi = rep.bounds["log_negativity"]
    assert lo == pytest.approx(rep.log_negativity) and hi == pytest.approx(rep.log_negativity)
    on = ms.sample_records(TMS4, CH, 1_000_000, 3, "on", threads=4)
    off = ms.sample_records(VAC, CH, 1_000_000, 3, "off", threads=4)
    est = ms.reconstruct_cov(on, off)
    widths = []
    for f in (0.0, 0.05, 0.1, 0.2):
        rep = ms.worst_case_report(est, f, require_symmetric_eof=False)
        lo, hi = rep.bounds["log_negativity"]
        assert lo <= rep.log_negativity <= hi
        widths.append(hi - lo)
    assert np.all(np.isfinite(widths)) and all(np.diff(widths) > 0)
    with pytest.raises(ValueError):
        ms.worst_case_report(est, 0.7)


def test_worst_case_unbounded_when_crossing_boundary():
    V = TMS4.cov
    est = ms.CovEstimate(V, np.full((4, 4), 0.2), V - 0.5, V + 0.5, 1000)
    rep = ms.worst_case_report(est, 0.1, require_symmetric_eof=False)
    assert rep.bounds["log_negativity"][1] == np.inf
    assert rep.bounds["nu_minus"][0] == 0.0
    assert any("physical boundary" in d for d in rep.diagnostics)


def test_record_roundtrip(tmp_path):
    rec = ms.sample_records(TMS4, CH, 100, 9)
    p = ms.write_record(rec, tmp_path / "rec.csv")
    back = ms.read_record(p)
    assert np.array_equal(back.samples, rec.samples)
    assert back.seed == 9 and back.chains == rec.chains


def test_calibration_error_injection_scales_excess():
    g_wrong = [c.G_sys * 1.1 for c in CH]
    V = {}
    for key, g in (("true", None), ("wrong", g_wrong)):
        on = ms.sample_records(TMS4, CH, 50_000, 4, "on", assumed_G_sys=g)
        off = ms.sample_records(VAC, CH, 50_000, 4, "off", assumed_G_sys=g)
        V[key] = ms.reconstruct_cov(on, off).V_hat
    I4 = 0.25 * np.eye(4)
    assert np.allclose(V["wrong"] - I4, (V["true"] - I4) / 1.1, atol=1e-12)
