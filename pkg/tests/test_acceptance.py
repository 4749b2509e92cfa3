"""Acceptance criteria, one PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -v`` (lines go straight to the
terminal) or ``python tests/test_acceptance.py`` for the bare summary.
Two criteria are known to miss their stated tolerance; they are marked
xfail and still print FAIL with the measured numbers.
"""
import time

import numpy as np
import pytest

from cvqnet import calibrate, entswap, measure_sim, measures, teleport, tmsq
from cvqnet.gaussian import db_to_ratio, gain_db_to_r
from cvqnet.teleport import TeleportConfig


def _line(n, ok, detail):
    return f"[acceptance {n:>2}] {'PASS' if ok else 'FAIL'}: {detail}"


# ---- criterion bodies: return (ok, detail) --------------------------------

def crit_1(beta_c=1e-3):
    t0 = time.perf_counter()
    errs = []
    for r in np.arange(0, 2.0001, 0.25):
        cfg = TeleportConfig.from_losses(r, beta_c=beta_c)
        errs.append(abs(teleport.teleport_fidelity(cfg) - 1 / (np.exp(-2 * r) + 1)))
    dt = time.perf_counter() - t0
    err = max(errs)
    return err <= 1e-9 and dt < 1, f"lossless F vs 1/(exp(-2r)+1), beta_c={beta_c:g}: " \
                                   f"max |err| = {err:.2e} (tol 1e-9), {dt:.3f} s"


def crit_2():
    cfg = TeleportConfig.from_losses(0.0, beta_c=1e-12)
    F = teleport.teleport_fidelity(cfg)
    V = teleport.teleported_state(cfg).cov
    noise = V[0, 0] + V[1, 1]
    cf = teleport.closed_form_fidelities(cfg)
    ok = abs(F - 0.5) <= 1e-9 and abs(noise - 1.5) <= 1e-9 and abs(cf["F_c_lossless"] - 0.5) < 1e-12
    return ok, f"r_E=0, k=1: F = {F:.12f}, Bob noise = {noise:.12f}"


FIG2 = dict(alpha_bar=0.62, beta_bar=0.93, beta_bar_f=0.4, beta_c=0.1)


def crit_3a():
    t0 = time.perf_counter()
    g = np.linspace(0, 12, 121)
    F = teleport.fidelity_vs_gain(TeleportConfig.from_losses(0.0, **FIG2), g)
    dt = time.perf_counter() - t0
    ok = 0.70 <= F.max() <= 0.76 and dt < 5
    return ok, f"lossy F_q max = {F.max():.4f} at G_E = {g[F.argmax()]:.1f} dB " \
               f"(band [0.70, 0.76]), {dt:.2f} s"


def crit_3b():
    r = gain_db_to_r(6.0)
    F_pipe = teleport.teleport_fidelity(TeleportConfig.from_losses(r, beta_c=0.1))
    F_cf = 1 / (np.exp(-2 * r) + 1)
    return F_pipe > 0.95, f"lossless F_q at G_E = 6 dB: pipeline {F_pipe:.4f}, " \
                          f"closed form {F_cf:.4f} (target > 0.95)"


def crit_4():
    errs = {"V": 0.0, "Xm": 0.0, "Xp": 0.0, "EN": 0.0, "mu": 0.0}
    for r in np.linspace(0, 2, 9):
        for ab in (1.0, 0.9, 0.62, 0.3):
            for bb in (1.0, 0.93, 0.5):
                V = tmsq.lossy_tmsq_state(r, ab, bb).cov
                errs["V"] = max(errs["V"], np.abs(V - tmsq.lossy_tmsq_cov(r, ab, bb)).max())
                dm, dp = measures.duan_epr(V)
                errs["Xm"] = max(errs["Xm"], abs(dm / 2 - tmsq.asy_loss_xm(r, ab, bb)))
                errs["Xp"] = max(errs["Xp"], abs(dp / 2 - tmsq.asy_loss_xp(r, ab, bb)))
            Vs = tmsq.lossy_tmsq_state(r, ab, ab).cov
            errs["EN"] = max(errs["EN"], abs(measures.log_negativity(Vs)
                                             - max(0.0, tmsq.en_sym_loss(r, 1 - ab))))
            errs["mu"] = max(errs["mu"], abs(measures.purity(Vs) - tmsq.mu_sym_loss(r, 1 - ab)))
    ok = max(errs.values()) <= 1e-10
    return ok, "closed form vs pipeline max |err|: " + ", ".join(
        f"{k} {v:.1e}" for k, v in errs.items())


def crit_5():
    err = 0.0
    losses = [dict(alpha_bar_1=1, alpha_bar_2=1, beta_bar_1=1, beta_bar_2=1, alpha_bar_f=1),
              dict(alpha_bar_1=0.9, alpha_bar_2=0.72, beta_bar_1=0.62, beta_bar_2=0.97,
                   alpha_bar_f=0.85),
              dict(alpha_bar_1=0.5, alpha_bar_2=0.8, beta_bar_1=0.7, beta_bar_2=0.6,
                   alpha_bar_f=0.3)]
    for r1 in (0.0, 0.4, 1.0):
        for r2 in (0.0, 0.5, 1.2):
            for ls in losses:
                cfg = entswap.SwapConfig(r_1=r1, r_2=r2, beta_c=0.1, **ls)
                V_pipe = entswap.swap_state(cfg).cov
                err = max(err, np.abs(V_pipe - entswap.swap_covariance_closed(cfg)).max())
    return err <= 1e-9, f"swap closed form vs gaussian-core pipeline, 27 points: " \
                        f"max |err| = {err:.1e} (tol 1e-9)"


def crit_6():
    err, en0 = 0.0, 0.0
    for r1 in np.linspace(0, 1.5, 7):
        for r2 in np.linspace(0, 1.5, 7):
            cfg = entswap.SwapConfig.lossless(r1, r2)
            dm = measures.duan_epr(entswap.swap_covariance(cfg))[0]
            err = max(err, abs(dm - (np.exp(-2 * r1) + np.exp(-2 * r2))))
            if r1 == 0:
                en0 = max(en0, measures.log_negativity(entswap.swap_covariance(cfg)))
    ok = err <= 1e-12 and en0 <= 1e-12
    return ok, f"lossless Delta- vs exp(-2r1)+exp(-2r2): max |err| = {err:.1e}; " \
               f"max E_N at r1=0: {en0:.1e}"


FIG5 = dict(alpha_bar_1=0.9, alpha_bar_2=0.72, beta_bar_1=0.62, beta_bar_2=0.97,
            alpha_bar_f=0.85, beta_c=0.1)


def crit_7():
    cfg = entswap.SwapConfig(r_1=gain_db_to_r(1.4), **FIG5)
    g = np.linspace(0, 6, 121)
    reps = entswap.swap_report_vs_gain(cfg, g, require_symmetric_eof=False)
    dm = np.array([r.delta_epr_minus_db for r in reps])
    en = np.array([r.log_negativity for r in reps])
    at_25 = dm[np.argmin(np.abs(g - 2.5))]
    ok = (-2.0 <= dm.min() <= -0.8) and (-2.0 <= at_25 <= -0.8) and (0.35 <= en.max() <= 0.70)
    return ok, (f"Delta- min {dm.min():.3f} dB at G2 = {g[dm.argmin()]:.2f} dB, "
                f"Delta-(2.5 dB) = {at_25:.3f} dB (band [-2.0, -0.8]); "
                f"E_N max {en.max():.3f} (band [0.35, 0.70])")


CHAINS_4DB = (measure_sim.OutputChain(6.8e6, 16.1, 2 * np.pi * 7.23e9),
              measure_sim.OutputChain(1.3e7, 15.7, 2 * np.pi * 9.707e9))


def crit_8():
    t0 = time.perf_counter()
    on_state = tmsq.lossy_tmsq_state(gain_db_to_r(4.0), 0.62, 1.0)
    off_state = tmsq.lossy_tmsq_state(0.0)
    good = 0
    for seed in range(100):
        on = measure_sim.sample_records(on_state, CHAINS_4DB, 100_000, seed, "on")
        off = measure_sim.sample_records(off_state, CHAINS_4DB, 100_000, seed, "off")
        est = measure_sim.reconstruct_cov(on, off)
        z = np.abs(est.V_hat - on_state.cov) / np.sqrt(est.stat_var)
        good += bool(np.all(z <= 4))
    dt = time.perf_counter() - t0
    # empirical spread of the on-record covariance against the variance formula
    small = 2000
    covs, preds = [], []
    for seed in range(1000):
        rec = measure_sim.sample_records(on_state, CHAINS_4DB, small, 10_000 + seed, "var")
        S = rec.cov()
        covs.append(S)
        preds.append(measure_sim.estimator_variance(S, small))
    emp = np.var(np.array(covs), axis=0, ddof=1)
    rel = np.abs(emp / np.mean(preds, axis=0) - 1).max()
    ok = good >= 95 and rel <= 0.10 and dt < 30
    return ok, (f"{good}/100 runs with all entries within 4 sigma; variance formula max rel "
                f"dev {rel:.3f} (tol 0.10); {dt:.1f} s")


TABLE_II = [(3.5e6, 13.2, 7.23e9), (2.7e6, 16.6, 7.23e9), (4.4e5, 16.4, 7.23e9),
            (1.8e7, 13.8, 9.707e9), (1.3e7, 18.9, 9.707e9), (2.3e6, 13.9, 9.707e9)]


def crit_9():
    x = db_to_ratio(np.linspace(0, 20, 20))
    counts = []
    for G, N, f in TABLE_II:
        ok = 0
        for seed in range(100):
            sw = calibrate.synthetic_sweep("jm_gain_linear", x, G, N, 2 * np.pi * f, 1e6, 0.05,
                                           np.random.default_rng(seed))
            try:
                fit = calibrate.fit_chain(sw)
            except calibrate.FitError:
                continue
            ok += abs(fit.G_sys / G - 1) <= 0.1 and abs(fit.N_sys / N - 1) <= 0.1
        counts.append(ok)
    eta, loss_db, _ = calibrate.intermediate_loss_from_series(7.3e6, 4.5e6)
    good = min(counts) >= 95 and abs(loss_db - (-2.1)) < 0.05
    return good, (f"recovered within 10% (per chain, of 100 seeds): {counts}; "
                  f"intermediate loss {loss_db:.3f} dB (eta {eta:.3f})")


def crit_10():
    V0 = 0.25 * np.eye(4)
    rep = measures.report(V0)
    ok = rep.log_negativity == 0 and rep.eof == 0 and abs(rep.delta_epr_minus - 1) < 1e-15 \
        and abs(rep.purity - 1) < 1e-15
    mu_dev = max(abs(measures.purity(tmsq.ideal_tmsq_cov(r, p)) - 1)
                 for r in np.linspace(0, 3, 13) for p in (0, 1.0, np.pi))
    r70 = measures.ebit_rate(1.25, 56e6)
    r67 = measures.ebit_rate(0.21, 32e6)
    ok = ok and mu_dev < 1e-9 and abs(r70 - 70e6) < 1e-3 and abs(r67 - 6.72e6) < 1e-3
    return ok, (f"vacuum E_N={rep.log_negativity}, E_F={rep.eof}, Delta-={rep.delta_epr_minus}, "
                f"mu={rep.purity}; lossless TMS max |mu-1| = {mu_dev:.1e}; "
                f"ebit rates {r70 / 1e6:.1f} and {r67 / 1e6:.2f} Mebit/s")


def crit_11(tmp_root):
    from cvqnet.cli import main
    from cvqnet.scenario import list_examples
    names = list_examples()
    mism = []
    for name in names:
        for run in ("a", "b"):
            assert main(["run", name, "--out-dir", str(tmp_root / run / name)]) == 0
        fa = sorted(p.relative_to(tmp_root / "a") for p in (tmp_root / "a" / name).rglob("*"))
        fb = sorted(p.relative_to(tmp_root / "b") for p in (tmp_root / "b" / name).rglob("*"))
        if fa != fb or any((tmp_root / "a" / p).read_bytes() != (tmp_root / "b" / p).read_bytes()
                           for p in fa):
            mism.append(name)
    return not mism, f"{len(names)} example scenarios run twice; mismatches: {mism or 'none'}"


# ---- pytest wrappers ------------------------------------------------------

def _check(capsys, n, res, must=True):
    ok, detail = res
    with capsys.disabled():
        print("\n" + _line(n, ok, detail))
    if must:
        assert ok, detail
    return ok


@pytest.mark.xfail(strict=True, reason="finite beta_c=1e-3 leaves a ~2.5e-4 deviation; "
                                       "see test_teleport for the beta_c -> 0 check")
def test_criterion_01_lossless_fidelity_law(capsys):
    _check(capsys, 1, crit_1())


def test_criterion_02_classical_bound(capsys):
    _check(capsys, 2, crit_2())


def test_criterion_03a_lossy_fidelity_max(capsys):
    _check(capsys, 3, crit_3a())


@pytest.mark.xfail(strict=True, reason="lossless model gives ~0.94 at 6 dB, below 0.95")
def test_criterion_03b_lossless_fidelity_at_6db(capsys):
    _check(capsys, 3, crit_3b())


def test_criterion_04_tmsq_closed_forms(capsys):
    _check(capsys, 4, crit_4())


def test_criterion_05_swap_oracle(capsys):
    _check(capsys, 5, crit_5())


def test_criterion_06_swap_lossless_duan(capsys):
    _check(capsys, 6, crit_6())


def test_criterion_07_swap_band(capsys):
    _check(capsys, 7, crit_7())


def test_criterion_08_monte_carlo(capsys):
    _check(capsys, 8, crit_8())


def test_criterion_09_calibration(capsys):
    _check(capsys, 9, crit_9())


def test_criterion_10_measure_identities(capsys):
    _check(capsys, 10, crit_10())


def test_criterion_11_determinism(capsys, tmp_path):
    _check(capsys, 11, crit_11(tmp_path))


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for n, fn in [(1, crit_1), (2, crit_2), (3, crit_3a), (3, crit_3b), (4, crit_4),
                  (5, crit_5), (6, crit_6), (7, crit_7), (8, crit_8), (9, crit_9),
                  (10, crit_10)]:
        print(_line(n, *fn()))
    with tempfile.TemporaryDirectory() as d:
        print(_line(11, *crit_11(Path(d))))
