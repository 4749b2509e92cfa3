"""Command-line front end: ``cvqnet run|validate|list-examples``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
Environment overrides: CVQNET_SEED, CVQNET_OUT_DIR, CVQNET_THREADS.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, calibrate, entswap, measure_sim, measures, teleport, tmsq
from .gaussian import db_to_ratio, gain_db_to_r
from .io import write_csv, write_json, sidecar_path
from .scenario import ConfigError, Scenario, list_examples, load

ENV_PREFIX = "CVQNET_"


class NumericalFailure(RuntimeError):
    pass


def _numeric(op, params, fn, *a, **kw):
    """Run fn and turn numerical exceptions into NumericalFailure naming op and params."""
    try:
        with np.errstate(divide="raise", invalid="raise"):
            return fn(*a, **kw)
    except (measures.InvalidCovariance, calibrate.FitError, np.linalg.LinAlgError,
            FloatingPointError, ZeroDivisionError) as exc:
        ps = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                       for k, v in params.items())
        raise NumericalFailure(f"{op} failed ({ps}): {exc}") from exc


def _emit(out_dir, fname, header, rows, sc: Scenario, extra=None):
    p = write_csv(Path(out_dir) / fname, header, rows)
    meta = {"scenario": sc.resolved(), "columns": list(header), "version": __version__}
    if extra:
        meta.update(extra)
    write_json(sidecar_path(p), meta)
    return p


def _rad(deg):
    return np.deg2rad(deg)


# ---- tmsq -----------------------------------------------------------------

def _jm(p):
    return tmsq.JmConfig(f_a=p["f_a_hz"], f_b=p["f_b_hz"], gain_db=p["gain_db"],
                         pump_phase=_rad(p["pump_phase_deg"]), gamma_a=p["gamma_a_hz"],
                         gamma_b=p["gamma_b_hz"], alpha_bar=p["alpha_bar_linear"],
                         beta_bar=p["beta_bar_linear"])


def run_tmsq(sc: Scenario, out_dir, threads):
    p = sc.params
    series = sc.series_values if sc.series_key else [None]
    grid = sc.sweep if sc.sweep is not None else np.array([p["gain_db"]])
    var = sc.sweep_variable or "gain_db"
    rows = []
    for sv in series:
        pp = dict(p, **({sc.series_key: sv} if sv is not None else {}))
        cfg = _jm(pp)
        if var == "gain_db":
            res = _numeric("tmsq.gain_sweep", {"alpha_bar": cfg.alpha_bar, "beta_bar": cfg.beta_bar},
                           tmsq.gain_sweep, cfg, grid, pp["eof_require_symmetric"])
            for g, bw, rep in res:
                row = [g, rep.log_negativity, rep.eof, rep.purity, rep.delta_epr_minus_db,
                       rep.delta_epr_plus_db, rep.delta_simon, rep.nu_minus, bw,
                       rep.ebit_rate_per_s]
                rows.append(([sv] if sv is not None else []) + row)
            header = ["g_db", "e_n", "e_f", "purity", "duan_db", "duan_plus_db", "delta_s",
                      "nu_minus", "bandwidth_hz", "ebit_rate_hz"]
        else:
            vm, vp = tmsq.epr_variance_vs_phase(cfg.r, cfg.alpha_bar, cfg.beta_bar, _rad(grid),
                                                cfg.pump_phase)
            for ph, m, pl in zip(grid, np.atleast_1d(vm), np.atleast_1d(vp)):
                rows.append(([sv] if sv is not None else []) + [ph, m, pl])
            header = ["phase_deg", "var_minus", "var_plus"]
    if sc.series_key:
        header = [sc.series_key] + header
    extra = {"valid_fit_max_gain_db": tmsq.VALID_FIT_MAX_GAIN_DB}
    return [_emit(out_dir, sc.output["csv"], header, rows, sc, extra)]


# ---- teleport -------------------------------------------------------------

def _tele_cfg(p):
    kw = dict(phi_E=_rad(p["phi_e_deg"]), n_th_a=p["n_th_a"], n_th_b=p["n_th_b"],
              n_th_path3=p["n_th_path3"], n_s=p["n_s"], theta_s=_rad(p["theta_s_deg"]),
              k_definition=p["k_definition"])
    r_A = None if p["feedforward"] == "unity" else gain_db_to_r(p["gain_a_db"])
    cfg = teleport.TeleportConfig.from_losses(
        gain_db_to_r(p["gain_e_db"]), alpha_bar=p["alpha_bar_linear"],
        beta_bar=p["beta_bar_linear"], beta_bar_f=p["beta_bar_f_linear"],
        beta_c=p["beta_c_linear"], r_A=r_A, **kw)
    return cfg.with_phase_ea(_rad(p["phi_ea_deg"]))


def run_teleport(sc: Scenario, out_dir, threads):
    p = sc.params
    series = sc.series_values if sc.series_key else [None]
    var = sc.sweep_variable or "phi_ea_deg"
    grid = sc.sweep if sc.sweep is not None else np.array([p[var]])
    rows, closed = [], []
    for sv in series:
        pp = dict(p, **({sc.series_key: sv} if sv is not None else {}))
        cfg = _tele_cfg(pp)
        lead = [sv] if sv is not None else []
        prm = {"alpha_bar": cfg.alpha_bar, "beta_bar": cfg.beta_bar, "r_E": cfg.r_E,
               "r_A": cfg.r_A, "beta_c": cfg.beta_c}
        if var == "phi_ea_deg":
            phis = _rad(grid)
            noise = _numeric("teleport.bob_noise_pipeline", prm, teleport.bob_noise_pipeline,
                             cfg, phis)
            curve = teleport.bob_noise_vs_pump_phase(cfg, phis)
            fq = _numeric("teleport.fidelity_vs_phase", prm, teleport.fidelity_vs_phase,
                          cfg, phis)
            for row in zip(grid, noise, fq, curve.noise_photons):
                rows.append(lead + list(row))
            header = ["phi_ea_deg", "noise_photons", "f_q", "noise_photons_closed_form"]
        else:
            fq = _numeric("teleport.fidelity_vs_gain", prm, teleport.fidelity_vs_gain, cfg, grid)
            lossless = _tele_cfg(dict(pp, alpha_bar_linear=1.0, beta_bar_linear=1.0,
                                      beta_bar_f_linear=1.0))
            fl = _numeric("teleport.fidelity_vs_gain", dict(prm, lossless=True),
                          teleport.fidelity_vs_gain, lossless, grid)
            for row in zip(grid, fq, fl, 1 / (np.exp(-2 * gain_db_to_r(grid)) + 1)):
                rows.append(lead + list(row))
            header = ["g_e_db", "f_q", "f_q_lossless_pipeline", "f_q_lossless_closed_form"]
        cf = teleport.closed_form_fidelities(cfg)
        closed.append({"series": sv, **cf, "r_A": cfg.r_A,
                       "g_a_db": float(10 * np.log10(np.cosh(cfg.r_A) ** 2))})
    if sc.series_key:
        header = [sc.series_key] + header
    extra = {"closed_forms": closed, "warnings": list(sc.warnings)}
    return [_emit(out_dir, sc.output["csv"], header, rows, sc, extra)]


# ---- entswap --------------------------------------------------------------

def _swap_cfg(p):
    return entswap.SwapConfig(
        r_1=gain_db_to_r(p["gain_1_db"]), r_2=gain_db_to_r(p["gain_2_db"]),
        r_3=None if p["gain_3_db"] is None else gain_db_to_r(p["gain_3_db"]),
        phi_1=_rad(p["phi_1_deg"]), phi_2=_rad(p["phi_2_deg"]), phi_3=_rad(p["phi_3_deg"]),
        alpha_bar_1=p["alpha_bar_1_linear"], alpha_bar_2=p["alpha_bar_2_linear"],
        beta_bar_1=p["beta_bar_1_linear"], beta_bar_2=p["beta_bar_2_linear"],
        alpha_bar_f=p["alpha_bar_f_linear"], beta_c=p["beta_c_linear"], n_in=p["n_in"],
        theta_in=_rad(p["theta_in_deg"]))


def run_entswap(sc: Scenario, out_dir, threads):
    p = sc.params
    series = sc.series_values if sc.series_key else [None]
    var = sc.sweep_variable or "gain_2_db"
    grid = sc.sweep if sc.sweep is not None else np.array([p["gain_2_db"]])
    rows, summary = [], []
    for sv in series:
        pp = dict(p, **({sc.series_key: sv} if sv is not None else {}))
        cfg = _swap_cfg(pp)
        lead = [sv] if sv is not None else []
        prm = {"r_1": cfg.r_1, "r_2": cfg.r_2, "beta_c": cfg.beta_c}
        if var == "gain_2_db":
            reps = _numeric("entswap.swap_report_vs_gain", prm, entswap.swap_report_vs_gain,
                            cfg, grid, pp["bandwidth_hz"], pp["eof_require_symmetric"])
            for g, rep in zip(grid, reps):
                rows.append(lead + [g, rep.delta_epr_minus_db, rep.log_negativity, rep.eof,
                                    rep.purity, rep.delta_simon])
            header = ["g2_db", "delta_epr_minus_db", "e_n", "e_f", "purity", "delta_s"]
            dm = np.array([r.delta_epr_minus_db for r in reps])
            en = np.array([r.log_negativity for r in reps])
            summary.append({
                "series": sv,
                "delta_epr_minus_db_min": float(dm.min()),
                "g2_db_at_min": float(grid[int(np.argmin(dm))]),
                "e_n_max": float(en.max()),
                "g2_db_at_e_n_max": float(grid[int(np.argmax(en))]),
                "threshold_g2_db": entswap.threshold_gain_db(cfg),
                "threshold_g2_db_lossless": entswap.threshold_gain_db(cfg, lossless=True),
            })
        else:
            vm, vp = _numeric("entswap.swap_phase_sweep", prm, entswap.swap_phase_sweep,
                              cfg, _rad(grid))
            for row in zip(grid, vm, vp):
                rows.append(lead + list(row))
            header = ["phase_2_deg", "var_minus", "var_plus"]
    if sc.series_key:
        header = [sc.series_key] + header
    return [_emit(out_dir, sc.output["csv"], header, rows, sc, {"summary": summary})]


# ---- reconstruct ----------------------------------------------------------

def run_reconstruct(sc: Scenario, out_dir, threads):
    p = sc.params
    r = gain_db_to_r(p["gain_db"])
    on_state = tmsq.lossy_tmsq_state(r, p["alpha_bar_linear"], p["beta_bar_linear"])
    off_state = tmsq.lossy_tmsq_state(0.0)
    chains = [measure_sim.OutputChain(c["g_sys_linear"], c["n_sys"], 2 * np.pi * c["f_hz"],
                                      c["t_int_s"]) for c in sc.chains]
    n = p["n_samples"]
    on = measure_sim.sample_records(on_state, chains, n, sc.seed, "on", threads)
    off = measure_sim.sample_records(off_state, chains, n, sc.seed, "off", threads)
    est = measure_sim.reconstruct_cov(on, off)
    rep = _numeric("measure_sim.worst_case_report", {"gain_db": p["gain_db"], "N": n},
                   measure_sim.worst_case_report, est, p["vacuum_calibration_uncertainty"],
                   p["bandwidth_hz"], p["eof_require_symmetric"])
    truth = on_state.cov
    rows = []
    for i in range(4):
        for j in range(i, 4):
            rows.append([measure_sim.QUAD_NAMES[i], measure_sim.QUAD_NAMES[j], est.V_hat[i, j],
                         float(np.sqrt(est.stat_var[i, j])), truth[i, j]])
    header = ["row", "col", "v_hat", "stat_sd", "v_model"]
    out = [_emit(out_dir, sc.output["csv"], header, rows, sc, {"report": rep.to_json()})]
    out.append(write_json(Path(out_dir) / sc.output["json"],
                          {"scenario": sc.resolved(), "report": rep.to_json()}))
    bins = p["bins"]
    for name, h in (("hist_on_x1p1", measure_sim.histogram2d(on, (0, 1), bins)),
                    ("hist_diff_x1x2", measure_sim.histogram_difference(on, off, (0, 2), bins))):
        out.append(_emit(out_dir, f"{sc.name}_{name}.csv", ["x", "y", "density"], h.to_rows(),
                         sc, {"quad_pair": list(h.quad_pair), "bin_area": h.bin_area}))
    if p["write_records"]:
        out.append(measure_sim.write_record(on, Path(out_dir) / f"{sc.name}_records_on.csv"))
        out.append(measure_sim.write_record(off, Path(out_dir) / f"{sc.name}_records_off.csv"))
    return out


# ---- calibrate ------------------------------------------------------------

def run_calibrate(sc: Scenario, out_dir, threads):
    p = sc.params
    omega = 2 * np.pi * p["f_hz"]
    if p["input_csv"] is not None:
        path = (sc.base_dir / p["input_csv"])
        if not path.is_file():
            raise ConfigError(f"calibrate.input_csv: file {path} does not exist")
        try:
            sweep = calibrate.NoiseSweep.from_csv(path)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"calibrate.input_csv: {exc}") from exc
        source = str(p["input_csv"])
    else:
        x = sc.sweep
        if p["sweep_kind"] == "jm_gain_linear":
            x = db_to_ratio(np.asarray(x))
        x = np.sort(np.asarray(x, float))
        rng = np.random.default_rng(np.random.SeedSequence(sc.seed))
        sweep = calibrate.synthetic_sweep(p["sweep_kind"], x, p["g_sys_linear"], p["n_sys"],
                                          omega, p["bw_hz"], p["noise_fraction"], rng)
        source = "synthetic"
    fit = _numeric("calibrate.fit_chain", {"kind": sweep.kind, "points": sweep.x.size},
                   calibrate.fit_chain, sweep)
    rows = [[x, v, m] for x, v, m in zip(sweep.x, sweep.values, sweep.model(fit.G_sys, fit.N_sys))]
    header = [sweep.kind, "measured_" + sweep.unit, "model_" + sweep.unit]
    result = {"fit": fit.to_json(), "source": source,
              "truth": None if source != "synthetic" else
              {"G_sys": p["g_sys_linear"], "N_sys": p["n_sys"]}}
    if p["g_sys_top_linear"] is not None:
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            try:
                eta, loss_db, n_corr = calibrate.intermediate_loss_from_series(
                    p["g_sys_top_linear"], p["g_sys_bottom_linear"], fit.N_sys, p["coupler_db"])
            except ValueError as exc:
                raise ConfigError(f"calibrate.g_sys_bottom_linear: {exc}") from exc
        result["intermediate_loss"] = {"eta": eta, "loss_db": loss_db, "n_sys_corrected": n_corr,
                                       "warnings": [str(x.message) for x in w]}
    out = [_emit(out_dir, sc.output["csv"], header, rows, sc, result)]
    out.append(write_json(Path(out_dir) / sc.output["json"], {"scenario": sc.resolved(), **result}))
    return out


RUNNERS = {"tmsq": run_tmsq, "teleport": run_teleport, "entswap": run_entswap,
           "reconstruct": run_reconstruct, "calibrate": run_calibrate}


def _apply_overrides(sc: Scenario, seed):
    if seed is not None:
        if seed < 0:
            raise ConfigError("--seed: must be >= 0")
        sc.seed = seed
    return sc


def _env_int(name):
    v = os.environ.get(ENV_PREFIX + name)
    if v is None or v == "":
        return None
    try:
        return int(v)
    except ValueError:
        raise ConfigError(f"{ENV_PREFIX}{name}: expected an integer, got {v!r}") from None


def cmd_run(args):
    sc = load(args.scenario)
    seed = args.seed if args.seed is not None else _env_int("SEED")
    _apply_overrides(sc, seed)
    threads = args.threads if args.threads is not None else (_env_int("THREADS") or 1)
    if threads < 1:
        raise ConfigError("--threads: must be >= 1")
    out_dir = args.out_dir or os.environ.get(ENV_PREFIX + "OUT_DIR") or str(Path("out") / sc.name)
    for w in sc.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for p in RUNNERS[sc.kind](sc, out_dir, threads):
        print(p)
    return 0


def cmd_validate(args):
    sc = load(args.scenario)
    for w in sc.warnings:
        print(f"warning: {w}")
    print("ok")
    return 0


def cmd_list(args):
    for name in list_examples():
        print(name)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="cvqnet", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a scenario and write CSV/JSON outputs")
    r.add_argument("scenario", help="scenario TOML path or bundled example name")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out-dir", default=None)
    r.add_argument("--threads", type=int, default=None)
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="check a scenario without running it")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)
    ls = sub.add_parser("list-examples", help="list bundled example scenarios")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (NumericalFailure, teleport.FeedforwardError, entswap.SwapFeedforwardError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
