"""Output-chain calibration: noise models versus temperature and mixer gain,
SNR improvement, a small Levenberg-Marquardt fitter for (G_sys, N_sys) and
intermediate-loss estimation from two mixers in series."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.constants import hbar, k as k_B

from .io import read_csv, sidecar_path

SWEEP_KINDS = ("temperature_K", "jm_gain_linear")
UNITS = ("W", "photons")


class FitError(RuntimeError):
    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


def _occupation_half_coth(T, omega):
    """1/2 coth(hbar w / 2 k T), with the T -> 0 limit 1/2."""
    T = np.asarray(T, dtype=float)
    out = np.full(T.shape, 0.5)
    pos = T > 0
    x = hbar * omega / (2 * k_B * T[pos])
    out[pos] = 0.5 / np.tanh(x)
    return out


def photon_scale(G_sys, omega, BW):
    """P_0 = G_sys BW hbar omega (W per photon)."""
    return G_sys * BW * hbar * omega


def noise_model_vs_T(T, G_sys, N_sys, omega, BW):
    if np.any(np.asarray(T) < 0):
        raise ValueError("temperature must be >= 0")
    return photon_scale(G_sys, omega, BW) * (_occupation_half_coth(T, omega) + N_sys)


def noise_model_vs_G(G_J, G_sys, N_sys, omega, BW):
    G_J = np.asarray(G_J, dtype=float)
    if np.any(G_J < 1):
        raise ValueError("G_J must be >= 1")
    return photon_scale(G_sys, omega, BW) * (G_J * 0.5 + (G_J - 1) * 0.5 + N_sys)


def system_temperature(N_sys, omega):
    return N_sys * hbar * omega / k_B


def snr_improvement(G_J, T_sys, omega):
    """G_J / G_N with G_N = (T_sys + G_J T_Q + (G_J - 1) T_Q) / (T_sys + T_Q), T_Q = hbar w / 2k."""
    G_J = np.asarray(G_J, dtype=float)
    if np.any(G_J < 1):
        raise ValueError("G_J must be >= 1")
    tq = hbar * omega / (2 * k_B)
    g_n = (T_sys + G_J * tq + (G_J - 1) * tq) / (T_sys + tq)
    return G_J / g_n


@dataclass(frozen=True)
class NoiseSweep:
    kind: str
    x: np.ndarray
    values: np.ndarray
    omega: float
    BW: float
    unit: str = "W"

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"sweep kind must be one of {SWEEP_KINDS}")
        if self.unit not in UNITS:
            raise ValueError(f"unit must be one of {UNITS}")
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.shape != v.shape or x.ndim != 1:
            raise ValueError("x and values must be 1-D of equal length")
        if x.size < 4:
            raise ValueError("need at least 4 points for a 2-parameter fit")
        if np.ptp(x) == 0:
            raise ValueError("degenerate design: all x equal")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        if np.any(v <= 0):
            raise ValueError("measured values must be > 0")
        if self.omega <= 0 or self.BW <= 0:
            raise ValueError("omega and BW must be > 0")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)

    def model(self, G_sys, N_sys):
        if self.unit == "photons":
            # values normalized by BW hbar omega, G_sys is the bare scale
            scale = 1.0 / (self.BW * hbar * self.omega)
        else:
            scale = 1.0
        if self.kind == "temperature_K":
            return scale * noise_model_vs_T(self.x, G_sys, N_sys, self.omega, self.BW)
        return scale * noise_model_vs_G(self.x, G_sys, N_sys, self.omega, self.BW)

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        _, data = read_csv(path)
        meta = json.loads(sidecar_path(path).read_text())
        return cls(meta["kind"], data[:, 0], data[:, 1], float(meta["omega_hz"]) * 2 * np.pi
                   if "omega_hz" in meta else float(meta["omega"]),
                   float(meta["bw_hz"]), meta.get("unit", "W"))


@dataclass
class FitResult:
    G_sys: float
    N_sys: float
    cov: np.ndarray
    residual_norm: float
    T_sys: float
    iterations: int
    converged: bool = True
    notes: list = field(default_factory=list)

    def to_json(self):
        return {"G_sys": self.G_sys, "N_sys": self.N_sys, "T_sys": self.T_sys,
                "cov": np.asarray(self.cov).tolist(), "residual_norm": self.residual_norm,
                "iterations": self.iterations, "converged": self.converged,
                "notes": list(self.notes)}


def _unpack(theta):
    return float(np.exp(theta[0])), float(np.exp(theta[1]) - 0.5)


def _residuals(sweep, theta):
    G, N = _unpack(theta)
    return np.log(sweep.values) - np.log(sweep.model(G, N))


def _jacobian(sweep, theta, rel_step=1e-6):
    J = np.empty((sweep.x.size, theta.size))
    for k in range(theta.size):
        h = rel_step * max(1.0, abs(theta[k]))
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        J[:, k] = (_residuals(sweep, tp) - _residuals(sweep, tm)) / (2 * h)
    return J


MAX_JAC_COND = 1e10


def _initial_guess(sweep):
    """Linear fit of the affine photon model values = a (u + N_sys)."""
    u = sweep.x - 0.5 if sweep.kind == "jm_gain_linear" else \
        _occupation_half_coth(sweep.x, sweep.omega)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", np.exceptions.RankWarning)
        slope, icpt = np.polyfit(u, sweep.values, 1)
    if slope <= 0:
        slope, icpt = sweep.values.mean(), 0.0
    per_photon = sweep.BW * hbar * sweep.omega if sweep.unit == "W" else 1.0
    N0 = max(icpt / slope, 0.01)
    return np.array([np.log(slope / per_photon), np.log(0.5 + N0)])


def fit_chain(sweep: NoiseSweep, max_iter=200, tol=1e-12, theta0=None) -> FitResult:
    """Levenberg-Marquardt on (log G_sys, log(1/2 + N_sys)) with log-power residuals."""
    theta = _initial_guess(sweep) if theta0 is None else np.asarray(theta0, dtype=float)
    lam = 1e-3
    r = _residuals(sweep, theta)
    cost = float(r @ r)
    for it in range(1, max_iter + 1):
        J = _jacobian(sweep, theta)
        g = J.T @ r
        H = J.T @ J
        improved = False
        for _ in range(50):
            step = np.linalg.solve(H + lam * np.diag(np.diag(H) + 1e-30), -g)
            cand = theta + step
            rc = _residuals(sweep, cand)
            cc = float(rc @ rc)
            if np.isfinite(cc) and cc <= cost:
                improved = True
                break
            lam *= 10
        if not improved:
            # no descent direction left: at a minimum within round-off
            break
        done = abs(cost - cc) <= tol * max(cost, 1e-300) or np.max(np.abs(step)) < 1e-12
        theta, r, cost = cand, rc, cc
        lam = max(lam / 10, 1e-12)
        if done:
            break
    else:
        raise FitError(f"fit did not converge in {max_iter} iterations", last=_unpack(theta))
    G, N = _unpack(theta)
    J = _jacobian(sweep, theta)
    cond = np.linalg.cond(J)
    if not cond < MAX_JAC_COND:
        # e.g. a temperature sweep far below hbar omega / k_B fixes only G (N + 1/2)
        raise FitError(f"G_sys and N_sys not separately identifiable (Jacobian condition "
                       f"number {cond:.2e})", last=(G, N))
    dof = max(sweep.x.size - 2, 1)
    s2 = cost / dof
    try:
        cov_t = s2 * np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular Jacobian at the solution", last=(G, N)) from exc
    # delta method to (G_sys, N_sys)
    D = np.diag([G, N + 0.5])
    cov = D @ cov_t @ D
    notes = []
    if N < 0:
        notes.append("fitted N_sys < 0; chain noise below the quantum limit is unphysical")
    return FitResult(G, N, cov, float(np.sqrt(cost)), system_temperature(N, sweep.omega), it,
                     True, notes)


def intermediate_loss_from_series(G_sys_top, G_sys_bottom, N_sys_top=None, coupler_db=0.0,
                                  tolerance=1.05):
    """eta = G_bottom / G_top; loss in dB after removing a known coupler attenuation.

    Returns (eta, loss_db, corrected N_sys or None).
    """
    if G_sys_top <= 0 or G_sys_bottom <= 0:
        raise ValueError("gains must be > 0")
    eta = G_sys_bottom / G_sys_top
    if eta > tolerance:
        raise ValueError(f"inconsistent calibration: bottom/top gain ratio {eta:.4f} > {tolerance}")
    eta = eta * 10 ** (coupler_db / 10)
    if eta > 1:
        warnings.warn(f"transmission {eta:.4f} > 1 clamped to 1", stacklevel=2)
        eta = 1.0
    loss_db = 10 * np.log10(eta)
    n_corr = None
    if N_sys_top is not None:
        n_corr = N_sys_top / eta + (1 - eta) / (2 * eta)
    return float(eta), float(loss_db), n_corr


def synthetic_sweep(kind, x, G_sys, N_sys, omega, BW, noise=0.0, rng=None, unit="W"):
    """Model sweep with optional multiplicative Gaussian noise (fractional sd)."""
    sw = NoiseSweep(kind, np.asarray(x, float), np.ones(len(x)), omega, BW, unit)
    vals = sw.model(G_sys, N_sys)
    if noise:
        rng = np.random.default_rng(rng)
        vals = vals * (1 + noise * rng.standard_normal(vals.shape))
        vals = np.clip(vals, 1e-300, None)
    return NoiseSweep(kind, sw.x, vals, omega, BW, unit)
