"""Single-mixer two-mode squeezer: ideal and lossy covariances, phase sweeps,
dynamical bandwidth and the which-path eraser limit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import measures
from .gaussian import (GaussianState, apply, compose, gain_db_to_r,
                       pure_loss_channel, two_mode_squeeze, db_to_ratio)

# Model is fitted to data only up to this gain; the measured decline above it
# is not part of the model.
VALID_FIT_MAX_GAIN_DB = 5.0


@dataclass(frozen=True)
class JmConfig:
    f_a: float = 7.231e9
    f_b: float = 9.695e9
    gain_db: float = 4.0
    pump_phase: float = 0.0
    gamma_a: float = 103e6   # linewidth / 2pi in Hz
    gamma_b: float = 78e6
    alpha_bar: float = 0.62
    beta_bar: float = 1.0

    def __post_init__(self):
        if not self.f_b > self.f_a:
            raise ValueError("expected f_b > f_a")
        if self.gamma_a <= 0 or self.gamma_b <= 0:
            raise ValueError("linewidths must be > 0")
        if self.gain_db < 0:
            raise ValueError("gain_db must be >= 0")
        for name in ("alpha_bar", "beta_bar"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @property
    def r(self):
        return gain_db_to_r(self.gain_db)

    @property
    def gain(self):
        return float(db_to_ratio(self.gain_db))

    def bandwidth_hz(self):
        return dynamical_bandwidth(self.gamma_a, self.gamma_b, self.gain)


def ideal_tmsq_cov(r, phi_p=0.0):
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    V = np.zeros((4, 4))
    V[0, 0] = V[1, 1] = V[2, 2] = V[3, 3] = c / 4
    V[0, 2] = V[2, 0] = s / 4 * np.cos(phi_p)
    V[1, 3] = V[3, 1] = -s / 4 * np.cos(phi_p)
    V[0, 3] = V[3, 0] = V[1, 2] = V[2, 1] = s / 4 * np.sin(phi_p)
    return V


def lossy_tmsq_cov(r, alpha_bar, beta_bar):
    """Closed-form standard form with asymmetric output loss (pump phase 0)."""
    for v in (alpha_bar, beta_bar):
        if not 0 <= v <= 1:
            raise ValueError(f"transmission {v} outside [0, 1]")
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    v11 = (alpha_bar * c + 1 - alpha_bar) / 4
    v33 = (beta_bar * c + 1 - beta_bar) / 4
    v13 = np.sqrt(alpha_bar * beta_bar) * s / 4
    return np.array([[v11, 0, v13, 0],
                     [0, v11, 0, -v13],
                     [v13, 0, v33, 0],
                     [0, -v13, 0, v33]])


def lossy_tmsq_state(r, alpha_bar=1.0, beta_bar=1.0, phi_p=0.0, n_th=(0.0, 0.0)):
    """Same state built through the generic squeeze + loss-channel pipeline."""
    ch = compose(pure_loss_channel([alpha_bar, beta_bar], n_th), two_mode_squeeze(r, phi_p))
    return apply(ch, GaussianState.vacuum(2))


def asy_loss_xm(r, alpha_bar, beta_bar):
    """Minimum of Var(x_-) with asymmetric loss."""
    sa, sb = np.sqrt(alpha_bar), np.sqrt(beta_bar)
    return 0.5 * ((1 - (alpha_bar + beta_bar) / 2) + np.exp(-2 * r) / 4 * (sa + sb) ** 2
                  + np.exp(2 * r) / 4 * (sa - sb) ** 2)


def asy_loss_xp(r, alpha_bar, beta_bar):
    sa, sb = np.sqrt(alpha_bar), np.sqrt(beta_bar)
    return 0.5 * ((1 - (alpha_bar + beta_bar) / 2) + np.exp(2 * r) / 4 * (sa + sb) ** 2
                  + np.exp(-2 * r) / 4 * (sa - sb) ** 2)


def epr_variance_vs_phase(r, alpha_bar, beta_bar, phi, phi_p=0.0):
    """(Var x_-, Var x_+) versus local phase phi; sinusoidal, extremal at phi = phi_p."""
    V = lossy_tmsq_cov(r, alpha_bar, beta_bar)
    v11, v33, v13 = V[0, 0], V[2, 2], V[0, 2]
    cosd = np.cos(phi_p - np.asarray(phi, dtype=float))
    return v11 + v33 - 2 * v13 * cosd, v11 + v33 + 2 * v13 * cosd


def en_sym_loss(r, alpha):
    """E_N with equal power loss alpha (= 1 - transmission) on both modes."""
    return float(-np.log2(np.exp(-2 * r) + alpha * (1 - np.exp(-2 * r))))


def mu_sym_loss(r, alpha):
    return float(1 / (1 + 2 * (1 - alpha) * alpha * (np.cosh(2 * r) - 1)))


def _eps_delta(alpha, beta):
    eps = (alpha + beta) / 2
    delta = (alpha - beta) / (alpha + beta) if alpha + beta > 0 else 0.0
    return eps, delta


def en_asym_large_r(r, alpha, beta):
    """Large-r E_N approximation; alpha, beta are power losses, not transmissions."""
    eps, delta = _eps_delta(alpha, beta)
    return float(-np.log2(np.exp(-2 * r) + eps * (1 - np.exp(-2 * r))
                          + np.tanh(r) * eps ** 2 * delta ** 2))


def mu_asym_large_r(r, alpha, beta):
    eps, delta = _eps_delta(alpha, beta)
    base = 1 / (1 + 2 * (1 - eps) * eps * (np.cosh(2 * r) - 1))
    if eps == 0:
        return float(base)
    return float(base - (eps * delta / (2 * (1 - eps) * eps)) ** 2 * np.exp(-2 * r))


def dynamical_bandwidth(gamma_a, gamma_b, G):
    """B = gamma_0 / sqrt(G), gamma_0 = 2 ga gb / (ga + gb); same units as the inputs."""
    if gamma_a <= 0 or gamma_b <= 0:
        raise ValueError("linewidths must be > 0")
    if G < 1:
        raise ValueError("power gain must be >= 1")
    g0 = 2 * gamma_a * gamma_b / (gamma_a + gamma_b)
    return float(g0 / np.sqrt(G))


def eraser_referred_quadratures(G_J, quads):
    """Output quadratures of mode a referred to the input, at finite or infinite gain."""
    Ia, Qa, Ib, Qb = (np.asarray(q, dtype=float) for q in quads)
    if G_J < 1:
        raise ValueError("G_J must be >= 1")
    k = 1.0 if np.isinf(G_J) else np.sqrt((G_J - 1) / G_J)
    return Ia + k * Ib, Qa - k * Qb


def gain_sweep(cfg: JmConfig, gains_db, require_symmetric_eof=True):
    """Per-gain EntanglementReport plus bandwidth for the lossy model."""
    out = []
    for g in np.asarray(gains_db, dtype=float):
        r = gain_db_to_r(g)
        V = lossy_tmsq_cov(r, cfg.alpha_bar, cfg.beta_bar)
        bw = dynamical_bandwidth(cfg.gamma_a, cfg.gamma_b, float(db_to_ratio(g)))
        rep = measures.report(V, bandwidth_hz=bw, require_symmetric_eof=require_symmetric_eof)
        out.append((float(g), bw, rep))
    return out
