"""Three-mixer entanglement swapping: Alice/Bob covariance, swap Duan sums,
coherent-mean propagation and phase sweeps.

Mode slots used by the pipelines: 0 = a1 (Entangler 1 -> Alice),
1 = b1 (Entangler 1 -> Claire), 2 = a2 (Entangler 2 -> Claire, then the
feedforward line), 3 = b2 (Entangler 2 -> Bob).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import measures
from .gaussian import (GaussianState, LossyChannel, I2, Z2, apply, compose,
                       directional_coupler, gain_db_to_r, pure_loss_channel, rot2,
                       two_mode_squeeze)

CLAIRE_DEFAULT_GAIN_DB = 10.7


class SwapFeedforwardError(ValueError):
    pass


@dataclass(frozen=True)
class SwapConfig:
    r_1: float = 0.0
    r_2: float = 0.0
    r_3: float | None = None      # None -> solve unity feedforward
    phi_1: float = 0.0
    phi_2: float = 0.0
    phi_3: float = np.pi
    alpha_bar_1: float = 0.9
    alpha_bar_2: float = 0.72
    beta_bar_1: float = 0.62
    beta_bar_2: float = 0.97
    alpha_bar_f: float = 0.85
    beta_c: float = 0.1
    n_in: float = 0.0
    theta_in: float = 0.0

    def __post_init__(self):
        for name in ("alpha_bar_1", "alpha_bar_2", "beta_bar_1", "beta_bar_2",
                     "alpha_bar_f", "beta_c"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if min(self.r_1, self.r_2) < 0 or (self.r_3 is not None and self.r_3 < 0):
            raise ValueError("squeeze parameters must be >= 0")
        if self.n_in < 0:
            raise ValueError("n_in must be >= 0")

    @classmethod
    def lossless(cls, r_1, r_2, beta_c=1e-15, **kw):
        return cls(r_1=r_1, r_2=r_2, alpha_bar_1=1, alpha_bar_2=1, beta_bar_1=1,
                   beta_bar_2=1, alpha_bar_f=1, beta_c=beta_c, **kw)

    @property
    def unity_r_3(self):
        t = self.beta_c * self.alpha_bar_f
        if not 0 < t <= 1:
            raise SwapFeedforwardError(
                f"unity feedforward impossible: beta_c*alpha_bar_f = {t:.6g}; "
                "required cosh(r_3) = 1/sqrt(beta_c*alpha_bar_f) is undefined")
        return float(np.arccosh(1 / np.sqrt(t)))

    @property
    def claire_r(self):
        return self.unity_r_3 if self.r_3 is None else self.r_3

    @property
    def feedforward_gain(self):
        """sqrt(beta_c alpha_bar_f) cosh(r_3); 1 at unity feedforward."""
        return float(np.sqrt(self.beta_c * self.alpha_bar_f) * np.cosh(self.claire_r))

    @property
    def appendix_phases(self):
        return self.phi_1 == 0 and self.phi_2 == 0 and np.isclose(self.phi_3, np.pi)


def swap_covariance_closed(cfg: SwapConfig):
    """Closed-form Alice/Bob covariance (phi_1 = phi_2 = 0, phi_3 = pi, unity feedforward)."""
    a1b, a2b, b1b, b2b = cfg.alpha_bar_1, cfg.alpha_bar_2, cfg.beta_bar_1, cfg.beta_bar_2
    a1, a2, b1, b2, af = 1 - a1b, 1 - a2b, 1 - b1b, 1 - b2b, 1 - cfg.alpha_bar_f
    bc = cfg.beta_c
    bcb = 1 - bc
    c1, s1 = np.cosh(2 * cfg.r_1), np.sinh(2 * cfg.r_1)
    c2, s2 = np.cosh(2 * cfg.r_2), np.sinh(2 * cfg.r_2)
    v11 = (a2b * c2 / 4 + (b1b + bcb * a1b) * c1 / 4 - 0.5 * np.sqrt(bcb * a1b * b1b) * s1
           + (a2 + b1 + bc * af + bcb * a1) / 4)
    v33 = b2b * c2 / 4 + b2 / 4
    v13 = np.sqrt(b2b * a2b) * s2 / 4
    return np.array([[v11, 0, v13, 0],
                     [0, v11, 0, -v13],
                     [v13, 0, v33, 0],
                     [0, -v13, 0, v33]])


def _sources(cfg: SwapConfig):
    S = compose(two_mode_squeeze(cfg.r_2, cfg.phi_2, (2, 3), 4),
                two_mode_squeeze(cfg.r_1, cfg.phi_1, (0, 1), 4))
    L = pure_loss_channel([cfg.alpha_bar_1, cfg.beta_bar_1, cfg.alpha_bar_2, cfg.beta_bar_2])
    return S, L


def _eraser_map(cfg: SwapConfig):
    """Claire in the infinite-gain limit with sqrt(bc af) sinh r_3 ~ cosh r_3:
    slot 2 <- cosh(r_3) (a2 + e^{i phi_3} b1^dagger)."""
    X = np.eye(8)
    g = np.cosh(cfg.claire_r)
    X[4:6, 4:6] = g * I2
    X[4:6, 2:4] = g * Z2 @ rot2(cfg.phi_3)
    return LossyChannel(X, np.zeros((8, 8)))


def _claire_physical(cfg: SwapConfig):
    return two_mode_squeeze(cfg.claire_r, cfg.phi_3, (2, 1), 4)


def swap_state(cfg: SwapConfig, eraser_limit=True) -> GaussianState:
    """Alice/Bob state from the generic gaussian-core pipeline.

    ``eraser_limit=True`` reproduces the closed form; ``False`` keeps the
    finite-gain Claire amplifier.
    """
    S, L = _sources(cfg)
    claire = _eraser_map(cfg) if eraser_limit else _claire_physical(cfg)
    ff = pure_loss_channel([1, 1, cfg.alpha_bar_f, 1])
    C = directional_coupler(cfg.beta_c, (0, 2), 4)
    ch = compose(C, ff, claire, L, S)
    m_in = np.zeros(8)
    m_in[6] = np.sqrt(cfg.n_in) * np.cos(cfg.theta_in)
    m_in[7] = np.sqrt(cfg.n_in) * np.sin(cfg.theta_in)
    full = apply(ch, GaussianState(m_in, 0.25 * np.eye(8)))
    return full.reduced([0, 3])


def swap_covariance(cfg: SwapConfig):
    """Alice/Bob covariance. Closed form for the appendix phases, otherwise the
    eraser-limit pipeline (identical where both apply)."""
    cfg.unity_r_3  # raises if unity feedforward cannot be met
    if cfg.appendix_phases:
        return swap_covariance_closed(cfg)
    return np.array(swap_state(cfg).cov)


def swap_coherent_means(cfg: SwapConfig, eraser_limit=True):
    s = swap_state(cfg, eraser_limit)
    return np.array(s.mean[:2]), np.array(s.mean[2:])


def swap_duan_lossless(r_1, r_2):
    return float(np.exp(-2 * r_2) + np.exp(-2 * r_1)), float(np.exp(2 * r_2) + np.exp(-2 * r_1))


def swap_report_vs_gain(cfg: SwapConfig, gains_2_db, bandwidth_hz=None,
                        require_symmetric_eof=True):
    out = []
    for g in np.atleast_1d(np.asarray(gains_2_db, dtype=float)):
        V = swap_covariance(replace(cfg, r_2=gain_db_to_r(g)))
        out.append(measures.report(V, bandwidth_hz=bandwidth_hz,
                                   require_symmetric_eof=require_symmetric_eof))
    return out


def swap_phase_sweep(cfg: SwapConfig, phase_2):
    """(Var x_-, Var x_+) with Var x_- = [Var(x_A - x_B) + Var(p_A + p_B)]/2.

    The phase axis is shifted by pi relative to phi_2 so that the minimum of
    Var x_- sits at 180 degrees.
    """
    vm, vp = [], []
    for ph in np.atleast_1d(np.asarray(phase_2, dtype=float)):
        V = swap_state(replace(cfg, phi_2=ph - np.pi)).cov
        m, p = measures.duan_at_angle(V, 0.0)
        vm.append(m / 2)
        vp.append(p / 2)
    return np.array(vm), np.array(vp)


def threshold_gain_db(cfg: SwapConfig, lossless=False, hi_db=20.0):
    """Smallest G_2 (dB) with Delta^- < 1, for fixed r_1; None if never reached."""
    from scipy.optimize import brentq

    if lossless:
        f = lambda g: swap_duan_lossless(cfg.r_1, gain_db_to_r(g))[0] - 1
    else:
        f = lambda g: measures.duan_epr(swap_covariance(replace(cfg, r_2=gain_db_to_r(g))))[0] - 1
    grid = np.linspace(0, hi_db, 401)
    vals = [f(g) for g in grid]
    for i in range(1, len(grid)):
        if vals[i - 1] >= 0 > vals[i]:
            return float(brentq(f, grid[i - 1], grid[i], xtol=1e-12))
    return None
