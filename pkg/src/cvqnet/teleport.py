"""Three-path teleportation circuit: operator chain, teleported state,
Gaussian fidelity and Bob's output noise versus pump phase.

Paths: 1 = Entangler mode b -> Bob, 2 = Entangler mode a -> Alice,
3 = input signal -> Alice (its mode-b partner). Feedforward couples
Alice's amplified path 3 into path 1 at Bob.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .gaussian import (GaussianState, LossyChannel, apply, compose, directional_coupler,
                       gain_db_to_r, pure_loss_channel, two_mode_squeeze)

K_DEFINITIONS = ("effective", "appendix")


class FeedforwardError(ValueError):
    pass


def unity_r_A(beta_c, beta_bar_f=1.0):
    """Solve sqrt(beta_c * beta_bar_f) cosh(r_A) = 1."""
    t = beta_c * beta_bar_f
    if not 0 < t <= 1:
        raise FeedforwardError(
            f"unity feedforward needs 0 < beta_c*beta_bar_f <= 1, got {t:.6g}")
    return float(np.arccosh(1 / np.sqrt(t)))


@dataclass(frozen=True)
class TeleportConfig:
    r_E: float = 0.0
    r_A: float = 0.0
    phi_E: float = 0.0
    phi_A: float = np.pi
    # power losses eps_1..eps_6; eps_1 = beta (Bob), eps_2 = alpha (Alice), eps_6 = beta_f
    eps: tuple = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    beta_c: float = 0.0
    n_th_a: float = 0.0
    n_th_b: float = 0.0
    n_th_path3: float = 0.0
    n_s: float = 0.0
    theta_s: float = 0.0
    k_definition: str = "effective"

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        if len(eps) != 6:
            raise ValueError("eps must have six entries")
        if any(not 0 <= e <= 1 for e in eps):
            raise ValueError(f"losses must lie in [0, 1], got {eps}")
        object.__setattr__(self, "eps", eps)
        if not 0 <= self.beta_c <= 1:
            raise ValueError(f"beta_c={self.beta_c} outside [0, 1]")
        if self.r_E < 0 or self.r_A < 0:
            raise ValueError("squeeze parameters must be >= 0")
        if min(self.n_th_a, self.n_th_b, self.n_th_path3, self.n_s) < 0:
            raise ValueError("occupations and n_s must be >= 0")
        if self.k_definition not in K_DEFINITIONS:
            raise ValueError(f"k_definition must be one of {K_DEFINITIONS}")

    @classmethod
    def from_losses(cls, r_E, alpha_bar=1.0, beta_bar=1.0, beta_bar_f=1.0, beta_c=0.1,
                    r_A=None, **kw):
        """Paper-style losses; r_A=None solves unity feedforward including beta_bar_f."""
        eps = (1 - beta_bar, 1 - alpha_bar, 0.0, 0.0, 0.0, 1 - beta_bar_f)
        if r_A is None:
            kdef = kw.get("k_definition", "effective")
            r_A = unity_r_A(beta_c, beta_bar_f if kdef == "effective" else 1.0)
        return cls(r_E=r_E, r_A=r_A, eps=eps, beta_c=beta_c, **kw)

    @property
    def alpha_bar(self):
        return 1 - self.eps[1]

    @property
    def beta_bar(self):
        return 1 - self.eps[0]

    @property
    def beta_bar_f(self):
        return 1 - self.eps[5]

    @property
    def k_appendix(self):
        return self.beta_c * np.cosh(self.r_A) ** 2

    @property
    def k_effective(self):
        return self.beta_c * self.beta_bar_f * np.cosh(self.r_A) ** 2

    @property
    def k(self):
        return self.k_effective if self.k_definition == "effective" else self.k_appendix

    @property
    def unity_gain(self):
        return abs(self.k - 1) < 1e-9

    def with_phase_ea(self, phi_ea):
        """Set phi_A = phi_E + phi_EA (phi_EA = pi is the teleportation optimum)."""
        return replace(self, phi_A=self.phi_E + phi_ea)


def _channels(cfg: TeleportConfig):
    e = np.asarray(cfg.eps)
    nth = np.array([cfg.n_th_b, cfg.n_th_a, cfg.n_th_b])
    S1 = two_mode_squeeze(cfg.r_E, cfg.phi_E, (0, 1), 3)
    S2 = two_mode_squeeze(cfg.r_A, cfg.phi_A, (1, 2), 3)
    L1 = pure_loss_channel(1 - e[:3], nth)
    L2 = pure_loss_channel(1 - e[3:], nth)
    C = directional_coupler(cfg.beta_c, (0, 2), 3)
    return S1, L1, S2, L2, C


def build_teleport_sequence(cfg: TeleportConfig):
    """T = C L2 S2 L1 S1 and A = C L2 S2 A1 S2^T L2^T C^T + C A2 C^T."""
    S1, L1, S2, L2, C = _channels(cfg)
    ch = compose(C, L2, S2, L1, S1)
    return np.array(ch.X), np.array(ch.Y)


def initial_state(cfg: TeleportConfig) -> GaussianState:
    occ = np.array([cfg.n_th_b, cfg.n_th_a, cfg.n_th_path3])
    V0 = np.diag(np.repeat(0.25 * (1 + 2 * occ), 2))
    c0 = np.zeros(6)
    c0[4] = np.sqrt(cfg.n_s) * np.cos(cfg.theta_s)
    c0[5] = np.sqrt(cfg.n_s) * np.sin(cfg.theta_s)
    return GaussianState(c0, V0)


def full_state(cfg: TeleportConfig) -> GaussianState:
    T, A = build_teleport_sequence(cfg)
    return apply(LossyChannel(T, A), initial_state(cfg))


def teleported_state(cfg: TeleportConfig) -> GaussianState:
    return full_state(cfg).reduced([0])


def input_state(cfg: TeleportConfig) -> GaussianState:
    return initial_state(cfg).reduced([2])


def gaussian_fidelity(mean_in, V_in, mean_out, V_out):
    """F = 1/2 exp[-b^T (V_in+V_out)^-1 b] / (sqrt(L + D) - sqrt(D)).

    L = det(V_in + V_out), D = 16 (det V_in - 1/16)(det V_out - 1/16); each
    factor of D is clamped at 0 to absorb round-off for pure states.
    """
    V_in = np.asarray(V_in, dtype=float)
    V_out = np.asarray(V_out, dtype=float)
    S = V_in + V_out
    lam = np.linalg.det(S)
    if not lam > 0:
        raise ValueError("singular V_in + V_out")
    b = np.asarray(mean_in, dtype=float) - np.asarray(mean_out, dtype=float)
    d = 16 * max(np.linalg.det(V_in) - 1 / 16, 0.0) * max(np.linalg.det(V_out) - 1 / 16, 0.0)
    f = 0.5 * np.exp(-b @ np.linalg.solve(S, b)) / (np.sqrt(lam + d) - np.sqrt(d))
    return float(min(max(f, 0.0), 1.0))


def teleport_fidelity(cfg: TeleportConfig):
    s_in, s_out = input_state(cfg), teleported_state(cfg)
    return gaussian_fidelity(s_in.mean, s_in.cov, s_out.mean, s_out.cov)


def v_tel_expanded(r_E, r_A, beta_c):
    """Lossless path-1 variance (phi_E = 0, phi_A = pi), times I_2."""
    bcb = 1 - beta_c
    return 0.25 * (bcb * np.cosh(2 * r_E) + beta_c * np.sinh(r_A) ** 2 * np.cosh(2 * r_E)
                   - 2 * np.sqrt(bcb * beta_c) * np.sinh(r_A) * np.sinh(2 * r_E)
                   + beta_c * np.cosh(r_A) ** 2)


def c_r_k(r_E, k, beta_c):
    """C(r_E, k) = sqrt(Lambda) for the lossless chain, exact in beta_c."""
    root = np.sqrt(max(k - k * beta_c - beta_c + beta_c ** 2, 0.0))
    return 0.25 * (1 + k + (1 - 2 * beta_c + k) * np.cosh(2 * r_E) - 2 * root * np.sinh(2 * r_E))


def c_r_k_small_coupling(r_E, k):
    return 0.5 * ((1 + k) * np.cosh(r_E) ** 2 - np.sqrt(k) * np.sinh(2 * r_E))


def closed_form_fidelities(cfg: TeleportConfig):
    """Lossless closed forms; the k used is reported alongside the flags."""
    k = cfg.k
    ns = cfg.n_s
    b_k = (np.sqrt(k) - 1) ** 2
    C = c_r_k(cfg.r_E, k, cfg.beta_c)
    flags = []
    if cfg.beta_c > 0.1:
        flags.append("beta_c is not small; small-coupling forms are approximate")
    if np.cosh(cfg.r_A) ** 2 < 10:
        flags.append("G_A is not large; large-gain forms are approximate")
    if any(cfg.eps):
        flags.append("closed forms ignore the configured losses")
    return {
        "F_q_lossless": float(1 / (np.exp(-2 * cfg.r_E) + 1)),
        "F_c_lossless": 0.5,
        "F_q_nonunity": float(np.exp(-ns * b_k / C) / (2 * C)),
        "F_c_nonunity": float(np.exp(-ns * 2 * b_k / (1 + k)) / (1 + k)),
        "k": float(k),
        "k_definition": cfg.k_definition,
        "flags": flags,
    }


def f_c_nonunity_exact(beta_c, G_A, n_s=0.0):
    """Classical (r_E = 0) lossless fidelity, exact in beta_c and G_A."""
    A = (1 + beta_c * (G_A - 1)) / 2
    B = beta_c * G_A - 2 * np.sqrt(beta_c * G_A) + 1
    return float(np.exp(-n_s * B / A) / (2 * A))


@dataclass
class NoiseCurve:
    phi_ea: np.ndarray
    noise_photons: np.ndarray
    assumptions: list = field(default_factory=list)


def bob_noise_vs_pump_phase(cfg: TeleportConfig, phi_ea):
    """Bob's symmetrized noise (vacuum = 1/2) in the unity-feedforward,
    large-G_A, small-coupling limit."""
    phi = np.asarray(phi_ea, dtype=float)
    ab, bb = cfg.alpha_bar, cfg.beta_bar
    a, b = 1 - ab, 1 - bb
    ch, sh, s2 = np.cosh(cfg.r_E) ** 2, np.sinh(cfg.r_E) ** 2, np.sinh(2 * cfg.r_E)
    va_in = 0.5 * (1 + 2 * cfg.n_th_a)
    vb_in = 0.5 * (1 + 2 * cfg.n_th_b)
    v_sig = 0.5 * (1 + 2 * cfg.n_th_path3)
    cross = np.sqrt(ab * bb) * s2 * np.cos(phi)
    noise = (v_sig + (ab * ch + bb * sh + cross) * va_in + (ab * sh + bb * ch + cross) * vb_in
             + a * va_in + b * vb_in)
    assumptions = ["unity feedforward", "large gain at Alice", "beta_c << 1"]
    if not cfg.unity_gain:
        assumptions.append(f"config k={cfg.k:.6g} is not unity; curve assumes k=1")
    return NoiseCurve(phi, noise, assumptions)


def bob_noise_pipeline(cfg: TeleportConfig, phi_ea):
    """Bob's noise from the full operator chain: Var(x) + Var(p) on path 1."""
    out = []
    for p in np.atleast_1d(np.asarray(phi_ea, dtype=float)):
        V = teleported_state(cfg.with_phase_ea(p)).cov
        out.append(V[0, 0] + V[1, 1])
    return np.array(out)


def fidelity_vs_phase(cfg: TeleportConfig, phi_ea):
    return np.array([teleport_fidelity(cfg.with_phase_ea(p))
                     for p in np.atleast_1d(np.asarray(phi_ea, dtype=float))])


def fidelity_vs_gain(cfg: TeleportConfig, gains_e_db):
    return np.array([teleport_fidelity(replace(cfg, r_E=gain_db_to_r(g)))
                     for g in np.atleast_1d(np.asarray(gains_e_db, dtype=float))])
