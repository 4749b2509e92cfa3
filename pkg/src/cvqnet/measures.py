"""Entanglement and squeezing figures of merit for two-mode covariances.

All inputs are 4x4 covariances in (x1, p1, x2, p2) order with vacuum 1/4.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .gaussian import rot2

EOF_SYMMETRY_TOL = 0.05


class InvalidCovariance(ValueError):
    pass


class EofUnavailable(ValueError):
    """Raised when the symmetric-state E_F formula does not apply."""


def _check(V):
    V = np.asarray(V, dtype=float)
    if V.shape != (4, 4):
        raise ValueError(f"expected a 4x4 two-mode covariance, got {V.shape}")
    return V


def blocks(V):
    V = _check(V)
    return V[:2, :2], V[2:, 2:], V[:2, 2:]


def optimal_angle(V):
    """Local rotation of mode b that brings the cross block to V13 * Z."""
    V = _check(V)
    s = V[0, 2] - V[1, 3]
    t = V[0, 3] + V[1, 2]
    return float(np.arctan2(t, s))


def standard_params(V):
    """(V11, V33, V13) of the rotated, per-mode symmetrized standard form.

    For a matrix already of the form with cross block V13 * Z R(phi) this is
    exact; for noisy estimates it averages x and p entries.
    """
    V = _check(V)
    a = 0.5 * (V[0, 0] + V[1, 1])
    b = 0.5 * (V[2, 2] + V[3, 3])
    c = 0.5 * np.hypot(V[0, 2] - V[1, 3], V[0, 3] + V[1, 2])
    return float(a), float(b), float(c)


def standard_form(V):
    """Return V with mode b rotated so the cross block is diagonal with signs (+, -)."""
    V = _check(V)
    phi = optimal_angle(V)
    S = np.eye(4)
    S[2:, 2:] = rot2(phi)
    out = S @ V @ S.T
    return 0.5 * (out + out.T)


def duan_at_angle(V, phi):
    """(Var(x1-x2)+Var(p1+p2), Var(x1+x2)+Var(p1-p2)) after rotating mode b by phi."""
    V = _check(V)
    S = np.eye(4)
    S[2:, 2:] = rot2(phi)
    W = S @ V @ S.T
    minus = W[0, 0] + W[2, 2] - 2 * W[0, 2] + W[1, 1] + W[3, 3] + 2 * W[1, 3]
    plus = W[0, 0] + W[2, 2] + 2 * W[0, 2] + W[1, 1] + W[3, 3] - 2 * W[1, 3]
    return float(minus), float(plus)


def duan_epr(V):
    """Duan sums minimized/maximized over local phase: 2(V11+V33 -/+ 2 V13)."""
    a, b, c = standard_params(V)
    return 2 * (a + b - 2 * c), 2 * (a + b + 2 * c)


def simon_sides(V):
    """Both sides of the literal Simon inequality lhs >= rhs."""
    a, b, c = standard_params(V)
    lhs = 16 * (a * b - c * c) ** 2
    rhs = (a + b) + 2 * c * c - 1 / 16
    return lhs, rhs


def simon_criterion(V):
    """Delta_S = lhs - rhs of the literal inequality.

    Note: the literal expression is -0.375 for vacuum; only its value relative
    to vacuum carries meaning here.
    """
    lhs, rhs = simon_sides(V)
    return lhs - rhs


SIMON_VACUUM = -0.375


_OMEGA2 = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
_PT = np.diag([1.0, 1.0, 1.0, -1.0])


def nu_minus(V):
    """Smallest symplectic eigenvalue of the partial transpose (vacuum -> 1/4).

    The eigenvalues of the Hermitian S (i Omega) S with S = sqrt(V~) are
    +/- nu_k; eigvalsh resolves them to machine precision both near vacuum
    (nearly degenerate nu_k) and at large squeezing.
    """
    Vt = _PT @ _check(V) @ _PT
    w, U = np.linalg.eigh(0.5 * (Vt + Vt.T))
    if w[0] <= 0:
        raise InvalidCovariance(f"invalid covariance: min eigenvalue {w[0]:.3e}")
    S = (U * np.sqrt(w)) @ U.T
    ev = np.linalg.eigvalsh(S @ (1j * _OMEGA2) @ S)
    return float(np.min(np.abs(ev)))


def log_negativity(V):
    return max(0.0, float(-np.log2(4 * nu_minus(V))))


def eof_h(nu_t):
    """h(nu~) from the symmetric-state E_F closed form; h(1) = 0."""
    nu_t = float(nu_t)
    if nu_t <= 0:
        raise ValueError(f"nu~ must be > 0, got {nu_t}")
    cp = (1 + nu_t) ** 2 / (4 * nu_t)
    cm = (1 - nu_t) ** 2 / (4 * nu_t)
    hm = cm * np.log2(cm) if cm > 0 else 0.0
    return float(cp * np.log2(cp) - hm)


def entanglement_of_formation(V, require_symmetric=True):
    """E_F for (near-)symmetric states.

    h is invariant under nu~ -> 1/nu~, so it is only used for nu~ < 1;
    separable states (nu~ >= 1) give 0.
    """
    a, b, _ = standard_params(V)
    if require_symmetric and abs(a - b) >= EOF_SYMMETRY_TOL * (a + b):
        raise EofUnavailable(
            f"E_F formula needs V11 ~ V33; got |V11-V33|/(V11+V33) = {abs(a - b) / (a + b):.3f}")
    nu_t = 4 * nu_minus(V)
    if nu_t >= 1:
        return 0.0
    return max(0.0, eof_h(nu_t))


def purity(V):
    d = np.linalg.det(_check(V))
    if d <= 0:
        raise InvalidCovariance(f"purity needs det V > 0, got {d:.3e}")
    return float(1 / (16 * np.sqrt(d)))


def ebit_rate(e_f, bandwidth_hz):
    if e_f < 0 or bandwidth_hz < 0:
        raise ValueError("E_F and bandwidth must be >= 0")
    return float(e_f * bandwidth_hz)


def to_db(x):
    return float(10 * np.log10(x)) if x > 0 else float("-inf")


@dataclass
class EntanglementReport:
    delta_epr_minus: float
    delta_epr_plus: float
    delta_simon: float
    nu_minus: float
    log_negativity: float
    eof: float | None
    purity: float
    ebit_rate_per_s: float | None = None
    diagnostics: list = field(default_factory=list)
    bounds: dict | None = None

    @property
    def delta_epr_minus_db(self):
        return to_db(self.delta_epr_minus)

    @property
    def delta_epr_plus_db(self):
        return to_db(self.delta_epr_plus)

    def to_json(self):
        return {
            "delta_epr_minus_db": self.delta_epr_minus_db,
            "delta_epr_plus_db": self.delta_epr_plus_db,
            "delta_epr_minus": self.delta_epr_minus,
            "delta_epr_plus": self.delta_epr_plus,
            "delta_simon": self.delta_simon,
            "e_n": self.log_negativity,
            "e_f": self.eof,
            "purity": self.purity,
            "nu_minus": self.nu_minus,
            "ebit_rate_hz": self.ebit_rate_per_s,
            "diagnostics": list(self.diagnostics),
            "bounds": self.bounds,
        }

    def as_dict(self):
        return asdict(self)


def uncertainty_margin(V):
    """Smallest eigenvalue of V + (i/4) Omega; negative means V is unphysical."""
    return float(np.min(np.linalg.eigvalsh(_check(V) + 0.25j * _OMEGA2)))


def report(V, bandwidth_hz=None, require_symmetric_eof=True):
    """All measures of V. A non positive-definite V raises InvalidCovariance; an
    estimate that only violates the uncertainty relation gets a diagnostic."""
    V = _check(V)
    dm, dp = duan_epr(V)
    diags = []
    lam = uncertainty_margin(V)
    if lam < -1e-10:
        diags.append(f"violates the uncertainty relation: min eig of V + i Omega/4 = {lam:.3e}")
    try:
        ef = entanglement_of_formation(V, require_symmetric=require_symmetric_eof)
    except EofUnavailable as exc:
        ef = None
        diags.append(f"e_f unavailable: {exc}")
    rate = None
    if bandwidth_hz is not None and ef is not None:
        rate = ebit_rate(ef, bandwidth_hz)
    return EntanglementReport(
        delta_epr_minus=dm, delta_epr_plus=dp, delta_simon=simon_criterion(V),
        nu_minus=nu_minus(V), log_negativity=log_negativity(V), eof=ef,
        purity=purity(V), ebit_rate_per_s=rate, diagnostics=diags)
