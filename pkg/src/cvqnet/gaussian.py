"""Phase-space calculus for multimode Gaussian states.

Conventions used throughout the package:

* ``[x, p] = i/2`` so the vacuum has variance 1/4 in every quadrature
  (many libraries use 1/2 instead; do not mix them).
* Quadratures are interleaved, ``xi = (x1, p1, x2, p2, ...)``.
* ``Omega`` is block diagonal with ``[[0, 1], [-1, 0]]`` per mode.
* dB always means power dB (``10 log10``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

VACUUM_VAR = 0.25
I2 = np.eye(2)
Z2 = np.diag([1.0, -1.0])
X2 = np.array([[0.0, 1.0], [1.0, 0.0]])

SYMPLECTIC_TOL = 1e-10
SYMMETRY_TOL = 1e-12


def rot2(phi):
    """R(phi) = [[cos, sin], [-sin, cos]]."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, s], [-s, c]])


def omega(n_modes):
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _sym(m):
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size) or mean.size % 2:
            raise ValueError(f"shape mismatch: mean {mean.shape}, cov {cov.shape}")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(cov))):
            raise ValueError("covariance is not symmetric")
        mean.setflags(write=False)
        cov = _sym(cov)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self):
        return self.mean.size // 2

    @classmethod
    def vacuum(cls, n_modes):
        return cls(np.zeros(2 * n_modes), VACUUM_VAR * np.eye(2 * n_modes))

    @classmethod
    def thermal(cls, occupations):
        occ = np.asarray(occupations, dtype=float)
        return cls(np.zeros(2 * occ.size), np.diag(np.repeat(VACUUM_VAR * (1 + 2 * occ), 2)))

    def with_mean(self, mean):
        return GaussianState(mean, self.cov)

    def reduced(self, modes: Sequence[int]):
        """Marginal on ``modes`` (Gaussian partial trace = submatrix)."""
        idx = np.ravel([[2 * m, 2 * m + 1] for m in modes])
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)])

    def is_physical(self, tol=1e-10):
        """Uncertainty relation V + (i/4) Omega >= 0."""
        m = self.cov + 0.25j * omega(self.n_modes)
        return bool(np.min(np.linalg.eigvalsh(m)) >= -tol)


@dataclass(frozen=True)
class SymplecticOp:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise ValueError(f"bad symplectic shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_modes(self):
        return self.matrix.shape[0] // 2

    def symplectic_error(self):
        om = omega(self.n_modes)
        return float(np.max(np.abs(self.matrix @ om @ self.matrix.T - om)))

    @property
    def X(self):
        return self.matrix

    @property
    def Y(self):
        return np.zeros_like(self.matrix)


@dataclass(frozen=True)
class LossyChannel:
    """Gaussian channel ``V -> X V X^T + Y``.

    ``transmissions`` is filled in for pure-loss channels and left ``None``
    for a general linear map.
    """
    X: np.ndarray
    Y: np.ndarray
    transmissions: tuple | None = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = _sym(np.asarray(self.Y, dtype=float))
        if X.shape[0] != Y.shape[0] or Y.shape[0] != Y.shape[1]:
            raise ValueError("X and Y shapes disagree")
        scale = max(1.0, float(np.max(np.abs(Y), initial=0.0)))
        if np.min(np.linalg.eigvalsh(Y), initial=0.0) < -1e-10 * scale:
            raise ValueError("added-noise matrix Y is not PSD")
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n_modes(self):
        return self.X.shape[0] // 2


def _check_mode(mode, n_modes):
    if not 0 <= mode < n_modes:
        raise IndexError(f"mode {mode} out of range for {n_modes} modes")


def _embed(blocks: dict, n_modes):
    m = np.eye(2 * n_modes)
    for (i, j), b in blocks.items():
        m[2 * i:2 * i + 2, 2 * j:2 * j + 2] = b
    return m


def two_mode_squeeze(r, phi_p=0.0, modes=(0, 1), n_modes=2):
    """S(r, phi): cosh(r) I on the diagonal blocks, sinh(r) Z R(phi) off-diagonal."""
    i, j = modes
    if i == j:
        raise ValueError("degenerate squeeze: identical mode indices")
    if not np.isfinite(r) or r < 0:
        raise ValueError(f"squeeze parameter must be finite and >= 0, got {r}")
    _check_mode(i, n_modes)
    _check_mode(j, n_modes)
    off = np.sinh(r) * Z2 @ rot2(phi_p)
    return SymplecticOp(_embed({(i, i): np.cosh(r) * I2, (j, j): np.cosh(r) * I2,
                                (i, j): off, (j, i): off}, n_modes))


def phase_rotation(phi, mode=0, n_modes=1):
    _check_mode(mode, n_modes)
    return SymplecticOp(_embed({(mode, mode): rot2(phi)}, n_modes))


def directional_coupler(beta_c, paths=(0, 1), n_modes=2):
    """Coupler: out_i = sqrt(1-b) in_i + sqrt(b) in_j, out_j = -sqrt(b) in_i + sqrt(1-b) in_j."""
    if not 0.0 <= beta_c <= 1.0:
        raise ValueError(f"coupling beta_c={beta_c} outside [0, 1]")
    i, j = paths
    if i == j:
        raise ValueError("coupler needs two distinct paths")
    _check_mode(i, n_modes)
    _check_mode(j, n_modes)
    t, s = np.sqrt(1 - beta_c), np.sqrt(beta_c)
    return SymplecticOp(_embed({(i, i): t * I2, (j, j): t * I2,
                                (i, j): s * I2, (j, i): -s * I2}, n_modes))


def pure_loss_channel(transmissions, bath_thermal_occupations=None):
    eta = np.atleast_1d(np.asarray(transmissions, dtype=float))
    if np.any((eta < 0) | (eta > 1)) or not np.all(np.isfinite(eta)):
        raise ValueError(f"power transmissions must lie in [0, 1], got {eta}")
    nth = np.zeros_like(eta) if bath_thermal_occupations is None else \
        np.broadcast_to(np.asarray(bath_thermal_occupations, dtype=float), eta.shape)
    if np.any(nth < 0):
        raise ValueError("bath occupations must be >= 0")
    X = np.diag(np.repeat(np.sqrt(eta), 2))
    Y = np.diag(np.repeat((1 - eta) * (1 + 2 * nth) * VACUUM_VAR, 2))
    return LossyChannel(X, Y, tuple(float(e) for e in eta))


def compose(*ops):
    """compose(B, A) acts as A first, then B (matrix order)."""
    if all(isinstance(o, SymplecticOp) for o in ops):
        m = ops[-1].matrix
        for o in reversed(ops[:-1]):
            m = o.matrix @ m
        return SymplecticOp(m)
    X, Y = ops[-1].X, ops[-1].Y
    for o in reversed(ops[:-1]):
        X, Y = o.X @ X, o.X @ Y @ o.X.T + o.Y
    return LossyChannel(X, Y)


def apply(op, state: GaussianState) -> GaussianState:
    X, Y = op.X, op.Y
    if X.shape[1] != state.mean.size:
        raise ValueError(f"dimension mismatch: op {X.shape} vs state {state.mean.size}")
    cov = X @ state.cov @ X.T + Y
    return GaussianState(X @ state.mean, _sym(cov))


def wigner_density(state: GaussianState, point):
    """W(xi) = exp(-xi V^-1 xi / 2) / ((2 pi)^n sqrt(det V)); n modes -> 2n dims."""
    V = state.cov
    det = np.linalg.det(V)
    if not det > 1e-300:
        raise ValueError("degenerate state: covariance is singular")
    d = np.asarray(point, dtype=float) - state.mean
    q = d @ np.linalg.solve(V, d)
    return float(np.exp(-0.5 * q) / ((2 * np.pi) ** state.n_modes * np.sqrt(det)))


# -- unit conversions -------------------------------------------------------

def db_to_ratio(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def ratio_to_db(ratio):
    return 10.0 * np.log10(ratio)


def gain_db_to_r(db):
    """G = cosh^2 r; r = acosh(sqrt(10^(dB/10)))."""
    db = np.asarray(db, dtype=float)
    if np.any(db < 0):
        raise ValueError(f"gain in dB must be >= 0 to define r, got {db}")
    r = np.arccosh(np.sqrt(db_to_ratio(db)))
    return float(r) if r.ndim == 0 else r


def r_to_gain_db(r):
    r = np.asarray(r, dtype=float)
    g = ratio_to_db(np.cosh(r) ** 2)
    return float(g) if g.ndim == 0 else g


def gain_to_r(G):
    if np.any(np.asarray(G) < 1):
        raise ValueError("power gain must be >= 1")
    return np.arccosh(np.sqrt(G))


DB_KINDS = ("power-gain", "squeezing-level", "loss")


@dataclass(frozen=True)
class DbValue:
    value_db: float
    kind: str = "power-gain"

    def __post_init__(self):
        if self.kind not in DB_KINDS:
            raise ValueError(f"unknown dB kind {self.kind!r}")

    @property
    def ratio(self):
        return float(db_to_ratio(self.value_db))

    @classmethod
    def from_ratio(cls, ratio, kind="power-gain"):
        return cls(float(ratio_to_db(ratio)), kind)

    @property
    def r(self):
        if self.kind != "power-gain":
            raise ValueError("squeeze parameter only defined for a power gain")
        return gain_db_to_r(self.value_db)
