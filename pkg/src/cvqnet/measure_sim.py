"""Seeded Monte-Carlo heterodyne records through calibrated output chains,
covariance reconstruction with statistical error bars, histograms and
worst-case error envelopes."""
from __future__ import annotations

import itertools
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar

from . import measures
from .gaussian import GaussianState
from .io import read_csv, sidecar_path, write_csv, write_json

R_LOAD = 50.0
CHUNK = 1 << 16
QUAD_NAMES = ("x1", "p1", "x2", "p2")


@dataclass(frozen=True)
class OutputChain:
    G_sys: float
    N_sys: float
    omega: float            # rad/s
    T_int: float = 1e-6
    R_load: float = R_LOAD

    def __post_init__(self):
        if self.G_sys <= 0 or self.omega <= 0 or self.T_int <= 0 or self.R_load <= 0:
            raise ValueError("G_sys, omega, T_int and R_load must be > 0")
        if self.N_sys < 0:
            raise ValueError("N_sys must be >= 0")

    @property
    def gamma(self):
        """Raw-volt conversion factor T_int / (R hbar omega)."""
        return self.T_int / (self.R_load * hbar * self.omega)

    @property
    def added_variance(self):
        """Per-quadrature variance added by the chain, referred to the device output.

        With N_sys input-referred photons a vacuum input reads (1/2 + N_sys)
        photons, i.e. 1/4 (1 + 2 N_sys) per quadrature.
        """
        return self.N_sys / 2

    def to_dict(self):
        return {"G_sys": self.G_sys, "N_sys": self.N_sys, "omega": self.omega,
                "T_int": self.T_int, "R_load": self.R_load}


@dataclass(frozen=True)
class QuadratureRecord:
    samples: np.ndarray
    seed: int
    chains: tuple
    label: str = "on"

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[0] < 2:
            raise ValueError("records need at least 2 samples")
        if not np.all(np.isfinite(s)):
            raise ValueError("records contain non-finite samples")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def N(self):
        return self.samples.shape[0]

    def cov(self):
        return np.cov(self.samples, rowvar=False)


@dataclass
class CovEstimate:
    V_hat: np.ndarray
    stat_var: np.ndarray
    worst_case_lo: np.ndarray
    worst_case_hi: np.ndarray
    N: int = 0


def _stream(seed, label, chunk):
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(label.encode()), chunk))
    return np.random.Generator(np.random.Philox(ss))


def cov_sqrt(V, tol=1e-10):
    """Symmetric square root; eigenvalues down to -tol are clamped to 0."""
    w, U = np.linalg.eigh(0.5 * (V + V.T))
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.min(w) < -tol * scale:
        raise ValueError(f"total covariance is not PSD (min eigenvalue {np.min(w):.3e})")
    return U * np.sqrt(np.clip(w, 0, None))


def sample_records(state: GaussianState, chains, N, seed, label="on", threads=1,
                   assumed_G_sys=None):
    """Draw raw-volt samples and refer them back to the device output.

    ``assumed_G_sys`` (per mode) replaces the true gain in the back-referral,
    which injects a calibration error.
    """
    if state.n_modes != 2 or len(chains) != 2:
        raise ValueError("sampling expects a 2-mode state and one chain per mode")
    N = int(N)
    if N < 2:
        raise ValueError("N must be >= 2")
    g_sys = np.repeat([c.G_sys for c in chains], 2)
    gam = np.repeat([c.gamma for c in chains], 2)
    added = np.repeat([c.added_variance for c in chains], 2)
    V_tot = state.cov + np.diag(added)
    d_raw = np.sqrt(g_sys / gam)
    mean_raw = d_raw * state.mean
    L = cov_sqrt(V_tot) * d_raw[:, None]
    starts = list(range(0, N, CHUNK))

    def draw(i):
        n = min(CHUNK, N - starts[i])
        z = _stream(seed, label, i).standard_normal((n, 4))
        return mean_raw + z @ L.T

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(draw, range(len(starts))))
    else:
        parts = [draw(i) for i in range(len(starts))]
    raw = np.concatenate(parts)
    g_ref = g_sys if assumed_G_sys is None else np.repeat(np.asarray(assumed_G_sys, float), 2)
    referred = raw * np.sqrt(gam) / np.sqrt(g_ref)
    return QuadratureRecord(referred, int(seed), tuple(chains), label)


def estimator_variance(S, N):
    """Per-entry sampling variance of a sample covariance S from N draws:
    (S_ii S_jj + S_ij^2) / (N - 1); diagonal gives 2 S_ii^2 / (N - 1)."""
    d = np.diag(S)
    return (np.outer(d, d) + S * S) / (N - 1)


def reconstruct_cov(record_on: QuadratureRecord, record_off: QuadratureRecord):
    """V_hat = Cov(on) - Cov(off) + I/4, with combined sampling variance."""
    if record_on.N != record_off.N:
        raise ValueError(f"N mismatch: {record_on.N} vs {record_off.N}")
    if record_on.samples.shape[1] != record_off.samples.shape[1]:
        raise ValueError("record widths differ")
    S_on, S_off = record_on.cov(), record_off.cov()
    n = S_on.shape[0]
    V_hat = S_on - S_off + 0.25 * np.eye(n)
    V_hat = 0.5 * (V_hat + V_hat.T)
    var = estimator_variance(S_on, record_on.N) + estimator_variance(S_off, record_off.N)
    sd = np.sqrt(var)
    return CovEstimate(V_hat, var, V_hat - sd, V_hat + sd, record_on.N)


@dataclass
class Histogram:
    density: np.ndarray
    x_edges: np.ndarray
    y_edges: np.ndarray
    quad_pair: tuple

    @property
    def bin_area(self):
        return float(np.diff(self.x_edges)[0] * np.diff(self.y_edges)[0])

    def to_rows(self):
        xc = 0.5 * (self.x_edges[1:] + self.x_edges[:-1])
        yc = 0.5 * (self.y_edges[1:] + self.y_edges[:-1])
        return [(xc[i], yc[j], self.density[i, j])
                for i in range(xc.size) for j in range(yc.size)]


def _auto_range(*records, quad_pair, width=5.0):
    s = max(float(np.std(r.samples[:, q])) for r in records for q in quad_pair)
    return ((-width * s, width * s), (-width * s, width * s))


def histogram2d(record: QuadratureRecord, quad_pair=(0, 1), bins=64, range=None):
    if bins < 8:
        raise ValueError("bins must be >= 8")
    if range is None:
        range = _auto_range(record, quad_pair=quad_pair)
    (x0, x1), (y0, y1) = range
    if not (x1 > x0 and y1 > y0):
        raise ValueError("empty histogram range")
    i, j = quad_pair
    h, xe, ye = np.histogram2d(record.samples[:, i], record.samples[:, j], bins=bins,
                               range=range)
    h = h / (record.N * np.diff(xe)[0] * np.diff(ye)[0])
    return Histogram(h, xe, ye, tuple(quad_pair))


def histogram_difference(on: QuadratureRecord, off: QuadratureRecord, quad_pair=(0, 2),
                         bins=64, range=None):
    if range is None:
        range = _auto_range(on, off, quad_pair=quad_pair)
    h_on = histogram2d(on, quad_pair, bins, range)
    h_off = histogram2d(off, quad_pair, bins, range)
    return Histogram(h_on.density - h_off.density, h_on.x_edges, h_on.y_edges,
                     tuple(quad_pair))


_BOUND_FIELDS = ("delta_epr_minus", "delta_epr_plus", "delta_simon", "nu_minus",
                 "log_negativity", "eof", "purity", "ebit_rate_per_s")


_UNBOUNDED_IF_CROSSED = ("log_negativity", "eof", "ebit_rate_per_s")


def _standard_sd(stat_var):
    """1-sd of the standard-form parameters (a, b, c) from per-entry variances."""
    v = np.clip(np.asarray(stat_var, dtype=float), 0, None)
    sd_a = 0.5 * np.sqrt(v[0, 0] + v[1, 1])
    sd_b = 0.5 * np.sqrt(v[2, 2] + v[3, 3])
    sd_c = 0.5 * np.sqrt(0.5 * (v[0, 2] + v[1, 3] + v[0, 3] + v[1, 2]))
    return np.array([sd_a, sd_b, sd_c])


def _std_matrix(a, b, c):
    return np.array([[a, 0, c, 0], [0, a, 0, -c], [c, 0, b, 0], [0, -c, 0, b]])


def worst_case_report(cov_est: CovEstimate, vacuum_calibration_uncertainty=0.1,
                      bandwidth_hz=None, require_symmetric_eof=True):
    """Envelope of every measure over standard-form parameters (a, b, c) at +/- 1 sd
    and the referred excess scaled by 1 +/- f.

    A vacuum-level miscalibration by factor s rescales V_hat - I/4 by s. The
    statistical corners act on (a, b, c) rather than on all ten entries
    independently; entry-wise corners produce near-singular matrices whose
    measures say nothing about the data.
    """
    f = float(vacuum_calibration_uncertainty)
    if not 0 <= f <= 0.5:
        raise ValueError("vacuum calibration uncertainty must lie in [0, 0.5]")
    V = np.asarray(cov_est.V_hat, dtype=float)
    point = measures.report(V, bandwidth_hz, require_symmetric_eof)
    abc = np.array(measures.standard_params(V))
    sd = _standard_sd(cov_est.stat_var)
    vals = {k: [] for k in _BOUND_FIELDS}
    skipped = 0
    for signs in itertools.product((-1.0, 0.0, 1.0), repeat=3):
        a, b, c = abc + np.array(signs) * sd
        for sc in sorted({1 - f, 1.0, 1 + f}):
            W = 0.25 * np.eye(4) + sc * (_std_matrix(a, b, c) - 0.25 * np.eye(4))
            try:
                rep = measures.report(W, bandwidth_hz, require_symmetric_eof)
            except (measures.InvalidCovariance, np.linalg.LinAlgError):
                skipped += 1
                continue
            for k in _BOUND_FIELDS:
                v = getattr(rep, k)
                if v is not None:
                    vals[k].append(v)
    bounds = {}
    for k in _BOUND_FIELDS:
        pv = getattr(point, k)
        if pv is None:
            continue
        arr = np.array(vals[k] + [pv])
        lo, hi = float(arr.min()), float(arr.max())
        if skipped and k in _UNBOUNDED_IF_CROSSED:
            hi = np.inf
        if skipped and k == "nu_minus":
            lo = 0.0
        bounds[k] = (lo, hi)
    point.bounds = bounds
    if skipped:
        point.diagnostics.append(
            f"{skipped} corner matrices crossed the physical boundary; entanglement "
            "upper bounds are unbounded")
    return point


def write_record(record: QuadratureRecord, path):
    names = QUAD_NAMES[:record.samples.shape[1]]
    p = write_csv(path, names, record.samples.tolist())
    write_json(sidecar_path(p), {"seed": record.seed, "N": record.N, "label": record.label,
                                 "chains": [c.to_dict() for c in record.chains]})
    return p


def read_record(path):
    import json
    _, data = read_csv(path)
    meta = json.loads(sidecar_path(path).read_text())
    chains = tuple(OutputChain(**c) for c in meta["chains"])
    return QuadratureRecord(data, meta["seed"], chains, meta.get("label", "on"))
