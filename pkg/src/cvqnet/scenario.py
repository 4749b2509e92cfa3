"""Scenario files: TOML with unit-suffixed field names.

Suffixes: ``_db`` power dB, ``_deg`` degrees, ``_linear`` power ratio in
[0, 1] unless noted, ``_hz`` frequency, ``_s`` seconds.
"""
from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

KINDS = ("tmsq", "teleport", "entswap", "reconstruct", "calibrate")


class ConfigError(ValueError):
    pass


def _unit(v):
    return 0 <= v <= 1


def _nonneg(v):
    return v >= 0


def _pos(v):
    return v > 0


def _any(v):
    return True


# field -> (type, default, check, description of the check)
F, I, S, B, L = float, int, str, bool, list
UNIT = (_unit, "in [0, 1]")
NONNEG = (_nonneg, ">= 0")
POS = (_pos, "> 0")
ANY = (_any, "")

SECTIONS = {
    "tmsq": {
        "gain_db": (F, 4.0, *NONNEG),
        "alpha_bar_linear": (F, 0.62, *UNIT),
        "beta_bar_linear": (F, 1.0, *UNIT),
        "pump_phase_deg": (F, 0.0, *ANY),
        "f_a_hz": (F, 7.231e9, *POS),
        "f_b_hz": (F, 9.695e9, *POS),
        "gamma_a_hz": (F, 103e6, *POS),
        "gamma_b_hz": (F, 78e6, *POS),
        "eof_require_symmetric": (B, True, *ANY),
    },
    "teleport": {
        "gain_e_db": (F, 0.0, *NONNEG),
        "gain_a_db": (F, None, *NONNEG),
        "feedforward": (S, "unity", lambda v: v in ("unity", "fixed"), "one of unity, fixed"),
        "k_definition": (S, "effective", lambda v: v in ("effective", "appendix"),
                         "one of effective, appendix"),
        "alpha_bar_linear": (F, 1.0, *UNIT),
        "beta_bar_linear": (F, 1.0, *UNIT),
        "beta_bar_f_linear": (F, 1.0, *UNIT),
        "beta_c_linear": (F, 0.1, *UNIT),
        "phi_e_deg": (F, 0.0, *ANY),
        "phi_ea_deg": (F, 180.0, *ANY),
        "n_th_a": (F, 0.0, *NONNEG),
        "n_th_b": (F, 0.0, *NONNEG),
        "n_th_path3": (F, 0.0, *NONNEG),
        "n_s": (F, 0.0, *NONNEG),
        "theta_s_deg": (F, 0.0, *ANY),
    },
    "entswap": {
        "gain_1_db": (F, 1.4, *NONNEG),
        "gain_2_db": (F, 2.5, *NONNEG),
        "gain_3_db": (F, None, *NONNEG),
        "phi_1_deg": (F, 0.0, *ANY),
        "phi_2_deg": (F, 0.0, *ANY),
        "phi_3_deg": (F, 180.0, *ANY),
        "alpha_bar_1_linear": (F, 0.9, *UNIT),
        "alpha_bar_2_linear": (F, 0.72, *UNIT),
        "beta_bar_1_linear": (F, 0.62, *UNIT),
        "beta_bar_2_linear": (F, 0.97, *UNIT),
        "alpha_bar_f_linear": (F, 0.85, *UNIT),
        "beta_c_linear": (F, 0.1, *UNIT),
        "n_in": (F, 0.0, *NONNEG),
        "theta_in_deg": (F, 0.0, *ANY),
        "bandwidth_hz": (F, None, *NONNEG),
        "eof_require_symmetric": (B, True, *ANY),
    },
    "reconstruct": {
        "gain_db": (F, 4.0, *NONNEG),
        "alpha_bar_linear": (F, 0.62, *UNIT),
        "beta_bar_linear": (F, 1.0, *UNIT),
        "n_samples": (I, 1000000, lambda v: v >= 2, ">= 2"),
        "vacuum_calibration_uncertainty": (F, 0.1, lambda v: 0 <= v <= 0.5, "in [0, 0.5]"),
        "bins": (I, 64, lambda v: v >= 8, ">= 8"),
        "write_records": (B, False, *ANY),
        "eof_require_symmetric": (B, True, *ANY),
        "bandwidth_hz": (F, None, *NONNEG),
    },
    "calibrate": {
        "input_csv": (S, None, *ANY),
        "sweep_kind": (S, "jm_gain_linear", lambda v: v in ("jm_gain_linear", "temperature_K"),
                       "one of jm_gain_linear, temperature_K"),
        "g_sys_linear": (F, 3.5e6, *POS),
        "n_sys": (F, 13.2, *NONNEG),
        "f_hz": (F, 7.23e9, *POS),
        "bw_hz": (F, 1e6, *POS),
        "noise_fraction": (F, 0.05, lambda v: 0 <= v < 1, "in [0, 1)"),
        "g_sys_top_linear": (F, None, *POS),
        "g_sys_bottom_linear": (F, None, *POS),
        "coupler_db": (F, 0.0, *NONNEG),
    },
}

CHAIN_FIELDS = {
    "g_sys_linear": (F, None, *POS),   # linear power gain, not limited to [0, 1]
    "n_sys": (F, None, *NONNEG),
    "f_hz": (F, None, *POS),
    "t_int_s": (F, 1e-6, *POS),
}

SWEEP_VARS = {
    "tmsq": ("gain_db", "phase_deg"),
    "teleport": ("phi_ea_deg", "gain_e_db"),
    "entswap": ("gain_2_db", "phase_2_deg"),
    "reconstruct": (),
    "calibrate": ("gain_db", "temperature_K"),
}

SERIES_KEYS = {
    "teleport": ("alpha_bar_linear", "beta_bar_linear", "gain_e_db"),
    "tmsq": ("alpha_bar_linear", "beta_bar_linear"),
    "entswap": ("gain_1_db",),
}


@dataclass
class Scenario:
    kind: str
    name: str
    seed: int
    params: dict
    sweep: np.ndarray | None
    sweep_variable: str | None
    series_key: str | None = None
    series_values: list = field(default_factory=list)
    chains: list = field(default_factory=list)
    output: dict = field(default_factory=dict)
    base_dir: Path = Path(".")
    raw: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def resolved(self):
        """Fully resolved scenario (defaults filled) for metadata sidecars."""
        out = {"kind": self.kind, "name": self.name, "seed": self.seed,
               self.kind: dict(self.params), "output": dict(self.output)}
        if self.sweep is not None:
            out["sweep"] = {"variable": self.sweep_variable, "values": self.sweep.tolist()}
        if self.series_key:
            out["series"] = {"key": self.series_key, "values": list(self.series_values)}
        if self.chains:
            out["chains"] = [dict(c) for c in self.chains]
        return out


def _typed(path, v, typ):
    if typ is F:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {v!r}")
        v = float(v)
        if not np.isfinite(v):
            raise ConfigError(f"{path}: must be finite")
        return v
    if typ is I:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{path}: expected an integer, got {v!r}")
        return v
    if typ is B:
        if not isinstance(v, bool):
            raise ConfigError(f"{path}: expected true/false, got {v!r}")
        return v
    if typ is S:
        if not isinstance(v, str):
            raise ConfigError(f"{path}: expected a string, got {v!r}")
        return v
    return v


def _section(path, data, schema):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a table")
    unknown = sorted(set(data) - set(schema))
    if unknown:
        raise ConfigError(f"{path}: unknown field(s) {', '.join(unknown)}")
    out = {}
    for key, (typ, default, check, desc) in schema.items():
        fp = f"{path}.{key}"
        if key not in data:
            out[key] = default
            continue
        v = _typed(fp, data[key], typ)
        if not check(v):
            raise ConfigError(f"{fp}: value {v!r} out of range (must be {desc})")
        out[key] = v
    return out


def _grid(data, kind):
    if "sweep" not in data:
        return None, None
    sw = data["sweep"]
    if not isinstance(sw, dict):
        raise ConfigError("sweep: expected a table")
    unknown = sorted(set(sw) - {"variable", "start", "stop", "num", "values"})
    if unknown:
        raise ConfigError(f"sweep: unknown field(s) {', '.join(unknown)}")
    var = sw.get("variable")
    if var not in SWEEP_VARS[kind]:
        raise ConfigError(f"sweep.variable: {var!r} not valid for kind {kind!r} "
                          f"(choose from {', '.join(SWEEP_VARS[kind]) or 'none'})")
    if "values" in sw:
        if any(k in sw for k in ("start", "stop", "num")):
            raise ConfigError("sweep: give either values or start/stop/num, not both")
        vals = sw["values"]
        if not isinstance(vals, list):
            raise ConfigError("sweep.values: expected a list")
        grid = np.array([_typed("sweep.values", v, F) for v in vals], dtype=float)
    else:
        for k in ("start", "stop", "num"):
            if k not in sw:
                raise ConfigError(f"sweep.{k}: missing")
        num = _typed("sweep.num", sw["num"], I)
        if num < 1:
            raise ConfigError("sweep.num: grid is empty (num must be >= 1)")
        grid = np.linspace(_typed("sweep.start", sw["start"], F),
                           _typed("sweep.stop", sw["stop"], F), num)
    if grid.size == 0:
        raise ConfigError("sweep.values: grid is empty")
    if grid.size > 1 and not (np.all(np.diff(grid) > 0) or np.all(np.diff(grid) < 0)):
        raise ConfigError("sweep.values: grid must be strictly monotone")
    if var.endswith("_db") and np.any(grid < 0):
        raise ConfigError(f"sweep.values: gains must be >= 0 dB for {var}")
    if var == "temperature_K" and np.any(grid < 0):
        raise ConfigError("sweep.values: temperatures must be >= 0")
    if var == "gain_db" and kind == "calibrate" and np.any(grid < 0):
        raise ConfigError("sweep.values: gains must be >= 0 dB")
    return var, grid


def parse(data: dict, base_dir=Path("."), source="<scenario>") -> Scenario:
    data = copy.deepcopy(data)
    allowed_top = {"kind", "name", "seed", "sweep", "series", "output", "chains"}
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind: expected one of {', '.join(KINDS)}, got {kind!r}")
    allowed_top.add(kind)
    unknown = sorted(set(data) - allowed_top)
    if unknown:
        raise ConfigError(f"unknown top-level field(s) {', '.join(unknown)}")
    name = data.get("name", Path(source).stem)
    seed = _typed("seed", data.get("seed", 0), I)
    if seed < 0:
        raise ConfigError("seed: must be >= 0")
    params = _section(kind, data.get(kind, {}), SECTIONS[kind])
    var, grid = _grid(data, kind)
    series_key, series_values = None, []
    if "series" in data:
        ser = data["series"]
        if not isinstance(ser, dict) or len(ser) != 1:
            raise ConfigError("series: expected a table with exactly one list-valued key")
        (series_key, series_values), = ser.items()
        if series_key not in SERIES_KEYS.get(kind, ()):
            raise ConfigError(f"series.{series_key}: not a series key for kind {kind!r}")
        if not isinstance(series_values, list) or not series_values:
            raise ConfigError(f"series.{series_key}: expected a non-empty list")
        typ, _, check, desc = SECTIONS[kind][series_key]
        series_values = [_typed(f"series.{series_key}", v, typ) for v in series_values]
        for v in series_values:
            if not check(v):
                raise ConfigError(f"series.{series_key}: value {v!r} out of range (must be {desc})")
    chains = []
    if "chains" in data:
        if kind != "reconstruct":
            raise ConfigError("chains: only used by kind 'reconstruct'")
        if not isinstance(data["chains"], list) or len(data["chains"]) != 2:
            raise ConfigError("chains: expected exactly two [[chains]] tables")
        for i, c in enumerate(data["chains"]):
            ch = _section(f"chains[{i}]", c, CHAIN_FIELDS)
            for k in ("g_sys_linear", "n_sys", "f_hz"):
                if ch[k] is None:
                    raise ConfigError(f"chains[{i}].{k}: missing")
            chains.append(ch)
    elif kind == "reconstruct":
        chains = [dict(g_sys_linear=6.8e6, n_sys=16.1, f_hz=7.23e9, t_int_s=1e-6),
                  dict(g_sys_linear=1.3e7, n_sys=15.7, f_hz=9.707e9, t_int_s=1e-6)]
    output = data.get("output", {})
    if not isinstance(output, dict) or set(output) - {"csv", "json"}:
        raise ConfigError("output: only 'csv' and 'json' file names are allowed")
    if Path(output.get("csv", f"{name}.csv")).with_suffix(".json").name == output.get("json"):
        raise ConfigError("output.json: collides with the CSV metadata sidecar")
    output = {"csv": output.get("csv", f"{name}.csv"),
              "json": output.get("json", f"{name}_result.json")}
    sc = Scenario(kind, name, seed, params, grid, var, series_key, series_values, chains,
                  output, Path(base_dir), data)
    _physics_checks(sc)
    return sc


def _physics_checks(sc: Scenario):
    p = sc.params
    if sc.kind == "tmsq" and not p["f_b_hz"] > p["f_a_hz"]:
        raise ConfigError("tmsq.f_b_hz: must exceed tmsq.f_a_hz")
    if sc.kind == "teleport":
        from .teleport import unity_r_A
        from .gaussian import gain_db_to_r
        bbf = p["beta_bar_f_linear"] if p["k_definition"] == "effective" else 1.0
        t = p["beta_c_linear"] * bbf
        if p["feedforward"] == "unity":
            if p["gain_a_db"] is not None:
                raise ConfigError("teleport.gain_a_db: not allowed with feedforward = 'unity' "
                                  "(the gain is solved); use feedforward = 'fixed'")
            if not t > 0:
                raise ConfigError("teleport.feedforward: unity feedforward unsolvable with "
                                  f"beta_c*beta_bar_f = {t:g}")
        else:
            if p["gain_a_db"] is None:
                raise ConfigError("teleport.gain_a_db: required with feedforward = 'fixed'")
            k = t * np.cosh(gain_db_to_r(p["gain_a_db"])) ** 2
            if abs(k - 1) > 1e-9:
                if t > 0:
                    r_req = unity_r_A(p["beta_c_linear"], bbf)
                    sc.warnings.append(
                        f"teleport: unity feedforward not met (k = {k:.6g}); required "
                        f"r_A = {r_req:.6f} (G_A = {20 * np.log10(np.cosh(r_req)):.4f} dB)")
                else:
                    sc.warnings.append("teleport: unity feedforward unreachable with "
                                       "beta_c*beta_bar_f = 0")
    if sc.kind == "entswap" and p["gain_3_db"] is None:
        if not p["beta_c_linear"] * p["alpha_bar_f_linear"] > 0:
            raise ConfigError("entswap: unity feedforward unsolvable with "
                              "beta_c*alpha_bar_f = 0; set gain_3_db")
    if sc.kind == "calibrate":
        top, bot = p["g_sys_top_linear"], p["g_sys_bottom_linear"]
        if (top is None) != (bot is None):
            raise ConfigError("calibrate: give both g_sys_top_linear and g_sys_bottom_linear")
        if p["input_csv"] is None and sc.sweep is None:
            raise ConfigError("calibrate: need input_csv or a [sweep] for synthetic data")
        if sc.sweep is not None:
            want = "gain_db" if p["sweep_kind"] == "jm_gain_linear" else "temperature_K"
            if sc.sweep_variable != want:
                raise ConfigError(f"sweep.variable: must be {want!r} for sweep_kind "
                                  f"{p['sweep_kind']!r}")
            if sc.sweep.size < 4:
                raise ConfigError("sweep: at least 4 points are needed for a 2-parameter fit")


def load(path) -> Scenario:
    path = resolve_path(path)
    text = path.read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return parse(data, path.parent, str(path))
    except ConfigError as exc:
        raise ConfigError(f"{path}{_line_hint(text, str(exc))}: {exc}") from None


def _line_hint(text, msg):
    """':<line>' of the first line assigning the field named in msg, if found."""
    head = msg.split(":", 1)[0]
    key = head.rsplit(".", 1)[-1].split("[", 1)[0].strip()
    if not key:
        return ""
    pat = re.compile(rf"^\s*(\[+\s*)?{re.escape(key)}\b")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return f":{i}"
    return ""


def bundled_dir():
    return Path(str(resources.files("cvqnet") / "scenarios"))


def list_examples():
    return sorted(p.stem for p in bundled_dir().glob("*.toml"))


def resolve_path(path):
    """A file path, or a bundled example by name (``fig1_model`` or ``examples/fig1_model.toml``)."""
    p = Path(path)
    if p.is_file():
        return p
    cand = bundled_dir() / (p.stem + ".toml")
    if cand.is_file():
        return cand
    raise ConfigError(f"{path}: scenario file not found")
