"""Run configuration: flat ``key = value`` text with dotted section keys.

Example::

    model = single_spin
    single_spin.theta = pi/2
    bath.G = 0.1
    bath.omega_c = 10
    bath.beta = 10
    protocols = selective:1, nonselective:3
    grid.tau_min = 0.02
    grid.tau_max = 3
    grid.count = 150
    grid.spacing = log

Blank lines and ``#`` comments are ignored. Unknown keys are rejected.
A JSON document with a ``config`` object of the same keys (as written into
run sidecars) is accepted as well.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .analysis import GridSpec
from .bath import OhmicBath
from .chain import MeasurementKind
from .errors import CapacityError, ValidationError
from .models import LargeSpinParams, SingleSpinParams, SpinBathParams

PRESET_IDS = ("fig1a", "fig1b", "fig2a", "fig2a_inset", "fig2b", "fig3a", "fig3b")

_COMMON_KEYS = {"description", "model", "protocols", "grid.tau_min", "grid.tau_max",
                "grid.count", "grid.spacing", "output.path", "output.format"}
_BATH_KEYS = {"bath.G", "bath.omega_c", "bath.beta"}
_MODEL_KEYS = {
    "single_spin": {"single_spin.theta", "single_spin.phi", "single_spin.omega0"} | _BATH_KEYS,
    "spin_bath": {"spin_bath.epsilon", "spin_bath.delta_tunneling", "spin_bath.N",
                  "spin_bath.epsilon_i", "spin_bath.g_i", "spin_bath.beta"},
    "large_spin": {"large_spin.J", "large_spin.omega0"} | _BATH_KEYS,
}
_DEFAULTS = {
    "single_spin.phi": "0",
    "single_spin.omega0": "1",
    "large_spin.J": "1",
    "large_spin.omega0": "1",
    "output.format": "csv",
}
_PI_RE = re.compile(r"^\s*([-+]?[0-9.eE+-]*)\s*\*?\s*pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


class ConfigError(ValidationError):
    """Configuration problem tied to a key and, for text files, a line number."""

    def __init__(self, message, key=None, line=None, kind="validation"):
        self.key = key
        self.line = line
        self.kind = kind
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.message = message

    def to_dict(self):
        return {"key": self.key, "line": self.line, "kind": self.kind, "message": self.message}


@dataclass(frozen=True)
class RunConfig:
    model: object
    bath: OhmicBath | None
    protocols: tuple
    grid: GridSpec
    output_format: str = "csv"
    output_path: str | None = None
    description: str = ""
    source: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def model_id(self) -> str:
        return self.model.model_id

    def with_overrides(self, *, grid=None, output_format=None, output_path=None) -> "RunConfig":
        flat = self.to_flat()
        if grid is not None:
            flat.update({"grid.tau_min": _num(grid.tau_min), "grid.tau_max": _num(grid.tau_max),
                         "grid.count": str(int(grid.count)), "grid.spacing": grid.spacing})
        if output_format is not None:
            flat["output.format"] = output_format
        if output_path is not None:
            flat["output.path"] = str(output_path)
        return from_flat(flat)

    def to_flat(self) -> dict:
        """Fully resolved configuration as canonical strings, in a fixed key order."""
        out = {}
        if self.description:
            out["description"] = self.description
        out["model"] = self.model_id
        m = self.model
        if isinstance(m, SingleSpinParams):
            out.update({"single_spin.theta": _num(m.theta), "single_spin.phi": _num(m.phi),
                        "single_spin.omega0": _num(m.omega0)})
        elif isinstance(m, SpinBathParams):
            out.update({
                "spin_bath.epsilon": _num(m.epsilon),
                "spin_bath.delta_tunneling": _num(m.delta_tunneling),
                "spin_bath.N": str(int(m.N)),
                "spin_bath.epsilon_i": _nums(m.epsilon_i),
                "spin_bath.g_i": _nums(m.g_i),
                "spin_bath.beta": _num(m.beta),
            })
        else:
            out.update({"large_spin.J": _num(m.J), "large_spin.omega0": _num(m.omega0)})
        if self.bath is not None:
            out.update({"bath.G": _num(self.bath.G), "bath.omega_c": _num(self.bath.omega_c),
                        "bath.beta": _num(self.bath.beta)})
        out["protocols"] = ", ".join(f"{k.value}:{M}" for M, k in self.protocols)
        g = self.grid
        out.update({"grid.tau_min": _num(g.tau_min), "grid.tau_max": _num(g.tau_max),
                    "grid.count": str(int(g.count)), "grid.spacing": g.spacing})
        out["output.format"] = self.output_format
        if self.output_path:
            out["output.path"] = self.output_path
        return out


def _num(x) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf"
    return repr(x)


def _nums(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_num(x) for x in v)
    return _num(v)


def parse_float(text: str) -> float:
    """Float literal, ``inf``, or a multiple of pi such as ``pi/2`` or ``0.5*pi``."""
    s = text.strip()
    m = _PI_RE.match(s)
    if m:
        coef = m.group(1)
        if coef in ("", "+"):
            c = 1.0
        elif coef == "-":
            c = -1.0
        else:
            c = float(coef)
        d = float(m.group(2)) if m.group(2) else 1.0
        return c * math.pi / d
    value = float(s)
    if math.isnan(value):
        raise ValueError("nan is not allowed")
    return value


def parse_text(text: str) -> tuple[dict, dict]:
    """Split config text into ``{key: raw value}`` and ``{key: line number}``."""
    values, lines = {}, {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=n, kind="parse")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.split(" #", 1)[0].strip()
        if not key:
            raise ConfigError("empty key", line=n, kind="parse")
        if key in values:
            raise ConfigError("duplicate key", key=key, line=n, kind="parse")
        values[key] = value
        lines[key] = n
    return values, lines


def _parse_protocols(text):
    out = []
    for item in (p.strip() for p in text.split(",")):
        if not item:
            continue
        kind, _, M = item.partition(":")
        kind = kind.strip().lower().replace("-", "")
        if kind not in ("selective", "nonselective"):
            raise ValueError(f"unknown protocol kind {kind!r}")
        M = int(M) if M.strip() else 1
        if M < 1:
            raise ValueError("M must be >= 1")
        out.append((M, MeasurementKind(kind)))
    if not out:
        raise ValueError("at least one protocol is required")
    return tuple(out)


def from_flat(values: dict, lines: dict | None = None) -> RunConfig:
    """Validate raw key/value pairs and build a :class:`RunConfig`."""
    lines = lines or {}
    values = {k: str(v) for k, v in values.items()}

    def err(msg, key, kind="validation"):
        return ConfigError(msg, key=key, line=lines.get(key), kind=kind)

    model_id = values.get("model")
    if model_id is None:
        raise err("missing required key", "model")
    if model_id not in _MODEL_KEYS:
        raise err(f"unknown model {model_id!r}; expected one of {sorted(_MODEL_KEYS)}", "model")
    allowed = _COMMON_KEYS | _MODEL_KEYS[model_id]
    for key in values:
        if key not in allowed:
            raise err("unknown key for model " + model_id, key, kind="unknown_key")
    merged = {**{k: v for k, v in _DEFAULTS.items() if k in allowed}, **values}
    for key in sorted(allowed - {"description", "output.path"}):
        if key not in merged:
            raise err("missing required key", key)

    def get(key, conv=parse_float):
        try:
            return conv(merged[key])
        except (ValueError, TypeError) as exc:
            raise err(f"cannot parse {merged[key]!r}: {exc}", key, kind="parse") from None

    def get_int(key):
        def conv(s):
            f = float(s)
            if f != int(f):
                raise ValueError("expected an integer")
            return int(f)
        return get(key, conv)

    def get_couplings(key):
        parts = [p for p in merged[key].split(",") if p.strip()]
        try:
            vals = [parse_float(p) for p in parts]
        except ValueError as exc:
            raise err(f"cannot parse {merged[key]!r}: {exc}", key, kind="parse") from None
        if len(vals) == 1:
            return vals[0]
        return tuple(vals)

    def build(factory, keys, *args):
        try:
            return factory(*args)
        except ValidationError as exc:
            msg = str(exc)
            key = next((k for k in keys if k in msg), keys[0] if keys else None)
            kind = "capacity" if isinstance(exc, CapacityError) else "validation"
            raise err(msg, key, kind=kind) from None

    bath = None
    if model_id == "single_spin":
        model = build(SingleSpinParams, ["single_spin.theta", "single_spin.phi", "single_spin.omega0"],
                      get("single_spin.theta"), get("single_spin.phi"), get("single_spin.omega0"))
    elif model_id == "large_spin":
        model = build(LargeSpinParams, ["large_spin.J", "large_spin.omega0"],
                      get("large_spin.J"), get("large_spin.omega0"))
        if model.J != 1:
            raise err("survival closed forms are only available for J = 1", "large_spin.J")
    else:
        keys = ["spin_bath.N", "spin_bath.epsilon_i", "spin_bath.g_i", "spin_bath.beta",
                "spin_bath.epsilon", "spin_bath.delta_tunneling"]
        model = build(SpinBathParams, keys,
                      get("spin_bath.epsilon"), get("spin_bath.delta_tunneling"),
                      get_int("spin_bath.N"), get_couplings("spin_bath.epsilon_i"),
                      get_couplings("spin_bath.g_i"), get("spin_bath.beta"))
        if model.epsilon == 0 and model.delta_tunneling == 0:
            raise err("epsilon and delta_tunneling cannot both vanish", "spin_bath.epsilon")
    if model_id in ("single_spin", "large_spin"):
        bath = build(OhmicBath, ["bath.G", "bath.omega_c", "bath.beta"],
                     get("bath.G"), get("bath.omega_c"), get("bath.beta"))

    protocols = get("protocols", _parse_protocols)
    grid = build(GridSpec, ["grid.count", "grid.spacing", "grid.tau_min", "grid.tau_max"],
                 get("grid.tau_min"), get("grid.tau_max"), get_int("grid.count"),
                 merged["grid.spacing"])
    fmt = merged["output.format"]
    if fmt not in ("csv", "json"):
        raise err(f"output.format must be 'csv' or 'json', got {fmt!r}", "output.format")
    return RunConfig(model=model, bath=bath, protocols=protocols, grid=grid,
                     output_format=fmt, output_path=merged.get("output.path") or None,
                     description=merged.get("description", ""), source=dict(values))


def loads(text: str) -> RunConfig:
    """Parse config text; JSON (a run sidecar or a bare key map) is detected by a leading brace."""
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno, kind="parse") from None
        flat = doc.get("config", doc) if isinstance(doc, dict) else None
        if not isinstance(flat, dict):
            raise ConfigError("JSON config must be an object", kind="parse")
        return from_flat(flat)
    values, lines = parse_text(text)
    return from_flat(values, lines)


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", kind="io") from None
    return loads(text)


def preset_text(preset_id: str) -> str:
    if preset_id not in PRESET_IDS:
        raise ConfigError(f"unknown preset {preset_id!r}; available: {', '.join(PRESET_IDS)}",
                          kind="unknown_preset")
    return resources.files("qzeno.presets").joinpath(f"{preset_id}.conf").read_text(encoding="utf-8")


def load_preset(preset_id: str) -> RunConfig:
    return loads(preset_text(preset_id))
