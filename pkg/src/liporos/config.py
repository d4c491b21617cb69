"""Run configuration: a TOML file whose keys may be overridden by CLI flags."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from importlib import resources

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import jsonschema

from .errors import InputError
from .spaces import space_from_dict

COMMANDS = ("analyze-porosity", "density", "extract-balls", "extend", "kr-norm", "decompose", "glue",
            "verify-suite", "example")
EXAMPLES = ("powers", "squares", "annuli", "dust", "fatcantor")
RANDOMIZED = {"analyze-porosity", "verify-suite", "example:annuli"}


@dataclass
class RunConfig:
    command: str
    example: "str | None" = None
    inputs: list = field(default_factory=list)
    space: "dict | None" = None
    h: "float | None" = None
    scales: "list | None" = None
    probes: int = 16
    seed: "int | None" = None
    out: "str | None" = None
    csv: "str | None" = None
    tol: "float | None" = None
    params: dict = field(default_factory=dict)

    @property
    def key(self):
        return f"{self.command}:{self.example}" if self.command == "example" else self.command

    def to_dict(self):
        return asdict(self)

    def validate(self):
        jsonschema.validate(self.to_dict(), load_schema("config"))
        if self.command == "example" and self.example not in EXAMPLES:
            raise InputError(f"example must be one of {', '.join(EXAMPLES)}")
        if self.key in RANDOMIZED and self.seed is None:
            raise InputError(f"{self.key} is randomized and needs --seed")
        if self.scales is not None and (any(s <= 0 for s in self.scales) or list(self.scales) != sorted(self.scales)):
            raise InputError("scales must be positive and sorted")
        if self.space is not None:
            space_from_dict(self.space)
        return self


def load_schema(name):
    text = resources.files("liporos.schemas").joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


_SPACE_RE = re.compile(r"^\s*([a-z]+)\s*(?:\((.*)\))?\s*$")


def parse_space(spec):
    """'euclidean(2,inf)', 'euclidean:2:1', 'heisenberg', 'heisenberg(1e-12)' or a descriptor dict."""
    if spec is None or isinstance(spec, dict):
        return spec
    s = str(spec)
    if ":" in s and "(" not in s:
        kind, *args = s.split(":")
    else:
        m = _SPACE_RE.match(s)
        if not m:
            raise InputError(f"cannot parse space {spec!r}")
        kind = m.group(1)
        args = [a.strip() for a in (m.group(2) or "").split(",") if a.strip()]
    if kind == "euclidean":
        if len(args) not in (1, 2):
            raise InputError("euclidean space needs (dim[, p])")
        p = args[1] if len(args) == 2 else 2
        p = "inf" if str(p).lower() in ("inf", "infinity") else int(p)
        return {"kind": "euclidean", "dim": int(args[0]), "p": p}
    if kind == "heisenberg":
        d = {"kind": "heisenberg"}
        if args:
            d["tol"] = float(args[0])
        return d
    raise InputError(f"unknown space kind {kind!r}")


def load_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"invalid TOML in {path}: {exc}") from None


def build_config(file_values, overrides):
    """Merge TOML values with CLI overrides (non-None overrides win)."""
    merged = dict(file_values)
    params = dict(merged.pop("params", {}))
    params.update(overrides.pop("params", {}) or {})
    for k, v in overrides.items():
        if v is not None:
            merged[k] = v
    if "input" in merged:
        inp = merged.pop("input")
        merged["inputs"] = [inp] if isinstance(inp, str) else list(inp)
    if "command" not in merged:
        raise InputError("no command given")
    merged["space"] = parse_space(merged.get("space"))
    if merged.get("scales") is not None:
        merged["scales"] = [float(s) for s in merged["scales"]]
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(merged) - known
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = RunConfig(params=params, **merged)
    try:
        return cfg.validate()
    except jsonschema.ValidationError as exc:
        raise InputError(f"config invalid: {exc.message}") from None
