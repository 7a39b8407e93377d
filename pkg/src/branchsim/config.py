"""Run configuration: a flat JSON object, with nesting only inside kernel and law descriptors.

Example::

    {"command": "per-run", "norms": [2, 1], "kernel": "born",
     "N": 100, "trials": 10000, "seed": 42}

Kernel descriptors are ``"born"``, ``"cubic"`` or ``{"poly": [c0, c1, ...]}``
(constant term first).  Law descriptors for the consistency command are
``"identity"``, ``{"power": 2}`` or ``{"poly": [...]}``.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass, fields
from typing import Any, Mapping

from .branching import EXPLICIT_LIMIT
from .consistency import MIN_SAMPLES, CandidateLaw, polynomial_law, power_law
from .core import make_spec
from .errors import BranchSimError, ParseError, ValidationError
from .kernels import BORN, CUBIC, PerceptionKernel, polynomial, validate
from .protocols import ScatteringConfig

COMMANDS = ("enumerate", "per-run", "end-only", "compare", "consistency", "rutherford", "kernel-validate")
FORMATS = ("csv", "json")
# used whenever neither flag, BPS_SEED nor the config gives a seed
DEFAULT_SEED = 20240601
SEED_ENV = "BPS_SEED"

KEYS = (
    "command", "norms", "kernel", "N", "trials", "seed", "mode", "rate", "dt",
    "laws", "samples", "grid_points", "output", "format", "threads",
)


@dataclass(frozen=True)
class RunConfig:
    command: str
    norms: tuple[float, ...] | None = None
    kernel: PerceptionKernel = BORN
    N: int | None = None
    trials: int = 1
    seed: int = DEFAULT_SEED
    mode: str | None = None
    rate: float | None = None
    dt: float | None = None
    laws: tuple[CandidateLaw, ...] = ()
    samples: int = MIN_SAMPLES
    grid_points: int = 10_000
    output: str | None = None
    format: str = "csv"
    threads: int = 1

    @property
    def spec(self):
        return make_spec(self.norms)


# --- value coercion -------------------------------------------------------


def _int(value: Any, key: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ValidationError("BadValue", f"{key} must be an integer, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValidationError("BadValue", f"{key} must be an integer, got {value!r}")
        value = int(value)
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValidationError("BadValue", f"{key} must be >= {minimum}, got {value}")
    return value


def _float(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not math.isfinite(value):
        raise ValidationError("BadValue", f"{key} must be a finite number, got {value!r}")
    return float(value)


def _float_list(value: Any, key: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        raise ValidationError("BadValue", f"{key} must be an array of numbers")
    return tuple(_float(v, key) for v in value)


def kernel_from_descriptor(desc: Any) -> PerceptionKernel:
    if isinstance(desc, PerceptionKernel):
        return desc
    if desc in ("born", "born-identity", "identity"):
        return BORN
    if desc in ("cubic", "appendix-b-cubic"):
        return CUBIC
    if isinstance(desc, str):
        stripped = desc.strip()
        if stripped.startswith("{"):
            try:
                return kernel_from_descriptor(json.loads(stripped))
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad kernel descriptor: {exc.msg}", key="kernel") from None
    if isinstance(desc, Mapping) and set(desc) == {"poly"}:
        return polynomial(_float_list(desc["poly"], "kernel.poly"))
    raise ValidationError("BadValue", f"unrecognized kernel descriptor {desc!r}")


def kernel_descriptor(kernel: PerceptionKernel) -> Any:
    if kernel.form == "polynomial":
        return {"poly": list(kernel.coefficients)}
    return kernel.form


def law_from_descriptor(desc: Any) -> CandidateLaw:
    if isinstance(desc, CandidateLaw):
        return desc
    if desc == "identity":
        return CandidateLaw("identity")
    if isinstance(desc, Mapping) and set(desc) == {"power"}:
        return power_law(_float(desc["power"], "laws.power"))
    if isinstance(desc, Mapping) and set(desc) == {"poly"}:
        return polynomial_law(_float_list(desc["poly"], "laws.poly"))
    raise ValidationError("BadValue", f"unrecognized law descriptor {desc!r}")


def law_descriptor(law: CandidateLaw) -> Any:
    if law.form == "identity":
        return "identity"
    if law.form == "power":
        return {"power": law.exponent}
    return {"poly": list(law.coefficients)}


# --- building and validating ---------------------------------------------

_DEFAULTS = {
    "enumerate": {"mode": "aggregate"},
    "per-run": {"N": 100, "trials": 10_000},
    "end-only": {"N": 100, "trials": 1, "mode": "argmax"},
    "compare": {"N": 100, "trials": 10_000},
    "consistency": {"laws": ("identity", {"power": 2.0})},
    "rutherford": {"rate": 100.0, "dt": 1e-4, "trials": 10_000},
    "kernel-validate": {},
}


def config_from_mapping(data: Mapping[str, Any]) -> RunConfig:
    """Validate a decoded key-value mapping into a :class:`RunConfig`."""
    for key in data:
        if key not in KEYS:
            raise ParseError("unknown key", key=key)
    command = data.get("command")
    if command not in COMMANDS:
        raise ValidationError("BadCommand", f"command must be one of {COMMANDS}, got {command!r}")
    merged = {**_DEFAULTS[command], **{k: v for k, v in data.items() if v is not None}}

    kw: dict[str, Any] = {"command": command}
    try:
        if "norms" in merged:
            norms = _float_list(merged["norms"], "norms")
            # rutherford norms are partial solid-angle norms, checked by ScatteringConfig
            kw["norms"] = norms if command == "rutherford" else make_spec(norms).outcome_norms
        if "kernel" in merged:
            kw["kernel"] = kernel_from_descriptor(merged["kernel"])
        if "N" in merged:
            kw["N"] = _int(merged["N"], "N", minimum=1)
        if "trials" in merged:
            kw["trials"] = _int(merged["trials"], "trials", minimum=1)
        if "seed" in merged:
            kw["seed"] = _int(merged["seed"], "seed", minimum=0)
            if kw["seed"] >= 2**64:
                raise ValidationError("BadValue", "seed must fit in 64 bits")
        if "mode" in merged:
            kw["mode"] = str(merged["mode"])
        for key in ("rate", "dt"):
            if key in merged:
                kw[key] = _float(merged[key], key)
        if "laws" in merged:
            laws = merged["laws"]
            if not isinstance(laws, (list, tuple)) or not laws:
                raise ValidationError("BadValue", "laws must be a non-empty array")
            kw["laws"] = tuple(law_from_descriptor(d) for d in laws)
        if "samples" in merged:
            kw["samples"] = _int(merged["samples"], "samples", minimum=MIN_SAMPLES)
        if "grid_points" in merged:
            kw["grid_points"] = _int(merged["grid_points"], "grid_points", minimum=1000)
        if "output" in merged:
            kw["output"] = str(merged["output"])
        if "format" in merged:
            kw["format"] = str(merged["format"])
        if "threads" in merged:
            kw["threads"] = _int(merged["threads"], "threads", minimum=1)
    except (ValidationError, ParseError):
        raise
    except BranchSimError as exc:
        raise ValidationError(type(exc).__name__, str(exc)) from None

    cfg = RunConfig(**kw)
    check_preconditions(cfg)
    return cfg


def _require(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) is None:
            raise ValidationError("MissingKey", f"{cfg.command} needs {name!r}")


def check_preconditions(cfg: RunConfig) -> None:
    """Re-check the preconditions of the operation ``cfg.command`` dispatches to."""
    if cfg.format not in FORMATS:
        raise ValidationError("BadValue", f"format must be one of {FORMATS}")
    c = cfg.command
    if c in ("enumerate", "per-run", "end-only", "compare", "rutherford"):
        _require(cfg, "norms")
    if c in ("enumerate", "per-run", "end-only", "compare"):
        _require(cfg, "N")
    if c in ("per-run", "end-only", "compare", "rutherford") and cfg.kernel.form == "polynomial":
        report = validate(cfg.kernel, cfg.grid_points)
        if not report.valid_2_outcome:
            raise ValidationError("KernelInvalid", "; ".join(report.failures()))
    if c == "enumerate":
        if cfg.mode not in ("explicit", "aggregate"):
            raise ValidationError("BadValue", "enumerate mode must be 'explicit' or 'aggregate'")
        k = len(cfg.norms)
        if cfg.mode == "explicit" and k**cfg.N > EXPLICIT_LIMIT:
            raise ValidationError("TooLargeForExplicit", f"{k}**{cfg.N} paths exceeds {EXPLICIT_LIMIT}")
    if c in ("end-only", "compare"):
        if len(cfg.norms) != 2:
            raise ValidationError("ShapeMismatch", f"{c} needs exactly 2 outcomes")
        if cfg.N < 10:
            raise ValidationError("BadValue", f"{c} needs N >= 10")
    if c == "end-only" and cfg.mode not in ("argmax", "sample"):
        raise ValidationError("BadValue", "end-only mode must be 'argmax' or 'sample'")
    if c == "rutherford":
        _require(cfg, "rate", "dt")
        try:
            ScatteringConfig(cfg.rate, cfg.norms, cfg.dt, cfg.trials, cfg.seed)
        except BranchSimError as exc:
            raise ValidationError(type(exc).__name__, str(exc)) from None
    if c == "consistency" and not cfg.laws:
        raise ValidationError("MissingKey", "consistency needs 'laws'")


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(data, dict):
        raise ParseError("config must be a key-value object", line=1)
    return config_from_mapping(data)


def config_to_mapping(cfg: RunConfig) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if f.name == "kernel":
            value = kernel_descriptor(value)
        elif f.name == "laws":
            if not value:
                continue
            value = [law_descriptor(law) for law in value]
        elif f.name == "norms":
            value = list(value)
        out[f.name] = value
    return out


def emit_config(cfg: RunConfig) -> str:
    from .report import dumps_json

    return dumps_json(config_to_mapping(cfg))

