"""Job configuration: JSON schema validation, defaults and model/selector checks.

A config is ``{"model": {"family": ..., ...}, "job": {"kind": ..., ...}}``.
The shipped schema (``schema/jobconfig.schema.json``) rejects unknown keys and
carries the defaults; the checks here cover what a schema cannot express,
such as site labels that must exist on the built lattice.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any

from jsonschema import Draft202012Validator

from .models import INFINITE, InvalidSpecError, ModelPair, ModelSpec

JOB_KINDS = ("spectrum", "ep-scan", "theorem-check", "evolve", "ladder-analytic")

SELECTOR_FAMILIES = {
    "ring_pair": ("ring_with_hop",),
    "ssh_L": ("ssh_chain",),
    "ssh_R": ("ssh_chain",),
    "cylinder_L_e": ("ssh_cylinder",),
    "cylinder_L_o": ("ssh_cylinder",),
    "stripe": ("ssh_cylinder",),
}

SELECTOR_DEFAULTS = {
    "ring_pair": {"sign": "+", "k": None, "l0": None},
    "cylinder_L_e": {"row_phase": "staggered"},
    "cylinder_L_o": {"row_phase": "staggered"},
    "stripe": {"rows": "odd", "row_phase": "uniform"},
    "vector": {"normalize": True},
}

SELECTOR_KEYS = {
    "site": {"site"},
    "vector": {"amplitudes", "normalize"},
    "ring_pair": {"sign", "k", "l0"},
    "ssh_L": set(),
    "ssh_R": set(),
    "cylinder_L_e": {"row_phase"},
    "cylinder_L_o": {"row_phase"},
    "stripe": {"rows", "row_phase"},
}


@lru_cache(maxsize=1)
def load_schema() -> dict:
    text = resources.files("coalesce").joinpath("schema/jobconfig.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class ConfigIssue:
    path: str
    message: str

    def to_dict(self) -> dict:
        return {"path": self.path, "message": self.message}

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class JobConfig:
    model: ModelSpec
    job: dict
    built: ModelPair | None = field(default=None, repr=False, compare=False)

    @property
    def kind(self) -> str:
        return self.job["kind"]

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "job": copy.deepcopy(self.job)}

    def model_pair(self) -> ModelPair:
        return self.built if self.built is not None else self.model.build()


class ConfigError(ValueError):
    def __init__(self, issues: list[ConfigIssue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


def json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _schema_issues(doc: Any) -> list[ConfigIssue]:
    issues = []
    validator = Draft202012Validator(load_schema())
    for err in validator.iter_errors(doc):
        if err.validator in ("if", "allOf", "then"):
            continue
        path = list(err.absolute_path)
        if err.validator == "additionalProperties" and isinstance(err.instance, dict):
            allowed = set(err.schema.get("properties", {}))
            for key in sorted(set(err.instance) - allowed):
                issues.append(ConfigIssue(json_path(path + [key]), "unknown key"))
            continue
        custom = err.schema.get("x-messages", {}) if isinstance(err.schema, dict) else {}
        msg = custom.get(err.validator)
        if msg is None:
            msg = err.message
            if err.validator == "required":
                msg = f"missing required key {err.message.split(' ')[0]}"
        issues.append(ConfigIssue(json_path(path), msg))
    # the same key can fail several branches; report each path/message once
    seen, unique = set(), []
    for i in sorted(issues, key=lambda i: (i.path, i.message)):
        if (i.path, i.message) not in seen:
            seen.add((i.path, i.message))
            unique.append(i)
    return unique


def _fill_defaults(target: dict, subschema: dict):
    for key, prop in subschema.get("properties", {}).items():
        if key not in target and "default" in prop:
            target[key] = copy.deepcopy(prop["default"])


def _selector_issues(sel: dict | None, where: str, family: str) -> list[ConfigIssue]:
    if sel is None:
        return []
    kind = sel["kind"]
    out = []
    for key in sorted(set(sel) - SELECTOR_KEYS[kind] - {"kind"}):
        out.append(ConfigIssue(f"{where}.{key}", f"not used by selector {kind!r}"))
    fams = SELECTOR_FAMILIES.get(kind)
    if fams and family not in fams:
        out.append(ConfigIssue(f"{where}.kind", f"selector {kind!r} needs family {' or '.join(fams)}"))
    if kind == "site" and "site" not in sel:
        out.append(ConfigIssue(f"{where}.site", "missing site label"))
    if kind == "vector" and "amplitudes" not in sel:
        out.append(ConfigIssue(f"{where}.amplitudes", "missing amplitudes"))
    for k, v in SELECTOR_DEFAULTS.get(kind, {}).items():
        sel.setdefault(k, v)
    return out


def _job_issues(cfg: dict) -> list[ConfigIssue]:
    model, job = cfg["model"], cfg["job"]
    family, kind = model["family"], job["kind"]
    out = []
    if family == "ladder":
        nm = model.get("n_max")
        if nm == INFINITE and kind != "ladder-analytic":
            out.append(ConfigIssue("$.model.n_max", "INFINITE is only allowed for ladder-analytic"))
        elif isinstance(nm, int) and nm > model["N_rungs"] // 2:
            out.append(ConfigIssue("$.model.n_max", "must not exceed N_rungs // 2"))
    if kind == "ep-scan" and family in ("ring",):
        out.append(ConfigIssue("$.model.family", "ring has no coupling to scan"))
    if kind == "evolve":
        times = job["times"]
        if any(b <= a for a, b in zip(times, times[1:])):
            out.append(ConfigIssue("$.job.times", "must be strictly increasing"))
        out += _selector_issues(job["initial_state"], "$.job.initial_state", family)
        out += _selector_issues(job.get("target"), "$.job.target", family)
    if kind == "theorem-check":
        for name in ("A", "B"):
            out += _selector_issues(job.get(name), f"$.job.{name}", family)
        if (job.get("A") is None or job.get("B") is None) and family not in (
            "ssh_chain", "ssh_cylinder", "ring_with_hop", "two_site"
        ):
            out.append(ConfigIssue("$.job", f"family {family!r} has no default A/B; give both"))
    if kind == "ladder-analytic":
        for key in ("J", "n_max"):
            if key not in job:
                if family == "ladder" and key in model:
                    job[key] = model[key]
                else:
                    out.append(ConfigIssue(f"$.job.{key}", "missing (no ladder model to inherit from)"))
        if isinstance(job.get("k_margin"), (int, float)) and job["k_margin"] >= math.pi / 2:
            out.append(ConfigIssue("$.job.k_margin", "must be below pi/2"))
    return out


def parse_overrides(pairs) -> list[tuple[list[str], Any]]:
    """``["model.kappa=0.3", ...]`` to ``(["model", "kappa"], 0.3)`` pairs.

    Values are read as JSON when possible and kept as strings otherwise.
    """
    out = []
    for item in pairs or ():
        if "=" not in item:
            raise ValueError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        out.append((key.strip().split("."), value))
    return out


def apply_overrides(doc: dict, overrides) -> dict:
    doc = copy.deepcopy(doc)
    for keys, value in overrides:
        node = doc
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value
    return doc


def validate(config_text: str | dict, kind: str | None = None, overrides=()) -> JobConfig | list[ConfigIssue]:
    """Parse and check a config; return a ``JobConfig`` or every issue found.

    ``kind`` is the subcommand's job kind; it is filled in when the config
    has no ``job.kind`` and must agree with it otherwise.
    """
    if isinstance(config_text, str):
        try:
            doc = json.loads(config_text)
        except json.JSONDecodeError as exc:
            return [ConfigIssue("$", f"invalid JSON: {exc}")]
    else:
        doc = copy.deepcopy(config_text)
    if isinstance(doc, dict) and overrides:
        doc = apply_overrides(doc, overrides)
    if isinstance(doc, dict) and kind is not None:
        job = doc.setdefault("job", {})
        if isinstance(job, dict):
            if "kind" not in job:
                job["kind"] = kind
            elif job["kind"] != kind:
                return [ConfigIssue("$.job.kind", f"config is for {job['kind']!r}, not {kind!r}")]
    if isinstance(doc, dict) and "job" not in doc:
        return [ConfigIssue("$.job", "missing job (or run through a job subcommand)")] + _schema_issues(doc)
    issues = _schema_issues(doc)
    if issues:
        return issues

    schema = load_schema()["$defs"]
    _fill_defaults(doc["model"], schema[f"family_{doc['model']['family']}"])
    _fill_defaults(doc["job"], schema[f"job_{doc['job']['kind']}"])
    issues = _job_issues(doc)
    if issues:
        return issues

    spec = ModelSpec.from_dict(doc["model"])
    built = None
    if not (doc["model"]["family"] == "ladder" and doc["model"].get("n_max") == INFINITE):
        try:
            built = spec.build()
        except (InvalidSpecError, ValueError) as exc:
            return [ConfigIssue("$.model", str(exc))]
    return JobConfig(spec, doc["job"], built)


def validate_or_raise(config_text, kind=None, overrides=()) -> JobConfig:
    res = validate(config_text, kind, overrides)
    if isinstance(res, list):
        raise ConfigError(res)
    return res


__all__ = [
    "ConfigIssue", "ConfigError", "JobConfig", "JOB_KINDS", "validate", "validate_or_raise",
    "load_schema", "parse_overrides", "apply_overrides", "json_path",
]
