"""Experiment documents (JSON) and their translation to :class:`RunConfig`."""

from __future__ import annotations

import copy
import json
import logging
from pathlib import Path

import jsonschema

from .core import (
    EvalSpec,
    GaussianMarginal,
    InitPolicy,
    LAWGDBackendSpec,
    PushforwardMarginal,
    RunConfig,
    SVGDBackendSpec,
    Weights,
    make_map,
)
from .dynamics import DEFAULT_ALPHA, DEFAULT_ALPHA_MAX, DEFAULT_DOUBLING_PERIOD, DEFAULT_H
from .dynamics import AdaGradSchedule, DoublingSchedule, FixedSchedule

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    def __init__(self, message, path=()):
        where = "/".join(str(p) for p in path)
        super().__init__(f"{where}: {message}" if where else message)
        self.path = tuple(path)


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vector = {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 1}]}
_matrix = {
    "oneOf": [
        _pos,
        {"type": "array", "items": _num, "minItems": 1},
        {"type": "array", "items": {"type": "array", "items": _num}, "minItems": 1},
    ]
}
_gauss = {
    "type": "object",
    "properties": {"kind": {"const": "gaussian"}, "mean": _vector, "cov": _matrix},
    "required": ["mean", "cov"],
    "additionalProperties": False,
}
_map = {
    "oneOf": [
        {"enum": ["identity", "arctan"]},
        {
            "type": "object",
            "properties": {"kind": {"enum": ["identity", "arctan"]}},
            "required": ["kind"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"kind": {"const": "affine"}, "scale": _pos, "shift": _num},
            "required": ["kind", "scale"],
            "additionalProperties": False,
        },
    ]
}
_pushforward = {
    "type": "object",
    "properties": {"kind": {"const": "pushforward"}, "base": _gauss, "map": _map},
    "required": ["kind", "base", "map"],
    "additionalProperties": False,
}
_int_pos = {"type": "integer", "minimum": 1}

SCHEMA = {
    "type": "object",
    "properties": {
        "marginals": {
            "type": "array",
            "minItems": 1,
            "items": {"oneOf": [dict(_gauss, required=["kind", "mean", "cov"]), _pushforward]},
        },
        "weights": {"type": "array", "items": _pos},
        "n_particles": _int_pos,
        "backend": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {
                        "kind": {"const": "svgd"},
                        "bandwidth": {"oneOf": [_pos, {"const": "median"}]},
                        "recompute_every": _int_pos,
                    },
                    "required": ["kind"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "kind": {"const": "lawgd"},
                        "a": {"type": ["number", "null"]},
                        "b": {"type": ["number", "null"]},
                        "M": {"type": "integer", "minimum": 64},
                        "K": _int_pos,
                    },
                    "required": ["kind"],
                    "additionalProperties": False,
                },
            ]
        },
        "schedule": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {"kind": {"const": "fixed"}, "alpha": {"type": "number", "minimum": 0}, "h": _pos},
                    "required": ["kind", "alpha", "h"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "kind": {"const": "doubling"},
                        "alpha0": {"type": "number", "minimum": 0},
                        "h0": _pos,
                        "period": _int_pos,
                        "alpha_max": _pos,
                    },
                    "required": ["kind"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "kind": {"const": "adagrad"},
                        "alpha": {"type": "number", "minimum": 0},
                        "eta": _pos,
                        "eps": _pos,
                    },
                    "required": ["kind"],
                    "additionalProperties": False,
                },
            ]
        },
        "iterations": _int_pos,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "init": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {"kind": {"const": "from-marginals"}},
                    "required": ["kind"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {"kind": {"const": "common"}, "mean": _vector, "cov": _matrix},
                    "required": ["kind", "mean", "cov"],
                    "additionalProperties": False,
                },
            ]
        },
        "eval": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "properties": {
                        "kind": {"enum": ["gaussian-oracle", "gaussian"]},
                        "mean": _vector,
                        "cov": _matrix,
                        "reference_size": _int_pos,
                        "every": _int_pos,
                    },
                    "required": ["kind"],
                    "additionalProperties": False,
                },
            ]
        },
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}, "stride": {"type": "integer", "minimum": 0}},
            "additionalProperties": False,
        },
        "version": {"type": "string"},
    },
    "required": ["marginals"],
    "additionalProperties": False,
}

DEFAULTS = {
    "n_particles": 100,
    "backend": {"kind": "svgd", "bandwidth": 1.0, "recompute_every": 1},
    "schedule": {
        "kind": "doubling",
        "alpha0": DEFAULT_ALPHA,
        "h0": DEFAULT_H,
        "period": DEFAULT_DOUBLING_PERIOD,
        "alpha_max": DEFAULT_ALPHA_MAX,
    },
    "iterations": 1000,
    "seed": 0,
    "init": {"kind": "from-marginals"},
    "eval": None,
    "output": {"dir": "out", "stride": 0},
}

_SUB_DEFAULTS = {
    ("backend", "svgd"): {"bandwidth": 1.0, "recompute_every": 1},
    ("backend", "lawgd"): {"a": None, "b": None, "M": 1024, "K": 64},
    ("schedule", "doubling"): {
        "alpha0": DEFAULT_ALPHA,
        "h0": DEFAULT_H,
        "period": DEFAULT_DOUBLING_PERIOD,
        "alpha_max": DEFAULT_ALPHA_MAX,
    },
    ("schedule", "adagrad"): {"alpha": DEFAULT_ALPHA, "eta": DEFAULT_H, "eps": 1e-8},
    ("eval", "gaussian-oracle"): {"reference_size": 10_000, "every": 1},
    ("eval", "gaussian"): {"reference_size": 10_000, "every": 1},
}


def _validate(doc):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        # oneOf failures hide the useful message in the best-matching branch.
        best = jsonschema.exceptions.best_match(errors)
        raise ConfigError(best.message, best.absolute_path or err.absolute_path)


def resolve_document(doc):
    """Validate a document and fill in defaults (each one is logged)."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    _validate(doc)
    doc = copy.deepcopy(doc)
    doc.pop("version", None)
    for key, value in DEFAULTS.items():
        if key not in doc:
            log.info("default %s = %s", key, json.dumps(value))
            doc[key] = copy.deepcopy(value)
    n = len(doc["marginals"])
    if "weights" not in doc:
        doc["weights"] = Weights.uniform(n).values.tolist()
        log.info("default weights = %s", doc["weights"])
    for section in ("backend", "schedule", "eval"):
        sub = doc.get(section)
        if not sub:
            continue
        for key, value in _SUB_DEFAULTS.get((section, sub["kind"]), {}).items():
            if key not in sub:
                log.info("default %s.%s = %s", section, key, json.dumps(value))
                sub[key] = value
    for key, value in DEFAULTS["output"].items():
        if key not in doc["output"]:
            log.info("default output.%s = %s", key, json.dumps(value))
            doc["output"][key] = value
    for m in doc["marginals"]:
        if m["kind"] == "pushforward":
            m["base"].setdefault("kind", "gaussian")
            if isinstance(m["map"], str):
                m["map"] = {"kind": m["map"]}
    return doc


def _marginal(desc, path):
    try:
        if desc["kind"] == "gaussian":
            return GaussianMarginal(desc["mean"], desc["cov"])
        base = GaussianMarginal(desc["base"]["mean"], desc["base"]["cov"])
        return PushforwardMarginal(base, make_map(desc["map"]))
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None


def _schedule(desc):
    kind = desc["kind"]
    if kind == "fixed":
        return FixedSchedule(desc["alpha"], desc["h"])
    if kind == "doubling":
        return DoublingSchedule(desc["alpha0"], desc["h0"], desc["period"], desc["alpha_max"])
    return AdaGradSchedule(desc["alpha"], desc["eta"], desc["eps"])


def _tuple(v):
    if isinstance(v, list):
        return tuple(_tuple(x) for x in v)
    return v


def build_config(doc):
    """Resolve a document and build the :class:`RunConfig` it describes."""
    doc = resolve_document(doc)
    marginals = [_marginal(m, ("marginals", i)) for i, m in enumerate(doc["marginals"])]
    try:
        weights = Weights(doc["weights"])
    except ValueError as exc:
        raise ConfigError(str(exc), ("weights",)) from None
    b = doc["backend"]
    if b["kind"] == "svgd":
        backend = SVGDBackendSpec(b["bandwidth"], b["recompute_every"])
    else:
        backend = LAWGDBackendSpec(b["a"], b["b"], b["M"], b["K"])
        if b["K"] >= b["M"]:
            raise ConfigError(f"K={b['K']} must be smaller than M={b['M']}", ("backend", "K"))
    init = doc["init"]
    init = InitPolicy(init["kind"], _tuple(init.get("mean")), _tuple(init.get("cov")))
    ev = doc["eval"]
    if ev is not None and ev["kind"] == "gaussian" and not ("mean" in ev and "cov" in ev):
        raise ConfigError("a gaussian reference needs mean and cov", ("eval",))
    if ev is not None:
        ev = EvalSpec(ev["kind"], _tuple(ev.get("mean")), _tuple(ev.get("cov")), ev["reference_size"], ev["every"])
    try:
        config = RunConfig(
            marginals=marginals,
            weights=weights,
            n_particles=doc["n_particles"],
            backend=backend,
            schedule=_schedule(doc["schedule"]),
            iterations=doc["iterations"],
            seed=doc["seed"],
            init=init,
            eval=ev,
            stride=doc["output"]["stride"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if backend.kind == "lawgd" and config.dim != 1:
        raise ConfigError("the lawgd backend requires one-dimensional marginals", ("backend",))
    return config, doc


def load_document(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def parse_config(path):
    """Read a JSON experiment document; returns ``(RunConfig, resolved document)``."""
    return build_config(load_document(path))


def config_document(config, output_dir="out"):
    """Inverse of :func:`build_config`: the resolved document of a RunConfig."""
    b = config.backend
    if b.kind == "svgd":
        backend = {"kind": "svgd", "bandwidth": b.bandwidth, "recompute_every": b.recompute_every}
    else:
        backend = {"kind": "lawgd", "a": b.a, "b": b.b, "M": b.M, "K": b.K}
    init = {"kind": config.init.kind}
    if config.init.kind == "common":
        init.update(mean=_listify(config.init.mean), cov=_listify(config.init.cov))
    ev = None
    if config.eval is not None:
        ev = {"kind": config.eval.kind, "reference_size": config.eval.reference_size, "every": config.eval.every}
        if config.eval.kind == "gaussian":
            ev.update(mean=_listify(config.eval.mean), cov=_listify(config.eval.cov))
    return {
        "marginals": [m.to_dict() for m in config.marginals],
        "weights": config.weights.values.tolist(),
        "n_particles": config.n_particles,
        "backend": backend,
        "schedule": config.schedule.to_dict(),
        "iterations": config.iterations,
        "seed": config.seed,
        "init": init,
        "eval": ev,
        "output": {"dir": str(output_dir), "stride": config.stride},
    }


def _listify(v):
    if isinstance(v, tuple):
        return [_listify(x) for x in v]
    return v
