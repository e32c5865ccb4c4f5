"""Versioned JSON documents emitted by the command line, with schemas."""
from __future__ import annotations

import hashlib
import json
import math
import time
from typing import Optional

import jsonschema
import numpy as np

from . import __version__
from .analysis import Analysis
from .errors import InputError, SchemaMismatch
from .federate import SUMMARY_SCHEMA
from .inference import CosineTest, IUTResult, PowerResult

FIT_VERSION = "optmed-fit/1"
TEST_VERSION = "optmed-test/1"
POWER_VERSION = "optmed-power/1"


def number(x):
    """JSON-safe float: infinities become strings, NaN becomes null."""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return x


def vector(v):
    return None if v is None else [number(x) for x in np.asarray(v, dtype=float)]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for block in iter(lambda: fh.read(1 << 16), b""):
                h.update(block)
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc.strerror}") from exc
    return h.hexdigest()


class Manifest:
    """Run metadata; ``finish()`` stamps the elapsed time."""

    def __init__(self, command: str, config: dict, inputs=(), seed: Optional[int] = None):
        self.command = command
        self.config = config
        self.inputs = [{"path": str(p), "sha256": sha256_file(p)} for p in inputs]
        self.seed = seed
        self._t0 = time.perf_counter()
        self.started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())

    def finish(self) -> dict:
        return {
            "command": self.command, "version": __version__, "seed": self.seed,
            "inputs": self.inputs,
            "timing": {"started": self.started,
                       "elapsedSeconds": time.perf_counter() - self._t0},
            "config": self.config,
        }


_NUM = {"type": ["number", "string", "null"]}
_VEC = {"type": ["array", "null"], "items": _NUM}
_MANIFEST = {
    "type": "object",
    "required": ["command", "version", "seed", "inputs", "timing", "config"],
    "properties": {
        "inputs": {"type": "array", "items": {
            "type": "object", "required": ["path", "sha256"],
            "properties": {"path": {"type": "string"},
                           "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"}}}},
        "timing": {"type": "object", "required": ["elapsedSeconds"]},
        "config": {"type": "object"},
    },
}
_TEST = {
    "type": "object",
    "required": ["cosPhi", "T", "df", "pTwoSided", "pConcordant", "pSuppression", "regime"],
    "properties": {"cosPhi": _NUM, "T": _NUM, "df": {"type": "integer"},
                   "pTwoSided": {"type": "number", "minimum": 0, "maximum": 1},
                   "pConcordant": {"type": "number", "minimum": 0, "maximum": 1},
                   "pSuppression": {"type": "number", "minimum": 0, "maximum": 1},
                   "regime": {"enum": ["primal", "dual"]}},
}
_IUT = {
    "type": ["object", "null"],
    "properties": {"pAlpha": _NUM, "pBeta": _NUM, "pValue": _NUM,
                   "dfAlpha": {"type": "array"}, "dfBeta": {"type": "array"}},
}
_PATH = {
    "type": ["object", "null"],
    "properties": {k: _NUM for k in ("alpha", "beta", "h", "tau", "propMediated")},
}

FIT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schemaVersion", "regime", "n", "p", "featureNames", "wPlus", "wMinus",
                 "maxcorW", "pathPlus", "pathMinus", "h", "fstar", "cosPhi", "pathStrength",
                 "test", "degenerate", "manifest"],
    "properties": {
        "schemaVersion": {"const": FIT_VERSION},
        "regime": {"enum": ["primal", "dual"]},
        "n": {"type": "integer"}, "p": {"type": "integer"},
        "featureNames": {"type": "array", "items": {"type": "string"}},
        "wPlus": _VEC, "wMinus": _VEC, "maxcorW": _VEC,
        "pathPlus": _PATH, "pathMinus": _PATH,
        "h": _NUM, "fstar": _NUM, "cosPhi": _NUM, "pathStrength": _NUM,
        "effectTypePlus": {"type": ["string", "null"]},
        "effectTypeMinus": {"type": ["string", "null"]},
        "summary": {"type": ["object", "null"]},
        "test": _TEST, "iut": _IUT, "iutNote": {"type": ["string", "null"]},
        "degenerate": {"type": ["string", "null"]},
        "manifest": _MANIFEST,
    },
}
TEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schemaVersion", "regime", "n", "p", "test", "iut", "manifest"],
    "properties": {
        "schemaVersion": {"const": TEST_VERSION},
        "regime": {"enum": ["primal", "dual"]},
        "n": {"type": "integer"}, "p": {"type": "integer"},
        "test": _TEST, "iut": _IUT, "iutNote": {"type": ["string", "null"]},
        "degenerate": {"type": ["string", "null"]},
        "manifest": _MANIFEST,
    },
}
POWER_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schemaVersion", "mode", "angleDeg", "dim", "df", "alpha", "delta",
                 "critical", "power", "detectable", "manifest"],
    "properties": {
        "schemaVersion": {"const": POWER_VERSION},
        "mode": {"enum": ["primal", "dual"]},
        "angleDeg": {"type": "number"}, "dim": {"type": "integer"},
        "df": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "delta": {"type": "number"}, "critical": {"type": "number"},
        "power": {"type": "number", "minimum": 0, "maximum": 1},
        "detectable": {"type": "boolean"},
        "manifest": _MANIFEST,
    },
}
SCHEMAS = {FIT_VERSION: FIT_SCHEMA, TEST_VERSION: TEST_SCHEMA, POWER_VERSION: POWER_SCHEMA,
           SUMMARY_SCHEMA["properties"]["schemaVersion"]["const"]: SUMMARY_SCHEMA}


def validate(doc: dict) -> None:
    """Check a document against the schema named by its ``schemaVersion``."""
    version = doc.get("schemaVersion")
    if version not in SCHEMAS:
        raise SchemaMismatch(f"unknown schemaVersion {version!r}")
    try:
        jsonschema.validate(doc, SCHEMAS[version])
    except jsonschema.ValidationError as exc:
        raise SchemaMismatch(f"{version} document invalid: {exc.message}") from exc


def dumps(doc: dict) -> str:
    validate(doc)
    return json.dumps(doc, indent=2, allow_nan=False)


def test_block(t: CosineTest) -> dict:
    return {"cosPhi": number(t.cos_phi), "T": number(t.T), "df": t.df,
            "pTwoSided": t.p_two_sided, "pConcordant": t.p_concordant,
            "pSuppression": t.p_suppression, "regime": t.regime}


def iut_block(r: Optional[IUTResult]):
    if r is None:
        return None
    return {"pAlpha": r.p_alpha, "pBeta": r.p_beta, "pValue": r.p_value,
            "dfAlpha": list(r.df_alpha), "dfBeta": list(r.df_beta)}


def _path_block(c):
    if c is None:
        return None
    return {"alpha": number(c.alpha), "beta": number(c.beta), "h": number(c.h),
            "tau": number(c.tau),
            "propMediated": number(c.prop_mediated) if c.prop_mediated_defined else None}


def fit_document(res: Analysis, feature_names, manifest: dict) -> dict:
    fit, mc, sm = res.fit, res.maxcor, res.summary
    summary = None
    if sm is not None:
        summary = {"rMA": number(sm.r_ma), "rMperpY": number(sm.r_mperp_y),
                   "alpha": number(sm.alpha), "beta": number(sm.beta), "h": number(sm.h),
                   "fstar": number(sm.fstar), "tau": number(sm.tau),
                   "propMediated": number(sm.prop_mediated) if sm.prop_mediated_defined else None}
    return {
        "schemaVersion": FIT_VERSION, "regime": res.regime, "n": res.n, "p": res.p,
        "featureNames": list(feature_names),
        "wPlus": vector(fit.w_plus) if fit else None,
        "wMinus": vector(fit.w_minus) if fit else None,
        "maxcorW": vector(mc.w) if mc else None,
        "pathPlus": _path_block(fit.coef_plus) if fit else None,
        "pathMinus": _path_block(fit.coef_minus) if fit else None,
        "h": number(fit.coef_plus.h) if fit else 0.0,
        "fstar": number(mc.fstar) if mc else (number(sm.fstar) if sm else None),
        "cosPhi": number(res.test.cos_phi),
        "pathStrength": number(fit.path_strength) if fit else 0.0,
        "effectTypePlus": fit.effect_type_plus if fit else None,
        "effectTypeMinus": fit.effect_type_minus if fit else None,
        "summary": summary,
        "test": test_block(res.test), "iut": iut_block(res.iut), "iutNote": res.iut_note,
        "degenerate": res.degenerate, "manifest": manifest,
    }


def test_document(res: Analysis, manifest: dict) -> dict:
    return {"schemaVersion": TEST_VERSION, "regime": res.regime, "n": res.n, "p": res.p,
            "test": test_block(res.test), "iut": iut_block(res.iut), "iutNote": res.iut_note,
            "degenerate": res.degenerate, "manifest": manifest}


def power_document(mode: str, angle_deg: float, dim: int, r: PowerResult, critical: float,
                   manifest: dict) -> dict:
    return {"schemaVersion": POWER_VERSION, "mode": mode, "angleDeg": float(angle_deg),
            "dim": int(dim), "df": r.df, "alpha": r.alpha_level, "delta": r.delta,
            "critical": critical, "power": r.power, "detectable": r.detectable,
            "manifest": manifest}
