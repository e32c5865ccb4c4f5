"""Site-level cross-product summaries and their exact pooling.

Sites never centre.  They ship raw sums and cross-products, and the
coordinator centres globally with ``C(U, W) = U'W - (sum U)(sum W)'/N``.
Per-site centring would change the pooled cross-products.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import jsonschema
import numpy as np

from .core_stats import Dataset, SufficientStats, default_feature_names, stats_from_cross_products
from .errors import (FeatureOrderMismatch, InputError, NonFiniteInput, SchemaMismatch,
                     ZeroVarianceColumn)

SCHEMA_VERSION = "optmed-summary/1"
SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10

_ARRAY = {
    "type": "object",
    "required": ["dims", "data"],
    "properties": {
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "data": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}

SUMMARY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schemaVersion", "siteId", "n", "featureNames", "sumX", "sumA", "sumY",
                 "XtX", "XtA", "XtY", "AtA", "AtY", "YtY"],
    "properties": {
        "schemaVersion": {"const": SCHEMA_VERSION},
        "siteId": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "featureNames": {"type": "array", "items": {"type": "string"}},
        "sumX": _ARRAY, "XtX": _ARRAY, "XtA": _ARRAY, "XtY": _ARRAY,
        "sumA": {"type": "number"}, "sumY": {"type": "number"},
        "AtA": {"type": "number"}, "AtY": {"type": "number"}, "YtY": {"type": "number"},
        "manifest": {"type": "object"},
    },
}


@dataclass(frozen=True)
class SiteSummary:
    """Raw (uncentred) sums and cross-products from one site."""

    site_id: str
    n: int
    sum_x: np.ndarray
    sum_a: float
    sum_y: float
    xtx: np.ndarray
    xta: np.ndarray
    xty: np.ndarray
    ata: float
    aty: float
    yty: float
    feature_names: tuple
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"site {self.site_id!r}: count must be positive, got {self.n}")
        p = len(self.feature_names)
        for name, arr, shape in (("sumX", self.sum_x, (p,)), ("XtX", self.xtx, (p, p)),
                                 ("XtA", self.xta, (p,)), ("XtY", self.xty, (p,))):
            if np.shape(arr) != shape:
                raise InputError(f"site {self.site_id!r}: {name} has shape {np.shape(arr)}, "
                                 f"expected {shape}")
        scalars = (self.sum_a, self.sum_y, self.ata, self.aty, self.yty)
        arrays = (self.sum_x, self.xtx, self.xta, self.xty)
        if not (all(np.isfinite(scalars)) and all(np.all(np.isfinite(a)) for a in arrays)):
            raise NonFiniteInput(f"site {self.site_id!r}: non-finite summary entry")

    @property
    def p(self) -> int:
        return len(self.feature_names)

    def fields(self):
        """Additive fields in a fixed order."""
        return (self.n, self.sum_x, self.sum_a, self.sum_y, self.xtx, self.xta, self.xty,
                self.ata, self.aty, self.yty)


def site_extract(X, A, Y, site_id: str = "site-0",
                 feature_names: Optional[Sequence[str]] = None) -> SiteSummary:
    """Raw sums and cross-products of one site's uncentred records."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    A = np.atleast_1d(np.asarray(A, dtype=float))
    Y = np.atleast_1d(np.asarray(Y, dtype=float))
    n, p = X.shape
    if A.shape != (n,) or Y.shape != (n,):
        raise InputError(f"row mismatch: X has {n}, A has {A.size}, Y has {Y.size}")
    for name, arr in (("X", X), ("A", A), ("Y", Y)):
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise NonFiniteInput(f"non-finite entry in {name} at index {tuple(int(i) for i in bad)}")
    names = default_feature_names(p) if feature_names is None else tuple(feature_names)
    if len(names) != p:
        raise InputError(f"{len(names)} feature names for {p} columns")
    xtx = X.T @ X
    return SiteSummary(site_id=str(site_id), n=n, sum_x=X.sum(axis=0), sum_a=float(A.sum()),
                       sum_y=float(Y.sum()), xtx=0.5 * (xtx + xtx.T), xta=X.T @ A, xty=X.T @ Y,
                       ata=float(A @ A), aty=float(A @ Y), yty=float(Y @ Y),
                       feature_names=names)


def extract_dataset(d: Dataset, site_id: str = "site-0") -> SiteSummary:
    return site_extract(d.X, d.A, d.Y, site_id, d.feature_names)


def _tree_sum(items: list):
    # pairwise reduction in a fixed order keeps the rounding reproducible
    while len(items) > 1:
        nxt = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def _check_compatible(summaries: Sequence[SiteSummary]) -> None:
    if not summaries:
        raise InputError("combine needs at least one site summary")
    ref = summaries[0]
    ids = [s.site_id for s in summaries]
    if len(set(ids)) != len(ids):
        raise SchemaMismatch(f"duplicate site ids: {sorted(ids)}")
    for s in summaries:
        if s.schema_version != SCHEMA_VERSION:
            raise SchemaMismatch(f"site {s.site_id!r} has schema {s.schema_version!r}, "
                                 f"expected {SCHEMA_VERSION!r}")
        if s.feature_names != ref.feature_names:
            if sorted(s.feature_names) == sorted(ref.feature_names):
                raise FeatureOrderMismatch(
                    f"site {s.site_id!r} lists the features in a different order than "
                    f"site {ref.site_id!r}")
            raise SchemaMismatch(f"site {s.site_id!r} has a different feature set than "
                                 f"site {ref.site_id!r}")


def pool(summaries: Sequence[SiteSummary]) -> SiteSummary:
    """Field-wise totals, summed in site-id order."""
    _check_compatible(summaries)
    ordered = sorted(summaries, key=lambda s: s.site_id)
    totals = [_tree_sum([s.fields()[k] for s in ordered]) for k in range(10)]
    n, sum_x, sum_a, sum_y, xtx, xta, xty, ata, aty, yty = totals
    return SiteSummary(site_id="+".join(s.site_id for s in ordered), n=int(n), sum_x=sum_x,
                       sum_a=float(sum_a), sum_y=float(sum_y), xtx=xtx, xta=xta, xty=xty,
                       ata=float(ata), aty=float(aty), yty=float(yty),
                       feature_names=ordered[0].feature_names)


def combine(summaries: Sequence[SiteSummary], standardise: bool = False) -> SufficientStats:
    """Pooled, globally centred sufficient statistics.

    With ``standardise=True`` mediators are scaled by the pooled sample sd
    (divisor N - 1) derived from the centred diagonal of ``X'X``.
    """
    t = pool(summaries)
    N = t.n
    cxx = t.xtx - np.outer(t.sum_x, t.sum_x) / N
    cxa = t.xta - t.sum_x * t.sum_a / N
    cxy = t.xty - t.sum_x * t.sum_y / N
    caa = t.ata - t.sum_a**2 / N
    cay = t.aty - t.sum_a * t.sum_y / N
    cyy = t.yty - t.sum_y**2 / N
    if standardise:
        if N < 2:
            raise InputError("pooled standardisation needs N >= 2")
        var = np.diag(cxx) / (N - 1)
        if np.any(var <= 0):
            raise ZeroVarianceColumn(t.feature_names[int(np.flatnonzero(var <= 0)[0])])
        inv = 1.0 / np.sqrt(var)
        cxx = cxx * np.outer(inv, inv)
        cxa, cxy = cxa * inv, cxy * inv
    return stats_from_cross_products(cxx, cxa, cxy, caa, cay, cyy, N, t.feature_names)


# JSON ------------------------------------------------------------------------

def _pack(arr) -> dict:
    arr = np.asarray(arr, dtype=float)
    return {"dims": list(arr.shape), "data": [float(v) for v in arr.ravel()]}


def _unpack(obj: dict, name: str) -> np.ndarray:
    dims = obj["dims"]
    data = np.asarray(obj["data"], dtype=float)
    if int(np.prod(dims)) != data.size:
        raise SchemaMismatch(f"{name}: dims {dims} do not match {data.size} entries")
    return data.reshape(dims)


def summary_to_dict(s: SiteSummary, manifest: Optional[dict] = None) -> dict:
    doc = {
        "schemaVersion": s.schema_version, "siteId": s.site_id, "n": int(s.n),
        "featureNames": list(s.feature_names),
        "sumX": _pack(s.sum_x), "sumA": float(s.sum_a), "sumY": float(s.sum_y),
        "XtX": _pack(s.xtx), "XtA": _pack(s.xta), "XtY": _pack(s.xty),
        "AtA": float(s.ata), "AtY": float(s.aty), "YtY": float(s.yty),
    }
    if manifest is not None:
        doc["manifest"] = manifest
    return doc


def summary_from_dict(doc: dict) -> SiteSummary:
    """Validate against the schema, then re-check symmetry and PSD."""
    if doc.get("schemaVersion") != SCHEMA_VERSION:
        raise SchemaMismatch(f"unsupported schemaVersion {doc.get('schemaVersion')!r}")
    try:
        jsonschema.validate(doc, SUMMARY_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaMismatch(f"summary document invalid: {exc.message}") from exc
    xtx = _unpack(doc["XtX"], "XtX")
    scale = max(float(np.max(np.abs(xtx))) if xtx.size else 0.0, 1.0)
    if xtx.ndim != 2 or xtx.shape[0] != xtx.shape[1]:
        raise SchemaMismatch(f"XtX must be square, got dims {list(xtx.shape)}")
    if np.max(np.abs(xtx - xtx.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise SchemaMismatch("XtX is not symmetric")
    xtx = 0.5 * (xtx + xtx.T)
    if xtx.size and np.linalg.eigvalsh(xtx)[0] < -PSD_TOL * scale:
        raise SchemaMismatch("XtX is not positive semi-definite")
    return SiteSummary(
        site_id=doc["siteId"], n=doc["n"], sum_x=_unpack(doc["sumX"], "sumX"),
        sum_a=float(doc["sumA"]), sum_y=float(doc["sumY"]), xtx=xtx,
        xta=_unpack(doc["XtA"], "XtA"), xty=_unpack(doc["XtY"], "XtY"),
        ata=float(doc["AtA"]), aty=float(doc["AtY"]), yty=float(doc["YtY"]),
        feature_names=tuple(doc["featureNames"]), schema_version=doc["schemaVersion"],
    )


def dumps_summary(s: SiteSummary, manifest: Optional[dict] = None) -> str:
    # json writes floats with repr, which round-trips exactly
    return json.dumps(summary_to_dict(s, manifest), indent=2, allow_nan=False)


def loads_summary(text: str) -> SiteSummary:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"summary is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaMismatch("summary document must be a JSON object")
    return summary_from_dict(doc)
