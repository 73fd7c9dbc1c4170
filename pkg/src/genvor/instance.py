"""Instance files: JSON schema, validation and normalized family construction.

The on-disk instance keeps original coordinates.  Construction maps the
instance bounding box affinely (one uniform scale) into [1/4, 3/4]^d so that
moderate sublevel sets stay inside the unit cube; the transform and the value
scale are retained so reported distances can be mapped back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from jsonschema import Draft202012Validator

from .families import FatBodyError, MultOffsetFamily, NearestFurthestFamily, Scaling2DFamily
from .geometry import Normalizer

INSTANCE_SCHEMA = {
    "type": "object",
    "required": ["family", "dim", "epsilon", "seed", "sites"],
    "properties": {
        "family": {"enum": ["mult_offset", "scaling2d", "nearest_furthest"]},
        "dim": {"type": "integer", "minimum": 1, "maximum": 3},
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 1.0},
        "seed": {"type": "integer"},
        "sites": {"type": "array", "minItems": 1},
    },
    "additionalProperties": False,
}

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 3}

SITE_SCHEMAS = {
    "mult_offset": {
        "type": "object",
        "required": ["point"],
        "properties": {
            "point": _POINT,
            "weight": {"type": "number", "exclusiveMinimum": 0},
            "offset": {"type": "number", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "scaling2d": {
        "type": "object",
        "required": ["center", "vertices"],
        "properties": {
            "center": _POINT,
            "vertices": {"type": "array", "items": _POINT, "minItems": 3},
        },
        "additionalProperties": False,
    },
    "nearest_furthest": {
        "type": "object",
        "required": ["points"],
        "properties": {"points": {"type": "array", "items": _POINT, "minItems": 1}},
        "additionalProperties": False,
    },
}


class InstanceError(ValueError):
    """Schema or consistency violation in an instance file."""


class SiteRejected(ValueError):
    """A site failed geometric validation (exit code 3)."""

    def __init__(self, site_index: int, reason: str, witness=None):
        super().__init__(f"site {site_index}: {reason}")
        self.site_index = site_index
        self.witness = witness


@dataclass
class Instance:
    family_kind: str
    dim: int
    epsilon: float
    seed: int
    sites: list


def parse_instance(doc: dict) -> Instance:
    errs = sorted(Draft202012Validator(INSTANCE_SCHEMA).iter_errors(doc), key=str)
    if errs:
        raise InstanceError("; ".join(e.message for e in errs[:3]))
    kind = doc["family"]
    site_schema = SITE_SCHEMAS[kind]
    for i, site in enumerate(doc["sites"]):
        errs = sorted(Draft202012Validator(site_schema).iter_errors(site), key=str)
        if errs:
            raise InstanceError(f"site {i}: {errs[0].message}")
    dim = int(doc["dim"])
    if kind == "scaling2d" and dim != 2:
        raise InstanceError("scaling2d instances must have dim 2")
    for i, site in enumerate(doc["sites"]):
        pts = _site_points(kind, site)
        if any(len(p) != dim for p in pts):
            raise InstanceError(f"site {i}: coordinate arity differs from dim {dim}")
        if not np.all(np.isfinite(np.asarray(pts, dtype=np.float64))):
            raise InstanceError(f"site {i}: non-finite coordinates")
    return Instance(kind, dim, float(doc["epsilon"]), int(doc["seed"]), list(doc["sites"]))


def _site_points(kind: str, site: dict) -> list:
    if kind == "mult_offset":
        return [site["point"]]
    if kind == "scaling2d":
        return [site["center"]] + list(site["vertices"])
    return list(site["points"])


def build_family(inst: Instance):
    """(family, normalizer, value_scale): family lives in normalized space."""
    all_pts = np.array(
        [p for site in inst.sites for p in _site_points(inst.family_kind, site)],
        dtype=np.float64,
    )
    norm = Normalizer.fit(all_pts)
    if inst.family_kind == "mult_offset":
        pts = norm.forward(np.array([s["point"] for s in inst.sites], dtype=np.float64))
        w = np.array([s.get("weight", 1.0) for s in inst.sites])
        a = np.array([s.get("offset", 0.0) for s in inst.sites]) * norm.scale
        return MultOffsetFamily(pts, w, a), norm, norm.scale
    if inst.family_kind == "scaling2d":
        centers = []
        verts = []
        from .families.scaling2d import fat_check

        for i, s in enumerate(inst.sites):
            c = norm.forward(np.array([s["center"]], dtype=np.float64))[0]
            v = norm.forward(np.array(s["vertices"], dtype=np.float64))
            try:
                fat_check(c, v)
            except FatBodyError as e:
                raise SiteRejected(i, str(e), e.witness) from e
            centers.append(c)
            verts.append(v)
        # scaling distances are similarity-invariant: values need no rescaling
        return Scaling2DFamily(np.array(centers), verts), norm, 1.0
    point_sets = [norm.forward(np.array(s["points"], dtype=np.float64)) for s in inst.sites]
    return NearestFurthestFamily(point_sets, inst.epsilon), norm, norm.scale
