"""Detector model files.

A model is a JSON document.  Every real number is stored twice: as a lossless
``float.hex`` string, which is what loading uses, and as a decimal rendering
for people reading diffs.  Matrices are row-major with an explicit shape.
Output is key-sorted so equal models produce byte-identical files.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .classifier import TrainedTree, TreeNode
from .errors import FormatVersionError, ModelParseError
from .observer import ObserverConfig
from .pipeline import FORMAT_VERSION, DetectorModel
from .sysid import LtiModel
from .timeseries import DelayConfig

KIND = "dmdfault.detector"
DELAY_ORDERING = "newest_first"


def _num(x: float) -> dict:
    x = float(x)
    return {"hex": x.hex(), "value": x if math.isfinite(x) else None}


def _mat(M) -> dict:
    M = np.asarray(M, dtype=float)
    flat = M.reshape(-1)
    return {
        "shape": list(M.shape),
        "hex": [v.hex() for v in flat.tolist()],
        "value": [v if math.isfinite(v) else None for v in flat.tolist()],
    }


def _flat_nodes(tree: TrainedTree) -> list[dict]:
    nodes = list(tree.nodes())
    index = {id(n): i for i, n in enumerate(nodes)}
    out = []
    for n in nodes:
        rec = {"depth": n.depth, "counts": [_num(c) for c in n.counts]}
        if not n.is_leaf:
            rec.update(feature=n.feature, threshold=_num(n.threshold), gain=_num(n.gain),
                       left=index[id(n.left)], right=index[id(n.right)])
        out.append(rec)
    return out


def model_to_dict(model: DetectorModel) -> dict:
    lti, tree = model.lti, model.tree
    return {
        "kind": KIND,
        "format_version": model.format_version,
        "feature_schema": list(model.feature_schema),
        "debounce": model.debounce,
        "cv_accuracy": _num(model.cv_accuracy),
        "lti": {
            "state_channel": lti.state_channel,
            "input_channels": list(lti.input_channels),
            "delay": {"stride": lti.delay_cfg.d, "n_delays": lti.delay_cfg.n_delays,
                      "ordering": DELAY_ORDERING},
            "A": _mat(lti.A),
            "B": _mat(lti.B),
        },
        "observer": {"gain": _num(model.observer_cfg.gain), "window": model.observer_cfg.window},
        "tree": {
            "max_depth": tree.max_depth,
            "feature_names": list(tree.feature_names),
            "importances": _mat(tree.importances),
            "nodes": _flat_nodes(tree),
        },
    }


def dumps(model: DetectorModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, indent=1, allow_nan=False) + "\n"


def save_model(model: DetectorModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------

class _Reader:
    """Typed accessors that report the JSON path of whatever is wrong."""

    def __init__(self, source: str):
        self.source = source

    def fail(self, where: str, msg: str):
        raise ModelParseError(f"{self.source}: {where}: {msg}")

    def get(self, obj, key, where, kind=None):
        if not isinstance(obj, dict):
            self.fail(where, "expected an object")
        if key not in obj:
            self.fail(f"{where}.{key}", "missing")
        v = obj[key]
        if kind is not None and not _is(v, kind):
            self.fail(f"{where}.{key}", f"expected {kind.__name__}, got {type(v).__name__}")
        return v

    def hexfloat(self, s, where) -> float:
        if not isinstance(s, str):
            self.fail(where, "expected a hex float string")
        try:
            return float.fromhex(s)
        except (ValueError, OverflowError):
            self.fail(where, f"bad hex float {s!r}")

    def num(self, obj, where) -> float:
        x = self.hexfloat(self.get(obj, "hex", where), f"{where}.hex")
        dec = self.get(obj, "value", where)
        if not _agrees(x, dec):
            self.fail(where, f"decimal {dec!r} disagrees with hex value {x!r}")
        return x

    def mat(self, obj, where) -> np.ndarray:
        shape = self.get(obj, "shape", where, list)
        if not all(_is(s, int) and s >= 0 for s in shape):
            self.fail(f"{where}.shape", "expected nonnegative integers")
        hexes = self.get(obj, "hex", where, list)
        decs = self.get(obj, "value", where, list)
        size = math.prod(shape)
        if len(hexes) != size or len(decs) != size:
            self.fail(where, f"shape {shape} needs {size} entries, "
                             f"got {len(hexes)} hex and {len(decs)} decimal")
        vals = [self.hexfloat(h, f"{where}.hex[{i}]") for i, h in enumerate(hexes)]
        for i, (x, d) in enumerate(zip(vals, decs)):
            if not _agrees(x, d):
                self.fail(f"{where}.value[{i}]", f"{d!r} disagrees with hex value {x!r}")
        return np.array(vals, dtype=float).reshape(shape)


def _is(v, kind) -> bool:
    if kind is int:
        return isinstance(v, int) and not isinstance(v, bool)
    return isinstance(v, kind)


def _agrees(x: float, dec) -> bool:
    if not math.isfinite(x):
        return dec is None
    if isinstance(dec, bool) or not isinstance(dec, (int, float)):
        return False
    return float(dec) == x


def _tree_from(r: _Reader, t: dict, n_features: int) -> TrainedTree:
    recs = r.get(t, "nodes", "$.tree", list)
    if not recs:
        r.fail("$.tree.nodes", "empty node list")
    nodes = []
    for i, rec in enumerate(recs):
        where = f"$.tree.nodes[{i}]"
        counts = r.get(rec, "counts", where, list)
        if len(counts) != 2:
            r.fail(f"{where}.counts", "expected two class counts")
        c = tuple(r.num(v, f"{where}.counts[{j}]") for j, v in enumerate(counts))
        nodes.append(TreeNode(c, r.get(rec, "depth", where, int)))
    seen = set()
    for i, rec in enumerate(recs):
        if "left" not in rec:
            continue
        where = f"$.tree.nodes[{i}]"
        node = nodes[i]
        node.feature = r.get(rec, "feature", where, int)
        if not 0 <= node.feature < n_features:
            r.fail(f"{where}.feature", f"index {node.feature} outside 0..{n_features - 1}")
        node.threshold = r.num(r.get(rec, "threshold", where), f"{where}.threshold")
        node.gain = r.num(r.get(rec, "gain", where), f"{where}.gain")
        for side in ("left", "right"):
            j = r.get(rec, side, where, int)
            if not i < j < len(nodes) or j in seen:
                r.fail(f"{where}.{side}", f"bad child index {j}")
            seen.add(j)
            setattr(node, side, nodes[j])
    if len(seen) != len(nodes) - 1:
        r.fail("$.tree.nodes", "nodes do not form a single tree")
    return TrainedTree(nodes[0], n_features, r.get(t, "max_depth", "$.tree", int),
                       tuple(r.get(t, "feature_names", "$.tree", list)),
                       r.mat(r.get(t, "importances", "$.tree"), "$.tree.importances"))


def model_from_dict(doc, source: str = "<model>") -> DetectorModel:
    r = _Reader(source)
    if not isinstance(doc, dict):
        r.fail("$", "expected an object")
    version = r.get(doc, "format_version", "$", int)
    if version != FORMAT_VERSION:
        raise FormatVersionError(
            f"{source}: model format version {version} is not supported "
            f"(this build reads version {FORMAT_VERSION})")
    if r.get(doc, "kind", "$") != KIND:
        r.fail("$.kind", f"expected {KIND!r}")
    schema = tuple(r.get(doc, "feature_schema", "$", list))

    lti_doc = r.get(doc, "lti", "$", dict)
    delay = r.get(lti_doc, "delay", "$.lti", dict)
    ordering = r.get(delay, "ordering", "$.lti.delay")
    if ordering != DELAY_ORDERING:
        raise FormatVersionError(f"{source}: delay ordering {ordering!r} is not supported")
    obs_doc = r.get(doc, "observer", "$", dict)
    try:
        delay_cfg = DelayConfig(r.get(delay, "stride", "$.lti.delay", int),
                                r.get(delay, "n_delays", "$.lti.delay", int))
        lti = LtiModel(r.mat(r.get(lti_doc, "A", "$.lti"), "$.lti.A"),
                       r.mat(r.get(lti_doc, "B", "$.lti"), "$.lti.B"),
                       delay_cfg,
                       r.get(lti_doc, "state_channel", "$.lti", str),
                       tuple(r.get(lti_doc, "input_channels", "$.lti", list)))
        obs = ObserverConfig(r.num(r.get(obs_doc, "gain", "$.observer"), "$.observer.gain"),
                             r.get(obs_doc, "window", "$.observer", int))
        tree = _tree_from(r, r.get(doc, "tree", "$", dict), len(schema))
        return DetectorModel(lti, obs, tree, schema, r.get(doc, "debounce", "$", int),
                             r.num(r.get(doc, "cv_accuracy", "$"), "$.cv_accuracy"), version)
    except ModelParseError:
        raise
    except ValueError as exc:
        raise ModelParseError(f"{source}: inconsistent model: {exc}") from None


def loads(text: str, source: str = "<model>") -> DetectorModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return model_from_dict(doc, source)


def load_model(path) -> DetectorModel:
    return loads(Path(path).read_text(encoding="utf-8"), str(path))
