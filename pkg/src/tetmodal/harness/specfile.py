"""Problem-spec files: a small YAML schema with position-annotated errors.

A spec looks like::

    schema_version: "1"
    spacing: [1.0, 1.0, 1.0]
    seed: 0
    transform:
      rotation: -45.0
      maps:
      - {kind: identity}
      - {kind: power, gamma: 2.0}
    root:
      primitive:
        box: {min: [0.0, -1.0, 0.0], max: [4.0, 1.0, 1.0]}
        optima:
        - {position: [1.0, 0.0], base_value: 0.0, slope: 1.0, rank: 1, persists_at_top: true}
        - {position: [3.0, 0.0], base_value: 0.5, slope: 0.5, rank: 0}
      children:
      - anchor: major
        rotation: 90
        scale: 0.25
        node: {}

Every key is optional except ``schema_version``; omitted parts fall back to the
standard primitive and the default transform. Structural problems (unknown
keys, wrong types) raise ``SpecParseError`` with the offending line and
column. Semantic checks are left to the library, which raises ``SpecError``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from yaml.constructor import SafeConstructor
from yaml.nodes import MappingNode, Node, ScalarNode, SequenceNode

from ..errors import SpecParseError
from ..mesh import Box3
from ..nesting import ChildPlacement, NestingNode
from ..primitive import STANDARD_BOX, Optimum, PrimitiveSpec
from ..transform import MAP_PARAMS, MonotoneMap, TransformChain

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class ProblemSpecFile:
    root: NestingNode = field(default_factory=NestingNode)
    transform: TransformChain = field(default_factory=TransformChain)
    seed: int = 0
    schema_version: str = SCHEMA_VERSION

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self.root.primitive.spacing

    def with_spacing(self, spacing) -> "ProblemSpecFile":
        prim = self.root.primitive
        node = NestingNode(PrimitiveSpec(prim.box, prim.optima, tuple(spacing)), self.root.children)
        return ProblemSpecFile(node, self.transform, self.seed, self.schema_version)


class _Reader:
    def __init__(self, source: str):
        self.source = source
        self._scalars = SafeConstructor()

    def fail(self, node: Node, message: str):
        mark = node.start_mark
        raise SpecParseError(message, mark.line + 1, mark.column + 1, self.source)

    def mapping(self, node: Node, allowed: tuple[str, ...], what: str) -> dict[str, Node]:
        if not isinstance(node, MappingNode):
            self.fail(node, f"{what} must be a mapping")
        out = {}
        for key, value in node.value:
            name = self.scalar(key, str, "key")
            if name not in allowed:
                self.fail(key, f"unknown field {name!r} in {what}; allowed: {', '.join(allowed)}")
            if name in out:
                self.fail(key, f"duplicate field {name!r} in {what}")
            out[name] = value
        return out

    def sequence(self, node: Node, what: str) -> list[Node]:
        if not isinstance(node, SequenceNode):
            self.fail(node, f"{what} must be a list")
        return list(node.value)

    def scalar(self, node: Node, kind, what: str):
        if not isinstance(node, ScalarNode):
            self.fail(node, f"{what} must be a scalar")
        value = self._scalars.construct_object(node)
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                self.fail(node, f"{what} must be a number, got {node.value!r}")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                self.fail(node, f"{what} must be an integer, got {node.value!r}")
            return value
        if kind is bool:
            if not isinstance(value, bool):
                self.fail(node, f"{what} must be true or false, got {node.value!r}")
            return value
        if not isinstance(value, str):
            self.fail(node, f"{what} must be a string, got {node.value!r}")
        return value

    def optional_float(self, node: Node, what: str):
        if isinstance(node, ScalarNode) and node.tag == "tag:yaml.org,2002:null":
            return None
        return self.scalar(node, float, what)

    def vector(self, node: Node, n: int, what: str) -> tuple[float, ...]:
        items = self.sequence(node, what)
        if len(items) != n:
            self.fail(node, f"{what} must have {n} entries, got {len(items)}")
        return tuple(self.scalar(v, float, what) for v in items)

    def box(self, node: Node) -> Box3:
        m = self.mapping(node, ("min", "max"), "box")
        for key in ("min", "max"):
            if key not in m:
                self.fail(node, f"box is missing {key!r}")
        return Box3(self.vector(m["min"], 3, "box.min"), self.vector(m["max"], 3, "box.max"))

    def optimum(self, node: Node) -> Optimum:
        fields = ("position", "base_value", "slope", "rank", "persists_at_top")
        m = self.mapping(node, fields, "optimum")
        for key in fields[:4]:
            if key not in m:
                self.fail(node, f"optimum is missing {key!r}")
        return Optimum(
            self.vector(m["position"], 2, "position"),
            self.scalar(m["base_value"], float, "base_value"),
            self.scalar(m["slope"], float, "slope"),
            self.scalar(m["rank"], int, "rank"),
            self.scalar(m["persists_at_top"], bool, "persists_at_top") if "persists_at_top" in m else False,
        )

    def primitive(self, node: Node, spacing) -> PrimitiveSpec:
        m = self.mapping(node, ("box", "optima"), "primitive")
        box = self.box(m["box"]) if "box" in m else STANDARD_BOX
        if "optima" in m:
            optima = tuple(self.optimum(o) for o in self.sequence(m["optima"], "optima"))
        else:
            optima = PrimitiveSpec().optima
        return PrimitiveSpec(box, optima, spacing)

    def node(self, node: Node, spacing) -> NestingNode:
        m = self.mapping(node, ("primitive", "children"), "node")
        prim = self.primitive(m["primitive"], spacing) if "primitive" in m else PrimitiveSpec(spacing=spacing)
        children = ()
        if "children" in m:
            children = tuple(self.child(c) for c in self.sequence(m["children"], "children"))
        return NestingNode(prim, children)

    def child(self, node: Node) -> ChildPlacement:
        fields = ("anchor", "rotation", "scale", "value_gain", "offset", "node")
        m = self.mapping(node, fields, "child")
        kwargs = {}
        if "anchor" in m:
            kwargs["anchor"] = self.scalar(m["anchor"], str, "anchor")
        if "rotation" in m:
            kwargs["rotation"] = self.scalar(m["rotation"], int, "rotation")
        if "scale" in m:
            kwargs["scale"] = self.scalar(m["scale"], float, "scale")
        if "value_gain" in m:
            kwargs["value_gain"] = self.optional_float(m["value_gain"], "value_gain")
        if "offset" in m:
            kwargs["offset"] = self.vector(m["offset"], 2, "offset")
        # children carry no spacing of their own; it is derived from the parent
        sub = self.node(m["node"], (1.0, 1.0, 1.0)) if "node" in m else NestingNode()
        return ChildPlacement(sub, **kwargs)

    def monotone(self, node: Node) -> MonotoneMap:
        m = self.mapping(node, ("kind", "gamma", "a", "b", "k"), "map")
        if "kind" not in m:
            self.fail(node, "map is missing 'kind'")
        kind = self.scalar(m["kind"], str, "kind")
        if kind not in MAP_PARAMS:
            self.fail(m["kind"], f"unknown map kind {kind!r}; expected one of {', '.join(MAP_PARAMS)}")
        for key in m:
            if key != "kind" and key not in MAP_PARAMS[kind]:
                self.fail(m[key], f"parameter {key!r} does not apply to map {kind!r}")
        return MonotoneMap(kind, **{k: self.scalar(v, float, k) for k, v in m.items() if k != "kind"})

    def transform(self, node: Node) -> TransformChain:
        m = self.mapping(node, ("rotation", "maps"), "transform")
        angle = self.scalar(m["rotation"], float, "rotation") if "rotation" in m else -45.0
        maps = TransformChain().maps
        if "maps" in m:
            items = self.sequence(m["maps"], "maps")
            if len(items) != 2:
                self.fail(m["maps"], f"maps must list one map per objective (2), got {len(items)}")
            maps = tuple(self.monotone(i) for i in items)
        return TransformChain(angle, maps)

    def document(self, node: Node | None) -> ProblemSpecFile:
        if node is None:
            raise SpecParseError("empty spec file", source=self.source)
        m = self.mapping(node, ("schema_version", "spacing", "seed", "transform", "root"), "spec")
        if "schema_version" not in m:
            self.fail(node, "missing 'schema_version'")
        version_node = m["schema_version"]
        if not isinstance(version_node, ScalarNode) or version_node.value != SCHEMA_VERSION:
            self.fail(version_node, f"unsupported schema_version {getattr(version_node, 'value', None)!r}")
        spacing = self.vector(m["spacing"], 3, "spacing") if "spacing" in m else (1.0, 1.0, 1.0)
        seed = self.scalar(m["seed"], int, "seed") if "seed" in m else 0
        chain = self.transform(m["transform"]) if "transform" in m else TransformChain()
        root = self.node(m["root"], spacing) if "root" in m else NestingNode(PrimitiveSpec(spacing=spacing))
        return ProblemSpecFile(root, chain, seed)


def parse_spec(text: str, source: str = "<spec>") -> ProblemSpecFile:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line, col = (mark.line + 1, mark.column + 1) if mark else (None, None)
        raise SpecParseError(exc.problem or str(exc), line, col, source) from None
    except yaml.YAMLError as exc:
        raise SpecParseError(str(exc), source=source) from None
    return _Reader(source).document(node)


def load_spec(path) -> ProblemSpecFile:
    path = Path(path)
    return parse_spec(path.read_text(encoding="utf-8"), str(path))


def _num(x: float):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x!r}")
    return x


def _vec(v) -> list[float]:
    return [_num(x) for x in v]


def _node_dict(node: NestingNode) -> dict:
    prim = node.primitive
    return {
        "primitive": {
            "box": {"min": _vec(prim.box.min), "max": _vec(prim.box.max)},
            "optima": [
                {
                    "position": _vec(o.position),
                    "base_value": _num(o.base_value),
                    "slope": _num(o.slope),
                    "rank": int(o.rank),
                    "persists_at_top": bool(o.persists_at_top),
                }
                for o in prim.optima
            ],
        },
        "children": [
            {
                "anchor": c.anchor,
                "rotation": int(c.rotation),
                "scale": _num(c.scale),
                "value_gain": None if c.value_gain is None else _num(c.value_gain),
                "offset": _vec(c.offset),
                "node": _node_dict(c.node),
            }
            for c in node.children
        ],
    }


def spec_to_dict(spec: ProblemSpecFile) -> dict:
    return {
        "schema_version": spec.schema_version,
        "spacing": _vec(spec.spacing),
        "seed": int(spec.seed),
        "transform": {
            "rotation": _num(spec.transform.rotation_angle),
            "maps": [{"kind": m.kind, **{k: _num(v) for k, v in m.params().items()}} for m in spec.transform.maps],
        },
        "root": _node_dict(spec.root),
    }


def serialize_spec(spec: ProblemSpecFile) -> str:
    """Canonical text form: every field written, fixed key order, shortest round-trip floats."""
    return yaml.safe_dump(spec_to_dict(spec), sort_keys=False, default_flow_style=None, width=4096)


def canonicalize(spec: ProblemSpecFile) -> ProblemSpecFile:
    """Drop spacing stored on nested nodes, which the file format does not carry."""

    def strip(node: NestingNode, spacing) -> NestingNode:
        prim = node.primitive
        kids = tuple(
            ChildPlacement(strip(c.node, (1.0, 1.0, 1.0)), c.anchor, c.rotation, c.scale, c.value_gain, c.offset)
            for c in node.children
        )
        return NestingNode(PrimitiveSpec(prim.box, prim.optima, spacing), kids)

    return ProblemSpecFile(strip(spec.root, spec.spacing), spec.transform, spec.seed, spec.schema_version)
