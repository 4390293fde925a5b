"""Construct registry, measurement instrument, and the acceptance DAG.

The default model is the UTAUT-family acceptance graph: ten predictor
constructs pointing at Behavioral Intention (BI), with BI, Facilitating
Conditions and Habit pointing at Actual Use (USE).  Twelve nodes,
thirteen edges, each edge tagged with the theory it comes from.  The
registry order (predictors first, then BI, then USE) is the canonical
order used for parameter naming, column layout and reports.

All values are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping

from .errors import GraphCycleError, UnknownNodeError

ROLES = ("predictor", "intention", "use")
THEORIES = ("utaut", "utaut2", "additional", "outcome")

#: Construct ids in registry order.
CONSTRUCT_IDS = ("PE", "EE", "SI", "FC", "HM", "HB", "TC", "PI", "CT", "TR", "BI", "USE")


@dataclass(frozen=True)
class Construct:
    id: str
    name: str
    definition: str
    role: str
    source_theory: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r} for construct {self.id}")
        if self.source_theory not in THEORIES:
            raise ValueError(f"unknown theory {self.source_theory!r} for construct {self.id}")


@dataclass(frozen=True)
class MeasurementItem:
    id: str
    construct_id: str
    prompt: str
    reverse_coded: bool = False

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("item id must be non-empty")


@dataclass(frozen=True)
class Edge:
    """Directed edge ``source -> target``; the theory tag is metadata only."""

    source: str
    target: str
    source_theory: str

    def __post_init__(self) -> None:
        if self.source == self.target:
            raise ValueError(f"self loop on {self.source}")
        if self.source_theory not in THEORIES:
            raise ValueError(f"unknown theory {self.source_theory!r} on edge {self.source}->{self.target}")


@dataclass(frozen=True)
class Finding:
    """One validation finding; ``error`` severity makes the graph invalid."""

    severity: str  # "error" | "warning"
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.severity == "error")

    @property
    def valid(self) -> bool:
        return not self.errors


@dataclass(frozen=True)
class AcceptanceGraph:
    """The acceptance DAG: an ordered node registry plus directed edges.

    Node order is the registry order; edge order is declaration order and
    drives the deterministic ``parents`` listing (and with it, parameter
    naming in the inference layer).
    """

    nodes: tuple[Construct, ...]
    edges: tuple[Edge, ...]

    def node_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.nodes)

    def construct(self, node_id: str) -> Construct:
        for c in self.nodes:
            if c.id == node_id:
                return c
        raise UnknownNodeError(node_id)

    def has_node(self, node_id: str) -> bool:
        return any(c.id == node_id for c in self.nodes)

    def parents(self, node_id: str) -> tuple[str, ...]:
        """Sources of edges into ``node_id``, in the graph's edge order."""
        if not self.has_node(node_id):
            raise UnknownNodeError(node_id)
        return tuple(e.source for e in self.edges if e.target == node_id)

    def children(self, node_id: str) -> tuple[str, ...]:
        if not self.has_node(node_id):
            raise UnknownNodeError(node_id)
        return tuple(e.target for e in self.edges if e.source == node_id)

    def predictors(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.nodes if c.role == "predictor")

    def outcomes(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.nodes if c.role in ("intention", "use"))

    def topological_order(self) -> tuple[str, ...]:
        """Kahn's algorithm with registry-order tie-breaking.

        Raises GraphCycleError when no topological order exists.
        """
        ids = self.node_ids()
        indeg = {n: 0 for n in ids}
        for e in self.edges:
            if e.target in indeg:
                indeg[e.target] += 1
        order: list[str] = []
        remaining = set(ids)
        while remaining:
            ready = [n for n in ids if n in remaining and indeg[n] == 0]
            if not ready:
                raise GraphCycleError(f"cycle among {sorted(remaining)}")
            head = ready[0]
            remaining.discard(head)
            order.append(head)
            for e in self.edges:
                if e.source == head and e.target in indeg:
                    indeg[e.target] -= 1
        return tuple(order)


def validate_graph(graph: AcceptanceGraph) -> ValidationReport:
    """Report structural problems: dangling endpoints, bad targets, cycles.

    Outcome nodes with no incoming edges are reported as warnings only, so
    any edge-subset of the default graph that keeps BI and USE registered
    still validates.
    """
    findings: list[Finding] = []
    ids = set(graph.node_ids())
    if len(ids) != len(graph.nodes):
        findings.append(Finding("error", "duplicate-node", "duplicate construct ids in registry"))
    for e in graph.edges:
        for endpoint in (e.source, e.target):
            if endpoint not in ids:
                findings.append(
                    Finding("error", "dangling-endpoint", f"edge {e.source}->{e.target}: {endpoint} is not a registered node")
                )
        if e.target in ids and graph.construct(e.target).role == "predictor":
            findings.append(
                Finding("error", "edge-into-predictor", f"edge {e.source}->{e.target} targets a predictor construct")
            )
    seen: set[tuple[str, str]] = set()
    for e in graph.edges:
        key = (e.source, e.target)
        if key in seen:
            findings.append(Finding("error", "duplicate-edge", f"duplicate edge {e.source}->{e.target}"))
        seen.add(key)
    if not any(f.code == "dangling-endpoint" for f in findings):
        try:
            graph.topological_order()
        except GraphCycleError as exc:
            findings.append(Finding("error", "cycle", str(exc)))
    for node in graph.outcomes():
        if not graph.parents(node):
            findings.append(Finding("warning", "unreachable-outcome", f"outcome node {node} has no incoming edges"))
    return ValidationReport(tuple(findings))


@dataclass(frozen=True)
class InstrumentSpec:
    """Likert instrument: items grouped by construct plus shared scale bounds."""

    items: tuple[MeasurementItem, ...]
    scale_min: int = 1
    scale_max: int = 7
    construct_order: tuple[str, ...] = field(default=CONSTRUCT_IDS)

    def __post_init__(self) -> None:
        if self.scale_min >= self.scale_max:
            raise ValueError("scale_min must be < scale_max")
        ids = [it.id for it in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate item ids in instrument")
        unknown = {it.construct_id for it in self.items} - set(self.construct_order)
        if unknown:
            raise ValueError(f"items reference unregistered constructs: {sorted(unknown)}")

    def items_for(self, construct_id: str) -> tuple[MeasurementItem, ...]:
        return tuple(it for it in self.items if it.construct_id == construct_id)

    def measurable_constructs(self) -> tuple[str, ...]:
        present = {it.construct_id for it in self.items}
        return tuple(c for c in self.construct_order if c in present)

    def item(self, item_id: str) -> MeasurementItem:
        for it in self.items:
            if it.id == item_id:
                return it
        raise KeyError(item_id)

    def has_item(self, item_id: str) -> bool:
        return any(it.id == item_id for it in self.items)


# ---------------------------------------------------------------------------
# JSON schema (documented in README): one document holds scale, constructs,
# items and edges, so instrument and graph travel together.
# ---------------------------------------------------------------------------

def graph_to_dict(graph: AcceptanceGraph) -> dict:
    return {
        "constructs": [
            {
                "id": c.id,
                "name": c.name,
                "definition": c.definition,
                "role": c.role,
                "theory": c.source_theory,
            }
            for c in graph.nodes
        ],
        "edges": [
            {"from": e.source, "to": e.target, "theory": e.source_theory} for e in graph.edges
        ],
    }


def graph_from_dict(doc: Mapping) -> AcceptanceGraph:
    nodes = tuple(
        Construct(
            id=c["id"],
            name=c.get("name", c["id"]),
            definition=c.get("definition", ""),
            role=c["role"],
            source_theory=c.get("theory", "additional"),
        )
        for c in doc["constructs"]
    )
    edges = tuple(
        Edge(source=e["from"], target=e["to"], source_theory=e.get("theory", "additional"))
        for e in doc["edges"]
    )
    return AcceptanceGraph(nodes=nodes, edges=edges)


def instrument_to_dict(inst: InstrumentSpec) -> dict:
    return {
        "scale": {"min": inst.scale_min, "max": inst.scale_max},
        "items": [
            {"id": it.id, "construct": it.construct_id, "reverse": it.reverse_coded, "prompt": it.prompt}
            for it in inst.items
        ],
    }


def instrument_from_dict(doc: Mapping, construct_order: Iterable[str] = CONSTRUCT_IDS) -> InstrumentSpec:
    return InstrumentSpec(
        items=tuple(
            MeasurementItem(
                id=it["id"],
                construct_id=it["construct"],
                prompt=it.get("prompt", ""),
                reverse_coded=bool(it.get("reverse", False)),
            )
            for it in doc["items"]
        ),
        scale_min=int(doc["scale"]["min"]),
        scale_max=int(doc["scale"]["max"]),
        construct_order=tuple(construct_order),
    )


def model_to_json(graph: AcceptanceGraph, inst: InstrumentSpec) -> str:
    doc = {"v": 1}
    doc.update(instrument_to_dict(inst))
    doc.update(graph_to_dict(graph))
    return canonical_json(doc)


def model_from_json(text: str) -> tuple[AcceptanceGraph, InstrumentSpec]:
    doc = json.loads(text)
    graph = graph_from_dict(doc)
    inst = instrument_from_dict(doc, construct_order=graph.node_ids())
    return graph, inst


def canonical_json(obj) -> str:
    """Stable serialization used for hashing and byte-identical outputs."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def graph_hash(graph: AcceptanceGraph) -> str:
    """Hash of the structural identity: node ids/roles plus edges.

    Display names, definitions and theory tags are presentation metadata
    and deliberately excluded, so editing a label does not orphan fitted
    posteriors.
    """
    essence = {
        "nodes": [{"id": c.id, "role": c.role} for c in graph.nodes],
        "edges": [{"from": e.source, "to": e.target} for e in graph.edges],
    }
    return sha256_hex(canonical_json(essence))


def instrument_hash(inst: InstrumentSpec) -> str:
    essence = {
        "scale": [inst.scale_min, inst.scale_max],
        "items": [[it.id, it.construct_id, it.reverse_coded] for it in inst.items],
    }
    return sha256_hex(canonical_json(essence))


@lru_cache(maxsize=1)
def _default_model() -> tuple[AcceptanceGraph, InstrumentSpec]:
    text = resources.files("uptake.data").joinpath("instrument.json").read_text("utf-8")
    graph, inst = model_from_json(text)
    report = validate_graph(graph)
    if not report.valid:
        raise RuntimeError(f"bundled model invalid: {report.errors}")
    return graph, inst


def default_graph() -> AcceptanceGraph:
    """The bundled 12-node, 13-edge acceptance graph."""
    return _default_model()[0]


def default_instrument() -> InstrumentSpec:
    """The bundled Likert 1..7 instrument covering all twelve constructs."""
    return _default_model()[1]
