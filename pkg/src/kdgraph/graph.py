"""Typed description graphs over the knowledge store.

Two variants share one structure: the raw graph built straight from the
facts (nodes may be untyped) and the validated graph whose nodes are all
typed event/entity/class and whose compositional, locational and
participant edges form no directed cycle.

Edges fall into five families by slot name; ``base`` and ``object`` ride
along as participant-role edges so IO reasoning can see them.  Slots that
are neither family slots nor declared auxiliary relations produce
diagnostics instead of edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .diagnostics import Diagnostic, warn
from .facts import KnowledgeStore


class EdgeFamily(Enum):
    LOCATIONAL = "locational"
    CLASS = "class"
    COMPOSITIONAL = "compositional"
    ORDERING = "ordering"
    PARTICIPANT = "participant"


class NodeKind(Enum):
    EVENT = "event"
    ENTITY = "entity"
    CLASS = "class"
    UNTYPED = "untyped"


SLOT_FAMILIES: dict[str, EdgeFamily] = {
    "happenings": EdgeFamily.LOCATIONAL,
    "instance_of": EdgeFamily.CLASS,
    "superclass": EdgeFamily.CLASS,
    "subevent": EdgeFamily.COMPOSITIONAL,
    "first_subevent": EdgeFamily.COMPOSITIONAL,
    "has_part": EdgeFamily.COMPOSITIONAL,
    "has_region": EdgeFamily.COMPOSITIONAL,
    "has_basic_structural_unit": EdgeFamily.COMPOSITIONAL,
    "next_event": EdgeFamily.ORDERING,
    "enables": EdgeFamily.ORDERING,
    "causes": EdgeFamily.ORDERING,
    "prevents": EdgeFamily.ORDERING,
    "inhibits": EdgeFamily.ORDERING,
    "raw_material": EdgeFamily.PARTICIPANT,
    "result": EdgeFamily.PARTICIPANT,
    "agent": EdgeFamily.PARTICIPANT,
    "destination": EdgeFamily.PARTICIPANT,
    "instrument": EdgeFamily.PARTICIPANT,
    "origin": EdgeFamily.PARTICIPANT,
    "site": EdgeFamily.PARTICIPANT,
    # Role-bearing slots outside the core family table; they must survive
    # into the typed graph for IO completion.
    "base": EdgeFamily.PARTICIPANT,
    "object": EdgeFamily.PARTICIPANT,
}

ORDERING_SLOTS = frozenset(
    s for s, f in SLOT_FAMILIES.items() if f is EdgeFamily.ORDERING
)
PARTICIPANT_SLOTS = frozenset(
    s for s, f in SLOT_FAMILIES.items() if f is EdgeFamily.PARTICIPANT
)

# Known auxiliary relations: recognized (no unknown-slot diagnostic) but not
# graph edges.  Matching reads cloned_from/is_inside/part_of, answers read
# important, and the remainder are this engine's own derived relations.
AUX_SLOTS = frozenset(
    {
        "cloned_from",
        "is_inside",
        "part_of",
        "important",
        "last_subevent",
        "input",
        "output",
        "input_location",
        "output_location",
    }
)

# Node-kind constraints per slot: (allowed source kinds, allowed target kinds).
_EVT = frozenset({NodeKind.EVENT})
_ENT = frozenset({NodeKind.ENTITY})
_INST = frozenset({NodeKind.EVENT, NodeKind.ENTITY})
_CLS = frozenset({NodeKind.CLASS})

ENDPOINT_CONSTRAINTS: dict[str, tuple[frozenset, frozenset]] = {
    "happenings": (_ENT, _EVT),
    "instance_of": (_INST, _CLS),
    "superclass": (_CLS, _CLS),
    "subevent": (_EVT, _EVT),
    "first_subevent": (_EVT, _EVT),
    "has_part": (_ENT, _ENT),
    "has_region": (_ENT, _ENT),
    "has_basic_structural_unit": (_ENT, _ENT),
}
for _slot in ORDERING_SLOTS:
    ENDPOINT_CONSTRAINTS[_slot] = (_EVT, _EVT)
for _slot in PARTICIPANT_SLOTS:
    ENDPOINT_CONSTRAINTS[_slot] = (_EVT, _ENT)

ROOTED_TRAVERSAL = frozenset(
    {EdgeFamily.COMPOSITIONAL, EdgeFamily.CLASS, EdgeFamily.LOCATIONAL, EdgeFamily.PARTICIPANT}
)
ACYCLIC_FAMILIES = frozenset(
    {EdgeFamily.COMPOSITIONAL, EdgeFamily.LOCATIONAL, EdgeFamily.PARTICIPANT}
)

_DOT_SHAPES = {
    NodeKind.EVENT: "rectangle",
    NodeKind.ENTITY: "ellipse",
    NodeKind.CLASS: "hexagon",
    NodeKind.UNTYPED: "plaintext",
}


class GraphCycleError(ValueError):
    """A forbidden directed cycle over structural edge families."""

    def __init__(self, cycle: list[str]):
        super().__init__("structural cycle: " + " -> ".join(cycle))
        self.cycle = cycle


class UnknownNodeError(KeyError):
    pass


@dataclass(frozen=True)
class Edge:
    source: str
    slot: str
    target: str
    family: EdgeFamily

    def key(self) -> tuple[str, str, str]:
        return (self.source, self.slot, self.target)


@dataclass
class DescriptionGraph:
    variant: str  # "udg" or "kdg"
    nodes: dict[str, NodeKind] = field(default_factory=dict)
    edges: set[Edge] = field(default_factory=set)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DescriptionGraph):
            return NotImplemented
        return (
            self.variant == other.variant
            and self.nodes == other.nodes
            and self.edges == other.edges
        )

    def has_node(self, node: str) -> bool:
        return node in self.nodes

    def kind(self, node: str) -> NodeKind:
        return self.nodes[node]

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges, key=Edge.key)

    def out_edges(self, node: str) -> list[Edge]:
        return sorted((e for e in self.edges if e.source == node), key=Edge.key)

    def in_edges(self, node: str) -> list[Edge]:
        return sorted((e for e in self.edges if e.target == node), key=Edge.key)

    def to_json(self) -> str:
        payload = {
            "variant": self.variant,
            "nodes": [
                {"id": n, "kind": k.value} for n, k in sorted(self.nodes.items())
            ],
            "edges": [
                {
                    "from": e.source,
                    "slot": e.slot,
                    "to": e.target,
                    "family": e.family.value,
                }
                for e in self.sorted_edges()
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_dot(self, name: str = "kdg") -> str:
        lines = [f"digraph {name} {{"]
        for node, kind in sorted(self.nodes.items()):
            lines.append(f'  "{node}" [shape={_DOT_SHAPES[kind]}];')
        for edge in self.sorted_edges():
            style = ' style=dashed' if edge.family is EdgeFamily.ORDERING else ""
            lines.append(f'  "{edge.source}" -> "{edge.target}" [label="{edge.slot}"{style}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _happenings_subject_first(store: KnowledgeStore, subject: str, value: str) -> bool:
    # Heuristic: the fact was written event-first when the subject is
    # asserted to be an event and the value is not.
    subject_is_event = (subject, "instance_of", "event") in store
    value_is_event = (value, "instance_of", "event") in store
    return subject_is_event and not value_is_event


def build_udg(store: KnowledgeStore) -> DescriptionGraph:
    """Untyped graph: one node per identifier touched by a vocabulary slot,
    one edge per fact whose slot belongs to an edge family."""
    graph = DescriptionGraph(variant="udg")
    unknown_slots: set[str] = set()
    for fact in store.facts():
        slot = fact.slot
        if slot in SLOT_FAMILIES:
            source, target = fact.subject, fact.value
            if slot == "happenings" and _happenings_subject_first(store, source, target):
                graph.diagnostics.append(
                    warn(
                        "happenings-subject-first",
                        f"happenings fact ({source}, {target}) written event-first; edge reversed",
                    )
                )
                source, target = target, source
            graph.nodes.setdefault(source, NodeKind.UNTYPED)
            graph.nodes.setdefault(target, NodeKind.UNTYPED)
            graph.edges.add(Edge(source, slot, target, SLOT_FAMILIES[slot]))
        elif slot in AUX_SLOTS:
            graph.nodes.setdefault(fact.subject, NodeKind.UNTYPED)
            graph.nodes.setdefault(fact.value, NodeKind.UNTYPED)
        else:
            unknown_slots.add(slot)
    for slot in sorted(unknown_slots):
        graph.diagnostics.append(warn("unknown-slot", f"slot {slot} is not in the vocabulary"))
    return graph


def _find_structural_cycle(graph: DescriptionGraph) -> list[str] | None:
    adjacency: dict[str, list[str]] = {}
    for edge in graph.sorted_edges():
        if edge.family in ACYCLIC_FAMILIES:
            adjacency.setdefault(edge.source, []).append(edge.target)
    color: dict[str, int] = {}
    trail: list[str] = []

    def visit(node: str) -> list[str] | None:
        color[node] = 1
        trail.append(node)
        for nxt in adjacency.get(node, ()):
            if color.get(nxt, 0) == 1:
                return trail[trail.index(nxt):] + [nxt]
            if color.get(nxt, 0) == 0:
                found = visit(nxt)
                if found:
                    return found
        trail.pop()
        color[node] = 2
        return None

    for start in sorted(adjacency):
        if color.get(start, 0) == 0:
            found = visit(start)
            if found:
                return found
    return None


def build_kdg(udg: DescriptionGraph, typing: dict[str, NodeKind]) -> DescriptionGraph:
    """Typed graph with endpoint constraints enforced and acyclicity checked.

    Untyped nodes are excluded with a diagnostic; edges violating endpoint
    constraints are dropped with one diagnostic each.  A structural cycle
    raises :class:`GraphCycleError` carrying one witness cycle.
    """
    graph = DescriptionGraph(variant="kdg")
    for node in sorted(udg.nodes):
        kind = typing.get(node, NodeKind.UNTYPED)
        if kind is NodeKind.UNTYPED:
            graph.diagnostics.append(
                warn("untyped-node", f"{node} has no event/entity/class typing; excluded")
            )
            continue
        graph.nodes[node] = kind
    for edge in udg.sorted_edges():
        if edge.source not in graph.nodes or edge.target not in graph.nodes:
            continue
        allowed_src, allowed_dst = ENDPOINT_CONSTRAINTS[edge.slot]
        src_kind, dst_kind = graph.nodes[edge.source], graph.nodes[edge.target]
        if src_kind not in allowed_src or dst_kind not in allowed_dst:
            graph.diagnostics.append(
                warn(
                    "endpoint-constraint",
                    f"{edge.slot} edge {edge.source}({src_kind.value}) -> "
                    f"{edge.target}({dst_kind.value}) dropped",
                )
            )
            continue
        graph.edges.add(edge)
    cycle = _find_structural_cycle(graph)
    if cycle:
        raise GraphCycleError(cycle)
    return graph


def rooted_subgraph(graph: DescriptionGraph, root: str) -> DescriptionGraph:
    """Subgraph reachable from ``root``.

    Reachability follows compositional, class, locational and participant
    edges only; ordering edges are not traversed but are kept whenever both
    endpoints were reached.
    """
    if root not in graph.nodes:
        raise UnknownNodeError(root)
    adjacency: dict[str, list[str]] = {}
    for edge in graph.sorted_edges():
        if edge.family in ROOTED_TRAVERSAL:
            adjacency.setdefault(edge.source, []).append(edge.target)
    reached = {root}
    frontier = [root]
    while frontier:
        node = frontier.pop()
        for nxt in adjacency.get(node, ()):
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    sub = DescriptionGraph(variant=graph.variant)
    sub.nodes = {n: k for n, k in graph.nodes.items() if n in reached}
    sub.edges = {
        e for e in graph.edges if e.source in reached and e.target in reached
    }
    return sub
