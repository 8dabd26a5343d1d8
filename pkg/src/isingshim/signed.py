"""Signed Ising model and its reduction to a vertex-labeled graph.

The signed model duplicates each spin into itself and its negation, turning
gauge + relabeling symmetries of the original model into plain label-preserving
automorphisms of an auxiliary graph. Each coupler of the auxiliary model is
subdivided by a vertex labeled with the (quantized) coupling value so that
only vertex labels are needed downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import IsingModel

__all__ = [
    "SignedIsingModel",
    "LabeledGraph",
    "build_signed",
    "signed_to_labeled_graph",
    "quantize",
]

# Values closer than this are considered equal when assigning labels, so
# floating-point noise never splits orbits.
LABEL_RESOLUTION = 1e-9


def quantize(value: float) -> int:
    return round(value / LABEL_RESOLUTION)


@dataclass(frozen=True)
class SignedIsingModel:
    """Auxiliary model over 2N spins: plain copies v_i and negated copies v̄_i."""

    base: IsingModel
    plain_of: dict[int, int]
    bar_of: dict[int, int]

    @property
    def num_original(self) -> int:
        return len(self.plain_of)


@dataclass(frozen=True)
class LabeledGraph:
    """Simple graph with dense integer vertex labels and optional edge labels."""

    vertex_labels: list[int]
    edges: set[tuple[int, int]]
    edge_labels: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_labels)

    def __post_init__(self):
        n = len(self.vertex_labels)
        for (a, b) in self.edges:
            if not (0 <= a < b < n):
                raise ValueError(f"bad edge ({a},{b})")
        for e in self.edge_labels:
            if e not in self.edges:
                raise ValueError(f"edge label for non-edge {e}")

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj


def build_signed(model: IsingModel) -> SignedIsingModel:
    """Duplicate each spin into itself and its negation.

    Original coupler (i, j) expands to four: (v_i, v_j) and (v̄_i, v̄_j) with
    the original value, (v̄_i, v_j) and (v_i, v̄_j) negated.
    """
    n = model.num_spins
    plain_of = {i: i for i in range(n)}
    bar_of = {i: i + n for i in range(n)}
    fields: dict[int, float] = {}
    for i, h in model.fields.items():
        if h != 0.0:
            fields[i] = h
            fields[i + n] = -h
    couplings: dict[tuple[int, int], float] = {}

    def put(a: int, b: int, value: float):
        couplings[(min(a, b), max(a, b))] = value

    for (i, j), J in model.couplings.items():
        put(plain_of[i], plain_of[j], J)
        put(bar_of[i], bar_of[j], J)
        put(bar_of[i], plain_of[j], -J)
        put(plain_of[i], bar_of[j], -J)
    return SignedIsingModel(IsingModel(2 * n, fields, couplings), plain_of, bar_of)


def signed_to_labeled_graph(sm: SignedIsingModel) -> LabeledGraph:
    """Reduce the signed model to a vertex-labeled graph.

    Spin vertices keep their index and are labeled by quantized field value;
    every coupler becomes a subdivision vertex labeled by quantized coupling
    value, connected to its two endpoints. Spin labels and coupler labels are
    drawn from disjoint id ranges, so a degree-2 spin vertex can never be
    confused with a subdivision vertex.
    """
    base = sm.base
    n = base.num_spins
    field_keys = sorted({quantize(base.field_of(i)) for i in range(n)})
    field_label = {q: k for k, q in enumerate(field_keys)}
    coupler_keys = sorted({quantize(J) for J in base.couplings.values()})
    offset = len(field_keys)
    coupler_label = {q: offset + k for k, q in enumerate(coupler_keys)}

    labels = [field_label[quantize(base.field_of(i))] for i in range(n)]
    edges: set[tuple[int, int]] = set()
    for (i, j) in sorted(base.couplings):
        sub = len(labels)
        labels.append(coupler_label[quantize(base.couplings[(i, j)])])
        edges.add((i, sub))
        edges.add((j, sub))
    return LabeledGraph(labels, edges)
