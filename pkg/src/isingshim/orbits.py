"""Automorphism orbits of labeled graphs and of Ising models.

The automorphism engine is a backtracking individualization-refinement search
over label-respecting vertex bijections: iterated color refinement (with edge
labels folded into the vertex signatures) prunes the tree, the first smallest
non-singleton cell is the branching target, and discovered automorphisms prune
sibling branches through their orbits. Every returned permutation is verified
against labels and adjacency before it is reported.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import IsingModel
from .signed import LabeledGraph, build_signed, quantize, signed_to_labeled_graph

__all__ = [
    "Permutation",
    "Orbits",
    "SearchBudgetExceeded",
    "automorphism_generators",
    "vertex_and_edge_orbits",
    "ising_orbits",
    "merge_embedding_orbits",
    "override_orbits",
]

DEFAULT_NODE_BUDGET = 10_000_000


class SearchBudgetExceeded(RuntimeError):
    """The backtracking search exceeded its node budget."""


@dataclass(frozen=True)
class Permutation:
    """Vertex bijection stored as an image list."""

    image: tuple[int, ...]

    def __call__(self, v: int) -> int:
        return self.image[v]

    def apply_edge(self, e: tuple[int, int]) -> tuple[int, int]:
        a, b = self.image[e[0]], self.image[e[1]]
        return (a, b) if a < b else (b, a)

    def is_automorphism(self, g: LabeledGraph) -> bool:
        n = g.num_vertices
        img = self.image
        if sorted(img) != list(range(n)):
            return False
        for v in range(n):
            if g.vertex_labels[img[v]] != g.vertex_labels[v]:
                return False
        for e in g.edges:
            fe = self.apply_edge(e)
            if fe not in g.edges:
                return False
            if g.edge_labels.get(fe) != g.edge_labels.get(e):
                return False
        return True


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _dense(colors_keys: list) -> list[int]:
    order = {k: i for i, k in enumerate(sorted(set(colors_keys)))}
    return [order[k] for k in colors_keys]


def _refine(adj: list[list[tuple[int, int]]], colors: list[int]) -> list[int]:
    """Iterated color refinement; signatures fold in edge labels."""
    n = len(colors)
    while True:
        sigs = []
        for v in range(n):
            nbr = sorted((lab, colors[u]) for (u, lab) in adj[v])
            sigs.append((colors[v], tuple(nbr)))
        new = _dense(sigs)
        if new == colors:
            return colors
        colors = new


def _cells_by_color(colors: list[int]) -> list[int]:
    sizes: dict[int, int] = {}
    for c in colors:
        sizes[c] = sizes.get(c, 0) + 1
    return [sizes[c] for c in sorted(sizes)]


def _target_cell(colors: list[int]) -> list[int] | None:
    """First smallest non-singleton cell, as a sorted vertex list."""
    cells: dict[int, list[int]] = {}
    for v, c in enumerate(colors):
        cells.setdefault(c, []).append(v)
    best = None
    for c in sorted(cells):
        members = cells[c]
        if len(members) > 1 and (best is None or len(members) < len(best[1])):
            if best is None or len(members) < len(best[1]):
                best = (c, members)
    return None if best is None else sorted(best[1])


def automorphism_generators(
    g: LabeledGraph, node_budget: int = DEFAULT_NODE_BUDGET
) -> list[Permutation]:
    """Generating set of the label-preserving automorphism group of g.

    Raises SearchBudgetExceeded when the backtracking tree outgrows
    node_budget nodes.
    """
    n = g.num_vertices
    if n == 0:
        return []
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for e in g.edges:
        lab = g.edge_labels.get(e, 0)
        adj[e[0]].append((e[1], lab))
        adj[e[1]].append((e[0], lab))

    gens: list[Permutation] = []
    orbit_uf = UnionFind(n)
    base_shapes: dict[int, list[int]] = {}
    base_leaf: list[int] | None = None  # vertex order (by color) of leftmost leaf
    nodes = 0

    def leaf_order(colors: list[int]) -> list[int]:
        order = [0] * n
        for v, c in enumerate(colors):
            order[c] = v
        return order

    def individualize(colors: list[int], v: int) -> list[int]:
        child = list(colors)
        child[v] = n  # fresh color above every existing one
        return _refine(adj, _dense(child))

    def record(sigma_img: list[int]) -> bool:
        perm = Permutation(tuple(sigma_img))
        if not perm.is_automorphism(g):
            return False
        if perm.image != tuple(range(n)):
            gens.append(perm)
            for v in range(n):
                orbit_uf.union(v, perm.image[v])
        return True

    def search(colors: list[int], level: int, on_base: bool) -> bool:
        nonlocal nodes, base_leaf
        nodes += 1
        if nodes > node_budget:
            raise SearchBudgetExceeded(f"automorphism search exceeded {node_budget} nodes")
        if on_base:
            base_shapes[level] = _cells_by_color(colors)
        elif _cells_by_color(colors) != base_shapes.get(level):
            return False  # no automorphism can map the base branch here
        cell = _target_cell(colors)
        if cell is None:
            order = leaf_order(colors)
            if base_leaf is None:
                base_leaf = order
                return True  # identity leaf
            sigma = [0] * n
            for k in range(n):
                sigma[base_leaf[k]] = order[k]
            return record(sigma)
        found = False
        if on_base:
            tried: list[int] = []
            for idx, v in enumerate(cell):
                if idx > 0:
                    rep = orbit_uf.find(v)
                    if any(orbit_uf.find(w) == rep for w in tried):
                        continue  # a known automorphism already reaches v
                search(individualize(colors, v), level + 1, on_base=(idx == 0))
                tried.append(v)
            return True
        for v in cell:
            if search(individualize(colors, v), level + 1, on_base=False):
                found = True
                break  # one representative per branch generates the coset
        return found

    start = _refine(adj, _dense(list(g.vertex_labels)))
    search(start, 0, on_base=True)
    return gens


def vertex_and_edge_orbits(
    g: LabeledGraph, gens: list[Permutation]
) -> tuple[dict[int, int], dict[tuple[int, int], tuple[int, int]]]:
    """Finest partitions closed under the generators.

    Returns (vertex -> smallest orbit member, edge -> smallest orbit edge).
    """
    n = g.num_vertices
    for perm in gens:
        if not perm.is_automorphism(g):
            raise ValueError("generator is not an automorphism of the graph")
    uf = UnionFind(n)
    for perm in gens:
        for v in range(n):
            uf.union(v, perm.image[v])
    vertex_rep: dict[int, int] = {}
    groups: dict[int, int] = {}
    for v in range(n):
        root = uf.find(v)
        groups[root] = min(groups.get(root, v), v)
    for v in range(n):
        vertex_rep[v] = groups[uf.find(v)]

    edges = sorted(g.edges)
    index = {e: k for k, e in enumerate(edges)}
    euf = UnionFind(len(edges))
    for perm in gens:
        for e in edges:
            euf.union(index[e], index[perm.apply_edge(e)])
    egroups: dict[int, tuple[int, int]] = {}
    for e in edges:
        root = euf.find(index[e])
        egroups[root] = min(egroups.get(root, e), e)
    edge_rep = {e: egroups[euf.find(index[e])] for e in edges}
    return vertex_rep, edge_rep


@dataclass(frozen=True)
class Orbits:
    """Qubit/coupler equivalence classes and their opposite relations.

    Orbit ids are canonical: a qubit orbit id is its smallest spin, a coupler
    orbit id is the position of its smallest pair in the sorted coupler list.
    """

    qubit_orbit: dict[int, int]
    coupler_orbit: dict[tuple[int, int], int]
    opposite_qubit: dict[int, int | None]
    opposite_coupler: dict[int, int | None]

    def num_qubit_orbits(self) -> int:
        return len(set(self.qubit_orbit.values()))

    def num_coupler_orbits(self) -> int:
        return len(set(self.coupler_orbit.values()))

    def qubit_orbit_members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for q, o in self.qubit_orbit.items():
            out.setdefault(o, []).append(q)
        return {o: sorted(m) for o, m in out.items()}

    def coupler_orbit_members(self) -> dict[int, list[tuple[int, int]]]:
        out: dict[int, list[tuple[int, int]]] = {}
        for e, o in self.coupler_orbit.items():
            out.setdefault(o, []).append(e)
        return {o: sorted(m) for o, m in out.items()}

    def validate_against(self, model: IsingModel):
        """Check the defining value constraints against a model."""
        for members in self.qubit_orbit_members().values():
            values = {quantize(model.field_of(q)) for q in members}
            if len(values) > 1:
                raise ValueError("qubit orbit mixes different field values")
        for members in self.coupler_orbit_members().values():
            values = {quantize(model.couplings[e]) for e in members}
            if len(values) > 1:
                raise ValueError("coupler orbit mixes different coupling values")
        qmembers = self.qubit_orbit_members()
        for o, opp in self.opposite_qubit.items():
            if opp is None:
                continue
            if self.opposite_qubit.get(opp) != o:
                raise ValueError("opposite qubit relation is not symmetric")
            h_o = model.field_of(qmembers[o][0])
            h_opp = model.field_of(qmembers[opp][0])
            if quantize(h_o) != quantize(-h_opp):
                raise ValueError("opposite qubit orbits must carry negated fields")
        cmembers = self.coupler_orbit_members()
        for o, opp in self.opposite_coupler.items():
            if opp is None:
                continue
            if self.opposite_coupler.get(opp) != o:
                raise ValueError("opposite coupler relation is not symmetric")
            j_o = model.couplings[cmembers[o][0]]
            j_opp = model.couplings[cmembers[opp][0]]
            if quantize(j_o) != quantize(-j_opp):
                raise ValueError("opposite coupler orbits must carry negated couplings")


def ising_orbits(model: IsingModel, node_budget: int = DEFAULT_NODE_BUDGET) -> Orbits:
    """Qubit and coupler orbits of a model via its signed auxiliary graph.

    Composes build_signed -> signed_to_labeled_graph -> automorphism search,
    merges the coupler-copy orbits that are equivalent under a global spin
    flip, projects back to the original spins and couplers, and derives the
    opposite relations from the negated copies.
    """
    n = model.num_spins
    sm = build_signed(model)
    g = signed_to_labeled_graph(sm)
    gens = automorphism_generators(g, node_budget=node_budget)

    signed_edges = sorted(sm.base.couplings)
    sub_of = {e: 2 * n + k for k, e in enumerate(signed_edges)}

    uf = UnionFind(g.num_vertices)
    for perm in gens:
        for v in range(g.num_vertices):
            uf.union(v, perm.image[v])

    def skey(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a < b else (b, a)

    # Copies equivalent under a flip of all spins share an orbit.
    for (i, j) in model.couplings:
        vi, vj = sm.plain_of[i], sm.plain_of[j]
        bi, bj = sm.bar_of[i], sm.bar_of[j]
        uf.union(sub_of[skey(vi, vj)], sub_of[skey(bi, bj)])
        uf.union(sub_of[skey(bi, vj)], sub_of[skey(vi, bj)])

    # Project to original spins: discard barred-only orbit members.
    qubit_groups: dict[int, list[int]] = {}
    for i in range(n):
        qubit_groups.setdefault(uf.find(sm.plain_of[i]), []).append(i)
    qubit_orbit = {}
    for members in qubit_groups.values():
        rep = min(members)
        for i in members:
            qubit_orbit[i] = rep

    couplers = sorted(model.couplings)
    coupler_root: dict[tuple[int, int], int] = {
        e: uf.find(sub_of[skey(sm.plain_of[e[0]], sm.plain_of[e[1]])]) for e in couplers
    }
    root_groups: dict[int, list[tuple[int, int]]] = {}
    for e, root in coupler_root.items():
        root_groups.setdefault(root, []).append(e)
    pair_rep = {root: min(group) for root, group in root_groups.items()}
    rep_id = {e: k for k, e in enumerate(couplers)}
    coupler_orbit = {e: rep_id[pair_rep[coupler_root[e]]] for e in couplers}

    # Opposite orbits come from the negated copies.
    opposite_qubit: dict[int, int | None] = {}
    for members in qubit_groups.values():
        rep = min(members)
        bar_root = uf.find(sm.bar_of[rep])
        opp_members = qubit_groups.get(bar_root)
        opposite_qubit[rep] = min(opp_members) if opp_members else None

    opposite_coupler: dict[int, int | None] = {}
    for root, group in root_groups.items():
        i, j = min(group)
        neg_root = uf.find(sub_of[skey(sm.bar_of[i], sm.plain_of[j])])
        opp_group = root_groups.get(neg_root)
        this_id = rep_id[pair_rep[root]]
        opposite_coupler[this_id] = rep_id[pair_rep[neg_root]] if opp_group else None

    orbits = Orbits(qubit_orbit, coupler_orbit, opposite_qubit, opposite_coupler)
    orbits.validate_against(model)
    return orbits


def merge_embedding_orbits(orbits: Orbits, embeddings) -> Orbits:
    """Extend source-model orbits over every embedded copy.

    All copies of a source qubit (coupler) land in the same physical orbit;
    ids are re-canonicalized to the smallest physical member.
    """
    source = embeddings.source
    if set(orbits.qubit_orbit) != set(range(source.num_spins)):
        raise ValueError("orbits do not cover the embedding source model")
    if set(orbits.coupler_orbit) != set(source.couplings):
        raise ValueError("orbits do not cover the source couplers")

    qubit_groups: dict[int, list[int]] = {}
    coupler_groups: dict[int, list[tuple[int, int]]] = {}
    phys_pairs: list[tuple[int, int]] = []
    for mapping in embeddings.maps:
        for i in range(source.num_spins):
            qubit_groups.setdefault(orbits.qubit_orbit[i], []).append(mapping[i])
        for (i, j) in source.couplings:
            a, b = mapping[i], mapping[j]
            pair = (a, b) if a < b else (b, a)
            coupler_groups.setdefault(orbits.coupler_orbit[(i, j)], []).append(pair)
            phys_pairs.append(pair)
    if len(set(phys_pairs)) != len(phys_pairs):
        raise ValueError("inconsistent embeddings: repeated physical coupler")

    new_qid = {old: min(members) for old, members in qubit_groups.items()}
    pair_index = {e: k for k, e in enumerate(sorted(phys_pairs))}
    new_cid = {old: pair_index[min(members)] for old, members in coupler_groups.items()}

    qubit_orbit = {}
    for old, members in qubit_groups.items():
        for q in members:
            qubit_orbit[q] = new_qid[old]
    coupler_orbit = {}
    for old, members in coupler_groups.items():
        for e in members:
            coupler_orbit[e] = new_cid[old]

    def remap(table: dict[int, int | None], ids: dict[int, int]) -> dict[int, int | None]:
        return {ids[o]: (ids[opp] if opp is not None else None) for o, opp in table.items()}

    return Orbits(
        qubit_orbit,
        coupler_orbit,
        remap(orbits.opposite_qubit, new_qid),
        remap(orbits.opposite_coupler, new_cid),
    )


def override_orbits(
    model: IsingModel,
    coupler_classes: list[list[tuple[int, int]]],
    qubit_classes: list[list[int]] | None = None,
) -> Orbits:
    """User-declared orbits, validated but otherwise taken verbatim.

    Used when orbits should reflect the system being simulated rather than
    the programmed model (all couplers of one role in one orbit). Declared
    coupler classes must not mix coupling magnitudes. Declared orbits carry
    no opposite relations, except that a uniform all-zero-field qubit orbit
    is its own opposite.
    """
    seen: set[tuple[int, int]] = set()
    for cls in coupler_classes:
        for e in cls:
            key = (min(e), max(e))
            if key not in model.couplings:
                raise ValueError(f"declared coupler {key} not in model")
            if key in seen:
                raise ValueError(f"coupler {key} appears in two classes")
            seen.add(key)
        mags = {quantize(abs(model.couplings[(min(e), max(e))])) for e in cls}
        if len(mags) > 1:
            raise ValueError("coupler class mixes different |J| magnitudes")
    if seen != set(model.couplings):
        raise ValueError("coupler classes must cover every coupler")

    if qubit_classes is None:
        values = {quantize(model.field_of(i)) for i in range(model.num_spins)}
        if len(values) <= 1:
            qubit_classes = [list(range(model.num_spins))]
        else:
            qubit_classes = [[i] for i in range(model.num_spins)]
    qseen: set[int] = set()
    for cls in qubit_classes:
        for q in cls:
            if not (0 <= q < model.num_spins):
                raise ValueError(f"declared qubit {q} out of range")
            if q in qseen:
                raise ValueError(f"qubit {q} appears in two classes")
            qseen.add(q)
        hvals = {quantize(model.field_of(q)) for q in cls}
        if len(hvals) > 1:
            raise ValueError("qubit class mixes different field values")
    if qseen != set(range(model.num_spins)):
        raise ValueError("qubit classes must cover every spin")

    qubit_orbit = {}
    opposite_qubit: dict[int, int | None] = {}
    for cls in qubit_classes:
        rep = min(cls)
        for q in cls:
            qubit_orbit[q] = rep
        h = model.field_of(rep)
        opposite_qubit[rep] = rep if quantize(h) == 0 else None

    couplers = sorted(model.couplings)
    rep_id = {e: k for k, e in enumerate(couplers)}
    coupler_orbit = {}
    opposite_coupler: dict[int, int | None] = {}
    for cls in coupler_classes:
        keys = sorted((min(e), max(e)) for e in cls)
        oid = rep_id[keys[0]]
        for e in keys:
            coupler_orbit[e] = oid
        opposite_coupler[oid] = None
    return Orbits(qubit_orbit, coupler_orbit, opposite_qubit, opposite_coupler)
