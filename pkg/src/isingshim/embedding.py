"""Subgraph embeddings: backtracking search and greedy raster packing.

The search is plain backtracking over injective vertex maps with a connected
pattern order, degree filtering, and distance-to-root pruning. Matching is
non-induced: extra hardware edges inside a copy are allowed but never
programmed.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass

from .hardware import HardwareGraph
from .model import IsingModel

__all__ = [
    "EmbeddingSet",
    "find_subgraph",
    "raster_embed",
    "program_embeddings",
    "verify_embedding",
    "model_edges",
]


def model_edges(model: IsingModel) -> list[tuple[int, int]]:
    return sorted(model.couplings)


@dataclass(frozen=True)
class EmbeddingSet:
    """Pairwise-disjoint injective maps from a source model's spins to qubits."""

    source: IsingModel
    maps: list[list[int]]

    def __post_init__(self):
        used: set[int] = set()
        for mapping in self.maps:
            if len(mapping) != self.source.num_spins:
                raise ValueError("embedding map length does not match source spins")
            as_set = set(mapping)
            if len(as_set) != len(mapping):
                raise ValueError("embedding map is not injective")
            if as_set & used:
                raise ValueError("embedding maps are not pairwise disjoint")
            used |= as_set

    def used_qubits(self) -> list[int]:
        out: set[int] = set()
        for mapping in self.maps:
            out.update(mapping)
        return sorted(out)


def verify_embedding(pattern_edges, mapping, target_edges: set[tuple[int, int]]) -> bool:
    """Edge-by-edge check that every pattern edge lands on a target edge."""
    for i, j in pattern_edges:
        a, b = mapping[i], mapping[j]
        if a == b:
            return False
        if (min(a, b), max(a, b)) not in target_edges:
            return False
    return True


def _stable_shuffle(items: list[int], seed: int, salt: str) -> list[int]:
    def key(x: int) -> bytes:
        return hashlib.blake2b(f"{seed}:{salt}:{x}".encode(), digest_size=8).digest()

    return sorted(items, key=key)


def _bfs_distances(adj: dict[int, set[int]], start: int, allowed: set[int]) -> dict[int, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for u in adj.get(v, ()):
            if u in allowed and u not in dist:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def _pattern_order(num: int, edges) -> list[int]:
    """Connected variable order: start at a max-degree vertex, then greedily
    pick the vertex with the most already-ordered neighbors."""
    nbrs: dict[int, set[int]] = {v: set() for v in range(num)}
    for i, j in edges:
        nbrs[i].add(j)
        nbrs[j].add(i)
    start = max(range(num), key=lambda v: (len(nbrs[v]), -v))
    order = [start]
    placed = {start}
    while len(order) < num:
        best = None
        for v in range(num):
            if v in placed:
                continue
            score = (len(nbrs[v] & placed), len(nbrs[v]), -v)
            if best is None or score > best[0]:
                best = (score, v)
        order.append(best[1])
        placed.add(best[1])
    return order


def find_subgraph(
    pattern_num: int,
    pattern_edges,
    target_adj: dict[int, set[int]],
    allowed=None,
    limit: int = 1,
    node_budget: int = 2_000_000,
    seed: int = 0,
    order: list[int] | None = None,
) -> tuple[list[list[int]], bool]:
    """Up to `limit` non-induced subgraph isomorphisms of the pattern.

    Returns (maps, truncated); truncated is True when the node budget ran out
    before the search space was exhausted. Deterministic for fixed inputs and
    seed (the seed only reorders candidate qubits).
    """
    if pattern_num == 0:
        raise ValueError("pattern must be nonempty")
    pattern_edges = [(min(e), max(e)) for e in pattern_edges]
    allowed = set(target_adj) if allowed is None else {q for q in allowed if q in target_adj}
    if pattern_num > len(allowed):
        return [], False

    nbrs: dict[int, set[int]] = {v: set() for v in range(pattern_num)}
    for i, j in pattern_edges:
        nbrs[i].add(j)
        nbrs[j].add(i)
    order = _pattern_order(pattern_num, pattern_edges) if order is None else list(order)
    pos = {v: k for k, v in enumerate(order)}
    # Pattern neighbors already assigned when each vertex is reached.
    earlier = [sorted(u for u in nbrs[v] if pos[u] < pos[v]) for v in order]
    root = order[0]
    pdist = _bfs_distances({v: nbrs[v] for v in range(pattern_num)}, root, set(range(pattern_num)))

    tdeg = {q: len(target_adj[q] & allowed) for q in allowed}
    results: list[list[int]] = []
    truncated = False
    nodes = 0
    assignment: dict[int, int] = {}
    used: set[int] = set()
    root_dist: dict[int, int] = {}  # target distances from the root image

    def extend(k: int) -> bool:
        nonlocal nodes, truncated, root_dist
        if k == pattern_num:
            results.append([assignment[v] for v in range(pattern_num)])
            return len(results) >= limit
        v = order[k]
        anchors = earlier[k]
        if anchors:
            candidates = set(target_adj[assignment[anchors[0]]])
            for u in anchors[1:]:
                candidates &= target_adj[assignment[u]]
            cand_list = sorted(candidates & allowed)
        else:
            cand_list = _stable_shuffle(sorted(allowed), seed, "root")
        vdist = pdist.get(v)
        for q in cand_list:
            if q in used or tdeg[q] < len(nbrs[v]):
                continue
            if k > 0 and vdist is not None and root_dist.get(q, 1 << 30) > vdist:
                continue
            nodes += 1
            if nodes > node_budget:
                truncated = True
                return True
            assignment[v] = q
            used.add(q)
            if k == 0:
                root_dist = _bfs_distances(target_adj, q, allowed)
            if extend(k + 1):
                return True
            used.discard(q)
            del assignment[v]
        return False

    extend(0)
    for mapping in results:
        for i, j in pattern_edges:
            if mapping[j] not in target_adj[mapping[i]]:
                raise AssertionError("search produced an invalid embedding")
    return results, truncated


def _block_qubits(g: HardwareGraph, origin: tuple[int, int], block: tuple[int, int]) -> list[int]:
    r0, c0 = origin
    out: list[int] = []
    for r in range(r0, r0 + block[0]):
        for c in range(c0, c0 + block[1]):
            out.extend(g.cells.get((r, c), ()))
    return out


def raster_embed(
    pattern: IsingModel,
    g: HardwareGraph,
    block: tuple[int, int] = (2, 2),
    seed: int = 0,
    node_budget: int = 30_000,
) -> EmbeddingSet:
    """Greedy disjoint packing of a small pattern by raster-scanning cell blocks.

    Non-overlapping blocks are scanned in row-major order; within each block
    the subgraph search runs on operable, not-yet-used qubits and every
    embedding found is accepted greedily until the block is exhausted (or the
    per-attempt node budget runs out). An empty result is valid.
    """
    edges = model_edges(pattern)
    adj = g.adjacency()
    rows, cols = g.cell_grid_shape()
    used: set[int] = set()
    maps: list[list[int]] = []
    for r in range(0, rows, block[0]):
        for c in range(0, cols, block[1]):
            block_q = [q for q in _block_qubits(g, (r, c), block) if g.operable[q]]
            while True:
                allowed = [q for q in block_q if q not in used]
                if len(allowed) < pattern.num_spins:
                    break
                found, _ = find_subgraph(
                    pattern.num_spins, edges, adj, allowed=allowed,
                    limit=1, node_budget=node_budget, seed=seed,
                )
                if not found:
                    break
                maps.append(found[0])
                used.update(found[0])
    return EmbeddingSet(pattern, maps)


def _guided_cylinder_attempt(
    rows: int,
    cols: int,
    adj: dict[int, set[int]],
    coord: dict[int, tuple],
    id_of: dict[tuple, int],
    blocked: set[int],
    seed: int,
    node_budget: int,
) -> list[int] | None:
    """One deterministic attempt to place a rows x cols cylinder on Pegasus.

    Columns are built left to right, rows in order. The search follows the
    structure of known placements: rows 0 mod 3 take the orientation opposite
    to the rest of their column, orientations flip on odd columns, and the two
    parallel qubits of each row triplet are an odd-coupler pair, so the second
    member is forced. The seed only reorders candidates.
    """

    def odd_partner(q: int) -> int | None:
        u, w, k, z = coord[q]
        return id_of.get((u, w, k ^ 1, z))

    def want_u(r: int, c: int) -> int:
        return (1 if (r % 3 == 0) else 0) ^ (c % 2)

    order = [r * cols + c for c in range(cols) for r in range(rows)]
    pos = {v: k for k, v in enumerate(order)}
    nbrs: dict[int, set[int]] = {v: set() for v in range(rows * cols)}
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            nbrs[v].add(((r + 1) % rows) * cols + c)
            nbrs[((r + 1) % rows) * cols + c].add(v)
            if c + 1 < cols:
                nbrs[v].add(r * cols + c + 1)
                nbrs[r * cols + c + 1].add(v)
    earlier = [sorted(u for u in nbrs[v] if pos[u] < pos[v]) for v in order]

    assignment: dict[int, int] = {}
    used: set[int] = set()
    nodes = 0

    def extend(k: int) -> bool:
        nonlocal nodes
        if k == len(order):
            return True
        v = order[k]
        r, c = divmod(v, cols)
        if r % 3 == 2:
            partner = odd_partner(assignment[(r - 1) * cols + c])
            cand = [] if partner is None else [partner]
            cand = [q for q in cand if all(q in adj[assignment[u]] for u in earlier[k])]
        else:
            anchors = earlier[k]
            if anchors:
                pool = set(adj[assignment[anchors[0]]])
                for u in anchors[1:]:
                    pool &= adj[assignment[u]]
            else:
                pool = set(adj)
            cand = _stable_shuffle(
                [q for q in pool if coord[q][0] == want_u(r, c)], seed, f"cyl{k}"
            )
        for q in cand:
            if q in used or q in blocked:
                continue
            nodes += 1
            if nodes > node_budget:
                return False
            assignment[v] = q
            used.add(q)
            if extend(k + 1):
                return True
            used.discard(q)
            del assignment[v]
        return False

    return [assignment[v] for v in range(rows * cols)] if extend(0) else None


def cylinder_embeddings(
    g: HardwareGraph,
    rows: int,
    cols: int,
    count: int = 1,
    seed: int = 0,
    restarts: int = 24,
    node_budget: int = 300_000,
) -> list[list[int]]:
    """Disjoint placements of the rows x cols cylinder lattice on Pegasus.

    Deterministic: a fixed ladder of seeded attempts per copy. Returns the
    maps found (possibly fewer than count); every map is verified edge by
    edge against the hardware. rows must be a multiple of 6.
    """
    if g.family != "pegasus":
        raise ValueError("cylinder placement requires a pegasus hardware graph")
    if rows % 6 != 0:
        raise ValueError("cylinder placement supports rows that are multiples of 6")
    adj = g.adjacency()
    coord = g.coords
    id_of = {c: q for q, c in coord.items() if g.operable[q]}
    blocked: set[int] = set()
    maps: list[list[int]] = []
    for copy in range(count):
        found = None
        for attempt in range(restarts):
            found = _guided_cylinder_attempt(
                rows, cols, adj, coord, id_of, blocked,
                seed=(seed * 1_000_003 + copy * 101 + attempt), node_budget=node_budget,
            )
            if found is not None:
                break
        if found is None:
            break
        for r in range(rows):
            for c in range(cols):
                a = found[r * cols + c]
                b = found[((r + 1) % rows) * cols + c]
                if b not in adj[a]:
                    raise AssertionError("cylinder placement failed verification")
                if c + 1 < cols and found[r * cols + c + 1] not in adj[a]:
                    raise AssertionError("cylinder placement failed verification")
        blocked.update(found)
        maps.append(found)
    return maps


def program_embeddings(
    model: IsingModel, es: EmbeddingSet, num_qubits: int | None = None
) -> IsingModel:
    """Disjoint union of embedded copies over the hardware index space.

    Unused qubits carry zero field and no couplings.
    """
    if model is not es.source and model.content_hash() != es.source.content_hash():
        raise ValueError("embedding set was built for a different source model")
    used: set[int] = set()
    fields: dict[int, float] = {}
    couplings: dict[tuple[int, int], float] = {}
    for mapping in es.maps:
        if used & set(mapping):
            raise ValueError("embedding maps collide on a qubit")
        used.update(mapping)
        for i, h in model.fields.items():
            if h != 0.0:
                fields[mapping[i]] = h
        for (i, j), J in model.couplings.items():
            a, b = mapping[i], mapping[j]
            couplings[(min(a, b), max(a, b))] = J
    n = (max(used) + 1 if used else 0) if num_qubits is None else num_qubits
    return IsingModel(n, fields, couplings)
