"""Hardware connectivity graphs (Chimera and Pegasus families).

Both generators follow the published coordinate definitions. Pegasus qubits
are (u, w, k, z) with orientation u, 12 tracks k per tile offset w, and
parallel offset z; internal couplers connect crossing perpendicular qubits,
external couplers join consecutive segments of one track, and odd couplers
join the adjacent parallel tracks 2j, 2j+1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["HardwareGraph", "make_chimera", "make_pegasus", "mask_qubits"]

# Standard Pegasus track offsets (orientation 0 and 1).
PEGASUS_OFFSETS = (
    (2, 2, 2, 2, 10, 10, 10, 10, 6, 6, 6, 6),
    (6, 6, 6, 6, 2, 2, 2, 2, 10, 10, 10, 10),
)


@dataclass
class HardwareGraph:
    """Simple graph over qubit ids with an operability mask and raster cells."""

    num_qubits: int
    edges: set[tuple[int, int]]
    operable: list[bool]
    cells: dict[tuple[int, int], list[int]]
    family: str = "custom"
    coords: dict[int, tuple] = field(default_factory=dict)

    def adjacency(self) -> dict[int, set[int]]:
        """Adjacency over operable qubits only."""
        adj: dict[int, set[int]] = {q: set() for q in range(self.num_qubits) if self.operable[q]}
        for a, b in self.edges:
            if self.operable[a] and self.operable[b]:
                adj[a].add(b)
                adj[b].add(a)
        return adj

    def operable_qubits(self) -> list[int]:
        return [q for q in range(self.num_qubits) if self.operable[q]]

    def cell_grid_shape(self) -> tuple[int, int]:
        rows = 1 + max(r for r, _ in self.cells)
        cols = 1 + max(c for _, c in self.cells)
        return rows, cols


def make_chimera(m: int, n: int, t: int) -> HardwareGraph:
    """Chimera C_{m,n,t}: an m x n grid of K_{t,t} cells."""
    if m < 1 or n < 1 or t < 1:
        raise ValueError("chimera dimensions must be >= 1")

    def qid(i: int, j: int, u: int, k: int) -> int:
        return ((i * n + j) * 2 + u) * t + k

    edges: set[tuple[int, int]] = set()
    cells: dict[tuple[int, int], list[int]] = {}
    coords: dict[int, tuple] = {}
    for i in range(m):
        for j in range(n):
            members = []
            for u in range(2):
                for k in range(t):
                    q = qid(i, j, u, k)
                    coords[q] = (i, j, u, k)
                    members.append(q)
            cells[(i, j)] = members
            for k1 in range(t):
                for k2 in range(t):
                    edges.add((min(qid(i, j, 0, k1), qid(i, j, 1, k2)),
                               max(qid(i, j, 0, k1), qid(i, j, 1, k2))))
            if i + 1 < m:
                for k in range(t):
                    edges.add((qid(i, j, 0, k), qid(i + 1, j, 0, k)))
            if j + 1 < n:
                for k in range(t):
                    edges.add((qid(i, j, 1, k), qid(i, j + 1, 1, k)))
    num = 2 * t * m * n
    return HardwareGraph(num, edges, [True] * num, cells, family="chimera", coords=coords)


def make_pegasus(m: int) -> HardwareGraph:
    """Pegasus P_m with the full 24m(m-1) vertex set."""
    if m < 2:
        raise ValueError("pegasus size must be >= 2")
    off_v, off_h = PEGASUS_OFFSETS
    span = m - 1

    def qid(u: int, w: int, k: int, z: int) -> int:
        return ((u * m + w) * 12 + k) * span + z

    edges: set[tuple[int, int]] = set()
    cells: dict[tuple[int, int], list[int]] = {}
    coords: dict[int, tuple] = {}
    for u in range(2):
        for w in range(m):
            for k in range(12):
                for z in range(span):
                    q = qid(u, w, k, z)
                    coords[q] = (u, w, k, z)
                    cell = (z, w) if u == 0 else (w, z)
                    cells.setdefault(cell, []).append(q)
                    if z + 1 < span:  # external coupler along the track
                        edges.add((q, qid(u, w, k, z + 1)))
                    if k % 2 == 0:  # odd coupler between parallel tracks
                        edges.add((q, qid(u, w, k + 1, z)))
    # Internal couplers: vertical (u=0) at x=12w+k spans y in [12z+off, +12);
    # it crosses one horizontal qubit per covered y track.
    for w in range(m):
        for k in range(12):
            x = 12 * w + k
            for z in range(span):
                y0 = 12 * z + off_v[k]
                vq = qid(0, w, k, z)
                for t in range(12):
                    y = y0 + t
                    wh, kh = divmod(y, 12)
                    if wh >= m:
                        break
                    zh = (x - off_h[kh]) // 12
                    if 0 <= zh < span and 12 * zh + off_h[kh] <= x < 12 * zh + off_h[kh] + 12:
                        hq = qid(1, wh, kh, zh)
                        edges.add((min(vq, hq), max(vq, hq)))
    num = 24 * m * (m - 1)
    cells = {key: sorted(v) for key, v in sorted(cells.items())}
    return HardwareGraph(num, edges, [True] * num, cells, family="pegasus", coords=coords)


def mask_qubits(g: HardwareGraph, dead) -> HardwareGraph:
    """Mark qubits inoperable; embeddings never use them."""
    dead = set(dead)
    for q in dead:
        if not (0 <= q < g.num_qubits):
            raise ValueError(f"qubit {q} out of range")
    operable = list(g.operable)
    for q in dead:
        operable[q] = False
    return HardwareGraph(g.num_qubits, g.edges, operable, g.cells, g.family, g.coords)
