"""Construction and validation of the regular graphs the process runs on.

Supported families: rings, d-dimensional periodic tori, complete graphs,
and uniform random r-regular graphs (pairing model with rejection).
Complete graphs are kept implicit (``neighbors is None``) so that very
large instances never materialize an O(V^2) adjacency table; everything
else stores an explicit (V, r) neighbor array.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GraphSpec",
    "RegularGraph",
    "GraphError",
    "build_graph",
    "random_regular",
]

#: complete graphs up to this size may be materialized for invariant scans
_MATERIALIZE_CAP = 20_000


class GraphError(ValueError):
    """Invalid graph specification or failed generation."""


@dataclass(frozen=True)
class GraphSpec:
    """Declarative description of a regular graph.

    kind is one of "ring", "torus", "complete", "random_regular"; the
    remaining fields apply per kind: ring uses L, torus uses (d, L),
    complete uses V, random_regular uses (V, r, graph_seed).
    """

    kind: str
    L: int | None = None
    d: int | None = None
    V: int | None = None
    r: int | None = None
    graph_seed: int | None = None

    def validate(self) -> None:
        k = self.kind
        if k == "ring":
            if self.L is None or self.L < 3:
                raise GraphError(f"ring requires L >= 3, got L={self.L}")
        elif k == "torus":
            if self.d is None or self.d < 1:
                raise GraphError(f"torus requires d >= 1, got d={self.d}")
            if self.L is None or self.L < 3:
                raise GraphError(f"torus requires L >= 3, got L={self.L}")
        elif k == "complete":
            if self.V is None or self.V < 2:
                raise GraphError(f"complete requires V >= 2, got V={self.V}")
        elif k == "random_regular":
            if self.V is None or self.r is None:
                raise GraphError("random_regular requires V and r")
            if not 3 <= self.r <= self.V - 1:
                raise GraphError(
                    f"random_regular requires 3 <= r <= V-1, got r={self.r}, V={self.V}"
                )
            if (self.V * self.r) % 2 != 0:
                raise GraphError(
                    f"random_regular requires V*r even, got V={self.V}, r={self.r}"
                )
            if self.graph_seed is None:
                raise GraphError("random_regular requires graph_seed")
        else:
            raise GraphError(f"unknown graph kind {k!r}")

    @property
    def vertex_count(self) -> int:
        self.validate()
        if self.kind == "ring":
            return self.L
        if self.kind == "torus":
            return self.L**self.d
        return self.V

    @staticmethod
    def from_dict(raw: dict) -> "GraphSpec":
        """Build from a config mapping, rejecting unknown keys."""
        if not isinstance(raw, dict):
            raise GraphError("graph section must be an object")
        allowed = {"kind", "L", "d", "V", "r", "graph_seed"}
        unknown = set(raw) - allowed
        if unknown:
            raise GraphError(f"graph: unknown key(s) {sorted(unknown)}")
        if "kind" not in raw:
            raise GraphError("graph: missing required key 'kind'")
        spec = GraphSpec(**raw)
        spec.validate()
        return spec

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        for f in ("L", "d", "V", "r", "graph_seed"):
            v = getattr(self, f)
            if v is not None:
                out[f] = v
        return out

    def describe(self) -> str:
        if self.kind == "ring":
            return f"ring(L={self.L})"
        if self.kind == "torus":
            return f"torus(d={self.d}, L={self.L})"
        if self.kind == "complete":
            return f"complete(V={self.V})"
        return f"random_regular(V={self.V}, r={self.r}, graph_seed={self.graph_seed})"


@dataclass(frozen=True)
class RegularGraph:
    """Simple connected r-regular graph with ordered neighbor lists.

    ``neighbors`` has shape (V, r); it is None for implicit complete
    graphs, where vertex v is adjacent to every other vertex.
    """

    V: int
    r: int
    neighbors: np.ndarray | None

    @property
    def is_complete(self) -> bool:
        return self.neighbors is None

    def neighbors_of(self, v: int) -> np.ndarray:
        if not 0 <= v < self.V:
            raise GraphError(f"vertex {v} out of range [0, {self.V})")
        if self.neighbors is None:
            return np.concatenate(
                [np.arange(v, dtype=np.int64), np.arange(v + 1, self.V, dtype=np.int64)]
            )
        return self.neighbors[v]

    def neighbor_array(self) -> np.ndarray:
        """Materialized (V, r) neighbor table; guarded for huge complete graphs."""
        if self.neighbors is not None:
            return self.neighbors
        if self.V > _MATERIALIZE_CAP:
            raise GraphError(
                f"refusing to materialize complete graph with V={self.V} "
                f"(cap {_MATERIALIZE_CAP})"
            )
        return np.stack([self.neighbors_of(v) for v in range(self.V)])

    def check_invariants(self) -> None:
        """Assert degree regularity, simplicity, symmetry, connectivity."""
        nbr = self.neighbor_array()
        if nbr.shape != (self.V, self.r):
            raise GraphError(f"neighbor table shape {nbr.shape} != ({self.V}, {self.r})")
        for v in range(self.V):
            row = nbr[v]
            if len(set(row.tolist())) != self.r:
                raise GraphError(f"vertex {v} has duplicate neighbors")
            if v in row:
                raise GraphError(f"vertex {v} has a self-loop")
        edge_set = {(v, int(w)) for v in range(self.V) for w in nbr[v]}
        for v, w in edge_set:
            if (w, v) not in edge_set:
                raise GraphError(f"asymmetric adjacency: {v}->{w} without {w}->{v}")
        if not _connected(nbr):
            raise GraphError("graph is not connected")


def _connected(neighbors: np.ndarray) -> bool:
    V = neighbors.shape[0]
    seen = np.zeros(V, dtype=bool)
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        v = queue.popleft()
        for w in neighbors[v]:
            if not seen[w]:
                seen[w] = True
                count += 1
                queue.append(int(w))
    return count == V


def _torus(d: int, L: int) -> RegularGraph:
    V = L**d
    shape = (L,) * d
    idx = np.arange(V, dtype=np.int64).reshape(shape)
    neighbors = np.empty((V, 2 * d), dtype=np.int64)
    for axis in range(d):
        # row-major vertex index: axis 0 is the slowest-varying coordinate
        neighbors[:, 2 * axis] = np.roll(idx, -1, axis=axis).reshape(-1)
        neighbors[:, 2 * axis + 1] = np.roll(idx, 1, axis=axis).reshape(-1)
    return RegularGraph(V=V, r=2 * d, neighbors=neighbors)


def build_graph(spec: GraphSpec) -> RegularGraph:
    """Construct the graph described by ``spec``.

    Torus vertices are indexed row-major over their coordinate tuples,
    so observables can be mapped back to lattice positions.
    """
    spec.validate()
    if spec.kind == "ring":
        return _torus(1, spec.L)
    if spec.kind == "torus":
        return _torus(spec.d, spec.L)
    if spec.kind == "complete":
        return RegularGraph(V=spec.V, r=spec.V - 1, neighbors=None)
    return random_regular(spec.V, spec.r, spec.graph_seed)


def random_regular(V: int, r: int, graph_seed: int, max_retries: int = 10_000) -> RegularGraph:
    """Uniform simple connected r-regular graph via the pairing model.

    The whole pairing is redrawn on any self-loop or multi-edge, which
    keeps the accepted graph exactly uniform over simple r-regular
    graphs; a disconnected draw is likewise redrawn (disconnection
    probability vanishes for r >= 3). Deterministic given graph_seed.
    """
    GraphSpec(kind="random_regular", V=V, r=r, graph_seed=graph_seed).validate()
    rng = np.random.default_rng(graph_seed)
    stubs_base = np.repeat(np.arange(V, dtype=np.int64), r)
    for _ in range(max_retries):
        stubs = rng.permutation(stubs_base)
        u, w = stubs[0::2], stubs[1::2]
        if np.any(u == w):
            continue
        lo, hi = np.minimum(u, w), np.maximum(u, w)
        keys = lo * V + hi
        if len(np.unique(keys)) != len(keys):
            continue
        neighbors = _adjacency_from_pairs(V, r, u, w)
        if not _connected(neighbors):
            continue
        return RegularGraph(V=V, r=r, neighbors=neighbors)
    raise GraphError(
        f"random_regular(V={V}, r={r}, graph_seed={graph_seed}): no simple "
        f"connected pairing found in {max_retries} redraws"
    )


def _adjacency_from_pairs(V: int, r: int, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    neighbors = np.empty((V, r), dtype=np.int64)
    fill = np.zeros(V, dtype=np.int64)
    for a, b in zip(u.tolist(), w.tolist()):
        neighbors[a, fill[a]] = b
        neighbors[b, fill[b]] = a
        fill[a] += 1
        fill[b] += 1
    return neighbors
