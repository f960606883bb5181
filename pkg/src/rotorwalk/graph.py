"""Immutable locally-finite graphs with a fixed cyclic neighbor order per vertex.

The order in which neighbors are listed *is* the local mechanism: a rotor at
vertex ``x`` advances cyclically through ``adjacency(x)`` in list order.
Graphs are stored in CSR form (``indptr``/``indices``) so the hot loops in
:mod:`rotorwalk.kernels` can run over raw arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Graph",
    "Ball",
    "Truncation",
    "GraphError",
    "build_grid_box",
    "build_bary_tree",
    "build_tree_with_ray",
    "build_from_edge_list",
    "parse_edge_list",
    "ball_and_boundary",
    "truncate",
]


class GraphError(ValueError):
    """Raised for malformed graph inputs (self-loops, asymmetry, disconnection)."""


class Graph:
    """Simple connected undirected graph with an ordered neighbor list per vertex.

    Vertices are dense integers ``0..n-1``.  ``labels`` (sparse, id -> string)
    and ``coords`` (per-vertex integer coordinates, for lattice boxes) are
    metadata only.  Instances are immutable after construction and safe to
    share across worker threads.
    """

    __slots__ = ("indptr", "indices", "labels", "coords", "meta", "_label_to_id")

    def __init__(
        self,
        indptr: np.ndarray,
        indices: np.ndarray,
        labels: dict[int, str] | None = None,
        coords: np.ndarray | None = None,
        meta: dict | None = None,
        validate: bool = True,
    ):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int32)
        self.indptr.flags.writeable = False
        self.indices.flags.writeable = False
        self.labels = dict(labels) if labels else {}
        self.coords = coords
        self.meta = dict(meta) if meta else {}
        self._label_to_id = {lab: v for v, lab in self.labels.items()}
        if validate:
            self.validate()

    # -- basic queries ----------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return self.indptr.size - 1

    @property
    def num_edges(self) -> int:
        return self.indices.size // 2

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        """Neighbors of ``v`` in cyclic (rotor) order."""
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def neighbor_slot(self, v: int, w: int) -> int:
        """Position of ``w`` in ``neighbors(v)``; raises if not adjacent."""
        row = self.neighbors(v)
        hits = np.nonzero(row == w)[0]
        if hits.size == 0:
            raise GraphError(f"vertices {v} and {w} are not adjacent")
        return int(hits[0])

    def has_edge(self, v: int, w: int) -> bool:
        return bool(np.any(self.neighbors(v) == w))

    def vertex(self, key: int | str) -> int:
        """Resolve a vertex id, label, or coordinate string like ``1,0,-2``."""
        if isinstance(key, (int, np.integer)):
            v = int(key)
            if not 0 <= v < self.num_vertices:
                raise GraphError(f"vertex id {v} out of range")
            return v
        if key in self._label_to_id:
            return self._label_to_id[key]
        if self.coords is not None and "," in key or (
            self.coords is not None and key.lstrip("-").isdigit()
        ):
            want = np.array([int(t) for t in key.split(",")], dtype=self.coords.dtype)
            if want.size == self.coords.shape[1]:
                hit = np.nonzero((self.coords == want).all(axis=1))[0]
                if hit.size:
                    return int(hit[0])
        if key.lstrip("-").isdigit():
            return self.vertex(int(key))
        raise GraphError(f"unknown vertex {key!r}")

    def label_of(self, v: int) -> str:
        return self.labels.get(int(v), str(int(v)))

    @property
    def is_tree(self) -> bool:
        return self.num_edges == self.num_vertices - 1

    # -- traversal ---------------------------------------------------------

    def bfs_distances(self, source: int) -> np.ndarray:
        """Graph distance from ``source`` to every vertex (vectorized BFS)."""
        n = self.num_vertices
        dist = np.full(n, -1, dtype=np.int32)
        dist[source] = 0
        frontier = np.array([source], dtype=np.int64)
        d = 0
        while frontier.size:
            counts = (self.indptr[frontier + 1] - self.indptr[frontier]).astype(np.int64)
            total = int(counts.sum())
            if total == 0:
                break
            flat = np.repeat(self.indptr[frontier], counts) + (
                np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            )
            nbrs = self.indices[flat].astype(np.int64)
            fresh = nbrs[dist[nbrs] < 0]
            if fresh.size == 0:
                break
            fresh = np.unique(fresh)
            d += 1
            dist[fresh] = d
            frontier = fresh
        return dist

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        n = self.num_vertices
        if self.indptr[0] != 0 or self.indptr[-1] != self.indices.size:
            raise GraphError("inconsistent CSR index arrays")
        if n == 0:
            raise GraphError("empty graph")
        rows = np.repeat(np.arange(n, dtype=np.int64), self.degrees)
        cols = self.indices.astype(np.int64)
        if np.any(rows == cols):
            raise GraphError("self-loop")
        # duplicate neighbor within one row
        key = rows * n + cols
        if np.unique(key).size != key.size:
            raise GraphError("repeated neighbor in adjacency list")
        # symmetry: the multiset of (u,v) equals the multiset of (v,u)
        fwd = np.sort(key)
        bwd = np.sort(cols * n + rows)
        if not np.array_equal(fwd, bwd):
            raise GraphError("adjacency is not symmetric")
        if n > 1 and np.any(self.bfs_distances(0) < 0):
            raise GraphError("graph is not connected")

    # -- serialization -----------------------------------------------------

    def to_edge_list_lines(self) -> list[str]:
        """One edge per line, ``u v``, each edge once, in adjacency order."""
        lines = []
        seen = set()
        for v in range(self.num_vertices):
            for w in self.neighbors(v):
                e = (min(v, int(w)), max(v, int(w)))
                if e not in seen:
                    seen.add(e)
                    lines.append(f"{self.label_of(v)} {self.label_of(int(w))}")
        return lines

    def metadata(self, sink: frozenset[int] | None = None) -> dict:
        degs = self.degrees
        hist_vals, hist_counts = np.unique(degs, return_counts=True)
        md = {
            "vertices": self.num_vertices,
            "edges": self.num_edges,
            "degree_histogram": {int(d): int(c) for d, c in zip(hist_vals, hist_counts)},
        }
        if self.meta:
            md["family"] = self.meta
        if sink is not None:
            md["sink"] = sorted(int(v) for v in sink)
        if self.labels:
            md["labeled_vertices"] = {int(v): lab for v, lab in sorted(self.labels.items())}
        return md

    def metadata_json(self, sink: frozenset[int] | None = None) -> str:
        return json.dumps(self.metadata(sink), indent=2, sort_keys=True)

    @classmethod
    def from_adjacency(
        cls,
        adjacency: list[list[int]],
        labels: dict[int, str] | None = None,
        coords: np.ndarray | None = None,
        meta: dict | None = None,
        validate: bool = True,
    ) -> "Graph":
        degs = np.array([len(row) for row in adjacency], dtype=np.int64)
        indptr = np.zeros(degs.size + 1, dtype=np.int64)
        np.cumsum(degs, out=indptr[1:])
        if degs.sum():
            indices = np.concatenate([np.asarray(row, dtype=np.int32) for row in adjacency if row])
        else:
            indices = np.zeros(0, dtype=np.int32)
        return cls(indptr, indices, labels=labels, coords=coords, meta=meta, validate=validate)


@dataclass(frozen=True)
class Ball:
    """Ball ``B_r`` around a center with its boundary sphere ``Z_r``."""

    center: int
    radius: int
    vertices: np.ndarray  # sorted ids at distance <= radius
    boundary: np.ndarray  # sorted ids at distance == radius
    distances: np.ndarray = field(repr=False)  # full distance table, -1 outside component


@dataclass(frozen=True)
class Truncation:
    """Induced subgraph of a ball, with the sphere as wired sink.

    ``to_parent[new_id]`` maps back into the parent graph; relative neighbor
    order is inherited, which is what makes walks on the truncation couple
    step-for-step with walks on the parent stopped at the sphere.
    """

    graph: Graph
    sink: frozenset[int]
    to_parent: np.ndarray
    from_parent: dict[int, int]


# -- builders ---------------------------------------------------------------


def build_grid_box(dim: int, radius: int, norm: str = "linf") -> tuple[Graph, frozenset[int]]:
    """Finite box of the integer lattice with its outer shell as sink.

    ``norm="linf"`` keeps all points with max-coordinate <= radius (default);
    ``norm="l1"`` keeps the diamond with coordinate-sum <= radius.  The sink is
    the set of points at lattice norm exactly ``radius``.  Neighbor order is
    ``(+e1, -e1, +e2, -e2, ...)`` filtered to points inside the box.
    """
    if dim < 1:
        raise GraphError("dimension must be >= 1")
    if radius < 1:
        raise GraphError("radius must be >= 1")
    if norm not in ("linf", "l1"):
        raise GraphError(f"unknown norm {norm!r}")

    side = 2 * radius + 1
    grids = np.meshgrid(*([np.arange(-radius, radius + 1)] * dim), indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1).astype(np.int32)
    if norm == "l1":
        keep = np.abs(coords).sum(axis=1) <= radius
        coords = coords[keep]
    n = coords.shape[0]

    # dense index into the bounding cube for O(1) neighbor lookup
    cube_index = np.full(side**dim, -1, dtype=np.int64)
    strides = side ** np.arange(dim - 1, -1, -1)
    flat = (coords + radius) @ strides
    cube_index[flat] = np.arange(n)

    nbr_cols = np.full((n, 2 * dim), -1, dtype=np.int64)
    for axis in range(dim):
        for slot, step in ((2 * axis, 1), (2 * axis + 1, -1)):
            shifted = coords.copy()
            shifted[:, axis] += step
            ok = np.abs(shifted[:, axis]) <= radius
            if norm == "l1":
                ok &= np.abs(shifted).sum(axis=1) <= radius
            tgt = np.full(n, -1, dtype=np.int64)
            tgt[ok] = cube_index[(shifted[ok] + radius) @ strides]
            nbr_cols[:, slot] = tgt

    mask = nbr_cols >= 0
    degs = mask.sum(axis=1).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degs, out=indptr[1:])
    indices = nbr_cols[mask].astype(np.int32)

    if norm == "linf":
        shell = np.abs(coords).max(axis=1) == radius
    else:
        shell = np.abs(coords).sum(axis=1) == radius
    sink = frozenset(np.nonzero(shell)[0].tolist())
    meta = {"family": "grid", "dim": dim, "radius": radius, "norm": norm,
            "start": int(np.nonzero((coords == 0).all(axis=1))[0][0])}
    g = Graph(indptr, indices, coords=coords, meta=meta, validate=False)
    return g, sink


def _bary_tree_csr(b: int, depth: int) -> tuple[np.ndarray, np.ndarray, int]:
    """CSR adjacency of the rooted tree where every non-leaf has b children.

    Heap layout: children of v are b*v+1 .. b*v+b.  Neighbor order is
    (parent, child_1, ..., child_b); the root has no parent slot.
    """
    n = (b ** (depth + 1) - 1) // (b - 1)
    first_leaf = (b**depth - 1) // (b - 1)
    degs = np.full(n, b + 1, dtype=np.int64)
    degs[0] = b
    degs[first_leaf:] = 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degs, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int32)
    internal = np.arange(1, first_leaf, dtype=np.int64)
    # root: children only
    indices[0:b] = np.arange(1, b + 1)
    # internal vertices: parent then children
    if internal.size:
        starts = indptr[internal]
        indices[starts] = (internal - 1) // b
        for j in range(b):
            indices[starts + 1 + j] = b * internal + 1 + j
    leaves = np.arange(first_leaf, n, dtype=np.int64)
    indices[indptr[leaves]] = (leaves - 1) // b
    return indptr, indices, n


def build_bary_tree(b: int, depth: int) -> tuple[Graph, frozenset[int]]:
    """Rooted tree with root degree ``b`` and internal degree ``b+1``.

    Leaves at the given depth form the sink.
    """
    if b < 2:
        raise GraphError("branching must be >= 2")
    if depth < 1:
        raise GraphError("depth must be >= 1")
    indptr, indices, n = _bary_tree_csr(b, depth)
    first_leaf = (b**depth - 1) // (b - 1)
    sink = frozenset(range(first_leaf, n))
    meta = {"family": "bary", "b": b, "depth": depth, "start": 0}
    g = Graph(indptr, indices, labels={0: "o"}, meta=meta, validate=False)
    return g, sink


def build_tree_with_ray(b: int, depth: int, ray: int) -> tuple[Graph, frozenset[int]]:
    """Rooted tree as in :func:`build_bary_tree` plus a path y_0..y_ray off the root.

    Sink = tree leaves plus the far end of the path.  The walk start defaults
    to the attachment vertex ``y_0``.  The root lists ``y_0`` in the parent
    slot; path vertices list their root-side neighbor first.
    """
    if b < 2:
        raise GraphError("branching must be >= 2")
    if depth < 1 or ray < 1:
        raise GraphError("depth and ray length must be >= 1")
    tp, ti, ntree = _bary_tree_csr(b, depth)
    n = ntree + ray + 1
    degs = np.empty(n, dtype=np.int64)
    degs[:ntree] = np.diff(tp)
    degs[0] += 1  # root gains the ray attachment
    degs[ntree : n - 1] = 2
    degs[n - 1] = 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degs, out=indptr[1:])
    indices = np.empty(indptr[-1], dtype=np.int32)
    # root: y_0 first (parent slot), then its children
    indices[0] = ntree
    indices[1 : 1 + b] = ti[0:b]
    # remaining tree vertices keep their layout
    indices[indptr[1] : indptr[ntree]] = ti[tp[1] :]
    # ray: y_i lists root-side neighbor first
    y = np.arange(ray + 1, dtype=np.int64) + ntree
    indices[indptr[y[:-1]]] = np.concatenate([[0], y[:-2]])
    indices[indptr[y[:-1]] + 1] = y[1:]
    indices[indptr[y[-1]]] = y[-2] if ray >= 1 else 0

    first_leaf = (b**depth - 1) // (b - 1)
    sink = frozenset(range(first_leaf, ntree)) | {n - 1}
    labels = {0: "o"}
    for i in range(ray + 1):
        labels[ntree + i] = f"y{i}"
    meta = {"family": "tree-ray", "b": b, "depth": depth, "ray": ray, "start": ntree}
    g = Graph(indptr, indices, labels=labels, meta=meta, validate=False)
    return g, sink


def parse_edge_list(text: str) -> tuple[list[tuple[str, str]], bool]:
    """Parse ``u v`` lines with ``#`` comments; returns (edges, all_integer)."""
    edges: list[tuple[str, str]] = []
    all_int = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'u v', got {raw!r}")
        u, v = parts
        if not (u.lstrip("-").isdigit() and v.lstrip("-").isdigit()):
            all_int = False
        edges.append((u, v))
    return edges, all_int


def build_from_edge_list(
    edges: list[tuple], orders: dict | None = None
) -> Graph:
    """Graph from an explicit edge list.

    Neighbor order is first appearance in the list, unless ``orders`` gives an
    explicit neighbor sequence for a vertex.  Tokens may be integers (used as
    dense ids when they form ``0..n-1``) or arbitrary labels.
    """
    if not edges:
        raise GraphError("empty edge list")
    str_edges = [(str(u), str(v)) for u, v in edges]
    tokens: list[str] = []
    seen_tok = set()
    for u, v in str_edges:
        for t in (u, v):
            if t not in seen_tok:
                seen_tok.add(t)
                tokens.append(t)
    all_int = all(t.lstrip("-").isdigit() for t in tokens)
    if all_int and sorted(int(t) for t in tokens) == list(range(len(tokens))):
        ids = {t: int(t) for t in tokens}
        labels = None
    else:
        ids = {t: i for i, t in enumerate(tokens)}
        labels = {i: t for t, i in ids.items()}

    n = len(tokens)
    adjacency: list[list[int]] = [[] for _ in range(n)]
    edge_set = set()
    for u, v in str_edges:
        iu, iv = ids[u], ids[v]
        if iu == iv:
            raise GraphError(f"self-loop at {u}")
        key = (min(iu, iv), max(iu, iv))
        if key in edge_set:
            raise GraphError(f"duplicate edge {u} {v}")
        edge_set.add(key)
        adjacency[iu].append(iv)
        adjacency[iv].append(iu)

    if orders:
        for key, order in orders.items():
            v = ids[str(key)] if str(key) in ids else int(key)
            want = [ids[str(w)] if str(w) in ids else int(w) for w in order]
            if sorted(want) != sorted(adjacency[v]):
                raise GraphError(f"order override for {key} does not match neighbors")
            adjacency[v] = want

    g = Graph.from_adjacency(adjacency, labels=labels, meta={"family": "edge-list"})
    return g


# -- balls and truncations ----------------------------------------------------


def ball_and_boundary(graph: Graph, center: int, radius: int) -> Ball:
    """``B_r`` and its sphere ``Z_r`` by BFS; output vertex order is sorted."""
    if radius < 0:
        raise GraphError("radius must be >= 0")
    dist = graph.bfs_distances(center)
    inside = np.nonzero((dist >= 0) & (dist <= radius))[0]
    sphere = np.nonzero(dist == radius)[0]
    return Ball(center=int(center), radius=int(radius), vertices=inside,
                boundary=sphere, distances=dist)


def truncate(graph: Graph, center: int, radius: int) -> Truncation:
    """Induced subgraph on ``B_r`` with sink ``Z_r``, preserving neighbor order."""
    if radius < 1:
        raise GraphError("radius must be >= 1")
    ball = ball_and_boundary(graph, center, radius)
    keep = np.zeros(graph.num_vertices, dtype=bool)
    keep[ball.vertices] = True
    renum = np.cumsum(keep) - 1  # old id -> new id where keep

    degs = graph.degrees
    rows = np.repeat(np.arange(graph.num_vertices, dtype=np.int64), degs)
    entry_ok = keep[rows] & keep[graph.indices]
    new_indices = renum[graph.indices[entry_ok]].astype(np.int32)
    per_row = np.bincount(rows[entry_ok], minlength=graph.num_vertices)[keep]
    indptr = np.zeros(per_row.size + 1, dtype=np.int64)
    np.cumsum(per_row, out=indptr[1:])

    to_parent = ball.vertices.astype(np.int64)
    labels = {int(renum[v]): lab for v, lab in graph.labels.items() if keep[v]}
    coords = graph.coords[keep] if graph.coords is not None else None
    meta = dict(graph.meta)
    meta["truncated"] = {"center": int(center), "radius": int(radius)}
    if "start" in meta and keep[meta["start"]]:
        meta["start"] = int(renum[meta["start"]])
    sub = Graph(indptr, new_indices, labels=labels, coords=coords, meta=meta, validate=False)
    sink = frozenset(int(renum[v]) for v in ball.boundary)
    from_parent = {int(p): i for i, p in enumerate(to_parent)}
    return Truncation(graph=sub, sink=sink, to_parent=to_parent, from_parent=from_parent)
