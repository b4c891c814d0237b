"""Finite weighted multigraphs with integer edge multiplicities.

Multiplicity doubles as conductance (one ohm per parallel edge), and a set
of vertices can be marked as an absorbing boundary, which is how infinite
graphs are truncated for simulation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LineSpec",
    "MultiGraph",
    "build_line_graph",
    "build_lattice",
    "build_regular_tree",
    "contract_vertex_set",
    "degree_bound",
    "random_connected_multigraph",
    "read_graph",
    "write_graph",
]


@dataclass(frozen=True)
class LineSpec:
    """Multiplicities e_0, e_1, ... of the parallel bundles joining level i to i+1."""

    multiplicities: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(x) for x in self.multiplicities)
        if len(m) < 2:
            raise ValueError("line spec needs at least 2 levels")
        if any(x < 1 for x in m):
            raise ValueError("multiplicities must be positive integers")
        object.__setattr__(self, "multiplicities", m)

    def __len__(self) -> int:
        return len(self.multiplicities)

    @classmethod
    def geometric(cls, base: int, length: int) -> "LineSpec":
        """e_i = base**i for i < length."""
        return cls(tuple(base**i for i in range(length)))


class MultiGraph:
    """Immutable undirected multigraph over dense integer vertex ids.

    Adjacency is stored CSR style: one entry per neighbor bundle, with the
    bundle multiplicity alongside. ``boundary`` vertices absorb the walk.
    ``labels`` optionally carries a semantic coordinate per vertex (line
    level, lattice point, tree address) and ``kind`` tags the family the
    graph was built from.
    """

    def __init__(self, vertex_count, edges, boundary=(), labels=None, kind="generic"):
        n = int(vertex_count)
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        merged: dict[tuple[int, int], int] = {}
        for u, v, m in edges:
            u, v, m = int(u), int(v), int(m)
            if m < 1:
                raise ValueError(f"multiplicity must be >= 1, got {m} on ({u},{v})")
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for {n} vertices")
            key = (u, v) if u < v else (v, u)
            merged[key] = merged.get(key, 0) + m
        self.n = n
        self.boundary = frozenset(int(b) for b in boundary)
        if any(not (0 <= b < n) for b in self.boundary):
            raise ValueError("boundary vertex out of range")
        self.labels = list(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != n:
            raise ValueError("labels length must match vertex count")
        self.kind = kind

        eu = np.fromiter((k[0] for k in merged), dtype=np.int64, count=len(merged))
        ev = np.fromiter((k[1] for k in merged), dtype=np.int64, count=len(merged))
        em = np.fromiter(merged.values(), dtype=np.int64, count=len(merged))
        order = np.lexsort((ev, eu))
        self._eu, self._ev, self._em = eu[order], ev[order], em[order]

        src = np.concatenate([self._eu, self._ev])
        dst = np.concatenate([self._ev, self._eu])
        wts = np.concatenate([self._em, self._em])
        order = np.lexsort((dst, src))
        src, dst, wts = src[order], dst[order], wts[order]
        self._indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self._indptr, src + 1, 1)
        np.cumsum(self._indptr, out=self._indptr)
        self._nbr = dst
        self._mult = wts
        # per-slice running multiplicity totals, used to sample edge copies
        self._cum = np.copy(wts)
        for v in range(n):
            s, e = self._indptr[v], self._indptr[v + 1]
            if e > s:
                np.cumsum(wts[s:e], out=self._cum[s:e])
        self._deg = self._indptr_degrees()
        self._degf = self._deg.astype(np.float64)
        self._bmask = np.zeros(n, dtype=bool)
        if self.boundary:
            self._bmask[list(self.boundary)] = True
        self._label_index: dict | None = None

    def _indptr_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self._nbr, self._mult)
        return deg

    # -- queries ---------------------------------------------------------

    def degree(self, v: int) -> int:
        return int(self._deg[v])

    @property
    def degrees(self) -> np.ndarray:
        return self._deg

    @property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Canonical bundle arrays (u, v, multiplicity) with u < v."""
        return self._eu, self._ev, self._em

    @property
    def bundle_count(self) -> int:
        return len(self._eu)

    @property
    def total_multiplicity(self) -> int:
        return int(self._em.sum())

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        s, e = self._indptr[v], self._indptr[v + 1]
        return self._nbr[s:e], self._mult[s:e]

    def multiplicity(self, u: int, v: int) -> int:
        nbrs, mult = self.neighbors(u)
        hits = mult[nbrs == v]
        return int(hits[0]) if len(hits) else 0

    def is_boundary(self, v: int) -> bool:
        return bool(self._bmask[v])

    def index_of(self, label):
        """Vertex id carrying the given label."""
        if self.labels is None:
            raise ValueError("graph carries no labels")
        if self._label_index is None:
            self._label_index = {lab: i for i, lab in enumerate(self.labels)}
        return self._label_index[label]

    def component_of(self, start: int, forbidden_edges=None) -> np.ndarray:
        """Vertex ids reachable from start, optionally ignoring some bundles."""
        blocked = set()
        if forbidden_edges:
            for u, v in forbidden_edges:
                blocked.add((u, v) if u < v else (v, u))
        seen = np.zeros(self.n, dtype=bool)
        seen[start] = True
        stack = [start]
        while stack:
            v = stack.pop()
            nbrs, _ = self.neighbors(v)
            for w in nbrs:
                w = int(w)
                if blocked and ((v, w) if v < w else (w, v)) in blocked:
                    continue
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        return np.nonzero(seen)[0]

    def __eq__(self, other):
        if not isinstance(other, MultiGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.boundary == other.boundary
            and np.array_equal(self._eu, other._eu)
            and np.array_equal(self._ev, other._ev)
            and np.array_equal(self._em, other._em)
        )

    def __hash__(self):
        return hash((self.n, len(self._eu), self.total_multiplicity))

    def __repr__(self):
        return (
            f"MultiGraph(n={self.n}, bundles={self.bundle_count}, "
            f"total_mult={self.total_multiplicity}, boundary={len(self.boundary)}, "
            f"kind={self.kind!r})"
        )

    def validate(self):
        """Re-derive the adjacency invariants; raises on breakage."""
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self._eu, self._em)
        np.add.at(deg, self._ev, self._em)
        if not np.array_equal(deg, self._deg):
            raise AssertionError("degree table out of sync with bundles")
        if int(deg.sum()) != 2 * self.total_multiplicity:
            raise AssertionError("degree sum != twice total multiplicity")
        for v in range(self.n):
            nbrs, mult = self.neighbors(v)
            for w, m in zip(nbrs, mult):
                if self.multiplicity(int(w), v) != int(m):
                    raise AssertionError(f"asymmetric adjacency at ({v},{w})")
        return True


# -- constructors ----------------------------------------------------------


def build_line_graph(spec: LineSpec) -> MultiGraph:
    """Levels 0..N joined by bundles e_i, with level N as absorbing boundary."""
    if not isinstance(spec, LineSpec):
        spec = LineSpec(tuple(spec))
    n_levels = len(spec)
    edges = [(i, i + 1, m) for i, m in enumerate(spec.multiplicities)]
    g = MultiGraph(
        n_levels + 1,
        edges,
        boundary={n_levels},
        labels=list(range(n_levels + 1)),
        kind="line",
    )
    g.line_spec = spec
    return g


def build_lattice(dim: int, radius: int) -> MultiGraph:
    """Sup-norm ball of the unit lattice; the radius shell absorbs."""
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    side = 2 * radius + 1
    coords = list(itertools.product(range(-radius, radius + 1), repeat=dim))
    index = {c: i for i, c in enumerate(coords)}
    edges = []
    for c in coords:
        for axis in range(dim):
            nxt = list(c)
            nxt[axis] += 1
            nxt = tuple(nxt)
            if nxt in index:
                edges.append((index[c], index[nxt], 1))
    boundary = {i for c, i in index.items() if max(abs(x) for x in c) == radius}
    return MultiGraph(side**dim, edges, boundary=boundary, labels=coords, kind="lattice")


def build_regular_tree(branching: int, depth: int) -> MultiGraph:
    """Rooted tree: root degree = branching, internal degree = branching + 1.

    Leaves at the requested depth form the absorbing boundary. Labels are
    (depth, index-within-level) and stay stable across depth truncations.
    """
    if branching < 2:
        raise ValueError("branching must be >= 2")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    labels = []
    edges = []
    level_start = [0]
    vid = 0
    for d in range(depth + 1):
        count = branching**d
        for k in range(count):
            labels.append((d, k))
            vid += 1
        level_start.append(vid)
    for d in range(depth):
        for k in range(branching**d):
            parent = level_start[d] + k
            for c in range(branching):
                child = level_start[d + 1] + k * branching + c
                edges.append((parent, child, 1))
    boundary = set(range(level_start[depth], level_start[depth + 1]))
    return MultiGraph(vid, edges, boundary=boundary, labels=labels, kind="tree")


# -- surgery ---------------------------------------------------------------


def contract_with_map(g: MultiGraph, s) -> tuple[MultiGraph, np.ndarray]:
    """Merge the vertex set s into one vertex; returns (graph, old-to-new map).

    Parallel bundles into the merged vertex sum their multiplicities and
    bundles internal to s are dropped. The merged vertex takes the slot of
    the smallest member of s; other ids keep their relative order.
    """
    s = {int(x) for x in s}
    if not s:
        raise ValueError("vertex set to contract must be nonempty")
    if any(not (0 <= x < g.n) for x in s):
        raise ValueError("contract set contains out-of-range vertex")
    anchor = min(s)
    old_to_new = np.empty(g.n, dtype=np.int64)
    nxt = 0
    merged_id = -1
    for v in range(g.n):
        if v == anchor:
            merged_id = nxt
            old_to_new[v] = nxt
            nxt += 1
        elif v in s:
            continue
        else:
            old_to_new[v] = nxt
            nxt += 1
    for v in s:
        old_to_new[v] = merged_id
    eu, ev, em = g.edge_arrays
    nu, nv = old_to_new[eu], old_to_new[ev]
    keep = nu != nv
    edges = zip(nu[keep].tolist(), nv[keep].tolist(), em[keep].tolist())
    boundary = {int(old_to_new[b]) for b in g.boundary}
    labels = None
    if g.labels is not None:
        labels = [None] * nxt
        for v in range(g.n):
            if v not in s or v == anchor:
                labels[old_to_new[v]] = g.labels[v]
    out = MultiGraph(nxt, edges, boundary=boundary, labels=labels, kind="generic")
    return out, old_to_new


def contract_vertex_set(g: MultiGraph, s) -> MultiGraph:
    """contract_with_map without the id map, for callers that don't need it."""
    return contract_with_map(g, s)[0]


def degree_bound(g: MultiGraph) -> int:
    """Largest multiplicity-weighted degree in the graph."""
    if g.n == 0:
        raise ValueError("empty graph")
    return int(g.degrees.max())


def random_connected_multigraph(rng, max_vertices=10, max_multiplicity=4, extra_edges=None):
    """Small random connected multigraph, for randomized property checks."""
    n = int(rng.integers(2, max_vertices + 1))
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((u, v, int(rng.integers(1, max_multiplicity + 1))))
    if extra_edges is None:
        extra_edges = int(rng.integers(0, n + 1))
    for _ in range(extra_edges):
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u != v:
            edges.append((u, v, int(rng.integers(1, max_multiplicity + 1))))
    return MultiGraph(n, edges)


# -- interchange format ------------------------------------------------------


def write_graph(g: MultiGraph, path):
    """Line-oriented text dump: header, boundary ids, one bundle per line."""
    eu, ev, em = g.edge_arrays
    with open(path, "w") as fh:
        fh.write(f"vertices {g.n} boundary {len(g.boundary)}\n")
        if g.boundary:
            fh.write(" ".join(str(b) for b in sorted(g.boundary)) + "\n")
        for u, v, m in zip(eu.tolist(), ev.tolist(), em.tolist()):
            fh.write(f"{u} {v} {m}\n")


def read_graph(path) -> MultiGraph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "vertices" or header[2] != "boundary":
            raise ValueError(f"bad graph header: {' '.join(header)!r}")
        n, nb = int(header[1]), int(header[3])
        boundary = set()
        if nb:
            boundary = {int(x) for x in fh.readline().split()}
            if len(boundary) != nb:
                raise ValueError("boundary count does not match header")
        edges = []
        for line in fh:
            if not line.strip():
                continue
            u, v, m = line.split()
            edges.append((int(u), int(v), int(m)))
    return MultiGraph(n, edges, boundary=boundary)
