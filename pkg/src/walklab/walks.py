"""Simple random walk simulation and PATH subgraph extraction.

A walk steps from v to a uniformly random incident edge copy, so the
transition probability to a neighbor is multiplicity / degree and the copy
index within a parallel bundle is recorded. That makes "distinct edges
crossed" (the s' statistic on line graphs) well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import MultiGraph

__all__ = [
    "StopRule",
    "WalkTrace",
    "PathSubgraph",
    "simulate",
    "extract_path",
    "union_paths",
    "crossing_stats_line",
    "lattice_walk_positions",
    "write_trace",
]

_UNBOUNDED = np.iinfo(np.int64).max


@dataclass(frozen=True)
class StopRule:
    """Termination rule for ``simulate``."""

    kind: str
    steps: int = _UNBOUNDED
    vertex: int | None = None

    @classmethod
    def max_steps(cls, n: int) -> "StopRule":
        if n < 0:
            raise ValueError("step budget must be >= 0")
        return cls("max_steps", steps=int(n))

    @classmethod
    def until_boundary(cls) -> "StopRule":
        return cls("until_boundary")

    @classmethod
    def until_vertex(cls, v: int) -> "StopRule":
        return cls("until_vertex", vertex=int(v))

    @classmethod
    def until_boundary_or(cls, n: int) -> "StopRule":
        if n < 0:
            raise ValueError("step budget must be >= 0")
        return cls("until_boundary_or", steps=int(n))


@dataclass
class WalkTrace:
    """Realized walk: vertex sequence, per-step edge copy indices, and why it stopped.

    ``copies[t]`` is the index of the parallel copy used by the step from
    ``vertices[t]`` to ``vertices[t+1]``.
    """

    graph: MultiGraph
    vertices: np.ndarray
    copies: np.ndarray
    termination: str

    def __len__(self) -> int:
        return len(self.vertices) - 1

    @property
    def start(self) -> int:
        return int(self.vertices[0])

    @property
    def end(self) -> int:
        return int(self.vertices[-1])

    def edge_triples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-step canonical edge identities (min endpoint, max endpoint, copy)."""
        a, b = self.vertices[:-1], self.vertices[1:]
        return np.minimum(a, b), np.maximum(a, b), self.copies


@dataclass
class PathSubgraph:
    """Vertices visited and distinct edges crossed by one or more walks.

    ``counts[k]`` is the number of traversals (either direction) of the
    distinct edge (eu[k], ev[k], ecopy[k]). On line graphs ``s`` holds the
    total crossings per level and ``s_prime`` the distinct crossed copies
    per level; s >= s' levelwise.
    """

    graph: MultiGraph
    start: int
    eu: np.ndarray
    ev: np.ndarray
    ecopy: np.ndarray
    counts: np.ndarray
    visited: np.ndarray
    frontier: int | None = None
    s: np.ndarray | None = None
    s_prime: np.ndarray | None = None

    @property
    def edge_count(self) -> int:
        return len(self.eu)

    @property
    def total_crossings(self) -> int:
        return int(self.counts.sum())


def _rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate(g: MultiGraph, start: int, stop: StopRule, seed) -> WalkTrace:
    """Run one walk; deterministic for a fixed seed.

    Boundary vertices absorb under every stop rule. ``until_boundary`` and
    ``until_vertex`` run without a step budget, so the caller must make the
    target reachable; ``until_boundary_or`` is the guarded variant.
    """
    start = int(start)
    if not (0 <= start < g.n):
        raise ValueError("start out of range")
    if g.is_boundary(start):
        raise ValueError("start vertex is absorbing")
    if stop.kind in ("until_boundary", "until_boundary_or") and not g.boundary:
        raise ValueError("graph has no boundary to stop at")
    rng = _rng_from(seed)

    indptr, nbr, cum, degf, bmask = g._indptr, g._nbr, g._cum, g._degf, g._bmask
    budget = stop.steps
    target = stop.vertex
    verts = [start]
    copies: list[int] = []
    v = start
    termination = "step_budget"
    buf = rng.random(256)
    bi = 0
    steps = 0
    while True:
        if bmask[v]:
            termination = "hit_boundary"
            break
        if target is not None and v == target:
            termination = "hit_target"
            break
        if steps >= budget:
            termination = "step_budget"
            break
        if degf[v] == 0.0:
            termination = "step_budget"  # stranded: no moves available
            break
        if bi == len(buf):
            buf = rng.random(256)
            bi = 0
        s_, e_ = indptr[v], indptr[v + 1]
        k = int(buf[bi] * degf[v])
        bi += 1
        if k >= cum[e_ - 1]:
            k = int(cum[e_ - 1]) - 1
        slot = s_ + np.searchsorted(cum[s_:e_], k, side="right")
        copy = k - (int(cum[slot - 1]) if slot > s_ else 0)
        v = int(nbr[slot])
        verts.append(v)
        copies.append(copy)
        steps += 1
    return WalkTrace(
        graph=g,
        vertices=np.asarray(verts, dtype=np.int64),
        copies=np.asarray(copies, dtype=np.int64),
        termination=termination,
    )


def _distinct_edges(eu, ev, ec, weights=None):
    """Collapse per-step edge triples to distinct rows with summed weights."""
    if len(eu) == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy(), z.copy(), z.copy()
    order = np.lexsort((ec, ev, eu))
    eu, ev, ec = eu[order], ev[order], ec[order]
    w = np.ones(len(eu), dtype=np.int64) if weights is None else weights[order]
    newrow = np.empty(len(eu), dtype=bool)
    newrow[0] = True
    newrow[1:] = (np.diff(eu) != 0) | (np.diff(ev) != 0) | (np.diff(ec) != 0)
    idx = np.nonzero(newrow)[0]
    sums = np.add.reduceat(w, idx)
    return eu[idx], ev[idx], ec[idx], sums


def extract_path(t: WalkTrace) -> PathSubgraph:
    """PATH of the walk: all visited vertices and distinct crossed edges."""
    eu, ev, ec = t.edge_triples()
    du, dv, dc, counts = _distinct_edges(eu, ev, ec)
    visited = np.unique(t.vertices)
    path = PathSubgraph(
        graph=t.graph,
        start=t.start,
        eu=du,
        ev=dv,
        ecopy=dc,
        counts=counts,
        visited=visited,
        frontier=t.end,
    )
    if t.graph.kind == "line":
        path.s, path.s_prime = crossing_stats_line(t)
    return path


def union_paths(paths) -> PathSubgraph:
    """Union of PATHs of independent walks on one graph; crossing counts add."""
    paths = list(paths)
    if not paths:
        raise ValueError("need at least one path")
    g = paths[0].graph
    for p in paths[1:]:
        if p.graph is not g and p.graph != g:
            raise ValueError("paths live on different graphs")
    if len(paths) == 1:
        p = paths[0]
        return PathSubgraph(
            graph=g,
            start=p.start,
            eu=p.eu.copy(),
            ev=p.ev.copy(),
            ecopy=p.ecopy.copy(),
            counts=p.counts.copy(),
            visited=p.visited.copy(),
            frontier=p.frontier,
            s=None if p.s is None else p.s.copy(),
            s_prime=None if p.s_prime is None else p.s_prime.copy(),
        )
    eu = np.concatenate([p.eu for p in paths])
    ev = np.concatenate([p.ev for p in paths])
    ec = np.concatenate([p.ecopy for p in paths])
    w = np.concatenate([p.counts for p in paths])
    du, dv, dc, counts = _distinct_edges(eu, ev, ec, weights=w)
    visited = np.unique(np.concatenate([p.visited for p in paths]))
    out = PathSubgraph(
        graph=g,
        start=paths[0].start,
        eu=du,
        ev=dv,
        ecopy=dc,
        counts=counts,
        visited=visited,
        frontier=None,
    )
    if g.kind == "line":
        levels = du  # canonical min endpoint is the level on a line graph
        n_levels = g.n - 1
        s = np.zeros(n_levels, dtype=np.int64)
        sp = np.zeros(n_levels, dtype=np.int64)
        np.add.at(s, levels, counts)
        np.add.at(sp, levels, 1)
        out.s, out.s_prime = s, sp
    return out


def crossing_stats_line(t: WalkTrace) -> tuple[np.ndarray, np.ndarray]:
    """Per-level totals on a line graph: s_n crossings, s'_n distinct copies."""
    if t.graph.kind != "line":
        raise ValueError("crossing stats are defined on line graphs only")
    n_levels = t.graph.n - 1
    s = np.zeros(n_levels, dtype=np.int64)
    sp = np.zeros(n_levels, dtype=np.int64)
    if len(t) == 0:
        return s, sp
    eu, ev, ec = t.edge_triples()
    np.add.at(s, eu, 1)
    du, _, _, _ = _distinct_edges(eu, ev, ec)
    np.add.at(sp, du, 1)
    return s, sp


def lattice_walk_positions(dim: int, steps: int, seed, radius: int | None = None):
    """Vectorized unit-lattice walk from the origin.

    Returns (positions, truncated): ``positions`` is a (T+1, dim) int array of
    visited lattice points; when ``radius`` is given the walk is cut at its
    first arrival on the sup-norm shell and ``truncated`` reports that.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    rng = _rng_from(seed)
    moves = np.zeros((2 * dim, dim), dtype=np.int64)
    for axis in range(dim):
        moves[2 * axis, axis] = 1
        moves[2 * axis + 1, axis] = -1
    choices = rng.integers(0, 2 * dim, size=steps)
    pos = np.zeros((steps + 1, dim), dtype=np.int64)
    np.cumsum(moves[choices], axis=0, out=pos[1:])
    truncated = False
    if radius is not None:
        on_shell = np.abs(pos).max(axis=1) >= radius
        hits = np.nonzero(on_shell)[0]
        if len(hits):
            pos = pos[: hits[0] + 1]
            truncated = True
    return pos, truncated


def write_trace(t: WalkTrace, path):
    """Debug dump: one vertex per line with the edge copy index that led to it."""
    with open(path, "w") as fh:
        fh.write(f"{int(t.vertices[0])} -\n")
        for v, c in zip(t.vertices[1:].tolist(), t.copies.tolist()):
            fh.write(f"{v} {c}\n")
        fh.write(f"# termination {t.termination}\n")
