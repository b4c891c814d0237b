"""Effective resistance and energy computations on multigraph networks.

Each parallel edge is a one-ohm resistor, so bundle multiplicity is the
conductance. PATH subgraphs become networks with conductance exactly 1 per
distinct crossed edge; crossing counts never enter the resistance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graphs import MultiGraph, contract_with_map
from .walks import PathSubgraph

__all__ = [
    "ResistanceReport",
    "path_to_network",
    "effective_resistance",
    "path_resistance_line",
    "nash_williams_bound",
    "thomson_energy",
    "resistance_to_infinity",
    "max_pair_resistance",
    "write_resistance_csv",
]

_SOLVE_TOL = 1e-10


@dataclass
class ResistanceReport:
    """Effective resistance between two contracted vertex sets.

    ``value`` is +inf when the sets are disconnected. ``energy`` is the
    dissipation of the realized potential; for the exact solve it equals
    (potential gap)^2 / value up to solver tolerance.
    """

    value: float
    source_set: frozenset
    sink_set: frozenset
    energy: float
    method: str
    potential: np.ndarray | None = None

    @property
    def disconnected(self) -> bool:
        return math.isinf(self.value)


def path_to_network(p: PathSubgraph) -> tuple[MultiGraph, np.ndarray]:
    """PATH as an electrical network: one unit conductance per distinct edge.

    Returns (network, old-to-new vertex map); unvisited vertices map to -1.
    Parallel distinct copies collapse into a bundle whose multiplicity is
    the number of copies crossed.
    """
    old_to_new = -np.ones(p.graph.n, dtype=np.int64)
    old_to_new[p.visited] = np.arange(len(p.visited))
    edges = zip(
        old_to_new[p.eu].tolist(),
        old_to_new[p.ev].tolist(),
        np.ones(len(p.eu), dtype=np.int64).tolist(),
    )
    net = MultiGraph(len(p.visited), edges, kind="path-network")
    net.labels = p.visited.tolist()
    return net, old_to_new


def _as_network(network, *vertex_sets):
    """Normalize to a MultiGraph network, translating PATH vertex ids.

    PathSubgraph callers address vertices by their ids in the walked graph;
    those are mapped onto the compacted network ids here. Unvisited vertices
    in a set raise.
    """
    if not isinstance(network, PathSubgraph):
        return (network, *vertex_sets)
    net, old_to_new = path_to_network(network)
    mapped = []
    for s in vertex_sets:
        out = set()
        for v in s:
            w = int(old_to_new[int(v)])
            if w < 0:
                raise ValueError(f"vertex {v} is not on the path")
            out.add(w)
        mapped.append(out)
    return (net, *mapped)


def _laplacian_dense(g: MultiGraph) -> np.ndarray:
    L = np.zeros((g.n, g.n))
    eu, ev, em = g.edge_arrays
    w = em.astype(np.float64)
    np.add.at(L, (eu, eu), w)
    np.add.at(L, (ev, ev), w)
    np.add.at(L, (eu, ev), -w)
    np.add.at(L, (ev, eu), -w)
    return L


def _laplacian_sparse(g: MultiGraph) -> sp.csr_matrix:
    eu, ev, em = g.edge_arrays
    w = em.astype(np.float64)
    rows = np.concatenate([eu, ev, eu, ev])
    cols = np.concatenate([eu, ev, ev, eu])
    data = np.concatenate([w, w, -w, -w])
    return sp.csr_matrix((data, (rows, cols)), shape=(g.n, g.n))


def _energy(g: MultiGraph, potential: np.ndarray) -> float:
    eu, ev, em = g.edge_arrays
    d = potential[eu] - potential[ev]
    return float(np.sum(em * d * d))


def effective_resistance(network, a_set, b_set, method="laplacian_solve") -> ResistanceReport:
    """Exact effective resistance between two disjoint vertex sets.

    ``laplacian_solve`` grounds the contracted sink and solves the reduced
    sparse system for a unit current; ``brute_force`` goes through the dense
    pseudoinverse instead. Disconnected terminals yield an inf-valued report
    rather than an error.
    """
    g, a_set, b_set = _as_network(network, a_set, b_set)
    a_set = frozenset(int(v) for v in a_set)
    b_set = frozenset(int(v) for v in b_set)
    if not a_set or not b_set:
        raise ValueError("terminal sets must be nonempty")
    if a_set & b_set:
        raise ValueError("terminal sets overlap")
    ids = np.arange(g.n, dtype=np.int64)
    if len(a_set) > 1:
        g, m = contract_with_map(g, a_set)
        ids = m[ids]
    a = int(ids[next(iter(a_set))])
    bs = {int(ids[v]) for v in b_set}
    if len(bs) > 1:
        g, m = contract_with_map(g, bs)
        ids = m[ids]
    b = int(ids[next(iter(b_set))])
    a = int(ids[next(iter(a_set))])

    comp = g.component_of(a)
    if b not in set(comp.tolist()):
        return ResistanceReport(
            value=math.inf,
            source_set=a_set,
            sink_set=b_set,
            energy=0.0,
            method=method,
        )
    if method == "laplacian_solve":
        potential = _solve_grounded(g, comp, a, b)
    elif method == "brute_force":
        potential = _solve_pinv(g, comp, a, b)
    else:
        raise ValueError(f"unknown method {method!r}")
    value = float(potential[a] - potential[b])
    return ResistanceReport(
        value=value,
        source_set=a_set,
        sink_set=b_set,
        energy=_energy(g, potential),
        method=method,
        potential=potential,
    )


def _solve_grounded(g, comp, a, b):
    """Unit current a -> b with b grounded, solved on the reduced sparse system."""
    keep = comp[comp != b]
    pos = -np.ones(g.n, dtype=np.int64)
    pos[keep] = np.arange(len(keep))
    L = _laplacian_sparse(g)
    A = L[keep][:, keep].tocsc()
    rhs = np.zeros(len(keep))
    rhs[pos[a]] = 1.0
    lu = spla.splu(A)
    x = lu.solve(rhs)
    for _ in range(4):
        r = rhs - A @ x
        if float(np.abs(r).max()) <= _SOLVE_TOL * max(1.0, float(np.abs(x).max())):
            break
        x = x + lu.solve(r)
    potential = np.zeros(g.n)
    potential[keep] = x
    return potential


def _solve_pinv(g, comp, a, b):
    """Dense pseudoinverse route; independent of the sparse solver path."""
    sub = comp
    pos = -np.ones(g.n, dtype=np.int64)
    pos[sub] = np.arange(len(sub))
    L = _laplacian_dense(g)[np.ix_(sub, sub)]
    rhs = np.zeros(len(sub))
    rhs[pos[a]] = 1.0
    rhs[pos[b]] = -1.0
    x = np.linalg.pinv(L) @ rhs
    potential = np.zeros(g.n)
    potential[sub] = x - x[pos[b]]
    return potential


def path_resistance_line(p: PathSubgraph) -> float:
    """Series resistance of a line-graph PATH: sum of 1/s'_n over the crossed prefix."""
    if p.s_prime is None:
        raise ValueError("path has no line-level statistics")
    total = 0.0
    for c in p.s_prime.tolist():
        if c == 0:
            break
        total += 1.0 / c
    return total


def nash_williams_bound(network, cutsets, a_set, b_set) -> float:
    """Sum over disjoint separating edge-cutsets of 1 / (cutset conductance).

    Cutsets are collections of (u, v) bundle pairs. Each must separate the
    two terminal sets once removed, and no bundle may appear in two cutsets;
    the returned value never exceeds the effective resistance.
    """
    g, a_set, b_set = _as_network(network, a_set, b_set)
    a_set = {int(v) for v in a_set}
    b_set = {int(v) for v in b_set}
    seen = set()
    total = 0.0
    for k, cut in enumerate(cutsets):
        canon = {(min(int(u), int(v)), max(int(u), int(v))) for u, v in cut}
        if not canon:
            raise ValueError(f"cutset {k} is empty")
        if canon & seen:
            raise ValueError(f"cutset {k} shares an edge with an earlier cutset")
        seen |= canon
        conductance = 0
        for u, v in canon:
            m = g.multiplicity(u, v)
            if m == 0:
                raise ValueError(f"cutset {k} names a missing edge ({u},{v})")
            conductance += m
        reach = set(g.component_of(next(iter(a_set)), forbidden_edges=canon).tolist())
        for v in a_set:
            reach |= set(g.component_of(v, forbidden_edges=canon).tolist())
        if reach & b_set:
            raise ValueError(f"cutset {k} does not separate the terminal sets")
        total += 1.0 / conductance
    return total


def thomson_energy(network, potential, a_set, b_set) -> float:
    """Dissipation of an arbitrary potential that is constant on each terminal set.

    Always at least (gap)^2 / R_exact, with equality exactly when the
    potential is harmonic off the terminals.
    """
    g, a_set, b_set = _as_network(network, a_set, b_set)
    u = np.asarray(potential, dtype=np.float64)
    if isinstance(network, PathSubgraph) and len(u) == network.graph.n:
        u = u[network.visited]
    if len(u) != g.n:
        raise ValueError("potential length must match vertex count")
    for name, s in (("source", a_set), ("sink", b_set)):
        vals = u[list(s)]
        if len(vals) and not np.allclose(vals, vals[0], rtol=0, atol=1e-12):
            raise ValueError(f"potential is not constant on the {name} set")
    return _energy(g, u)


def resistance_to_infinity(graphs, k_sets, method="laplacian_solve") -> np.ndarray:
    """Resistance from a contracted core to the contracted boundary, per truncation.

    ``graphs`` is a family of growing truncations and ``k_sets`` the matching
    core vertex ids in each. The series is non-decreasing (shorting the
    removed outer shells can only lower resistance) and its limit is the
    resistance to infinity.
    """
    out = []
    for g, k in zip(graphs, k_sets):
        k = {int(v) for v in k}
        if k & g.boundary:
            raise ValueError("core set touches the absorbing boundary")
        if not g.boundary:
            raise ValueError("truncation has no boundary shell")
        out.append(effective_resistance(g, k, g.boundary, method=method).value)
    return np.asarray(out)


def max_pair_resistance(path_or_network, mode="sampled", samples=64, seed=0,
                        anchor_pair=None) -> float:
    """Largest pairwise effective resistance inside a PATH network.

    ``exact`` solves all pairs through the pseudoinverse; ``sampled`` takes
    the max over uniformly sampled pairs plus the deterministic
    (start, frontier) anchor pair, so it never exceeds the exact value.
    """
    if isinstance(path_or_network, PathSubgraph):
        p = path_or_network
        net, old_to_new = path_to_network(p)
        if anchor_pair is None:
            anchor_pair = (p.start, p.frontier) if p.frontier is not None else None
        if anchor_pair is not None:
            anchor_pair = (int(old_to_new[anchor_pair[0]]), int(old_to_new[anchor_pair[1]]))
    else:
        net = path_or_network
    if net.n < 2:
        raise ValueError("network needs at least 2 vertices")

    if mode == "exact":
        comp = net.component_of(anchor_pair[0] if anchor_pair else 0)
        L = _laplacian_dense(net)[np.ix_(comp, comp)]
        M = np.linalg.pinv(L)
        d = np.diag(M)
        R = d[:, None] + d[None, :] - 2 * M
        return float(R.max())
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")

    rng = np.random.default_rng(seed)
    pairs = []
    if anchor_pair is not None and anchor_pair[0] != anchor_pair[1]:
        pairs.append(anchor_pair)
    for _ in range(samples):
        a = int(rng.integers(0, net.n))
        b = int(rng.integers(0, net.n))
        if a != b:
            pairs.append((a, b))
    if not pairs:
        raise ValueError("no usable vertex pairs")
    ground = pairs[0][1]
    comp = set(net.component_of(ground).tolist())
    keep = np.array(sorted(set(range(net.n)) & comp - {ground}), dtype=np.int64)
    pos = -np.ones(net.n, dtype=np.int64)
    pos[keep] = np.arange(len(keep))
    L = _laplacian_sparse(net)
    A = L[keep][:, keep].tocsc()
    lu = spla.splu(A)
    best = 0.0
    for a, b in pairs:
        if a not in comp or b not in comp:
            best = math.inf
            continue
        rhs = np.zeros(len(keep))
        if a != ground:
            rhs[pos[a]] += 1.0
        if b != ground:
            rhs[pos[b]] -= 1.0
        x = lu.solve(rhs)
        xa = x[pos[a]] if a != ground else 0.0
        xb = x[pos[b]] if b != ground else 0.0
        best = max(best, float(xa - xb))
    return best


def write_resistance_csv(rows, path, extra_columns=()):
    """CSV export ``radius_or_n,value,method``, plus optional trailing columns."""
    with open(path, "w") as fh:
        fh.write(",".join(["radius_or_n", "value", "method", *extra_columns]) + "\n")
        for r in rows:
            fh.write(",".join(str(x) for x in r) + "\n")
