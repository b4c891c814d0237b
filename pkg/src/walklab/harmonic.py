"""Hitting-probability voltages: exact on line graphs, solved elsewhere.

The voltage v(g) is the probability that a walk from g reaches the root
before the absorbing boundary. It is harmonic at every other interior
vertex, which is the discrete Dirichlet problem solved here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graphs import LineSpec, MultiGraph

__all__ = [
    "VoltageField",
    "voltage_line_exact",
    "line_voltage_profile",
    "solve_voltage",
    "solve_dirichlet",
    "harmonic_residual",
    "edge_ratio_excess",
    "check_martingale",
    "MartingaleStats",
    "probe_truncation",
    "write_field",
    "read_field",
]

DEFAULT_TOL = 1e-10
_MAX_REFINE = 8


def line_voltage_profile(spec: LineSpec) -> np.ndarray:
    """Exact hitting probabilities for every level of a truncated line graph.

    v(n) is the tail sum of reciprocal multiplicities over the total sum;
    v(0) = 1 and v(N) = 0 at the absorbing end.
    """
    inv = 1.0 / np.asarray(spec.multiplicities, dtype=np.float64)
    tail = np.zeros(len(inv) + 1)
    tail[:-1] = np.cumsum(inv[::-1])[::-1]
    return tail / tail[0]


def voltage_line_exact(spec: LineSpec, n: int) -> float:
    if not (0 <= n <= len(spec)):
        raise ValueError(f"level {n} out of range 0..{len(spec)}")
    return float(line_voltage_profile(spec)[n])


@dataclass
class VoltageField:
    """Solved voltages with the root at 1 and the absorbing boundary at 0."""

    graph: MultiGraph
    root: int
    values: np.ndarray
    residual: float
    degenerate: bool = False
    method: str = "lu"

    @property
    def boundary(self) -> frozenset:
        return self.graph.boundary


def _directed_entries(g: MultiGraph):
    src = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g._indptr))
    return src, g._nbr, g._mult


def _defect(g: MultiGraph, values: np.ndarray, skip_mask: np.ndarray) -> float:
    src, dst, w = _directed_entries(g)
    acc = np.zeros(g.n)
    np.add.at(acc, src, w * values[dst])
    deg = g._degf
    interior = (~skip_mask) & (deg > 0)
    if not interior.any():
        return 0.0
    diff = np.abs(values[interior] - acc[interior] / deg[interior])
    return float(diff.max())


def solve_dirichlet(g: MultiGraph, ones_set, zeros_set, tol=DEFAULT_TOL, method="lu"):
    """Solve the discrete Dirichlet problem with the given clamped sets.

    Every vertex outside both sets that is connected to ``ones_set`` gets the
    degree-weighted average of its neighbors, to a harmonicity defect of at
    most ``tol``. Vertices in no component of ``ones_set`` stay at 0.
    Returns (values, residual).
    """
    ones_set = {int(v) for v in ones_set}
    zeros_set = {int(v) for v in zeros_set}
    if ones_set & zeros_set:
        raise ValueError("clamped sets overlap")
    values = np.zeros(g.n)
    for v in ones_set:
        values[v] = 1.0
    clamped = np.zeros(g.n, dtype=bool)
    clamped[list(ones_set)] = True
    if zeros_set:
        clamped[list(zeros_set)] = True
    comp = set()
    for v in ones_set:
        comp.update(g.component_of(v).tolist())
    interior = np.array(
        sorted(v for v in comp if not clamped[v]), dtype=np.int64
    )
    if len(interior) == 0:
        return values, 0.0
    pos = -np.ones(g.n, dtype=np.int64)
    pos[interior] = np.arange(len(interior))
    src, dst, w = _directed_entries(g)
    keep = pos[src] >= 0
    src, dst, w = src[keep], dst[keep], w[keep].astype(np.float64)
    rows = pos[src]
    b = np.zeros(len(interior))
    hot = np.isin(dst, list(ones_set))
    np.add.at(b, rows[hot], w[hot])
    off = pos[dst] >= 0
    A = sp.csr_matrix(
        (
            np.concatenate([g._degf[interior], -w[off]]),
            (
                np.concatenate([np.arange(len(interior)), rows[off]]),
                np.concatenate([np.arange(len(interior)), pos[dst[off]]]),
            ),
        ),
        shape=(len(interior), len(interior)),
    )
    if method == "lu":
        lu = spla.splu(A.tocsc())
        solve = lu.solve
    elif method == "dense":
        dense = A.toarray()
        solve = lambda rhs: np.linalg.solve(dense, rhs)
    elif method == "cg":
        diag = A.diagonal()
        precond = spla.LinearOperator(A.shape, matvec=lambda x: x / diag)

        def solve(rhs):
            x, info = spla.cg(A, rhs, rtol=1e-14, atol=0.0, M=precond, maxiter=20 * len(rhs))
            if info != 0:
                raise RuntimeError(f"cg failed to converge (info={info})")
            return x

    else:
        raise ValueError(f"unknown method {method!r}")

    x = solve(b)
    deg_i = g._degf[interior]
    for _ in range(_MAX_REFINE):
        r = b - A @ x
        if float(np.abs(r / deg_i).max()) <= 0.25 * tol:
            break
        x = x + solve(r)
    values[interior] = x
    np.clip(values, 0.0, 1.0, out=values)
    residual = _defect(g, values, clamped)
    if residual > tol:
        raise RuntimeError(f"solver residual {residual:.3e} exceeds tol {tol:.3e}")
    return values, residual


def solve_voltage(g: MultiGraph, root: int, tol=DEFAULT_TOL, method="lu") -> VoltageField:
    """Voltage field with v(root) = 1 and v = 0 on the absorbing boundary.

    A root component that cannot reach any boundary is a recurrent
    truncation: the field is identically 1 there and flagged degenerate.
    """
    root = int(root)
    if g.is_boundary(root):
        raise ValueError("root must not be absorbing")
    comp = g.component_of(root)
    reachable_boundary = [int(v) for v in comp if g.is_boundary(v)]
    if not reachable_boundary:
        values = np.zeros(g.n)
        values[comp] = 1.0
        return VoltageField(g, root, values, 0.0, degenerate=True, method=method)
    values, residual = solve_dirichlet(g, {root}, g.boundary, tol=tol, method=method)
    return VoltageField(g, root, values, residual, degenerate=False, method=method)


def harmonic_residual(f: VoltageField, g: MultiGraph | None = None) -> float:
    """Max harmonicity defect over vertices that are neither root nor boundary."""
    g = f.graph if g is None else g
    skip = np.zeros(g.n, dtype=bool)
    skip[f.root] = True
    if g.boundary:
        skip[list(g.boundary)] = True
    return _defect(g, f.values, skip)


def edge_ratio_excess(f: VoltageField, d: int | None = None) -> float:
    """Worst violation of v(h) <= d * v(g) over edges leaving non-boundary g.

    Nonpositive means the bounded-degree voltage comparison holds everywhere
    it should (it cannot hold at the artificial absorbing shell, where v was
    forced to 0, so boundary departures are skipped).
    """
    g = f.graph
    if d is None:
        d = int(g.degrees.max())
    src, dst, _ = _directed_entries(g)
    keep = ~g._bmask[src]
    if not keep.any():
        return 0.0
    excess = f.values[dst[keep]] - d * f.values[src[keep]]
    return float(excess.max())


@dataclass
class MartingaleStats:
    """Per-vertex one-step increment means of v along walks."""

    vertices: np.ndarray
    visits: np.ndarray
    means: np.ndarray
    std_errors: np.ndarray
    max_abs_z: float

    def worst(self) -> tuple[int, float]:
        z = np.zeros(len(self.means))
        ok = self.std_errors > 0
        z[ok] = np.abs(self.means[ok]) / self.std_errors[ok]
        i = int(np.argmax(z))
        return int(self.vertices[i]), float(z[i])


def check_martingale(f: VoltageField, traces, min_visits: int = 30) -> MartingaleStats:
    """Empirical mean of v(w_{t+1}) - v(w_t) conditioned on the departing vertex.

    Departures from the root and from absorbing vertices are excluded; at
    every other vertex the conditional mean is 0 by harmonicity, so the
    reported z-scores should stay within ordinary CLT bands.
    """
    g = f.graph
    count = np.zeros(g.n, dtype=np.int64)
    total = np.zeros(g.n)
    total_sq = np.zeros(g.n)
    vals = f.values
    for t in traces:
        vv = vals[t.vertices]
        inc = np.diff(vv)
        dep = t.vertices[:-1]
        ok = (dep != f.root) & ~g._bmask[dep]
        np.add.at(count, dep[ok], 1)
        np.add.at(total, dep[ok], inc[ok])
        np.add.at(total_sq, dep[ok], inc[ok] ** 2)
    sel = np.nonzero(count >= min_visits)[0]
    n = count[sel].astype(np.float64)
    means = total[sel] / n
    var = np.maximum(total_sq[sel] / n - means**2, 0.0)
    se = np.sqrt(var / n)
    z = np.where(se > 0, np.abs(means) / np.where(se > 0, se, 1.0), 0.0)
    return MartingaleStats(
        vertices=sel,
        visits=count[sel],
        means=means,
        std_errors=se,
        max_abs_z=float(z.max()) if len(z) else 0.0,
    )


def probe_truncation(builder, radius: int, root_label, tol=DEFAULT_TOL):
    """Compare voltages at truncation radius r and 2r.

    ``builder(r)`` must return labeled graphs whose labels agree across
    radii. Returns (max_abs_difference over non-boundary vertices of the
    smaller graph, field_r, field_2r).
    """
    g1 = builder(radius)
    g2 = builder(2 * radius)
    f1 = solve_voltage(g1, g1.index_of(root_label), tol=tol)
    f2 = solve_voltage(g2, g2.index_of(root_label), tol=tol)
    worst = 0.0
    for v in range(g1.n):
        if g1.is_boundary(v):
            continue
        w = g2.index_of(g1.labels[v])
        worst = max(worst, abs(float(f1.values[v]) - float(f2.values[w])))
    return worst, f1, f2


def write_field(f: VoltageField, path):
    """Text table ``vertex value`` at 17 significant digits."""
    with open(path, "w") as fh:
        for v, x in enumerate(f.values.tolist()):
            fh.write(f"{v} {x:.17g}\n")


def read_field(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                _, x = line.split()
                rows.append(float(x))
    return np.asarray(rows)
