"""Experiment manifests, reproducible campaign runs, and the R(n) growth study.

A manifest is a JSON file pinning the graph family, trial count, and seed;
running it twice produces byte-identical output files (no clocks, sorted
keys, deterministic float formatting).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, replace
from pathlib import Path

import numpy as np

from .graphs import LineSpec, MultiGraph, build_lattice, build_line_graph, build_regular_tree, degree_bound
from .harmonic import harmonic_residual
from .electrical import max_pair_resistance, effective_resistance, write_resistance_csv
from .prooflab import CampaignConfig, lemma_frequencies, write_lemma_jsonl
from .walks import lattice_walk_positions

__all__ = [
    "ManifestError",
    "ExperimentManifest",
    "load_manifest",
    "save_manifest",
    "build_graph_from_spec",
    "run_experiment",
    "GrowthPoint",
    "GrowthResult",
    "growth_experiment",
]

_KNOWN_KINDS = ("line", "tree", "lattice")


class ManifestError(ValueError):
    """A manifest field failed validation; the message names the field."""


@dataclass
class ExperimentManifest:
    graph: dict
    trials: int
    seed: int
    out_dir: str
    walk_budget: int | None = None
    lemmas: str | list[str] = "all"
    check_radius_doubling: bool = False

    def validate(self):
        if not isinstance(self.graph, dict) or "kind" not in self.graph:
            raise ManifestError("graph: must be a table with a 'kind' entry")
        kind = self.graph["kind"]
        if kind not in _KNOWN_KINDS:
            raise ManifestError(f"graph.kind: unknown kind {kind!r}")
        if self.seed is None or not isinstance(self.seed, int):
            raise ManifestError("seed: mandatory integer, no wall-clock default")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ManifestError("trials: must be an integer >= 1")
        if self.walk_budget is not None and self.walk_budget < 1:
            raise ManifestError("walk_budget: must be >= 1 when given")
        if self._radius() < 2:
            raise ManifestError("graph: truncation radius must be >= 2")
        if not self.out_dir:
            raise ManifestError("out_dir: required")
        return self

    def _radius(self) -> int:
        kind = self.graph["kind"]
        try:
            if kind == "line":
                if "multiplicities" in self.graph:
                    return len(self.graph["multiplicities"])
                return int(self.graph["length"])
            if kind == "tree":
                return int(self.graph["depth"])
            return int(self.graph["radius"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"graph: missing or bad size field ({exc})")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def load_manifest(path) -> ExperimentManifest:
    with open(path) as fh:
        raw = json.load(fh)
    try:
        m = ExperimentManifest(**raw)
    except TypeError as exc:
        raise ManifestError(f"manifest: {exc}")
    return m.validate()


def save_manifest(m: ExperimentManifest, path):
    Path(path).write_text(m.to_json())


def build_graph_from_spec(spec: dict, scale: int = 1) -> MultiGraph:
    """Instantiate the manifest's graph, optionally at a scaled radius."""
    kind = spec["kind"]
    if kind == "line":
        if "multiplicities" in spec:
            mults = list(spec["multiplicities"])
            if scale > 1:
                raise ManifestError("graph: explicit multiplicities cannot be rescaled")
            return build_line_graph(LineSpec(tuple(int(x) for x in mults)))
        base, length = int(spec["base"]), int(spec["length"])
        return build_line_graph(LineSpec.geometric(base, scale * length))
    if kind == "tree":
        return build_regular_tree(int(spec["branching"]), scale * int(spec["depth"]))
    if kind == "lattice":
        return build_lattice(int(spec["dim"]), scale * int(spec["radius"]))
    raise ManifestError(f"graph.kind: unknown kind {kind!r}")


def _graph_summary(g: MultiGraph) -> dict:
    return {
        "vertices": g.n,
        "bundles": g.bundle_count,
        "total_multiplicity": g.total_multiplicity,
        "boundary": len(g.boundary),
        "degree_bound": degree_bound(g),
        "kind": g.kind,
    }


def _root_of(g: MultiGraph) -> int:
    if g.kind == "lattice":
        dim = len(g.labels[0])
        return g.index_of((0,) * dim)
    return 0


def _campaign(g: MultiGraph, m: ExperimentManifest):
    cfg = CampaignConfig(
        trials=m.trials, seed=m.seed, walk_budget=m.walk_budget, start=_root_of(g)
    )
    result = lemma_frequencies(g, cfg)
    stats = result.stats
    if m.lemmas != "all":
        wanted = set(m.lemmas)
        stats = [s for s in stats if s.lemma in wanted]
    return result, stats


def run_experiment(m: ExperimentManifest) -> dict:
    """Run the manifest's lemma campaign and write the three report files.

    Outputs: ``lemmas.jsonl`` (one record per lemma and layer),
    ``resistance.csv`` (root-to-boundary resistance per truncation radius),
    and ``summary.json`` (graph stats, solver residual, verdict roll-up).
    Identical manifests produce identical bytes. With the radius-doubling
    flag the campaign reruns at twice the truncation radius; those records
    carry an ``@2r`` suffix and the summary states whether verdicts agree.
    """
    m.validate()
    out = Path(m.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = build_graph_from_spec(m.graph)
    result, stats = _campaign(g, m)
    all_stats = list(stats)
    rep = effective_resistance(g, {_root_of(g)}, g.boundary)
    rows = [(m._radius(), f"{rep.value:.12g}", rep.method)]
    doubling = None
    if m.check_radius_doubling:
        g2 = build_graph_from_spec(m.graph, scale=2)
        result2, stats2 = _campaign(g2, m)
        rep2 = effective_resistance(g2, {_root_of(g2)}, g2.boundary)
        rows.append((2 * m._radius(), f"{rep2.value:.12g}", rep2.method))
        doubling = {
            "radius": 2 * m._radius(),
            "verdicts_agree": _verdicts_agree(stats, stats2),
        }
        all_stats += [replace(s, lemma=f"{s.lemma}@2r") for s in stats2]

    lemmas_path = out / "lemmas.jsonl"
    write_lemma_jsonl(all_stats, lemmas_path)
    csv_path = out / "resistance.csv"
    write_resistance_csv(rows, csv_path)

    fld = result.field
    verdicts = {}
    for s in all_stats:
        verdicts[s.verdict] = verdicts.get(s.verdict, 0) + 1
    summary = {
        "manifest": asdict(m),
        "graph": _graph_summary(g),
        "voltage_residual": f"{harmonic_residual(fld):.3e}" if not fld.degenerate else "degenerate",
        "verdicts": verdicts,
        "per_trial_violations": {
            "resistance_lower_bound": result.resistance_violations,
            "window_ordering": result.ordering_violations,
            "clamped_energy": result.clamp_violations,
        },
        "separation_failures": result.separation_failures,
        "radius_doubling": doubling,
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return {"lemmas": lemmas_path, "resistance": csv_path, "summary": summary_path}


def _verdicts_agree(stats_a, stats_b) -> bool:
    va = {(s.lemma, s.layer): s.verdict for s in stats_a}
    vb = {(s.lemma, s.layer): s.verdict for s in stats_b}
    common = set(va) & set(vb)
    return all(va[k] == vb[k] for k in common)


# -- growth of the maximal pair resistance ------------------------------------


@dataclass
class GrowthPoint:
    steps: int
    resistance: float
    log_sq: float
    ratio: float


@dataclass
class GrowthResult:
    points: list[GrowthPoint]
    truncated: bool
    pairs_mode: str

    def ratios(self) -> list[float]:
        return [p.ratio for p in self.points]


def _implicit_lattice_path(dim, steps, seed, radius):
    pos, truncated = lattice_walk_positions(dim, steps, seed, radius=radius)
    return pos, truncated


def _coords_to_network(pos: np.ndarray):
    """Distinct visited points and distinct steps of a lattice walk as a network."""
    verts, inverse = np.unique(pos, axis=0, return_inverse=True)
    ids = inverse.astype(np.int64)
    a, b = ids[:-1], ids[1:]
    eu, ev = np.minimum(a, b), np.maximum(a, b)
    order = np.lexsort((ev, eu))
    eu, ev = eu[order], ev[order]
    if len(eu):
        new = np.empty(len(eu), dtype=bool)
        new[0] = True
        new[1:] = (np.diff(eu) != 0) | (np.diff(ev) != 0)
        eu, ev = eu[new], ev[new]
    edges = zip(eu.tolist(), ev.tolist(), [1] * len(eu))
    net = MultiGraph(len(verts), edges, kind="path-network")
    return net, ids


def growth_experiment(kind: str, checkpoints, seed: int, pairs: str = "sampled:64",
                      radius: int | None = None, out_csv=None) -> GrowthResult:
    """Maximal pair resistance of PATH(n) along one continued walk.

    ``kind`` is ``lattice2`` or ``lattice3``; checkpoints must increase and
    the same walk prefix serves every checkpoint, so the PATH(n) are nested.
    Each row reports R(n), the squared natural log of n, and their ratio.
    If the walk reaches a finite truncation shell the series is cut there
    and flagged.
    """
    checkpoints = [int(n) for n in checkpoints]
    if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])) or not checkpoints:
        raise ValueError("checkpoints must be strictly increasing and nonempty")
    if checkpoints[0] < 1:
        raise ValueError("checkpoints start at 1")
    if kind not in ("lattice2", "lattice3"):
        raise ValueError(f"unknown growth graph kind {kind!r}")
    dim = 2 if kind == "lattice2" else 3
    if pairs == "exact":
        mode, samples = "exact", 0
    elif pairs.startswith("sampled:"):
        mode, samples = "sampled", int(pairs.split(":", 1)[1])
    else:
        raise ValueError(f"bad pairs mode {pairs!r}")

    pos, truncated = _implicit_lattice_path(dim, checkpoints[-1], seed, radius)
    points = []
    for n in checkpoints:
        if n > len(pos) - 1:
            break  # walk hit the shell before this checkpoint
        prefix = pos[: n + 1]
        net, ids = _coords_to_network(prefix)
        if net.n < 2:
            r = math.inf
        else:
            r = max_pair_resistance(
                net,
                mode=mode,
                samples=samples,
                seed=seed,
                anchor_pair=(int(ids[0]), int(ids[n])),
            )
        logsq = math.log(n) ** 2 if n > 1 else 0.0
        ratio = r / logsq if logsq > 0 else math.inf
        points.append(GrowthPoint(steps=n, resistance=r, log_sq=logsq, ratio=ratio))
    result = GrowthResult(points=points, truncated=truncated, pairs_mode=pairs)
    if out_csv is not None:
        rows = [
            (p.steps, f"{p.resistance:.12g}", "laplacian_solve",
             f"{p.log_sq:.12g}", f"{p.ratio:.12g}")
            for p in points
        ]
        write_resistance_csv(rows, out_csv, extra_columns=("log_sq_n", "ratio"))
    return result


def fixed_pair_resistance_series(kind: str, checkpoints, seed: int,
                                 radius: int | None = None) -> list[float]:
    """Resistance of one fixed vertex pair inside the nested PATH(n) prefixes.

    The pair is (origin, position at the final checkpoint); growing the
    network can only add edges, so the series never increases.
    """
    checkpoints = [int(n) for n in checkpoints]
    dim = 2 if kind == "lattice2" else 3
    pos, _ = _implicit_lattice_path(dim, checkpoints[-1], seed, radius)
    last = pos[checkpoints[-1]]
    out = []
    for n in checkpoints:
        prefix = pos[: n + 1]
        net, ids = _coords_to_network(prefix)
        hit = np.nonzero((prefix == last).all(axis=1))[0]
        if len(hit) == 0:
            out.append(math.inf)
            continue
        a, b = int(ids[0]), int(ids[int(hit[0])])
        if a == b:
            out.append(0.0)
            continue
        out.append(effective_resistance(net, {a}, {b}).value)
    return out
