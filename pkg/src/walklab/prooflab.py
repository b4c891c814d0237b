"""Layer schedules, stopping-time energy statistics, and lemma campaigns.

This module operationalizes the quantitative steps of the recurrence
argument: pick voltage layers, accumulate squared voltage increments of the
walk inside and between layers, measure per-layer PATH resistances, and
compare Monte Carlo frequencies against the claimed bounds with Wilson
intervals. A bound is reported as violated only when the whole 99% interval
falls on the wrong side of it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .graphs import LineSpec, MultiGraph, degree_bound
from .harmonic import VoltageField, line_voltage_profile
from .walks import StopRule, WalkTrace, simulate, crossing_stats_line, _distinct_edges

__all__ = [
    "Z99",
    "wilson_interval",
    "LayerSchedule",
    "InsufficientDepthError",
    "layer_schedule_line",
    "build_cutsets",
    "LayerTrial",
    "EnergyTrial",
    "energy_statistics",
    "LemmaStats",
    "CampaignConfig",
    "CampaignResult",
    "lemma_frequencies",
    "cut_edge_frequency",
    "CutEdgeResult",
    "general_tail_trial",
    "TailResult",
    "union_resistance_frequencies",
    "write_lemma_jsonl",
]

Z99 = float(norm.ppf(0.995))
_MIN_TRIALS = 100


class InsufficientDepthError(ValueError):
    """The truncation is too shallow to fit a usable layer schedule."""


def wilson_interval(successes: int, trials: int, z: float = Z99) -> tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _mean_interval(total: float, total_sq: float, n: int, z: float = Z99):
    if n <= 0:
        return 0.0, (0.0, 0.0)
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    half = z * math.sqrt(var / n)
    return mean, (mean - half, mean + half)


# -- layer schedules ---------------------------------------------------------


@dataclass
class LayerSchedule:
    """Geometric voltage layers along which energy statistics are taken.

    ``line_levels`` schedules anchor a line graph at levels n_i where the
    voltage roughly halves (each gap validated to stay above a quarter,
    else flagged quickly transient). ``voltage_layers`` schedules cut a
    general field into bands d^(-2i-1) <= v <= d^(-2i); between consecutive
    bands lies the open band that carries the layer's PATH edges.
    """

    kind: str
    d: int | None = None
    anchors: np.ndarray | None = None
    quick: np.ndarray | None = None
    values: np.ndarray | None = None
    thresholds: list = field(default_factory=list)
    layer_sets: list = field(default_factory=list)
    layer_of: np.ndarray | None = None
    band_of: np.ndarray | None = None

    @property
    def layer_range(self) -> range:
        """Indices i for which tau/sigma/q statistics are all defined."""
        if self.kind == "line_levels":
            return range(1, len(self.anchors) - 1)
        return range(1, len(self.layer_sets))

    def gap(self, i: int) -> float:
        if self.kind == "line_levels":
            return float(self.values[self.anchors[i]] - self.values[self.anchors[i + 1]])
        d = float(self.d)
        return d ** (-2 * i - 1) - d ** (-2 * i - 2)


def layer_schedule_line(spec: LineSpec, profile: np.ndarray | None = None) -> LayerSchedule:
    """Greedy anchor scan: n_0 = 0, then the least level below half the last anchor.

    Gaps that undershoot a quarter of the previous anchor voltage are
    flagged quickly transient; single-crossing statistics, not energy
    bounds, apply there.
    """
    v = line_voltage_profile(spec) if profile is None else profile
    n_levels = len(spec)
    anchors = [0]
    quick = []
    cur = 0
    while True:
        below = np.nonzero(v[cur + 1 : n_levels] < v[cur] / 2.0)[0]
        if len(below) == 0:
            break
        nxt = cur + 1 + int(below[0])
        anchors.append(nxt)
        quick.append(not (v[nxt] > v[cur] / 4.0))
        cur = nxt
    if len(anchors) < 2:
        raise InsufficientDepthError(
            f"only {len(anchors)} anchor(s) fit in a {n_levels}-level truncation"
        )
    return LayerSchedule(
        kind="line_levels",
        anchors=np.asarray(anchors, dtype=np.int64),
        quick=np.asarray(quick, dtype=bool),
        values=v,
    )


def build_cutsets(f: VoltageField, d: int, max_layers: int | None = None) -> LayerSchedule:
    """Voltage level-set layers C_i = {g : d^(-2i-1) <= v(g) <= d^(-2i)}.

    ``d`` must dominate the degree bound, which is what makes consecutive
    layers separating along any walk trajectory. Empty layers are recorded;
    truncations commonly produce them near the absorbing shell.
    """
    g = f.graph
    if d < degree_bound(g):
        raise ValueError(f"d={d} is below the graph degree bound {degree_bound(g)}")
    v = f.values
    positive = v[v > 0]
    v_min = float(positive.min()) if len(positive) else 1.0
    layer_of = -np.ones(g.n, dtype=np.int64)
    band_of = -np.ones(g.n, dtype=np.int64)
    thresholds = []
    layer_sets = []
    i = 0
    df = float(d)
    while df ** (-2 * i) >= v_min and (max_layers is None or i < max_layers):
        lo, hi = df ** (-2 * i - 1), df ** (-2 * i)
        members = np.nonzero((v >= lo) & (v <= hi))[0]
        layer_of[members] = i
        band = np.nonzero((v > df ** (-2 * i - 2)) & (v < lo))[0]
        band_of[band] = i
        thresholds.append((lo, hi))
        layer_sets.append(members)
        i += 1
    return LayerSchedule(
        kind="voltage_layers",
        d=d,
        thresholds=thresholds,
        layer_sets=layer_sets,
        layer_of=layer_of,
        band_of=band_of,
        values=v,
    )


# -- per-trial energy statistics ----------------------------------------------


@dataclass
class LayerTrial:
    """Stopping-time and energy record of one walk at one layer."""

    layer: int
    tau: int
    sigma: int | None          # None means never returned before absorption
    q: float                   # squared increments on this layer's PATH edges
    qp: float                  # squared increments over [tau, sigma)
    r: float                   # resistance of the contracted layer PATH, inf if unbridged
    bridged: bool
    gap: float
    v_anchor: float
    v_end: float
    qpp: float | None = None   # clamped-potential energy, general schedules only

    @property
    def sigma_infinite(self) -> bool:
        return self.sigma is None


@dataclass
class EnergyTrial:
    layers: dict[int, LayerTrial]
    termination: str
    s: np.ndarray | None = None
    s_prime: np.ndarray | None = None
    separation_ok: bool = True


def _first_index(positions: np.ndarray, after: int = -1) -> int | None:
    """First entry of a sorted index array strictly greater than ``after``."""
    k = int(np.searchsorted(positions, after, side="right"))
    return int(positions[k]) if k < len(positions) else None


def _tiny_resistance(eu, ev, src, sink) -> float:
    """Effective resistance between two clamped vertex sets of a unit-edge list.

    Each distinct (u, v, copy) row is one unit resistor. Clamping the sets
    is electrically the same as contracting them. Returns inf when the
    terminals do not connect (or one side is absent).
    """
    src, sink = set(src), set(sink)
    if not src or not sink or len(eu) == 0:
        return math.inf
    cond: dict[tuple[int, int], float] = {}
    adj: dict[int, set[int]] = {}
    for u, v in zip(eu.tolist(), ev.tolist()):
        key = (u, v) if u < v else (v, u)
        cond[key] = cond.get(key, 0.0) + 1.0
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    # connectivity from src through the edge list
    seen = set(src)
    stack = list(src)
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    if not (seen & sink):
        return math.inf
    nodes = sorted(seen | src | sink)
    pos = {x: k for k, x in enumerate(nodes)}
    n = len(nodes)
    u_val = np.zeros(n)
    fixed = np.zeros(n, dtype=bool)
    for x in src:
        u_val[pos[x]] = 1.0
        fixed[pos[x]] = True
    for x in sink:
        fixed[pos[x]] = True
    interior = np.nonzero(~fixed)[0]
    L = np.zeros((n, n))
    for (x, y), c in cond.items():
        if x in pos and y in pos:
            i, j = pos[x], pos[y]
            L[i, i] += c
            L[j, j] += c
            L[i, j] -= c
            L[j, i] -= c
    if len(interior):
        A = L[np.ix_(interior, interior)]
        b = -L[np.ix_(interior, np.nonzero(fixed)[0])] @ u_val[fixed]
        u_val[interior] = np.linalg.solve(A, b)
    current = 0.0
    for x in src:
        i = pos[x]
        current += L[i] @ u_val  # net current out of the source side
    if current <= 0:
        return math.inf
    return 1.0 / current


def energy_statistics(t: WalkTrace, f: VoltageField, sched: LayerSchedule) -> EnergyTrial:
    """Per-layer stopping times, energies, and PATH resistances of one trace.

    tau_i is the first entry to anchor/layer i and sigma_i the first return
    to layer i-1 afterwards, left None when absorption came first. qp sums
    squared voltage increments over [tau_i, sigma_i); q sums them over the
    steps whose edge lies between layers i and i+1, over the whole walk.
    Layers the walk never entered are absent from the result.
    """
    V = t.vertices
    if sched.kind == "line_levels":
        vv = sched.values[V]
    else:
        vv = f.values[V]
    inc = np.diff(vv)
    cum = np.concatenate([[0.0], np.cumsum(inc * inc)])
    layers: dict[int, LayerTrial] = {}

    if sched.kind == "line_levels":
        a = sched.anchors
        v = sched.values
        s, sp = crossing_stats_line(t)
        level_energy = s * np.diff(v[: len(s) + 1]) ** 2
        inv_sp = np.where(sp > 0, 1.0 / np.maximum(sp, 1), np.inf)
        where: dict[int, np.ndarray] = {}
        for i in sched.layer_range:
            n_prev, n_cur, n_next = int(a[i - 1]), int(a[i]), int(a[i + 1])
            for lvl in (n_prev, n_cur):
                if lvl not in where:
                    where[lvl] = np.nonzero(V == lvl)[0]
            tau = _first_index(where[n_cur])
            if tau is None:
                continue
            sigma = _first_index(where[n_prev], after=tau)
            end = len(V) - 1 if sigma is None else sigma
            qp = float(cum[end] - cum[tau])
            q = float(level_energy[n_cur:n_next].sum())
            bridged = bool(s[n_next - 1] > 0)
            r = float(inv_sp[n_cur:n_next].sum()) if bridged else math.inf
            layers[i] = LayerTrial(
                layer=i,
                tau=tau,
                sigma=sigma,
                q=q,
                qp=qp,
                r=r,
                bridged=bridged,
                gap=float(v[n_cur] - v[n_next]),
                v_anchor=float(v[n_cur]),
                v_end=float(vv[end]),
            )
        return EnergyTrial(layers=layers, termination=t.termination, s=s, s_prime=sp)

    lay = sched.layer_of[V]
    band_src = sched.band_of[V[:-1]]
    band_dst = sched.band_of[V[1:]]
    step_band = np.where(band_src >= 0, band_src, band_dst)
    eu, ev2, ec = t.edge_triples()
    d = float(sched.d)
    taus: dict[int, int] = {}
    sep_ok = True
    for i in range(len(sched.layer_sets)):
        hits = np.nonzero(lay == i)[0]
        if len(hits):
            taus[i] = int(hits[0])
    entered = sorted(taus, key=lambda i: taus[i])
    if entered != sorted(entered):
        sep_ok = False  # walked into a deeper layer before a shallower one
    for i in range(1, len(sched.layer_sets)):
        if i not in taus:
            continue
        tau = taus[i]
        prev_hits = np.nonzero(lay == i - 1)[0]
        sigma = _first_index(prev_hits, after=tau)
        end = len(V) - 1 if sigma is None else sigma
        qp = float(cum[end] - cum[tau])
        mask = step_band == i
        q = float(np.sum(inc[mask] ** 2))
        lo, hi = d ** (-2 * i - 2), d ** (-2 * i - 1)
        clamped = np.clip(vv, lo, hi)
        cinc = clamped[1:] - clamped[:-1]
        qpp = float(np.sum(cinc[mask] ** 2))
        bridged = (i + 1) in taus
        if mask.any():
            du, dv_, dc, _ = _distinct_edges(eu[mask], ev2[mask], ec[mask])
            ends = np.unique(np.concatenate([du, dv_]))
            src = [int(x) for x in ends if sched.layer_of[x] == i]
            dst = [int(x) for x in ends if sched.layer_of[x] == i + 1]
            r = _tiny_resistance(du, dv_, src, dst)
        else:
            r = math.inf
        layers[i] = LayerTrial(
            layer=i,
            tau=tau,
            sigma=sigma,
            q=q,
            qp=qp,
            qpp=qpp,
            r=r,
            bridged=bridged,
            gap=hi - lo,
            v_anchor=float(vv[tau]),
            v_end=float(vv[end]),
        )
    return EnergyTrial(layers=layers, termination=t.termination, separation_ok=sep_ok)


# -- lemma campaigns ----------------------------------------------------------


@dataclass
class LemmaStats:
    """Monte Carlo tally of one claimed bound at one layer."""

    lemma: str
    layer: int | None
    trials: int
    successes: int | None
    lo99: float
    hi99: float
    paper_bound: float
    verdict: str
    kind: str = "frequency"  # or "mean"
    mean: float | None = None

    def to_record(self) -> dict:
        return {
            "lemma": self.lemma,
            "layer": self.layer,
            "trials": self.trials,
            "successes": self.successes,
            "lo99": self.lo99,
            "hi99": self.hi99,
            "paper_bound": self.paper_bound,
            "verdict": self.verdict,
        }


def _freq_stats(lemma, layer, successes, trials, bound) -> LemmaStats:
    if trials < _MIN_TRIALS:
        return LemmaStats(lemma, layer, trials, successes, 0.0, 1.0, bound,
                          "insufficient-data")
    lo, hi = wilson_interval(successes, trials)
    verdict = "violation" if hi < bound else "consistent"
    return LemmaStats(lemma, layer, trials, successes, lo, hi, bound, verdict)


def _mean_stats(lemma, layer, total, total_sq, n, bound, below) -> LemmaStats:
    if n < _MIN_TRIALS:
        return LemmaStats(lemma, layer, n, below, 0.0, 0.0, bound,
                          "insufficient-data", kind="mean")
    mean, (lo, hi) = _mean_interval(total, total_sq, n)
    verdict = "violation" if lo > bound else "consistent"
    return LemmaStats(lemma, layer, n, below, lo, hi, bound, verdict,
                      kind="mean", mean=mean)


@dataclass
class CampaignConfig:
    trials: int = 10_000
    seed: int = 0
    layers: tuple[int, ...] | None = None  # default: every schedulable layer
    d: int | None = None
    start: int | None = None
    walk_budget: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class CampaignResult:
    stats: list[LemmaStats]
    layer_counts: dict[int, int]
    resistance_violations: int
    ordering_violations: int
    clamp_violations: int
    separation_failures: int
    variance_checks: dict[int, tuple[float, float]]
    median_r: dict[int, float]
    schedule: LayerSchedule
    field: VoltageField
    kindname: str

    def by_lemma(self, lemma: str) -> dict[int | None, LemmaStats]:
        return {s.layer: s for s in self.stats if s.lemma == lemma}

    @property
    def all_consistent(self) -> bool:
        return all(s.verdict != "violation" for s in self.stats)


def _stop_rule(cfg: CampaignConfig) -> StopRule:
    if cfg.walk_budget is None:
        return StopRule.until_boundary()
    return StopRule.until_boundary_or(cfg.walk_budget)


def lemma_frequencies(g: MultiGraph, config: CampaignConfig | None = None) -> CampaignResult:
    """Monte Carlo campaign over every quantitative per-layer bound.

    On line graphs the events are {q_i < 64 v^2(n_i)} and {R_i > 1/256};
    on bounded-degree graphs {q_i < 4 d^4 d^(-4i)} and {R_i > 1/(16 d^6)};
    all are compared against the 1/4 probability floor. Mean bounds on the
    stopping-window energy qp (16 v^2(n_i), resp. d^4 d^(-4i)) are tested
    through the 99% upper confidence bound. Deterministic per-trial facts
    are tallied as violation counts: R_i >= gap^2 / q_i, the clamped energy
    never exceeding q_i, and q_i <= qp_i whenever sigma was never observed.
    """
    cfg = config or CampaignConfig()
    if g.kind == "line":
        kindname = "line"
        profile = line_voltage_profile(g.line_spec)
        fld = VoltageField(g, 0, profile, 0.0, method="exact")
        sched = layer_schedule_line(g.line_spec, profile=profile)
        start = 0 if cfg.start is None else cfg.start
    else:
        kindname = "general"
        d = cfg.d or degree_bound(g)
        from .harmonic import solve_voltage

        start = 0 if cfg.start is None else cfg.start
        fld = solve_voltage(g, start)
        sched = build_cutsets(fld, d)
    layer_ids = list(cfg.layers) if cfg.layers is not None else list(sched.layer_range)
    layer_ids = [i for i in layer_ids if i in sched.layer_range]
    if sched.kind == "line_levels":
        usable = [i for i in layer_ids if not (sched.quick[i - 1] or sched.quick[i])]
        layer_ids = usable

    counts = {i: 0 for i in layer_ids}
    succ_q = {i: 0 for i in layer_ids}
    succ_r = {i: 0 for i in layer_ids}
    qp_sum = {i: 0.0 for i in layer_ids}
    qp_sq = {i: 0.0 for i in layer_ids}
    qp_below = {i: 0 for i in layer_ids}
    var_sum = {i: 0.0 for i in layer_ids}
    var_sq = {i: 0.0 for i in layer_ids}
    r_values = {i: [] for i in layer_ids}
    res_viol = 0
    ord_viol = 0
    clamp_viol = 0
    sep_fail = 0

    if kindname == "line":
        vprof = sched.values
        anchors = sched.anchors
        q_bound = {i: 64.0 * vprof[anchors[i]] ** 2 for i in layer_ids}
        qp_bound = {i: 16.0 * vprof[anchors[i]] ** 2 for i in layer_ids}
        r_bound = 1.0 / 256.0
    else:
        d = float(sched.d)
        q_bound = {i: 4.0 * d**4 * d ** (-4 * i) for i in layer_ids}
        qp_bound = {i: d**4 * d ** (-4 * i) for i in layer_ids}
        r_bound = 1.0 / (16.0 * d**6)

    stop = _stop_rule(cfg)
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    for ss in streams:
        trace = simulate(g, start, stop, np.random.default_rng(ss))
        et = energy_statistics(trace, fld, sched)
        if not et.separation_ok:
            sep_fail += 1
        for i in layer_ids:
            lt = et.layers.get(i)
            if lt is None:
                continue
            counts[i] += 1
            if lt.q < q_bound[i]:
                succ_q[i] += 1
            if lt.r > r_bound:
                succ_r[i] += 1
            qp_sum[i] += lt.qp
            qp_sq[i] += lt.qp * lt.qp
            if lt.qp < qp_bound[i]:
                qp_below[i] += 1
            dvar = lt.qp - (lt.v_end - lt.v_anchor) ** 2
            var_sum[i] += dvar
            var_sq[i] += dvar * dvar
            if math.isfinite(lt.r):
                r_values[i].append(lt.r)
            if lt.bridged and lt.q > 0 and math.isfinite(lt.r):
                if lt.r < (lt.gap**2 / lt.q) * (1 - 1e-9):
                    res_viol += 1
            if lt.sigma is None and lt.q > lt.qp * (1 + 1e-9) + 1e-300:
                ord_viol += 1
            if lt.qpp is not None and lt.qpp > lt.q * (1 + 1e-9) + 1e-300:
                clamp_viol += 1

    prefix = "line" if kindname == "line" else "layer"
    stats = []
    for i in layer_ids:
        stats.append(_freq_stats(f"{prefix}_band_energy_small", i, succ_q[i], counts[i], 0.25))
        stats.append(_freq_stats(f"{prefix}_segment_resistance", i, succ_r[i], counts[i], 0.25))
        stats.append(
            _mean_stats(
                f"{prefix}_window_energy_mean",
                i,
                qp_sum[i],
                qp_sq[i],
                counts[i],
                qp_bound[i],
                qp_below[i],
            )
        )
    var_checks = {}
    for i in layer_ids:
        n = counts[i]
        if n:
            mean, (lo, hi) = _mean_interval(var_sum[i], var_sq[i], n)
            var_checks[i] = (mean, (hi - lo) / (2 * Z99) if n > 1 else 0.0)
    med_r = {i: float(np.median(r_values[i])) if r_values[i] else math.inf for i in layer_ids}
    return CampaignResult(
        stats=stats,
        layer_counts=counts,
        resistance_violations=res_viol,
        ordering_violations=ord_viol,
        clamp_violations=clamp_viol,
        separation_failures=sep_fail,
        variance_checks=var_checks,
        median_r=med_r,
        schedule=sched,
        field=fld,
        kindname=kindname,
    )


# -- single-crossing statistics (quickly transient regime) --------------------


@dataclass
class CutEdgeResult:
    stats: list[LemmaStats]
    exact_prob: dict[int, float]
    observed: dict[int, float]


def cut_edge_frequency(spec: LineSpec, trials: int, seed: int = 0,
                       max_levels: int = 8) -> CutEdgeResult:
    """P(s_n = 1) at levels where the voltage at least halves in one step.

    At such a level the walk, once past it, returns with probability
    v(n+1)/v(n) < 1/2, so a single crossing has probability at least 1/2;
    the exact value 1 - v(n+1)/v(n) is reported alongside the tally.
    """
    from .graphs import build_line_graph

    g = build_line_graph(spec)
    v = line_voltage_profile(spec)
    n_levels = len(spec)
    flagged = [n for n in range(n_levels) if v[n] / 2.0 > v[n + 1]][:max_levels]
    if not flagged:
        return CutEdgeResult(stats=[], exact_prob={}, observed={})
    succ = {n: 0 for n in flagged}
    streams = np.random.SeedSequence(seed).spawn(trials)
    for ss in streams:
        trace = simulate(g, 0, StopRule.until_boundary(), np.random.default_rng(ss))
        s, _ = crossing_stats_line(trace)
        for n in flagged:
            if s[n] == 1:
                succ[n] += 1
    stats = [
        _freq_stats("line_single_crossing", n, succ[n], trials, 0.5) for n in flagged
    ]
    exact = {n: 1.0 - float(v[n + 1] / v[n]) for n in flagged}
    observed = {n: succ[n] / trials for n in flagged}
    return CutEdgeResult(stats=stats, exact_prob=exact, observed=observed)


# -- tail statistics past a finite core ---------------------------------------


@dataclass
class TailResult:
    stats: list[LemmaStats]
    escape_trials: int
    joint_trials: int
    resistance_violations: int
    v_k: float


def general_tail_trial(g: MultiGraph, f: VoltageField, k_set, trials: int,
                       seed: int = 0, start: int | None = None) -> TailResult:
    """Escape statistics past the super-level set of a finite core K.

    With v_K the minimum voltage on K, tau is the first exit below v_K,
    v0 the voltage there, and sigma the first later time the voltage
    exceeds 2 v0 (never, on escaping trials). The tallies compare
    P(sigma never) against 1/2, E(q / v0^2 | escape) against 6, the joint
    event {q <= 12 v0^2 and escape} against 1/4, and record the PATH
    resistance between the visited part of the super-level set and the
    absorbed frontier, which the energy argument pins at 1/12 or more on
    joint-event trials.
    """
    k_set = {int(x) for x in k_set}
    if not k_set:
        raise ValueError("core set must be nonempty")
    if k_set & g.boundary:
        raise ValueError("core set touches the absorbing boundary")
    v = f.values
    v_k = float(min(v[x] for x in k_set))
    start = f.root if start is None else start
    n_tau = 0
    n_escape = 0
    n_joint = 0
    n_joint_r = 0
    ratio_sum = 0.0
    ratio_sq = 0.0
    res_viol = 0
    streams = np.random.SeedSequence(seed).spawn(trials)
    for ss in streams:
        trace = simulate(g, start, StopRule.until_boundary(), np.random.default_rng(ss))
        V = trace.vertices
        vv = v[V]
        below = np.nonzero(vv < v_k)[0]
        if len(below) == 0:
            continue  # never exited the super-level set before absorption
        n_tau += 1
        tau = int(below[0])
        v0 = float(vv[tau])
        later = np.nonzero(vv[tau + 1 :] > 2 * v0)[0]
        sigma = tau + 1 + int(later[0]) if len(later) else None
        end = len(V) - 1 if sigma is None else sigma
        inc = np.diff(vv[tau : end + 1])
        q = float(np.sum(inc * inc))
        escaped = sigma is None
        if not escaped:
            continue
        n_escape += 1
        if v0 > 0:
            ratio = q / (v0 * v0)
            ratio_sum += ratio
            ratio_sq += ratio * ratio
        joint = q <= 12.0 * v0 * v0
        if joint:
            n_joint += 1
        eu, ev2, ec = trace.edge_triples()
        du, dv_, dc, _ = _distinct_edges(eu, ev2, ec)
        ends = np.unique(np.concatenate([du, dv_]))
        src = [int(x) for x in ends if v[x] >= v_k]
        r = _tiny_resistance(du, dv_, src, {trace.end})
        if q > 0 and v0 > 0 and r < (v0 * v0 / q) * (1 - 1e-9):
            res_viol += 1
        if joint and r >= 1.0 / 12.0:
            n_joint_r += 1
    stats = [
        _freq_stats("tail_escape", None, n_escape, n_tau, 0.5),
        _mean_stats("tail_energy_mean", None, ratio_sum, ratio_sq, n_escape, 6.0,
                    None),
        _freq_stats("tail_joint", None, n_joint, n_tau, 0.25),
        _freq_stats("tail_joint_resistance", None, n_joint_r, n_tau, 0.25),
    ]
    return TailResult(
        stats=stats,
        escape_trials=n_escape,
        joint_trials=n_joint,
        resistance_violations=res_viol,
        v_k=v_k,
    )


# -- unions of independent walks ----------------------------------------------


def union_resistance_frequencies(g: MultiGraph, walkers: int, trials: int,
                                 seed: int = 0, layers=None,
                                 start: int | None = None) -> list[LemmaStats]:
    """Layer resistance of the union PATH of k independent walks.

    Each layer event {R_i >= 1/(16 k d^6)} is tallied against the 1/4^k
    floor that the per-walk energy argument guarantees.
    """
    from .harmonic import solve_voltage

    start = 0 if start is None else start
    fld = solve_voltage(g, start)
    d = degree_bound(g)
    sched = build_cutsets(fld, d)
    layer_ids = list(layers) if layers is not None else list(sched.layer_range)
    layer_ids = [i for i in layer_ids if 1 <= i < len(sched.layer_sets)]
    bound_r = 1.0 / (16.0 * walkers * float(d) ** 6)
    floor = 0.25**walkers
    succ = {i: 0 for i in layer_ids}
    seen = {i: 0 for i in layer_ids}
    streams = np.random.SeedSequence(seed).spawn(trials * walkers)
    for t in range(trials):
        step_u, step_v, step_c, step_band = [], [], [], []
        for w in range(walkers):
            trace = simulate(g, start, StopRule.until_boundary(),
                             np.random.default_rng(streams[t * walkers + w]))
            eu, ev2, ec = trace.edge_triples()
            bs = sched.band_of[trace.vertices[:-1]]
            bd = sched.band_of[trace.vertices[1:]]
            step_u.append(eu)
            step_v.append(ev2)
            step_c.append(ec)
            step_band.append(np.where(bs >= 0, bs, bd))
        eu = np.concatenate(step_u)
        ev2 = np.concatenate(step_v)
        ec = np.concatenate(step_c)
        bands = np.concatenate(step_band)
        for i in layer_ids:
            mask = bands == i
            seen[i] += 1
            if not mask.any():
                succ[i] += 1  # no union edges in the layer: infinite resistance
                continue
            du, dv_, dc, _ = _distinct_edges(eu[mask], ev2[mask], ec[mask])
            ends = np.unique(np.concatenate([du, dv_]))
            src = [int(x) for x in ends if sched.layer_of[x] == i]
            dst = [int(x) for x in ends if sched.layer_of[x] == i + 1]
            r = _tiny_resistance(du, dv_, src, dst)
            if r >= bound_r:
                succ[i] += 1
    return [
        _freq_stats(f"union{walkers}_segment_resistance", i, succ[i], seen[i], floor)
        for i in layer_ids
    ]


def write_lemma_jsonl(stats, path):
    """One JSON record per (lemma, layer) tally."""
    with open(path, "w") as fh:
        for s in stats:
            fh.write(json.dumps(s.to_record(), sort_keys=True) + "\n")
