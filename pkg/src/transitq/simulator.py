"""Discrete-event validation of the analytical pipeline.

Vehicles traverse the route on a relative clock: the virtual vehicle 0
departs every station at time zero and each later vehicle departs its
predecessor's time plus a rectified headway max(0, H_adj + I_l - I_{l-1}),
where I_l is vehicle l's cumulative incident delay.  Passengers arrive in
Poisson streams during each headway window, queue FIFO, and board up to the
free space left after alighting.

Every vehicle owns a counter-based RNG stream (Philox keyed by seed and
vehicle id), so results are reproducible regardless of how the phases are
interleaved and runs differing only in length share their common prefix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Scenario, adjusted_headway, require_valid
from .solver import RouteReport

_MASK64 = (1 << 64) - 1
_BATCHES = 100


@dataclass(frozen=True)
class SimConfig:
    runs: int = 50_000      # vehicles simulated
    seed: int = 42
    warmup: float = 0.10    # fraction of vehicles dropped from statistics

    def __post_init__(self):
        if self.runs < 100:
            raise ValueError(f"need at least 100 vehicles, got {self.runs}")
        if not 0.0 <= self.warmup < 1.0:
            raise ValueError(f"warmup fraction must lie in [0, 1), got {self.warmup}")


@dataclass(frozen=True)
class StationSimStats:
    station: int            # 1-based
    q_mean: float           # queue length seen at vehicle arrival
    q_var: float
    q_mean_se: float        # batch-means standard error
    w_mean: float           # per-passenger wait; NaN if nobody boarded
    w_var: float
    w_mean_se: float
    headway_mean: float     # realized departure headway
    headway_var: float
    boarded: int


@dataclass(frozen=True)
class SimStats:
    label: str
    runs: int
    seed: int
    warmup: float
    stations: tuple[StationSimStats, ...]


def _vehicle_rng(seed: int, vehicle: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=((seed & _MASK64) << 64) | vehicle))


def _series_se(values: np.ndarray) -> float:
    n_batches = min(_BATCHES, len(values))
    if n_batches < 2:
        return math.nan
    means = [chunk.mean() for chunk in np.array_split(values, n_batches)]
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


def _ratio_se(row_sums: np.ndarray, row_counts: np.ndarray) -> float:
    n_batches = min(_BATCHES, len(row_sums))
    sums = np.array_split(row_sums, n_batches)
    counts = np.array_split(row_counts, n_batches)
    means = [s.sum() / c.sum() for s, c in zip(sums, counts) if c.sum() > 0]
    if len(means) < 2:
        return math.nan
    return float(np.std(means, ddof=1) / math.sqrt(len(means)))


def _simulate(scenario: Scenario, config: SimConfig, keep_trace: bool = False):
    require_valid(scenario)
    route = scenario.route
    n_sta = route.num_stations
    runs = config.runs
    cap = route.capacity
    lam = np.asarray(route.arrival_rates())
    alpha = route.alight_probs()
    seg = np.asarray(route.segment_times if route.segment_times is not None
                     else (route.interstation_time,) * n_sta)
    gamma, theta = scenario.incidents.rate, scenario.incidents.duration_rate
    h_adj = adjusted_headway(scenario)

    cut = int(math.ceil(config.warmup * runs))
    if runs - cut < 2:
        raise ValueError("warmup leaves fewer than 2 vehicles for statistics")

    gens = [_vehicle_rng(config.seed, vid) for vid in range(runs + 1)]

    # Phase 1: cumulative incident delay per vehicle at each station.
    delay = np.empty((runs + 1, n_sta))
    inc_rate = gamma * seg
    for vid in range(runs + 1):
        g = gens[vid]
        counts = g.poisson(inc_rate)
        delay[vid] = np.cumsum(g.gamma(counts) / theta)

    # Phase 2: rectified headways and departure times (vehicle rows 0..runs-1
    # are vehicles 1..runs; the virtual vehicle departs everywhere at t=0).
    headways = np.maximum(0.0, h_adj + delay[1:] - delay[:-1])
    depart = np.cumsum(headways, axis=0)

    # Phase 3: passenger arrivals during each vehicle's headway window.
    k_all = np.zeros((runs, n_sta), dtype=np.int64)
    chunks: list[list[np.ndarray]] = [[] for _ in range(n_sta)]
    for j in range(runs):
        g = gens[j + 1]
        k_row = g.poisson(lam * headways[j])
        k_all[j] = k_row
        window_start = depart[j] - headways[j]
        for n in range(n_sta):
            k = int(k_row[n])
            if k:
                u = np.sort(g.random(k))
                chunks[n].append(window_start[n] + headways[j, n] * u)
    arrivals = [np.concatenate(c) if c else np.empty(0) for c in chunks]

    # Phase 4: station-major queue/boarding pass.
    loads = np.zeros(runs, dtype=np.int64)
    stats: list[StationSimStats] = []
    trace_boarded = np.zeros(n_sta, dtype=np.int64)
    trace_final_q = np.zeros(n_sta, dtype=np.int64)
    load_max = 0
    for n in range(n_sta):
        arr = arrivals[n]
        k_col = k_all[:, n]
        a = float(alpha[n])
        head = 0
        tail = 0
        q_rec = np.empty(runs)
        w_sum = np.zeros(runs)
        w_sq = np.zeros(runs)
        w_cnt = np.zeros(runs, dtype=np.int64)
        for j in range(runs):
            tail += k_col[j]
            q_len = tail - head
            q_rec[j] = q_len
            load = loads[j]
            if a <= 0.0 or load == 0:
                stay = load
            elif a >= 1.0:
                stay = 0
            else:
                stay = load - int(gens[j + 1].binomial(load, a))
            board = min(cap - stay, q_len)
            if board > 0:
                w = depart[j, n] - arr[head:head + board]
                w_sum[j] = w.sum()
                w_sq[j] = w @ w
                w_cnt[j] = board
                head += board
            loads[j] = stay + board
        load_max = max(load_max, int(loads.max()))
        trace_boarded[n] = int(w_cnt.sum())
        trace_final_q[n] = tail - head

        q_sel = q_rec[cut:]
        cnt = int(w_cnt[cut:].sum())
        if cnt:
            w_mean = float(w_sum[cut:].sum()) / cnt
            w_var = ((float(w_sq[cut:].sum()) - cnt * w_mean * w_mean) / (cnt - 1)
                     if cnt > 1 else math.nan)
        else:
            w_mean = w_var = math.nan
        h_sel = headways[cut:, n]
        stats.append(StationSimStats(
            station=n + 1,
            q_mean=float(q_sel.mean()), q_var=float(q_sel.var(ddof=1)),
            q_mean_se=_series_se(q_sel),
            w_mean=w_mean, w_var=w_var,
            w_mean_se=_ratio_se(w_sum[cut:], w_cnt[cut:]),
            headway_mean=float(h_sel.mean()), headway_var=float(h_sel.var(ddof=1)),
            boarded=cnt,
        ))

    result = SimStats(label=scenario.label, runs=runs, seed=config.seed,
                      warmup=config.warmup, stations=tuple(stats))
    if not keep_trace:
        return result, None
    trace = {
        "headways": headways,
        "arrived": k_all.sum(axis=0),
        "boarded": trace_boarded,
        "final_queue": trace_final_q,
        "load_max": load_max,
        "final_loads": loads.copy(),
    }
    return result, trace


def run_simulation(scenario: Scenario, config: SimConfig | None = None) -> SimStats:
    stats, _ = _simulate(scenario, config or SimConfig())
    return stats


# ---------------------------------------------------------------------------
# Theory-vs-simulation comparison

_REL_MEAN_DEFAULT = 0.08
_FLOOR_EQ = 0.3
_FLOOR_EW = 0.2


@dataclass(frozen=True)
class ComparisonRow:
    station: int
    status: str             # pass | fail | excluded-unstable | excluded-no-arrivals
    eq_theory: float
    eq_sim: float
    eq_gap: float
    eq_tol: float
    ew_theory: float
    ew_sim: float
    ew_gap: float
    ew_tol: float
    q_sd_theory: float
    q_sd_sim: float
    q_sd_rel_gap: float
    w_sd_theory: float
    w_sd_sim: float
    w_sd_rel_gap: float


@dataclass(frozen=True)
class ComparisonTable:
    label: str
    tol_mean: float
    tol_sd: float
    rows: tuple[ComparisonRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.status != "fail" for row in self.rows)


def compare(report: RouteReport, stats: SimStats,
            tol_mean: float = _REL_MEAN_DEFAULT,
            tol_sd: float = 0.12) -> ComparisonTable:
    """Check simulated moments against the analytical report, station by station.

    Mean checks pass when the gap is within max(floor, tol_mean * |theory|);
    the absolute floors (0.3 queue, 0.2 wait) scale with tol_mean so that
    tol_mean=0 demands exact agreement and fails on Monte Carlo noise alone.
    Spread checks compare standard deviations relatively at tol_sd.  Unstable
    and zero-arrival stations are reported but excluded from pass/fail.
    """
    if len(report.stations) != len(stats.stations):
        raise ValueError("report and simulation cover different station counts")
    scale = tol_mean / _REL_MEAN_DEFAULT
    rows = []
    for th, sim in zip(report.stations, stats.stations):
        if not th.stable:
            rows.append(ComparisonRow(
                station=th.station, status="excluded-unstable",
                eq_theory=th.eq, eq_sim=sim.q_mean, eq_gap=math.nan, eq_tol=math.nan,
                ew_theory=th.ew, ew_sim=sim.w_mean, ew_gap=math.nan, ew_tol=math.nan,
                q_sd_theory=math.nan, q_sd_sim=math.sqrt(max(sim.q_var, 0.0)),
                q_sd_rel_gap=math.nan, w_sd_theory=math.nan, w_sd_sim=math.nan,
                w_sd_rel_gap=math.nan))
            continue
        if th.arrival_rate == 0.0:
            rows.append(ComparisonRow(
                station=th.station, status="excluded-no-arrivals",
                eq_theory=th.eq, eq_sim=sim.q_mean, eq_gap=abs(th.eq - sim.q_mean),
                eq_tol=math.nan, ew_theory=th.ew, ew_sim=sim.w_mean,
                ew_gap=math.nan, ew_tol=math.nan,
                q_sd_theory=math.sqrt(max(th.varq, 0.0)),
                q_sd_sim=math.sqrt(max(sim.q_var, 0.0)), q_sd_rel_gap=math.nan,
                w_sd_theory=math.nan, w_sd_sim=math.nan, w_sd_rel_gap=math.nan))
            continue
        eq_gap = abs(th.eq - sim.q_mean)
        eq_tol = max(_FLOOR_EQ * scale, tol_mean * abs(th.eq))
        ew_gap = abs(th.ew - sim.w_mean)
        ew_tol = max(_FLOOR_EW * scale, tol_mean * abs(th.ew))
        q_sd_th = math.sqrt(max(th.varq, 0.0))
        q_sd_sim = math.sqrt(max(sim.q_var, 0.0))
        w_sd_th = math.sqrt(max(th.varw, 0.0))
        w_sd_sim = math.sqrt(max(sim.w_var, 0.0)) if not math.isnan(sim.w_var) else math.nan
        q_sd_gap = abs(q_sd_sim - q_sd_th) / q_sd_th if q_sd_th > 0 else math.inf
        w_sd_gap = abs(w_sd_sim - w_sd_th) / w_sd_th if w_sd_th > 0 else math.inf
        ok = (eq_gap <= eq_tol and ew_gap <= ew_tol
              and q_sd_gap <= tol_sd and w_sd_gap <= tol_sd)
        rows.append(ComparisonRow(
            station=th.station, status="pass" if ok else "fail",
            eq_theory=th.eq, eq_sim=sim.q_mean, eq_gap=eq_gap, eq_tol=eq_tol,
            ew_theory=th.ew, ew_sim=sim.w_mean, ew_gap=ew_gap, ew_tol=ew_tol,
            q_sd_theory=q_sd_th, q_sd_sim=q_sd_sim, q_sd_rel_gap=q_sd_gap,
            w_sd_theory=w_sd_th, w_sd_sim=w_sd_sim, w_sd_rel_gap=w_sd_gap))
    return ComparisonTable(label=report.label, tol_mean=tol_mean, tol_sd=tol_sd,
                           rows=tuple(rows))
