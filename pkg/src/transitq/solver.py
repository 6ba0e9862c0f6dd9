"""Analytical pipeline: alighting/boarding recursions, queue-front solve, moments.

Stations are processed in order; the load distribution leaving station n
becomes the arriving-load distribution at n+1.  Per station the available
space S (capacity minus surviving load) and arrival count Y define a
bulk-service queue whose steady state at vehicle arrivals is recovered from
the C in-disk roots of the PGF denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .headway import (ArrivalMoments, HeadwayModel, truncated_headway,
                      y_moments, y_pgf)
from .model import Scenario, require_valid
from .roots import RootSearchError, RootSet, find_all_roots

TRIM_EPS = 1e-12           # below this, top-of-range space mass counts as zero
FRONT_DIRECT_MIN_SC = 1e-4  # smallest s_C the triangular solve handles accurately
CONTOUR_POINTS = 16384
CONTOUR_RADIUS = 0.97

UNBOUNDED = math.inf        # sentinel for moments of an unstable station


class SolverError(RuntimeError):
    pass


class CapacityTrimError(SolverError):
    """s_C is numerically zero; the caller must shrink the effective capacity."""


class UnstableStationError(SolverError):
    """Queue-front requested for a station with no stationary regime."""


class FrontPrecisionError(SolverError):
    """Solved queue front failed its numerical diagnostics."""


class StationSolveError(SolverError):
    """Numeric failure inside analyze_route, tagged with the 1-based station."""

    def __init__(self, station: int, message: str):
        super().__init__(f"station {station}: {message}")
        self.station = station


class DiscreteDist:
    """Probability vector over passenger counts 0..C.

    Entries in [-1e-12, 0) are treated as roundoff and clamped to zero;
    anything more negative signals a solver bug and raises.  The vector is
    renormalized exactly after the sum is confirmed within 1e-9 of one.
    """

    __slots__ = ("probs",)

    def __init__(self, probs):
        arr = np.array(probs, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("distribution must be a nonempty 1-D vector")
        low = arr.min()
        if low < -1e-12:
            raise ValueError(f"distribution entry {low:.3e} below the -1e-12 clamp floor")
        arr[arr < 0.0] = 0.0
        total = arr.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"distribution sums to {total!r}, outside 1 +- 1e-9")
        self.probs = arr / total
        self.probs.setflags(write=False)

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def top_index(self) -> int:
        return len(self.probs) - 1


def point_mass(k: int, capacity: int) -> DiscreteDist:
    v = np.zeros(capacity + 1)
    v[k] = 1.0
    return DiscreteDist(v)


class QueueFront:
    """Steady-state probabilities q_0..q_{C-1} of the queue seen at vehicle arrival."""

    __slots__ = ("q",)

    def __init__(self, q):
        arr = np.array(q, dtype=float)
        if arr.min() < 0.0:
            raise ValueError(f"queue-front entry {arr.min():.3e} negative")
        if arr.sum() > 1.0 + 1e-9:
            raise ValueError(f"queue-front mass {arr.sum()!r} exceeds 1")
        self.q = arr
        self.q.setflags(write=False)


@dataclass(frozen=True)
class StationMetrics:
    station: int                     # 1-based
    rho: float
    stable: bool
    eq: float
    varq: float
    ew: float                        # NaN when no passengers arrive here
    varw: float
    roots: tuple[complex, ...] = ()
    queue_front: QueueFront | None = None
    effective_capacity: int | None = None
    service_dist: DiscreteDist | None = None
    arrivals: ArrivalMoments | None = None
    arrival_rate: float = 0.0


@dataclass(frozen=True)
class RouteReport:
    label: str
    stations: tuple[StationMetrics, ...]
    headway: tuple[HeadwayModel, ...]
    scenario: Scenario | None = None

    @property
    def num_stations(self) -> int:
        return len(self.stations)


# ---------------------------------------------------------------------------
# Station-to-station recursions


def alighting_matrix(alpha: float, capacity: int) -> np.ndarray:
    """Row-stochastic load-thinning matrix: entry (i, j) = P(j of i stay onboard)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alighting probability must lie in [0, 1], got {alpha}")
    idx = np.arange(capacity + 1)
    ii = idx[:, None]
    jj = idx[None, :]
    with np.errstate(invalid="ignore"):
        mat = binom.pmf(ii - jj, ii, alpha)
    mat[jj > ii] = 0.0
    return mat


def step_alighting(v_prev: DiscreteDist, alpha: float, capacity: int
                   ) -> tuple[DiscreteDist, DiscreteDist]:
    """Thin the arriving load by alighting; mirror into available space.

    Returns (g, s): g is the surviving-load pmf, s the free-space pmf with
    s_k = g_{C-k}.
    """
    g = DiscreteDist(v_prev.probs @ alighting_matrix(alpha, capacity))
    s = DiscreteDist(g.probs[::-1])
    return g, s


def boarding_matrix(queue_front: QueueFront, capacity: int) -> np.ndarray:
    """Row-stochastic load-refill matrix from the queue-front distribution.

    From post-alighting load i the vehicle leaves with j < C whenever exactly
    j - i passengers were queued, and leaves full when at least C - i were.
    """
    q = np.zeros(capacity)
    qq = np.asarray(queue_front.q, dtype=float)
    q[: len(qq)] = qq[:capacity]
    mat = np.zeros((capacity + 1, capacity + 1))
    for i in range(capacity):
        take = capacity - i
        mat[i, i:capacity] = q[:take]
        # tail probability; the front's own roundoff allowance (sum within
        # 1e-9 above one) may push the difference a hair below zero
        mat[i, capacity] = max(0.0, 1.0 - q[:take].sum())
    mat[capacity, capacity] = 1.0
    return mat


def dist_moments(d) -> tuple[float, float, float]:
    """(mean, 2nd central, 3rd central) of a pmf by direct summation."""
    p = np.asarray(getattr(d, "probs", d), dtype=float)
    k = np.arange(len(p))
    mean = float(k @ p)
    dev = k - mean
    return mean, float((dev**2) @ p), float((dev**3) @ p)


def utilization(s: DiscreteDist, y: ArrivalMoments) -> tuple[float, bool]:
    """(rho, stable) — arrivals per vehicle over expected free space, strict < 1."""
    s_mean = dist_moments(s)[0]
    if s_mean <= 0.0:
        # vehicle always arrives full and nobody alights; nothing can board
        return math.inf, False
    rho = y.mean / s_mean
    return rho, rho < 1.0


def den_eval(z, s, y_pgf_handle):
    """Denominator z^C / Y(z) - sum_u s_u z^{C-u}; zero exactly at the C roots."""
    probs = np.asarray(getattr(s, "probs", s), dtype=float)
    cap = len(probs) - 1
    arr = np.asarray(z, dtype=complex)
    y_vals = np.asarray(y_pgf_handle(arr), dtype=complex)
    if np.any(y_vals == 0):
        raise ArithmeticError("Y(z) = 0 at a denominator evaluation point")
    out = arr**cap / y_vals - np.polyval(probs, arr)
    return complex(out) if arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# Queue front


def _real_checked(value: complex, what: str, tol: float = 1e-8) -> float:
    if abs(value.imag) > tol:
        raise FrontPrecisionError(f"{what} has imaginary residue {value.imag:.3e}")
    return float(value.real)


def normalization_gap(s, q, s_mean: float, y_mean: float) -> float:
    """|sum_u s_u sum_{i<u} q_i (u-i) - (S_mean - Y_mean)|.

    The left side is the expected unused boarding space; equality with the
    mean drift is the L'Hopital normalization of the queue PGF at z=1.
    """
    probs = np.asarray(getattr(s, "probs", s), dtype=float)
    qv = np.asarray(getattr(q, "q", q), dtype=float)
    cap = len(probs) - 1
    # sum_{i<u} q_i (u-i) = u * A_{u-1} - B_{u-1} with prefix sums A, B
    a = np.concatenate([[0.0], np.cumsum(qv)])
    b = np.concatenate([[0.0], np.cumsum(np.arange(len(qv)) * qv)])
    total = 0.0
    for u in range(cap + 1):
        m = min(u, len(qv))
        total += probs[u] * (u * a[m] - b[m])
    return abs(total - (s_mean - y_mean))


def _front_diagnostics(raw_q: np.ndarray, s, s_mean: float, y_mean: float) -> np.ndarray:
    if raw_q.min() < -1e-9:
        raise FrontPrecisionError(f"queue-front entry {raw_q.min():.3e} below -1e-9")
    q = np.clip(raw_q, 0.0, None)
    if q.sum() > 1.0 + 1e-9:
        raise FrontPrecisionError(f"queue-front mass {q.sum()!r} exceeds 1 + 1e-9")
    gap = normalization_gap(s, q, s_mean, y_mean)
    if gap > 1e-8:
        raise FrontPrecisionError(f"normalization identity off by {gap:.3e}")
    return q


def queue_front(s: DiscreteDist, roots: RootSet, y: ArrivalMoments) -> QueueFront:
    """Solve q_0..q_{C-1} by matching polynomial coefficients.

    q_0 comes from the product over non-unit roots; the remaining entries
    follow from the triangular Toeplitz system with the coefficients of
    prod_i (1 - z/z_i).  Fast and exact while s_C is healthy; for tiny s_C
    the triangle is ill-conditioned (error grows like eps/s_C) and the
    contour route below should be used instead.
    """
    probs = s.probs
    cap = len(probs) - 1
    s_top = float(probs[cap])
    if s_top <= TRIM_EPS:
        raise CapacityTrimError(
            f"s_C = {s_top:.3e} is numerically zero; reduce the effective capacity")
    s_mean = dist_moments(s)[0]
    if s_mean <= y.mean:
        raise UnstableStationError(
            f"mean free space {s_mean:.6g} does not exceed mean arrivals {y.mean:.6g}")
    inner = roots.inner()
    if len(inner) != cap - 1:
        raise ValueError(f"expected {cap - 1} non-unit roots, got {len(inner)}")

    q0 = (s_mean - y.mean) / s_top * _real_checked(
        complex(np.prod(inner / (inner - 1.0))) if len(inner) else 1.0 + 0j,
        "root product for q_0")
    coeffs = np.array([1.0 + 0.0j])
    for zi in np.concatenate([[1.0 + 0.0j], inner]):
        coeffs = np.convolve(coeffs, np.array([1.0, -1.0 / zi]))
    if np.max(np.abs(coeffs.imag)) > 1e-8:
        raise FrontPrecisionError(
            f"numerator coefficients have imaginary residue {np.max(np.abs(coeffs.imag)):.3e}")
    scaled = s_top * q0 * coeffs.real[:cap]

    q = np.zeros(cap)
    for j in range(cap):
        q[j] = (scaled[j] - (q[:j] @ probs[cap - j:cap] if j else 0.0)) / s_top
    return QueueFront(_front_diagnostics(q, s, s_mean, y.mean))


def queue_front_contour(s: DiscreteDist, roots: RootSet, y: ArrivalMoments,
                        y_pgf_handle, n_points: int = CONTOUR_POINTS,
                        radius: float = CONTOUR_RADIUS) -> QueueFront:
    """Extract q_0..q_{C-1} as power-series coefficients of the queue PGF.

    The PGF is assembled in root-factored form
        Q(z) = (S_mean - Y_mean)(z - 1) prod(z - z_i) / [prod(1 - z_i) Den(z)]
    and integrated over a circle inside the unit disk via the FFT.  Immune to
    the small-s_C ill-conditioning of the direct triangular solve.
    """
    probs = s.probs
    cap = len(probs) - 1
    s_mean = dist_moments(s)[0]
    if s_mean <= y.mean:
        raise UnstableStationError(
            f"mean free space {s_mean:.6g} does not exceed mean arrivals {y.mean:.6g}")
    inner = roots.inner()
    if len(inner) != cap - 1:
        raise ValueError(f"expected {cap - 1} non-unit roots, got {len(inner)}")
    scale = (s_mean - y.mean) / _real_checked(
        complex(np.prod(1.0 - inner)) if len(inner) else 1.0 + 0j,
        "root product normalizer")

    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    z = radius * np.exp(1j * theta)
    num = scale * (z - 1.0)
    if len(inner):
        num = num * np.prod(z[:, None] - inner[None, :], axis=1)
    den = z**cap / np.asarray(y_pgf_handle(z), dtype=complex) - np.polyval(probs, z)
    coef = np.fft.fft(num / den) / n_points
    q = (coef[:cap] / radius ** np.arange(cap)).real
    return QueueFront(_front_diagnostics(q, s, s_mean, y.mean))


# ---------------------------------------------------------------------------
# Closed-form moments


def queue_moments(s_mom: tuple[float, float, float], y: ArrivalMoments,
                  roots: RootSet) -> tuple[float, float]:
    """Mean and variance of the queue at vehicle arrival, central-moment form.

    Each expression splits into a moment part and a sum over the non-unit
    roots; conjugate pairs make the root sums real.
    """
    s_mean, s_c2, s_c3 = s_mom
    y_mean, y_c2, y_c3 = y.mean, y.central2, y.central3
    drift = s_mean - y_mean
    if drift <= 0:
        return UNBOUNDED, UNBOUNDED
    cap = len(roots)
    inner = roots.inner()
    sum1 = _real_checked(complex(np.sum(1.0 / (1.0 - inner))) if len(inner) else 0j,
                         "first root sum")
    sum2 = _real_checked(complex(np.sum(inner / (1.0 - inner) ** 2)) if len(inner) else 0j,
                         "second root sum")
    eq = (s_c2 + y_c2 + drift * (1.0 + 2.0 * (s_mean - cap)) - drift**2) / (2.0 * drift) + sum1
    varq = (-4.0 * (s_c3 - y_c3) * drift + 3.0 * (s_c2 + y_c2) ** 2
            - (6.0 * (s_c2 - y_c2) - 1.0) * drift**2 - drift**4) / (12.0 * drift**2) - sum2
    return eq, varq


def queue_moments_raw(s_raw: tuple[float, float, float], y_raw: tuple[float, float, float],
                      roots: RootSet) -> tuple[float, float]:
    """Same moments written in raw (non-central) moments — cross-check form.

    Algebraically identical to queue_moments; kept as an independent
    transcription so a typo in either version shows up as a disagreement.
    """
    sb, s2, s3 = s_raw
    yb, y2, y3 = y_raw
    d = sb - yb
    if d <= 0:
        return UNBOUNDED, UNBOUNDED
    cap = len(roots)
    inner = roots.inner()
    sum1 = _real_checked(complex(np.sum(1.0 / (1.0 - inner))) if len(inner) else 0j,
                         "first root sum")
    sum2 = _real_checked(complex(np.sum(inner / (1.0 - inner) ** 2)) if len(inner) else 0j,
                         "second root sum")
    eq = (-2.0 * cap * sb + 2.0 * cap * yb + s2 + sb + y2 - 2.0 * yb**2 - yb) / (2.0 * d) + sum1
    var_num = (3.0 * s2**2 + 6.0 * s2 * y2 - 12.0 * s2 * yb**2 - 4.0 * s3 * sb + 4.0 * s3 * yb
               + sb**2 - 24.0 * sb * y2 * yb + 4.0 * sb * y3 + 24.0 * sb * yb**3
               - 2.0 * sb * yb + 3.0 * y2**2 + 12.0 * y2 * yb**2 - 4.0 * y3 * yb
               - 12.0 * yb**4 + yb**2)
    return eq, var_num / (12.0 * d * d) - sum2


def wait_moments(eq: float, varq: float, y: ArrivalMoments, lam: float
                 ) -> tuple[float, float]:
    """Mean and variance of an individual passenger's wait.

    The arrival-epoch queue moments are first corrected to time averages
    (the Q_t terms), then Little's law divides by the arrival rate.  Uses the
    central moments of the per-headway arrival count throughout.
    """
    if lam <= 0:
        raise ValueError("waiting time undefined at a station with no arrivals")
    yb, yc2, yc3 = y.mean, y.central2, y.central3
    q_t = eq - yb + 0.5 * (yc2 / yb + yb - 1.0)
    qq_t = varq - yc2 + (4.0 * yb * yc3 + 6.0 * yb * yb * yc2
                         - yb * yb + yb**4 - 3.0 * yc2**2) / (12.0 * yb * yb)
    return q_t / lam, (qq_t - q_t) / (lam * lam)


# ---------------------------------------------------------------------------
# Full pipeline


def _effective_capacity(probs: np.ndarray) -> int:
    nz = np.nonzero(probs > TRIM_EPS)[0]
    return int(nz[-1]) if len(nz) else 0


def _solve_station(n: int, s: DiscreteDist, y: ArrivalMoments, lam: float,
                   model: HeadwayModel, rho: float, capacity: int):
    """Root search + queue front + moments for one stable, nonzero-demand station."""
    probs = s.probs
    ceff = _effective_capacity(probs)
    if ceff < 1:
        raise StationSolveError(n, "available space distribution is numerically degenerate")
    if ceff < capacity:
        s_eff = DiscreteDist(probs[: ceff + 1])
    else:
        s_eff = s

    def y_handle(z):
        return y_pgf(z, lam, model)

    try:
        roots = find_all_roots(s_eff.probs, y_handle, ceff, rho)
    except RootSearchError as exc:
        raise StationSolveError(n, str(exc)) from exc

    resid = np.max(np.abs(den_eval(roots.as_array(), s_eff, y_handle)))
    if resid >= 1e-8:
        raise StationSolveError(n, f"max |Den(root)| = {resid:.3e} exceeds 1e-8")

    try:
        if s_eff.probs[ceff] >= FRONT_DIRECT_MIN_SC:
            try:
                front = queue_front(s_eff, roots, y)
            except FrontPrecisionError:
                front = queue_front_contour(s_eff, roots, y, y_handle)
        else:
            front = queue_front_contour(s_eff, roots, y, y_handle)
    except SolverError as exc:
        raise StationSolveError(n, str(exc)) from exc

    eq, varq = queue_moments(dist_moments(s_eff), y, roots)
    padded = np.zeros(capacity)
    padded[: len(front.q)] = front.q
    return roots, QueueFront(padded), eq, varq, ceff, s_eff


def analyze_route(scenario: Scenario) -> RouteReport:
    """Run the station recursion end to end and report per-station metrics.

    Stable stations get roots, queue front, and queue/wait moments; unstable
    ones carry the unbounded sentinel, an all-zero queue front, and a vehicle
    that departs full.  Stations with no arrivals short-circuit to an empty
    queue (their wait moments are NaN — undefined, not zero).
    """
    require_valid(scenario)
    route = scenario.route
    capacity = route.capacity
    rates = route.arrival_rates()
    alphas = route.alight_probs()

    v = point_mass(0, capacity)
    metrics: list[StationMetrics] = []
    models: list[HeadwayModel] = []
    for n in range(1, route.num_stations + 1):
        lam = rates[n - 1]
        model = truncated_headway(scenario, n)
        models.append(model)
        g, s = step_alighting(v, alphas[n - 1], capacity)
        ym = y_moments(lam, model)
        rho, stable = utilization(s, ym)

        if not stable:
            metrics.append(StationMetrics(
                station=n, rho=rho, stable=False,
                eq=UNBOUNDED, varq=UNBOUNDED, ew=UNBOUNDED, varw=UNBOUNDED,
                queue_front=QueueFront(np.zeros(capacity)),
                service_dist=s, arrivals=ym, arrival_rate=lam,
            ))
            v = point_mass(capacity, capacity)
            continue

        if lam == 0.0:
            front = QueueFront(np.r_[1.0, np.zeros(capacity - 1)])
            metrics.append(StationMetrics(
                station=n, rho=rho, stable=True,
                eq=0.0, varq=0.0, ew=math.nan, varw=math.nan,
                queue_front=front, service_dist=s, arrivals=ym, arrival_rate=lam,
            ))
            v = DiscreteDist(g.probs @ boarding_matrix(front, capacity))
            continue

        roots, front, eq, varq, ceff, s_eff = _solve_station(
            n, s, ym, lam, model, rho, capacity)
        ew, varw = wait_moments(eq, varq, ym, lam)
        metrics.append(StationMetrics(
            station=n, rho=rho, stable=True,
            eq=eq, varq=varq, ew=ew, varw=varw,
            roots=tuple(roots.roots), queue_front=front,
            effective_capacity=ceff, service_dist=s, arrivals=ym, arrival_rate=lam,
        ))
        v = DiscreteDist(g.probs @ boarding_matrix(front, capacity))

    return RouteReport(label=scenario.label, stations=tuple(metrics),
                       headway=tuple(models), scenario=scenario)
