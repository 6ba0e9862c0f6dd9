"""Incident-delay and headway distribution mathematics.

The vehicle headway at a station is nominal dispatch headway plus the
difference of two independent compound Poisson-exponential delays (this
vehicle's suspensions minus the previous vehicle's).  That law has no
closed-form density, so the pipeline works with a zero-inflated rectified
normal surrogate matched to its mean and variance, and everything downstream
(arrival-count PGF, moments) is derived from that surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, ndtr

from .model import Scenario, adjusted_headway, travel_time_to

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class HeadwayModel:
    """Zero-inflated rectified-normal headway surrogate for one station.

    ``mu``/``sigma`` parameterize the underlying normal; negative draws are
    rectified onto an atom at zero of size ``zero_mass`` = Phi(-mu/sigma).
    ``sigma == 0`` denotes the degenerate no-incident model (point mass at mu).
    """

    mu: float
    sigma: float
    zero_mass: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"headway mean must be positive, got {self.mu}")
        if self.sigma < 0:
            raise ValueError(f"headway sigma must be nonnegative, got {self.sigma}")


@dataclass(frozen=True)
class ArrivalMoments:
    """Mean and central moments of the passenger count arriving in one headway."""

    mean: float
    central2: float
    central3: float


def incident_duration_mean(gamma: float, theta: float, travel_time: float) -> float:
    """Expected total suspension delay over ``travel_time`` minutes of track.

    Suspensions occur Poisson(gamma per min) and each lasts Exp(theta), so the
    compound total has mean gamma * T / theta.
    """
    _check_incident_args(gamma, theta, travel_time)
    return gamma * travel_time / theta


def incident_duration_variance(gamma: float, theta: float, travel_time: float) -> float:
    """Variance of the compound delay: gamma * T * E[X^2] = 2 gamma T / theta^2."""
    _check_incident_args(gamma, theta, travel_time)
    return 2.0 * gamma * travel_time / theta**2


def _check_incident_args(gamma, theta, travel_time):
    if gamma < 0:
        raise ValueError(f"incident rate must be >= 0, got {gamma}")
    if theta <= 0:
        raise ValueError(f"incident duration rate must be > 0, got {theta}")
    if travel_time < 0:
        raise ValueError(f"travel time must be >= 0, got {travel_time}")


def headway_mgf(t: float, scenario: Scenario, n: int) -> float:
    """Moment generating function of the exact (not rectified) headway at station n.

    Valid for |t| < theta; used as a test oracle rather than in the pipeline.
    """
    theta = scenario.incidents.duration_rate
    gamma = scenario.incidents.rate
    if abs(t) >= theta:
        raise ValueError(f"headway MGF undefined for |t| >= theta ({t} vs {theta})")
    t_n = travel_time_to(scenario.route, n)
    base = math.exp(t * adjusted_headway(scenario))
    return base * math.exp(gamma * t_n * 2.0 * t * t / (theta * theta - t * t))


def headway_base_moments(scenario: Scenario, n: int) -> tuple[float, float]:
    """(mean, variance) of the exact headway at station n.

    The mean is the incident-adjusted dispatch headway (station independent);
    the variance 4 * T_n * gamma / theta^2 grows linearly with distance from
    the hub because both neighbouring delays accumulate over T_n.
    """
    gamma = scenario.incidents.rate
    theta = scenario.incidents.duration_rate
    t_n = travel_time_to(scenario.route, n)
    return adjusted_headway(scenario), 4.0 * t_n * gamma / theta**2


def truncated_headway(scenario: Scenario, n: int) -> HeadwayModel:
    """Fit the zero-inflated rectified-normal surrogate at station n."""
    mean, var = headway_base_moments(scenario, n)
    sigma = math.sqrt(var)
    if sigma == 0.0:
        return HeadwayModel(mu=mean, sigma=0.0, zero_mass=0.0)
    return HeadwayModel(mu=mean, sigma=sigma, zero_mass=float(ndtr(-mean / sigma)))


def truncated_headway_moments(model: HeadwayModel) -> tuple[float, float, float]:
    """(mean, variance, third central moment) of max(0, N(mu, sigma^2)).

    Closed-form rectified-Gaussian raw moments:
        E[X]   = mu Phi(m) + sigma phi(m)
        E[X^2] = (mu^2 + sigma^2) Phi(m) + mu sigma phi(m)
        E[X^3] = (mu^3 + 3 mu sigma^2) Phi(m) + (mu^2 sigma + 2 sigma^3) phi(m)
    with m = mu/sigma.
    """
    mu, sigma = model.mu, model.sigma
    if sigma == 0.0:
        return mu, 0.0, 0.0
    m = mu / sigma
    big_phi = float(ndtr(m))
    small_phi = math.exp(-0.5 * m * m) * _INV_SQRT_2PI
    raw1 = mu * big_phi + sigma * small_phi
    raw2 = (mu * mu + sigma * sigma) * big_phi + mu * sigma * small_phi
    raw3 = (mu**3 + 3.0 * mu * sigma**2) * big_phi + (mu * mu * sigma + 2.0 * sigma**3) * small_phi
    var = raw2 - raw1 * raw1
    central3 = raw3 - 3.0 * raw1 * raw2 + 2.0 * raw1**3
    return raw1, var, central3


def y_pgf(z, lam: float, model: HeadwayModel):
    """PGF of the arrivals-per-headway count at complex argument(s) z.

    Mixing Poisson(lam * H) over the rectified-normal H gives

        zero_mass + exp(mu lam (z-1) + sigma^2 lam^2 (z-1)^2 / 2)
                    * (1 - Phi(-mu/sigma - sigma lam (z-1)))

    with Phi evaluated at complex argument.  Direct evaluation overflows on
    parts of the unit disk, so this uses the scaled complement erfcx with the
    exact cancellation  exponent - w^2/2 = -m^2/2  (w = -m - sigma lam (z-1)),
    reflecting erfcx when Re w < 0; accurate to ~1e-13 on the closed disk.

    Accepts a scalar or ndarray z; returns matching shape.
    """
    if lam < 0:
        raise ValueError(f"arrival rate must be >= 0, got {lam}")
    arr = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("y_pgf: non-finite argument")
    scalar = arr.ndim == 0
    zz = np.atleast_1d(arr)

    if model.sigma <= 1e-12 * model.mu:
        # effectively deterministic headway: the sigma corrections are below
        # double precision and mu/sigma would overflow, so use the Poisson form
        out = np.exp(lam * model.mu * (zz - 1.0))
    else:
        m = model.mu / model.sigma
        u = model.sigma * lam * (zz - 1.0)
        w = -m - u
        g = m * u + 0.5 * u * u          # = mu lam (z-1) + sigma^2 lam^2 (z-1)^2 / 2
        base = 0.5 * math.exp(-0.5 * m * m)
        out = np.empty_like(zz)
        pos = w.real >= 0.0
        out[pos] = base * erfcx(w[pos] / _SQRT2)
        neg = ~pos
        out[neg] = np.exp(g[neg]) - base * erfcx(-w[neg] / _SQRT2)
        out = out + model.zero_mass
    if scalar:
        return complex(out[0])
    return out.reshape(arr.shape)


def y_moments(lam: float, model: HeadwayModel) -> ArrivalMoments:
    """Exact moments of the arrival count via mixed-Poisson cumulants.

    With L = lam * H, the count's cumulants are k1 = E[L],
    k2 = E[L] + Var[L], k3 = E[L] + 3 Var[L] + k3[L]; no PGF
    differentiation needed.
    """
    if lam < 0:
        raise ValueError(f"arrival rate must be >= 0, got {lam}")
    h_mean, h_var, h_c3 = truncated_headway_moments(model)
    mix_mean = lam * h_mean
    mix_var = lam * lam * h_var
    mix_c3 = lam**3 * h_c3
    return ArrivalMoments(
        mean=mix_mean,
        central2=mix_mean + mix_var,
        central3=mix_mean + 3.0 * mix_var + mix_c3,
    )


def sample_incident_duration(rng: np.random.Generator, gamma: float, theta: float,
                             travel_time: float) -> float:
    """One draw of the compound suspension delay: Poisson count of Exp jumps."""
    _check_incident_args(gamma, theta, travel_time)
    count = rng.poisson(gamma * travel_time)
    # Gamma(k, 1/theta) is the sum of k iid Exp(theta); shape 0 yields exactly 0
    return float(rng.gamma(count) / theta) if count else 0.0
