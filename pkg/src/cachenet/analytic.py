"""Closed-form and semi-closed-form engine.

Implements the interference Laplace transform of the LOS-ball pico tier, the
cache-conditioned coverage probabilities and their densities for both tiers,
the serving-distance laws and per-tier coverage under the max-mean-power
association rule, the coverage densities under the max-instantaneous-rate
rule, association probabilities, mean load, delivery success probability
(including the backhaul-limited server path for uncached files), and area
spectral efficiency.

Conventions
    * tiers: 1 = sub-6 GHz macro (Rayleigh, omni), 2 = mmWave pico
      (Nakagami, ULA, zero gain outside the LOS ball).
    * thresholds tau are linear SINR; rates are bits/s.
    * Per the usual dense-network regime, every quantity past the
      single-tier coverage laws is interference limited: tier 1 drops noise
      entirely, tier 2 keeps it only in ``coverage_tier2(include_noise=True)``
      and the exact tier-1 variant.

All functions are pure in (arguments, model); results for the heavier
operations are memoized on the hashable model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .model import NetworkModel, array_gain, zipf_pmf
from .numerics import (
    F_y,
    F_y_prime,
    cap_delta,
    cap_lambda,
    chebyshev_integrate,
    erfcx,
    gauss_chebyshev_nodes,
    hyp_S,
)

__all__ = [
    "MAXRP",
    "MAXRATE",
    "NumericalQualityError",
    "CoverageQuery",
    "MetricCurve",
    "laplace_tier2",
    "coverage_tier2",
    "coverage_tier2_pdf",
    "coverage_tier1",
    "coverage_tier1_pdf",
    "maxrp_distance_pdf",
    "maxrp_sinr_coverage",
    "maxrate_coverage_pdf",
    "association_probability",
    "average_load",
    "server_success",
    "success_probability",
    "area_spectral_efficiency",
]

MAXRP = "maxrp"
MAXRATE = "maxrate"

_QUAD_KW = dict(epsabs=1e-8, epsrel=1e-8, limit=200)
# Two integration routes for the same rate-rule tail must agree this well.
_TAIL_CHECK_TOL = 1e-6
# Mean UEs per cell under the nearest-region area approximation.
_LOAD_AREA_FACTOR = 1.28


class NumericalQualityError(ArithmeticError):
    """Two independent evaluation routes of one quantity disagree."""


@dataclass(frozen=True)
class CoverageQuery:
    """One coverage-probability request against a model."""

    tier: int
    file_rank: int
    threshold: float
    include_noise: bool = False

    def __post_init__(self):
        if self.tier not in (1, 2):
            raise ValueError(f"tier must be 1 or 2, got {self.tier!r}")
        if self.file_rank < 1:
            raise ValueError("file rank must be >= 1")
        if not self.threshold > 0:
            raise ValueError("SINR threshold must be positive")


@dataclass(frozen=True)
class MetricCurve:
    """A sweep result: axis points, values, optional 95% half-widths."""

    axis: tuple
    values: tuple
    half_widths: tuple | None = None

    def __post_init__(self):
        if len(self.axis) == 0:
            raise ValueError("axis must be non-empty")
        if any(b <= a for a, b in zip(self.axis, self.axis[1:])):
            raise ValueError("axis must be strictly increasing")
        if len(self.values) != len(self.axis):
            raise ValueError("values length must match axis")
        if self.half_widths is not None and len(self.half_widths) != len(self.axis):
            raise ValueError("half_widths length must match axis")


def normalize_scheme(scheme: str) -> str:
    s = scheme.replace("-", "").replace("_", "").lower()
    if s == "maxrp":
        return MAXRP
    if s == "maxrate":
        return MAXRATE
    raise ValueError(f"unknown association scheme {scheme!r}")


@lru_cache(maxsize=64)
def _rule(order: int):
    """Chebyshev rule plus the weight renormalization that makes constants
    integrate exactly (kills the O(order^-2) bias of the raw node sum)."""
    rule = gauss_chebyshev_nodes(order)
    norm = 2.0 / chebyshev_integrate(rule, np.ones(order))
    return rule, norm


@lru_cache(maxsize=16)
def _eta(order: int) -> float:
    """Rate constant of the tight Gamma-CDF bound: m * (m!)**(-1/m)."""
    return order * math.factorial(order) ** (-1.0 / order)


def _binom_terms(order: int):
    return [(n, (-1) ** (n + 1) * math.comb(order, n)) for n in range(1, order + 1)]


# --------------------------------------------------------------------------
# Pico-tier interference Laplace transform
# --------------------------------------------------------------------------

def _beam_nodes(model: NetworkModel):
    """ULA gains at the Chebyshev nodes of the beam-average quadrature."""
    rule, norm = _rule(model.quad_orders[0])
    gains = array_gain(rule.nodes * model.antenna_spacing_ratio, model.tier(2).antennas)
    return rule, norm, gains


def _laplace_from_scale(model: NetworkModel, p2: float, r_vec: np.ndarray, sigma_vec: np.ndarray) -> np.ndarray:
    """Laplace transform of pico interference at serving distances ``r_vec``.

    ``sigma_vec`` is the per-distance scale n*s*tau/Np so that an interferer
    at distance v with beam offset w contributes through
    (1 + sigma*G(w)/v**alpha)**(-Np).
    """
    pico = model.tier(2)
    lam2, alpha, Np = pico.density, pico.pathloss_exp, pico.fading_order
    RL = model.los_radius
    rule, norm, gains = _beam_nodes(model)

    X = sigma_vec[:, None] * gains[None, :]
    r2 = r_vec[:, None] ** 2
    if alpha == 2.0:
        W = np.empty_like(X)
        pos = X > 0
        if np.any(pos):
            Xp = X[pos]
            r2b = np.broadcast_to(r2, X.shape)[pos]
            W[pos] = Xp * (F_y(Xp / RL**2, Np) - p2 * F_y(Xp / r2b, Np))
        if np.any(~pos):
            W[~pos] = p2 * np.broadcast_to(r2, X.shape)[~pos] - RL**2
    else:
        r_alpha = r_vec[:, None] ** alpha
        W = (
            p2 * hyp_S(0, alpha, Np, X / r_alpha) * r2
            + (1.0 - p2) * cap_delta(alpha, Np, X)
            - hyp_S(0, alpha, Np, X / RL**alpha) * RL**2
        )
    u1 = rule.order
    quad_term = (np.pi**2 * lam2 / (2.0 * u1)) * norm * (W @ rule.weights)
    return np.exp(-math.pi * lam2 * (RL**2 - p2 * r_vec**2) - quad_term)


def laplace_tier2(s: float, tau: float, r: float, f: int, n: int, model: NetworkModel) -> float:
    """Interference Laplace transform for a pico link serving file rank f.

    ``s`` is the (already distance-scaled) transform variable; ``n`` is the
    index of the Gamma-bound binomial expansion and multiplies ``s``.
    """
    pico = model.tier(2)
    if not 0 < r <= model.los_radius:
        raise ValueError(f"serving distance must lie in (0, {model.los_radius}], got {r}")
    if pico.pathloss_exp < 2:
        raise ValueError("pico path-loss exponent must be >= 2")
    if s < 0 or tau < 0:
        raise ValueError("transform variable and threshold must be nonnegative")
    if n < 1 or int(n) != n:
        raise ValueError("binomial index must be a positive integer")
    p2 = model.cache.probability(2, f)
    sigma = n * s * tau / pico.fading_order
    out = _laplace_from_scale(model, p2, np.array([float(r)]), np.array([sigma]))
    return float(out[0])


# --------------------------------------------------------------------------
# Tier-2 (pico) coverage and its density
# --------------------------------------------------------------------------

@lru_cache(maxsize=65536)
def _coverage_tier2_p(model: NetworkModel, p2: float, tau: float, include_noise: bool) -> float:
    if p2 == 0.0 or not math.isfinite(tau):
        return 0.0
    pico = model.tier(2)
    lam2, alpha, Np = pico.density, pico.pathloss_exp, pico.fading_order
    RL, G0 = model.los_radius, model.beam_peak_gain
    rule, norm = _rule(model.quad_orders[1])
    r = (rule.nodes + 1.0) * RL / 2.0
    pdf_r = 2.0 * math.pi * p2 * lam2 * r * np.exp(-math.pi * p2 * lam2 * r**2)
    eta = _eta(Np)
    s_vec = eta * r**alpha / G0
    if include_noise:
        noise_rate = pico.noise_power / (pico.tx_power * pico.intercept * pico.antennas * G0)
    terms = []
    for n_idx, coef in _binom_terms(Np):
        vals = _laplace_from_scale(model, p2, r, n_idx * s_vec * tau / Np) * pdf_r
        if include_noise:
            vals = vals * np.exp(-n_idx * eta * tau * noise_rate * r**alpha)
        terms.append(coef * (RL / 2.0) * norm * chebyshev_integrate(rule, vals))
    return min(max(math.fsum(terms), 0.0), 1.0)


def coverage_tier2(f: int, tau: float, model: NetworkModel, include_noise: bool = False) -> float:
    """P[pico SINR > tau] when the f-th file is served by the nearest pico
    BS caching it (zero if none falls inside the LOS ball)."""
    if not tau > 0:
        raise ValueError("SINR threshold must be positive")
    p2 = model.cache.probability(2, f)
    return _coverage_tier2_p(model, p2, float(tau), bool(include_noise))


@lru_cache(maxsize=65536)
def _coverage_tier2_pdf_p(model: NetworkModel, p2: float, tau: float) -> float:
    if p2 == 0.0 or not math.isfinite(tau):
        return 0.0
    pico = model.tier(2)
    lam2, alpha, Np = pico.density, pico.pathloss_exp, pico.fading_order
    RL, G0 = model.los_radius, model.beam_peak_gain
    rule3, norm3 = _rule(model.quad_orders[2])
    rule1, norm1, gains = _beam_nodes(model)
    u1 = rule1.order
    r = (rule3.nodes + 1.0) * RL / 2.0
    r_col = r[:, None]
    pdf_r = 2.0 * math.pi * p2 * lam2 * r * np.exp(-math.pi * p2 * lam2 * r**2)
    eta = _eta(Np)
    terms = []
    for n_idx, coef in _binom_terms(Np):
        Z = n_idx * eta * gains / (G0 * Np)  # beam-resolved threshold scale
        # floor keeps F_y/cap_lambda off their y=0 singularity when a beam
        # node lands exactly on a ULA null; the Z prefactor zeroes those
        # columns anyway
        zt = np.maximum(Z[None, :] * tau, 1e-300)
        if alpha == 2.0:
            # d/dtau of X_fn via H(y) = F_y(y) + y F_y'(y)
            y1 = zt * (r_col**2 / RL**2)
            H1 = F_y(y1, Np) + y1 * F_y_prime(y1, Np)
            H2 = F_y(zt, Np) + zt * F_y_prime(zt, Np)
            w = Z[None, :] * r_col**2 * (H1 - p2 * H2)
        else:
            # The caching thinning keeps probability p2 on the serving-
            # distance term; the LOS-ball edge term carries no thinning.
            S1_near = hyp_S(1, alpha, Np, zt)
            S1_edge = hyp_S(1, alpha, Np, zt * (r_col / RL) ** alpha)
            w = (2.0 * Np * Z[None, :] / (alpha - 2.0)) * (
                p2 * S1_near * r_col**2 - S1_edge * r_col**alpha / RL ** (alpha - 2.0)
            ) + (1.0 - p2) * Z[None, :] * cap_lambda(alpha, Np, zt) * r_col**2
        inner = (np.pi**2 * lam2 / (2.0 * u1)) * norm1 * (w @ rule1.weights)
        F_D = _laplace_from_scale(model, p2, r, n_idx * (eta * r**alpha / G0) * tau / Np) * pdf_r
        terms.append(coef * (RL / 2.0) * norm3 * chebyshev_integrate(rule3, F_D * inner))
    return max(math.fsum(terms), 0.0)


def coverage_tier2_pdf(f: int, tau: float, model: NetworkModel) -> float:
    """Density -d/dtau of the interference-limited pico coverage."""
    if not tau > 0:
        raise ValueError("SINR threshold must be positive")
    if model.tier(2).pathloss_exp < 2:
        raise ValueError("pico path-loss exponent must be >= 2")
    p2 = model.cache.probability(2, f)
    return _coverage_tier2_pdf_p(model, p2, float(tau))


# --------------------------------------------------------------------------
# Tier-1 (macro) coverage and its density
# --------------------------------------------------------------------------

def _macro_S0_delta(model: NetworkModel, tau: float):
    macro = model.tier(1)
    S0 = hyp_S(0, macro.pathloss_exp, macro.fading_order, tau)
    delta = cap_delta(macro.pathloss_exp, macro.fading_order, tau)
    return S0, delta


def _coverage_tier1_sir_p(model: NetworkModel, p1: float, tau: float) -> float:
    if p1 == 0.0 or not math.isfinite(tau):
        return 0.0
    S0, delta = _macro_S0_delta(model, tau)
    return p1 / (p1 * S0 + (1.0 - p1) * delta)


def _coverage_tier1_noisy_p(model: NetworkModel, p1: float, tau: float, closed: bool) -> float:
    if p1 == 0.0 or not math.isfinite(tau):
        return 0.0
    macro = model.tier(1)
    lam1 = macro.density
    B = tau * macro.noise_power / (
        macro.tx_power * macro.intercept * macro.antennas * model.beam_peak_gain
    )
    S0, delta = _macro_S0_delta(model, tau)
    C = math.pi * lam1 * (p1 * S0 + (1.0 - p1) * delta)
    if B == 0.0:
        return math.pi * p1 * lam1 / C
    if closed:
        # pi*p*lam/2 * sqrt(pi/B) * exp(C^2/4B) erfc(C/2 sqrt(B)), written
        # through erfcx so huge C^2/4B neither overflows nor underflows.
        return (math.pi * p1 * lam1 / 2.0) * math.sqrt(math.pi / B) * erfcx(C / (2.0 * math.sqrt(B)))
    half_alpha = macro.pathloss_exp / 2.0
    scale = 1.0 / C  # u ~ 1/C sets the integrand's decay length

    def h(t):
        u = scale * t / (1.0 - t)
        return math.exp(-B * u**half_alpha - C * u) * scale / (1.0 - t) ** 2

    integral = quad(h, 0.0, 1.0, **_QUAD_KW)[0]
    return math.pi * p1 * lam1 * integral


def coverage_tier1(f: int, tau: float, model: NetworkModel, variant: str = "sir") -> float:
    """P[macro SINR > tau] serving file rank f from the nearest caching
    macro BS.

    variant: "sir" (interference-limited closed form), "exact" (noise kept,
    numeric integral over the serving distance), or "closed_alpha4"
    (noise kept, closed form valid only for path-loss exponent 4).
    """
    if not tau > 0:
        raise ValueError("SINR threshold must be positive")
    p1 = model.cache.probability(1, f)
    if variant == "sir":
        return _coverage_tier1_sir_p(model, p1, float(tau))
    if variant == "exact":
        return _coverage_tier1_noisy_p(model, p1, float(tau), closed=False)
    if variant == "closed_alpha4":
        if model.tier(1).pathloss_exp != 4.0:
            raise ValueError("closed_alpha4 requires a macro path-loss exponent of 4")
        return _coverage_tier1_noisy_p(model, p1, float(tau), closed=True)
    raise ValueError(f"unknown variant {variant!r}")


def _coverage_tier1_pdf_p(model: NetworkModel, p1: float, tau: float) -> float:
    if p1 == 0.0 or not math.isfinite(tau):
        return 0.0
    macro = model.tier(1)
    alpha, Np = macro.pathloss_exp, macro.fading_order
    S0, delta = _macro_S0_delta(model, tau)
    S1 = hyp_S(1, alpha, Np, tau)
    lam = cap_lambda(alpha, Np, tau)
    denom = (alpha - 2.0) * (p1 * S0 + (1.0 - p1) * delta) ** 2
    num = 2.0 * Np * p1**2 * S1 + (alpha - 2.0) * (p1 - p1**2) * lam
    return num / denom


def coverage_tier1_pdf(f: int, tau: float, model: NetworkModel) -> float:
    """Density -d/dtau of the interference-limited macro coverage."""
    if not tau > 0:
        raise ValueError("SINR threshold must be positive")
    p1 = model.cache.probability(1, f)
    return _coverage_tier1_pdf_p(model, p1, float(tau))


# --------------------------------------------------------------------------
# Max-mean-power association: serving distance law and per-tier coverage
# --------------------------------------------------------------------------

def _power_ratio(model: NetworkModel, j: int, i: int) -> float:
    """Biased boresight EIRP ratio (b P C N)_j / (b P C N)_i."""
    tj, ti = model.tier(j), model.tier(i)
    num = tj.bias_power * tj.tx_power * tj.intercept * tj.antennas
    den = ti.bias_power * ti.tx_power * ti.intercept * ti.antennas
    return num / den


def _crossover_radius(model: NetworkModel) -> float:
    """Tier-1 distance past which even the LOS-ball edge cannot beat it."""
    a1 = model.tier(1).pathloss_exp
    a2 = model.tier(2).pathloss_exp
    return (_power_ratio(model, 1, 2) * model.los_radius**a2) ** (1.0 / a1)


def _maxrp_pdf_vals(tier: int, p1: float, p2: float, r_arr: np.ndarray, model: NetworkModel) -> np.ndarray:
    lam1, lam2 = model.tier(1).density, model.tier(2).density
    a1, a2 = model.tier(1).pathloss_exp, model.tier(2).pathloss_exp
    RL = model.los_radius
    if tier == 1:
        # The losing tier-2 exclusion radius is clipped at the ball edge.
        excl2 = _power_ratio(model, 2, 1) ** (1.0 / a2) * r_arr ** (a1 / a2)
        excl2 = np.minimum(excl2, RL)
        exponent = math.pi * (p1 * lam1 * r_arr**2 + p2 * lam2 * excl2**2)
        return 2.0 * math.pi * p1 * lam1 * r_arr * np.exp(-exponent)
    excl1 = _power_ratio(model, 1, 2) ** (1.0 / a1) * r_arr ** (a2 / a1)
    exponent = math.pi * (p2 * lam2 * r_arr**2 + p1 * lam1 * excl1**2)
    vals = 2.0 * math.pi * p2 * lam2 * r_arr * np.exp(-exponent)
    return np.where(r_arr <= RL, vals, 0.0)


def maxrp_distance_pdf(tier: int, f: int, r, model: NetworkModel):
    """Serving-distance density under the max biased-mean-power rule."""
    if tier not in (1, 2):
        raise ValueError(f"tier must be 1 or 2, got {tier!r}")
    p1 = model.cache.probability(1, f)
    p2 = model.cache.probability(2, f)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("distance must be nonnegative")
    out = _maxrp_pdf_vals(tier, p1, p2, np.atleast_1d(r_arr), model)
    return float(out[0]) if np.ndim(r) == 0 else out.reshape(r_arr.shape)


@lru_cache(maxsize=8192)
def _theta(model: NetworkModel, tier: int, p1: float, p2: float, tau: float) -> float:
    """Joint P[associate with tier and its SINR > tau], interference limited.

    tau = 0 yields the plain association probability.
    """
    if not math.isfinite(tau):
        return 0.0
    lam1, lam2 = model.tier(1).density, model.tier(2).density
    RL = model.los_radius
    if tier == 1:
        if p1 == 0.0:
            return 0.0
        if tau > 0.0:
            S0, delta = _macro_S0_delta(model, tau)
            D = math.pi * lam1 * (p1 * (S0 - 1.0) + (1.0 - p1) * delta)
        else:
            D = 0.0
        a = D + math.pi * p1 * lam1
        a2 = model.tier(2).pathloss_exp
        a1 = model.tier(1).pathloss_exp
        Rr = _crossover_radius(model)
        c2 = math.pi * p2 * lam2 * _power_ratio(model, 2, 1) ** (2.0 / a2)
        power = a1 / a2

        def head(u):  # u = r^2 on [0, Rr^2]
            return math.exp(-a * u - c2 * u**power)

        # Past 50/a the integrand is below e-50; capping keeps the adaptive
        # rule from starving when a degenerate bias pushes Rr out to infinity.
        u_hi = min(Rr**2, 50.0 / a)
        head_val = math.pi * p1 * lam1 * quad(head, 0.0, u_hi, **_QUAD_KW)[0]
        if Rr**2 > u_hi:
            tail_val = 0.0  # everything past the cap is below e-50
        else:
            tail_val = (math.pi * p1 * lam1 / a) * math.exp(
                -a * Rr**2 - math.pi * p2 * lam2 * RL**2
            )
        return min(head_val + tail_val, 1.0)

    if p2 == 0.0:
        return 0.0
    pico = model.tier(2)
    Np, alpha, G0 = pico.fading_order, pico.pathloss_exp, model.beam_peak_gain
    rule, norm = _rule(model.quad_orders[1])
    r = (rule.nodes + 1.0) * RL / 2.0
    pdf_r = _maxrp_pdf_vals(2, p1, p2, r, model)
    if tau <= 0.0:
        return min((RL / 2.0) * norm * chebyshev_integrate(rule, pdf_r), 1.0)
    eta = _eta(Np)
    s_vec = eta * r**alpha / G0
    terms = []
    for n_idx, coef in _binom_terms(Np):
        vals = _laplace_from_scale(model, p2, r, n_idx * s_vec * tau / Np) * pdf_r
        terms.append(coef * (RL / 2.0) * norm * chebyshev_integrate(rule, vals))
    return min(max(math.fsum(terms), 0.0), 1.0)


def maxrp_sinr_coverage(tier: int, f: int, tau: float, model: NetworkModel) -> float:
    """P[tier selected by max biased mean power and its SINR > tau]."""
    if tier not in (1, 2):
        raise ValueError(f"tier must be 1 or 2, got {tier!r}")
    if tau < 0:
        raise ValueError("SINR threshold must be nonnegative")
    p1 = model.cache.probability(1, f)
    p2 = model.cache.probability(2, f)
    return _theta(model, tier, p1, p2, float(tau))


# --------------------------------------------------------------------------
# Max-instantaneous-rate association
# --------------------------------------------------------------------------

def _rate_exponent(model: NetworkModel, i: int, j: int) -> float:
    ti, tj = model.tier(i), model.tier(j)
    return (ti.bias_rate * ti.bandwidth) / (tj.bias_rate * tj.bandwidth)


def _cross_threshold(tau: float, beta: float) -> float:
    """(1 + tau)**beta - 1, saturating to inf instead of overflowing."""
    log_term = beta * math.log1p(tau)
    if log_term > 700.0:
        return math.inf
    return math.expm1(log_term)


def _rate_to_threshold(rate: float, bandwidth: float) -> float:
    """2**(rate/bandwidth) - 1, saturating to inf instead of overflowing."""
    x = rate / bandwidth * math.log(2.0)
    if x > 700.0:
        return math.inf
    return math.expm1(x)


def _pdf_p(model: NetworkModel, tier: int, p1: float, p2: float, tau: float) -> float:
    if tier == 1:
        return _coverage_tier1_pdf_p(model, p1, tau)
    return _coverage_tier2_pdf_p(model, p2, tau)


def _cdf_other_p(model: NetworkModel, other: int, p1: float, p2: float, tau: float) -> float:
    if other == 1:
        return _coverage_tier1_sir_p(model, p1, tau)
    return _coverage_tier2_p(model, p2, tau, False)


def maxrate_coverage_pdf(tier: int, f: int, tau: float, model: NetworkModel) -> float:
    """Joint density of (tier wins the biased-rate comparison, SINR = tau)."""
    if tier not in (1, 2):
        raise ValueError(f"tier must be 1 or 2, got {tier!r}")
    if not tau > 0:
        raise ValueError("SINR threshold must be positive")
    p1 = model.cache.probability(1, f)
    p2 = model.cache.probability(2, f)
    other = 2 if tier == 1 else 1
    beta = _rate_exponent(model, tier, other)
    own = _pdf_p(model, tier, p1, p2, float(tau))
    lose = _cdf_other_p(model, other, p1, p2, _cross_threshold(float(tau), beta))
    return own * (1.0 - lose)


def _own_coverage(model: NetworkModel, tier: int, p1: float, p2: float, tau: float) -> float:
    if tier == 1:
        return _coverage_tier1_sir_p(model, p1, tau) if tau > 0 else (1.0 if p1 > 0 else 0.0)
    return _coverage_tier2_p(model, p2, tau, False) if tau > 0 else _coverage_tier2_p(model, p2, 0.0, False)


@lru_cache(maxsize=8192)
def _maxrate_correction(model: NetworkModel, tier: int, p1: float, p2: float, tau0: float) -> float:
    """integral_{tau0}^inf pdf_i(t) * P_j(cross(t)) dt  (the part of the own
    coverage tail lost to the other tier winning the rate comparison)."""
    other = 2 if tier == 1 else 1
    beta = _rate_exponent(model, tier, other)
    scale = max(1.0, tau0)  # the density past tau0 decays on the tau0 scale

    def integrand(t):
        tau = tau0 + scale * t / (1.0 - t)
        lose = _cdf_other_p(model, other, p1, p2, _cross_threshold(tau, beta))
        if lose == 0.0:
            return 0.0
        return _pdf_p(model, tier, p1, p2, tau) * lose * scale / (1.0 - t) ** 2

    # full_output silences the roundoff complaint on the fat-tailed map; the
    # survival cross-check in _maxrate_tail is the accuracy gate here
    return quad(integrand, 0.0, 1.0, full_output=1, **_QUAD_KW)[0]


@lru_cache(maxsize=8192)
def _maxrate_head(model: NetworkModel, tier: int, p1: float, p2: float, tau0: float) -> float:
    other = 2 if tier == 1 else 1
    beta = _rate_exponent(model, tier, other)

    def integrand(u):  # tau = e^u - 1 handles the decades below a huge tau0
        tau = math.expm1(u)
        if tau <= 0.0:
            return 0.0
        lose = _cdf_other_p(model, other, p1, p2, _cross_threshold(tau, beta))
        return _pdf_p(model, tier, p1, p2, tau) * (1.0 - lose) * (tau + 1.0)

    return quad(integrand, 0.0, math.log1p(tau0), full_output=1, **_QUAD_KW)[0]


def _maxrate_tail(model: NetworkModel, tier: int, p1: float, p2: float, tau0: float) -> float:
    """integral_{tau0}^inf of the rate-rule coverage density for one tier.

    Evaluated as own-coverage(tau0) minus the cross-tier correction, and
    cross-checked against total-minus-head; disagreement flags a quadrature
    breakdown rather than being silently returned.
    """
    own = _own_coverage(model, tier, p1, p2, tau0)
    if own <= 1e-12:  # the tail is bounded by own-coverage; nothing to refine
        return own
    tail = own - _maxrate_correction(model, tier, p1, p2, tau0)
    if tau0 > 0.0:
        total = _own_coverage(model, tier, p1, p2, 0.0) - _maxrate_correction(model, tier, p1, p2, 0.0)
        alt = total - _maxrate_head(model, tier, p1, p2, tau0)
        if abs(tail - alt) > _TAIL_CHECK_TOL:
            raise NumericalQualityError(
                f"rate-rule tail mismatch for tier {tier}: direct {tail:.9g} vs "
                f"survival {alt:.9g} at tau0={tau0:.6g}"
            )
    return min(max(tail, 0.0), 1.0)


# --------------------------------------------------------------------------
# Association probabilities, load, success probability, ASE
# --------------------------------------------------------------------------

def _placement_combos(model: NetworkModel):
    """Zipf mass of the cached head grouped by the (p1, p2) placement pair."""
    pmf = zipf_pmf(model.cache)
    combos: dict[tuple[float, float], float] = {}
    for f in range(1, model.cache.head + 1):
        key = (model.cache.placement[0][f - 1], model.cache.placement[1][f - 1])
        combos[key] = combos.get(key, 0.0) + float(pmf[f - 1])
    return combos


def association_probability(scheme: str, tier: int, model: NetworkModel) -> float:
    """Request-weighted probability of associating with the given tier."""
    scheme = normalize_scheme(scheme)
    if tier not in (1, 2):
        raise ValueError(f"tier must be 1 or 2, got {tier!r}")
    total = 0.0
    for (p1, p2), mass in _placement_combos(model).items():
        if scheme == MAXRP:
            total += mass * _theta(model, tier, p1, p2, 0.0)
        else:
            total += mass * _maxrate_tail(model, tier, p1, p2, 0.0)
    return total


def average_load(scheme: str, tier: int, model: NetworkModel) -> float:
    """Mean UE count served by a BS of the given tier (>= 1, the typical UE)."""
    assoc = association_probability(scheme, tier, model)
    return 1.0 + _LOAD_AREA_FACTOR * model.user_density * assoc / model.tier(tier).density


def server_success(rate_threshold: float, model: NetworkModel) -> float:
    """Success probability of the backhaul-relayed path for uncached files."""
    if not rate_threshold > 0:
        raise ValueError("rate threshold must be positive")
    cache = model.cache
    if model.backhaul < rate_threshold or cache.head >= cache.catalog:
        return 0.0
    macro = model.tier(1)
    tau = _rate_to_threshold(rate_threshold, macro.bandwidth)
    cov = _coverage_tier1_sir_p(model, 1.0, tau)
    tail_mass = float(np.sum(zipf_pmf(cache)[cache.head:]))
    return tail_mass * cov


def _mode_value(scheme: str, model: NetworkModel, tier: int, p1: float, p2: float, tau: float) -> float:
    if scheme == MAXRP:
        return _theta(model, tier, p1, p2, tau)
    return _maxrate_tail(model, tier, p1, p2, tau)


def success_probability(scheme: str, rate_threshold: float, model: NetworkModel) -> float:
    """P[delivered rate > threshold] averaged over the request distribution."""
    scheme = normalize_scheme(scheme)
    if not rate_threshold > 0:
        raise ValueError("rate threshold must be positive")
    total = server_success(rate_threshold, model)
    for (p1, p2), mass in _placement_combos(model).items():
        for tier in (1, 2):
            tau = _rate_to_threshold(rate_threshold, model.tier(tier).bandwidth)
            total += mass * _mode_value(scheme, model, tier, p1, p2, tau)
    return min(total, 1.0)


def area_spectral_efficiency(scheme: str, rate_threshold: float, model: NetworkModel) -> float:
    """Delivered rate per unit bandwidth and area (bps/Hz/m^2) at the given
    rate threshold."""
    scheme = normalize_scheme(scheme)
    if not rate_threshold > 0:
        raise ValueError("rate threshold must be positive")
    macro = model.tier(1)
    total = macro.density * rate_threshold / macro.bandwidth * server_success(rate_threshold, model)
    for (p1, p2), mass in _placement_combos(model).items():
        for tier, p_tier in ((1, p1), (2, p2)):
            if p_tier == 0.0:
                continue
            params = model.tier(tier)
            tau = _rate_to_threshold(rate_threshold, params.bandwidth)
            cov = _mode_value(scheme, model, tier, p1, p2, tau)
            total += mass * p_tier * params.density * rate_threshold / params.bandwidth * cov
    return total
