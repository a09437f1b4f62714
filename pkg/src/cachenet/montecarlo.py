"""Empirical ground-truth engine.

Samples network realizations drop by drop (typical UE at the origin) and
estimates coverage, delivery success, and area spectral efficiency for both
association rules.  Reproducibility contract: every drop draws from an rng
keyed by (seed, drop index), so results are bit-identical for a given
(seed, n_drops) regardless of evaluation order, and runs that differ only in
noise handling share their realizations (common random numbers).

Window sizes: macro BSs are sampled on a disk of radius
max(5 * los_radius, 8 / sqrt(pi * macro density)), past which their
interference is negligible at the supported path-loss exponents; pico BSs on
the LOS ball itself (plus a 2.5x annulus when NLOS interference is enabled).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .analytic import MAXRP, normalize_scheme
from .model import NetworkModel, array_gain, zipf_pmf

__all__ = [
    "Estimate",
    "DropRealization",
    "DeliverySamples",
    "sample_ppp",
    "realize_caches",
    "sample_drop",
    "coverage_sinr_samples",
    "delivery_samples",
    "simulate_metric",
    "estimate_curve",
]

_LOG = logging.getLogger(__name__)

_NLOS_EXPONENT = 4.0
_NLOS_FADING_ORDER = 2
_NLOS_WINDOW_FACTOR = 2.5
_MAX_RESAMPLE = 100


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo point estimate with a 95% confidence half-width."""

    mean: float
    half_width_95: float
    n_samples: int


def _binomial_estimate(hits: float, n: int) -> Estimate:
    p = hits / n
    return Estimate(float(p), 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / n), n)


def _mean_estimate(samples: np.ndarray) -> Estimate:
    n = len(samples)
    return Estimate(float(np.mean(samples)), 1.96 * float(np.std(samples)) / math.sqrt(n), n)


def sample_ppp(density: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Sample a homogeneous PPP on a disk; returns an (n, 2) position array."""
    if density < 0:
        raise ValueError("density must be nonnegative")
    if radius <= 0:
        raise ValueError("radius must be positive")
    n = rng.poisson(density * math.pi * radius**2)
    r = radius * np.sqrt(rng.uniform(size=n))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def _sample_annulus(density: float, r_in: float, r_out: float, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(density * math.pi * (r_out**2 - r_in**2))
    r = np.sqrt(rng.uniform(r_in**2, r_out**2, size=n))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def realize_caches(tier: int, n_bs: int, cache, rng: np.random.Generator) -> np.ndarray:
    """Draw cache contents for n_bs BSs of a tier; (n_bs, head) boolean mask.

    The cache memory is split into ``storage`` unit blocks laid out over the
    cumulative placement probabilities; one uniform decision value per BS
    picks the file covering position (block index + u), which caches each
    file with exactly its placement probability and fills every block with
    a distinct file.
    """
    placement = np.asarray(cache.placement[tier - 1], dtype=float)
    m = cache.storage[tier - 1]
    mask = np.zeros((n_bs, cache.head), dtype=bool)
    if m == 0 or n_bs == 0:
        return mask
    cum = np.cumsum(placement)
    u = rng.uniform(size=(n_bs, 1))
    positions = u + np.arange(m)[None, :]
    idx = np.searchsorted(cum, positions, side="right")
    idx = np.minimum(idx, cache.head - 1)
    mask[np.repeat(np.arange(n_bs), m), idx.ravel()] = True
    return mask


@dataclass
class DropRealization:
    """One sampled network snapshot around the typical UE at the origin."""

    bs_positions: tuple[np.ndarray, np.ndarray]
    cache_sets: tuple[np.ndarray, np.ndarray]
    beam_offsets: np.ndarray  # pico tier only; macro BSs are omnidirectional
    fading: tuple[np.ndarray, np.ndarray]
    requested_file: int
    pico_los: np.ndarray  # LOS flag per pico BS (all True without NLOS opt)


def _macro_window(model: NetworkModel) -> float:
    # 8x the mean nearest-BS scale: at exponent 4 the interference lost past
    # the window then biases coverage by well under half a percent.
    lam1 = model.tier(1).density
    base = 5.0 * model.los_radius
    if lam1 > 0:
        base = max(base, 8.0 / math.sqrt(math.pi * lam1))
    return base


def _draw_file(model: NetworkModel, rng: np.random.Generator) -> int:
    cdf = np.cumsum(zipf_pmf(model.cache))
    return int(np.searchsorted(cdf, rng.uniform(), side="right")) + 1


def _sample_pico_side(model: NetworkModel, rng: np.random.Generator, include_nlos: bool):
    """Pico positions/caches/offsets/fades; in-ball part first so that runs
    with and without NLOS share the in-ball realization."""
    pico = model.tier(2)
    xy = sample_ppp(pico.density, model.los_radius, rng)
    caches = realize_caches(2, len(xy), model.cache, rng)
    offsets = rng.uniform(-model.antenna_spacing_ratio, model.antenna_spacing_ratio, size=len(xy))
    fades = rng.gamma(pico.fading_order, 1.0 / pico.fading_order, size=len(xy))
    los = np.ones(len(xy), dtype=bool)
    if include_nlos:
        xy_out = _sample_annulus(
            pico.density, model.los_radius, _NLOS_WINDOW_FACTOR * model.los_radius, rng
        )
        n_out = len(xy_out)
        off_out = rng.uniform(-model.antenna_spacing_ratio, model.antenna_spacing_ratio, size=n_out)
        fade_out = rng.gamma(_NLOS_FADING_ORDER, 1.0 / _NLOS_FADING_ORDER, size=n_out)
        xy = np.vstack((xy, xy_out))
        caches = np.vstack((caches, np.zeros((n_out, model.cache.head), dtype=bool)))
        offsets = np.concatenate((offsets, off_out))
        fades = np.concatenate((fades, fade_out))
        los = np.concatenate((los, np.zeros(n_out, dtype=bool)))
    return xy, caches, offsets, fades, los


def sample_drop(
    model: NetworkModel,
    rng: np.random.Generator,
    *,
    include_nlos: bool = False,
    file_rank: int | None = None,
) -> DropRealization:
    """Sample one full two-tier drop (used by the delivery estimators)."""
    if file_rank is None:
        f = _draw_file(model, rng)
    else:
        if not 1 <= file_rank <= model.cache.catalog:
            raise ValueError(f"file rank {file_rank} outside catalog")
        f = int(file_rank)
    macro = model.tier(1)
    window = _macro_window(model)
    for attempt in range(_MAX_RESAMPLE):
        macro_xy = sample_ppp(macro.density, window, rng)
        if len(macro_xy) > 0 or macro.density == 0:
            break
        _LOG.warning("empty macro tier on attempt %d; resampling drop", attempt + 1)
    macro_cache = realize_caches(1, len(macro_xy), model.cache, rng)
    macro_fades = rng.exponential(1.0, size=len(macro_xy))
    pico_xy, pico_cache, offsets, pico_fades, los = _sample_pico_side(model, rng, include_nlos)
    return DropRealization(
        bs_positions=(macro_xy, pico_xy),
        cache_sets=(macro_cache, pico_cache),
        beam_offsets=offsets,
        fading=(macro_fades, pico_fades),
        requested_file=f,
        pico_los=los,
    )


def _macro_link(model: NetworkModel, drop: DropRealization, candidate_mask: np.ndarray, include_noise: bool):
    """(sinr, serving distance) for the nearest macro BS in candidate_mask."""
    macro = model.tier(1)
    xy = drop.bs_positions[0]
    if len(xy) == 0 or not np.any(candidate_mask):
        return 0.0, math.inf
    dist = np.hypot(xy[:, 0], xy[:, 1])
    coef = macro.tx_power * macro.intercept * macro.antennas
    powers = coef * drop.fading[0] * dist ** (-macro.pathloss_exp)
    cand_dist = np.where(candidate_mask, dist, np.inf)
    ci = int(np.argmin(cand_dist))
    desired = coef * model.beam_peak_gain * drop.fading[0][ci] * dist[ci] ** (-macro.pathloss_exp)
    interference = float(np.sum(powers)) - float(powers[ci])
    noise = macro.noise_power if include_noise else 0.0
    denom = noise + interference
    return (desired / denom if denom > 0 else math.inf), float(dist[ci])


def _pico_link(model: NetworkModel, drop: DropRealization, file_rank: int, include_noise: bool):
    """(sinr, serving distance) for the nearest in-ball pico caching the file."""
    pico = model.tier(2)
    xy = drop.bs_positions[1]
    if len(xy) == 0:
        return 0.0, math.inf
    dist = np.hypot(xy[:, 0], xy[:, 1])
    gains = array_gain(drop.beam_offsets, pico.antennas)
    coef = pico.tx_power * pico.intercept * pico.antennas
    exponent = np.where(drop.pico_los, pico.pathloss_exp, _NLOS_EXPONENT)
    powers = coef * gains * drop.fading[1] * dist ** (-exponent)
    candidate_mask = drop.pico_los & drop.cache_sets[1][:, file_rank - 1]
    if not np.any(candidate_mask):
        return 0.0, math.inf
    cand_dist = np.where(candidate_mask, dist, np.inf)
    ci = int(np.argmin(cand_dist))
    desired = (
        coef * model.beam_peak_gain * drop.fading[1][ci] * dist[ci] ** (-pico.pathloss_exp)
    )
    interference = float(np.sum(powers)) - float(powers[ci])
    noise = pico.noise_power if include_noise else 0.0
    denom = noise + interference
    return (desired / denom if denom > 0 else math.inf), float(dist[ci])


def coverage_sinr_samples(
    model: NetworkModel,
    tier: int,
    file_rank: int,
    n_drops: int,
    seed: int,
    *,
    include_noise: bool = False,
    include_nlos: bool = False,
) -> np.ndarray:
    """Per-drop SINR of one tier's nearest caching BS (0 when none exists).

    Only the requested tier is sampled; the other tier neither interferes
    (disjoint carriers) nor affects this conditional coverage law.
    """
    if tier not in (1, 2):
        raise ValueError(f"tier must be 1 or 2, got {tier!r}")
    if not 1 <= file_rank <= model.cache.head:
        raise ValueError(f"file rank {file_rank} is not cached (head={model.cache.head})")
    out = np.empty(n_drops)
    macro, window = model.tier(1), _macro_window(model)
    for i in range(n_drops):
        rng = np.random.default_rng((seed, i))
        if tier == 1:
            xy = sample_ppp(macro.density, window, rng)
            caches = realize_caches(1, len(xy), model.cache, rng)
            fades = rng.exponential(1.0, size=len(xy))
            drop = DropRealization(
                (xy, np.empty((0, 2))),
                (caches, np.empty((0, model.cache.head), dtype=bool)),
                np.empty(0),
                (fades, np.empty(0)),
                file_rank,
                np.empty(0, dtype=bool),
            )
            sinr, _ = _macro_link(model, drop, caches[:, file_rank - 1], include_noise)
        else:
            xy, caches, offsets, fades, los = _sample_pico_side(model, rng, include_nlos)
            drop = DropRealization(
                (np.empty((0, 2)), xy),
                (np.empty((0, model.cache.head), dtype=bool), caches),
                offsets,
                (np.empty(0), fades),
                file_rank,
                los,
            )
            sinr, _ = _pico_link(model, drop, file_rank, include_noise)
        out[i] = sinr
    return out


@dataclass
class DeliverySamples:
    """Per-drop delivery outcomes for both association rules.

    ``tier_*`` is 0 when no BS could serve the request; rates are the
    unbiased B * log2(1 + SINR) of the selected link (0 bits/s when none).
    Server-mode drops carry the macro wireless rate; the backhaul cap is
    applied when thresholds are evaluated.
    """

    file_rank: np.ndarray
    server: np.ndarray
    server_rate: np.ndarray
    tier_maxrp: np.ndarray
    rate_maxrp: np.ndarray
    dist_maxrp: np.ndarray
    tier_maxrate: np.ndarray
    rate_maxrate: np.ndarray
    n_drops: int
    seed: int


def delivery_samples(
    model: NetworkModel,
    n_drops: int,
    seed: int,
    *,
    include_noise: bool = False,
    include_nlos: bool = False,
    force_file_rank: int | None = None,
) -> DeliverySamples:
    """Simulate content delivery for n_drops independent requests."""
    f_arr = np.zeros(n_drops, dtype=int)
    server = np.zeros(n_drops, dtype=bool)
    server_rate = np.zeros(n_drops)
    tier_rp = np.zeros(n_drops, dtype=int)
    rate_rp = np.zeros(n_drops)
    dist_rp = np.full(n_drops, np.inf)
    tier_mr = np.zeros(n_drops, dtype=int)
    rate_mr = np.zeros(n_drops)
    macro, pico = model.tier(1), model.tier(2)
    for i in range(n_drops):
        rng = np.random.default_rng((seed, i))
        drop = sample_drop(model, rng, include_nlos=include_nlos, file_rank=force_file_rank)
        f = drop.requested_file
        f_arr[i] = f
        if f > model.cache.head:
            server[i] = True
            any_macro = np.ones(len(drop.bs_positions[0]), dtype=bool)
            sinr, _ = _macro_link(model, drop, any_macro, include_noise)
            server_rate[i] = macro.bandwidth * math.log2(1.0 + sinr)
            continue
        sinr1, d1 = _macro_link(model, drop, drop.cache_sets[0][:, f - 1], include_noise)
        sinr2, d2 = _pico_link(model, drop, f, include_noise)
        # Mean-power rule: biased boresight EIRP over distance, no fading.
        pw1 = (
            macro.bias_power * macro.tx_power * macro.intercept * macro.antennas
            * model.beam_peak_gain * d1 ** (-macro.pathloss_exp)
            if math.isfinite(d1)
            else 0.0
        )
        pw2 = (
            pico.bias_power * pico.tx_power * pico.intercept * pico.antennas
            * model.beam_peak_gain * d2 ** (-pico.pathloss_exp)
            if math.isfinite(d2)
            else 0.0
        )
        if pw1 == 0.0 and pw2 == 0.0:
            tier_rp[i] = 0
        elif pw1 >= pw2:  # ties go to tier 1
            tier_rp[i], rate_rp[i] = 1, macro.bandwidth * math.log2(1.0 + sinr1)
            dist_rp[i] = d1
        else:
            tier_rp[i], rate_rp[i] = 2, pico.bandwidth * math.log2(1.0 + sinr2)
            dist_rp[i] = d2
        # Instantaneous-rate rule: biased Shannon rates of the candidates.
        br1 = macro.bias_rate * macro.bandwidth * math.log2(1.0 + sinr1)
        br2 = pico.bias_rate * pico.bandwidth * math.log2(1.0 + sinr2)
        if br1 == 0.0 and br2 == 0.0:
            tier_mr[i] = 0
        elif br1 >= br2:
            tier_mr[i], rate_mr[i] = 1, macro.bandwidth * math.log2(1.0 + sinr1)
        else:
            tier_mr[i], rate_mr[i] = 2, pico.bandwidth * math.log2(1.0 + sinr2)
    return DeliverySamples(
        f_arr, server, server_rate, tier_rp, rate_rp, dist_rp, tier_mr, rate_mr, n_drops, seed
    )


def _success_mask(samples: DeliverySamples, scheme: str, rate_threshold: float, model: NetworkModel) -> np.ndarray:
    rate = samples.rate_maxrp if normalize_scheme(scheme) == MAXRP else samples.rate_maxrate
    ok = rate > rate_threshold
    server_ok = (
        samples.server
        & (model.backhaul >= rate_threshold)
        & (samples.server_rate > rate_threshold)
    )
    return np.where(samples.server, server_ok, ok)


def _ase_contributions(samples: DeliverySamples, scheme: str, rate_threshold: float, model: NetworkModel) -> np.ndarray:
    is_rp = normalize_scheme(scheme) == MAXRP
    tier = samples.tier_maxrp if is_rp else samples.tier_maxrate
    rate = samples.rate_maxrp if is_rp else samples.rate_maxrate
    out = np.zeros(samples.n_drops)
    placement = tuple(np.asarray(v) for v in model.cache.placement)
    for t in (1, 2):
        params = model.tier(t)
        sel = (~samples.server) & (tier == t) & (rate > rate_threshold)
        if np.any(sel):
            p_f = placement[t - 1][samples.file_rank[sel] - 1]
            out[sel] = p_f * params.density * rate_threshold / params.bandwidth
    macro = model.tier(1)
    server_ok = (
        samples.server
        & (model.backhaul >= rate_threshold)
        & (samples.server_rate > rate_threshold)
    )
    out[server_ok] = macro.density * rate_threshold / macro.bandwidth
    return out


def simulate_metric(
    metric: str,
    scheme: str,
    point: float,
    model: NetworkModel,
    n_drops: int,
    seed: int,
    *,
    tier: int = 2,
    file_rank: int = 1,
    include_noise: bool = False,
    include_nlos: bool = False,
    force_file_rank: int | None = None,
) -> Estimate:
    """Estimate one metric at one axis point.

    metric "coverage": point is a linear SINR threshold (tier/file_rank
    select the link).  "success"/"ase": point is a rate threshold in bits/s.
    """
    curves = estimate_curve(
        metric,
        scheme,
        [point],
        model,
        n_drops,
        seed,
        tier=tier,
        file_rank=file_rank,
        include_noise=include_noise,
        include_nlos=include_nlos,
        force_file_rank=force_file_rank,
    )
    return curves[0]


def estimate_curve(
    metric: str,
    scheme: str,
    points,
    model: NetworkModel,
    n_drops: int,
    seed: int,
    *,
    tier: int = 2,
    file_rank: int = 1,
    include_noise: bool = False,
    include_nlos: bool = False,
    force_file_rank: int | None = None,
) -> list[Estimate]:
    """Estimate a metric along an axis, reusing one set of drops."""
    if n_drops < 1:
        raise ValueError("n_drops must be >= 1")
    if metric == "coverage":
        sinr = coverage_sinr_samples(
            model, tier, file_rank, n_drops, seed,
            include_noise=include_noise, include_nlos=include_nlos,
        )
        return [_binomial_estimate(float(np.sum(sinr > tau)), n_drops) for tau in points]
    samples = delivery_samples(
        model, n_drops, seed,
        include_noise=include_noise, include_nlos=include_nlos,
        force_file_rank=force_file_rank,
    )
    if metric == "success":
        return [
            _binomial_estimate(float(np.sum(_success_mask(samples, scheme, r, model))), n_drops)
            for r in points
        ]
    if metric == "ase":
        return [_mean_estimate(_ase_contributions(samples, scheme, r, model)) for r in points]
    raise ValueError(f"unknown metric {metric!r}")
