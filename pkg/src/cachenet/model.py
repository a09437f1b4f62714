"""Domain model: per-tier radio constants, cache configuration, network-wide
constants, and the elementary physical-layer functions shared by the analytic
and Monte Carlo engines.

All types are frozen (hashable) after validation; every operation here is a
pure function except :func:`sample_fading`, which mutates only the rng passed
to it.  Unit conventions: SI linear units internally (watts, Hz, meters,
per-square-meter densities); dB/dBm only at file boundaries (see
``cachenet.config``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "SPEED_OF_LIGHT",
    "REFERENCE_DISK_AREA",
    "TierParams",
    "CacheModel",
    "NetworkModel",
    "db_to_linear",
    "linear_to_db",
    "dbm_to_watts",
    "watts_to_dbm",
    "freespace_intercept",
    "thermal_noise_watts",
    "zipf_probability",
    "zipf_pmf",
    "pathloss",
    "array_gain",
    "nearest_caching_pdf",
    "sample_fading",
]

SPEED_OF_LIGHT = 299_792_458.0

# Densities in configs are often quoted as "BS count per 250 m-radius disk";
# this is the area of that disk.
REFERENCE_DISK_AREA = math.pi * 250.0**2

_PLACEMENT_SUM_TOL = 1e-9


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watts_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w / 1e-3)


def freespace_intercept(carrier_hz: float) -> float:
    """Free-space power gain at the 1 m reference distance: (c / 4 pi f)^2."""
    if carrier_hz <= 0:
        raise ValueError("carrier frequency must be positive")
    return (SPEED_OF_LIGHT / (4.0 * math.pi * carrier_hz)) ** 2


def thermal_noise_watts(bandwidth_hz: float, noise_figure_db: float = 10.0) -> float:
    """Thermal noise power: -174 dBm/Hz + 10 log10(B) + noise figure."""
    dbm = -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    return dbm_to_watts(dbm)


@dataclass(frozen=True)
class TierParams:
    """Physical constants of one BS tier.

    density         BSs per square meter
    tx_power        transmit power, watts
    intercept       path gain at the 1 m reference distance (dimensionless)
    pathloss_exp    path-loss exponent (>= 2; the LOS tier may sit exactly at 2)
    antennas        ULA element count (1 = omnidirectional)
    fading_order    Nakagami shape of the power fading (1 = Rayleigh)
    bandwidth       Hz per resource block
    bias_power      association bias under the mean-power rule
    bias_rate       association bias under the instantaneous-rate rule
    noise_power     thermal noise power, watts
    """

    density: float
    tx_power: float
    intercept: float
    pathloss_exp: float
    antennas: int
    fading_order: int
    bandwidth: float
    bias_power: float = 1.0
    bias_rate: float = 1.0
    noise_power: float = 0.0

    def __post_init__(self):
        if self.density < 0:
            raise ValueError(f"density must be nonnegative, got {self.density}")
        if self.tx_power <= 0:
            raise ValueError(f"tx_power must be positive, got {self.tx_power}")
        if self.intercept <= 0:
            raise ValueError(f"intercept must be positive, got {self.intercept}")
        if self.pathloss_exp < 2:
            raise ValueError(f"pathloss_exp must be >= 2, got {self.pathloss_exp}")
        if self.antennas < 1 or int(self.antennas) != self.antennas:
            raise ValueError(f"antennas must be a positive integer, got {self.antennas}")
        if self.fading_order < 1 or int(self.fading_order) != self.fading_order:
            raise ValueError(f"fading_order must be a positive integer, got {self.fading_order}")
        if self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.bias_power <= 0 or self.bias_rate <= 0:
            raise ValueError("bias factors must be positive")
        if self.noise_power < 0:
            raise ValueError("noise_power must be nonnegative")
        if watts_to_dbm(self.tx_power) > 60.0:
            warnings.warn(
                f"tx_power {watts_to_dbm(self.tx_power):.0f} dBm is physically "
                "implausible for a BS; interference-limited results are unaffected",
                stacklevel=2,
            )


@dataclass(frozen=True)
class CacheModel:
    """Catalog, per-tier storage, popularity skew and placement probabilities.

    ``placement[i][f-1]`` is the probability that the f-th most popular file
    is cached at a tier-(i+1) BS; each tier's vector has length ``head`` and
    sums to that tier's storage.
    """

    catalog: int
    head: int
    storage: tuple[int, int]
    skew: float
    placement: tuple[tuple[float, ...], tuple[float, ...]]

    def __post_init__(self):
        if self.catalog < 1:
            raise ValueError("catalog must hold at least one file")
        if not max(self.storage) <= self.head <= self.catalog:
            raise ValueError(
                f"need max(storage) <= head <= catalog, got "
                f"storage={self.storage}, head={self.head}, catalog={self.catalog}"
            )
        if self.skew < 0:
            raise ValueError(f"skew must be nonnegative, got {self.skew}")
        if any(m < 0 or int(m) != m for m in self.storage):
            raise ValueError(f"storage sizes must be nonnegative integers, got {self.storage}")
        if len(self.placement) != 2:
            raise ValueError("placement needs one vector per tier")
        for vec, m in zip(self.placement, self.storage):
            if len(vec) != self.head:
                raise ValueError(f"placement vector length {len(vec)} != head {self.head}")
            if any(p < 0 or p > 1 for p in vec):
                raise ValueError("placement probabilities must lie in [0, 1]")
            if abs(sum(vec) - m) > _PLACEMENT_SUM_TOL:
                raise ValueError(
                    f"placement vector sums to {sum(vec)!r}, expected storage {m}"
                )

    @classmethod
    def most_popular(cls, catalog: int, head: int, storage: tuple[int, int], skew: float) -> "CacheModel":
        """Deterministic policy: every BS caches the top ``storage`` files."""
        placement = tuple(
            tuple(1.0 if f <= m else 0.0 for f in range(1, head + 1)) for m in storage
        )
        return cls(catalog, head, storage, skew, placement)

    @classmethod
    def uniform_head(cls, catalog: int, head: int, storage: tuple[int, int], skew: float) -> "CacheModel":
        """Uniform policy: every head file is cached w.p. storage/head."""
        placement = tuple(
            tuple(m / head for _ in range(head)) for m in storage
        )
        return cls(catalog, head, storage, skew, placement)

    def probability(self, tier: int, f: int) -> float:
        """Placement probability of file rank f at the given tier (1 or 2)."""
        if not 1 <= f <= self.head:
            raise ValueError(f"file rank {f} is outside the cached head 1..{self.head}")
        return self.placement[tier - 1][f - 1]


@dataclass(frozen=True)
class NetworkModel:
    """Complete two-tier network description.

    ``tiers[0]`` is the sub-6 GHz macro tier (Rayleigh, omnidirectional),
    ``tiers[1]`` the mmWave pico tier (Nakagami, ULA, LOS ball).
    """

    tiers: tuple[TierParams, TierParams]
    cache: CacheModel
    los_radius: float
    backhaul: float
    user_density: float
    antenna_spacing_ratio: float = 0.5
    quad_orders: tuple[int, int, int] = (64, 64, 64)
    beam_peak_gain: float = 1.0

    def __post_init__(self):
        if self.los_radius <= 0:
            raise ValueError("los_radius must be positive")
        if self.backhaul < 0:
            raise ValueError("backhaul must be nonnegative")
        if self.user_density < 0:
            raise ValueError("user_density must be nonnegative")
        if not 0 < self.antenna_spacing_ratio <= 1:
            raise ValueError("antenna_spacing_ratio must lie in (0, 1]")
        if self.beam_peak_gain <= 0:
            raise ValueError("beam_peak_gain must be positive")
        if len(self.quad_orders) != 3 or any(u < 1 for u in self.quad_orders):
            raise ValueError("quad_orders must be three positive integers")
        if self.tiers[0].fading_order != 1:
            raise ValueError("macro tier must be Rayleigh (fading_order == 1)")
        if not self.user_density > self.tiers[1].density > self.tiers[0].density:
            warnings.warn(
                "expected user density > pico density > macro density; "
                "load approximations assume all BSs are active",
                stacklevel=2,
            )

    def tier(self, index: int) -> TierParams:
        """1-based tier accessor (1 = macro, 2 = pico)."""
        if index not in (1, 2):
            raise ValueError(f"tier index must be 1 or 2, got {index!r}")
        return self.tiers[index - 1]

    def other_tier(self, index: int) -> int:
        return 2 if index == 1 else 1


@lru_cache(maxsize=128)
def _zipf_norm(catalog: int, skew: float) -> float:
    return float(np.sum(np.arange(1, catalog + 1, dtype=float) ** (-skew)))


def zipf_probability(f: int, cache: CacheModel) -> float:
    """Request probability of the f-th most popular file."""
    if not 1 <= f <= cache.catalog:
        raise ValueError(f"file rank {f} outside the catalog 1..{cache.catalog}")
    return f ** (-cache.skew) / _zipf_norm(cache.catalog, cache.skew)


def zipf_pmf(cache: CacheModel) -> np.ndarray:
    """Request probabilities of all catalog ranks, in rank order."""
    ranks = np.arange(1, cache.catalog + 1, dtype=float)
    pmf = ranks ** (-cache.skew)
    return pmf / pmf.sum()


def pathloss(tier: int, r, model: NetworkModel):
    """Distance power gain of a tier.  Tier 2 is zero outside the LOS ball."""
    params = model.tier(tier)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("pathloss is singular at r = 0; distances must be positive")
    gain = params.intercept * r_arr ** (-params.pathloss_exp)
    if tier == 2:
        gain = np.where(r_arr <= model.los_radius, gain, 0.0)
    return float(gain) if np.ndim(r) == 0 else gain


def array_gain(omega, antennas: int):
    """ULA power pattern sin^2(pi N w) / (N^2 sin^2(pi w)), periodic in w.

    Evaluated as (sinc(N w~) / sinc(w~))^2 with w~ wrapped to [-1/2, 1/2],
    which is exact and carries the w -> 0 limit of 1 without a 0/0.
    """
    if antennas < 1 or int(antennas) != antennas:
        raise ValueError(f"antennas must be a positive integer, got {antennas!r}")
    if antennas == 1:
        return 1.0 if np.ndim(omega) == 0 else np.ones_like(np.asarray(omega, dtype=float))
    w = np.asarray(omega, dtype=float)
    wrapped = w - np.round(w)
    out = (np.sinc(antennas * wrapped) / np.sinc(wrapped)) ** 2
    return float(out) if np.ndim(omega) == 0 else out


def nearest_caching_pdf(tier: int, f: int, r, model: NetworkModel):
    """Density of the distance to the nearest tier BS caching file f.

    The BSs holding rank f form an independent thinning of the tier process
    with density p*lambda, so the distance is Rayleigh:
    2 pi p lam r exp(-pi p lam r^2).
    """
    p = model.cache.probability(tier, f)  # raises for f > head
    lam = model.tier(tier).density
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("distance must be nonnegative")
    out = 2.0 * math.pi * p * lam * r_arr * np.exp(-math.pi * p * lam * r_arr**2)
    return float(out) if np.ndim(r) == 0 else out


def sample_fading(tier: int, model: NetworkModel, rng: np.random.Generator, size=None):
    """Draw unit-mean power fading: Exp(1) for tier 1, Gamma(Np, 1/Np) for tier 2."""
    order = model.tier(tier).fading_order
    if order == 1:
        return rng.exponential(1.0, size=size)
    return rng.gamma(shape=order, scale=1.0 / order, size=size)
