"""Configuration file handling and bundled parameter sets.

The on-disk format is JSON with powers in dBm, rates in bits/s, and
densities either absolute (``*_per_m2``) or as BS counts per 250 m-radius
disk (``*_rel250``).  Everything is converted to linear SI units on load.
See README for the full key schema.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .model import (
    REFERENCE_DISK_AREA,
    CacheModel,
    NetworkModel,
    TierParams,
    dbm_to_watts,
    freespace_intercept,
    thermal_noise_watts,
)

__all__ = [
    "CARRIER_PRESETS",
    "default_network",
    "carrier_network",
    "load_network",
    "network_from_dict",
]


class ConfigError(ValueError):
    """A configuration file failed validation."""


# Measured LOS path-loss exponents and typical ULA sizes per mmWave carrier.
CARRIER_PRESETS: dict[float, tuple[float, int]] = {
    28e9: (2.0, 10),
    38e9: (2.0, 20),
    60e9: (2.25, 40),
    73e9: (2.0, 80),
}

_DEFAULT_NOISE_FIGURE_DB = 10.0


def default_network(
    *,
    lambda1_rel250: float = 1.0,
    lambda2_rel250: float = 20.0,
    lambda_u_rel250: float = 30.0,
    los_radius: float = 200.0,
    bandwidth1: float = 20e6,
    bandwidth2: float = 1e9,
    alpha1: float = 4.0,
    alpha2: float = 2.0,
    fading1: int = 1,
    fading2: int = 3,
    antennas1: int = 1,
    antennas2: int = 20,
    carrier1: float = 2e9,
    carrier2: float = 28e9,
    power1_dbm: float = 80.0,
    power2_dbm: float = 30.0,
    backhaul: float = 50e6,
    storage: tuple[int, int] = (80, 80),
    head: int = 90,
    catalog: int = 100,
    skew: float = 0.6,
    bias_power: tuple[float, float] = (1.0, 1.0),
    bias_rate: tuple[float, float] = (1.0, 1.0),
    placement_policy: str = "most_popular",
    quad_orders: tuple[int, int, int] = (64, 64, 64),
    include_noise_default: bool = True,
) -> NetworkModel:
    """Baseline urban two-tier configuration used by the bundled presets.

    Every keyword can be overridden; intercepts default to the free-space
    gain at 1 m for each tier's carrier and noise to thermal + 10 dB figure.
    """
    macro = TierParams(
        density=lambda1_rel250 / REFERENCE_DISK_AREA,
        tx_power=dbm_to_watts(power1_dbm),
        intercept=freespace_intercept(carrier1),
        pathloss_exp=alpha1,
        antennas=antennas1,
        fading_order=fading1,
        bandwidth=bandwidth1,
        bias_power=bias_power[0],
        bias_rate=bias_rate[0],
        noise_power=thermal_noise_watts(bandwidth1, _DEFAULT_NOISE_FIGURE_DB),
    )
    pico = TierParams(
        density=lambda2_rel250 / REFERENCE_DISK_AREA,
        tx_power=dbm_to_watts(power2_dbm),
        intercept=freespace_intercept(carrier2),
        pathloss_exp=alpha2,
        antennas=antennas2,
        fading_order=fading2,
        bandwidth=bandwidth2,
        bias_power=bias_power[1],
        bias_rate=bias_rate[1],
        noise_power=thermal_noise_watts(bandwidth2, _DEFAULT_NOISE_FIGURE_DB),
    )
    if placement_policy == "most_popular":
        cache = CacheModel.most_popular(catalog, head, storage, skew)
    elif placement_policy == "uniform":
        cache = CacheModel.uniform_head(catalog, head, storage, skew)
    else:
        raise ConfigError(f"unknown placement policy {placement_policy!r}")
    return NetworkModel(
        tiers=(macro, pico),
        cache=cache,
        los_radius=los_radius,
        backhaul=backhaul,
        user_density=lambda_u_rel250 / REFERENCE_DISK_AREA,
        quad_orders=quad_orders,
    )


def carrier_network(carrier_hz: float, **overrides) -> NetworkModel:
    """Baseline network retuned to one of the known mmWave carriers."""
    if carrier_hz not in CARRIER_PRESETS:
        raise ConfigError(
            f"no preset for carrier {carrier_hz/1e9:g} GHz; "
            f"known: {sorted(c/1e9 for c in CARRIER_PRESETS)} GHz"
        )
    alpha2, antennas2 = CARRIER_PRESETS[carrier_hz]
    # Under-resolved ULA lobes degrade the beam-average quadrature; scale
    # the omega order with the element count.
    u1 = max(64, 4 * antennas2)
    defaults = dict(
        carrier2=carrier_hz,
        alpha2=alpha2,
        antennas2=antennas2,
        quad_orders=(u1, 64, 64),
    )
    defaults.update(overrides)
    return default_network(**defaults)


def _density_per_m2(section: dict, prefix: str, required: bool = True) -> float:
    abs_key, rel_key = f"{prefix}_per_m2", f"{prefix}_rel250"
    if abs_key in section and rel_key in section:
        raise ConfigError(f"give either {abs_key} or {rel_key}, not both")
    if abs_key in section:
        return float(section[abs_key])
    if rel_key in section:
        return float(section[rel_key]) / REFERENCE_DISK_AREA
    if required:
        raise ConfigError(f"missing density key {abs_key} or {rel_key}")
    return 0.0


def _tier_from_dict(section: dict, name: str) -> TierParams:
    try:
        bandwidth = float(section["bandwidth_hz"])
        if "intercept" in section:
            intercept = float(section["intercept"])
        else:
            intercept = freespace_intercept(float(section["carrier_hz"]))
        if "noise_dbm" in section:
            noise = dbm_to_watts(float(section["noise_dbm"]))
        else:
            noise = thermal_noise_watts(bandwidth, _DEFAULT_NOISE_FIGURE_DB)
        return TierParams(
            density=_density_per_m2(section, "density"),
            tx_power=dbm_to_watts(float(section["tx_power_dbm"])),
            intercept=intercept,
            pathloss_exp=float(section["pathloss_exp"]),
            antennas=int(section.get("antennas", 1)),
            fading_order=int(section.get("fading_order", 1)),
            bandwidth=bandwidth,
            bias_power=float(section.get("bias_power", 1.0)),
            bias_rate=float(section.get("bias_rate", 1.0)),
            noise_power=noise,
        )
    except KeyError as exc:
        raise ConfigError(f"{name} section is missing key {exc}") from None


def _cache_from_dict(section: dict) -> CacheModel:
    try:
        catalog = int(section["catalog"])
        head = int(section["head"])
        storage = tuple(int(m) for m in section["storage"])
        skew = float(section["skew"])
    except KeyError as exc:
        raise ConfigError(f"cache section is missing key {exc}") from None
    if "placement" in section:
        placement = tuple(tuple(float(p) for p in vec) for vec in section["placement"])
        return CacheModel(catalog, head, storage, skew, placement)
    policy = section.get("placement_policy", "most_popular")
    if policy == "most_popular":
        return CacheModel.most_popular(catalog, head, storage, skew)
    if policy == "uniform":
        return CacheModel.uniform_head(catalog, head, storage, skew)
    raise ConfigError(f"unknown placement policy {policy!r}")


def network_from_dict(doc: dict[str, Any]) -> NetworkModel:
    """Build and validate a NetworkModel from a parsed configuration dict."""
    for key in ("network", "macro", "pico", "cache"):
        if key not in doc:
            raise ConfigError(f"configuration is missing the {key!r} section")
    net = doc["network"]
    try:
        model = NetworkModel(
            tiers=(_tier_from_dict(doc["macro"], "macro"), _tier_from_dict(doc["pico"], "pico")),
            cache=_cache_from_dict(doc["cache"]),
            los_radius=float(net["los_radius_m"]),
            backhaul=float(net["backhaul_bps"]),
            user_density=_density_per_m2(net, "user_density"),
            antenna_spacing_ratio=float(net.get("antenna_spacing_ratio", 0.5)),
            quad_orders=tuple(int(u) for u in net.get("quad_orders", (64, 64, 64))),
            beam_peak_gain=float(net.get("beam_peak_gain", 1.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"network section is missing key {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return model


def load_network(path: str | Path) -> NetworkModel:
    """Load a NetworkModel from a JSON configuration file."""
    doc = json.loads(Path(path).read_text())
    return network_from_dict(doc)


def load_document(path: str | Path) -> dict:
    """Load a raw configuration document (network + optional experiment)."""
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    return doc
