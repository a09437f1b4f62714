"""Coverage, delivery-success and area-spectral-efficiency evaluation for a
two-tier cellular network whose cache-equipped sub-6 GHz macro cells are
overlaid by mmWave pico cells: closed-form expressions plus a Monte Carlo
ground-truth engine, under max-power and max-rate user association."""

from .analytic import (
    MAXRATE,
    MAXRP,
    CoverageQuery,
    MetricCurve,
    NumericalQualityError,
    area_spectral_efficiency,
    association_probability,
    average_load,
    coverage_tier1,
    coverage_tier1_pdf,
    coverage_tier2,
    coverage_tier2_pdf,
    laplace_tier2,
    maxrate_coverage_pdf,
    maxrp_distance_pdf,
    maxrp_sinr_coverage,
    server_success,
    success_probability,
)
from .config import carrier_network, default_network, load_network
from .model import CacheModel, NetworkModel, TierParams
from .montecarlo import (
    DeliverySamples,
    DropRealization,
    Estimate,
    delivery_samples,
    estimate_curve,
    realize_caches,
    sample_drop,
    sample_ppp,
    simulate_metric,
)

__version__ = "0.1.0"

__all__ = [
    "MAXRP",
    "MAXRATE",
    "CoverageQuery",
    "MetricCurve",
    "NumericalQualityError",
    "TierParams",
    "CacheModel",
    "NetworkModel",
    "Estimate",
    "DropRealization",
    "DeliverySamples",
    "default_network",
    "carrier_network",
    "load_network",
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
    "sample_ppp",
    "realize_caches",
    "sample_drop",
    "delivery_samples",
    "simulate_metric",
    "estimate_curve",
    "__version__",
]
