"""Sweep runner: presets, custom experiments, CSV emission, figure rendering.

Axis units at the file/CLI boundary: SINR thresholds in dB, rate thresholds
in bits/s, pico density in BSs per 250 m-radius disk, antenna/storage counts
as integers, carriers in GHz.  Everything is converted to linear SI units
before touching the engines.

Every curve is written as one CSV with the fixed header
``axis,value_analytic,value_mc,mc_half_width,n_drops,seed``; empty cells mark
a disabled engine.  Values are serialized with ``repr`` so that re-parsing a
file reproduces the in-memory table exactly and reruns with the same seed are
byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytic, montecarlo
from .config import CARRIER_PRESETS, ConfigError, carrier_network, default_network, network_from_dict
from .model import REFERENCE_DISK_AREA, CacheModel, NetworkModel, db_to_linear

__all__ = [
    "ExperimentSpec",
    "CurveResult",
    "PRESET_NAMES",
    "build_preset",
    "run_experiment",
    "run_preset",
    "write_curve_csv",
    "read_curve_csv",
]

_AXES = ("tau_db", "rate_threshold", "lambda2", "M2", "N2", "carrier")
_METRICS = ("coverage", "success", "ase")
_ENGINES = ("analytic", "mc")

_DEFAULT_DROPS = {"coverage": 100_000, "success": 10_000, "ase": 10_000}


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: a metric evaluated along an axis by one or both engines."""

    metric: str
    axis: str
    values: tuple
    scheme: str | None = None
    engines: tuple[str, ...] = ("analytic",)
    n_drops: int = 10_000
    seed: int | None = None
    output: str = "experiment.csv"
    figure: bool = True
    tier: int = 2
    file_rank: int = 1
    at_tau_db: float | None = None
    at_rate_threshold: float | None = None
    include_noise: bool = False
    include_nlos: bool = False

    def __post_init__(self):
        if self.metric not in _METRICS:
            raise ConfigError(f"metric must be one of {_METRICS}, got {self.metric!r}")
        if self.axis not in _AXES:
            raise ConfigError(f"axis must be one of {_AXES}, got {self.axis!r}")
        if len(self.values) == 0:
            raise ConfigError("axis values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("axis values must be strictly increasing")
        if not set(self.engines) <= set(_ENGINES) or not self.engines:
            raise ConfigError(f"engines must be a non-empty subset of {_ENGINES}")
        if "mc" in self.engines and self.seed is None:
            raise ConfigError("Monte Carlo runs need an explicit seed")
        if self.metric in ("success", "ase") and self.scheme is None:
            raise ConfigError(f"metric {self.metric!r} needs an association scheme")
        if self.metric == "coverage" and self.axis == "rate_threshold":
            raise ConfigError("coverage sweeps use a tau_db axis")
        if self.metric in ("success", "ase") and self.axis == "tau_db":
            raise ConfigError("rate metrics use a rate_threshold axis")
        if self.axis in ("lambda2", "M2", "N2", "carrier"):
            if self.metric == "coverage" and self.at_tau_db is None:
                raise ConfigError("parameter sweeps of coverage need at_tau_db")
            if self.metric != "coverage" and self.at_rate_threshold is None:
                raise ConfigError("parameter sweeps of rate metrics need at_rate_threshold")


@dataclass
class CurveResult:
    """One evaluated curve plus everything needed to serialize it."""

    name: str
    axis: tuple
    analytic_values: tuple | None
    mc_values: tuple | None
    mc_half_widths: tuple | None
    n_drops: int | None
    seed: int | None


def _cache_with_storage2(cache: CacheModel, m2: int) -> CacheModel:
    """Rebuild the cache with a new pico storage, preserving the policy."""
    storage = (cache.storage[0], int(m2))
    most_popular = CacheModel.most_popular(cache.catalog, cache.head, cache.storage, cache.skew)
    uniform = CacheModel.uniform_head(cache.catalog, cache.head, cache.storage, cache.skew)
    if cache.placement == most_popular.placement:
        return CacheModel.most_popular(cache.catalog, cache.head, storage, cache.skew)
    if cache.placement == uniform.placement:
        return CacheModel.uniform_head(cache.catalog, cache.head, storage, cache.skew)
    raise ConfigError("M2 sweeps need a named placement policy, not an explicit vector")


def _model_variant(model: NetworkModel, axis: str, value: float) -> NetworkModel:
    if axis in ("tau_db", "rate_threshold"):
        return model
    pico = model.tier(2)
    if axis == "lambda2":
        pico = dataclasses.replace(pico, density=value / REFERENCE_DISK_AREA)
        return dataclasses.replace(model, tiers=(model.tiers[0], pico))
    if axis == "N2":
        pico = dataclasses.replace(pico, antennas=int(value))
        u1 = max(model.quad_orders[0], 4 * int(value))
        return dataclasses.replace(
            model, tiers=(model.tiers[0], pico), quad_orders=(u1,) + model.quad_orders[1:]
        )
    if axis == "M2":
        return dataclasses.replace(model, cache=_cache_with_storage2(model.cache, int(value)))
    if axis == "carrier":
        hz = value * 1e9
        if hz not in CARRIER_PRESETS:
            raise ConfigError(f"carrier axis values must be in GHz from {sorted(c/1e9 for c in CARRIER_PRESETS)}")
        alpha2, antennas2 = CARRIER_PRESETS[hz]
        from .model import freespace_intercept

        pico = dataclasses.replace(
            pico, intercept=freespace_intercept(hz), pathloss_exp=alpha2, antennas=antennas2
        )
        u1 = max(model.quad_orders[0], 4 * antennas2)
        return dataclasses.replace(
            model, tiers=(model.tiers[0], pico), quad_orders=(u1,) + model.quad_orders[1:]
        )
    raise ConfigError(f"unknown axis {axis!r}")


def _analytic_point(spec: ExperimentSpec, model: NetworkModel, value: float) -> float:
    if spec.metric == "coverage":
        tau_db = value if spec.axis == "tau_db" else spec.at_tau_db
        tau = db_to_linear(tau_db)
        if spec.tier == 2:
            return analytic.coverage_tier2(spec.file_rank, tau, model, include_noise=spec.include_noise)
        variant = "exact" if spec.include_noise else "sir"
        return analytic.coverage_tier1(spec.file_rank, tau, model, variant=variant)
    rate = value if spec.axis == "rate_threshold" else spec.at_rate_threshold
    if spec.metric == "success":
        return analytic.success_probability(spec.scheme, rate, model)
    return analytic.area_spectral_efficiency(spec.scheme, rate, model)


def _evaluate_axis_shared(spec: ExperimentSpec, model: NetworkModel):
    """Threshold axes share one set of drops across all points."""
    if spec.metric == "coverage":
        points = [db_to_linear(v) for v in spec.values]
    else:
        points = list(spec.values)
    return montecarlo.estimate_curve(
        spec.metric,
        spec.scheme or "maxrp",
        points,
        model,
        spec.n_drops,
        spec.seed,
        tier=spec.tier,
        file_rank=spec.file_rank,
        include_noise=spec.include_noise,
        include_nlos=spec.include_nlos,
    )


def evaluate_curve(spec: ExperimentSpec, model: NetworkModel, name: str = "curve") -> CurveResult:
    analytic_vals = None
    mc_vals = None
    mc_half = None
    if "analytic" in spec.engines:
        analytic_vals = tuple(
            _analytic_point(spec, _model_variant(model, spec.axis, v), v) for v in spec.values
        )
    if "mc" in spec.engines:
        if spec.axis in ("tau_db", "rate_threshold"):
            estimates = _evaluate_axis_shared(spec, model)
        else:
            estimates = []
            for v in spec.values:
                variant = _model_variant(model, spec.axis, v)
                point = (
                    db_to_linear(spec.at_tau_db)
                    if spec.metric == "coverage"
                    else spec.at_rate_threshold
                )
                estimates.append(
                    montecarlo.simulate_metric(
                        spec.metric,
                        spec.scheme or "maxrp",
                        point,
                        variant,
                        spec.n_drops,
                        spec.seed,
                        tier=spec.tier,
                        file_rank=spec.file_rank,
                        include_noise=spec.include_noise,
                        include_nlos=spec.include_nlos,
                    )
                )
        mc_vals = tuple(e.mean for e in estimates)
        mc_half = tuple(e.half_width_95 for e in estimates)
    return CurveResult(
        name,
        tuple(spec.values),
        analytic_vals,
        mc_vals,
        mc_half,
        spec.n_drops if "mc" in spec.engines else None,
        spec.seed if "mc" in spec.engines else None,
    )


# --------------------------------------------------------------------------
# CSV emission
# --------------------------------------------------------------------------

def write_curve_csv(result: CurveResult, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        handle = path.open("w", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write output file {path}: {exc}") from None
    with handle:
        writer = csv.writer(handle)
        writer.writerow(["axis", "value_analytic", "value_mc", "mc_half_width", "n_drops", "seed"])
        for i, x in enumerate(result.axis):
            row = [repr(float(x))]
            row.append(repr(float(result.analytic_values[i])) if result.analytic_values else "")
            row.append(repr(float(result.mc_values[i])) if result.mc_values else "")
            row.append(repr(float(result.mc_half_widths[i])) if result.mc_half_widths else "")
            row.append(str(result.n_drops) if result.n_drops is not None else "")
            row.append(str(result.seed) if result.seed is not None else "")
            writer.writerow(row)
    return path


def read_curve_csv(path: str | Path) -> CurveResult:
    """Parse a curve CSV back into memory (exact float round-trip)."""
    with Path(path).open(newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0] != ["axis", "value_analytic", "value_mc", "mc_half_width", "n_drops", "seed"]:
        raise ConfigError(f"{path} is not a curve CSV")
    body = rows[1:]
    axis = tuple(float(r[0]) for r in body)
    take = lambda col: tuple(float(r[col]) for r in body) if body and body[0][col] != "" else None
    n_drops = int(body[0][4]) if body and body[0][4] != "" else None
    seed = int(body[0][5]) if body and body[0][5] != "" else None
    return CurveResult(Path(path).stem, axis, take(1), take(2), take(3), n_drops, seed)


# --------------------------------------------------------------------------
# Presets
# --------------------------------------------------------------------------

@dataclass
class PresetPlan:
    name: str
    axis_kind: str  # tau_db | rate_threshold
    axis: tuple
    y_label: str
    curves: list  # (curve_name, model, spec_kwargs)
    default_drops: int


def _tau_axis():
    return tuple(float(x) for x in np.arange(-10.0, 22.5, 2.5))


def _rate_axis(lo_exp=6.0, hi_exp=10.0, n=17):
    return tuple(float(x) for x in np.logspace(lo_exp, hi_exp, n))


def build_preset(name: str) -> PresetPlan:
    """Instantiate one of the documented experiment presets."""
    if name == "fig_coverage":
        model = default_network()
        curves = [
            ("tier1", model, dict(metric="coverage", tier=1, file_rank=1)),
            ("tier2", model, dict(metric="coverage", tier=2, file_rank=1)),
        ]
        return PresetPlan(name, "tau_db", _tau_axis(), "coverage probability", curves, 100_000)
    if name == "fig_success":
        model = default_network(storage=(80, 10), backhaul=1e8)
        curves = [
            ("maxrp", model, dict(metric="success", scheme="maxrp")),
            ("maxrate", model, dict(metric="success", scheme="maxrate")),
        ]
        return PresetPlan(name, "rate_threshold", _rate_axis(), "success probability", curves, 10_000)
    if name == "fig_ase":
        axis = _rate_axis(6.0, 10.0, 21)
        curves = []
        for lam2 in (10, 20, 30):
            model = default_network(lambda2_rel250=lam2, storage=(10, 80), bandwidth1=200e6)
            for scheme in ("maxrp", "maxrate"):
                curves.append((f"{scheme}_lam2_{lam2}", model, dict(metric="ase", scheme=scheme)))
        return PresetPlan(name, "rate_threshold", axis, "ASE (bps/Hz/m^2)", curves, 10_000)
    if name == "fig_carrier":
        axis = _rate_axis(7.0, 10.0, 13)
        curves = []
        for ghz in (28, 38, 60, 73):
            model = carrier_network(ghz * 1e9, storage=(80, 20), backhaul=1e8)
            for scheme in ("maxrp", "maxrate"):
                curves.append((f"{scheme}_{ghz}ghz", model, dict(metric="success", scheme=scheme)))
        return PresetPlan(name, "rate_threshold", axis, "success probability", curves, 10_000)
    if name == "fig_policies":
        axis = _rate_axis(5.0, 9.5, 13)
        shared = dict(
            catalog=10, head=8, storage=(4, 4), bandwidth1=500e6, backhaul=1e6
        )
        curves = [
            (
                "policy_most_popular",
                default_network(placement_policy="most_popular", **shared),
                dict(metric="success", scheme="maxrp"),
            ),
            (
                "policy_uniform",
                default_network(placement_policy="uniform", **shared),
                dict(metric="success", scheme="maxrp"),
            ),
        ]
        return PresetPlan(name, "rate_threshold", axis, "success probability", curves, 10_000)
    raise ConfigError(f"unknown preset {name!r}; known presets: {', '.join(PRESET_NAMES)}")


PRESET_NAMES = ("fig_coverage", "fig_success", "fig_ase", "fig_carrier", "fig_policies")


def run_preset(
    name: str,
    *,
    engines: tuple[str, ...] = ("analytic", "mc"),
    n_drops: int | None = None,
    seed: int | None = None,
    out: str | Path | None = None,
    figure: bool = True,
    axis_override: tuple | None = None,
) -> list[Path]:
    """Run a preset and write one CSV per curve (plus one figure).

    Returns the list of written paths.
    """
    plan = build_preset(name)
    if "mc" in engines and seed is None:
        raise ConfigError("Monte Carlo runs need an explicit seed (use --seed)")
    drops = n_drops if n_drops is not None else plan.default_drops
    axis = tuple(axis_override) if axis_override is not None else plan.axis
    out = Path(out) if out is not None else Path("results") / f"{name}.csv"
    stem = out.with_suffix("")
    results = []
    for curve_name, model, kwargs in plan.curves:
        spec = ExperimentSpec(
            axis=plan.axis_kind,
            values=axis,
            engines=tuple(engines),
            n_drops=drops,
            seed=seed,
            output=str(out),
            **kwargs,
        )
        results.append(evaluate_curve(spec, model, name=curve_name))
    written = []
    if len(results) == 1:
        written.append(write_curve_csv(results[0], out))
    else:
        for res in results:
            written.append(write_curve_csv(res, Path(f"{stem}__{res.name}.csv")))
    if figure:
        from .figures import render_curves

        written.append(
            render_curves(results, plan.axis_kind, plan.y_label, Path(f"{stem}.png"), title=name)
        )
    return written


# --------------------------------------------------------------------------
# Config-file experiments
# --------------------------------------------------------------------------

def spec_from_document(doc: dict) -> tuple[NetworkModel, ExperimentSpec]:
    model = network_from_dict(doc)
    if "experiment" not in doc:
        raise ConfigError("configuration has no experiment section to run")
    exp = dict(doc["experiment"])
    exp.setdefault("engines", ["analytic"])
    exp["engines"] = tuple(exp["engines"])
    exp["values"] = tuple(float(v) for v in exp.get("values", ()))
    known = {f.name for f in dataclasses.fields(ExperimentSpec)}
    unknown = set(exp) - known
    if unknown:
        raise ConfigError(f"unknown experiment keys: {sorted(unknown)}")
    exp.setdefault("n_drops", _DEFAULT_DROPS[exp.get("metric", "success")])
    return model, ExperimentSpec(**exp)


def run_experiment(doc: dict) -> list[Path]:
    """Run the experiment described by a parsed config document."""
    model, spec = spec_from_document(doc)
    result = evaluate_curve(spec, model, name=Path(spec.output).stem)
    written = [write_curve_csv(result, spec.output)]
    if spec.figure:
        from .figures import render_curves

        y_label = "ASE (bps/Hz/m^2)" if spec.metric == "ase" else f"{spec.metric} probability"
        x_kind = spec.axis
        png = Path(spec.output).with_suffix(".png")
        written.append(render_curves([result], x_kind, y_label, png, title=result.name))
    return written
