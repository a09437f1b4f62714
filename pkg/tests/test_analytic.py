"""Closed-form engine against independent oracles.

Oracle routes: brute-force double integration of the interference
functional, adaptive quadrature of the exact coverage integral, central
finite differences of every density against its distribution, Monte Carlo
cross-checks, and structural limits (degenerate biases, vanishing
placements, extreme bandwidth ratios).
"""

import dataclasses
import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from cachenet import analytic as an
from cachenet import montecarlo as mc
from cachenet.config import default_network
from cachenet.model import array_gain, dbm_to_watts, nearest_caching_pdf, zipf_pmf


@pytest.fixture(scope="module")
def net():
    return default_network()


@pytest.fixture(scope="module")
def net_uniform():
    # uniform placement: p1 = p2 = 80/90 for every head file
    return default_network(placement_policy="uniform")


def _replace_tier(model, tier, **changes):
    params = dataclasses.replace(model.tier(tier), **changes)
    tiers = (params, model.tiers[1]) if tier == 1 else (model.tiers[0], params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return dataclasses.replace(model, tiers=tiers)


# --------------------------------------------------------------------------
# Interference Laplace transform
# --------------------------------------------------------------------------

def _laplace_oracle(model, p2, r, s, n, tau):
    """Brute-force double integral over beam offset and interferer distance."""
    pico = model.tier(2)
    lam2, alpha, Np = pico.density, pico.pathloss_exp, pico.fading_order
    RL, dl, N2 = model.los_radius, model.antenna_spacing_ratio, pico.antennas

    def inner(lo, hi, omega):
        c = n * s * tau * array_gain(omega, N2) / Np
        val, _ = quad(lambda v: (1.0 - (1.0 + c / v**alpha) ** (-Np)) * v, lo, hi, limit=200)
        return val

    # integrate omega piecewise between ULA pattern nulls
    nulls = np.arange(0, int(N2 * dl) + 1) / N2
    edges = np.unique(np.concatenate([nulls[nulls <= dl], [dl]]))

    def omega_mean(lo, hi):
        total = 0.0
        for a_, b_ in zip(edges[:-1], edges[1:]):
            total += quad(lambda w: inner(lo, hi, w), a_, b_, limit=80)[0]
        return total / dl  # even integrand halved over [-dl, dl]

    expo = -2 * math.pi * lam2 * (p2 * omega_mean(r, RL) + (1 - p2) * omega_mean(0.0, RL))
    return math.exp(expo)


def test_laplace_no_interferers_is_one(net):
    empty = _replace_tier(net, 2, density=0.0)
    assert an.laplace_tier2(1.0, 1.0, 50.0, 1, 1, empty) == pytest.approx(1.0, abs=1e-12)


def test_laplace_zero_threshold_is_one(net):
    assert an.laplace_tier2(123.0, 0.0, 50.0, 1, 1, net) == pytest.approx(1.0, abs=1e-12)


def test_laplace_against_double_integral_default_orders(net):
    eta = an._eta(3)
    s = eta * 50.0**2
    got = an.laplace_tier2(s, 1.0, 50.0, 1, 1, net)
    want = _laplace_oracle(net, 1.0, 50.0, s, 1, 1.0)
    assert got == pytest.approx(want, rel=5e-4)


def test_laplace_against_double_integral_fine_orders(net):
    fine = dataclasses.replace(net, quad_orders=(512, 64, 64))
    eta = an._eta(3)
    s = eta * 50.0**2
    got = an.laplace_tier2(s, 1.0, 50.0, 1, 1, fine)
    want = _laplace_oracle(fine, 1.0, 50.0, s, 1, 1.0)
    assert got == pytest.approx(want, rel=1e-5)


def test_laplace_partial_placement_binomial_index(net_uniform):
    fine = dataclasses.replace(net_uniform, quad_orders=(512, 64, 64))
    eta = an._eta(3)
    r, tau, n = 120.0, 3.0, 2
    s = eta * r**2
    got = an.laplace_tier2(s, tau, r, 1, n, fine)
    want = _laplace_oracle(fine, fine.cache.probability(2, 1), r, s, n, tau)
    assert got == pytest.approx(want, rel=1e-5)


def test_laplace_monotone_in_placement(net):
    eta = an._eta(3)
    s = eta * 80.0**2
    vals = [
        float(an._laplace_from_scale(net, p2, np.array([80.0]), np.array([s * 1.0 / 3.0]))[0])
        for p2 in (0.0, 0.3, 0.7, 1.0)
    ]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_laplace_rejects_bad_arguments(net):
    with pytest.raises(ValueError):
        an.laplace_tier2(1.0, 1.0, 250.0, 1, 1, net)  # beyond the ball
    with pytest.raises(ValueError):
        an.laplace_tier2(-1.0, 1.0, 50.0, 1, 1, net)
    with pytest.raises(ValueError):
        an.laplace_tier2(1.0, 1.0, 50.0, 1, 0, net)


def test_laplace_branch_continuity_in_exponent(net):
    # generic-exponent branch at 2+eps agrees with the exact alpha=2 branch
    near = _replace_tier(net, 2, pathloss_exp=2.001)
    for tau in (0.5, 1.0, 5.0):
        a = an.coverage_tier2(1, tau, net)
        b = an.coverage_tier2(1, tau, near)
        assert b == pytest.approx(a, rel=1e-2)


# --------------------------------------------------------------------------
# Tier-2 coverage
# --------------------------------------------------------------------------

def test_coverage_tier2_zero_placement(net):
    assert an.coverage_tier2(85, 1.0, net) == 0.0  # rank 85 uncached in tier 2? storage=80
    # rank 85 <= head(90) but > storage(80): placement zero in both tiers
    assert net.cache.probability(2, 85) == 0.0


def test_coverage_tier2_small_threshold_limit(net):
    pico = net.tier(2)
    mass = 1.0 - math.exp(-math.pi * pico.density * net.los_radius**2)
    # default 64-node distance rule carries an O(u^-2) bias of ~1e-4
    assert an.coverage_tier2(1, 1e-9, net) == pytest.approx(mass, abs=5e-4)
    fine = dataclasses.replace(net, quad_orders=(64, 512, 64))
    assert an.coverage_tier2(1, 1e-9, fine) == pytest.approx(mass, rel=5e-6)


def test_coverage_tier2_monotonicity(net):
    taus = np.logspace(-2, 2, 12)
    vals = [an.coverage_tier2(1, t, net) for t in taus]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    noisy = [an.coverage_tier2(1, t, net, include_noise=True) for t in taus]
    assert all(nv <= v + 1e-12 for nv, v in zip(noisy, vals))


def test_coverage_tier2_noise_gap_moderate_thresholds(net):
    # interference-limited regime: dropping noise changes little below ~5 dB
    for tau_db in (-10.0, -5.0, 0.0, 5.0):
        tau = 10 ** (tau_db / 10)
        gap = an.coverage_tier2(1, tau, net) - an.coverage_tier2(1, tau, net, include_noise=True)
        assert 0.0 <= gap <= 0.01


def test_coverage_tier2_against_mc(net):
    sinr = mc.coverage_sinr_samples(net, 2, 1, 20_000, 101)
    for tau_db in (-5.0, 0.0, 10.0):
        tau = 10 ** (tau_db / 10)
        assert an.coverage_tier2(1, tau, net) == pytest.approx(
            float(np.mean(sinr > tau)), abs=0.02
        )


def test_coverage_tier2_pdf_is_negative_derivative(net):
    for tau in (0.1, 1.0, 10.0):
        h = 1e-4 * tau
        fd = (an.coverage_tier2(1, tau - h, net) - an.coverage_tier2(1, tau + h, net)) / (2 * h)
        assert an.coverage_tier2_pdf(1, tau, net) == pytest.approx(fd, abs=1e-3, rel=1e-3)


def test_coverage_tier2_pdf_zero_placement(net):
    assert an.coverage_tier2_pdf(85, 1.0, net) == 0.0


def test_coverage_tier2_pdf_normalization(net):
    total, _ = quad(
        lambda t: an.coverage_tier2_pdf(1, t, net) if t > 0 else 0.0,
        0.0, 2e3, limit=300,
    )
    tail = an.coverage_tier2(1, 2e3, net)
    mass = an.coverage_tier2(1, 1e-9, net)
    assert total + tail == pytest.approx(mass, rel=2e-3)


# --------------------------------------------------------------------------
# Tier-1 coverage
# --------------------------------------------------------------------------

def test_coverage_tier1_rayleigh_anchor(net):
    assert an.coverage_tier1(1, 1.0, net, variant="sir") == pytest.approx(
        1.0 / (1.0 + math.pi / 4.0), rel=1e-6
    )


def test_coverage_tier1_vanishing_placement():
    tiny = default_network(storage=(1, 80), head=90)
    assert tiny.cache.probability(1, 50) == 0.0
    assert an.coverage_tier1(50, 1.0, tiny, variant="sir") == 0.0


def test_coverage_tier1_sir_parameter_invariance(net):
    base = an.coverage_tier1(1, 2.0, net, variant="sir")
    for changes in (
        dict(density=net.tier(1).density * 10),
        dict(tx_power=net.tier(1).tx_power * 10),
        dict(intercept=net.tier(1).intercept * 10),
        dict(antennas=4),
    ):
        scaled = _replace_tier(net, 1, **changes)
        assert an.coverage_tier1(1, 2.0, scaled, variant="sir") == base


def test_coverage_tier1_closed_matches_exact(net):
    for tau_db in (-10.0, 0.0, 10.0, 20.0):
        tau = 10 ** (tau_db / 10)
        exact = an.coverage_tier1(1, tau, net, variant="exact")
        closed = an.coverage_tier1(1, tau, net, variant="closed_alpha4")
        assert closed == pytest.approx(exact, rel=1e-6)


def test_coverage_tier1_closed_requires_exponent_four(net):
    other = _replace_tier(net, 1, pathloss_exp=3.5)
    with pytest.raises(ValueError):
        an.coverage_tier1(1, 1.0, other, variant="closed_alpha4")
    # exact variant still works
    assert 0.0 < an.coverage_tier1(1, 1.0, other, variant="exact") < 1.0


def test_coverage_tier1_noise_negligible_at_reference_power(net):
    for tau in (0.1, 1.0, 10.0):
        sir = an.coverage_tier1(1, tau, net, variant="sir")
        exact = an.coverage_tier1(1, tau, net, variant="exact")
        assert exact == pytest.approx(sir, rel=1e-3)


def test_coverage_tier1_against_mc(net):
    sinr = mc.coverage_sinr_samples(net, 1, 1, 20_000, 55)
    for tau_db in (-5.0, 0.0, 10.0):
        tau = 10 ** (tau_db / 10)
        assert an.coverage_tier1(1, tau, net) == pytest.approx(
            float(np.mean(sinr > tau)), abs=0.02
        )


def test_coverage_tier1_pdf_closed_form_full_placement(net):
    alpha = net.tier(1).pathloss_exp
    for tau in (0.1, 1.0, 10.0):
        S0 = an.hyp_S(0, alpha, 1, tau)
        S1 = an.hyp_S(1, alpha, 1, tau)
        want = 2.0 * S1 / ((alpha - 2.0) * S0**2)
        assert an.coverage_tier1_pdf(1, tau, net) == pytest.approx(want, rel=1e-12)


def test_coverage_tier1_pdf_is_negative_derivative(net_uniform):
    for tau in (0.05, 0.5, 5.0, 50.0):
        h = 1e-5 * tau
        fd = (
            an.coverage_tier1(1, tau - h, net_uniform) - an.coverage_tier1(1, tau + h, net_uniform)
        ) / (2 * h)
        assert an.coverage_tier1_pdf(1, tau, net_uniform) == pytest.approx(fd, rel=1e-4)


# --------------------------------------------------------------------------
# Max-mean-power association
# --------------------------------------------------------------------------

def test_maxrp_distance_pdf_total_probability(net):
    i1, _ = quad(lambda r: an.maxrp_distance_pdf(1, 1, r, net), 0, np.inf, limit=300)
    i2, _ = quad(lambda r: an.maxrp_distance_pdf(2, 1, r, net), 0, net.los_radius, limit=300)
    assert i1 + i2 == pytest.approx(1.0, rel=1e-6)


def test_maxrp_distance_pdf_degenerate_bias(net):
    lame = _replace_tier(net, 2, bias_power=1e-30)
    r = np.linspace(1.0, 900.0, 50)
    got = an.maxrp_distance_pdf(1, 1, r, lame)
    want = nearest_caching_pdf(1, 1, r, lame)
    assert np.allclose(got, want, rtol=1e-9)
    a2, _ = quad(lambda x: an.maxrp_distance_pdf(2, 1, x, lame), 0, lame.los_radius)
    assert a2 == pytest.approx(0.0, abs=1e-12)


def test_maxrp_distance_pdf_matches_empirical_distances(net):
    # KS distance between the analytic law and simulated serving distances
    from scipy.integrate import cumulative_trapezoid

    samples = mc.delivery_samples(net, 100_000, 909, force_file_rank=1)
    for tier in (1, 2):
        picked = np.sort(samples.dist_maxrp[samples.tier_maxrp == tier])
        hi = 2000.0 if tier == 1 else net.los_radius
        grid = np.linspace(0.0, hi, 20_001)
        pdf = an.maxrp_distance_pdf(tier, 1, grid, net)
        cdf = cumulative_trapezoid(pdf, grid, initial=0.0)
        cdf /= cdf[-1]
        emp = np.searchsorted(picked, grid, side="right") / len(picked)
        assert float(np.max(np.abs(emp - cdf))) < 0.01


def test_theta_zero_threshold_is_association_mass(net):
    a1 = an.maxrp_sinr_coverage(1, 1, 0.0, net)
    a2 = an.maxrp_sinr_coverage(2, 1, 0.0, net)
    # the 64-node distance rule carries an O(u^-2) bias of ~5e-5 here
    assert a1 + a2 == pytest.approx(1.0, abs=5e-4)


def test_theta_reduces_to_single_tier_coverage(net):
    lame = _replace_tier(net, 2, bias_power=1e-30)
    for tau in (0.5, 2.0):
        got = an.maxrp_sinr_coverage(1, 1, tau, lame)
        want = an.coverage_tier1(1, tau, lame, variant="sir")
        assert got == pytest.approx(want, rel=1e-6)


def test_theta_against_mc(net):
    samples = mc.delivery_samples(net, 20_000, 313, force_file_rank=1)
    for tier in (1, 2):
        bw = net.tier(tier).bandwidth
        for tau in (0.5, 1.0):
            rate_floor = bw * math.log2(1.0 + tau)
            emp = float(np.mean((samples.tier_maxrp == tier) & (samples.rate_maxrp > rate_floor)))
            assert an.maxrp_sinr_coverage(tier, 1, tau, net) == pytest.approx(emp, abs=0.02)


def test_theta_monotone_in_own_bias(net):
    vals = []
    for b in (0.5, 1.0, 2.0):
        m = _replace_tier(net, 2, bias_power=b)
        vals.append(an.association_probability("maxrp", 2, m))
    assert vals[0] < vals[1] < vals[2]


# --------------------------------------------------------------------------
# Max-instantaneous-rate association
# --------------------------------------------------------------------------

def test_maxrate_pdf_collapses_to_own_density(net):
    # overwhelming pico bandwidth edge: the cross-tier factor vanishes
    wide = _replace_tier(net, 2, bias_rate=1e9)
    for tau in (0.5, 2.0):
        assert an.maxrate_coverage_pdf(2, 1, tau, wide) == an.coverage_tier2_pdf(1, tau, wide)


def test_maxrate_tier_masses_sum_to_one(net):
    m1 = an._maxrate_tail(net, 1, 1.0, 1.0, 0.0)
    m2 = an._maxrate_tail(net, 2, 1.0, 1.0, 0.0)
    assert m1 + m2 == pytest.approx(1.0, abs=1e-3)


def test_maxrate_tier_frequencies_match_mc(net):
    samples = mc.delivery_samples(net, 20_000, 99, force_file_rank=1)
    for tier in (1, 2):
        emp = float(np.mean(samples.tier_maxrate == tier))
        ana = an._maxrate_tail(net, tier, 1.0, 1.0, 0.0)
        assert ana == pytest.approx(emp, abs=0.02)


def test_maxrate_pdf_composition(net):
    for tier in (1, 2):
        other = 2 if tier == 1 else 1
        beta = an._rate_exponent(net, tier, other)
        for tau in (0.5, 5.0):
            h = 1e-4 * tau
            if tier == 1:
                own_fd = (an.coverage_tier1(1, tau - h, net) - an.coverage_tier1(1, tau + h, net)) / (2 * h)
                lose = an.coverage_tier2(1, an._cross_threshold(tau, beta), net)
            else:
                own_fd = (an.coverage_tier2(1, tau - h, net) - an.coverage_tier2(1, tau + h, net)) / (2 * h)
                lose = an.coverage_tier1(1, an._cross_threshold(tau, beta), net)
            want = own_fd * (1.0 - lose)
            assert an.maxrate_coverage_pdf(tier, 1, tau, net) == pytest.approx(want, abs=1e-3, rel=1e-3)


def test_tail_cross_check_raises_on_disagreement(net, monkeypatch):
    fresh = dataclasses.replace(net, backhaul=net.backhaul + 1.0)
    monkeypatch.setattr(an, "_maxrate_head", lambda *args: 0.5)
    with pytest.raises(an.NumericalQualityError):
        an._maxrate_tail(fresh, 1, 1.0, 1.0, 1.0)


# --------------------------------------------------------------------------
# Association probability and load
# --------------------------------------------------------------------------

def test_association_mass_everything_cached():
    full = default_network(catalog=20, head=20, storage=(20, 20), skew=0.0)
    for scheme in ("maxrp", "maxrate"):
        a1 = an.association_probability(scheme, 1, full)
        a2 = an.association_probability(scheme, 2, full)
        assert a1 + a2 == pytest.approx(1.0, abs=1e-3)


def test_association_head_mass(net):
    mass = float(np.sum(zipf_pmf(net.cache)[: net.cache.storage[0]]))
    a1 = an.association_probability("maxrp", 1, net)
    a2 = an.association_probability("maxrp", 2, net)
    assert a1 + a2 == pytest.approx(mass, abs=5e-4)


def test_maxrate_association_ignores_macro_power(net):
    vals = []
    for dbm in (70.0, 80.0, 90.0):
        m = _replace_tier(net, 1, tx_power=dbm_to_watts(dbm))
        vals.append(an.association_probability("maxrate", 2, m))
    assert abs(vals[0] - vals[1]) <= 1e-9 * vals[1]
    assert abs(vals[2] - vals[1]) <= 1e-9 * vals[1]


def test_average_load(net):
    for scheme in ("maxrp", "maxrate"):
        for tier in (1, 2):
            load = an.average_load(scheme, tier, net)
            assert load >= 1.0
    a2 = an.association_probability("maxrp", 2, net)
    want = 1.0 + 1.28 * net.user_density * a2 / net.tier(2).density
    assert an.average_load("maxrp", 2, net) == pytest.approx(want, rel=1e-12)


# --------------------------------------------------------------------------
# Server mode, success probability, ASE
# --------------------------------------------------------------------------

def test_server_success_unit_steps(net):
    assert an.server_success(net.backhaul * 1.001, net) == 0.0
    everything = default_network(catalog=90, head=90, storage=(80, 80))
    assert an.server_success(1e6, everything) == 0.0


def test_server_success_composition(net):
    rate = 1e7
    tau = 2 ** (rate / net.tier(1).bandwidth) - 1.0
    pmf = zipf_pmf(net.cache)
    want = float(np.sum(pmf[90:])) * an.coverage_tier1(1, tau, net, variant="sir")
    assert an.server_success(rate, net) == pytest.approx(want, rel=1e-12)
    assert tau == pytest.approx(2**0.5 - 1.0)


def test_success_probability_saturates_at_tiny_rate():
    full = default_network(catalog=50, head=50, storage=(50, 50), skew=0.6)
    for scheme in ("maxrp", "maxrate"):
        assert an.success_probability(scheme, 1e3, full) > 0.99


def test_success_probability_scale_invariance_maxrate(net):
    base = an.success_probability("maxrate", 1e8, net)
    t1, t2 = net.tier(1), net.tier(2)
    variants = [
        _replace_tier(net, 1, tx_power=t1.tx_power * 10),
        _replace_tier(net, 2, tx_power=t2.tx_power * 10),
        _replace_tier(net, 1, intercept=t1.intercept * 10),
        _replace_tier(net, 2, intercept=t2.intercept * 10),
        _replace_tier(net, 1, density=t1.density * 10),
    ]
    for variant in variants:
        assert abs(an.success_probability("maxrate", 1e8, variant) - base) <= 1e-9 * base


def test_maxrate_beats_maxrp_at_high_rate(net):
    assert an.success_probability("maxrate", 1e9, net) >= an.success_probability("maxrp", 1e9, net)


def test_success_against_mc(net):
    samples = mc.delivery_samples(net, 10_000, 11)
    for rate in (1e7, 1e8):
        for scheme in ("maxrp", "maxrate"):
            emp = float(np.mean(mc._success_mask(samples, scheme, rate, net)))
            assert an.success_probability(scheme, rate, net) == pytest.approx(emp, abs=0.02)


def test_ase_limits(net):
    small = an.area_spectral_efficiency("maxrp", 1.0, net)
    mid = an.area_spectral_efficiency("maxrp", 3e8, net)
    huge = an.area_spectral_efficiency("maxrp", 1e12, net)
    assert small < mid and huge < mid
    assert small >= 0.0 and huge >= 0.0


def test_ase_interior_maximum_quick(net):
    rates = np.logspace(7, 10, 9)
    vals = [an.area_spectral_efficiency("maxrp", r, net) for r in rates]
    k = int(np.argmax(vals))
    assert 0 < k < len(rates) - 1


# --------------------------------------------------------------------------
# Query/curve containers
# --------------------------------------------------------------------------

def test_coverage_query_validation():
    an.CoverageQuery(tier=2, file_rank=1, threshold=1.0)
    with pytest.raises(ValueError):
        an.CoverageQuery(tier=3, file_rank=1, threshold=1.0)
    with pytest.raises(ValueError):
        an.CoverageQuery(tier=1, file_rank=1, threshold=0.0)


def test_metric_curve_validation():
    an.MetricCurve(axis=(1.0, 2.0), values=(0.5, 0.4))
    with pytest.raises(ValueError):
        an.MetricCurve(axis=(2.0, 1.0), values=(0.5, 0.4))
    with pytest.raises(ValueError):
        an.MetricCurve(axis=(1.0, 2.0), values=(0.5,))
    with pytest.raises(ValueError):
        an.MetricCurve(axis=(), values=())
