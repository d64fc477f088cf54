"""Tests for the effective iid model and the min-entropy bounds.

Expected values come from independent oracles: hand arithmetic on the
variance formulas, a Maclaurin series for erf, coarse grid searches for the
optimizer and the closed-form fine-resolution asymptotes.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vacqrng.entropy import (
    AdcSpec,
    IidParams,
    NoiseModel,
    fold_classical_noise,
    homodyne_upper_bound,
    iid_params_from_variances,
    min_entropy_lower_bound,
    optimize_delta,
    secure_length,
    small_bin_homodyne_upper_bound,
    small_bin_lower_bound_at_delta_n,
    worst_case_min_entropy,
)
from vacqrng.errors import DegenerateModel, InconsistentModel, InvalidDelta, NegativeNoise

TABLE = dict(sigma2=3.96e7, sigma_x2=3.29e7, sigma_u2=2.49e7)
TABLE_W = dict(w2=0.09e7, wx=0.07e7, wu=0.06e7)
ADC16 = AdcSpec(bits=16, range_R=2.0 ** 15, delta_x=1.0)


def erf_series(x: float) -> float:
    """Maclaurin series oracle for erf, independent of scipy."""
    total = 0.0
    term = x
    k = 0
    while abs(term) > 1e-18 * max(1.0, abs(total)):
        total += term / (2 * k + 1)
        k += 1
        term *= -x * x / k
    return 2.0 / math.sqrt(math.pi) * total


class TestAdcSpec:
    def test_derived_bin_width(self):
        adc = AdcSpec(bits=4, range_R=7.0)
        assert adc.d == 16
        assert adc.delta_x == pytest.approx(14.0 / 14.0)

    def test_explicit_bin_width_within_tolerance(self):
        # 2**15 range with unit bins differs from the exact tiling by 3e-5
        adc = AdcSpec(bits=16, range_R=32768.0, delta_x=1.0)
        assert adc.delta_x == 1.0

    def test_inconsistent_bin_width_rejected(self):
        with pytest.raises(ValueError):
            AdcSpec(bits=16, range_R=32768.0, delta_x=1.5)

    def test_from_bin_width(self):
        adc = AdcSpec.from_bin_width(bits=8, delta_x=1.0)
        assert adc.range_R == pytest.approx(127.0)

    def test_too_few_bits(self):
        with pytest.raises(ValueError):
            AdcSpec(bits=1, range_R=1.0)


class TestIidParamsFromVariances:
    def test_table_point_estimates_hand_arithmetic(self):
        # g = sqrt(3.29e7 - 2.49e7) = sqrt(8e6), n = 3.96/1.6 - 0.5
        p = iid_params_from_variances(NoiseModel.point_estimates(**TABLE))
        assert p.g == pytest.approx(math.sqrt(8.0e6), rel=1e-12)
        assert p.g == pytest.approx(2828.43, abs=0.01)
        assert p.n == pytest.approx(1.975, rel=1e-12)

    def test_pure_vacuum(self):
        p = iid_params_from_variances(NoiseModel.point_estimates(1.0, 1.0, 0.0))
        assert p.g == 1.0
        assert p.n == 0.0

    def test_degenerate_gain(self):
        with pytest.raises(DegenerateModel):
            iid_params_from_variances(NoiseModel.point_estimates(2.0, 1.0, 1.0))

    def test_inconsistent_total_variance(self):
        with pytest.raises(InconsistentModel):
            iid_params_from_variances(NoiseModel.point_estimates(0.9, 1.0, 0.5))


class TestFoldClassicalNoise:
    def test_zero_noise_identity(self):
        assert fold_classical_noise(0.7, 3.0, 0.0) == 0.7

    def test_direct_substitution(self):
        assert fold_classical_noise(0.0, 1.0, 2.0) == pytest.approx(1.0)

    def test_negative_noise_rejected(self):
        with pytest.raises(NegativeNoise):
            fold_classical_noise(1.0, 1.0, -1e-9)

    @given(
        sx=st.floats(0.5, 1e8),
        ratio_u=st.floats(1e-6, 0.999),
        extra=st.floats(0.0, 1e8),
    )
    @settings(max_examples=200)
    def test_two_path_equivalence(self, sx, ratio_u, extra):
        # raw n from the conditional excess noise, then folding the
        # total-minus-conditional gap, must equal the one-step solution
        su = sx * ratio_u
        s2 = sx + extra
        model = NoiseModel.point_estimates(s2, sx, su)
        one_step = iid_params_from_variances(model)
        g = math.sqrt(sx - su)
        n_raw = su / (2.0 * g * g)
        folded = fold_classical_noise(n_raw, g, s2 - sx)
        assert folded == pytest.approx(one_step.n, rel=1e-12, abs=1e-12)
        assert g == pytest.approx(one_step.g, rel=1e-12)


class TestMinEntropyLowerBound:
    def test_invalid_delta(self):
        p = IidParams(g=1.0, n=1.0)
        with pytest.raises(InvalidDelta):
            min_entropy_lower_bound(p, ADC16, 0.0)

    def test_zero_photon_small_delta_limit(self):
        # with negligible saturation (range >> g) the bound at delta -> 0+
        # approaches -log2 erf(delta_x / (2 sqrt(2) g))
        adc = AdcSpec(bits=8, range_R=128.0)
        p = IidParams(g=5.0, n=0.0)
        limit = -math.log2(erf_series(adc.delta_x / (2.0 * math.sqrt(2.0) * 5.0)))
        h = min_entropy_lower_bound(p, adc, 1e-9)
        assert h == pytest.approx(limit, abs=1e-6)

    def test_table_optimized_matches_reported_value(self):
        p = iid_params_from_variances(NoiseModel.point_estimates(**TABLE))
        _, h = optimize_delta(p, ADC16)
        assert 10.4 <= h <= 11.4  # point estimate sits above the worst case

    def test_fine_resolution_asymptote_at_delta_n(self):
        # n=1, g=1, delta_x=1e-3 with saturation pushed far out
        h = min_entropy_lower_bound(
            IidParams(g=1.0, n=1.0),
            AdcSpec(bits=22, range_R=0.001 * (2 ** 22 - 2) / 2.0),
            1.0,
        )
        asym = small_bin_lower_bound_at_delta_n(1.0, 0.001)
        assert h == pytest.approx(asym, abs=1e-3)
        # closed form spelled out: -log2(dx/g) - log2(sqrt(2)*3/sqrt(7 pi))
        explicit = -math.log2(0.001) - math.log2(3.0 * math.sqrt(2.0) / math.sqrt(7.0 * math.pi))
        assert asym == pytest.approx(explicit, rel=1e-12)


class TestOptimizeDelta:
    @given(
        g=st.floats(0.5, 5e3),
        n=st.floats(1e-4, 50.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_never_below_delta_n_fallback(self, g, n):
        p = IidParams(g=g, n=n)
        _, h = optimize_delta(p, ADC16)
        assert h >= min_entropy_lower_bound(p, ADC16, n) - 1e-9

    def test_table_worst_case_delta_finite(self):
        p = iid_params_from_variances(NoiseModel.point_estimates(**TABLE))
        d, h = optimize_delta(p, ADC16)
        assert 0.0 < d < 1e6
        assert math.isfinite(h)

    def test_beats_coarse_grid_oracle(self):
        p = IidParams(g=1.0, n=100.0)
        adc = AdcSpec(bits=14, range_R=100.0, delta_x=100.0 * 2 / (2 ** 14 - 2))
        _, h = optimize_delta(p, adc)
        grid = [min_entropy_lower_bound(p, adc, (10.0 ** k) * p.n) for k in range(-3, 4)]
        assert h >= max(grid) - 1e-9


class TestHomodyneUpperBound:
    def test_coarse_bin_limit_is_zero(self):
        p = IidParams(g=1e-6, n=0.0)
        adc = AdcSpec(bits=4, range_R=7.0)
        assert homodyne_upper_bound(p, adc) == pytest.approx(0.0, abs=1e-9)

    def test_series_oracle(self):
        p = IidParams(g=1.0, n=0.0)
        adc = AdcSpec.from_bin_width(bits=16, delta_x=1.0)
        expected = -math.log2(erf_series(math.sqrt(2.0) / 4.0))
        assert homodyne_upper_bound(p, adc) == pytest.approx(expected, rel=1e-10)

    def test_gap_below_one_bit_across_photon_numbers(self):
        for n in np.geomspace(1e-3, 1e3, 25):
            gap = (small_bin_homodyne_upper_bound(n, 1e-3)
                   - small_bin_lower_bound_at_delta_n(n, 1e-3))
            assert 0.0 < gap < 1.0


class TestWorstCase:
    def test_zero_width_equals_point_estimate(self):
        m = NoiseModel.point_estimates(**TABLE)
        p = iid_params_from_variances(m)
        _, h_point = optimize_delta(p, ADC16)
        rep = worst_case_min_entropy(m, ADC16)
        assert rep.h_min == pytest.approx(h_point, rel=1e-9)

    def test_table_confidence_intervals(self):
        m = NoiseModel.with_halfwidths(
            TABLE["sigma2"], TABLE_W["w2"],
            TABLE["sigma_x2"], TABLE_W["wx"],
            TABLE["sigma_u2"], TABLE_W["wu"],
        )
        rep = worst_case_min_entropy(m, ADC16)
        assert rep.h_min == pytest.approx(10.7, abs=0.3)
        assert rep.worst_case_corner == "sigma2=hi,sigma_x2=lo,sigma_u2=hi"

    def test_widening_never_increases(self):
        scales = [0.0, 0.5, 1.0, 2.0]
        values = []
        for s in scales:
            m = NoiseModel.with_halfwidths(
                TABLE["sigma2"], s * TABLE_W["w2"],
                TABLE["sigma_x2"], s * TABLE_W["wx"],
                TABLE["sigma_u2"], s * TABLE_W["wu"],
            )
            values.append(worst_case_min_entropy(m, ADC16).h_min)
        assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))

    def test_degenerate_worst_corner(self):
        m = NoiseModel.with_halfwidths(2.0, 0.0, 1.0, 0.3, 0.9, 0.3)
        with pytest.raises(DegenerateModel):
            worst_case_min_entropy(m, ADC16)

    def test_report_serialization_keys(self):
        m = NoiseModel.point_estimates(**TABLE)
        rep = worst_case_min_entropy(m, ADC16, n_block=80, eps_hash=1e-33)
        text = rep.to_text()
        for key in ("h_min_bits", "delta_star", "corner",
                    "secure_len_bits", "eps_hash", "eps_pe"):
            assert any(line.startswith(key + ":") for line in text.splitlines())

    def test_report_bounds_ordered(self):
        m = NoiseModel.point_estimates(**TABLE)
        rep = worst_case_min_entropy(m, ADC16)
        assert 0.0 <= rep.h_min <= ADC16.bits
        assert rep.h_min <= rep.upper_bound_homodyne


class TestSecureLength:
    def test_no_penalty_at_eps_one(self):
        assert secure_length(10, 8.0, 1.0) == 80

    def test_table_secure_length(self):
        # 80 * 10.75 - 219.3 = 640.7 before the floor
        eps = 2.0 ** (-219.3 / 2.0)
        assert secure_length(80, 10.75, eps) == 640

    def test_clamped_at_zero(self):
        assert secure_length(1, 8.0, 2.0 ** -16) == 0

    @given(
        n1=st.integers(1, 10_000),
        extra=st.integers(0, 10_000),
        h=st.floats(0.0, 16.0),
        log_eps=st.floats(-120.0, -1.0),
        log_eps_up=st.floats(0.0, 60.0),
    )
    @settings(max_examples=200)
    def test_monotone_in_samples_and_eps(self, n1, extra, h, log_eps, log_eps_up):
        eps = 2.0 ** log_eps
        eps_hi = min(1.0, 2.0 ** (log_eps + log_eps_up))
        assert secure_length(n1 + extra, h, eps) >= secure_length(n1, h, eps)
        assert secure_length(n1, h, eps_hi) >= secure_length(n1, h, eps)


class TestBoundInvariants:
    @given(
        g=st.floats(0.5, 1e4),
        n=st.floats(0.0, 1e3),
        bits=st.sampled_from([8, 12, 16]),
        fill=st.floats(0.05, 0.5),
    )
    @settings(max_examples=80, deadline=None)
    def test_lower_never_exceeds_homodyne_upper(self, g, n, bits, fill):
        # choose the range so the signal std g*sqrt(1+2n) fills `fill` of it
        r = g * math.sqrt(1.0 + 2.0 * n) / fill
        adc = AdcSpec(bits=bits, range_R=r)
        p = IidParams(g=g, n=n)
        _, h = optimize_delta(p, adc)
        assert h <= homodyne_upper_bound(p, adc) + 1e-9

    def test_resolution_monotonicity(self):
        p = iid_params_from_variances(NoiseModel.point_estimates(**TABLE))
        values = []
        for bits in (8, 10, 12, 14, 16):
            adc = AdcSpec(bits=bits, range_R=2.0 ** 15)
            values.append(optimize_delta(p, adc)[1])
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    def test_noise_monotonicity(self):
        adc = ADC16
        values = []
        for n in np.geomspace(1e-3, 1e3, 15):
            values.append(optimize_delta(IidParams(g=2000.0, n=float(n)), adc)[1])
        assert all(b <= a + 1e-6 for a, b in zip(values, values[1:]))

    def test_gap_independent_of_bin_width(self):
        # upper minus lower asymptote must not depend on delta_x
        for n in (1e-3, 0.3, 7.0, 400.0):
            gaps = [
                small_bin_homodyne_upper_bound(n, dx)
                - small_bin_lower_bound_at_delta_n(n, dx)
                for dx in (1e-6, 1e-3, 1.0)
            ]
            assert max(gaps) - min(gaps) < 1e-9
