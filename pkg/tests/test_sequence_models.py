import math

import numpy as np
import pytest

from sequence_models import (
    BoxRegion,
    DiscRegion,
    Spectrum,
    TailBound,
    TailMethod,
    WeightKind,
    WeightSequence,
    gap_indices,
    gaps,
    half_gaps,
    mu,
    omega,
    regions,
    schatten_sum,
    spectrum_from_config,
    weaker_method,
    weighted_tail,
    weights_from_config,
)


class TestSpectrum:
    def test_closed_forms(self):
        assert mu(Spectrum.linear(), 7) == 7.0
        assert mu(Spectrum.geometric(1, 2), 4) == 8.0
        assert mu(Spectrum.power(1, 2), 5) == 25.0
        assert mu(Spectrum.affine(2, 1), 3) == 7.0

    def test_explicit_spectrum_has_length(self):
        spec = Spectrum.explicit([1.0, 2.5, 4.0])
        assert spec.length == 3
        assert Spectrum.linear().length is None
        with pytest.raises(IndexError):
            spec.at([4])

    @pytest.mark.parametrize("values", [[2.0, 2.0], [3.0, 1.0], [0.0, 1.0], []])
    def test_explicit_spectrum_rejects_bad_values(self, values):
        with pytest.raises(ValueError):
            Spectrum.explicit(values)

    def test_closed_form_parameter_checks(self):
        with pytest.raises(ValueError):
            Spectrum.geometric(1, 1)
        with pytest.raises(ValueError):
            Spectrum.affine(1, -1)
        with pytest.raises(ValueError):
            Spectrum.power(1, 0)

    def test_index_starts_at_one(self):
        with pytest.raises(ValueError):
            Spectrum.linear().at([0])

    def test_slope_only_for_affine_kinds(self):
        assert Spectrum.linear().slope == 1.0
        assert Spectrum.affine(3, 1).slope == 3.0
        assert Spectrum.power(1, 2).slope is None

    def test_index_limit(self):
        spec = Spectrum.geometric(1, 2)
        limit = spec.index_limit
        assert np.all(np.isfinite(spec.upto(limit + 1)))
        assert np.isinf(spec.at([limit + 3])[0])
        assert Spectrum.linear().index_limit is None
        assert Spectrum.power(1, 2).index_limit is None
        assert Spectrum.explicit([1.0, 2.0]).index_limit == 2


class TestGaps:
    def test_unit_gaps(self):
        g = gaps(Spectrum.linear(), 5)
        assert (g.r_minus, g.r_plus, g.r) == (1.0, 1.0, 0.5)

    def test_geometric_gap_uses_smaller_side(self):
        g = gaps(Spectrum.geometric(1, 2), 3)
        assert (g.r_minus, g.r_plus, g.r) == (2.0, 4.0, 1.0)

    def test_first_index_convention(self):
        g = gaps(Spectrum.linear(), 1)
        assert g.r_minus is None
        assert g.r == 0.5

    def test_half_gaps_match_scalar_gaps(self):
        spec = Spectrum.power(1, 1.5)
        r = half_gaps(spec, 20)
        assert np.allclose(r, [gaps(spec, n).r for n in range(1, 21)])

    def test_explicit_gap_needs_next_value(self):
        with pytest.raises(IndexError):
            gaps(Spectrum.explicit([1.0, 2.0, 3.0]), 3)


class TestRegions:
    def test_linear_box_and_discs(self):
        regs = regions(Spectrum.linear(), 3, 1, 2, 5)
        box, *discs = regs
        assert box == BoxRegion(h1=1.0, h2=2.0, right=3.5)
        assert discs == [DiscRegion(4, 4.0, 0.5), DiscRegion(5, 5.0, 0.5)]

    def test_geometric_discs(self):
        box, *discs = regions(Spectrum.geometric(1, 2), 2, 1, 1, 4)
        assert box.right == 2.5
        assert [(d.center, d.radius) for d in discs] == [(4.0, 1.0), (8.0, 2.0)]

    def test_single_disc(self):
        box, disc = regions(Spectrum.linear(), 1, 0.5, 0.5, 2)
        assert (disc.center, disc.radius) == (2.0, 0.5)
        assert box.contains(complex(1.0, 0.4))
        assert not box.contains(complex(-0.5, 0.0))

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            regions(Spectrum.linear(), 3, 0, 1, 5)
        with pytest.raises(ValueError):
            regions(Spectrum.linear(), 5, 1, 1, 5)


class TestSchattenSum:
    def test_zeta_two_enclosed(self):
        b = schatten_sum(Spectrum.linear(), 2.0, 1000)
        assert b.lower <= math.pi**2 / 6 <= b.upper
        assert b.method is TailMethod.INTEGRAL_TEST

    def test_harmonic_series_diverges(self):
        b = schatten_sum(Spectrum.linear(), 1.0, 1000)
        assert b.method is TailMethod.NONE
        assert b.divergent
        assert not b.conclusive

    def test_geometric_series(self):
        b = schatten_sum(Spectrum.geometric(1, 2), 0.5, 20)
        exact = 1 / (1 - 2**-0.5)
        assert b.method is TailMethod.GEOMETRIC
        assert b.lower == pytest.approx(exact, rel=1e-12)
        assert b.upper >= exact

    def test_explicit_spectrum_is_exact(self):
        b = schatten_sum(Spectrum.explicit([1.0, 2.0]), 1.0, 10)
        assert b.value == 1.5
        assert b.tail_upper == 0.0


class TestWeights:
    def test_closed_form_values(self):
        assert omega(WeightSequence.power(1), 4) == 0.25
        assert omega(WeightSequence.zero(), 100) == 0.0

    def test_counterexample_weight_at_block_nine(self):
        assert omega(WeightSequence.counterexample(), 17) == pytest.approx(0.68661, abs=1e-5)
        assert omega(WeightSequence.counterexample(), 18) == omega(WeightSequence.counterexample(), 17)
        assert omega(WeightSequence.counterexample(), 19) == 0.0

    def test_log_families_repeat_first_value(self):
        w = WeightSequence.log_power(1)
        assert omega(w, 1) == omega(w, 2)
        w = WeightSequence.sqrtlog_loglog(1)
        assert omega(w, 1) == omega(w, 3)

    def test_gap_indices(self):
        assert gap_indices(1.5, 7) == (1, 2, 5, 8, 11, 14, 18)
        assert gap_indices(2, 4) == (1, 4, 9, 16)

    def test_gap_supported_weights(self):
        w = WeightSequence.gap_supported(2, [0.5, 0.25, 0.125])
        assert list(w.squares([1, 2, 4, 5, 9, 10])) == [0.5, 0.0, 0.25, 0.0, 0.125, 0.0]
        assert w.support_end == 9
        assert w.admissible

    def test_gap_supported_needs_a_above_one(self):
        with pytest.raises(ValueError):
            WeightSequence.gap_supported(1, [1.0])

    def test_constant_gap_values_are_flagged(self):
        w = WeightSequence.gap_supported(2, [0.3] * 16)
        assert not w.admissible

    def test_zero_gap_values(self):
        w = WeightSequence.gap_supported(2, [0.0] * 5)
        assert w.support_end == 0
        assert not np.any(w.squares(np.arange(1, 100)))

    def test_scaled(self):
        w = WeightSequence.power(1).scaled(4)
        assert w.squares([2])[0] == pytest.approx(1.0)
        with pytest.raises(ValueError):
            w.scaled(-1)

    def test_composite_squares(self):
        a, b = WeightSequence.power(1), WeightSequence.explicit([1.0, 1.0])
        w = WeightSequence.composite(a, b)
        assert w.squares([1, 2, 3]) == pytest.approx([4.0, 2.25, 1 / 9])
        assert w.support_end is None

    def test_monotone_flags(self):
        assert WeightSequence.power(0.5).is_monotone
        assert WeightSequence.explicit([3.0, 2.0, 2.0]).is_monotone
        assert not WeightSequence.explicit([1.0, 2.0]).is_monotone
        assert not WeightSequence.counterexample().is_monotone

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            WeightSequence.explicit([1.0, -0.5])


class TestTails:
    def test_weaker_method(self):
        assert weaker_method(TailMethod.FINITE_SUPPORT, TailMethod.INTEGRAL_TEST) is TailMethod.INTEGRAL_TEST
        assert weaker_method(TailMethod.GEOMETRIC, TailMethod.NONE) is TailMethod.NONE

    def test_tail_bound_properties(self):
        b = TailBound(1.0, 0.5, TailMethod.INTEGRAL_TEST, 0.25)
        assert (b.lower, b.upper) == (1.25, 1.5)
        assert b.scaled(2) == TailBound(2.0, 1.0, TailMethod.INTEGRAL_TEST, 0.5)

    def test_power_tail_brackets_exact_remainder(self, linear):
        b = weighted_tail(linear, WeightSequence.power(1), 100)
        exact = float(np.sum(np.arange(101, 10**6, dtype=float) ** -3))
        assert b.tail_lower <= exact <= b.tail_upper

    def test_lnln_tail_is_finite(self, linear):
        b = weighted_tail(linear, WeightSequence.sqrtlog_loglog(1), 1000)
        assert math.isfinite(b.tail_upper)
        assert b.method is TailMethod.INTEGRAL_TEST

    def test_finitely_supported_tail_is_exact(self, linear):
        w = WeightSequence.explicit([1.0, 1.0, 1.0])
        assert weighted_tail(linear, w, 2).tail_lower == pytest.approx(1 / 3)
        assert weighted_tail(linear, w, 3).tail_upper == 0.0

    def test_non_monotone_explicit_list_beyond_support(self, linear):
        w = WeightSequence.explicit([0.0, 1.0])
        assert weighted_tail(linear, w, 10).tail_upper == 0.0

    def test_counterexample_tail_is_finite(self, linear):
        b = weighted_tail(linear, WeightSequence.counterexample(), 200)
        assert math.isfinite(b.tail_upper)


class TestConfigSections:
    def test_spectrum_from_config(self):
        assert spectrum_from_config({"kind": "affine", "params": {"c": 2, "d": 1}}) == Spectrum.affine(2, 1)
        assert spectrum_from_config({}) == Spectrum.linear()

    def test_unknown_spectrum_parameter(self):
        with pytest.raises(ValueError, match="unknown parameters"):
            spectrum_from_config({"kind": "linear", "params": {"c": 2}})

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown spectrum kind"):
            spectrum_from_config({"kind": "cubic"})
        with pytest.raises(ValueError, match="unknown weight kind"):
            weights_from_config({"kind": "cubic"})

    def test_weights_from_config(self):
        w = weights_from_config({"kind": "power", "params": {"alpha": 0.3, "scale": 2.0}})
        assert w.kind is WeightKind.POWER
        assert w.alpha == 0.3
        assert w.scale == 2.0

    def test_composite_from_config(self):
        w = weights_from_config(
            {
                "kind": "composite",
                "params": {"parts": [{"kind": "power", "params": {"alpha": 1}}, {"kind": "zero"}]},
            }
        )
        assert w.squares([2])[0] == pytest.approx(0.25)

    def test_unknown_weight_parameter(self):
        with pytest.raises(ValueError):
            weights_from_config({"kind": "zero", "params": {"alpha": 1}})
