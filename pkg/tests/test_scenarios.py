import math

import numpy as np
import pytest

from operator_lab import CertificateError, Storage
from scenarios import (
    REGISTRY,
    band_constant,
    build_scenario,
    counterexample_block,
    make_counterexample,
    make_finite_band,
    make_lnln,
    make_log_power,
    scenario_names,
)
from sequence_models import SpectrumKind, WeightKind, WeightSequence, omega


class TestCounterexample:
    def test_block_at_square(self):
        (lo, hi), norm = counterexample_block(9)
        assert lo == pytest.approx(17.5 - 1 / 6)
        assert hi == pytest.approx(17.5 + 1 / 6)
        assert norm == pytest.approx(3.0)

    def test_first_block_is_unperturbed(self):
        (lo, hi), norm = counterexample_block(1)
        assert (lo, hi) == (1.0, 2.0)
        assert norm == 1.0

    def test_non_square_block(self):
        (lo, hi), norm = counterexample_block(5)
        assert (lo, hi) == (9.0, 10.0)
        assert norm == 1.0

    def test_structure(self):
        spec, w, V = make_counterexample(3)
        assert spec.kind is SpectrumKind.LINEAR
        assert w.kind is WeightKind.COUNTEREXAMPLE
        assert V.size == 20
        assert V.storage is Storage.BANDED
        s = math.sqrt(8 / 9) / 2
        op = V.operator
        assert op[16, 17] == pytest.approx(s)
        assert op[17, 16] == pytest.approx(-s)
        assert abs(op[16, 17]) == pytest.approx(omega(w, 17) * omega(w, 18))
        assert np.count_nonzero(V.entries) == 2 * 2

    def test_size_too_small(self):
        with pytest.raises(ValueError, match="too small"):
            make_counterexample(3, size=17)
        with pytest.raises(ValueError):
            make_counterexample(0)


class TestFiniteBand:
    def test_zero_bands(self):
        w = WeightSequence.power(1)
        V = make_finite_band({-1: [0.0] * 4, 0: [0.0] * 5, 1: [0.0] * 4}, w)
        assert V.size == 5
        assert not np.any(V.entries)
        assert V.weights == w

    def test_diagonal_band_constant_one(self):
        w = WeightSequence.power(1)
        diag = w.squares(np.arange(1, 6))
        V = make_finite_band({0: diag}, w)
        assert V.certificate_constant() == pytest.approx(1.0)
        assert np.allclose(np.diag(V.operator), diag)

    def test_offdiagonal_orientation(self):
        w = WeightSequence.power(0.5)
        V = make_finite_band({1: [0.1, 0.0], -1: [0.0, 0.05], 0: [0.0, 0.0, 0.0]}, w)
        op = V.operator
        # V e_2 has b^(1)_1 = 0.1 in row 1
        assert op[0, 1] == pytest.approx(0.1)
        assert op[2, 1] == pytest.approx(0.05)

    def test_unknown_offset(self):
        with pytest.raises(ValueError, match="band offsets"):
            make_finite_band({2: [1.0]}, WeightSequence.power(1))

    def test_entry_on_zero_weight(self):
        w = WeightSequence.explicit([1.0, 0.0])
        with pytest.raises(CertificateError):
            make_finite_band({1: [0.5]}, w)

    def test_band_constant(self):
        w = WeightSequence.explicit([1.0, 1.0, 0.5])
        assert band_constant({1: [0.1, 0.2, 0.05]}, w) == pytest.approx(1.0)


class TestGenerators:
    def test_parameter_ranges(self):
        with pytest.raises(ValueError):
            make_lnln(0.5)
        with pytest.raises(ValueError):
            make_log_power(0.9)
        assert make_log_power(1)[1].kind is WeightKind.LOG_POWER


class TestRegistry:
    def test_names(self):
        assert scenario_names() == sorted(REGISTRY)
        assert {"counterexample", "lnln-decay", "log-power-fast"} <= set(scenario_names())

    def test_unknown_scenario(self, rng):
        with pytest.raises(ValueError, match="unknown scenario"):
            build_scenario("nope", rng=rng)

    def test_unknown_parameter(self, rng):
        with pytest.raises(ValueError, match="unknown parameters"):
            build_scenario("counterexample", {"alpha": 1}, rng)

    def test_counterexample_default_size(self, rng):
        scenario = build_scenario("counterexample", {"m_max": 4}, rng)
        assert scenario.perturbation.size == 34
        assert scenario.expected["g_decays"] == "fails"

    @pytest.mark.parametrize("name", ["lnln-decay", "gap-supported", "power-alpha", "log-power-fast"])
    def test_random_scenarios_are_certified(self, name, rng):
        scenario = build_scenario(name, rng=rng, size=40)
        assert scenario.perturbation.size == 40
        assert scenario.perturbation.certificate_constant() <= 1.0 + 1e-12

    def test_same_seed_same_matrix(self):
        a = build_scenario("power-alpha", rng=np.random.default_rng(7), size=10)
        b = build_scenario("power-alpha", rng=np.random.default_rng(7), size=10)
        assert np.array_equal(a.perturbation.entries, b.perturbation.entries)

    def test_finite_band_scenario(self, rng):
        scenario = build_scenario("finite-band", {"scale": 2.0}, rng, size=30)
        C = scenario.constants["certificate_constant"]
        assert C > 1.0
        assert scenario.weights.scale == pytest.approx(C)
        assert scenario.perturbation.certificate_constant() == pytest.approx(1.0)

    def test_log_power_expectation(self, rng):
        assert build_scenario("log-power-fast", {"a": 1.0}, rng, size=10).expected["g_tilde_bounded"] == "fails"
        assert build_scenario("log-power-fast", {"a": 2.0}, rng, size=10).expected["g_tilde_bounded"] == "holds"
