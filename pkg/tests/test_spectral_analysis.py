import math

import numpy as np
import pytest

from criteria import criteria_tables
from operator_lab import (
    PerturbationMatrix,
    TruncatedOperator,
    build_truncated_T,
    random_certified_perturbation,
    zero_perturbation,
)
from scenarios import make_counterexample
from sequence_models import BoxRegion, DiscRegion, WeightSequence
from spectral_analysis import (
    ContourError,
    DefectiveEigenvalueError,
    EigenPair,
    RankOneProjection,
    SpectralParams,
    analyze_spectrum,
    basis_condition_number,
    disjointness_residual,
    eigensystem,
    localization_report,
    rank_one_disjointness,
    riesz_projection_box,
    riesz_projection_contour,
    riesz_projection_eig,
    riesz_quadratic_sum,
    series_term_check,
    unit_vector,
)


@pytest.fixture
def diagonal_T(linear, zero_weights):
    return build_truncated_T(linear, zero_perturbation(zero_weights, 8), 8)


@pytest.fixture
def counterexample_T():
    spec, _, V = make_counterexample(3)
    return build_truncated_T(spec, V, V.size)


def _pair_near(eigs, target):
    return min(eigs, key=lambda p: abs(p.value - target))


class TestEigensystem:
    def test_diagonal_operator(self, diagonal_T):
        eigs = eigensystem(diagonal_T)
        assert [p.value for p in eigs] == pytest.approx(list(range(1, 9)))
        for n, pair in enumerate(eigs, start=1):
            assert pair.simple
            assert abs(pair.pairing) == pytest.approx(1.0)
            assert abs(pair.right[n - 1]) == pytest.approx(1.0)

    def test_counterexample_block_norm(self, counterexample_T):
        eigs = eigensystem(counterexample_T)
        for sign in (-1, 1):
            pair = _pair_near(eigs, 17.5 + sign / 6)
            assert pair.value == pytest.approx(17.5 + sign / 6, abs=1e-12)
            assert RankOneProjection.from_pair(pair).norm() == pytest.approx(3.0, rel=1e-9)

    def test_eigenvector_projection_matrix(self, counterexample_T):
        pair = _pair_near(eigensystem(counterexample_T), 17.5 + 1 / 6)
        P = riesz_projection_eig(pair)
        T = counterexample_T.matrix
        assert np.linalg.norm(P, 2) == pytest.approx(3.0, rel=1e-9)
        assert np.allclose(P @ P, P, atol=1e-10)
        assert np.allclose(P @ T, T @ P, atol=1e-8)
        assert np.trace(P) == pytest.approx(1.0)

    def test_defective_pair_rejected(self):
        e = np.array([1.0, 0.0], dtype=complex)
        pair = EigenPair(1.0, e, e, 1.0, clustered=True)
        with pytest.raises(DefectiveEigenvalueError):
            RankOneProjection.from_pair(pair)


class TestProjections:
    def test_rank_one_matrix(self):
        P = RankOneProjection.coordinate(2, 3)
        assert np.array_equal(P.matrix(), np.diag([0, 1, 0]).astype(complex))
        assert P.norm() == 1.0
        assert P.idempotency_residual() == 0.0

    def test_contour_matches_coordinate_projection(self, diagonal_T):
        P = riesz_projection_contour(diagonal_T, 3.0, 0.5)
        expected = np.zeros((8, 8))
        expected[2, 2] = 1.0
        assert np.max(np.abs(P - expected)) < 1e-10

    def test_contour_around_one_block_eigenvalue(self, counterexample_T):
        lam = np.linalg.eigvals(counterexample_T.matrix)
        P = riesz_projection_contour(counterexample_T, 17.5 + 1 / 6, 1 / 12, eigenvalues=lam)
        assert np.linalg.norm(P, 2) == pytest.approx(3.0, rel=1e-8)
        pair = _pair_near(eigensystem(counterexample_T), 17.5 + 1 / 6)
        assert np.linalg.norm(P - RankOneProjection.from_pair(pair).matrix(), 2) < 1e-8

    def test_contour_around_whole_block(self, counterexample_T):
        P = riesz_projection_contour(counterexample_T, 17.5, 0.5)
        expected = np.zeros((20, 20))
        expected[16, 16] = expected[17, 17] = 1.0
        assert np.max(np.abs(P - expected)) < 1e-10

    def test_eigenvalue_on_circle(self, diagonal_T):
        with pytest.raises(ContourError):
            riesz_projection_contour(diagonal_T, 3.0, 1.0)

    def test_contour_parameters(self, diagonal_T):
        with pytest.raises(ValueError):
            riesz_projection_contour(diagonal_T, 3.0, 0.5, quad_nodes=8)
        with pytest.raises(ValueError):
            riesz_projection_contour(diagonal_T, 3.0, 0.0)

    def test_box_projection_rank(self, diagonal_T):
        S = riesz_projection_box(diagonal_T, BoxRegion(1.0, 1.0, 2.5))
        assert np.trace(S).real == pytest.approx(2.0, abs=1e-10)
        with pytest.raises(ContourError):
            riesz_projection_box(diagonal_T, BoxRegion(1.0, 1.0, 3.0))


class TestDisjointness:
    def test_coordinate_projections(self):
        projs = [RankOneProjection.coordinate(n, 4) for n in range(1, 5)]
        assert disjointness_residual(projs) == pytest.approx(0.0, abs=1e-14)
        assert rank_one_disjointness(projs) == pytest.approx(0.0, abs=1e-14)

    def test_duplicate_projection_detected(self):
        P = RankOneProjection.coordinate(1, 3)
        assert rank_one_disjointness([P, P]) == pytest.approx(1.0)
        assert disjointness_residual([P, P.matrix()]) == pytest.approx(1.0)

    def test_counterexample_projections(self, counterexample_T):
        projs = [RankOneProjection.from_pair(p) for p in eigensystem(counterexample_T)]
        assert rank_one_disjointness(projs) < 1e-9

    def test_empty(self):
        with pytest.raises(ValueError):
            rank_one_disjointness([])


class TestRieszSums:
    def test_unperturbed_sum_vanishes(self, rng):
        projs = {n: RankOneProjection.coordinate(n, 6) for n in range(1, 7)}
        total, terms = riesz_quadratic_sum(projs, projs, unit_vector(rng, 6), 2)
        assert total == 0.0
        assert sorted(terms) == [2, 3, 4, 5, 6]

    def test_unit_vector_required(self):
        projs = {1: RankOneProjection.coordinate(1, 2)}
        with pytest.raises(ValueError, match="unit norm"):
            riesz_quadratic_sum(projs, projs, np.ones(2), 1)


class TestSeriesTerms:
    @pytest.fixture
    def power_setup(self, linear, power_one):
        V = random_certified_perturbation(power_one, 300, np.random.default_rng(5))
        _, n_star = criteria_tables(linear, power_one, 1200, 2400).certified_indices()
        f = unit_vector(np.random.default_rng(6), 300)
        return linear, power_one, V, n_star, f

    def test_first_term_matches_residues(self, power_setup):
        spec, w, V, n_star, f = power_setup
        check = series_term_check(spec, w, V, 0, n_star, f)
        assert check.residue is not None
        assert check.lhs == pytest.approx(check.residue, rel=1e-8)

    @pytest.mark.parametrize("s", range(5))
    def test_terms_within_bounds(self, power_setup, s):
        spec, w, V, n_star, f = power_setup
        check = series_term_check(spec, w, V, s, n_star, f)
        assert check.tau <= 0.25 + 1e-12
        assert check.lhs <= check.bound_tau + 1e-12
        assert check.lhs <= check.bound_halving + 1e-12
        if s:
            assert check.residue is None

    def test_exponent_range(self, power_setup):
        spec, w, V, n_star, f = power_setup
        with pytest.raises(ValueError):
            series_term_check(spec, w, V, 7, n_star, f)
        with pytest.raises(ValueError):
            series_term_check(spec, w, V, 0, 290, f)


class TestLocalization:
    def test_regions_assignment(self, diagonal_T):
        eigs = eigensystem(diagonal_T)
        regs = [BoxRegion(1.0, 1.0, 2.5)] + [DiscRegion(k, float(k), 0.5) for k in range(3, 7)]
        report = localization_report(eigs, regs, edge=6.0)
        assert report.labels[:6] == ("box", "box", "disc:3", "disc:4", "disc:5", "disc:6")
        assert report.box_count == 2
        assert report.disc_counts == {3: 1, 4: 1, 5: 1, 6: 1}
        assert report.excluded == (7, 8)
        assert report.outside == ()

    def test_condition_number_of_orthonormal_basis(self, diagonal_T):
        eigs = eigensystem(diagonal_T)
        assert basis_condition_number(eigs, (1, 8)) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            basis_condition_number(eigs, (0, 3))

    def test_condition_number_grows_with_block_norm(self, counterexample_T):
        eigs = eigensystem(counterexample_T)
        assert basis_condition_number(eigs, (1, 20)) > 3.0


class TestPipeline:
    def test_unperturbed_operator_passes(self, linear, zero_weights, rng):
        T = build_truncated_T(linear, zero_perturbation(zero_weights, 50), 50)
        report = analyze_spectrum(T, SpectralParams(size=50, draws=4), rng)
        assert report.passed
        assert (report.n0, report.n_star) == (2, 3)
        assert (report.h1, report.h2) == (1.0, 1.0)
        assert report.box_rank == 2
        assert len(report.projections) == 42
        assert len(report.localization.excluded) == 6
        assert report.condition_number == pytest.approx(1.0)
        assert report.riesz_sums == [0.0] * 4
        assert {"contour_agreement", "rank_additivity", "localization"} <= set(report.checks)

    def test_buffer_too_large(self, diagonal_T, rng):
        with pytest.raises(ValueError, match="edge buffer"):
            analyze_spectrum(diagonal_T, SpectralParams(size=8, buffer=7), rng)

    def test_eigenvalues_outside_regions_fail_localization(self, linear, rng):
        # 2x2 block at n = 20, 21 with eigenvalues 20.5 +- i sqrt(3)/2
        w = WeightSequence.explicit([1.0] * 40)
        entries = np.zeros((40, 40), dtype=complex)
        entries[19, 20] = -1.0
        entries[20, 19] = 1.0
        T = build_truncated_T(linear, PerturbationMatrix(entries, w), 40)
        report = analyze_spectrum(T, SpectralParams(size=40, n0=10, draws=2, box_contour_max_size=10), rng)
        assert len(report.localization.outside) == 2
        assert report.checks["localization"] is False
        assert not report.passed
        eigs = eigensystem(T)
        in_disc = [eigs[i] for i, label in enumerate(report.localization.labels) if label.startswith("disc:")]
        assert report.condition_number == pytest.approx(basis_condition_number(in_disc, (1, len(in_disc))))

    @pytest.mark.slow
    def test_counterexample_projection_norms(self, rng):
        spec, _, V = make_counterexample(30)
        T = build_truncated_T(spec, V, V.size)
        assert T.size == 1802
        eigs = eigensystem(T)
        for m in range(1, 31):
            for sign in (-1, 1):
                target = 2 * m * m - 0.5 + sign / (2 * m)
                pair = _pair_near(eigs, target)
                assert abs(pair.value - target) <= 1e-9
                assert RankOneProjection.from_pair(pair).norm() == pytest.approx(m, abs=1e-8)

        report = analyze_spectrum(T, SpectralParams(size=T.size, buffer=2, draws=2), rng)
        norms = {row.n: row.norm for row in report.projections}
        for m in range(2, 31):
            for n in (2 * m * m - 1, 2 * m * m):
                if n in norms:
                    assert norms[n] == pytest.approx(m, abs=1e-8)
        assert 2 * 30 * 30 in norms
        assert any("contour checks skipped" in note for note in report.notes)


class TestSimilarity:
    def test_permutation_leaves_diagnostics_unchanged(self, linear, rng):
        w = WeightSequence.power(1.0)
        T = build_truncated_T(linear, random_certified_perturbation(w, 24, rng, 0.3), 24)
        perm = rng.permutation(24)
        permuted = TruncatedOperator(T.matrix[np.ix_(perm, perm)], T.spectrum, T.weights)
        eigs, eigs_p = eigensystem(T), eigensystem(permuted)
        values = np.array([p.value for p in eigs])
        values_p = np.array([p.value for p in eigs_p])
        assert np.max(np.abs(values - values_p)) <= 1e-10
        norms = [RankOneProjection.from_pair(p).norm() for p in eigs]
        norms_p = [RankOneProjection.from_pair(p).norm() for p in eigs_p]
        assert norms_p == pytest.approx(norms, rel=1e-10)
        assert basis_condition_number(eigs_p, (1, 24)) == pytest.approx(
            basis_condition_number(eigs, (1, 24)), rel=1e-10
        )
