"""Tests for chart_hermitian module."""

import numpy as np
import pytest

from calibration_workbench.chart_hermitian import (
    ChartError,
    HermitianChart,
    InvariantMetricProfile,
    bismut_flatten,
    bismut_ricci,
    calabi_like_profile,
    canonical_connection_factor,
    chern_flatten,
    chern_ricci,
    conformal_chart,
    conformal_lemma_check,
    convergence_ratio,
    flat_chart,
    holomorphic_partial,
    iwasawa_chart,
    kahler_potential_chart,
    lee_form,
    levi_matrix,
    polynomial_chart,
    profile_nodes,
    profile_residual,
    random_kahler_chart,
    random_polynomial,
    ricci_relation_residual,
    richardson,
)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


Z2 = np.array([0.1 + 0.2j, -0.15 + 0.05j])
Z3 = np.array([0.1 - 0.1j, 0.2 + 0.05j, -0.1 + 0.15j])


class TestHermitianChart:
    """Tests for HermitianChart validation."""

    def test_wrong_shape(self):
        """Test that the metric must be n x n."""
        chart = HermitianChart(2, lambda z: np.eye(3))
        with pytest.raises(ChartError, match="must be 2 x 2"):
            chart.metric(Z2)

    def test_not_hermitian(self):
        """Test that a non-hermitian matrix is rejected."""
        chart = HermitianChart(2, lambda z: np.array([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(ChartError, match="not hermitian"):
            chart.metric(Z2)

    def test_not_positive(self):
        """Test that an indefinite matrix is rejected."""
        chart = HermitianChart(2, lambda z: np.diag([1.0, -1.0]))
        with pytest.raises(ChartError, match="positive-definite"):
            chart.metric(Z2)

    def test_with_step(self):
        """Test that with_step changes only the step."""
        chart = flat_chart(2, 1e-4)
        coarse = chart.with_step(1e-2)
        assert coarse.fd_step == 1e-2
        assert coarse.n == 2 and chart.fd_step == 1e-4

    def test_log_det(self):
        """Test log det of a scaled identity."""
        chart = HermitianChart(3, lambda z: 2.0 * np.eye(3))
        assert chart.log_det(Z3) == pytest.approx(3 * np.log(2.0))


class TestDifferences:
    """Tests for the complex central differences."""

    def test_holomorphic_partial_of_square(self):
        """Test d z^2 = 2z and d-bar z^2 = 0."""
        fn = lambda w: w[0] ** 2
        z = np.array([0.3 - 0.2j])
        assert holomorphic_partial(fn, z, 0, 1e-4) == pytest.approx(2 * z[0], abs=1e-8)
        assert holomorphic_partial(fn, z, 0, 1e-4, conjugate=True) == pytest.approx(0.0, abs=1e-8)

    def test_holomorphic_partial_of_modulus(self):
        """Test d |z|^2 = z-bar."""
        fn = lambda w: abs(w[0]) ** 2
        z = np.array([0.3 - 0.2j])
        assert holomorphic_partial(fn, z, 0, 1e-4) == pytest.approx(np.conj(z[0]), abs=1e-8)

    def test_levi_matrix(self):
        """Test d-bar d (|z_1|^2 + 2|z_2|^2) = diag(1, 2)."""
        fn = lambda w: abs(w[0]) ** 2 + 2 * abs(w[1]) ** 2
        assert np.allclose(levi_matrix(fn, Z2, 2, 1e-3), np.diag([1.0, 2.0]), atol=1e-6)

    def test_levi_matrix_off_diagonal(self):
        """Test that Re(z_1 z-bar_2) has Levi matrix with off-diagonal 1/2."""
        fn = lambda w: float(np.real(w[0] * np.conj(w[1])))
        L = levi_matrix(fn, Z2, 2, 1e-3)
        assert np.allclose(L, [[0.0, 0.5], [0.5, 0.0]], atol=1e-6)

    def test_convergence_ratio(self):
        """Test that a quadratic error gives ratio 4."""
        assert convergence_ratio(lambda h: 3.0 * h ** 2, 0.1) == pytest.approx(4.0)
        assert convergence_ratio(lambda h: 0.0, 0.1) == 1.0

    def test_richardson_cancels_quadratic_error(self):
        """Test that an error a h^2 + b h^4 leaves only the h^4 part after extrapolation."""
        quantity = lambda h: np.array([1.0 + 2.0 * h ** 2 + 5.0 * h ** 4])
        assert richardson(quantity, 0.1)[0] == pytest.approx(1.0 - 5.0 * 0.1 ** 4 / 4)

    def test_richardson_on_levi_matrix(self):
        """Test that extrapolation recovers d-bar d |z_1|^4 = 4|z_1|^2 where the plain step does not."""
        fn = lambda w: abs(w[0]) ** 4
        exact = np.diag([4 * abs(Z2[0]) ** 2, 0.0])
        plain = np.abs(levi_matrix(fn, Z2, 2, 1e-2) - exact).max()
        extrapolated = np.abs(richardson(lambda h: levi_matrix(fn, Z2, 2, h), 1e-2) - exact).max()
        assert plain > 1e-6
        assert extrapolated <= 1e-9


class TestRicciForms:
    """Tests for Lee form and Ricci forms."""

    def test_flat_chart(self):
        """Test that the flat chart has vanishing Lee form and Ricci forms."""
        chart = flat_chart(2)
        assert np.abs(lee_form(chart, Z2)).max() <= 1e-10
        assert np.abs(chern_ricci(chart, Z2)).max() <= 1e-10
        rho = bismut_ricci(chart, Z2)
        assert np.abs(rho.rho_11).max() <= 1e-10
        assert np.abs(rho.rho_20).max() <= 1e-10

    def test_kahler_chart_lee_form(self, rng):
        """Test that a Kähler chart has vanishing Lee form."""
        chart = random_kahler_chart(3, rng)
        assert np.abs(lee_form(chart, Z3)).max() <= 1e-6

    def test_kahler_ricci_forms_agree(self, rng):
        """Test that Bismut and Chern Ricci forms coincide on a Kähler chart."""
        chart = random_kahler_chart(2, rng)
        rho = bismut_ricci(chart, Z2)
        assert np.abs(rho.rho_11 - chern_ricci(chart, Z2)).max() <= 1e-5
        assert np.abs(rho.rho_20).max() <= 1e-5

    def test_kahler_potential_metric(self):
        """Test the closed-form metric at the origin and hermitian symmetry elsewhere."""
        chart = kahler_potential_chart(np.array([[0.2, 0.1], [0.1, 0.3]]))
        assert np.allclose(chart.metric(np.zeros(2)), np.eye(2))
        G = chart.metric(Z2)
        assert np.allclose(G, G.conj().T)

    def test_iwasawa_is_chern_flat_and_balanced(self):
        """Test that the Iwasawa chart has vanishing Chern Ricci form and Lee form."""
        chart = iwasawa_chart()
        assert np.abs(chern_ricci(chart, Z3)).max() <= 1e-6
        assert np.abs(lee_form(chart, Z3)).max() <= 1e-6

    def test_iwasawa_metric_depends_on_z1(self):
        """Test that the Iwasawa metric differs from the flat one away from z_1 = 0."""
        chart = iwasawa_chart()
        assert not np.allclose(chart.metric(Z3), np.eye(3))

    def test_ricci_relation(self, rng):
        """Test rho^c = rho^b + d(J theta) on a generic polynomial chart."""
        chart = polynomial_chart(2, rng)
        assert ricci_relation_residual(chart, Z2) <= 1e-5

    def test_ricci_relation_converges_second_order(self, rng):
        """Test that halving the step cuts the relation residual by about 4."""
        chart = polynomial_chart(2, rng)
        ratio = convergence_ratio(lambda h: ricci_relation_residual(chart.with_step(h), Z2), 1e-2)
        assert 3.0 <= ratio <= 5.0


class TestConformal:
    """Tests for conformal rescalings."""

    def test_conformal_chart(self):
        """Test that the conformal chart scales the metric by e^f."""
        chart = conformal_chart(flat_chart(2), lambda z: 1.0)
        assert np.allclose(chart.metric(Z2), np.e * np.eye(2))

    def test_lemma_on_kahler_chart(self, rng):
        """Test rho~ = rho + (2 - n) d-bar d f for a Kähler base."""
        chart = random_kahler_chart(3, rng)
        f = random_polynomial(3, rng)
        residuals = conformal_lemma_check(chart, f, Z3)
        assert residuals['rho_11'] <= 1e-5
        assert residuals['rho_20'] <= 1e-5

    def test_lemma_needs_n_at_least_2(self):
        """Test that n = 1 is rejected."""
        with pytest.raises(ChartError, match="n >= 2"):
            conformal_lemma_check(flat_chart(1), lambda z: 0.0, np.array([0.1j]))

    def test_lemma_in_dimension_2(self, rng):
        """Test that in complex dimension 2 the Bismut Ricci form is conformally invariant."""
        chart = polynomial_chart(2, rng)
        f = random_polynomial(2, rng)
        residuals = conformal_lemma_check(chart, f, Z2)
        assert residuals['rho_11'] <= 1e-5

    def test_extrapolated_lemma_beats_plain_step(self, rng):
        """Test that the extrapolated lemma residual is far below the plain one at a coarse step."""
        chart = polynomial_chart(3, rng, fd_step=1e-2)
        f = random_polynomial(3, rng)
        plain = conformal_lemma_check(chart, f, Z3)['rho_11']
        extrapolated = conformal_lemma_check(chart, f, Z3, extrapolate=True)['rho_11']
        assert extrapolated < 0.1 * plain

    def test_chern_flatten(self, rng):
        """Test that e^{h/n} g is Chern-Ricci flat when i rho^c = -d-bar d h."""
        u = random_polynomial(3, rng, amplitude=0.2)
        base = conformal_chart(flat_chart(3), u)
        flattened = chern_flatten(base, lambda w: -3.0 * u(w), [Z3])
        assert np.abs(chern_ricci(flattened, Z3)).max() <= 1e-6

    def test_chern_flatten_precondition(self, rng):
        """Test that a wrong potential is rejected."""
        u = random_polynomial(3, rng, amplitude=0.2)
        base = conformal_chart(flat_chart(3), u)
        with pytest.raises(ChartError, match="exceeds"):
            chern_flatten(base, lambda w: 3.0 * u(w), [Z3])

    def test_bismut_flatten(self, rng):
        """Test that the Bismut rescaling of e^u flat picks exponent 1 for f = -u in dimension 3."""
        u = random_polynomial(3, rng, amplitude=0.2)
        base = conformal_chart(flat_chart(3), u)
        result = bismut_flatten(base, lambda w: -u(w), [Z3])
        assert result.exponent == pytest.approx(1.0)
        assert result.residuals[1.0] <= 1e-5
        assert np.abs(bismut_ricci(result.chart, Z3).rho_11).max() <= 1e-5

    def test_bismut_flatten_checks_11_part(self, rng):
        """Test that a potential with the wrong sign is rejected before any rescaling."""
        u = random_polynomial(3, rng, amplitude=0.2)
        base = conformal_chart(flat_chart(3), u)
        with pytest.raises(ChartError, match="d-bar d f"):
            bismut_flatten(base, u, [Z3])

    def test_bismut_flatten_needs_n_3(self):
        """Test that n = 2 is rejected."""
        with pytest.raises(ChartError, match="n >= 3"):
            bismut_flatten(flat_chart(2), lambda z: 0.0, [Z2])


class TestInvariantProfiles:
    """Tests for U(n)-invariant metric profiles."""

    def test_flat_profile_factor_vanishes(self):
        """Test f = 0 for A = 1, B = 0."""
        profile = InvariantMetricProfile(lambda t: 1.0, lambda t: 0.0)
        for t in (0.5, 1.0, 2.0):
            assert canonical_connection_factor(profile, 3, t) == pytest.approx(0.0, abs=1e-9)

    def test_factor_with_constant_b(self):
        """Test f = 2(n-1)B + B/(1 + tB) for A = 1 and constant B."""
        profile = InvariantMetricProfile(lambda t: 1.0, lambda t: 0.5, lambda t: 0.0, lambda t: 0.0)
        expected = 2 * 1 * 0.5 + 0.5 / (1 + 0.5)
        assert canonical_connection_factor(profile, 2, 1.0) == pytest.approx(expected)

    def test_profile_chart_is_flat_for_trivial_profile(self):
        """Test that A = 1, B = 0 gives the flat metric."""
        chart = InvariantMetricProfile(lambda t: 1.0, lambda t: 0.0).chart(2)
        assert np.allclose(chart.metric(Z2), np.eye(2))

    def test_integrated_profile(self):
        """Test that the integrated B makes the factor vanish along the grid."""
        profile = InvariantMetricProfile(lambda t: 1.0, lambda t: 0.0, lambda t: 0.0, lambda t: 0.0)
        result = calabi_like_profile(profile, 2, np.linspace(0.5, 1.5, 11), b_initial=0.1)
        assert result.solved_B[0] == pytest.approx(0.1)
        assert result.solved_residual <= 1e-10
        assert np.allclose(result.f, 0.0)

    def test_integrated_profile_matches_closed_form(self):
        """Test the integrated B against B = 1/(84 t^3 - t) for A = 1, n = 2, B(0.5) = 0.1."""
        profile = InvariantMetricProfile(lambda t: 1.0, lambda t: 0.0, lambda t: 0.0, lambda t: 0.0)
        grid = np.linspace(0.5, 1.5, 11)
        result = calabi_like_profile(profile, 2, grid, b_initial=0.1)
        assert np.allclose(result.solved_B, 1.0 / (84 * grid ** 3 - grid), rtol=1e-9, atol=0.0)

    def test_residual_rejects_non_solution(self):
        """Test that samples of a B which does not solve f = 0 give a large residual."""
        profile = InvariantMetricProfile(lambda t: 1.0, lambda t: 0.0, lambda t: 0.0, lambda t: 0.0)
        grid = np.linspace(0.5, 1.5, 11)
        result = calabi_like_profile(profile, 2, grid, b_initial=0.1)
        wrong = np.linspace(7.0, -0.3, len(result.nodes))
        assert profile_residual(profile, 2, result.nodes, wrong, grid) > 1e-3
        perturbed = result.node_B * (1 + 1e-4 * np.sin(result.nodes))
        assert profile_residual(profile, 2, result.nodes, perturbed, grid) > 1e-8

    def test_residual_accepts_exact_samples(self):
        """Test that exact samples of the closed-form solution pass."""
        profile = InvariantMetricProfile(lambda t: 1.0, lambda t: 0.0, lambda t: 0.0, lambda t: 0.0)
        nodes = profile_nodes(0.5, 1.5)
        exact = 1.0 / (84 * nodes ** 3 - nodes)
        assert profile_residual(profile, 2, nodes, exact, np.linspace(0.5, 1.5, 11)) <= 1e-10

    def test_grid_must_start_positive(self):
        """Test that r^2 = 0 is rejected."""
        profile = InvariantMetricProfile(lambda t: 1.0, lambda t: 0.0)
        with pytest.raises(ChartError, match="r\\^2 > 0"):
            calabi_like_profile(profile, 2, [0.0, 1.0])

    def test_singular_profile(self):
        """Test that a non-positive A is rejected."""
        profile = InvariantMetricProfile(lambda t: -1.0, lambda t: 0.0)
        with pytest.raises(ChartError, match="singular"):
            calabi_like_profile(profile, 2, [0.5, 1.0])
