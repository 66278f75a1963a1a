"""Tests for exterior_core module."""

from types import SimpleNamespace

import numpy as np
import pytest

from calibration_workbench.canonical_structures import g2_form, spin7_form
from calibration_workbench.exterior_core import (
    FormError,
    FrameMetric,
    MultiForm,
    VectorForm,
    basis_one_form,
    hodge_star,
    inner,
    interior,
    lie_derivative_parallel,
    norm,
    permutation_sign,
    restrict,
    stabilizer_algebra,
    volume_form,
    wedge,
)


def e(dim, text, value=1.0):
    return MultiForm.from_strings(dim, {text: value})


class TestPermutationSign:
    """Tests for permutation_sign function."""

    def test_even_permutation(self):
        """Test that a cyclic shift of three indices is even."""
        assert permutation_sign((2, 0, 1)) == (1, (0, 1, 2))

    def test_odd_permutation(self):
        """Test that a transposition is odd."""
        assert permutation_sign((1, 0)) == (-1, (0, 1))

    def test_repeated_index(self):
        """Test that a repeated index gives sign 0."""
        assert permutation_sign((1, 1, 2)) == (0, ())


class TestFrameMetric:
    """Tests for FrameMetric class."""

    def test_rejects_non_symmetric(self):
        """Test that a non-symmetric matrix is rejected."""
        with pytest.raises(FormError, match="symmetric"):
            FrameMetric(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        """Test that an indefinite matrix is rejected."""
        with pytest.raises(FormError, match="positive-definite"):
            FrameMetric(np.diag([1.0, -1.0]))

    def test_rejects_bad_orientation(self):
        """Test that orientations other than +1 and -1 are rejected."""
        with pytest.raises(FormError, match="Orientation"):
            FrameMetric(np.eye(2), orientation=0)

    def test_volume_factor(self):
        """Test that the volume factor is orientation * sqrt(det g)."""
        metric = FrameMetric(np.diag([4.0, 1.0, 1.0]), orientation=-1)
        assert metric.volume_factor == pytest.approx(-2.0)
        assert volume_form(metric).coefficient((0, 1, 2)) == pytest.approx(-2.0)


class TestMultiForm:
    """Tests for MultiForm construction and arithmetic."""

    def test_from_strings_is_one_based(self):
        """Test that digit strings name 1-based frame indices."""
        form = e(7, "147")
        assert form.coeffs == {(0, 3, 6): 1.0}

    def test_from_strings_sorts_with_sign(self):
        """Test that unsorted strings pick up the permutation sign."""
        assert e(3, "21") == -e(3, "12")

    def test_from_strings_rejects_mixed_degrees(self):
        """Test that strings of different lengths are rejected."""
        with pytest.raises(FormError, match="same length"):
            MultiForm.from_strings(4, {"12": 1, "123": 1})

    def test_from_strings_rejects_zero_digit(self):
        """Test that the digit 0 is rejected."""
        with pytest.raises(FormError, match="digits 1-9"):
            MultiForm.from_strings(4, {"01": 1})

    def test_rejects_degree_above_dim(self):
        """Test that degree must not exceed dimension."""
        with pytest.raises(FormError, match="out of range"):
            MultiForm(3, 4)

    def test_rejects_unsorted_keys(self):
        """Test that direct construction needs increasing index tuples."""
        with pytest.raises(FormError, match="strictly increasing"):
            MultiForm(3, 2, {(1, 0): 1.0})

    def test_zero_coefficients_dropped(self):
        """Test that zero coefficients are not stored."""
        assert MultiForm(3, 1, {(0,): 0.0, (1,): 2.0}).coeffs == {(1,): 2.0}

    def test_addition_requires_matching_degree(self):
        """Test that forms of different degree cannot be added."""
        with pytest.raises(FormError, match="Incompatible"):
            e(3, "1") + e(3, "12")

    def test_scalar_multiplication_both_sides(self):
        """Test that numpy and python scalars multiply from either side."""
        form = e(3, "12")
        assert (np.float64(2.0) * form).coefficient((0, 1)) == 2.0
        assert (form * 3).coefficient((0, 1)) == 3.0

    def test_complex_parts(self):
        """Test real, imag and conj of a complex form."""
        form = e(2, "1") + 1j * e(2, "2")
        assert form.scalar_kind == "complex"
        assert form.real == e(2, "1")
        assert form.imag == e(2, "2")
        assert form.conj() == e(2, "1") - 1j * e(2, "2")

    def test_coefficient_is_antisymmetric(self):
        """Test that coefficient lookups follow index order."""
        form = e(3, "123", 2.0)
        assert form.coefficient((1, 0, 2)) == -2.0
        assert form.coefficient((0, 0, 2)) == 0.0

    def test_tensor_round_trip(self):
        """Test that the dense tensor recovers the form."""
        psi = g2_form()
        assert MultiForm.from_tensor(psi.to_tensor()) == psi

    def test_evaluate_determinant_convention(self):
        """Test that e^{12}(e_1, e_2) = 1."""
        basis = np.eye(3)
        assert e(3, "12").evaluate(basis[0], basis[1]) == pytest.approx(1.0)
        assert e(3, "12").evaluate(basis[1], basis[0]) == pytest.approx(-1.0)

    def test_evaluate_wrong_count(self):
        """Test that the number of vectors must match the degree."""
        with pytest.raises(FormError, match="Expected 2 vectors"):
            e(3, "12").evaluate(np.eye(3)[0])

    def test_pullback_swap(self):
        """Test that pulling back along a swap flips the sign."""
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert e(2, "12").pullback(swap) == -e(2, "12")

    def test_derivation_is_trace_on_top_degree(self):
        """Test that an endomorphism acts on a top form by its trace."""
        assert e(2, "12").derivation(np.diag([2.0, 3.0])) == e(2, "12", 5.0)

    def test_derivation_kills_invariant_form(self):
        """Test that a rotation of the (1,2)-plane preserves e^{12}."""
        rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
        assert e(2, "12").derivation(rotation).is_zero()


class TestVectorForm:
    """Tests for VectorForm class."""

    def test_rejects_mixed_components(self):
        """Test that components must share degree."""
        with pytest.raises(FormError, match="share degree"):
            VectorForm((e(3, "1"), e(3, "12")))

    def test_evaluate_componentwise(self):
        """Test that evaluation returns one value per component."""
        chi = VectorForm((e(3, "12"), e(3, "13")))
        basis = np.eye(3)
        assert np.allclose(chi.evaluate(basis[0], basis[2]), [0.0, 1.0])
        assert chi.fiber_dim == 2


class TestWedgeAndInterior:
    """Tests for wedge and interior."""

    def test_one_forms_anticommute(self):
        """Test that e^1 ^ e^2 = -e^2 ^ e^1."""
        a, b = basis_one_form(3, 0), basis_one_form(3, 1)
        assert wedge(a, b) == -wedge(b, a)
        assert wedge(a, a).is_zero()

    def test_operator_alias(self):
        """Test that ^ is the wedge product."""
        a, b = basis_one_form(3, 0), basis_one_form(3, 1)
        assert (a ^ b) == e(3, "12")

    def test_degree_overflow(self):
        """Test that total degree above the dimension raises."""
        with pytest.raises(FormError, match="exceeds dimension"):
            wedge(e(3, "12"), e(3, "23"))

    def test_interior(self):
        """Test contraction signs."""
        basis = np.eye(3)
        assert interior(basis[0], e(3, "12")) == e(3, "2")
        assert interior(basis[1], e(3, "12")) == -e(3, "1")

    def test_interior_rejects_scalar(self):
        """Test that a degree-0 form cannot be contracted."""
        with pytest.raises(FormError, match="degree-0"):
            interior(np.zeros(3), MultiForm.scalar(3, 1.0))


class TestHodgeStar:
    """Tests for hodge_star, inner and norm."""

    def test_star_in_three_dimensions(self):
        """Test *e^1 = e^{23} and *e^2 = -e^{13}."""
        metric = FrameMetric.identity(3)
        assert hodge_star(e(3, "1"), metric) == e(3, "23")
        assert hodge_star(e(3, "2"), metric) == -e(3, "13")

    @pytest.mark.parametrize("dim,degree", [(3, 1), (4, 2), (7, 3), (7, 4)])
    def test_star_squared(self, dim, degree):
        """Test ** = (-1)^{k(n-k)} on random forms."""
        rng = np.random.default_rng(dim * 10 + degree)
        metric = FrameMetric.identity(dim)
        size = len(MultiForm.zero(dim, degree).coefficient_vector())
        form = MultiForm.from_vector(dim, degree, rng.standard_normal(size))
        twice = hodge_star(hodge_star(form, metric), metric)
        assert twice.allclose((-1) ** (degree * (dim - degree)) * form, 1e-12)

    def test_star_with_non_orthonormal_metric(self):
        """Test that a ^ *a = <a, a> dvol for g = diag(4, 1, 1)."""
        metric = FrameMetric(np.diag([4.0, 1.0, 1.0]))
        star = hodge_star(e(3, "1"), metric)
        assert star == e(3, "23", 0.5)
        assert wedge(e(3, "1"), star) == inner(e(3, "1"), e(3, "1"), metric) * volume_form(metric)

    def test_star_reverses_with_orientation(self):
        """Test that the opposite orientation negates the star."""
        assert hodge_star(e(3, "1"), FrameMetric.identity(3, -1)) == -e(3, "23")

    def test_g2_forms_have_norm_sqrt7(self):
        """Test |psi| = |*psi| = sqrt(7)."""
        psi = g2_form()
        assert norm(psi) == pytest.approx(np.sqrt(7))
        assert norm(hodge_star(psi, FrameMetric.identity(7))) == pytest.approx(np.sqrt(7))

    def test_cayley_form_is_self_dual(self):
        """Test that the canonical Cayley form equals its Hodge dual."""
        phi = spin7_form()
        assert hodge_star(phi, FrameMetric.identity(8)) == phi


class TestRestrict:
    """Tests for restrict function."""

    def test_restrict_to_plane(self):
        """Test that psi restricted to e_1, e_2, e_3 is the volume form there."""
        assert restrict(g2_form(), (0, 1, 2)) == e(3, "123")

    def test_order_carries_orientation(self):
        """Test that the tangent index order sets the orientation."""
        assert restrict(e(4, "12"), (1, 0)) == -e(2, "12")

    def test_small_subset_gives_zero_scalar(self):
        """Test that a subset smaller than the degree gives the zero scalar."""
        result = restrict(g2_form(), (0, 1))
        assert result.degree == 0 and result.is_zero()

    def test_rejects_repeated_indices(self):
        """Test that repeated tangent indices are rejected."""
        with pytest.raises(FormError, match="Invalid tangent"):
            restrict(e(4, "12"), (0, 0))


class TestLieDerivative:
    """Tests for lie_derivative_parallel function."""

    def test_constant_field_on_flat_frame(self):
        """Test that a constant field preserves a constant form when the connection vanishes."""
        flat = SimpleNamespace(omega=np.zeros((3, 3, 3)))
        assert lie_derivative_parallel([1.0, 2.0, 3.0], e(3, "12"), flat).is_zero()

    def test_frame_derivative_term(self):
        """Test L_V e^1 = e^2 for V = x^2 e_1."""
        flat = SimpleNamespace(omega=np.zeros((2, 2, 2)))
        dV = np.zeros((2, 2))
        dV[1, 0] = 1.0
        assert lie_derivative_parallel([0.0, 0.0], e(2, "1"), flat, dV) == e(2, "2")

    def test_rejects_scalar(self):
        """Test that degree-0 forms are rejected."""
        flat = SimpleNamespace(omega=np.zeros((2, 2, 2)))
        with pytest.raises(FormError):
            lie_derivative_parallel([0.0, 0.0], MultiForm.scalar(2, 1.0), flat)


class TestStabilizer:
    """Tests for stabilizer_algebra function."""

    def test_kahler_form_stabilizer_is_u2(self):
        """Test that the stabilizer of e^{12} + e^{34} in so(4) has dimension 4."""
        omega = MultiForm.from_strings(4, {"12": 1, "34": 1})
        assert len(stabilizer_algebra([omega])) == 4

    def test_g2_stabilizer_has_dimension_14(self):
        """Test that the associative form is preserved by a 14-dimensional algebra."""
        assert len(stabilizer_algebra([g2_form()])) == 14

    def test_spin7_stabilizer_has_dimension_21(self):
        """Test that the Cayley form is preserved by a 21-dimensional algebra."""
        assert len(stabilizer_algebra([spin7_form()])) == 21
