"""Tests for canonical_structures module."""

import numpy as np
import pytest

from calibration_workbench.canonical_structures import (
    StructureError,
    build_g2,
    build_special_unitary,
    build_spin7,
    build_unitary,
    cayley_from_g2,
    g2_form,
    g2_identity_residuals,
    hermitian_orientation,
    holomorphic_volume,
    kahler_form,
    normalization_factor,
    normalization_residual,
    phase_partner,
    phase_rotated,
    spin7_form,
    spin7_identity_residuals,
    unitary_identity_residuals,
    unitary_J,
    wirtinger_power,
)
from calibration_workbench.exterior_core import MultiForm, volume_form


class TestUnitary:
    """Tests for the U(n) and SU(n) blocks."""

    def test_kahler_form_in_c2(self):
        """Test Omega = e^{11'} + e^{22'} on frames ordered (1, 2, 1', 2')."""
        omega = build_unitary(2).form("Omega")
        assert omega == MultiForm.from_strings(4, {"13": 1, "24": 1})

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_j_squares_to_minus_one(self, n):
        """Test J^2 = -1 and that J maps e_a to -e_a'."""
        J = unitary_J(n)
        assert np.allclose(J @ J, -np.eye(2 * n))
        assert np.allclose(J[:, 0], -np.eye(2 * n)[:, n])

    @pytest.mark.parametrize("n,expected", [(1, 1), (2, -1), (3, -1), (4, 1)])
    def test_hermitian_orientation(self, n, expected):
        """Test the orientation sign of the frame order (1..n, 1'..n')."""
        assert hermitian_orientation(n) == expected

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_wirtinger_top_power_is_volume(self, n):
        """Test Omega^n / n! = dvol with the hermitian orientation."""
        structure = build_unitary(n)
        assert structure.phi(n).allclose(volume_form(structure.metric), 1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_identity_residuals(self, n):
        """Test that all SU(n) identities hold to machine precision."""
        residuals = unitary_identity_residuals(build_special_unitary(n))
        assert set(residuals) >= {"J_squared", "wirtinger_volume", "re_psi_plane", "normalization"}
        assert max(residuals.values()) <= 1e-12

    def test_normalization_of_holomorphic_volume(self):
        """Test that psi = (e^1 + i e^1') ^ ... satisfies the volume normalization."""
        psi = holomorphic_volume(3)
        assert normalization_residual(psi) <= 1e-12
        assert normalization_factor(psi) == pytest.approx(1.0)
        assert normalization_factor(2 * psi) == pytest.approx(2.0)

    def test_phase_partner_recovers_real_part(self):
        """Test Re psi = -Im psi(J., ., .)."""
        su3 = build_special_unitary(3)
        assert phase_partner(su3.form("im_psi"), su3.J).allclose(su3.form("re_psi"), 1e-12)

    def test_phase_rotation(self):
        """Test Re(e^{i pi/2} psi) = -Im psi."""
        su3 = build_special_unitary(3)
        rotated = phase_rotated(su3.form("psi_n0"), np.pi / 2)
        assert rotated.allclose(-su3.form("im_psi"), 1e-12)

    def test_kahler_form_needs_orthogonal_j(self):
        """Test that a J which is not g-orthogonal is rejected."""
        J = np.array([[0.0, 2.0], [-0.5, 0.0]])
        with pytest.raises(StructureError, match="not antisymmetric"):
            kahler_form(J)

    def test_wirtinger_power_needs_positive_k(self):
        """Test that k = 0 is rejected."""
        with pytest.raises(StructureError, match="k >= 1"):
            wirtinger_power(build_unitary(2).form("Omega"), 0)

    def test_small_dimensions_rejected(self):
        """Test that U(0) and SU(1) are rejected."""
        with pytest.raises(StructureError):
            build_unitary(0)
        with pytest.raises(StructureError, match="n >= 2"):
            build_special_unitary(1)

    def test_missing_form(self):
        """Test that asking for an absent form lists the available ones."""
        with pytest.raises(StructureError, match="Available: Omega"):
            build_unitary(2).form("psi_n0")


class TestG2:
    """Tests for the G2 block."""

    def test_identities(self):
        """Test that the metric, volume and chi identities hold."""
        residuals = g2_identity_residuals(build_g2())
        assert max(residuals.values()) <= 1e-12

    def test_psi_on_xi0(self):
        """Test psi(e_1, e_2, e_3) = 1."""
        assert g2_form().evaluate(*np.eye(7)[:3]) == pytest.approx(1.0)

    def test_chi_has_seven_components(self):
        """Test that chi is an R^7-valued 3-form vanishing on xi0."""
        chi = build_g2().form("chi")
        assert chi.fiber_dim == 7
        assert chi.degree == 3
        assert chi.restrict((0, 1, 2)).is_zero()

    def test_asd_basis_has_three_forms(self):
        """Test that the anti-self-dual basis has three elements."""
        assert len(build_g2().form("asd_basis")) == 3


class TestSpin7:
    """Tests for the Spin(7) block."""

    def test_identities(self):
        """Test self-duality, Phi ^ Phi = 14 dvol and tau on the Cayley plane."""
        residuals = spin7_identity_residuals(build_spin7())
        assert max(residuals.values()) <= 1e-12

    def test_fourteen_terms(self):
        """Test that the Cayley form has fourteen unit terms."""
        phi = spin7_form()
        assert len(phi.coeffs) == 14
        assert all(abs(v) == 1 for v in phi.coeffs.values())

    def test_cayley_from_g2(self):
        """Test that e^0 ^ psi + *psi reproduces the Cayley form."""
        assert cayley_from_g2(g2_form()).allclose(spin7_form(), 1e-12)

    def test_tau_has_seven_components(self):
        """Test that tau is an R^7-valued 4-form."""
        tau = build_spin7().form("tau")
        assert tau.fiber_dim == 7
        assert tau.degree == 4
