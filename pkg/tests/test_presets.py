"""Tests for presets module."""

import numpy as np
import pytest
import yaml

from calibration_workbench.coframe_calculus import CoframeError, d_invariant, parallel_residual
from calibration_workbench.exterior_core import MultiForm, norm
from calibration_workbench.presets import (
    ParametricPreset,
    PresetBinding,
    coframe_preset_names,
    export_preset,
    preset,
    preset_names,
    s6_pointwise,
)


class TestRegistry:
    """Tests for registry lookup."""

    def test_names(self):
        """Test that the registry lists group, quotient and parametric presets."""
        names = preset_names()
        for name in ("s3", "hopf_s3", "s3xs3_diagonal", "spin4_b13", "flag_f12", "g2_group",
                     "cayley_group", "iwasawa", "so5_so3", "s7_squashed", "aw_nm", "s6_pointwise"):
            assert name in names

    def test_coframe_names_exclude_parametric(self):
        """Test that parametric presets are not listed as coframes."""
        names = coframe_preset_names()
        assert "s3" in names
        assert "s7_squashed" not in names
        assert all(isinstance(preset(n), PresetBinding) for n in names)

    def test_unknown_name(self):
        """Test that unknown names list the registry."""
        with pytest.raises(CoframeError, match="Unknown preset 'nope'. Available: s3"):
            preset("nope")

    def test_lookup_is_cached(self):
        """Test that repeated lookups return the same object."""
        assert preset("g2_group") is preset("g2_group")

    def test_missing_form_and_submanifold(self):
        """Test that absent forms and sub-frames raise with the available names."""
        binding = preset("s3")
        with pytest.raises(CoframeError, match="has no form 'psi'"):
            binding.form("psi")
        with pytest.raises(CoframeError, match="declares no cayley submanifold"):
            binding.submanifold("cayley")


class TestCoframePresets:
    """Tests for the coframe presets."""

    @pytest.mark.parametrize("name", coframe_preset_names())
    def test_jacobi(self, name):
        """Test the Jacobi identity on the group behind every preset."""
        binding = preset(name)
        group = binding.extended if binding.cf.is_quotient else binding.cf
        assert group.jacobi_defect() <= 1e-12

    @pytest.mark.parametrize("name", coframe_preset_names())
    def test_parallel_forms(self, name):
        """Test that the declared connection preserves the declared parallel forms."""
        binding = preset(name)
        connection = binding.declared_connection()
        for form_name in binding.parallel_forms:
            assert parallel_residual(binding.form(form_name), connection) <= 1e-10

    def test_s3_structure_equation(self):
        """Test d sigma^1 = -sigma^2 ^ sigma^3."""
        cf = preset("s3").cf
        expected = -MultiForm.from_strings(3, {"23": 1})
        assert d_invariant(MultiForm.basis(3, (0,)), cf) == expected

    def test_flag_is_quotient(self):
        """Test that the flag manifold is a six-dimensional quotient of a nine-dimensional group."""
        binding = preset("flag_f12")
        assert binding.cf.is_quotient
        assert binding.cf.dim == 6
        assert binding.extended.dim == 9

    @pytest.mark.parametrize("name", ["spin4_b13", "flag_f12"])
    def test_nearly_kahler_psi_normalization(self, name):
        """Test |Im psi|^2 = 4 and Re psi = +1 on the declared tangent frame."""
        binding = preset(name)
        assert norm(binding.form("im_psi")) ** 2 == pytest.approx(4.0)
        frame = np.eye(6)
        tangent = binding.submanifold("sas")
        value = binding.form("re_psi").evaluate(*(frame[i] for i in tangent))
        assert np.real(value) > 0

    def test_iwasawa_candidate(self):
        """Test that the Iwasawa preset declares the constant candidate -J e_3."""
        mode, vector = preset("iwasawa").candidates["-Je3"]
        assert mode == "constant"
        assert np.allclose(vector, [0, 0, 0, 0, 0, 1])

    def test_so5_so3_parameters(self):
        """Test the recorded squashing parameters."""
        params = preset("so5_so3").params
        assert params['z'] == pytest.approx(np.sqrt(5.0))
        assert params['lam'] == pytest.approx(-1.2)


class TestParametricPresets:
    """Tests for the parametric presets."""

    def test_squashed_s7(self):
        """Test that both squashed branches solve the system."""
        result = preset("s7_squashed").solve(np.random.default_rng(0))
        assert result['residual'] <= 1e-12
        assert len(result['branches']) == 2

    def test_aloff_wallach(self):
        """Test that the N(1,1) system has at least one solution."""
        item = preset("aw_nm")
        assert isinstance(item, ParametricPreset)
        result = item.solve(np.random.default_rng(0))
        assert result['solutions']
        assert result['residual'] <= 1e-10

    def test_s6_pointwise(self):
        """Test J^2 = -1 and the Lagrangian coordinate 3-plane."""
        result = preset("s6_pointwise").solve(np.random.default_rng(0))
        assert result['j_squared'] <= 1e-12
        assert result['lagrangian'] <= 1e-12

    def test_s6_needs_nonzero_point(self):
        """Test that the origin is rejected."""
        with pytest.raises(CoframeError, match="non-zero"):
            s6_pointwise(np.zeros(7))


class TestExportPreset:
    """Tests for export_preset function."""

    def test_group_export(self):
        """Test the YAML record of S^3."""
        document = yaml.safe_load(export_preset("s3"))
        assert document['name'] == "s3"
        assert document['kind'] == "group"
        assert document['dim'] == 3
        assert [1, 2, 3, 1.0] in document['structure_constants']
        assert document['forms']['sigma3'] == {'3': 1.0}

    def test_quotient_export(self):
        """Test that quotients are marked as such and carry J."""
        document = yaml.safe_load(export_preset("flag_f12"))
        assert document['kind'] == "quotient"
        assert len(document['J']) == 6
        assert document['submanifolds'] == {'sas': '135'}

    def test_parametric_export(self):
        """Test that parametric presets export their description only."""
        document = yaml.safe_load(export_preset("s7_squashed"))
        assert document['kind'] == "parametric"
        assert document['params'] == {'lam': 1.0}

    def test_unknown(self):
        """Test that unknown presets raise."""
        with pytest.raises(CoframeError):
            export_preset("nope")
