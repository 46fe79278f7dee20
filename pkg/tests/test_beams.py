import numpy as np
import pytest

from kinetostat import (
    BeamSegment,
    ComplianceMatrixError,
    KinetostatError,
    Transform,
    beam_compliance,
    load_compliance_matrix,
    serial_link_compliance,
)
from conftest import random_beam


def slender_beam(length=100.0, E=7e4, A=100.0, I=833.33):
    return BeamSegment(length=length, elastic_modulus=E, shear_modulus=2.63e4,
                       area=A, I_y=I, I_z=I, J_torsion=1.2 * I)


class TestBeamCompliance:
    def test_axial_term(self):
        c = beam_compliance(slender_beam()).values
        np.testing.assert_allclose(c[0, 0], 100.0 / (7e4 * 100.0), rtol=1e-12)

    def test_cantilever_tip_deflection(self):
        c = beam_compliance(slender_beam()).values
        np.testing.assert_allclose(c[1, 1], 100.0**3 / (3 * 7e4 * 833.33), rtol=1e-12)

    def test_torsion_and_rotation_terms(self):
        b = slender_beam()
        c = beam_compliance(b).values
        np.testing.assert_allclose(c[3, 3], b.length / (b.shear_modulus * b.J_torsion),
                                   rtol=1e-12)
        np.testing.assert_allclose(c[5, 5], b.length / (b.elastic_modulus * b.I_z),
                                   rtol=1e-12)

    def test_coupling_signs(self):
        c = beam_compliance(slender_beam()).values
        assert c[1, 5] > 0 and c[5, 1] > 0  # +Fy rotates the tip about +z
        assert c[2, 4] < 0 and c[4, 2] < 0  # +Fz rotates the tip about -y

    def test_symmetric_by_construction(self):
        c = beam_compliance(slender_beam()).values
        np.testing.assert_array_equal(c, c.T)

    def test_doubling_section_halves_compliance(self):
        b = slender_beam()
        c1 = beam_compliance(b).values
        c2 = beam_compliance(b.scaled_section(2.0)).values
        np.testing.assert_allclose(c2, 0.5 * c1, rtol=1e-15)

    def test_rejects_nonpositive(self):
        with pytest.raises(KinetostatError):
            slender_beam(A=-1.0)


class TestSerialAggregation:
    def test_single_segment_identity_placement(self):
        b = slender_beam()
        got = serial_link_compliance([(b, Transform.identity())]).values
        expect = beam_compliance(b).values
        np.testing.assert_allclose(got, expect, rtol=1e-12, atol=1e-18)

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_coaxial_segments_add_like_one_long_beam(self, k):
        b = slender_beam(length=80.0)
        segments = [(b, Transform.identity())] * k
        got = serial_link_compliance(segments).values
        expect = beam_compliance(slender_beam(length=80.0 * k)).values
        assert np.abs(got - expect).max() <= 1e-9 * np.abs(expect).max()

    def test_stiffer_material_scales_contribution_linearly(self):
        # both moduli x1000 scale the segment's compliance by 1/1000
        softer = slender_beam()
        stiffer = BeamSegment(softer.length, 1000 * softer.elastic_modulus,
                              1000 * softer.shear_modulus, softer.area,
                              softer.I_y, softer.I_z, softer.J_torsion)
        both = serial_link_compliance([(stiffer, Transform.identity())]).values
        np.testing.assert_allclose(
            both, beam_compliance(softer).values / 1000.0, rtol=1e-12)

    def test_rotated_segment(self, rng):
        # two-segment elbow: compliance stays symmetric positive definite
        from kinetostat import elementary

        b = random_beam(rng)
        bend = elementary("rotation", "z", 0.7)
        c = serial_link_compliance([(b, Transform.identity()), (b, bend)])
        w = np.linalg.eigvalsh(c.values)
        assert w.min() > 0

    def test_empty_rejected(self):
        with pytest.raises(KinetostatError):
            serial_link_compliance([])


class TestComplianceImport:
    def test_valid_spd_accepted_unchanged(self):
        c = beam_compliance(slender_beam()).values
        got = load_compliance_matrix(c).values
        np.testing.assert_array_equal(got, c)

    def test_negative_eigenvalue_rejected_with_report(self):
        bad = np.diag([1e-4, 1e-4, 1e-4, 1e-7, 1e-7, -1e-7]).astype(float)
        with pytest.raises(ComplianceMatrixError, match="eigenvalue"):
            load_compliance_matrix(bad)

    def test_small_asymmetry_symmetrized(self):
        c = beam_compliance(slender_beam()).values.copy()
        c[0, 1] += 1e-8 * np.abs(c).max()
        got = load_compliance_matrix(c).values
        np.testing.assert_array_equal(got, got.T)
        np.testing.assert_allclose(got[0, 1], 0.5 * (c[0, 1] + c[1, 0]), rtol=1e-12)

    def test_large_asymmetry_rejected(self):
        c = beam_compliance(slender_beam()).values.copy()
        c[0, 1] += 1e-3 * np.abs(c).max()
        with pytest.raises(ComplianceMatrixError, match="asymmetry"):
            load_compliance_matrix(c)

    def test_wrong_size_rejected(self):
        with pytest.raises(ComplianceMatrixError):
            load_compliance_matrix(np.eye(5))


class TestStiffnessInversion:
    def test_condition_cap(self):
        c = np.diag([1.0, 1.0, 1.0, 1e-20, 1e-20, 1e-20]).astype(float)
        k = load_compliance_matrix(c).stiffness()
        w = np.linalg.eigvalsh(k)
        assert w.max() / w.min() <= 1e12 * (1 + 1e-9)

    def test_round_trip_well_conditioned(self, rng):
        c = beam_compliance(random_beam(rng))
        k = c.stiffness()
        np.testing.assert_allclose(k @ c.values, np.eye(6), atol=1e-9)
