import math

import numpy as np
import pytest

from conftest import ambient_motion_jet, random_rotation, rotate_domain_jet
from energyarea import geometry
from energyarea.families import eval_jet, make_family
from energyarea.geometry import (CurvatureFrame, DegenerateImmersion, Jet2,
                                 NormalSpaceAmbiguous, ParamPoint, PointClass,
                                 RankDeficient, UmbilicPoint, classify_point,
                                 curvature_ratio_factor, first_form,
                                 gauss_curvature, jet_from_arrays,
                                 principal_curvatures, pullback_frame,
                                 second_form, unit_normal)


def jet3(value, du, dv, duu=(0, 0, 0), duv=(0, 0, 0), dvv=(0, 0, 0)):
    return jet_from_arrays(value, du, dv, duu, duv, dvv)


def saddle_jet(u, v):
    return eval_jet(make_family("saddle_graph"), ParamPoint(u, v))


def full_frame(jet, **kwargs):
    first = first_form(jet)
    second = second_form(jet)
    frame = principal_curvatures(first, second, jet, **kwargs)
    return pullback_frame(jet, frame)


class TestFirstForm:
    def test_identity_patch(self):
        jet = jet3((0, 0, 0), (1, 0, 0), (0, 1, 0))
        form = first_form(jet)
        assert (form.E, form.F, form.G) == (1, 0, 1)

    def test_linear_stretch(self):
        jet = jet3((0, 0, 0), (2, 0, 0), (0, 1, 0))
        form = first_form(jet)
        assert (form.E, form.F, form.G) == (4, 0, 1)

    def test_catenoid_metric_is_conformal_cosh2(self, rng):
        fam = make_family("catenoid")
        for _ in range(5):
            u = rng.uniform(0, 2 * math.pi)
            v = rng.uniform(-1, 1)
            form = first_form(eval_jet(fam, ParamPoint(u, v)))
            c2 = math.cosh(v) ** 2
            assert form.E == pytest.approx(c2, rel=1e-12)
            assert form.G == pytest.approx(c2, rel=1e-12)
            assert form.F == pytest.approx(0.0, abs=1e-12 * c2)

    def test_derived_quantities(self):
        form = geometry.FirstForm(4.0, 0.0, 1.0)
        assert form.det == 4.0
        assert form.energy_density == 5.0
        assert form.area_element == 2.0


class TestSecondForm:
    def test_plane_has_zero_second_form(self):
        jet = jet3((1, 2, 3), (1, 0, 0), (0, 2, 0))
        second = second_form(jet)
        for vec in (second.L, second.M, second.N):
            assert np.allclose(vec, 0.0, atol=1e-14)

    def test_saddle_origin(self):
        second = second_form(saddle_jet(0.0, 0.0))
        assert np.allclose(second.L, [0, 0, 2], atol=1e-14)
        assert np.allclose(second.M, 0.0, atol=1e-14)
        assert np.allclose(second.N, [0, 0, -2], atol=1e-14)

    def test_sphere_ratio(self, rng):
        radius = 1.7
        fam = make_family("sphere_patch", {"radius": radius})
        for _ in range(4):
            p = ParamPoint(rng.uniform(0, 6), rng.uniform(0.35, 1.1))
            jet = eval_jet(fam, p)
            form = first_form(jet)
            second = second_form(jet)
            assert np.linalg.norm(second.L) / form.E == pytest.approx(1 / radius, rel=1e-10)
            assert np.linalg.norm(second.N) / form.G == pytest.approx(1 / radius, rel=1e-10)

    def test_output_orthogonal_to_tangent(self, rng):
        fams = [make_family(n) for n in ("catenoid", "enneper", "saddle_graph",
                                         "sphere_patch", "exp_cos_graph")]
        for fam in fams:
            (lo_u, hi_u, _), (lo_v, hi_v, _) = fam.domain.axes()
            for _ in range(4):
                p = ParamPoint(rng.uniform(lo_u, hi_u), rng.uniform(lo_v, hi_v))
                jet = eval_jet(fam, p)
                second = second_form(jet)
                scale = max(np.linalg.norm(jet.du), np.linalg.norm(jet.dv))
                for vec in (second.L, second.M, second.N):
                    ref = max(np.linalg.norm(vec), scale ** 2)
                    assert abs(vec @ jet.du) <= 1e-10 * ref * scale
                    assert abs(vec @ jet.dv) <= 1e-10 * ref * scale

    def test_degenerate_immersion_raises(self):
        jet = jet3((0, 0, 0), (1, 0, 0), (2, 0, 0))
        with pytest.raises(DegenerateImmersion):
            second_form(jet)


class TestPrincipalCurvatures:
    def test_plane_is_flat_umbilic(self):
        jet = jet3((0, 0, 0), (1, 0, 0), (0, 1, 0))
        frame = principal_curvatures(first_form(jet), second_form(jet), jet)
        assert frame.kappa1 == frame.kappa2 == 0.0
        assert frame.umbilic
        assert frame.dir1 is None

    def test_saddle_origin_directions(self):
        jet = saddle_jet(0.0, 0.0)
        frame = principal_curvatures(first_form(jet), second_form(jet), jet)
        assert frame.kappa1 == pytest.approx(2.0, rel=1e-12)
        assert frame.kappa2 == pytest.approx(-2.0, rel=1e-12)
        assert abs(frame.dir1 @ np.array([1, 0, 0])) == pytest.approx(1.0, abs=1e-12)
        assert abs(frame.dir2 @ np.array([0, 1, 0])) == pytest.approx(1.0, abs=1e-12)

    def test_catenoid_against_revolution_oracle(self, rng):
        fam = make_family("catenoid")
        for _ in range(5):
            p = ParamPoint(rng.uniform(0, 6), rng.uniform(-1, 1))
            jet = eval_jet(fam, p)
            frame = principal_curvatures(first_form(jet), second_form(jet), jet)
            expect = 1.0 / math.cosh(p.v) ** 2
            assert frame.rho1 == pytest.approx(expect, rel=1e-10)
            assert frame.rho2 == pytest.approx(expect, rel=1e-10)
            assert frame.kappa1 * frame.kappa2 < 0

    def test_directions_orthogonal_and_eigen(self, rng):
        fam = make_family("exp_cos_graph")
        for _ in range(5):
            p = ParamPoint(rng.uniform(0, 1), rng.uniform(0, 1))
            jet = eval_jet(fam, p)
            first = first_form(jet)
            second = second_form(jet)
            frame = principal_curvatures(first, second, jet)
            assert abs(frame.dir1 @ frame.dir2) <= 1e-8
            gram = np.array([[first.E, first.F], [first.F, first.G]])
            nu = unit_normal(jet, second)
            two = np.array([[second.L @ nu, second.M @ nu],
                            [second.M @ nu, second.N @ nu]])
            for direction, kappa in ((frame.dir1, frame.kappa1),
                                     (frame.dir2, frame.kappa2)):
                w = np.linalg.solve(gram, [direction @ jet.du, direction @ jet.dv])
                scale = max(abs(frame.kappa1), abs(frame.kappa2))
                assert np.linalg.norm(two @ w - kappa * gram @ w) <= 1e-8 * scale

    def test_ambient_dim_4_reduces_to_3(self, rng):
        rot = random_rotation(rng, 4)
        jet = saddle_jet(0.4, -0.7)
        lift = Jet2(*(rot @ np.append(vec, 0.0) for vec in
                      (jet.value, jet.du, jet.dv, jet.duu, jet.duv, jet.dvv)))
        frame3 = principal_curvatures(first_form(jet), second_form(jet), jet)
        frame4 = principal_curvatures(first_form(lift), second_form(lift), lift)
        assert frame4.rho1 == pytest.approx(frame3.rho1, rel=1e-10)
        assert frame4.rho2 == pytest.approx(frame3.rho2, rel=1e-10)

    def test_ambient_dim_4_ambiguous_normal_space(self):
        jet = jet_from_arrays((0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0),
                              (0, 0, 2, 0), (0, 0, 0, 0), (0, 0, 0, 2))
        with pytest.raises(NormalSpaceAmbiguous):
            principal_curvatures(first_form(jet), second_form(jet), jet)


class TestGaussCurvature:
    def test_plane(self):
        jet = jet3((0, 0, 0), (1, 0, 0), (0, 1, 0))
        assert gauss_curvature(first_form(jet), second_form(jet)) == 0.0

    def test_saddle_origin(self):
        jet = saddle_jet(0.0, 0.0)
        k = gauss_curvature(first_form(jet), second_form(jet))
        assert k == pytest.approx(-4.0, rel=1e-12)

    def test_sphere_positive(self, rng):
        fam = make_family("sphere_patch", {"radius": 2.0})
        p = ParamPoint(rng.uniform(0, 6), rng.uniform(0.35, 1.1))
        jet = eval_jet(fam, p)
        assert gauss_curvature(first_form(jet), second_form(jet)) == pytest.approx(0.25, rel=1e-10)

    def test_matches_product_of_principal_curvatures(self, rng):
        fam = make_family("enneper")
        for _ in range(4):
            p = ParamPoint(rng.uniform(-1, 1), rng.uniform(-1, 1))
            jet = eval_jet(fam, p)
            first = first_form(jet)
            second = second_form(jet)
            frame = principal_curvatures(first, second, jet)
            k = gauss_curvature(first, second)
            assert k == pytest.approx(frame.kappa1 * frame.kappa2, rel=1e-8)


class TestClassifyPoint:
    def test_flat(self):
        assert classify_point(0.0, 0.0, 1.0) is PointClass.FLAT_UMBILIC

    def test_negative_regular_with_equal_magnitudes(self):
        assert classify_point(2.0, -2.0, 1.0) is PointClass.NEGATIVE_REGULAR

    def test_ruled(self):
        assert classify_point(3.0, 0.0, 1.0) is PointClass.RULED

    def test_positive(self):
        assert classify_point(1.0, 0.5, 1.0) is PointClass.POSITIVE_CURVATURE

    def test_curved_umbilic_buffer(self):
        assert classify_point(2e-7, -2e-7, 1.0) is PointClass.CURVED_UMBILIC

    def test_scale_must_be_positive(self):
        with pytest.raises(ValueError):
            classify_point(1.0, 1.0, 0.0)

    def test_total_on_random_inputs(self, rng):
        for _ in range(200):
            k1, k2 = sorted(rng.normal(size=2))[::-1]
            assert classify_point(k1, k2, 1.0) in PointClass


class TestCurvatureRatioFactor:
    def test_flat_convention(self):
        assert curvature_ratio_factor(0.0, 0.0, PointClass.FLAT_UMBILIC) == 2.0

    def test_equal_magnitudes(self):
        assert curvature_ratio_factor(1.0, 1.0, PointClass.NEGATIVE_REGULAR) == 2.0

    def test_four_to_one(self):
        factor = curvature_ratio_factor(4.0, 1.0, PointClass.NEGATIVE_REGULAR)
        assert factor == pytest.approx(2.5, rel=1e-15)

    def test_ruled_diverges(self):
        assert curvature_ratio_factor(3.0, 0.0, PointClass.RULED) == math.inf

    def test_amgm_lower_bound(self, rng):
        r2 = rng.uniform(1e-6, 10.0, size=5000)
        r1 = r2 * rng.uniform(1.0, 1e4, size=5000)
        values = np.sqrt(r1 / r2) + np.sqrt(r2 / r1)
        assert np.all(values >= 2.0)
        equal = np.isclose(values, 2.0, atol=1e-12)
        assert np.all(np.isclose(r1[equal], r2[equal], rtol=1e-5))

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            curvature_ratio_factor(1.0, 2.0, PointClass.NEGATIVE_REGULAR)


class TestPullbackFrame:
    def test_conformal_point_has_orthogonal_pullbacks(self, rng):
        fam = make_family("catenoid")
        for _ in range(4):
            p = ParamPoint(rng.uniform(0, 6), rng.uniform(-1, 1))
            frame = full_frame(eval_jet(fam, p))
            assert frame.sin2theta == pytest.approx(1.0, abs=1e-10)
            assert frame.a == pytest.approx(frame.b, rel=1e-10)

    def test_saddle_origin_axes(self):
        frame = full_frame(saddle_jet(0.0, 0.0))
        assert abs(frame.pullback_r @ np.array([1, 0])) == pytest.approx(1.0, abs=1e-12)
        assert abs(frame.pullback_s @ np.array([0, 1])) == pytest.approx(1.0, abs=1e-12)
        assert frame.a == pytest.approx(1.0, rel=1e-12)
        assert frame.b == pytest.approx(1.0, rel=1e-12)
        assert frame.sin2theta == pytest.approx(1.0, abs=1e-12)

    def test_radial_family_orthogonal_pullbacks(self, rng):
        fam = make_family("radial_family", {"alpha": 1, "beta": 0.5, "gamma": 1})
        for _ in range(4):
            p = ParamPoint(rng.uniform(1.0, 2.0), rng.uniform(0, 2 * math.pi))
            frame = full_frame(eval_jet(fam, p))
            assert frame.sin2theta == pytest.approx(1.0, abs=1e-10)

    def test_round_trip_recovers_direction(self, rng):
        fam = make_family("exp_cos_graph")
        for _ in range(4):
            p = ParamPoint(rng.uniform(0, 1), rng.uniform(0, 1))
            jet = eval_jet(fam, p)
            frame = full_frame(jet)
            image = jet.differential(*frame.pullback_r)
            assert np.linalg.norm(image) == pytest.approx(frame.a, rel=1e-12)
            unit = image / np.linalg.norm(image)
            assert abs(unit @ frame.dir1) == pytest.approx(1.0, abs=1e-8)

    def test_umbilic_raises(self):
        jet = jet3((0, 0, 0), (1, 0, 0), (0, 1, 0))
        frame = principal_curvatures(first_form(jet), second_form(jet), jet)
        with pytest.raises(UmbilicPoint):
            pullback_frame(jet, frame)

    def test_rank_deficient_raises(self):
        frame = CurvatureFrame(1.0, -1.0, 1.0, 1.0,
                               dir1=np.array([1.0, 0, 0]),
                               dir2=np.array([0, 1.0, 0]))
        jet = jet3((0, 0, 0), (1, 0, 0), (1e-9, 0, 0))
        with pytest.raises(RankDeficient):
            pullback_frame(jet, frame)


class TestFrameInvariance:
    CASES = [("catenoid", (0.7, 0.3)), ("saddle_graph", (0.5, -0.4)),
             ("exp_cos_graph", (0.6, 0.8)),
             ("radial_family", (1.5, 0.7))]

    def scalars(self, jet):
        frame = full_frame(jet)
        return np.array([frame.kappa1, frame.kappa2, frame.a, frame.b,
                         frame.sin2theta,
                         curvature_ratio_factor(frame.rho1, frame.rho2,
                                                PointClass.NEGATIVE_REGULAR)])

    def test_domain_rotations(self, rng):
        for name, (u, v) in self.CASES:
            jet = eval_jet(make_family(name), ParamPoint(u, v))
            base = self.scalars(jet)
            for _ in range(20):
                rotated = rotate_domain_jet(jet, rng.uniform(0, 2 * math.pi))
                assert np.allclose(self.scalars(rotated), base,
                                   rtol=1e-8, atol=1e-8)

    def test_ambient_rigid_motions(self, rng):
        for name, (u, v) in self.CASES:
            jet = eval_jet(make_family(name), ParamPoint(u, v))
            base = self.scalars(jet)
            for _ in range(20):
                moved = ambient_motion_jet(jet, random_rotation(rng, 3),
                                           rng.normal(size=3))
                assert np.allclose(self.scalars(moved), base,
                                   rtol=1e-8, atol=1e-8)


class TestJetValidation:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            jet_from_arrays((0, 0, math.nan), (1, 0, 0), (0, 1, 0),
                            (0, 0, 0), (0, 0, 0), (0, 0, 0))

    def test_rejects_mixed_dimensions(self):
        with pytest.raises(ValueError):
            jet_from_arrays((0, 0, 0), (1, 0), (0, 1, 0),
                            (0, 0, 0), (0, 0, 0), (0, 0, 0))
