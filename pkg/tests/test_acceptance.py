"""Acceptance suite: one test per criterion, each printing a verdict line.

Verification runs are cached per case so the suite stays under a couple
of minutes end to end.
"""

import json
import math

import numpy as np
import pytest

from conftest import ambient_motion_jet, random_rotation, rotate_domain_jet
from energyarea.cli import main as cli_main
from energyarea.families import Rectangle, eval_jet, make_family
from energyarea.functionals import SolverCase, verify_chain, run_verification
from energyarea.geometry import (ParamPoint, first_form,
                                 principal_curvatures, pullback_frame,
                                 second_form)
from energyarea.solver import BoundaryData, sample_family, solve

RADIAL_TUPLES = [(1.0, beta, gamma)
                 for beta in (0.0, 0.25, 0.5) for gamma in (0.5, 1.0)]

HARMONIC_CASES = (
    [("identity_plane", {})]
    + [("affine_plane", {"p": p, "q": q}) for p, q in ((2.0, 1.0), (3.0, 1.0), (0.5, 1.5))]
    + [("catenoid", {}), ("helicoid", {}), ("enneper", {}), ("saddle_graph", {})]
    + [("radial_family", {"alpha": a, "beta": b, "gamma": g})
       for a, b, g in RADIAL_TUPLES]
)


def case_key(name, params):
    return name + "|" + ",".join(f"{k}={params[k]!r}" for k in sorted(params))


@pytest.fixture(scope="module")
def runs():
    """Verification reports at [32, 64] for every asserted-harmonic case."""
    cache = {}
    for name, params in HARMONIC_CASES:
        fam = make_family(name, params)
        cache[case_key(name, params)] = run_verification(fam, [32, 64])
    return cache


def criterion(num, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num:2d}] {status}: {detail}")
    assert ok, f"criterion {num}: {detail}"


class TestAcceptance:
    def test_01_inequality_chain(self, runs):
        worst = math.inf
        for key, reports in runs.items():
            final = reports[-1]
            tol_left = final.margin_tolerances["left"]
            tol_right = final.margin_tolerances["right"]
            ok = (final.verdict == "ChainHolds"
                  and final.left_margin >= -tol_left
                  and final.right_margin >= -tol_right)
            worst = min(worst, final.left_margin + tol_left,
                        final.right_margin + tol_right)
            assert ok, (key, final.verdict, final.left_margin, final.right_margin)
        criterion(1, True,
                  f"chain holds with margins >= -err_est for {len(runs)} "
                  f"harmonic cases at resolution 64 (worst slack {worst:.3e})")

    def test_02_minimal_conformal_equality(self, runs):
        worst_ea = 0.0
        worst_fa = 0.0
        for name in ("catenoid", "helicoid", "enneper"):
            rep = runs[case_key(name, {})][-1]
            rel_ea = abs(rep.energy - rep.two_area) / rep.energy
            rel_fa = abs(rep.functional_F - rep.two_area) / rep.functional_F
            worst_ea = max(worst_ea, rel_ea)
            worst_fa = max(worst_fa, rel_fa)
        ok = worst_ea <= 1e-6 and worst_fa <= 1e-4
        criterion(2, ok,
                  f"minimal+conformal equality: max |E-2A|/E = {worst_ea:.3e} "
                  f"(<=1e-6), max |F-2A|/F = {worst_fa:.3e} (<=1e-4)")

    def test_03_catenoid_closed_forms(self):
        fam = make_family("catenoid")
        reports = run_verification(fam, [64, 128])
        fine = reports[-1]
        energy_exact = 4 * math.pi * (1 + math.sinh(2.0) / 2)
        area_exact = 2 * math.pi * (1 + math.sinh(2.0) / 2)
        err_energy = abs(fine.richardson["energy"] - energy_exact) / energy_exact
        err_area = abs(fine.richardson["two_area"] / 2 - area_exact) / area_exact
        raw_energy = abs(fine.energy - energy_exact) / energy_exact
        ok = err_energy <= 1e-6 and err_area <= 1e-6
        criterion(3, ok,
                  f"catenoid closed forms at resolution 128 (Richardson 64/128): "
                  f"energy rel err {err_energy:.3e}, area rel err {err_area:.3e} "
                  f"(raw trapezoid {raw_energy:.3e})")

    def test_04_radial_equality(self, runs):
        rep = runs[case_key("radial_family",
                            {"alpha": 1.0, "beta": 0.5, "gamma": 1.0})][-1]
        rel = abs(rep.energy - rep.functional_F) / rep.energy
        strict_right = rep.right_margin > rep.margin_tolerances["right"]
        ok = (rel <= 1e-4 and rep.sin2theta_min >= 1 - 1e-6 and strict_right)
        criterion(4, ok,
                  f"radial equality: |E-F|/E = {rel:.3e} (<=1e-4), "
                  f"min sin2theta = {rep.sin2theta_min:.12f}, "
                  f"right margin {rep.right_margin:.3e} > "
                  f"err_est {rep.margin_tolerances['right']:.3e}")

    def test_05_pointwise_identities(self, runs):
        harmonic_max = 0.0
        for name, params in HARMONIC_CASES + [("exp_cos_graph", {})]:
            if name in ("identity_plane", "affine_plane"):
                continue  # flat cases carry no frames, hence no residuals
            if (name, params) == ("exp_cos_graph", {}):
                rep = verify_chain(make_family(name), 64)
            else:
                rep = runs[case_key(name, params)][-1]
            harmonic_max = max(harmonic_max, rep.balance_residual_stats["max"],
                               rep.energy_identity_residual_stats["max"])
        exact_ok = harmonic_max <= 1e-6

        dom = Rectangle(0.2, 1.2, 0.1, 1.1)
        case = SolverCase(name="dirichlet:catenoid", domain=dom,
                          boundary_family=make_family("catenoid", domain=dom),
                          tol=1e-11)
        solver_rep = verify_chain(case, 64)
        h = 1.0 / 64
        solver_max = max(solver_rep.balance_residual_stats["max"],
                         solver_rep.energy_identity_residual_stats["max"])
        solver_ok = solver_max <= 10 * h * h

        control_min = math.inf
        for name, params in (("stretched_catenoid", {"lam": 2.0}),
                             ("sphere_patch", {})):
            rep = verify_chain(make_family(name, params), 64)
            control_min = min(control_min, max(rep.balance_residual_stats["max"],
                                               rep.energy_identity_residual_stats["max"]))
        control_ok = control_min >= 10 * max(harmonic_max, 1e-300)

        ok = exact_ok and solver_ok and control_ok
        criterion(5, ok,
                  f"pointwise identities: harmonic max residual {harmonic_max:.3e} "
                  f"(<=1e-6), solver-grid max {solver_max:.3e} (<= 10h^2 = "
                  f"{10 * h * h:.3e}), controls min-of-max {control_min:.3e} "
                  f"(>= 10x harmonic)")

    def test_06_flat_conventions_and_ruled_rejection(self, runs):
        worst = 0.0
        for name, params in HARMONIC_CASES[:4]:
            rep = runs[case_key(name, params)][-1]
            worst = max(worst, abs(rep.functional_F - rep.two_area)
                        / abs(rep.functional_F))
        cyl = verify_chain(make_family("cylinder_patch"), 32)
        ruled_ok = (cyl.verdict == "Undefined" and cyl.functional_F == math.inf
                    and "ruled" in cyl.verdict_reason)
        ok = worst <= 1e-12 and ruled_ok
        criterion(6, ok,
                  f"flat convention: max |F-2A|/F over planes = {worst:.3e} "
                  f"(<=1e-12); cylinder patch verdict "
                  f"{cyl.verdict}({cyl.verdict_reason}) with F = inf")

    def test_07_nonpositive_curvature(self, runs):
        worst = 0.0
        for key, reports in runs.items():
            worst = max(worst, reports[-1].positive_curvature_fraction)
        ok = worst <= 1e-3
        criterion(7, ok,
                  f"positive-curvature fraction <= 1e-3 on all "
                  f"{len(runs)} harmonic cases at 64 (max {worst:.3e})")

    def test_08_solver_order(self):
        fam = make_family("exp_cos_graph")
        errors = []
        for res in (16, 32, 64):  # 17/33/65 grid nodes
            dm = solve(fam.domain, res, BoundaryData.from_family(fam, res),
                       tol=1e-11)
            exact = sample_family(fam, res)
            errors.append(float(np.max(np.abs(
                dm.values[1:-1, 1:-1] - exact.values[1:-1, 1:-1]))))
        r1 = errors[0] / errors[1]
        r2 = errors[1] / errors[2]
        order_ok = 3.6 <= r1 <= 4.4 and 3.6 <= r2 <= 4.4

        saddle = make_family("saddle_graph")
        dm = solve(saddle.domain, 32, BoundaryData.from_family(saddle, 32),
                   tol=1e-11)
        exact = sample_family(saddle, 32)
        stencil_err = float(np.max(np.abs(dm.values - exact.values)))
        stencil_ok = stencil_err <= 1e-9
        ok = order_ok and stencil_ok
        criterion(8, ok,
                  f"solver order: interior-error ratios {r1:.3f}, {r2:.3f} "
                  f"(in [3.6, 4.4]); quadratic boundary reproduced to "
                  f"{stencil_err:.3e}")

    def test_09_property_suites(self, rng):
        n = 100_000
        rho2 = rng.uniform(1e-8, 10.0, size=n)
        rho1 = rho2 * rng.uniform(1.0, 1e6, size=n)
        factors = np.sqrt(rho1 / rho2) + np.sqrt(rho2 / rho1)
        amgm_ok = bool(np.all(factors >= 2.0))
        equal = np.isclose(factors, 2.0, atol=1e-12)
        amgm_ok = amgm_ok and bool(np.all(np.isclose(rho1[equal], rho2[equal],
                                                     rtol=1e-5)))

        jets = [eval_jet(make_family(name), ParamPoint(u, v))
                for name, (u, v) in (("catenoid", (0.7, 0.3)),
                                     ("saddle_graph", (0.5, -0.4)),
                                     ("exp_cos_graph", (0.6, 0.8)),
                                     ("radial_family", (1.5, 0.7)))]

        def scalars(jet):
            first = first_form(jet)
            frame = pullback_frame(jet, principal_curvatures(
                first, second_form(jet), jet))
            return np.array([frame.kappa1, frame.kappa2, frame.a, frame.b,
                             frame.sin2theta])

        frame_ok = True
        for trial in range(100):
            jet = jets[trial % len(jets)]
            base = scalars(jet)
            rotated = rotate_domain_jet(jet, rng.uniform(0, 2 * math.pi))
            moved = ambient_motion_jet(jet, random_rotation(rng, 3),
                                       rng.normal(size=3))
            frame_ok = frame_ok and np.allclose(scalars(rotated), base,
                                                rtol=1e-8, atol=1e-8)
            frame_ok = frame_ok and np.allclose(scalars(moved), base,
                                                rtol=1e-8, atol=1e-8)

        unit = Rectangle(0.0, 1.0, 0.0, 1.0)
        principle_ok = True
        for _ in range(20):
            edges = {key: rng.uniform(-1.0, 1.0, size=(13, 1))
                     for key in ("u_min", "u_max", "v_min", "v_max")}
            for eu, iu, ev, iv in (("u_min", 0, "v_min", 0),
                                   ("u_min", -1, "v_max", 0),
                                   ("u_max", 0, "v_min", -1),
                                   ("u_max", -1, "v_max", -1)):
                edges[ev][iv] = edges[eu][iu]
            dm = solve(unit, 12, BoundaryData(edges, 1), tol=1e-10)
            bvals = np.concatenate([e[:, 0] for e in edges.values()])
            interior = dm.values[1:-1, 1:-1, 0]
            principle_ok = principle_ok and (
                interior.max() <= bvals.max() + 1e-8
                and interior.min() >= bvals.min() - 1e-8)

        ok = amgm_ok and frame_ok and principle_ok
        criterion(9, ok,
                  f"property suites: AM-GM on 1e5 pairs ({amgm_ok}), frame "
                  f"invariance under 100 rotations + 100 rigid motions "
                  f"({frame_ok}), maximum principle on 20 boundaries "
                  f"({principle_ok})")

    def test_10_determinism(self, tmp_path):
        config = tmp_path / "case.json"
        config.write_text(json.dumps(
            {"case": {"family": "radial_family",
                      "parameters": {"alpha": 1.0, "beta": 0.5, "gamma": 1.0}},
             "resolutions": [16, 32]}))
        outputs = []
        for sub in ("first", "second"):
            out = tmp_path / sub
            code = cli_main(["verify", "--config", str(config), "--out",
                             str(out), "--quiet", "--no-figures"])
            assert code == 0
            outputs.append(sorted(out.glob("*.report.json")))
        identical = all(a.read_bytes() == b.read_bytes()
                        for a, b in zip(*outputs))
        ok = identical and len(outputs[0]) == 2
        criterion(10, ok,
                  f"determinism: {len(outputs[0])} report files byte-identical "
                  f"across two verify runs")
