"""Global functionals and pointwise identities over jet grids.

Evaluates the three chain quantities (Dirichlet energy, the
curvature-weighted area functional, twice the image area) by composite
trapezoid quadrature, together with the pointwise stretch/curvature
balance and the pointwise energy identity, with masking and
classification bookkeeping rolled into one report.

Masking policy: points are excluded from residual statistics when the
immersion is degenerate, when the first normal space is ambiguous
(n > 3), when sin(2 theta) falls below its floor, or when the point is a
curved near-umbilic (direction conditioning).  Flat points are not
masked: their factor is pinned to 2 by the 0/0 = 1 convention and they
simply carry no frame.  Points whose factor is undefined contribute the
trivial lower bound 2 to the functional, which preserves both chain
inequalities pointwise; their area and energy are always counted.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .families import AnalyticFamily, DomainSpec, JetGrid, sample_grid
from .geometry import PointClass
from .quadrature import Quadrature
from . import solver as solver_mod

THREADS_ENV = "ENERGYAREA_THREADS"

MASK_NONE = ""
MASK_RANK_DEFICIENT = "rank_deficient"
MASK_NORMAL_AMBIGUOUS = "normal_ambiguous"
MASK_SIN2THETA_FLOOR = "sin2theta_floor"
MASK_UMBILIC = "umbilic"

MASK_REASONS = (MASK_RANK_DEFICIENT, MASK_NORMAL_AMBIGUOUS,
                MASK_SIN2THETA_FLOOR, MASK_UMBILIC)


class UndefinedOnPositiveCurvature(Exception):
    """The curvature functional does not make sense on this input."""


@dataclass(frozen=True)
class Thresholds:
    flat_tol: float = geometry.EPS_FLAT
    umbilic_tol: float = geometry.EPS_UMBILIC
    immersion_tol: float = geometry.EPS_IMMERSION
    normal_parallel_tol: float = geometry.EPS_NORMAL_PARALLEL
    sin2theta_floor: float = 1e-3
    mask_limit: float = 0.05
    positive_fraction_limit: float = 1e-3

    def to_dict(self) -> dict:
        return {"flat_tol": self.flat_tol, "umbilic_tol": self.umbilic_tol,
                "immersion_tol": self.immersion_tol,
                "normal_parallel_tol": self.normal_parallel_tol,
                "sin2theta_floor": self.sin2theta_floor,
                "mask_limit": self.mask_limit,
                "positive_fraction_limit": self.positive_fraction_limit}


@dataclass(frozen=True)
class PointReport:
    """Pointwise integrands, residuals, and classification at one node."""

    u: float
    v: float
    point_class: PointClass | None
    energy_density: float
    area_element: float
    factor: float
    sin2theta: float | None
    a: float | None
    b: float | None
    balance_residual: float | None
    energy_identity_residual: float | None
    masked: bool
    mask_reason: str


@dataclass
class PointField:
    """Structure-of-arrays pointwise data over one jet grid."""

    jets: JetGrid
    scale: float
    energy_density: np.ndarray
    area_element: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    factor: np.ndarray
    sin2theta: np.ndarray
    a: np.ndarray
    b: np.ndarray
    balance_residual: np.ndarray
    energy_identity_residual: np.ndarray
    class_name: np.ndarray  # '' where unclassified
    masked: np.ndarray
    mask_reason: np.ndarray

    @property
    def shape(self):
        return self.energy_density.shape

    def point(self, i: int, j: int) -> PointReport:
        name = self.class_name[i, j]
        cls = PointClass(name) if name else None

        def opt(arr):
            x = float(arr[i, j])
            return None if math.isnan(x) else x

        return PointReport(
            u=float(self.jets.u[i]), v=float(self.jets.v[j]),
            point_class=cls,
            energy_density=float(self.energy_density[i, j]),
            area_element=float(self.area_element[i, j]),
            factor=float(self.factor[i, j]),
            sin2theta=opt(self.sin2theta), a=opt(self.a), b=opt(self.b),
            balance_residual=opt(self.balance_residual),
            energy_identity_residual=opt(self.energy_identity_residual),
            masked=bool(self.masked[i, j]),
            mask_reason=str(self.mask_reason[i, j]))


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pointwise_field(jets: JetGrid, thresholds: Thresholds = Thresholds()) -> PointField:
    """Classify every node and assemble integrands, frames, and residuals.

    Deterministic regardless of the thread count: each grid node writes
    only its own slots.
    """
    nu, nv = jets.shape
    ee = np.einsum("ijk,ijk->ij", jets.du, jets.du)
    ff = np.einsum("ijk,ijk->ij", jets.du, jets.dv)
    gg = np.einsum("ijk,ijk->ij", jets.dv, jets.dv)
    ed = ee + gg
    da = np.sqrt(np.maximum(ee * gg - ff * ff, 0.0))

    kappa1 = np.full((nu, nv), np.nan)
    kappa2 = np.full((nu, nv), np.nan)
    frames: list[list] = [[None] * nv for _ in range(nu)]
    hard_mask = np.zeros((nu, nv), dtype=bool)
    mask_reason = np.full((nu, nv), MASK_NONE, dtype=object)

    def curvature_row(i: int) -> None:
        for j in range(nv):
            jet = jets.jet(i, j)
            first = geometry.FirstForm(float(ee[i, j]), float(ff[i, j]),
                                       float(gg[i, j]))
            if geometry.is_degenerate(first, thresholds.immersion_tol):
                hard_mask[i, j] = True
                mask_reason[i, j] = MASK_RANK_DEFICIENT
                continue
            second = geometry.second_form(jet, thresholds.immersion_tol)
            try:
                frame = geometry.principal_curvatures(
                    first, second, jet,
                    umbilic_tol=thresholds.umbilic_tol,
                    immersion_tol=thresholds.immersion_tol,
                    parallel_tol=thresholds.normal_parallel_tol,
                    keep_directions=True)
            except geometry.NormalSpaceAmbiguous:
                hard_mask[i, j] = True
                mask_reason[i, j] = MASK_NORMAL_AMBIGUOUS
                continue
            kappa1[i, j] = frame.kappa1
            kappa2[i, j] = frame.kappa2
            frames[i][j] = frame

    _run_rows(curvature_row, nu)

    valid = ~np.isnan(kappa1)
    if np.any(valid):
        magnitude = (np.abs(kappa1[valid]) + np.abs(kappa2[valid])) / 2.0
        scale = float(np.max(magnitude))
    else:
        scale = 0.0
    scale = max(scale, 1.0 / jets.domain.diameter)

    factor = np.full((nu, nv), 2.0)
    sin2t = np.full((nu, nv), np.nan)
    a_arr = np.full((nu, nv), np.nan)
    b_arr = np.full((nu, nv), np.nan)
    balance = np.full((nu, nv), np.nan)
    identity = np.full((nu, nv), np.nan)
    class_name = np.full((nu, nv), "", dtype=object)
    masked = hard_mask.copy()

    def frame_row(i: int) -> None:
        for j in range(nv):
            frame = frames[i][j]
            if frame is None:
                continue
            cls = geometry.classify_point(frame.kappa1, frame.kappa2, scale,
                                          thresholds.flat_tol,
                                          thresholds.umbilic_tol)
            class_name[i, j] = cls.value
            factor[i, j] = geometry.curvature_ratio_factor(
                frame.rho1, frame.rho2, cls)
            if cls is PointClass.FLAT_UMBILIC or frame.dir1 is None:
                continue
            jet = jets.jet(i, j)
            try:
                frame = geometry.pullback_frame(jet, frame,
                                                thresholds.immersion_tol)
            except geometry.RankDeficient:
                masked[i, j] = True
                mask_reason[i, j] = MASK_RANK_DEFICIENT
                continue
            sin2t[i, j] = frame.sin2theta
            a_arr[i, j] = frame.a
            b_arr[i, j] = frame.b
            if cls is PointClass.CURVED_UMBILIC:
                masked[i, j] = True
                mask_reason[i, j] = MASK_UMBILIC
                continue
            if frame.sin2theta < thresholds.sin2theta_floor:
                masked[i, j] = True
                mask_reason[i, j] = MASK_SIN2THETA_FLOOR
                continue
            # stretch/curvature balance, each magnitude paired with the
            # stretch along the pullback of its own direction
            p1 = abs(frame.kappa1) * frame.a ** 2
            p2 = abs(frame.kappa2) * frame.b ** 2
            balance[i, j] = abs(p1 - p2) / (p1 + p2)
            if math.isfinite(factor[i, j]):
                ed_ij = float(ed[i, j])
                predicted = factor[i, j] * float(da[i, j]) / frame.sin2theta
                identity[i, j] = abs(ed_ij - predicted) / ed_ij

    _run_rows(frame_row, nu)

    return PointField(jets=jets, scale=scale, energy_density=ed,
                      area_element=da, kappa1=kappa1, kappa2=kappa2,
                      factor=factor, sin2theta=sin2t, a=a_arr, b=b_arr,
                      balance_residual=balance,
                      energy_identity_residual=identity,
                      class_name=class_name,
                      masked=masked, mask_reason=mask_reason)


def _run_rows(fn, nu: int) -> None:
    workers = _thread_count()
    if workers <= 1:
        for i in range(nu):
            fn(i)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(fn, range(nu)))


# ---------------------------------------------------------------------------
# Global functionals
# ---------------------------------------------------------------------------

def dirichlet_energy(jets: JetGrid, quad: Quadrature) -> float:
    """Composite quadrature of |h_u|^2 + |h_v|^2 over the domain."""
    ed = np.einsum("ijk,ijk->ij", jets.du, jets.du) \
        + np.einsum("ijk,ijk->ij", jets.dv, jets.dv)
    return quad.integrate(ed)


def image_area(jets: JetGrid, quad: Quadrature) -> float:
    """Composite quadrature of sqrt(EG - F^2) over the domain."""
    ee = np.einsum("ijk,ijk->ij", jets.du, jets.du)
    ff = np.einsum("ijk,ijk->ij", jets.du, jets.dv)
    gg = np.einsum("ijk,ijk->ij", jets.dv, jets.dv)
    return quad.integrate(np.sqrt(np.maximum(ee * gg - ff * ff, 0.0)))


def positive_curvature_fraction(field: PointField) -> float:
    count = int(np.sum(field.class_name == PointClass.POSITIVE_CURVATURE.value))
    return count / field.class_name.size


def curvature_functional(field: PointField, quad: Quadrature,
                         thresholds: Thresholds = Thresholds()) -> float:
    """Quadrature of factor * area_element; +inf on any ruled point.

    Points with an undefined factor (masked hard) contribute the trivial
    bound 2, keeping both chain inequalities intact pointwise.  Raises
    UndefinedOnPositiveCurvature when the positively curved fraction
    exceeds its limit.
    """
    pc = positive_curvature_fraction(field)
    if pc > thresholds.positive_fraction_limit:
        raise UndefinedOnPositiveCurvature(
            f"positive curvature fraction {pc:.4f} exceeds "
            f"{thresholds.positive_fraction_limit}")
    if np.any(field.class_name == PointClass.RULED.value):
        return math.inf
    return quad.integrate(field.factor * field.area_element)


def balance_residual_field(field: PointField) -> np.ndarray:
    """Normalized stretch/curvature residuals (NaN where undefined)."""
    return field.balance_residual.copy()


def energy_identity_residual_field(field: PointField) -> np.ndarray:
    """Normalized pointwise energy-identity residuals (NaN where undefined)."""
    return field.energy_identity_residual.copy()


def _residual_stats(values: np.ndarray, masked: np.ndarray) -> dict | None:
    take = values[~masked & ~np.isnan(values)]
    if take.size == 0:
        return None
    qs = np.quantile(take, [0.5, 0.9, 0.99])
    return {"count": int(take.size), "max": float(np.max(take)),
            "mean": float(np.mean(take)), "p50": float(qs[0]),
            "p90": float(qs[1]), "p99": float(qs[2])}


# ---------------------------------------------------------------------------
# Verification report
# ---------------------------------------------------------------------------

SCHEMA_VERSION = "1"

VERDICT_HOLDS = "ChainHolds"
VERDICT_VIOLATED = "ChainViolated"
VERDICT_UNDEFINED = "Undefined"


@dataclass(frozen=True)
class SolverCase:
    """A Dirichlet problem whose converged solution is the map under test."""

    name: str
    domain: DomainSpec
    boundary_family: AnalyticFamily | None = None
    boundary_edges: dict | None = None
    ambient_dim: int = 3
    tol: float = 1e-10
    max_iter: int = 20000

    @property
    def label(self) -> str:
        return self.name


@dataclass
class VerificationReport:
    case_name: str
    case_kind: str
    case_parameters: dict
    domain: dict
    asserted_harmonic: bool
    solver_residual: float | None
    resolution: int
    grid_shape: tuple
    energy: float
    functional_F: float
    two_area: float
    left_margin: float | None
    right_margin: float | None
    error_estimates: dict
    richardson: dict
    margin_tolerances: dict
    balance_residual_stats: dict | None
    energy_identity_residual_stats: dict | None
    sin2theta_min: float | None
    class_histogram: dict
    masked_fraction: float
    mask_reason_counts: dict
    positive_curvature_fraction: float
    excluded_area_fraction: float
    verdict: str
    verdict_reason: str | None
    thresholds: dict
    field: PointField | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        def enc(x):
            if x is None:
                return None
            if isinstance(x, float) and math.isinf(x):
                return "Infinity"
            return x

        return {
            "schema_version": SCHEMA_VERSION,
            "case": {"name": self.case_name, "kind": self.case_kind,
                     "parameters": self.case_parameters, "domain": self.domain,
                     "asserted_harmonic": self.asserted_harmonic,
                     "solver_residual": self.solver_residual},
            "resolution": self.resolution,
            "grid_shape": list(self.grid_shape),
            "energy": self.energy,
            "functional_F": enc(self.functional_F),
            "two_area": self.two_area,
            "left_margin": enc(self.left_margin),
            "right_margin": enc(self.right_margin),
            "error_estimates": {k: enc(v) for k, v in self.error_estimates.items()},
            "richardson": {k: enc(v) for k, v in self.richardson.items()},
            "margin_tolerances": {k: enc(v) for k, v in self.margin_tolerances.items()},
            "balance_residual_stats": self.balance_residual_stats,
            "energy_identity_residual_stats": self.energy_identity_residual_stats,
            "sin2theta_min": self.sin2theta_min,
            "class_histogram": self.class_histogram,
            "masked_fraction": self.masked_fraction,
            "mask_reason_counts": self.mask_reason_counts,
            "positive_curvature_fraction": self.positive_curvature_fraction,
            "excluded_area_fraction": self.excluded_area_fraction,
            "verdict": self.verdict,
            "verdict_reason": self.verdict_reason,
            "thresholds": self.thresholds,
        }


def build_inputs(source, resolution: int):
    """Jet grid, quadrature, and case metadata for one evaluation.

    ``source`` is an AnalyticFamily, a SolverCase (solved here at the
    requested resolution), or a prebuilt DiscreteMap (resolution ignored).
    """
    if isinstance(source, AnalyticFamily):
        jets = sample_grid(source, resolution)
        quad = Quadrature.for_domain(source.domain, resolution)
        meta = {"name": source.name, "kind": "analytic",
                "parameters": dict(source.parameters),
                "domain": source.domain,
                "asserted_harmonic": source.is_harmonic,
                "solver_residual": None, "excluded_area": 0.0}
        return jets, quad, meta
    if isinstance(source, SolverCase):
        if source.boundary_family is not None:
            boundary = solver_mod.BoundaryData.from_family(
                source.boundary_family, resolution)
        else:
            boundary = solver_mod.BoundaryData(
                dict(source.boundary_edges), source.ambient_dim)
        dm = solver_mod.solve(source.domain, resolution, boundary,
                              tol=source.tol, max_iter=source.max_iter)
        return _discrete_inputs(dm, source.name)
    if isinstance(source, solver_mod.DiscreteMap):
        return _discrete_inputs(source, "discrete_map")
    raise TypeError(f"unsupported verification source {type(source)!r}")


def _discrete_inputs(dm: solver_mod.DiscreteMap, name: str):
    jets = solver_mod.interior_jet_grid(dm)
    quad = Quadrature.for_subgrid(dm.domain, jets.u, jets.v, dm.hu, dm.hv)
    meta = {"name": name, "kind": "discrete", "parameters": {},
            "domain": dm.domain, "asserted_harmonic": bool(dm.converged),
            "solver_residual": (None if math.isnan(dm.solver_residual)
                                else dm.solver_residual),
            "excluded_area": solver_mod.excluded_area_fraction(dm)}
    return jets, quad, meta


def _case_resolution(source, jets: JetGrid, resolution: int) -> int:
    if isinstance(source, solver_mod.DiscreteMap):
        (_, _, per_u), _ = source.domain.axes()
        return source.shape[0] if per_u else source.shape[0] - 1
    return resolution


def verify_chain(source, resolution: int = 64,
                 thresholds: Thresholds = Thresholds(),
                 coarse: "VerificationReport | None" = None) -> VerificationReport:
    """Assemble the full inequality-chain report at one resolution.

    When ``coarse`` is a report of the same case at a lower resolution,
    Richardson pairing supplies extrapolated values and error estimates;
    otherwise margins are judged against a round-off floor.
    """
    from .families import domain_to_dict

    jets, quad, meta = build_inputs(source, resolution)
    resolution = _case_resolution(source, jets, resolution)
    field_data = pointwise_field(jets, thresholds)

    energy = dirichlet_energy(jets, quad)
    area = image_area(jets, quad)
    two_area = 2.0 * area
    verdict_reason = None
    try:
        functional = curvature_functional(field_data, quad, thresholds)
    except UndefinedOnPositiveCurvature as exc:
        functional = quad.integrate(field_data.factor * field_data.area_element)
        verdict_reason = f"positive curvature locus: {exc}"

    pc_fraction = positive_curvature_fraction(field_data)
    masked_fraction = float(np.mean(field_data.masked))
    hist = {cls.value: int(np.sum(field_data.class_name == cls.value))
            for cls in PointClass}
    reasons = {reason: int(np.sum(field_data.mask_reason == reason))
               for reason in MASK_REASONS}

    f_finite = math.isfinite(functional)
    left = energy - functional if f_finite else None
    right = functional - two_area if f_finite else None

    err = {"energy": None, "functional": None, "two_area": None}
    rich = {"energy": None, "functional": None, "two_area": None}
    if coarse is not None and coarse.resolution < resolution:
        ratio = resolution / coarse.resolution
        order_factor = ratio ** 2 - 1.0
        pairs = {"energy": (coarse.energy, energy),
                 "functional": (coarse.functional_F, functional),
                 "two_area": (coarse.two_area, two_area)}
        for key, (c_val, f_val) in pairs.items():
            if math.isfinite(c_val) and math.isfinite(f_val):
                corr = (f_val - c_val) / order_factor
                rich[key] = f_val + corr
                err[key] = abs(corr)

    floor = 1e-12 * max(1.0, abs(energy), abs(two_area),
                        abs(functional) if f_finite else 0.0)
    tol_left = floor + (err["energy"] or 0.0) + (err["functional"] or 0.0)
    tol_right = floor + (err["functional"] or 0.0) + (err["two_area"] or 0.0)

    if verdict_reason is not None:
        verdict = VERDICT_UNDEFINED
    elif not f_finite:
        verdict = VERDICT_UNDEFINED
        verdict_reason = "ruled locus: curvature functional diverges"
    elif masked_fraction >= thresholds.mask_limit:
        verdict = VERDICT_UNDEFINED
        verdict_reason = (f"masked fraction {masked_fraction:.4f} exceeds "
                          f"{thresholds.mask_limit}")
    elif left < -tol_left or right < -tol_right:
        verdict = VERDICT_VIOLATED
        verdict_reason = f"margins ({left:.3e}, {right:.3e}) below tolerance"
    else:
        verdict = VERDICT_HOLDS

    sin_vals = field_data.sin2theta[~field_data.masked
                                    & ~np.isnan(field_data.sin2theta)]
    return VerificationReport(
        case_name=meta["name"], case_kind=meta["kind"],
        case_parameters=meta["parameters"],
        domain=domain_to_dict(meta["domain"]),
        asserted_harmonic=meta["asserted_harmonic"],
        solver_residual=meta["solver_residual"],
        resolution=resolution, grid_shape=jets.shape,
        energy=energy, functional_F=functional, two_area=two_area,
        left_margin=left, right_margin=right,
        error_estimates=err, richardson=rich,
        margin_tolerances={"left": tol_left, "right": tol_right},
        balance_residual_stats=_residual_stats(field_data.balance_residual,
                                               field_data.masked),
        energy_identity_residual_stats=_residual_stats(
            field_data.energy_identity_residual, field_data.masked),
        sin2theta_min=float(np.min(sin_vals)) if sin_vals.size else None,
        class_histogram=hist, masked_fraction=masked_fraction,
        mask_reason_counts=reasons,
        positive_curvature_fraction=pc_fraction,
        excluded_area_fraction=meta["excluded_area"],
        verdict=verdict, verdict_reason=verdict_reason,
        thresholds=thresholds.to_dict(), field=field_data)


def run_verification(source, resolutions,
                     thresholds: Thresholds = Thresholds()) -> list:
    """Verify at each resolution (ascending), chaining Richardson pairs."""
    resolutions = list(resolutions)
    if resolutions != sorted(resolutions) or len(set(resolutions)) != len(resolutions):
        raise ValueError("resolutions must be strictly increasing")
    reports = []
    prev = None
    for res in resolutions:
        report = verify_chain(source, res, thresholds, coarse=prev)
        reports.append(report)
        prev = report
    return reports
