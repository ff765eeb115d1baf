"""Pointwise differential geometry of an immersed surface patch in R^n.

Everything here is a pure function of a second-order jet: fundamental
forms, principal curvatures and directions, the pullback frame with its
stretch factors, and the curvature-ratio weight that sharpens the
classical 2*Area lower bound.  Angles and stretches live in the flat
(u, v) parameter plane; curvatures live on the image surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import eigh

# Default tolerance knobs.  All curvature thresholds are relative to a
# caller-supplied characteristic curvature scale.
EPS_IMMERSION = 1e-12
EPS_FLAT = 1e-7
EPS_UMBILIC = 1e-6
EPS_NORMAL_PARALLEL = 1e-8


class GeometryError(Exception):
    """Base class for pointwise geometry failures."""


class DegenerateImmersion(GeometryError):
    """The differential does not have rank 2 at this point."""


class RankDeficient(GeometryError):
    """The differential is singular where a full-rank frame is required."""


class UmbilicPoint(GeometryError):
    """Principal directions are undefined (equal principal curvatures)."""


class NormalSpaceAmbiguous(GeometryError):
    """n > 3 and the second-form vectors do not span a single normal line."""


@dataclass(frozen=True)
class ParamPoint:
    """A point of the parameter domain."""

    u: float
    v: float


@dataclass(frozen=True)
class Jet2:
    """Value and first/second partial derivatives of a map at one point.

    All vectors are 1-d arrays of length ``ambient_dim``.  The mixed
    partial is stored once (it is symmetric by construction).
    """

    value: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    duu: np.ndarray
    duv: np.ndarray
    dvv: np.ndarray

    @property
    def ambient_dim(self) -> int:
        return self.value.shape[0]

    def differential(self, xi: float, eta: float) -> np.ndarray:
        """Push the domain vector (xi, eta) forward through the map."""
        return xi * self.du + eta * self.dv


def jet_from_arrays(value, du, dv, duu, duv, dvv) -> Jet2:
    """Build a Jet2 from array-likes, validating shape and finiteness."""
    vecs = [np.asarray(a, dtype=float) for a in (value, du, dv, duu, duv, dvv)]
    n = vecs[0].shape[0]
    if any(v.shape != (n,) for v in vecs):
        raise ValueError("jet vectors must share one ambient dimension")
    if not all(np.all(np.isfinite(v)) for v in vecs):
        raise ValueError("jet vectors must be finite")
    return Jet2(*vecs)


@dataclass(frozen=True)
class FirstForm:
    """Pullback metric coefficients E, F, G."""

    E: float
    F: float
    G: float

    @property
    def det(self) -> float:
        return self.E * self.G - self.F * self.F

    @property
    def energy_density(self) -> float:
        return self.E + self.G

    @property
    def area_element(self) -> float:
        return math.sqrt(max(self.det, 0.0))


@dataclass(frozen=True)
class SecondForm:
    """Vector-valued second fundamental form (normal parts of the Hessian)."""

    L: np.ndarray
    M: np.ndarray
    N: np.ndarray


class PointClass(Enum):
    FLAT_UMBILIC = "FlatUmbilic"
    CURVED_UMBILIC = "CurvedUmbilic"
    NEGATIVE_REGULAR = "NegativeRegular"
    RULED = "Ruled"
    POSITIVE_CURVATURE = "PositiveCurvature"


@dataclass
class CurvatureFrame:
    """Principal curvature data plus the pullback frame at one point.

    ``kappa1 >= kappa2`` are signed; ``rho1 >= rho2 >= 0`` are the ordered
    magnitudes.  Direction fields are ``None`` at umbilic points, and the
    pullback block (r, s, a, b, theta) is filled in by
    :func:`pullback_frame`.  The stretch ``a`` belongs to the pullback of
    ``dir1`` and ``b`` to that of ``dir2``.
    """

    kappa1: float
    kappa2: float
    rho1: float
    rho2: float
    dir1: np.ndarray | None = None
    dir2: np.ndarray | None = None
    normal: np.ndarray | None = None
    umbilic: bool = False
    pullback_r: np.ndarray | None = None
    pullback_s: np.ndarray | None = None
    a: float | None = None
    b: float | None = None
    theta: float | None = None
    sin2theta: float | None = None


def first_form(jet: Jet2) -> FirstForm:
    """Inner products of the first partials."""
    return FirstForm(
        E=float(jet.du @ jet.du),
        F=float(jet.du @ jet.dv),
        G=float(jet.dv @ jet.dv),
    )


def _immersion_scale(first: FirstForm) -> float:
    # det(I) is compared against (E+G)^2, which bounds it from above.
    return first.energy_density ** 2


def is_degenerate(first: FirstForm, immersion_tol: float = EPS_IMMERSION) -> bool:
    """True when the differential fails to have numerical rank 2."""
    return first.det <= immersion_tol * _immersion_scale(first)


def second_form(jet: Jet2, immersion_tol: float = EPS_IMMERSION) -> SecondForm:
    """Normal components of the second partials.

    Each Hessian vector loses its orthogonal projection onto
    span{du, dv}; the Gram system is solved exactly per point.
    """
    first = first_form(jet)
    if is_degenerate(first, immersion_tol):
        raise DegenerateImmersion(
            f"EG - F^2 = {first.det:.3e} is degenerate at this point")
    gram = np.array([[first.E, first.F], [first.F, first.G]])
    basis = np.stack([jet.du, jet.dv])  # (2, n)
    out = []
    for hess in (jet.duu, jet.duv, jet.dvv):
        coeff = np.linalg.solve(gram, basis @ hess)
        out.append(hess - coeff @ basis)
    return SecondForm(L=out[0], M=out[1], N=out[2])


def unit_normal(jet: Jet2, second: SecondForm | None = None,
                parallel_tol: float = EPS_NORMAL_PARALLEL) -> np.ndarray | None:
    """Unit normal spanning the first normal space.

    For n = 3 this is the normalized cross product du x dv.  For n > 3
    the second-form vectors must lie on a single normal line (first
    normal space of dimension <= 1); otherwise NormalSpaceAmbiguous is
    raised.  Returns None when the second form vanishes and n > 3 (flat
    point, no preferred normal line).
    """
    n = jet.ambient_dim
    if n == 3:
        cross = np.cross(jet.du, jet.dv)
        norm = np.linalg.norm(cross)
        if norm == 0.0:
            raise DegenerateImmersion("du x dv vanishes")
        return cross / norm
    if second is None:
        second = second_form(jet)
    stack = np.stack([second.L, second.M, second.N])
    sv = np.linalg.svd(stack, compute_uv=False)
    if sv[0] == 0.0:
        return None
    if sv[1] > parallel_tol * sv[0]:
        raise NormalSpaceAmbiguous(
            f"first normal space has numerical dimension >= 2 "
            f"(singular values {sv[0]:.3e}, {sv[1]:.3e})")
    _, _, vt = np.linalg.svd(stack)
    return vt[0]


def principal_curvatures(first: FirstForm, second: SecondForm, jet: Jet2,
                         scale: float | None = None,
                         umbilic_tol: float = EPS_UMBILIC,
                         immersion_tol: float = EPS_IMMERSION,
                         parallel_tol: float = EPS_NORMAL_PARALLEL,
                         keep_directions: bool = False) -> CurvatureFrame:
    """Signed principal curvatures with principal directions.

    Solves the generalized symmetric eigenproblem II w = kappa I w for
    the scalar second form taken against the unit normal.  Directions
    are ambient tangent vectors; they are left as None when the signed
    curvature gap is below ``umbilic_tol * scale``, unless
    ``keep_directions`` is set, in which case the eigensolver's basis is
    retained (at an exact umbilic any metric-orthonormal basis is
    principal).  ``scale`` defaults to a per-point characteristic
    curvature with a floor of 1.
    """
    if is_degenerate(first, immersion_tol):
        raise DegenerateImmersion("cannot build shape operator at a degenerate point")
    nu = unit_normal(jet, second, parallel_tol)
    if nu is None:
        kappa1 = kappa2 = 0.0
        return CurvatureFrame(kappa1, kappa2, 0.0, 0.0, umbilic=True)
    gram = np.array([[first.E, first.F], [first.F, first.G]])
    e = float(second.L @ nu)
    f = float(second.M @ nu)
    g = float(second.N @ nu)
    two_form = np.array([[e, f], [f, g]])
    vals, vecs = eigh(two_form, gram)
    kappa2, kappa1 = float(vals[0]), float(vals[1])
    if scale is None:
        scale = max((abs(kappa1) + abs(kappa2)) / 2.0, 1.0)
    rho1 = max(abs(kappa1), abs(kappa2))
    rho2 = min(abs(kappa1), abs(kappa2))
    umbilic = abs(kappa1 - kappa2) <= umbilic_tol * scale
    if umbilic and not keep_directions:
        return CurvatureFrame(kappa1, kappa2, rho1, rho2, normal=nu, umbilic=True)
    w1, w2 = vecs[:, 1], vecs[:, 0]
    dir1 = jet.differential(w1[0], w1[1])
    dir2 = jet.differential(w2[0], w2[1])
    dir1 = dir1 / np.linalg.norm(dir1)
    dir2 = dir2 / np.linalg.norm(dir2)
    return CurvatureFrame(kappa1, kappa2, rho1, rho2,
                          dir1=dir1, dir2=dir2, normal=nu, umbilic=umbilic)


def gauss_curvature(first: FirstForm, second: SecondForm,
                    immersion_tol: float = EPS_IMMERSION) -> float:
    """Gauss curvature from the vector-valued second form."""
    if is_degenerate(first, immersion_tol):
        raise DegenerateImmersion("Gauss curvature undefined at a degenerate point")
    return float((second.L @ second.N - second.M @ second.M) / first.det)


def classify_point(kappa1: float, kappa2: float, scale: float,
                   flat_tol: float = EPS_FLAT,
                   umbilic_tol: float = EPS_UMBILIC) -> PointClass:
    """Total classification of a point by its signed principal curvatures."""
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    flat = flat_tol * scale
    small1 = abs(kappa1) <= flat
    small2 = abs(kappa2) <= flat
    if small1 and small2:
        return PointClass.FLAT_UMBILIC
    if small1 or small2:
        return PointClass.RULED
    if kappa1 * kappa2 > flat * flat:
        return PointClass.POSITIVE_CURVATURE
    if abs(kappa1 - kappa2) <= umbilic_tol * scale:
        return PointClass.CURVED_UMBILIC
    return PointClass.NEGATIVE_REGULAR


def _pullback_direction(jet: Jet2, first: FirstForm, direction: np.ndarray):
    """Domain unit vector whose pushforward spans the given tangent line.

    Returns (unit 2-vector, stretch |dh(unit vector)|).
    """
    gram = np.array([[first.E, first.F], [first.F, first.G]])
    rhs = np.array([float(jet.du @ direction), float(jet.dv @ direction)])
    coeff = np.linalg.solve(gram, rhs)
    norm = np.linalg.norm(coeff)
    if norm == 0.0:
        raise RankDeficient("tangent direction has no preimage")
    unit = coeff / norm
    stretch = float(np.linalg.norm(jet.differential(unit[0], unit[1])))
    return unit, stretch


def pullback_frame(jet: Jet2, frame: CurvatureFrame,
                   immersion_tol: float = EPS_IMMERSION) -> CurvatureFrame:
    """Complete a curvature frame with pullback directions r, s and a, b, theta.

    ``pullback_r`` maps into span{dir1} with stretch ``a``; likewise for
    s/dir2/b.  ``theta`` is half the (line) angle between r and s, so
    ``sin2theta = |sin(angle(r, s))|``.
    """
    if frame.dir1 is None or frame.dir2 is None:
        raise UmbilicPoint("principal directions undefined; pullback frame unavailable")
    first = first_form(jet)
    if is_degenerate(first, immersion_tol):
        raise RankDeficient("differential is singular; pullback frame unavailable")
    r, a = _pullback_direction(jet, first, frame.dir1)
    s, b = _pullback_direction(jet, first, frame.dir2)
    # Line angle: eigenvector signs are arbitrary, so fold onto [0, pi/2].
    cross = abs(r[0] * s[1] - r[1] * s[0])
    dot = abs(float(r @ s))
    angle = math.atan2(cross, dot)
    frame.pullback_r = r
    frame.pullback_s = s
    frame.a = a
    frame.b = b
    frame.theta = angle / 2.0
    frame.sin2theta = math.sin(angle)
    return frame


def curvature_ratio_factor(rho1: float, rho2: float,
                           point_class: PointClass) -> float:
    """The weight sqrt(rho1/rho2) + sqrt(rho2/rho1), with conventions.

    Flat points use the 0/0 = 1 convention twice (factor 2); ruled
    points diverge (a/0 = infinity).  Finite values are always >= 2.
    """
    if rho1 < rho2 or rho2 < 0.0:
        raise ValueError("require rho1 >= rho2 >= 0")
    if point_class is PointClass.FLAT_UMBILIC:
        return 2.0
    if point_class is PointClass.RULED:
        return math.inf
    ratio = math.sqrt(rho1 / rho2)
    return ratio + 1.0 / ratio
