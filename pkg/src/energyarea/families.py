"""Closed-form map families with exact second-order jets.

These are the ground-truth inputs for the verification harness: harmonic
families covering every branch of the pointwise classification (flat,
minimal, negatively curved non-minimal, radially symmetric) plus
deliberate non-harmonic controls (sphere band, reparametrized catenoid,
cylinder).  Jets are differentiated by hand and validated against a
symbolic oracle in the test suite; nothing here uses finite differences.

Annulus domains are gridded in polar coordinates (r, phi) but jets are
always with respect to Cartesian domain coordinates, via the exact chain
rule, so every downstream formula sees one integrand convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import Jet2, ParamPoint

TWO_PI = 2.0 * math.pi


class OutOfDomain(Exception):
    """Parameter point outside the family's domain."""


@dataclass(frozen=True)
class Rectangle:
    u_min: float
    u_max: float
    v_min: float
    v_max: float
    periodic_u: bool = False
    periodic_v: bool = False

    def axes(self):
        return ((self.u_min, self.u_max, self.periodic_u),
                (self.v_min, self.v_max, self.periodic_v))

    @property
    def diameter(self) -> float:
        return math.hypot(self.u_max - self.u_min, self.v_max - self.v_min)

    def contains(self, u: float, v: float) -> bool:
        ok_u = self.periodic_u or (self.u_min <= u <= self.u_max)
        ok_v = self.periodic_v or (self.v_min <= v <= self.v_max)
        return ok_u and ok_v


@dataclass(frozen=True)
class Annulus:
    """Annular domain gridded by (r, phi); phi is always periodic."""

    r_min: float
    r_max: float

    def __post_init__(self):
        if not (0.0 < self.r_min < self.r_max):
            raise ValueError("require 0 < r_min < r_max")

    def axes(self):
        return ((self.r_min, self.r_max, False), (0.0, TWO_PI, True))

    @property
    def diameter(self) -> float:
        return 2.0 * self.r_max

    def contains(self, r: float, phi: float) -> bool:
        return self.r_min <= r <= self.r_max


DomainSpec = Rectangle | Annulus


def domain_to_dict(domain: DomainSpec) -> dict:
    if isinstance(domain, Rectangle):
        return {"kind": "rectangle", "u_min": domain.u_min, "u_max": domain.u_max,
                "v_min": domain.v_min, "v_max": domain.v_max,
                "periodic_u": domain.periodic_u, "periodic_v": domain.periodic_v}
    return {"kind": "annulus", "r_min": domain.r_min, "r_max": domain.r_max}


def domain_from_dict(data: dict) -> DomainSpec:
    kind = data.get("kind")
    if kind == "rectangle":
        return Rectangle(float(data["u_min"]), float(data["u_max"]),
                         float(data["v_min"]), float(data["v_max"]),
                         bool(data.get("periodic_u", False)),
                         bool(data.get("periodic_v", False)))
    if kind == "annulus":
        return Annulus(float(data["r_min"]), float(data["r_max"]))
    raise ValueError(f"unknown domain kind {kind!r}")


def grid_axes(domain: DomainSpec, resolution: int):
    """Node coordinates and spacings for a tensor grid with ``resolution``
    cells per axis.  Periodic axes drop the duplicated seam node."""
    if resolution < 4:
        raise ValueError("resolution must be at least 4 cells per axis")
    nodes = []
    spacings = []
    for lo, hi, periodic in domain.axes():
        h = (hi - lo) / resolution
        if periodic:
            nodes.append(lo + h * np.arange(resolution))
        else:
            nodes.append(np.linspace(lo, hi, resolution + 1))
        spacings.append(h)
    return nodes[0], nodes[1], spacings[0], spacings[1]


@dataclass(frozen=True)
class JetGrid:
    """Structure-of-arrays jet field over a tensor grid.

    Arrays are shaped (nu, nv, ambient_dim); u/v hold the grid
    coordinates (r/phi for annulus domains).
    """

    domain: DomainSpec
    u: np.ndarray
    v: np.ndarray
    hu: float
    hv: float
    value: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    duu: np.ndarray
    duv: np.ndarray
    dvv: np.ndarray

    @property
    def shape(self):
        return self.value.shape[:2]

    @property
    def ambient_dim(self) -> int:
        return self.value.shape[2]

    def jet(self, i: int, j: int) -> Jet2:
        return Jet2(self.value[i, j], self.du[i, j], self.dv[i, j],
                    self.duu[i, j], self.duv[i, j], self.dvv[i, j])


# A vectorized jet function maps coordinate arrays (U, V) to the tuple
# (value, du, dv, duu, duv, dvv), each shaped U.shape + (n,).
JetFunction = Callable[[np.ndarray, np.ndarray], tuple]


@dataclass(frozen=True)
class AnalyticFamily:
    name: str
    parameters: dict
    ambient_dim: int
    domain: DomainSpec
    is_harmonic: bool
    is_conformal: bool
    is_minimal_image: bool
    degree_one: bool
    jet_fn: JetFunction = field(repr=False)
    oracles: dict = field(default_factory=dict, repr=False)

    @property
    def label(self) -> str:
        if not self.parameters:
            return self.name
        args = ", ".join(f"{k}={v!r}" for k, v in self.parameters.items())
        return f"{self.name}({args})"


def eval_jet(family: AnalyticFamily, p: ParamPoint) -> Jet2:
    """Exact jet of the family at one parameter point."""
    if not family.domain.contains(p.u, p.v):
        raise OutOfDomain(f"{(p.u, p.v)} outside domain of {family.label}")
    U = np.asarray(p.u, dtype=float)
    V = np.asarray(p.v, dtype=float)
    value, du, dv, duu, duv, dvv = family.jet_fn(U, V)
    return Jet2(value, du, dv, duu, duv, dvv)


def laplacian_residual(family: AnalyticFamily, p: ParamPoint) -> float:
    """Euclidean norm of duu + dvv; zero iff the map is harmonic at p."""
    jet = eval_jet(family, p)
    return float(np.linalg.norm(jet.duu + jet.dvv))


def sample_grid(family: AnalyticFamily, resolution: int) -> JetGrid:
    """Tensor grid of exact jets, honoring periodic axes."""
    u, v, hu, hv = grid_axes(family.domain, resolution)
    U, V = np.meshgrid(u, v, indexing="ij")
    value, du, dv, duu, duv, dvv = family.jet_fn(U, V)
    return JetGrid(domain=family.domain, u=u, v=v, hu=hu, hv=hv,
                   value=value, du=du, dv=dv, duu=duu, duv=duv, dvv=dvv)


def _stack(*components):
    return np.stack([np.asarray(c, dtype=float) for c in components], axis=-1)


def polar_jet_to_cartesian(r, phi, val, d_r, d_phi, d_rr, d_rphi, d_phiphi):
    """Exact chain rule from polar (r, phi) partials to Cartesian (u, v).

    Component arrays are shaped (..., n); r and phi broadcast over the
    leading axes.  u = r cos(phi), v = r sin(phi).
    """
    r = np.asarray(r, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    c, s = np.cos(phi), np.sin(phi)
    du = d_r * c - d_phi * s / r
    dv = d_r * s + d_phi * c / r
    duu = (d_rr * c * c - 2 * d_rphi * s * c / r + d_phiphi * s * s / r**2
           + d_r * s * s / r + 2 * d_phi * s * c / r**2)
    dvv = (d_rr * s * s + 2 * d_rphi * s * c / r + d_phiphi * c * c / r**2
           + d_r * c * c / r - 2 * d_phi * s * c / r**2)
    duv = (d_rr * s * c + d_rphi * (c * c - s * s) / r - d_phiphi * s * c / r**2
           - d_r * s * c / r - d_phi * (c * c - s * s) / r**2)
    return val, du, dv, duu, duv, dvv


def _moment(a: float, b: float, k: int) -> float:
    return (b ** (k + 1) - a ** (k + 1)) / (k + 1)


def _rect_area(dom: Rectangle) -> float:
    return (dom.u_max - dom.u_min) * (dom.v_max - dom.v_min)


def _cosh2_integral(a: float, b: float) -> float:
    return (b - a) / 2.0 + (math.sinh(2 * b) - math.sinh(2 * a)) / 4.0


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------

def _identity_plane(domain: Rectangle | None) -> AnalyticFamily:
    dom = domain or Rectangle(0.0, 1.0, 0.0, 1.0)

    def jets(U, V):
        Z = np.zeros_like(U)
        O = np.ones_like(U)
        zero3 = _stack(Z, Z, Z)
        return (_stack(U, V, Z), _stack(O, Z, Z), _stack(Z, O, Z),
                zero3, zero3.copy(), zero3.copy())

    area = _rect_area(dom)
    return AnalyticFamily("identity_plane", {}, 3, dom, True, True, True, True,
                          jets, {"energy": 2 * area, "area": area,
                                 "functional": 2 * area})


def _affine_plane(p: float, q: float, domain: Rectangle | None) -> AnalyticFamily:
    dom = domain or Rectangle(0.0, 1.0, 0.0, 1.0)

    def jets(U, V):
        Z = np.zeros_like(U)
        O = np.ones_like(U)
        zero3 = _stack(Z, Z, Z)
        return (_stack(p * U, q * V, Z), _stack(p * O, Z, Z), _stack(Z, q * O, Z),
                zero3, zero3.copy(), zero3.copy())

    area = _rect_area(dom)
    return AnalyticFamily("affine_plane", {"p": p, "q": q}, 3, dom,
                          True, p == q, True, True, jets,
                          {"energy": (p * p + q * q) * area,
                           "area": abs(p * q) * area,
                           "functional": 2 * abs(p * q) * area})


def _catenoid(domain: Rectangle | None) -> AnalyticFamily:
    dom = domain or Rectangle(0.0, TWO_PI, -1.0, 1.0, periodic_u=True)

    def jets(U, V):
        cu, su = np.cos(U), np.sin(U)
        cv, sv = np.cosh(V), np.sinh(V)
        Z = np.zeros_like(U)
        O = np.ones_like(U)
        value = _stack(cv * cu, cv * su, V)
        du = _stack(-cv * su, cv * cu, Z)
        dv = _stack(sv * cu, sv * su, O)
        duu = _stack(-cv * cu, -cv * su, Z)
        duv = _stack(-sv * su, sv * cu, Z)
        dvv = _stack(cv * cu, cv * su, Z)
        return value, du, dv, duu, duv, dvv

    width = dom.u_max - dom.u_min
    iv = _cosh2_integral(dom.v_min, dom.v_max)
    return AnalyticFamily("catenoid", {}, 3, dom, True, True, True, True, jets,
                          {"energy": 2 * width * iv, "area": width * iv,
                           "functional": 2 * width * iv})


def _helicoid(domain: Rectangle | None) -> AnalyticFamily:
    dom = domain or Rectangle(0.0, TWO_PI, -1.0, 1.0)

    def jets(U, V):
        cu, su = np.cos(U), np.sin(U)
        cv, sv = np.cosh(V), np.sinh(V)
        Z = np.zeros_like(U)
        O = np.ones_like(U)
        value = _stack(sv * cu, sv * su, U)
        du = _stack(-sv * su, sv * cu, O)
        dv = _stack(cv * cu, cv * su, Z)
        duu = _stack(-sv * cu, -sv * su, Z)
        duv = _stack(-cv * su, cv * cu, Z)
        dvv = _stack(sv * cu, sv * su, Z)
        return value, du, dv, duu, duv, dvv

    width = dom.u_max - dom.u_min
    iv = _cosh2_integral(dom.v_min, dom.v_max)
    return AnalyticFamily("helicoid", {}, 3, dom, True, True, True, True, jets,
                          {"energy": 2 * width * iv, "area": width * iv,
                           "functional": 2 * width * iv})


def _enneper(domain: Rectangle | None) -> AnalyticFamily:
    dom = domain or Rectangle(-1.0, 1.0, -1.0, 1.0)

    def jets(U, V):
        value = _stack(U - U**3 / 3 + U * V**2,
                       -V + V**3 / 3 - U**2 * V,
                       U**2 - V**2)
        du = _stack(1 - U**2 + V**2, -2 * U * V, 2 * U)
        dv = _stack(2 * U * V, -1 + V**2 - U**2, -2 * V)
        duu = _stack(-2 * U, -2 * V, 2 * np.ones_like(U))
        duv = _stack(2 * V, -2 * U, np.zeros_like(U))
        dvv = _stack(2 * U, 2 * V, -2 * np.ones_like(U))
        return value, du, dv, duu, duv, dvv

    # area element is (1 + u^2 + v^2)^2; integrate the expansion exactly
    mu = {k: _moment(dom.u_min, dom.u_max, k) for k in (0, 2, 4)}
    mv = {k: _moment(dom.v_min, dom.v_max, k) for k in (0, 2, 4)}
    area = (mu[0] * mv[0] + mu[4] * mv[0] + mu[0] * mv[4]
            + 2 * mu[2] * mv[0] + 2 * mu[0] * mv[2] + 2 * mu[2] * mv[2])
    return AnalyticFamily("enneper", {}, 3, dom, True, True, True, True, jets,
                          {"energy": 2 * area, "area": area,
                           "functional": 2 * area})


def _saddle_graph(domain: Rectangle | None) -> AnalyticFamily:
    dom = domain or Rectangle(-1.0, 1.0, -1.0, 1.0)

    def jets(U, V):
        Z = np.zeros_like(U)
        O = np.ones_like(U)
        value = _stack(U, V, U**2 - V**2)
        du = _stack(O, Z, 2 * U)
        dv = _stack(Z, O, -2 * V)
        duu = _stack(Z, Z, 2 * O)
        duv = _stack(Z, Z, Z)
        dvv = _stack(Z, Z, -2 * O)
        return value, du, dv, duu, duv, dvv

    energy = (2 * _moment(dom.u_min, dom.u_max, 0) * _moment(dom.v_min, dom.v_max, 0)
              + 4 * _moment(dom.u_min, dom.u_max, 2) * _moment(dom.v_min, dom.v_max, 0)
              + 4 * _moment(dom.u_min, dom.u_max, 0) * _moment(dom.v_min, dom.v_max, 2))
    return AnalyticFamily("saddle_graph", {}, 3, dom, True, False, False, True,
                          jets, {"energy": energy})


def _exp_cos_graph(domain: Rectangle | None) -> AnalyticFamily:
    dom = domain or Rectangle(0.0, 1.0, 0.0, 1.0)

    def jets(U, V):
        Z = np.zeros_like(U)
        O = np.ones_like(U)
        eu = np.exp(U)
        cv, sv = np.cos(V), np.sin(V)
        value = _stack(U, V, eu * cv)
        du = _stack(O, Z, eu * cv)
        dv = _stack(Z, O, -eu * sv)
        duu = _stack(Z, Z, eu * cv)
        duv = _stack(Z, Z, -eu * sv)
        dvv = _stack(Z, Z, -eu * cv)
        return value, du, dv, duu, duv, dvv

    width_v = dom.v_max - dom.v_min
    energy = (2 * _rect_area(dom)
              + width_v * (math.exp(2 * dom.u_max) - math.exp(2 * dom.u_min)) / 2)
    return AnalyticFamily("exp_cos_graph", {}, 3, dom, True, False, False, True,
                          jets, {"energy": energy})


def _radial_family(alpha: float, beta: float, gamma: float,
                   domain: Annulus | None) -> AnalyticFamily:
    dom = domain or Annulus(1.0, 2.0)

    def jets(R_, PHI):
        R_ = np.asarray(R_, dtype=float)
        PHI = np.asarray(PHI, dtype=float)
        c, s = np.cos(PHI), np.sin(PHI)
        Z = np.zeros_like(R_)
        rad = alpha * R_ + beta / R_
        radp = alpha - beta / R_**2
        radpp = 2 * beta / R_**3
        val = _stack(rad * c, rad * s, gamma * np.log(R_))
        d_r = _stack(radp * c, radp * s, gamma / R_)
        d_phi = _stack(-rad * s, rad * c, Z)
        d_rr = _stack(radpp * c, radpp * s, -gamma / R_**2)
        d_rphi = _stack(-radp * s, radp * c, Z)
        d_phiphi = _stack(-rad * c, -rad * s, Z)
        return polar_jet_to_cartesian(R_, PHI, val, d_r, d_phi,
                                      d_rr, d_rphi, d_phiphi)

    r0, r1 = dom.r_min, dom.r_max
    energy = TWO_PI * (alpha**2 * (r1**2 - r0**2)
                       + gamma**2 * math.log(r1 / r0)
                       + beta**2 * (1.0 / r0**2 - 1.0 / r1**2))
    conformal = beta == 0.0 and gamma == 0.0
    # radial symmetry forces orthogonal pullbacks, so the curvature
    # functional equals the energy exactly
    return AnalyticFamily("radial_family",
                          {"alpha": alpha, "beta": beta, "gamma": gamma},
                          3, dom, True, conformal, False, True, jets,
                          {"energy": energy, "functional": energy})


def _sphere_patch(radius: float, domain: Rectangle | None) -> AnalyticFamily:
    dom = domain or Rectangle(0.0, TWO_PI, 0.3, 1.2, periodic_u=True)

    def jets(U, V):
        cu, su = np.cos(U), np.sin(U)
        cv, sv = np.cos(V), np.sin(V)
        Z = np.zeros_like(U)
        R = radius
        value = _stack(R * sv * cu, R * sv * su, R * cv)
        du = _stack(-R * sv * su, R * sv * cu, Z)
        dv = _stack(R * cv * cu, R * cv * su, -R * sv)
        duu = _stack(-R * sv * cu, -R * sv * su, Z)
        duv = _stack(-R * cv * su, R * cv * cu, Z)
        dvv = _stack(-R * sv * cu, -R * sv * su, -R * cv)
        return value, du, dv, duu, duv, dvv

    return AnalyticFamily("sphere_patch", {"radius": radius}, 3, dom,
                          False, False, False, False, jets)


def _stretched_catenoid(lam: float, domain: Rectangle | None) -> AnalyticFamily:
    dom = domain or Rectangle(0.0, TWO_PI, -1.0, 1.0, periodic_u=True)

    def jets(U, V):
        cu, su = np.cos(U), np.sin(U)
        cv, sv = np.cosh(lam * V), np.sinh(lam * V)
        Z = np.zeros_like(U)
        O = np.ones_like(U)
        value = _stack(cv * cu, cv * su, lam * V)
        du = _stack(-cv * su, cv * cu, Z)
        dv = lam * _stack(sv * cu, sv * su, O)
        duu = _stack(-cv * cu, -cv * su, Z)
        duv = lam * _stack(-sv * su, sv * cu, Z)
        dvv = lam * lam * _stack(cv * cu, cv * su, Z)
        return value, du, dv, duu, duv, dvv

    return AnalyticFamily("stretched_catenoid", {"lam": lam}, 3, dom,
                          lam == 1.0, lam == 1.0, True, True, jets)


def _cylinder_patch(radius: float, domain: Rectangle | None) -> AnalyticFamily:
    dom = domain or Rectangle(0.0, TWO_PI, -1.0, 1.0, periodic_u=True)

    def jets(U, V):
        cu, su = np.cos(U), np.sin(U)
        Z = np.zeros_like(U)
        O = np.ones_like(U)
        R = radius
        value = _stack(R * cu, R * su, V)
        du = _stack(-R * su, R * cu, Z)
        dv = _stack(Z, Z, O)
        duu = _stack(-R * cu, -R * su, Z)
        duv = _stack(Z, Z, Z)
        dvv = _stack(Z, Z, Z)
        return value, du, dv, duu, duv, dvv

    return AnalyticFamily("cylinder_patch", {"radius": radius}, 3, dom,
                          False, radius == 1.0, False, False, jets)


_BUILDERS = {
    "identity_plane": lambda params, dom: _identity_plane(dom),
    "affine_plane": lambda params, dom: _affine_plane(
        float(params.get("p", 2.0)), float(params.get("q", 1.0)), dom),
    "catenoid": lambda params, dom: _catenoid(dom),
    "helicoid": lambda params, dom: _helicoid(dom),
    "enneper": lambda params, dom: _enneper(dom),
    "saddle_graph": lambda params, dom: _saddle_graph(dom),
    "exp_cos_graph": lambda params, dom: _exp_cos_graph(dom),
    "radial_family": lambda params, dom: _radial_family(
        float(params.get("alpha", 1.0)), float(params.get("beta", 0.5)),
        float(params.get("gamma", 1.0)), dom),
    "sphere_patch": lambda params, dom: _sphere_patch(
        float(params.get("radius", 1.0)), dom),
    "stretched_catenoid": lambda params, dom: _stretched_catenoid(
        float(params.get("lam", 2.0)), dom),
    "cylinder_patch": lambda params, dom: _cylinder_patch(
        float(params.get("radius", 1.0)), dom),
}

FAMILY_NAMES = tuple(sorted(_BUILDERS))


def make_family(name: str, parameters: dict | None = None,
                domain: DomainSpec | None = None) -> AnalyticFamily:
    """Construct a built-in family by name, with optional domain override."""
    if name not in _BUILDERS:
        raise KeyError(f"unknown family {name!r}; choices: {', '.join(FAMILY_NAMES)}")
    return _BUILDERS[name](parameters or {}, domain)
