"""Discrete harmonic maps from Dirichlet data on tensor grids.

Each ambient component satisfies the 5-point discrete Laplace equation;
components decouple, so the solve is a sequence of symmetric
positive-definite linear systems handled by conjugate gradients.  The
matrix is never assembled: the stencil is applied with array slicing,
and every inner product is an exact (order-independent) compensated
sum, which makes the solution bitwise deterministic and bitwise
symmetric under relabeling u <-> v with transposed boundary data.

Annulus domains use the conservative polar-coordinate stencil; extracted
jets are always Cartesian (polar grids go through the exact chain rule),
matching the analytic families.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .families import (Annulus, DomainSpec, JetGrid, domain_from_dict,
                       domain_to_dict, grid_axes, polar_jet_to_cartesian)
from .geometry import Jet2


class SolverError(Exception):
    pass


class InvalidBoundary(SolverError):
    pass


class BoundaryNode(SolverError):
    """Jet requested at or next to a non-periodic boundary."""


class NotConverged(SolverError):
    def __init__(self, residual: float, max_iter: int):
        super().__init__(f"residual {residual:.3e} after {max_iter} iterations")
        self.residual = residual
        self.max_iter = max_iter


@dataclass(frozen=True)
class BoundaryData:
    """Map values on the boundary nodes of the non-periodic axes.

    Keys are among u_min/u_max (axis 0; r on an annulus) and
    v_min/v_max (axis 1); each edge array is shaped
    (nodes along the edge, ambient_dim).
    """

    edges: dict
    ambient_dim: int

    @classmethod
    def from_function(cls, domain: DomainSpec, resolution: int, fn) -> "BoundaryData":
        """Sample a vectorized map (U, V) -> (..., n) on the boundary."""
        u, v, _, _ = grid_axes(domain, resolution)
        (_, _, per_u), (_, _, per_v) = domain.axes()
        edges = {}
        if not per_u:
            edges["u_min"] = np.asarray(fn(np.full_like(v, u[0]), v), dtype=float)
            edges["u_max"] = np.asarray(fn(np.full_like(v, u[-1]), v), dtype=float)
        if not per_v:
            edges["v_min"] = np.asarray(fn(u, np.full_like(u, v[0])), dtype=float)
            edges["v_max"] = np.asarray(fn(u, np.full_like(u, v[-1])), dtype=float)
        if not edges:
            raise InvalidBoundary("domain has no boundary (both axes periodic)")
        dim = next(iter(edges.values())).shape[-1]
        return cls(edges, dim)

    @classmethod
    def from_family(cls, family, resolution: int) -> "BoundaryData":
        """Trace of an analytic family's values along its domain boundary."""
        def values(U, V):
            return family.jet_fn(np.asarray(U, float), np.asarray(V, float))[0]
        return cls.from_function(family.domain, resolution, values)


def _validate_boundary(domain: DomainSpec, resolution: int,
                       boundary: BoundaryData) -> None:
    u, v, _, _ = grid_axes(domain, resolution)
    (_, _, per_u), (_, _, per_v) = domain.axes()
    need = ([] if per_u else ["u_min", "u_max"]) + ([] if per_v else ["v_min", "v_max"])
    if not need:
        raise InvalidBoundary("domain has no boundary (both axes periodic)")
    if sorted(boundary.edges) != sorted(need):
        raise InvalidBoundary(
            f"boundary edges {sorted(boundary.edges)} do not match required {sorted(need)}")
    lengths = {"u_min": v.shape[0], "u_max": v.shape[0],
               "v_min": u.shape[0], "v_max": u.shape[0]}
    for key, arr in boundary.edges.items():
        if arr.ndim != 2 or arr.shape != (lengths[key], boundary.ambient_dim):
            raise InvalidBoundary(
                f"edge {key} has shape {arr.shape}, expected "
                f"({lengths[key]}, {boundary.ambient_dim})")
        if not np.all(np.isfinite(arr)):
            raise InvalidBoundary(f"edge {key} contains non-finite values")
    if not per_u and not per_v:
        scale = max(float(np.max(np.abs(arr))) for arr in boundary.edges.values())
        scale = scale or 1.0
        corners = [("u_min", 0, "v_min", 0), ("u_min", -1, "v_max", 0),
                   ("u_max", 0, "v_min", -1), ("u_max", -1, "v_max", -1)]
        for eu, iu, ev, iv in corners:
            gap = float(np.max(np.abs(boundary.edges[eu][iu] - boundary.edges[ev][iv])))
            if gap > 1e-12 * scale:
                raise InvalidBoundary(f"corner mismatch between {eu} and {ev}: {gap:.3e}")


@dataclass(frozen=True)
class DiscreteMap:
    """Grid-sampled map with solver metadata; immutable after construction."""

    domain: DomainSpec
    u: np.ndarray
    v: np.ndarray
    hu: float
    hv: float
    values: np.ndarray  # (nu, nv, n)
    solver_residual: float
    converged: bool

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def shape(self):
        return self.values.shape[:2]

    @property
    def ambient_dim(self) -> int:
        return self.values.shape[2]


def _exact_dot(a: np.ndarray, b: np.ndarray) -> float:
    # fsum is order-independent (exactly rounded), so transposed problems
    # produce bitwise identical CG coefficients
    return math.fsum((a * b).ravel())


class _Stencil:
    """Discrete Laplacian restricted to the unknown (non-Dirichlet) nodes.

    For annulus domains ``apply`` returns the conservative form (rows
    scaled by r, symmetric); divide by r to read off the PDE residual.
    """

    def __init__(self, domain: DomainSpec, u, v, hu, hv):
        (_, _, self.per_u), (_, _, self.per_v) = domain.axes()
        self.su = slice(None) if self.per_u else slice(1, -1)
        self.sv = slice(None) if self.per_v else slice(1, -1)
        self.polar = isinstance(domain, Annulus)
        if self.polar:
            r_half = (u[:-1] + u[1:]) / 2.0
            self.r_unknown = u[1:-1]
            self.cu_plus = (r_half[1:] / hu**2)[:, None]
            self.cu_minus = (r_half[:-1] / hu**2)[:, None]
            self.cv = (1.0 / self.r_unknown**2 / hv**2)[:, None] * self.r_unknown[:, None]
            self.diag = float(np.max((self.cu_plus + self.cu_minus + 2.0 * self.cv)
                                     / self.r_unknown[:, None]))
        else:
            self.au = 1.0 / hu**2
            self.av = 1.0 / hv**2
            self.diag = 2.0 * self.au + 2.0 * self.av

    def _neighbor_sums(self, x: np.ndarray):
        su, sv = self.su, self.sv
        if self.per_u:
            xu = (np.roll(x, 1, axis=0) + np.roll(x, -1, axis=0))[su, sv]
        else:
            xu = (x[:-2, :] + x[2:, :])[:, sv]
        if self.per_v:
            xv = (np.roll(x, 1, axis=1) + np.roll(x, -1, axis=1))[su, sv]
        else:
            xv = (x[:, :-2] + x[:, 2:])[su, :]
        return xu, xv

    def apply(self, x: np.ndarray) -> np.ndarray:
        center = x[self.su, self.sv]
        if self.polar:
            xp = x[2:, self.sv]
            xm = x[:-2, self.sv]
            if self.per_v:
                xv = (np.roll(x, 1, axis=1) + np.roll(x, -1, axis=1))[self.su, self.sv]
            else:
                xv = (x[:, :-2] + x[:, 2:])[self.su, :]
            return (self.cu_plus * (xp - center) - self.cu_minus * (center - xm)
                    + self.cv * (xv - 2.0 * center))
        xu, xv = self._neighbor_sums(x)
        return self.au * (xu - 2.0 * center) + self.av * (xv - 2.0 * center)

    def residual_max(self, conservative_residual: np.ndarray) -> float:
        """Max-norm PDE residual from the conservative-form residual."""
        if self.polar:
            return float(np.max(np.abs(conservative_residual
                                       / self.r_unknown[:, None])))
        if conservative_residual.size == 0:
            return 0.0
        return float(np.max(np.abs(conservative_residual)))


def _boundary_range(edges: dict, component: int) -> float:
    bvals = np.concatenate([arr[:, component] for arr in edges.values()])
    rng = float(bvals.max() - bvals.min())
    if rng > 0.0:
        return rng
    return max(1.0, float(np.abs(bvals).max()))


def solve(domain: DomainSpec, resolution: int, boundary: BoundaryData,
          tol: float = 1e-11, max_iter: int = 20000) -> DiscreteMap:
    """Solve the component-wise discrete Laplace equation.

    Convergence is judged per component on the diagonally scaled stencil
    residual: the distance of each node from the weighted average of its
    neighbors must fall below tol * (boundary value range), i.e. the
    reported 1/h^2-scaled Laplacian residual falls below that target
    times the stencil diagonal.  Deterministic for fixed inputs; raises
    NotConverged when max_iter is exhausted.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if resolution < 8:
        raise ValueError("resolution must be at least 8 cells per axis")
    _validate_boundary(domain, resolution, boundary)
    u, v, hu, hv = grid_axes(domain, resolution)
    nu, nv = u.shape[0], v.shape[0]
    n = boundary.ambient_dim
    stencil = _Stencil(domain, u, v, hu, hv)
    su, sv = stencil.su, stencil.sv

    values = np.zeros((nu, nv, n))
    worst = 0.0
    failed = False
    for c in range(n):
        full = np.zeros((nu, nv))
        for key, arr in boundary.edges.items():
            if key == "u_min":
                full[0, :] = arr[:, c]
            elif key == "u_max":
                full[-1, :] = arr[:, c]
            elif key == "v_min":
                full[:, 0] = arr[:, c]
            elif key == "v_max":
                full[:, -1] = arr[:, c]
        target = tol * _boundary_range(boundary.edges, c) * stencil.diag

        # A x = b with A = -Laplacian (zero Dirichlet) and b the boundary
        # coupling; the CG residual b - A x is then exactly the discrete
        # Laplacian of the assembled grid.
        b = stencil.apply(full)
        x = np.zeros_like(b)
        embed = np.zeros_like(full)

        def a_mul(p):
            embed[su, sv] = p
            return -stencil.apply(embed)

        r = b.copy()
        p = r.copy()
        rs = _exact_dot(r, r)
        it = 0
        while stencil.residual_max(r) > target:
            if it >= max_iter or rs == 0.0:
                break
            ap = a_mul(p)
            alpha = rs / _exact_dot(p, ap)
            x = x + alpha * p
            r = r - alpha * ap
            rs_new = _exact_dot(r, r)
            p = r + (rs_new / rs) * p
            rs = rs_new
            it += 1
            if it % 128 == 0:
                # refresh the recurrence residual and restart conjugacy
                r = b - a_mul(x)
                p = r.copy()
                rs = _exact_dot(r, r)
        full[su, sv] = x
        true_res = stencil.residual_max(stencil.apply(full))
        worst = max(worst, true_res)
        if true_res > target:
            failed = True
        values[:, :, c] = full

    if failed:
        raise NotConverged(worst, max_iter)
    return DiscreteMap(domain=domain, u=u, v=v, hu=hu, hv=hv, values=values,
                       solver_residual=worst, converged=True)


def residual(dm: DiscreteMap) -> float:
    """Max interior 5-point Laplacian magnitude over nodes and components."""
    stencil = _Stencil(dm.domain, dm.u, dm.v, dm.hu, dm.hv)
    worst = 0.0
    for c in range(dm.ambient_dim):
        worst = max(worst, stencil.residual_max(stencil.apply(dm.values[:, :, c])))
    return worst


def sample_family(family, resolution: int) -> DiscreteMap:
    """Exact samples of an analytic family packaged as a DiscreteMap."""
    u, v, hu, hv = grid_axes(family.domain, resolution)
    U, V = np.meshgrid(u, v, indexing="ij")
    values = family.jet_fn(U, V)[0]
    dm = DiscreteMap(domain=family.domain, u=u, v=v, hu=hu, hv=hv,
                     values=np.ascontiguousarray(values),
                     solver_residual=math.nan, converged=False)
    return dm


def _axis_index(i: int, n: int, periodic: bool, name: str) -> tuple:
    """Neighbor indices (i-1, i, i+1) with wraparound on periodic axes."""
    if periodic:
        return ((i - 1) % n, i % n, (i + 1) % n)
    if i < 1 or i > n - 2:
        raise BoundaryNode(f"node {i} too close to the non-periodic {name} boundary")
    return (i - 1, i, i + 1)


def jets_from_grid(dm: DiscreteMap, node: tuple) -> Jet2:
    """Second-order central-difference jet at a grid node.

    Nodes must be at least one cell away from any non-periodic boundary.
    Annulus grids return Cartesian jets via the exact polar chain rule.
    """
    i, j = node
    (_, _, per_u), (_, _, per_v) = dm.domain.axes()
    nu, nv = dm.shape
    im, ic, ip = _axis_index(i, nu, per_u, "u")
    jm, jc, jp = _axis_index(j, nv, per_v, "v")
    w = dm.values
    val = w[ic, jc]
    d1u = (w[ip, jc] - w[im, jc]) / (2 * dm.hu)
    d1v = (w[ic, jp] - w[ic, jm]) / (2 * dm.hv)
    d2uu = (w[ip, jc] - 2 * w[ic, jc] + w[im, jc]) / dm.hu**2
    d2vv = (w[ic, jp] - 2 * w[ic, jc] + w[ic, jm]) / dm.hv**2
    d2uv = (w[ip, jp] - w[ip, jm] - w[im, jp] + w[im, jm]) / (4 * dm.hu * dm.hv)
    if isinstance(dm.domain, Annulus):
        _, du, dv, duu, duv, dvv = polar_jet_to_cartesian(
            dm.u[ic], dm.v[jc], val, d1u, d1v, d2uu, d2uv, d2vv)
        return Jet2(val, du, dv, duu, duv, dvv)
    return Jet2(val, d1u, d1v, d2uu, d2uv, d2vv)


def interior_jet_grid(dm: DiscreteMap) -> JetGrid:
    """Vectorized central-difference jets on the interior sub-grid.

    Non-periodic axes lose their outermost node ring (one-sided stencils
    are never used); periodic axes keep every node.
    """
    (_, _, per_u), (_, _, per_v) = dm.domain.axes()
    w = dm.values

    def block(step_u: int, step_v: int) -> np.ndarray:
        a = w
        if per_u:
            a = np.roll(a, -step_u, axis=0)
        else:
            a = a[1 + step_u: a.shape[0] - 1 + step_u, :, :]
        if per_v:
            a = np.roll(a, -step_v, axis=1)
        else:
            a = a[:, 1 + step_v: a.shape[1] - 1 + step_v, :]
        return a

    c = block(0, 0)
    pu, mu = block(1, 0), block(-1, 0)
    pv, mv = block(0, 1), block(0, -1)
    d1u = (pu - mu) / (2 * dm.hu)
    d1v = (pv - mv) / (2 * dm.hv)
    d2uu = (pu - 2 * c + mu) / dm.hu**2
    d2vv = (pv - 2 * c + mv) / dm.hv**2
    d2uv = (block(1, 1) - block(1, -1) - block(-1, 1) + block(-1, -1)) / (4 * dm.hu * dm.hv)
    iu = dm.u if per_u else dm.u[1:-1]
    iv = dm.v if per_v else dm.v[1:-1]
    if isinstance(dm.domain, Annulus):
        R, PHI = np.meshgrid(iu, iv, indexing="ij")
        _, du, dv, duu, duv, dvv = polar_jet_to_cartesian(
            R, PHI, c, d1u, d1v, d2uu, d2uv, d2vv)
        return JetGrid(domain=dm.domain, u=iu, v=iv, hu=dm.hu, hv=dm.hv,
                       value=c, du=du, dv=dv, duu=duu, duv=duv, dvv=dvv)
    return JetGrid(domain=dm.domain, u=iu, v=iv, hu=dm.hu, hv=dm.hv,
                   value=c, du=d1u, dv=d1v, duu=d2uu, duv=d2uv, dvv=d2vv)


def excluded_area_fraction(dm: DiscreteMap) -> float:
    """Domain-area fraction of the boundary ring dropped by the jet grid."""
    (lo_u, hi_u, per_u), (lo_v, hi_v, per_v) = dm.domain.axes()
    if isinstance(dm.domain, Annulus):
        r0, r1 = lo_u, hi_u
        ri0, ri1 = r0 + dm.hu, r1 - dm.hu
        return 1.0 - (ri1**2 - ri0**2) / (r1**2 - r0**2)
    full_u = hi_u - lo_u
    full_v = hi_v - lo_v
    inner_u = full_u if per_u else full_u - 2 * dm.hu
    inner_v = full_v if per_v else full_v - 2 * dm.hv
    return 1.0 - (inner_u * inner_v) / (full_u * full_v)


# ---------------------------------------------------------------------------
# CSV round-trip (17 significant digits, bit-exact)
# ---------------------------------------------------------------------------

def save_csv(dm: DiscreteMap, path) -> None:
    buf = io.StringIO()
    buf.write("# energyarea discrete map v1\n")
    buf.write(f"# domain {json.dumps(domain_to_dict(dm.domain), sort_keys=True)}\n")
    buf.write(f"# dims {dm.shape[0]} {dm.shape[1]}\n")
    buf.write(f"# spacing {dm.hu:.17g} {dm.hv:.17g}\n")
    buf.write(f"# ambient_dim {dm.ambient_dim}\n")
    buf.write(f"# solver_residual {dm.solver_residual:.17g}\n")
    buf.write(f"# converged {int(dm.converged)}\n")
    cols = ",".join(f"x{k}" for k in range(dm.ambient_dim))
    buf.write(f"i,j,{cols}\n")
    nu, nv = dm.shape
    for i in range(nu):
        for j in range(nv):
            vals = ",".join(f"{x:.17g}" for x in dm.values[i, j])
            buf.write(f"{i},{j},{vals}\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_csv(path) -> DiscreteMap:
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].strip().split(None, 1)
                if len(parts) == 2:
                    meta[parts[0]] = parts[1]
                continue
            if line.startswith("i,j"):
                continue
            rows.append(line.split(","))
    domain = domain_from_dict(json.loads(meta["domain"]))
    nu, nv = (int(x) for x in meta["dims"].split())
    hu, hv = (float(x) for x in meta["spacing"].split())
    n = int(meta["ambient_dim"])
    values = np.zeros((nu, nv, n))
    for row in rows:
        i, j = int(row[0]), int(row[1])
        values[i, j] = [float(x) for x in row[2:2 + n]]
    (lo_u, hi_u, per_u), (lo_v, hi_v, per_v) = domain.axes()
    u = lo_u + hu * np.arange(nu) if per_u else np.linspace(lo_u, hi_u, nu)
    v = lo_v + hv * np.arange(nv) if per_v else np.linspace(lo_v, hi_v, nv)
    res = float(meta["solver_residual"])
    return DiscreteMap(domain=domain, u=u, v=v, hu=hu, hv=hv, values=values,
                       solver_residual=res, converged=bool(int(meta["converged"])))
