"""Composite trapezoid quadrature on tensor grids.

Periodic axes use the full periodic sum (every node weighted h); open
axes halve the end weights.  Annulus grids carry the polar area measure
r dr dphi so that integrands stay in Cartesian form.  Richardson pairing
of two resolutions supplies the error estimates quoted in reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .families import Annulus, DomainSpec, grid_axes


def trapezoid_weights(n_nodes: int, spacing: float, periodic: bool) -> np.ndarray:
    """1-d composite trapezoid weights for a uniform axis."""
    w = np.full(n_nodes, spacing)
    if not periodic:
        w[0] *= 0.5
        w[-1] *= 0.5
    return w


@dataclass(frozen=True)
class Quadrature:
    """Tensor-product trapezoid rule bound to one grid."""

    wu: np.ndarray
    wv: np.ndarray
    measure: np.ndarray  # (nu, nv) area-measure factor (polar r, or ones)

    @classmethod
    def for_domain(cls, domain: DomainSpec, resolution: int) -> "Quadrature":
        u, v, hu, hv = grid_axes(domain, resolution)
        (_, _, per_u), (_, _, per_v) = domain.axes()
        wu = trapezoid_weights(u.shape[0], hu, per_u)
        wv = trapezoid_weights(v.shape[0], hv, per_v)
        return cls(wu, wv, cls._measure_for(domain, u, v))

    @classmethod
    def for_subgrid(cls, domain: DomainSpec, u: np.ndarray, v: np.ndarray,
                    hu: float, hv: float) -> "Quadrature":
        """Rule over an interior sub-grid (used for discrete solutions)."""
        (_, _, per_u), (_, _, per_v) = domain.axes()
        wu = trapezoid_weights(u.shape[0], hu, per_u)
        wv = trapezoid_weights(v.shape[0], hv, per_v)
        return cls(wu, wv, cls._measure_for(domain, u, v))

    @staticmethod
    def _measure_for(domain: DomainSpec, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        if isinstance(domain, Annulus):
            # Cartesian area element du dv = r dr dphi on a polar grid
            return np.repeat(u[:, None], v.shape[0], axis=1)
        return np.ones((u.shape[0], v.shape[0]))

    @property
    def weights(self) -> np.ndarray:
        return self.wu[:, None] * self.wv[None, :] * self.measure

    def integrate(self, values: np.ndarray) -> float:
        """Weighted sum with a fixed (row-major) reduction order."""
        return float(np.sum(values * self.weights))


def richardson_pair(coarse: float, fine: float, order: int = 2):
    """Extrapolated value and error estimate from two nested resolutions.

    Assumes the fine grid halves the spacing of the coarse grid and the
    rule converges at the given order.
    """
    denom = 2.0 ** order - 1.0
    correction = (fine - coarse) / denom
    return fine + correction, abs(correction)
