import math

import numpy as np
import pytest

from energyarea.geometry import Jet2


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def rotate_domain_jet(jet: Jet2, angle: float) -> Jet2:
    """Jet of h composed with a rotation of the (u, v) parameter plane."""
    c, s = math.cos(angle), math.sin(angle)
    return Jet2(
        value=jet.value,
        du=c * jet.du + s * jet.dv,
        dv=-s * jet.du + c * jet.dv,
        duu=c * c * jet.duu + 2 * c * s * jet.duv + s * s * jet.dvv,
        duv=-c * s * jet.duu + (c * c - s * s) * jet.duv + c * s * jet.dvv,
        dvv=s * s * jet.duu - 2 * c * s * jet.duv + c * c * jet.dvv,
    )


def ambient_motion_jet(jet: Jet2, rotation: np.ndarray,
                       translation: np.ndarray) -> Jet2:
    """Jet of Q h + t for a rigid motion (Q, t) of the ambient space."""
    return Jet2(
        value=rotation @ jet.value + translation,
        du=rotation @ jet.du, dv=rotation @ jet.dv,
        duu=rotation @ jet.duu, duv=rotation @ jet.duv,
        dvv=rotation @ jet.dvv,
    )


def random_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-ish random rotation matrix with det +1."""
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
