"""Numerical verification toolkit for the curvature-weighted energy-area
inequality satisfied by harmonic maps of surfaces into R^n."""

from .families import (AnalyticFamily, Annulus, DomainSpec, JetGrid,
                       Rectangle, eval_jet, laplacian_residual, make_family,
                       sample_grid, FAMILY_NAMES)
from .functionals import (PointField, PointReport, SolverCase, Thresholds,
                          VerificationReport, curvature_functional,
                          dirichlet_energy, balance_residual_field,
                          energy_identity_residual_field, image_area, pointwise_field,
                          run_verification, verify_chain)
from .geometry import (CurvatureFrame, FirstForm, Jet2, ParamPoint,
                       PointClass, SecondForm, classify_point,
                       curvature_ratio_factor, first_form, gauss_curvature,
                       principal_curvatures, pullback_frame, second_form,
                       unit_normal)
from .quadrature import Quadrature, richardson_pair
from .solver import (BoundaryData, DiscreteMap, interior_jet_grid,
                     jets_from_grid, residual, solve)

__version__ = "0.1.0"

__all__ = [
    "AnalyticFamily", "Annulus", "BoundaryData", "CurvatureFrame",
    "DiscreteMap", "DomainSpec", "FAMILY_NAMES", "FirstForm", "Jet2",
    "JetGrid", "ParamPoint", "PointClass", "PointField", "PointReport",
    "Quadrature", "Rectangle", "SecondForm", "SolverCase", "Thresholds",
    "VerificationReport", "classify_point", "curvature_functional",
    "curvature_ratio_factor", "dirichlet_energy", "balance_residual_field",
    "energy_identity_residual_field", "eval_jet", "first_form", "gauss_curvature",
    "image_area", "interior_jet_grid", "jets_from_grid",
    "laplacian_residual", "make_family", "pointwise_field",
    "principal_curvatures", "pullback_frame", "residual",
    "richardson_pair", "run_verification", "sample_grid", "second_form",
    "solve", "unit_normal", "verify_chain",
]
