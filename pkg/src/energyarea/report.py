"""Serialization of verification output: JSON reports and CSV dumps.

JSON reports follow the versioned schema shipped as
``report_schema.json`` and are byte-stable across runs (fixed key order,
shortest-round-trip floats, no timestamps).  The pointwise CSV has a
fixed column order; infinities print as ``inf`` and absent values as
empty fields.
"""

from __future__ import annotations

import csv
import json
import math
from importlib import resources

from .functionals import PointField, VerificationReport

FIELD_COLUMNS = ("u", "v", "class", "energy_density", "area_element", "factor",
                 "sin2theta", "a", "b", "eq9_residual", "eq10_residual",
                 "masked", "mask_reason")


def report_json(report: VerificationReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True,
                      allow_nan=False) + "\n"


def write_report_json(report: VerificationReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(report_json(report))


def load_schema() -> dict:
    text = resources.files("energyarea").joinpath("report_schema.json").read_text()
    return json.loads(text)


def _cell(x: float) -> str:
    if math.isnan(x):
        return ""
    return repr(x)


def write_field_csv(field: PointField, path) -> None:
    nu, nv = field.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FIELD_COLUMNS)
        for i in range(nu):
            for j in range(nv):
                writer.writerow([
                    repr(float(field.jets.u[i])),
                    repr(float(field.jets.v[j])),
                    field.class_name[i, j],
                    repr(float(field.energy_density[i, j])),
                    repr(float(field.area_element[i, j])),
                    repr(float(field.factor[i, j])),
                    _cell(float(field.sin2theta[i, j])),
                    _cell(float(field.a[i, j])),
                    _cell(float(field.b[i, j])),
                    _cell(float(field.balance_residual[i, j])),
                    _cell(float(field.energy_identity_residual[i, j])),
                    "true" if field.masked[i, j] else "false",
                    field.mask_reason[i, j],
                ])


REFINEMENT_COLUMNS = ("resolution", "energy", "functional_F", "two_area",
                      "left_margin", "right_margin", "balance_max", "energy_identity_max",
                      "sin2theta_min", "masked_fraction",
                      "positive_curvature_fraction", "verdict")


def _margin_cell(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def write_refinement_csv(reports: list, path) -> None:
    """One row per resolution of a verify run."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REFINEMENT_COLUMNS)
        for rep in reports:
            balance = rep.balance_residual_stats
            identity = rep.energy_identity_residual_stats
            writer.writerow([
                rep.resolution,
                repr(rep.energy),
                repr(rep.functional_F) if math.isfinite(rep.functional_F) else "inf",
                repr(rep.two_area),
                _margin_cell(rep.left_margin),
                _margin_cell(rep.right_margin),
                _margin_cell(balance["max"] if balance else None),
                _margin_cell(identity["max"] if identity else None),
                _margin_cell(rep.sin2theta_min),
                repr(rep.masked_fraction),
                repr(rep.positive_curvature_fraction),
                rep.verdict,
            ])


def write_sweep_csv(rows: list, param_names: list, path) -> None:
    """Sweep summary: one verification row per parameter tuple."""
    header = list(param_names) + ["energy", "functional_F", "two_area",
                                  "left_margin", "right_margin", "balance_max",
                                  "energy_identity_max", "sin2theta_min",
                                  "masked_fraction", "verdict", "error"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            params, rep, error = row
            cells = [repr(float(params[k])) for k in param_names]
            if rep is None:
                cells += [""] * 9 + [error or "failed"]
            else:
                balance = rep.balance_residual_stats
                identity = rep.energy_identity_residual_stats
                cells += [
                    repr(rep.energy),
                    repr(rep.functional_F) if math.isfinite(rep.functional_F) else "inf",
                    repr(rep.two_area),
                    _margin_cell(rep.left_margin),
                    _margin_cell(rep.right_margin),
                    _margin_cell(balance["max"] if balance else None),
                    _margin_cell(identity["max"] if identity else None),
                    _margin_cell(rep.sin2theta_min),
                    repr(rep.masked_fraction),
                    rep.verdict,
                    error or "",
                ]
            writer.writerow(cells)


CONVERGENCE_COLUMNS = ("quantity", "resolution", "h", "value", "oracle",
                       "abs_error", "fitted_order", "in_band", "regime")


def write_convergence_csv(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CONVERGENCE_COLUMNS)
        for row in rows:
            writer.writerow([
                row["quantity"], row["resolution"], repr(row["h"]),
                repr(row["value"]), repr(row["oracle"]),
                repr(row["abs_error"]),
                "" if row["fitted_order"] is None else repr(row["fitted_order"]),
                "" if row["in_band"] is None else str(row["in_band"]).lower(),
                row["regime"],
            ])
