"""Command-line driver: verify, solve, sweep, and convergence runs.

Every run is configured by a single JSON document; a minimal config is
``{"case": {...}, "resolutions": [...]}``.  Reports are written as
versioned JSON plus CSV summaries, with matplotlib figures rendered
alongside unless ``--no-figures`` is given.  Exit codes: 0 success /
chain holds, 1 chain violated or band failure, 2 undefined verdict,
3 configuration or I/O error, 4 solver not converged.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import figures, report as report_io, solver as solver_mod
from .families import AnalyticFamily, domain_from_dict, make_family
from .functionals import (SolverCase, Thresholds, run_verification,
                          verify_chain)

EXIT_HOLDS = 0
EXIT_VIOLATED = 1
EXIT_UNDEFINED = 2
EXIT_CONFIG = 3
EXIT_NOT_CONVERGED = 4

DEFAULT_ORDER_BAND = (1.7, 2.3)


class ConfigError(Exception):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _thresholds(config: dict) -> Thresholds:
    raw = config.get("thresholds", {})
    if not isinstance(raw, dict):
        raise ConfigError("thresholds must be an object")
    known = {f for f in Thresholds.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown thresholds: {sorted(unknown)}")
    values = {k: float(v) for k, v in raw.items()}
    if any(v <= 0 for v in values.values()):
        raise ConfigError("thresholds must be positive")
    return Thresholds(**values)


def _resolutions(config: dict) -> list:
    res = config.get("resolutions")
    if (not isinstance(res, list) or not res
            or any(not isinstance(r, int) or r < 4 for r in res)):
        raise ConfigError("resolutions must be a non-empty list of integers >= 4")
    if res != sorted(set(res)):
        raise ConfigError("resolutions must be strictly increasing")
    return res


def _case_source(config: dict):
    """Build the verification source (analytic family or solver case)."""
    case = config.get("case")
    if not isinstance(case, dict):
        raise ConfigError("config needs a 'case' object")
    if "family" in case:
        domain = domain_from_dict(case["domain"]) if "domain" in case else None
        try:
            return make_family(case["family"], case.get("parameters", {}), domain)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    if "solve" in case:
        block = case["solve"]
        if "domain" not in block:
            raise ConfigError("solver case needs a domain")
        domain = domain_from_dict(block["domain"])
        boundary = block.get("boundary", {})
        name = block.get("name", "solver_case")
        tol = float(block.get("tol", 1e-10))
        max_iter = int(block.get("max_iter", 20000))
        if "trace" in boundary:
            trace = boundary["trace"]
            family = make_family(trace["family"], trace.get("parameters", {}),
                                 domain)
            return SolverCase(name=f"{name}:{family.label}", domain=domain,
                              boundary_family=family, tol=tol, max_iter=max_iter)
        if "edges" in boundary:
            edges = {k: np.asarray(v, dtype=float)
                     for k, v in boundary["edges"].items()}
            dim = int(boundary.get("ambient_dim", 3))
            return SolverCase(name=name, domain=domain, boundary_edges=edges,
                              ambient_dim=dim, tol=tol, max_iter=max_iter)
        raise ConfigError("solver boundary needs 'trace' or 'edges'")
    raise ConfigError("case must contain 'family' or 'solve'")


def _slug(label: str) -> str:
    out = []
    for ch in label:
        if ch.isalnum() or ch in "._-":
            out.append(ch)
        elif ch in "(=,:":
            out.append("_")
    return "".join(out).strip("_")


def _source_label(source) -> str:
    return source.label


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    config = _load_config(args.config)
    source = _case_source(config)
    resolutions = _resolutions(config)
    thresholds = _thresholds(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    slug = _slug(_source_label(source))

    reports = run_verification(source, resolutions, thresholds)
    for rep in reports:
        path = out / f"{slug}_res{rep.resolution}.report.json"
        report_io.write_report_json(rep, path)
        if args.fields:
            report_io.write_field_csv(rep.field, out / f"{slug}_res{rep.resolution}.fields.csv")
            if not args.no_figures:
                figures.render_field_maps(rep.field,
                                          out / f"{slug}_res{rep.resolution}.fields.png",
                                          title=f"{_source_label(source)} @ {rep.resolution}")
        _say(args, f"{_source_label(source)} res={rep.resolution}: "
                   f"energy={rep.energy:.9g} F={rep.functional_F:.9g} "
                   f"2A={rep.two_area:.9g} verdict={rep.verdict}")
    report_io.write_refinement_csv(reports, out / f"{slug}_refinement.csv")
    if not args.no_figures:
        figures.render_verify_summary(reports, out / f"{slug}_summary.png",
                                      title=_source_label(source))

    final = reports[-1]
    if final.verdict == "ChainHolds":
        return EXIT_HOLDS
    if final.verdict == "ChainViolated":
        return EXIT_VIOLATED
    print(f"undefined verdict: {final.verdict_reason}", file=sys.stderr)
    return EXIT_UNDEFINED


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    config = _load_config(args.config)
    source = _case_source(config)
    if not isinstance(source, SolverCase):
        raise ConfigError("solve requires a solver case config")
    resolutions = _resolutions(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    slug = _slug(source.name)

    rows = []
    for res in resolutions:
        if source.boundary_family is not None:
            boundary = solver_mod.BoundaryData.from_family(source.boundary_family, res)
        else:
            boundary = solver_mod.BoundaryData(dict(source.boundary_edges),
                                               source.ambient_dim)
        dm = solver_mod.solve(source.domain, res, boundary,
                              tol=source.tol, max_iter=source.max_iter)
        solver_mod.save_csv(dm, out / f"{slug}_res{res}.map.csv")
        row = {"resolution": res, "residual": dm.solver_residual,
               "interior_max_error": ""}
        if source.boundary_family is not None:
            exact = solver_mod.sample_family(source.boundary_family, res)
            err = float(np.max(np.abs(dm.values[1:-1, 1:-1]
                                      - exact.values[1:-1, 1:-1])))
            row["interior_max_error"] = repr(err)
        rows.append(row)
        _say(args, f"solved res={res}: residual={dm.solver_residual:.3e}"
                   + (f" interior_err={row['interior_max_error']}"
                      if row["interior_max_error"] else ""))
    with open(out / f"{slug}_solve.csv", "w") as fh:
        fh.write("resolution,residual,interior_max_error\n")
        for row in rows:
            fh.write(f"{row['resolution']},{row['residual']!r},"
                     f"{row['interior_max_error']}\n")
    return EXIT_HOLDS


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def cmd_sweep(args) -> int:
    config = _load_config(args.config)
    case = config.get("case", {})
    if "family" not in case:
        raise ConfigError("sweep requires an analytic family case")
    sweep_spec = config.get("sweep", {}).get("parameters")
    if not isinstance(sweep_spec, dict) or not (1 <= len(sweep_spec) <= 2):
        raise ConfigError("sweep needs one or two swept parameters")
    for name, values in sweep_spec.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"swept parameter {name!r} needs a non-empty list")
    resolutions = _resolutions(config)
    thresholds = _thresholds(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    param_names = list(sweep_spec)
    base_params = dict(case.get("parameters", {}))
    domain = domain_from_dict(case["domain"]) if "domain" in case else None
    rows = []
    all_hold = True
    for combo in itertools.product(*(sweep_spec[k] for k in param_names)):
        params = dict(base_params)
        params.update(dict(zip(param_names, combo)))
        try:
            family = make_family(case["family"], params, domain)
            reports = run_verification(family, resolutions, thresholds)
            rep = reports[-1]
            rows.append((params, rep, None))
            if rep.verdict != "ChainHolds":
                all_hold = False
            _say(args, f"{family.label}: verdict={rep.verdict} "
                       f"left={rep.left_margin} right={rep.right_margin}")
        except Exception as exc:  # per-row error column, sweep continues
            rows.append((params, None, f"{type(exc).__name__}: {exc}"))
            all_hold = False
    slug = _slug(case["family"]) + "_sweep"
    report_io.write_sweep_csv(rows, param_names, out / f"{slug}.csv")
    if not args.no_figures:
        figures.render_sweep(rows, param_names, out / f"{slug}.png",
                             title=f"{case['family']} sweep")
    return EXIT_HOLDS if all_hold else EXIT_VIOLATED


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------

def _fit_order(hs: list, errors: list, floor: float):
    """Mean pairwise order over consecutive refinements above round-off."""
    pairs = []
    for (h0, e0), (h1, e1) in zip(zip(hs, errors), zip(hs[1:], errors[1:])):
        if e0 <= floor or e1 <= floor:
            continue
        pairs.append(math.log(e0 / e1) / math.log(h0 / h1))
    if not pairs:
        return None
    return sum(pairs) / len(pairs)


def cmd_convergence(args) -> int:
    config = _load_config(args.config)
    source = _case_source(config)
    if not isinstance(source, AnalyticFamily):
        raise ConfigError("convergence requires an analytic family case")
    resolutions = _resolutions(config)
    if len(resolutions) < 2:
        raise ConfigError("convergence needs at least two resolutions")
    thresholds = _thresholds(config)
    band = tuple(config.get("convergence", {}).get("band", DEFAULT_ORDER_BAND))
    if len(band) != 2 or band[0] >= band[1]:
        raise ConfigError("band must be [low, high] with low < high")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    slug = _slug(source.label) + "_convergence"

    reports = [verify_chain(source, res, thresholds) for res in resolutions]
    oracles = {}
    reference = None
    for quantity in ("energy", "area", "functional"):
        if quantity in source.oracles:
            oracles[quantity] = float(source.oracles[quantity])
        else:
            if reference is None:
                reference = verify_chain(source, 4 * resolutions[-1], thresholds)
            oracles[quantity] = {"energy": reference.energy,
                                 "area": reference.two_area / 2.0,
                                 "functional": reference.functional_F}[quantity]

    rows = []
    ok = True
    for quantity in ("energy", "area", "functional"):
        oracle = oracles[quantity]
        values = [{"energy": r.energy, "area": r.two_area / 2.0,
                   "functional": r.functional_F}[quantity] for r in reports]
        if not math.isfinite(oracle) or any(not math.isfinite(v) for v in values):
            raise ConfigError(f"{quantity} is not finite; convergence study undefined")
        hs = [1.0 / r for r in resolutions]
        errors = [abs(v - oracle) for v in values]
        floor = 1e-12 * max(1.0, abs(oracle))
        order = _fit_order(hs, errors, floor)
        if order is None:
            in_band = True  # every refinement already at round-off
        else:
            in_band = band[0] <= order <= band[1]
        ok = ok and in_band
        for res, h, value, err in zip(resolutions, hs, values, errors):
            rows.append({"quantity": quantity, "resolution": res, "h": h,
                         "value": value, "oracle": oracle, "abs_error": err,
                         "fitted_order": order, "in_band": in_band,
                         "regime": "roundoff" if err <= floor else "converging"})
        _say(args, f"{quantity}: fitted order="
                   f"{'n/a (roundoff)' if order is None else f'{order:.3f}'} "
                   f"in_band={in_band}")
    report_io.write_convergence_csv(rows, out / f"{slug}.csv")
    if not args.no_figures:
        figures.render_convergence(rows, out / f"{slug}.png", title=source.label)
    return EXIT_HOLDS if ok else EXIT_VIOLATED


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="energyarea",
        description="Verify the curvature-weighted energy-area inequality "
                    "for harmonic maps of surfaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("verify", cmd_verify), ("solve", cmd_solve),
                     ("sweep", cmd_sweep), ("convergence", cmd_convergence)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--fields", action="store_true",
                       help="dump the pointwise CSV (verify only)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip matplotlib rendering")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress output")
        p.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except solver_mod.NotConverged as exc:
        print(f"solver did not converge: residual={exc.residual:.6e}",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
