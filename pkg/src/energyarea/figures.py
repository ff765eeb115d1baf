"""Matplotlib rendering for the report paths.

Every figure goes straight to a file next to the delimited output; no
interactive backends are touched.  Rendering is best-effort decoration
of the CSV/JSON data and never feeds back into verdicts.
"""

from __future__ import annotations

import math

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt
    return plt


def render_field_maps(field, path, title: str = "") -> None:
    """Heatmap panel of the pointwise integrands and residuals."""
    plt = _pyplot()
    panels = [
        ("energy density", field.energy_density, None),
        ("area element", field.area_element, None),
        ("factor", np.where(np.isfinite(field.factor), field.factor, np.nan), None),
        ("sin 2theta", field.sin2theta, (0.0, 1.0)),
        ("balance residual", field.balance_residual, None),
        ("energy identity residual", field.energy_identity_residual, None),
    ]
    fig, axes = plt.subplots(2, 3, figsize=(13, 7), constrained_layout=True)
    u = field.jets.u
    v = field.jets.v
    for ax, (name, data, limits) in zip(axes.ravel(), panels):
        values = np.ma.masked_invalid(np.asarray(data, dtype=float))
        kwargs = {}
        if limits is not None:
            kwargs = {"vmin": limits[0], "vmax": limits[1]}
        mesh = ax.pcolormesh(u, v, values.T, cmap="viridis", shading="nearest",
                             **kwargs)
        fig.colorbar(mesh, ax=ax, shrink=0.85)
        ax.set_title(name, fontsize=10)
        ax.set_xlabel("u")
        ax.set_ylabel("v")
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_verify_summary(reports: list, path, title: str = "") -> None:
    """Chain quantities and margins across the configured resolutions."""
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
    res = [r.resolution for r in reports]
    ax1.plot(res, [r.energy for r in reports], "o-", label="energy")
    finite_f = [r.functional_F if math.isfinite(r.functional_F) else np.nan
                for r in reports]
    ax1.plot(res, finite_f, "s-", label="curvature functional")
    ax1.plot(res, [r.two_area for r in reports], "^-", label="2 x area")
    ax1.set_xlabel("resolution")
    ax1.set_xscale("log", base=2)
    ax1.set_ylabel("value")
    ax1.legend(fontsize=8)
    ax1.set_title("chain quantities")

    left = [r.left_margin if r.left_margin is not None else np.nan for r in reports]
    right = [r.right_margin if r.right_margin is not None else np.nan for r in reports]
    ax2.plot(res, left, "o-", label="energy - functional")
    ax2.plot(res, right, "s-", label="functional - 2 area")
    ax2.axhline(0.0, color="k", lw=0.8)
    ax2.set_xlabel("resolution")
    ax2.set_xscale("log", base=2)
    ax2.set_ylabel("margin")
    ax2.legend(fontsize=8)
    ax2.set_title("margins")
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_sweep(rows: list, param_names: list, path, title: str = "") -> None:
    """Margins against the first swept parameter (one line per tuple rest)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5), constrained_layout=True)
    xs, lefts, rights = [], [], []
    for params, rep, _err in rows:
        if rep is None or rep.left_margin is None:
            continue
        xs.append(params[param_names[0]])
        lefts.append(rep.left_margin)
        rights.append(rep.right_margin)
    order = np.argsort(xs) if xs else []
    xs = np.asarray(xs)[order] if len(xs) else xs
    if len(xs):
        ax.plot(xs, np.asarray(lefts)[order], "o", label="energy - functional")
        ax.plot(xs, np.asarray(rights)[order], "s", label="functional - 2 area")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel(param_names[0])
    ax.set_ylabel("margin")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_convergence(rows: list, path, title: str = "") -> None:
    """Log-log error decay per quantity with a second-order guide line."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.5, 4.5), constrained_layout=True)
    by_quantity: dict = {}
    for row in rows:
        by_quantity.setdefault(row["quantity"], []).append(row)
    drew = False
    for quantity, qrows in by_quantity.items():
        hs = np.array([r["h"] for r in qrows])
        errs = np.array([r["abs_error"] for r in qrows])
        keep = errs > 0
        if not np.any(keep):
            continue
        ax.loglog(hs[keep], errs[keep], "o-", label=quantity)
        drew = True
    if drew:
        hs = np.array(sorted({r["h"] for r in rows}))
        ref = hs ** 2 * max(r["abs_error"] for r in rows) / max(hs) ** 2
        ax.loglog(hs, ref, "k--", lw=0.8, label="order 2")
    ax.set_xlabel("grid spacing h")
    ax.set_ylabel("|computed - reference|")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=130)
    plt.close(fig)
