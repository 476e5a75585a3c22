"""Turn engine runs into :class:`~gcflab.diagnostics.RunReport` objects."""
from __future__ import annotations

import math

import numpy as np

from . import closed_flow as cf
from . import graph_flow as gf
from .diagnostics import CheckSpec, RunReport, config_echo
from .geometry import unit_sphere_area

CLOSED_TOLERANCES = {
    "first_derivative": 1e-2,
    "monotonicity": 1e-3,
    "equality": 1e-3,
    "dissipation": 1e-2,
    "concavity": 1e-6,
    "harnack": 1e-3,
    "gauss_bonnet": 1e-6,
    "radius": 1e-3,
}
GRAPH_TOLERANCES = {
    "comparison": 1.0,
    "time_harnack": 1e-3,
    "speed": 2e-2,
    "profile": 1e-2,
}
SOLITON_TOLERANCES = {"lambda": 5e-3, "residual": 1e-3, "t_deviation": 1e-3}


def closed_report(run, run_id="closed", tolerances=None):
    tol = {**CLOSED_TOLERANCES, **(tolerances or {})}
    cfg = run.config
    n, alpha = cfg.n, cfg.alpha
    recs = cf.fill_slacks(run)
    rows = []
    for r in recs:
        rows.append(
            {
                "t": r.t, "N": r.N, "J": r.J, "D2": r.D2, "harnack_slack": r.harnack_slack,
                "mono_slack1": r.mono_slack1, "mono_slack2": r.mono_slack2, "concavity_dd": r.concavity_dd,
            }
        )
    specs = [CheckSpec("harnack", "harnack_slack", "min_ge", -tol["harnack"])]
    if len(recs) >= 5:
        J = np.array([r.J for r in recs])
        N = np.array([r.N for r in recs])
        first = cf.check_first_derivative(recs, alpha)
        dis = cf.check_dissipation_identity(recs, alpha)
        for j, k in enumerate(range(2, len(recs) - 2)):
            rows[k]["first_deriv_rel"] = first.slack[j] / max(abs(J[k]), 1e-6)
            rows[k]["dissipation_rel"] = dis.relative[j]
            if recs[k].mono_slack2 is not None:
                rows[k]["mono2_rel"] = recs[k].mono_slack2 / (J[k] ** 2 / N[k])
        if alpha != 1:
            conc = cf.check_concavity(recs, alpha)
            for j, k in enumerate(range(2, len(recs) - 2)):
                rows[k]["concavity_rel"] = conc.relative[j]
            specs.append(CheckSpec("concavity", "concavity_rel", "max_le", tol["concavity"]))
        specs.append(CheckSpec("first_derivative", "first_deriv_rel", "abs_le", tol["first_derivative"]))
        specs.append(CheckSpec("dissipation", "dissipation_rel", "abs_le", tol["dissipation"]))
        if alpha >= (n - 1) / (2 * n):
            specs.append(CheckSpec("monotonicity", "mono2_rel", "min_ge", -tol["monotonicity"]))
            if cfg.shape in ("circle", "sphere"):
                specs.append(CheckSpec("equality", "mono2_rel", "abs_le", tol["equality"]))
    if alpha == 1:
        wn = unit_sphere_area(n)
        for row in rows:
            row["gb_err"] = row["N"] / wn - 1
        specs.append(CheckSpec("gauss_bonnet", "gb_err", "abs_le", tol["gauss_bonnet"]))
    if cfg.shape in ("circle", "sphere"):
        for row, s in zip(rows, run.states):
            r = cf.sphere_radius(cfg.radius, s.t, n, alpha)
            row["radius_err"] = float(np.mean(s.h)) / r - 1
        specs.append(CheckSpec("radius", "radius_err", "abs_le", tol["radius"]))
    return RunReport(
        run_id=run_id, config=config_echo(cfg), rows=rows, specs=specs, terminal_status=run.status, steps=run.steps
    )


def graph_report(run, run_id="graph", soliton=None, tolerances=None, mask=None):
    tol = {**GRAPH_TOLERANCES, **(tolerances or {})}
    grid = run.grid
    mask = grid.inner if mask is None else mask
    cfg = run.config
    n, alpha = cfg.n, cfg.alpha
    rows = []
    speeds = [gf.graph_speed(s) for s in run.states]
    ref = None
    if soliton is not None:
        ref = soliton.values if soliton.representation == "grid" else soliton.on_grid(grid)
    for i, (s, rec, ent) in enumerate(zip(run.states, run.interior, run.entropies)):
        row = {
            "t": s.t, "min_ut": rec.min_ut, "max_ut": rec.max_ut, "inv_lambda_min": rec.max_inv_lambda_min,
            "osc": rec.osc, "max_inv_nu": rec.max_inv_nu, "dissipation": ent.D2,
        }
        if i > 0 and run.states[i - 1].t >= gf.HARNACK_T_FLOOR - 1e-12:
            t1 = run.states[i - 1].t
            row["harnack_slack"] = gf.check_time_harnack(speeds[i - 1], t1, speeds[i], s.t, mask, n, alpha)
        if run.comparisons:
            c = run.comparisons[i]
            row["cmp_lower"], row["cmp_upper"] = c.lower_violation, c.upper_violation
            row["cmp_ratio"] = max(c.lower_violation, c.upper_violation) / c.tolerance
        if soliton is not None:
            row["speed_err"] = abs(run.center_speed[i] - soliton.lam) / soliton.lam
            row["profile_err"] = gf.normalized_difference(s.u, ref, mask)
        rows.append(row)
    specs = [
        CheckSpec("time_harnack", "harnack_slack", "min_ge", -tol["time_harnack"]),
        CheckSpec("interior_positivity", "min_ut", "min_ge", 0.0),
    ]
    notes = {}
    if run.comparisons:
        specs.append(CheckSpec("comparison", "cmp_ratio", "max_le", tol["comparison"]))
        worst = max(run.comparisons, key=lambda c: max(c.lower_violation, c.upper_violation))
        if worst.node is not None:
            notes["comparison.node"] = worst.node
    lam_measured = float(run.center_speed[-1])
    if soliton is not None:
        specs.append(CheckSpec("speed", "speed_err", "last_le", tol["speed"]))
        specs.append(CheckSpec("profile", "profile_err", "last_le", tol["profile"]))
    return RunReport(
        run_id=run_id, config=config_echo(cfg), rows=rows, specs=specs, terminal_status=run.status, steps=run.steps,
        lambda_measured=lam_measured, lambda_target=None if soliton is None else soliton.lam, notes=notes,
    )


def soliton_report(profile, check, target, run_id="soliton", config=None, tolerances=None, assert_speed=True,
                   notes=None):
    """Single-row report; ``assert_speed=False`` records the speed error without checking it."""
    tol = {**SOLITON_TOLERANCES, **(tolerances or {})}
    row = {
        "t": 0.0,
        "speed_err": abs(profile.lam - target) / target,
        "residual": check.residual,
        "t_deviation": check.t_deviation / profile.lam if not math.isnan(check.t_deviation) else None,
    }
    specs = [CheckSpec("residual", "residual", "abs_le", tol["residual"])]
    if assert_speed:
        specs.insert(0, CheckSpec("lambda", "speed_err", "abs_le", tol["lambda"]))
    if row["t_deviation"] is not None:
        specs.append(CheckSpec("t_deviation", "t_deviation", "abs_le", tol["t_deviation"]))
    return RunReport(
        run_id=run_id, config=config_echo(config or {}), rows=[row], specs=specs, terminal_status="completed",
        lambda_measured=profile.lam, lambda_target=target, notes=dict(notes or {}),
    )
