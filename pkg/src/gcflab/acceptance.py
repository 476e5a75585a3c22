"""Acceptance suite: fourteen numbered criteria over shared, cached runs.

``Suite.run_all()`` evaluates criteria 1 to 13 and, when an output directory
is given, writes one artifact directory per underlying run plus
``verify.json``.  Criterion 14 (byte-identical artifacts on a repeat) needs
two suites and is evaluated by :func:`check_determinism`.

Timing limits are checked in-process and printed, but never written to the
artifacts, so that repeated runs stay byte-identical.
"""
from __future__ import annotations

import filecmp
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import closed_flow as cf
from . import graph_flow as gf
from .diagnostics import write_artifacts
from .geometry import unit_sphere_area
from .reports import closed_report, graph_report, soliton_report
from .soliton import (
    grim_reaper,
    lambda_disk,
    lambda_gamma,
    lambda_integral,
    paraboloid,
    radial_translator,
    translator_residual,
)

LAMBDA_GRID = [(n, a) for n in (1, 2, 3) for a in (0.6, 0.75, 1.0, 1.5, 2.0, 5.0)]


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "passed", bool(self.passed))

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        detail = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        return f"criterion {self.number:2d} {status}  {self.title}  [{detail}]"


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


# settings of the "core" suite; "quick" trades resolution for speed in unit tests
LEVELS = {
    "core": dict(
        circle_size=512, sphere_size=256, ellipse_size=256, ellipse_ds=0.001, ellipse_t=0.12,
        graph_spacing=0.02, graph_t=15.0, graph_ds=0.5, disk_spacing=0.05, disk_t=5.0,
    ),
    "quick": dict(
        circle_size=256, sphere_size=128, ellipse_size=256, ellipse_ds=0.001, ellipse_t=0.12,
        graph_spacing=0.05, graph_t=15.0, graph_ds=0.5, disk_spacing=0.1, disk_t=5.0,
    ),
}


class Suite:
    def __init__(self, level="core", out_dir=None):
        if level not in LEVELS:
            raise ValueError(f"unknown suite {level!r}; choose from {tuple(LEVELS)}")
        self.level = level
        self.p = LEVELS[level]
        self.out_dir = out_dir
        self._cache = {}
        self.timings = {}

    # ------------------------------------------------------------ runs

    def _cached(self, key, make):
        if key not in self._cache:
            t0 = time.perf_counter()
            self._cache[key] = make()
            self.timings[key] = time.perf_counter() - t0
        return self._cache[key]

    def closed(self, key):
        p = self.p
        table = {
            "circle": cf.ClosedConfig(n=1, alpha=1.0, shape="circle", size=p["circle_size"], sample_interval=0.01,
                                      t_stop=0.3),
            "sphere": cf.ClosedConfig(n=2, alpha=1.0, shape="sphere", size=p["sphere_size"], sample_interval=0.01,
                                      t_stop=0.2),
        }
        for a in (0.7, 1.0, 1.5, 2.0):
            table[f"ellipse_a{a}"] = cf.ClosedConfig(
                n=1, alpha=a, shape="ellipse", axes=(1.0, 0.6), size=p["ellipse_size"],
                sample_interval=p["ellipse_ds"], t_stop=p["ellipse_t"],
            )
            table[f"ellipse_a{a}_coarse"] = cf.ClosedConfig(
                n=1, alpha=a, shape="ellipse", axes=(1.0, 0.6), size=p["ellipse_size"] // 2,
                sample_interval=2 * p["ellipse_ds"], t_stop=p["ellipse_t"],
            )
        return self._cached(("closed", key), lambda: cf.run_closed(table[key]))

    def grim(self):
        return grim_reaper(1.0, margin=0.25)

    def disk_profile(self):
        return self._cached("disk_profile", lambda: radial_translator(2, 1.0, 1.0, margin=0.25))

    def graph(self, key):
        p = self.p
        common = dict(n=1, alpha=1.0, domain="interval", size=1.0, margin=0.25, spacing=p["graph_spacing"],
                      mode="barrier", eps0=0.01, initial="perturbed", t_stop=p["graph_t"],
                      sample_interval=p["graph_ds"])
        table = {
            "interval": (gf.GraphConfig(amplitude=-0.3, seed=0, **common), self.grim),
            "interval_b": (gf.GraphConfig(amplitude=0.5, seed=0, **common), self.grim),
            "disk": (
                gf.GraphConfig(n=2, alpha=1.0, domain="disk", size=1.0, margin=0.25, spacing=p["disk_spacing"],
                               mode="barrier", eps0=0.01, initial="perturbed", amplitude=-0.3,
                               t_stop=p["disk_t"], sample_interval=p["disk_t"] / 10),
                self.disk_profile,
            ),
        }
        cfg, profile = table[key]
        return self._cached(("graph", key), lambda: gf.run_graph(cfg, profile()))

    # ------------------------------------------------------------ criteria

    def criterion_1(self):
        out = {}
        ok = True
        for key, n in (("circle", 1), ("sphere", 2)):
            run = self.closed(key)
            s = run.final
            r = cf.sphere_radius(1.0, s.t, n, 1.0)
            err = float(np.max(np.abs(s.h / r - 1)))
            secs = self.timings[("closed", key)]
            out[f"{key}_rel_err"] = err
            ok &= err <= 1e-3 and run.status == "completed" and secs <= 30.0
        return CriterionResult(1, "shrinking circle and sphere follow r(t)", ok, out)

    def criterion_2(self):
        out = {}
        ok = True
        for key, n in (("circle", 1), ("sphere", 2)):
            N = np.array([r.N for r in self.closed(key).records])
            err = float(np.max(np.abs(N / unit_sphere_area(n) - 1)))
            out[f"{key}_N_err"] = err
            ok &= err <= 1e-6
        return CriterionResult(2, "total curvature N stays at the sphere area for alpha = 1", ok, out)

    def _first_derivative(self, key, alpha):
        recs = self.closed(key).records
        J = np.array([r.J for r in recs])
        s = cf.check_first_derivative(recs, alpha)
        return float(np.max(np.abs(s.slack) / np.maximum(np.abs(J[2:-2]), 1e-6)))

    def criterion_3(self):
        out = {}
        ok = True
        for a in (0.7, 1.5):
            fine = self._first_derivative(f"ellipse_a{a}", a)
            coarse = self._first_derivative(f"ellipse_a{a}_coarse", a)
            out[f"a{a}_residual"] = fine
            out[f"a{a}_coarse"] = coarse
            ok &= fine <= 1e-2 and fine < coarse
        return CriterionResult(3, "dN/dt = (alpha - 1) J on ellipses, shrinking under refinement", ok, out)

    def criterion_4(self):
        out = {}
        ok = True
        for key, a in (("ellipse_a0.7", 0.7), ("ellipse_a1.5", 1.5), ("circle", 1.0)):
            m = cf.check_monotonicity(self.closed(key).records, a, 1)
            rel = m.slack2.slack / m.slack2.scale
            out[f"{key}_min"] = float(rel.min())
            ok &= float(rel.min()) >= -1e-3
            if key == "circle":
                out["circle_max_abs"] = float(np.max(np.abs(rel)))
                ok &= float(np.max(np.abs(rel))) <= 1e-3
        return CriterionResult(4, "dJ/dt >= (1/n + 2 alpha - 1) J^2/N, equality on the circle", ok, out)

    def criterion_5(self):
        out = {}
        ok = True
        for a in (0.7, 1.5):
            d = cf.check_dissipation_identity(self.closed(f"ellipse_a{a}").records, a)
            err = float(np.max(np.abs(d.relative)))
            out[f"a{a}_rel_err"] = err
            ok &= err <= 1e-2
        return CriterionResult(5, "dJ/dt = 2 alpha int P^2 K^alpha dg for curves", ok, out)

    def criterion_6(self):
        out = {}
        ok = True
        for a in (0.7, 2.0):
            c = cf.check_concavity(self.closed(f"ellipse_a{a}").records, a)
            worst = float(np.max(c.relative))
            out[f"a{a}_max_scaled"] = worst
            ok &= worst <= 1e-6
        return CriterionResult(6, "N^(alpha/(1 - alpha)) is concave in t", ok, out)

    def criterion_7(self):
        out = {}
        ok = True
        keys = ["circle", "sphere"] + [f"ellipse_a{a}" for a in (0.7, 1.0, 1.5, 2.0)]
        for key in keys:
            run = self.closed(key)
            slack = cf.check_harnack(cf.state_at(run, 0.05), cf.state_at(run, 0.1))
            out[key] = slack
            ok &= slack >= -1e-3
        return CriterionResult(7, "Harnack bound for Kbar^alpha between t = 0.05 and 0.1", ok, out)

    def criterion_8(self):
        run = self.graph("interval")
        g = self.grim()
        lam = g.lam
        grid = run.grid
        final = run.final
        speed_err = abs(run.center_speed[-1] - lam) / lam
        win = grid.interior & (np.abs(grid.points) <= 0.9 + 1e-12)
        prof = gf.normalized_difference(final.u, g.on_grid(grid), win)
        secs = self.timings[("graph", "interval")]
        limit = 120.0 if self.level == "core" else math.inf
        ok = speed_err <= 0.02 and prof <= 1e-2 and secs <= limit
        return CriterionResult(8, "graph flow on (-1, 1) converges to the grim reaper", ok,
                               {"t": final.t, "speed_err": speed_err, "profile_err": prof})

    def criterion_9(self):
        worst = max(abs(lambda_integral(n, a) - lambda_gamma(n, a)) / lambda_gamma(n, a) for n, a in LAMBDA_GRID)
        prof = self.disk_profile()
        shoot_err = abs(prof.lam - 2.0) / 2.0
        run = self.graph("disk")
        flow_err = abs(run.center_speed[-1] - 2.0) / 2.0
        ok = worst <= 1e-8 and shoot_err <= 5e-3 and flow_err <= 0.02
        return CriterionResult(9, "speed formula: quadrature, shooting and flow agree", ok,
                               {"lambda_rel": worst, "shooting_err": shoot_err, "flow_err": flow_err})

    def criterion_10(self):
        out = {}
        ok = True
        profiles = {"disk_n2": self.disk_profile()}
        profiles["interval_n1"] = self._cached("interval_profile", lambda: radial_translator(1, 1.0, math.pi / 2))
        for key, prof in profiles.items():
            chk = translator_residual(prof)
            out[f"{key}_residual"] = chk.residual
            out[f"{key}_T_dev"] = chk.t_deviation / prof.lam
            ok &= chk.residual <= 1e-3 and chk.t_deviation <= 1e-3 * prof.lam
        neg = translator_residual(paraboloid(), radii=[1.0]).residual
        out["paraboloid"] = neg
        ok &= abs(neg - abs(0.25 - 1 / math.sqrt(2))) <= 1e-3
        return CriterionResult(10, "translators have K^alpha = lam <-nu, e> and constant T", ok, out)

    def criterion_11(self):
        a, b = self.graph("interval"), self.graph("interval_b")
        grid = a.grid
        win = grid.interior & (np.abs(grid.points) <= 0.5 + 1e-12)
        diff = gf.centered_difference(a.final.u, b.final.u, win)
        return CriterionResult(11, "two initial data reach the same limit up to a shift", diff <= 1e-2,
                               {"t": a.final.t, "sup_diff": diff})

    def _interior_series(self):
        run = self.graph("interval")
        mask = run.grid.inner_mask(0.25)
        recs = [gf.interior_monitor(s, mask) for s in run.states]
        return run, mask, recs

    def criterion_12(self):
        run, _, recs = self._interior_series()
        t = run.times
        win = t >= 1 - 1e-12
        min_ut = min(r.min_ut for r, w in zip(recs, win) if w)
        W = np.array([r.max_inv_nu for r in recs])
        late = W[t >= 2 - 1e-12]
        w_ok = bool(np.all(np.isfinite(late)) and np.all(np.diff(late) <= 0))
        lam_min = np.array([1 / r.max_inv_lambda_min for r in recs])
        at_one = float(lam_min[np.argmin(np.abs(t - 1))])
        floor = float(lam_min[win].min())
        ok = min_ut > 0 and w_ok and floor >= at_one / 2
        return CriterionResult(12, "interior speed, gradient and convexity stay controlled", ok, {
            "min_ut": min_ut, "W_max_increase": float(np.max(np.diff(late))), "min_lambda": floor,
            "lambda_at_1": at_one,
        })

    def criterion_13(self):
        run = self.graph("interval")
        t = run.times
        # the run's interior set already has margin 0.25
        D2 = np.array([e.D2 for e in run.entropies])
        ref = float(D2[np.argmin(np.abs(t - 1))])
        tail = D2[(t >= 10 - 1e-12) & (t <= 15 + 1e-12)]
        tail_max = float(tail.max()) if tail.size else math.nan
        ok = tail.size > 0 and tail_max <= 0.1 * ref
        return CriterionResult(13, "dissipation int P^2 K^alpha dg decays", ok, {"D2_at_1": ref, "tail_max": tail_max})

    # ------------------------------------------------------------ artifacts

    def write(self, results):
        if self.out_dir is None:
            return
        for key, run in sorted(((k[1], v) for k, v in self._cache.items() if isinstance(k, tuple) and k[0] == "closed")):
            rep = closed_report(run, run_id=f"closed_{key}")
            write_artifacts(rep, os.path.join(self.out_dir, f"closed_{key}"), plots=("N", "J"))
        profiles = {"interval": self.grim(), "interval_b": self.grim(), "disk": self.disk_profile()}
        for key, run in sorted(((k[1], v) for k, v in self._cache.items() if isinstance(k, tuple) and k[0] == "graph")):
            rep = graph_report(run, run_id=f"graph_{key}", soliton=profiles[key])
            write_artifacts(rep, os.path.join(self.out_dir, f"graph_{key}"), plots=("speed_err", "profile_err"))
        prof = self.disk_profile()
        rep = soliton_report(prof, translator_residual(prof), lambda_disk(2, 1.0, 1.0), run_id="soliton_disk",
                             config={"n": 2, "alpha": 1.0, "R": 1.0, "method": "shooting"})
        write_artifacts(rep, os.path.join(self.out_dir, "soliton_disk"))
        summary = {
            "suite": self.level,
            "criteria": [
                {"number": r.number, "title": r.title, "pass": r.passed,
                 "measured": {k: repr(float(v)) for k, v in r.measured.items()}}
                for r in results
            ],
        }
        with open(os.path.join(self.out_dir, "verify.json"), "w", newline="\n", encoding="utf-8") as fh:
            fh.write(json.dumps(summary, indent=2) + "\n")

    def run_all(self, numbers=range(1, 14)):
        results = [getattr(self, f"criterion_{k}")() for k in numbers]
        self.write(results)
        return results


def tree_differences(a, b):
    """Relative paths whose bytes differ between two artifact trees."""
    diffs = []

    def walk(cmp, prefix=""):
        diffs.extend(os.path.join(prefix, x) for x in cmp.left_only + cmp.right_only + cmp.funny_files)
        _, mismatch, errors = filecmp.cmpfiles(cmp.left, cmp.right, cmp.common_files, shallow=False)
        diffs.extend(os.path.join(prefix, x) for x in mismatch + errors)
        for name, sub in cmp.subdirs.items():
            walk(sub, os.path.join(prefix, name))

    walk(filecmp.dircmp(a, b))
    return sorted(diffs)


def check_determinism(dir_a, dir_b, level="core"):
    """Criterion 14: a second suite run reproduces ``dir_a`` byte for byte in ``dir_b``."""
    Suite(level, out_dir=dir_b).run_all()
    diffs = tree_differences(dir_a, dir_b)
    files = sum(len(f) for _, _, f in os.walk(dir_a))
    return CriterionResult(14, "repeated verify gives byte-identical artifacts", not diffs and files > 0,
                           {"files": files, "differences": len(diffs)})
