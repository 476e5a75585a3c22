"""
Graphs over an interval settle onto the grim reaper
===================================================

Start from a convex graph that is not a translator, flow it with barrier
boundary data and watch the tip speed and the shape relax onto
-(2/pi) log cos(pi x / 2).
"""

# %%
import math

from gcflab.graph_flow import GraphConfig, convergence_monitor, run_graph
from gcflab.soliton import grim_reaper

grim = grim_reaper(1.0, margin=0.25)
print("expected speed:", grim.lam, "=", math.pi / 2)

# %%
# A coarse grid keeps this under a few seconds.  The default initial data
# lowers the translator's slopes by a seeded convex quadratic.
cfg = GraphConfig(n=1, alpha=1.0, spacing=0.05, t_stop=8.0, sample_interval=1.0)
run = run_graph(cfg, grim)

# %%
rep = convergence_monitor(run.states, grim)
for t, se, pe in zip(rep.t, rep.speed_err, rep.profile_err):
    print(f"t={t:4.1f}  speed error={se:.2e}  profile error={pe:.2e}")

# %%
# Both errors flatten out at the level set by the grid spacing and the
# barrier width; a finer spacing moves that floor down.
print("speed trend over the second half:", rep.speed_trend)
