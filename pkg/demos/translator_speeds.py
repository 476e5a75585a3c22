"""
Translator speeds
=================

The speed of the translating graph over a domain depends only on the
domain's volume.  Tabulate the constant Lambda(n, alpha), then compare the
formula with radial shooting on disks.
"""

# %%
from gcflab.soliton import capital_lambda, lambda_disk, radial_translator

print(" n  alpha      Lambda")
for n in (1, 2, 3):
    for alpha in (0.6, 1.0, 2.0):
        print(f"{n:2d}  {alpha:5.2f}  {capital_lambda(n, alpha):10.6f}")

# %%
# Below alpha = 1/2 the defining integral diverges and there is no translator.
try:
    capital_lambda(1, 0.5)
except Exception as exc:
    print(type(exc).__name__, exc)

# %%
# Shooting solves the radial ODE and bisects on the speed until the slope
# blows up exactly at the rim.
for R in (0.5, 1.0, 2.0):
    prof = radial_translator(2, 1.0, R)
    print(f"R={R}: shooting {prof.lam:.6f}, formula {lambda_disk(2, 1.0, R):.6f}")
