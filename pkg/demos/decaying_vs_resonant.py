# %% [markdown]
# # Decaying versus resonant perturbations
#
# For q(x) = (1 + x)^(-1/2) the diagnostic integral converges at every energy
# and the Prufer amplitude stays bounded. The resonant perturbation
# 2 (1 + x)^(-1/2) sin((4/3) x^(3/2)) locks onto the oscillation of the Stark
# solutions at lam = 0 and drives the amplitude far from its starting value.

# %%
import numpy as np

from starkspec import convergence_verdict, initial_state, integrate_prufer, preset
from starkspec.prufer import amplitude_bound, control_profile, control_slope

Xi = 1e4


def run(name, lam, Xi):
    q = preset(name)
    return integrate_prufer(q, lam, initial_state(q, lam, 0.0), Xi)

# %%
print("power_law")
for lam in np.linspace(-2.0, 3.0, 6):
    traj = run("power_law", float(lam), Xi)
    cv = convergence_verdict(traj.integral6_partials)
    print(f"  lam={lam:+.1f}  amplitude bound {amplitude_bound(traj):.4f}  "
          f"oscillation {cv.oscillation:.4f}  converged {cv.converged}")

# %%
res = run("resonant", 0.0, Xi)
cv = convergence_verdict(res.integral6_partials)
print(f"resonant lam=0: amplitude bound {amplitude_bound(res):.3f}  "
      f"oscillation {cv.oscillation:.3f}  converged {cv.converged}")

# %% [markdown]
# The control expression measures the size of the left-over oscillatory terms.
# For the decaying family it falls off faster than 1/N; the fitted log-log slope
# is printed below. The tail integrals need the trajectory to run a decade
# beyond the last N.

# %%
traj = run("power_law", 1.0, 1e5)
prof = control_profile(traj, "decaying", 1e2, 1e4)
print(f"decaying control slope over [1e2, 1e4]: {control_slope(prof):.3f}")
