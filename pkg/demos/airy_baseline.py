# %% [markdown]
# # The unperturbed Stark operator
#
# With q = 0 and lam = 0 the solution regular at the origin is Ai(-x). This
# demo runs it through the toolkit and checks it against known closed forms:
# the Prufer amplitude settles, and the L2 norm grows like N^(1/2) / pi.

# %%
import math

import numpy as np
from scipy.special import airy

from starkspec import initial_state, integrate_prufer, preset, solve_original
from starkspec.subordinacy import l2_growth, subordinacy_ratio

q = preset("zero")

# %% [markdown]
# Starting data for Ai(-x) at x = 0: angle atan2(u, u') and amplitude hypot(u, u').

# %%
ai0, aip0, _, _ = airy(0.0)
theta0 = math.atan2(ai0, -aip0)
amp = math.hypot(ai0, aip0)
sol = solve_original(q, 0.0, theta0, 1e4, amplitude=amp)
ai, _, _, _ = airy(-sol.grid)
env = np.pi ** -0.5 * (1 + sol.grid) ** -0.25
print(f"max |u - Ai(-x)| / envelope = {np.max(np.abs(sol.u - ai) / env):.2e}")

# %% [markdown]
# L2 growth against int_0^N Ai(-x)^2 dx = N Ai(-N)^2 + Ai'(-N)^2 - Ai'(0)^2.

# %%
for N in (1e2, 1e3, 1e4):
    a, ap, _, _ = airy(-N)
    exact = N * a * a + ap * ap - aip0 * aip0
    ours = l2_growth(sol, N)
    print(f"N={N:8.0f}  L2={ours:.8f}  exact={exact:.8f}  L2/(sqrt(N)/pi)={ours * math.pi / math.sqrt(N):.5f}")

# %% [markdown]
# Two independent solutions grow at the same rate, so neither is subordinate.

# %%
s0 = solve_original(q, 0.0, 0.0, 1e4)
s1 = solve_original(q, 0.0, 0.5 * math.pi, 1e4)
print(f"norm ratio at N=1e4: {subordinacy_ratio(s0, s1, 1e4):.4f}")

# %% [markdown]
# In the xi variable the amplitude converges; the Prufer radius moves only by
# the small 1/xi correction.

# %%
traj = integrate_prufer(q, 0.0, initial_state(q, 0.0, 0.0), 1e4)
for xi in (10.0, 100.0, 1e3, 1e4):
    print(f"xi={xi:7.0f}  log R = {traj.evaluate(xi)[0, 0]:+.8f}")
