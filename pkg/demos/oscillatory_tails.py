# %% [markdown]
# # Oscillatory tail integrals
#
# int_N^inf xi^(-2/3) e^(i xi) d xi decays like N^(-2/3), even though the
# integrand is not absolutely integrable. With a cube-root phase e^(i lam xi^(1/3))
# and weight (1 + xi)^(-0.9) the tail still decays for lam != 0, just slowly.

# %%
import numpy as np

from starkspec.oscillatory import (
    DivergenceError,
    PhaseSpec,
    cubic_phase_tails,
    fourier_window,
    maximal_plus,
    tail_table,
)

# %%
for t in tail_table(-2.0 / 3.0, PhaseSpec(), [1e2, 1e3, 1e4], 1e6):
    print(f"N={t.N:8.0f}  |tail|={abs(t.value):.3e}  truncation<={t.truncation_error:.1e}")
print(f"fitted exponent {t.fitted_exponent:.3f}")

# %%
f = lambda s: (1.0 + s) ** -0.9  # noqa: E731
for lam in (0.7, 1.3, 2.1):
    tails = cubic_phase_tails(f, lam, [1e3, 1e4, 1e5, 1e6], decay=0.9)
    print(f"lam={lam}: " + "  ".join(f"{abs(t.value):.3e}" for t in tails)
          + f"   exponent {tails[0].fitted_exponent:.3f}")
try:
    cubic_phase_tails(f, 0.0, [1e3], decay=0.9)
except DivergenceError as exc:
    print(f"lam=0 refused: {exc}")

# %% [markdown]
# Windowed Fourier transform and the one-sided maximal function on the
# indicator of [-1, 1].

# %%
ind = lambda x: (np.abs(x) <= 1.0).astype(float)  # noqa: E731
for k in (0.5, 2.0, np.pi):
    print(f"k={k:.3f}  Phi={fourier_window(ind, k, 3.0).real:+.6f}  2 sin(k)/k={2 * np.sin(k) / k:+.6f}")
grid = np.linspace(-5, 5, 20001)
print(f"M+ at 0: {maximal_plus((grid, ind(grid)), 0.0):.5f}   M+ at 3: {maximal_plus((grid, ind(grid)), 3.0):.5f}")
