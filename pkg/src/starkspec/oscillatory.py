"""Oscillatory integrals: power-weight tails, cube-root phases, windowed
Fourier transforms, the symmetric maximal function M+ and the exceptional-set
diagnostic built from them.

All oscillatory quadrature here is phase-resolved: the range is cut into
panels across which the phase advances by at most pi/2, and each panel is
integrated with 8-point Gauss-Legendre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .potentials import PotentialSpec, evaluate
from .transforms import C_LIOUVILLE

__all__ = [
    "OscillatoryTail",
    "PhaseSpec",
    "CubicPhaseResult",
    "SSetDiagnostic",
    "StationaryPhaseError",
    "DivergenceError",
    "ResolutionError",
    "SampleRangeError",
    "gauss_panels",
    "tail_power_phase",
    "tail_table",
    "cubic_phase_integral",
    "cubic_phase_tails",
    "fourier_window",
    "window_growth",
    "maximal_plus",
    "phase_integral",
    "tilde_q",
    "s_set_diagnostic",
    "loglog_slope",
]

_GX, _GW = np.polynomial.legendre.leggauss(8)
_GX = 0.5 * (_GX + 1.0)
_GW = 0.5 * _GW

MAX_PHASE_PER_PANEL = 0.5 * math.pi
_CHUNK = 1 << 18


class StationaryPhaseError(ValueError):
    """The phase derivative vanishes inside the integration range."""


class DivergenceError(ValueError):
    """The requested integral is not convergent."""


class ResolutionError(ValueError):
    """Samples are too coarse for the requested frequency or window."""


class SampleRangeError(ValueError):
    """Samples do not cover the range an operation needs."""


def gauss_panels(edges):
    """Gauss-Legendre nodes and weights on consecutive panels.

    Returns arrays of shape (len(edges) - 1, 8).
    """
    e = np.asarray(edges, dtype=float)
    w = np.diff(e)
    nodes = e[:-1, None] + w[:, None] * _GX[None, :]
    weights = w[:, None] * _GW[None, :]
    return nodes, weights


def loglog_slope(x, y) -> float:
    """Least-squares slope of log|y| against log x (nonzero entries only)."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y))
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


# ---------------------------------------------------------------------------
# power-weight tails

@dataclass(frozen=True)
class PhaseSpec:
    """Phase h(xi) = a xi + b xi^(1/3) + g(xi) with |g'(xi)| <= C xi^(-2/3).

    ``perturbation_derivative`` is optional; without it g' is taken by
    central differences.
    """

    linear_coeff: float = 1.0
    cubic_root_coeff: float = 0.0
    perturbation: Callable | None = None
    perturbation_derivative: Callable | None = None
    perturbation_bound: float = 0.0

    def value(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = self.linear_coeff * xi + self.cubic_root_coeff * np.cbrt(xi)
        if self.perturbation is not None:
            out = out + self.perturbation(xi)
        return out

    def g_prime(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.perturbation is None:
            return np.zeros_like(xi)
        if self.perturbation_derivative is not None:
            return np.asarray(self.perturbation_derivative(xi), dtype=float)
        d = 1e-6 * np.maximum(xi, 1.0)
        return (self.perturbation(xi + d) - self.perturbation(xi - d)) / (2 * d)

    def rate(self, xi):
        xi = np.asarray(xi, dtype=float)
        return (self.linear_coeff + self.cubic_root_coeff / 3.0 * np.cbrt(xi) ** -2
                + self.g_prime(xi))

    def rate_bound(self, xi: float) -> float:
        """Upper bound of |h'| on [xi, inf) from the declared metadata."""
        return (abs(self.linear_coeff)
                + (abs(self.cubic_root_coeff) / 3.0 + self.perturbation_bound) * xi ** (-2.0 / 3.0))

    def verify_perturbation_bound(self, lo=1.0, hi=1e6, n=400) -> bool:
        """Check |g'(xi)| <= C xi^(-2/3) on a log grid."""
        xi = np.geomspace(lo, hi, n)
        return bool(np.all(np.abs(self.g_prime(xi)) <= self.perturbation_bound * xi ** (-2.0 / 3.0)
                           * (1 + 1e-9) + 1e-15))


class OscillatoryTail(NamedTuple):
    N: float
    value: complex
    truncation_error: float
    fitted_exponent: float

    @property
    def reliable(self) -> bool:
        return self.truncation_error < 0.5 * abs(self.value)


def _phase_resolved(amp, phase: PhaseSpec, a: float, b: float, check_stationary=True) -> complex:
    """int_a^b amp(xi) exp(i h(xi)) dxi with uniform panels of phase <= pi/2."""
    if b <= a:
        return 0j
    rate = phase.rate_bound(a)
    width = MAX_PHASE_PER_PANEL / rate if rate > 0 else (b - a)
    npan = max(1, int(math.ceil((b - a) / width)))
    total = 0j
    for start in range(0, npan, _CHUNK):
        stop = min(npan, start + _CHUNK)
        e = a + (b - a) * np.arange(start, stop + 1) / npan
        if check_stationary:
            r = phase.rate(e)
            if np.any(r[:-1] * r[1:] <= 0) or np.any(r == 0):
                bad = e[np.argmax(r[:-1] * r[1:] <= 0)]
                raise StationaryPhaseError(f"phase is stationary near xi = {bad:g}")
        nodes, weights = gauss_panels(e)
        total += complex(np.sum(weights * amp(nodes) * np.exp(1j * phase.value(nodes))))
    return total


def tail_table(p: float, phase: PhaseSpec, N_values, Xi_max: float) -> list[OscillatoryTail]:
    """Tails int_N^Xi_max xi^p exp(i h) for several N with one shared rate fit."""
    N_values = np.sort(np.asarray(N_values, dtype=float))
    if p > 0:
        raise ValueError("power p must be <= 0")
    if N_values[0] < 1:
        raise ValueError("N must be >= 1")
    if Xi_max < 100 * N_values[-1]:
        raise ValueError("Xi_max must be at least 100 N")
    amp = lambda xi: xi ** p  # noqa: E731
    cuts = np.append(N_values, Xi_max)
    pieces = [_phase_resolved(amp, phase, cuts[i], cuts[i + 1]) for i in range(len(N_values))]
    tails = np.cumsum(pieces[::-1])[::-1]
    hr = abs(float(phase.rate(np.array([Xi_max]))[0]))
    trunc = (Xi_max ** p + abs(p) * (Xi_max ** p / abs(p) if p != 0 else 0.0)) / max(hr, 1e-300)
    slope = loglog_slope(N_values, tails) if len(N_values) > 1 else float("nan")
    return [OscillatoryTail(float(N), complex(v), float(trunc), slope)
            for N, v in zip(N_values, tails)]


def tail_power_phase(p: float, phase: PhaseSpec, N: float, Xi_max: float) -> OscillatoryTail:
    """int_N^Xi_max xi^p exp(i h(xi)) dxi with an integration-by-parts truncation bound.

    The fitted exponent comes from the tails at N, 2N, 4N, 8N.
    """
    if Xi_max < 100 * N:
        raise ValueError("Xi_max must be at least 100 N")
    Ns = N * 2.0 ** np.arange(4)
    table = tail_table(p, phase, Ns, max(Xi_max, 100 * Ns[-1]))
    if Xi_max < 100 * Ns[-1]:
        # the rate fit used a longer range; recompute the value on the requested one
        val = _phase_resolved(lambda xi: xi ** p, phase, N, Xi_max)
        hr = abs(float(phase.rate(np.array([Xi_max]))[0]))
        return OscillatoryTail(float(N), complex(val), 2 * Xi_max ** p / hr,
                               table[0].fitted_exponent)
    return table[0]


# ---------------------------------------------------------------------------
# cube-root phase

class CubicPhaseResult(NamedTuple):
    value: complex  # int_0^N f(xi) exp(i lam xi^(1/3)) dxi
    tail: OscillatoryTail  # int_N^inf, truncated at N_max plus asymptotic remainder


def _y_integral(a_fn, lam, y0, y1, width):
    if y1 <= y0:
        return 0j
    npan = max(1, int(math.ceil((y1 - y0) / width)))
    total = 0j
    for start in range(0, npan, _CHUNK):
        stop = min(npan, start + _CHUNK)
        e = y0 + (y1 - y0) * np.arange(start, stop + 1) / npan
        nodes, weights = gauss_panels(e)
        total += complex(np.sum(weights * a_fn(nodes) * np.exp(1j * lam * nodes)))
    return total


def _ibp_remainder(a_fn, lam, Y):
    """Asymptotic value of int_Y^inf a(y) exp(i lam y) dy and its error size.

    Three integration-by-parts terms with finite-difference derivatives; the
    size of the fourth term, plus a finite-difference allowance, is returned
    as the error.
    """
    d = 0.02 * Y
    s = a_fn(Y + d * np.arange(-2, 3, dtype=float))
    a0 = s[2]
    a1 = (s[3] - s[1]) / (2 * d)
    a2 = (s[3] - 2 * a0 + s[1]) / d ** 2
    a3 = (s[4] - 2 * s[3] + 2 * s[1] - s[0]) / (2 * d ** 3)
    il = 1j * lam
    rem = -np.exp(il * Y) * (a0 / il - a1 / il ** 2 + a2 / il ** 3)
    # next term plus the finite-difference error of the a'' term (relative ~ (d/Y)^2)
    err = abs(a3) / abs(lam) ** 4 + 4.0 * (d / Y) ** 2 * abs(a2) / abs(lam) ** 3
    return complex(rem), float(err)


def _cubic_setup(f, lam, decay):
    if decay < 5.0 / 6.0:
        raise ValueError("declared decay exponent must be >= 5/6")
    if lam == 0 and decay <= 1.0:
        raise DivergenceError("lam = 0 with a non-integrable f does not converge")

    def a_fn(y):
        return 3.0 * f(y ** 3) * y * y

    width = 0.25 if lam == 0 else min(0.25, MAX_PHASE_PER_PANEL / abs(lam))
    return a_fn, width


def _cubic_tails(a_fn, lam, width, Ns, N_max, decay):
    cuts = np.append(np.cbrt(Ns), N_max ** (1.0 / 3.0))
    pieces = [_y_integral(a_fn, lam, cuts[i], cuts[i + 1], width) for i in range(len(Ns))]
    if lam == 0:
        rem, err = 0j, 3.0 * N_max ** (1.0 - decay) / (decay - 1.0)
    else:
        rem, err = _ibp_remainder(a_fn, lam, cuts[-1])
    tails = np.cumsum(pieces[::-1])[::-1] + rem
    slope = loglog_slope(Ns, tails) if len(Ns) > 1 else float("nan")
    return [OscillatoryTail(float(N), complex(v), err, slope) for N, v in zip(Ns, tails)]


def cubic_phase_tails(f: Callable, lam: float, N_values, decay: float,
                      N_max: float | None = None) -> list[OscillatoryTail]:
    """Tails int_N^inf f(xi) exp(i lam xi^(1/3)) dxi at several N, one shared rate fit.

    Each tail is integrated up to ``N_max`` (default 1000 max(N)) and
    completed by a three-term integration-by-parts remainder; the size of
    the next term is the reported truncation error.
    """
    a_fn, width = _cubic_setup(f, lam, decay)
    Ns = np.sort(np.asarray(N_values, dtype=float))
    N_max = 1000.0 * Ns[-1] if N_max is None else N_max
    if N_max <= Ns[-1]:
        raise ValueError("N_max must exceed every N")
    return _cubic_tails(a_fn, lam, width, Ns, N_max, decay)


def cubic_phase_integral(f: Callable, lam: float, N: float, decay: float,
                         N_max: float | None = None) -> CubicPhaseResult:
    """int_0^N f(xi) exp(i lam xi^(1/3)) dxi and its tail beyond N.

    With y = xi^(1/3) the integral becomes 3 int f(y^3) y^2 exp(i lam y) dy,
    integrated on panels of phase increment <= pi/2. ``decay`` declares
    |f(xi)| <= C (1+xi)^(-decay) and must be >= 5/6. The tail record is that
    of :func:`cubic_phase_tails`, with its rate fitted over N, 2N, 4N, 8N.
    """
    a_fn, width = _cubic_setup(f, lam, decay)
    Ns = N * 2.0 ** np.arange(4)
    N_max = 1000.0 * Ns[-1] if N_max is None else N_max
    Ns = Ns[Ns < N_max]
    if Ns.size == 0:
        raise ValueError("N_max must exceed N")
    head = _y_integral(a_fn, lam, 0.0, N ** (1.0 / 3.0), width)
    tail = _cubic_tails(a_fn, lam, width, Ns, N_max, decay)[0]
    return CubicPhaseResult(complex(head), tail)


# ---------------------------------------------------------------------------
# windowed Fourier transform and maximal function

def _phi_weights(theta):
    """Weights (alpha, beta) with int_0^1 ((1-s) f0 + s f1) e^{i theta s} ds = alpha f0 + beta f1."""
    theta = np.asarray(theta, dtype=float)
    it = 1j * theta
    small = np.abs(theta) < 0.05
    ts = np.where(small, 1.0, theta)
    e = np.exp(1j * ts)
    e0 = (e - 1.0) / (1j * ts)
    beta = e / (1j * ts) + (e - 1.0) / ts ** 2
    # series for small |theta|: int s^m e^{i theta s} = sum (i theta)^n / (n! (n+m+1))
    e0s = np.zeros_like(it)
    bs = np.zeros_like(it)
    term = np.ones_like(it)
    for n in range(12):
        e0s = e0s + term / (n + 1)
        bs = bs + term / (n + 2)
        term = term * it / (n + 1)
    e0 = np.where(small, e0s, e0)
    beta = np.where(small, bs, beta)
    return e0 - beta, beta


def _as_samples(f, lo, hi, n_default=(1 << 18) + 1):
    if callable(f):
        x = np.linspace(lo, hi, n_default)
        return x, np.asarray(f(x))
    x, fx = (np.asarray(a) for a in f)
    return x.astype(float), fx


def fourier_window(f, k: float, N: float) -> complex:
    """int_{-N}^{N} exp(i k x) f(x) dx from samples of f.

    ``f`` is either a callable (sampled on 2^18 + 1 uniform points) or a pair
    ``(x, f(x))``. The samples are joined linearly and the exponential is
    integrated exactly on each interval.
    """
    x, fx = _as_samples(f, -N, N)
    if x[0] > -N + 1e-12 * max(N, 1) or x[-1] < N - 1e-12 * max(N, 1):
        raise SampleRangeError("samples must cover [-N, N]")
    tol = 1e-12 * max(N, 1)
    keep = (x > -N + tol) & (x < N - tol)
    # close the window with values interpolated at -N and N
    ends = np.array([-N, N])
    if np.iscomplexobj(fx):
        fe = np.interp(ends, x, fx.real) + 1j * np.interp(ends, x, fx.imag)
    else:
        fe = np.interp(ends, x, fx)
    x = np.concatenate([ends[:1], x[keep], ends[1:]])
    fx = np.concatenate([fe[:1], fx[keep], fe[1:]])
    h = np.diff(x)
    if k != 0 and h.max() > 2 * math.pi / abs(k) / 8:
        raise ResolutionError("fewer than 8 samples per period 2 pi / k")
    al, be = _phi_weights(k * h)
    return complex(np.sum(np.exp(1j * k * x[:-1]) * h * (al * fx[:-1] + be * fx[1:])))


def window_growth(f, k: float, N_values) -> np.ndarray:
    """Windowed transforms at increasing N (for an O(log N) growth check)."""
    N_values = np.asarray(N_values, dtype=float)
    x, fx = _as_samples(f, -N_values.max(), N_values.max())
    return np.array([fourier_window((x, fx), k, N) for N in N_values])


def maximal_plus(g, x: float, h_grid=None) -> float:
    """Lower estimate of M+g(x) = sup_{0<h<1} (1/2h) int_0^h |g(x+t) + g(x-t)| dt.

    ``g`` is a pair ``(grid, values)`` (values may be complex) or a callable.
    The sup is taken over ``h_grid`` (default 2^-j down to the sample spacing).
    """
    if callable(g):
        grid = np.linspace(x - 1.0, x + 1.0, 4097)
        vals = np.asarray(g(grid))
    else:
        grid, vals = (np.asarray(a) for a in g)
    res = float(np.max(np.diff(grid)))
    if h_grid is None:
        jmax = max(1, int(math.floor(math.log2(1.0 / (2.0 * res)))))
        h_grid = 2.0 ** -np.arange(1, jmax + 1)
    h_grid = np.asarray(h_grid, dtype=float)
    if np.any(h_grid <= 0) or np.any(h_grid >= 1):
        raise ValueError("h-grid must lie in (0, 1)")
    if h_grid.min() < res:
        raise ResolutionError("sampling is coarser than the smallest h")
    hmax = h_grid.max()
    if grid[0] > x - hmax + 1e-12 or grid[-1] < x + hmax - 1e-12:
        raise SampleRangeError("samples must cover [x - h, x + h]")
    re = np.real(vals).astype(float)
    im = np.imag(vals).astype(float) if np.iscomplexobj(vals) else None
    best = 0.0
    for h in h_grid:
        n = max(65, int(math.ceil(h / res)) * 4 + 1)
        t = np.linspace(0.0, h, n)
        s = np.interp(x + t, grid, re) + np.interp(x - t, grid, re)
        if im is not None:
            s = s + 1j * (np.interp(x + t, grid, im) + np.interp(x - t, grid, im))
        val = np.trapezoid(np.abs(s), t) / (2.0 * h)
        best = max(best, float(val))
    return best


# ---------------------------------------------------------------------------
# tilde-q and the exceptional set

def _q_rate_in_s(q: PotentialSpec, s_max: float) -> float:
    """Largest angular frequency of s -> q(c s^2) on [0, s_max]."""
    if q.family == "resonant":
        return 6.0 * s_max ** 2
    if q.family == "weierstrass_smooth":
        return 2.0 ** q.term_count * 2.0 * C_LIOUVILLE * s_max
    return 0.0


def phase_integral(q: PotentialSpec, xi) -> np.ndarray:
    """int_0^xi q(c eta^(2/3)) c eta^(-2/3) d eta = 3c int_0^(xi^(1/3)) q(c s^2) ds."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if q.family == "zero":
        return np.zeros_like(xi)
    s_t = np.cbrt(xi)
    s_max = float(s_t.max())
    if s_max == 0:
        return np.zeros_like(xi)
    rate = _q_rate_in_s(q, s_max)
    width = 0.05 if rate == 0 else min(0.05, 0.25 * math.pi / rate)
    npan = max(1, int(math.ceil(s_max / width)))
    e = s_max * np.arange(npan + 1) / npan
    nodes, weights = gauss_panels(e)
    integrand = lambda s: evaluate(q, C_LIOUVILLE * s * s)  # noqa: E731
    cum = np.concatenate([[0.0], np.cumsum(np.sum(weights * integrand(nodes), axis=1))])
    j = np.minimum((s_t / s_max * npan).astype(int), npan - 1)
    left = e[j]
    part_nodes = left[:, None] + (s_t - left)[:, None] * _GX[None, :]
    part = np.sum((s_t - left)[:, None] * _GW[None, :] * integrand(part_nodes), axis=1)
    return 3.0 * C_LIOUVILLE * (cum[j] + part)


def tilde_q(q: PotentialSpec, xi):
    """q(c xi^(2/3)) xi^(-2/3) exp(2 i xi - i int_0^xi q(c eta^(2/3)) c eta^(-2/3) d eta)."""
    xa = np.asarray(xi, dtype=float)
    if np.any(xa <= 0):
        raise ValueError("tilde_q needs xi > 0")
    flat = np.atleast_1d(xa)
    amp = np.asarray(evaluate(q, C_LIOUVILLE * np.cbrt(flat) ** 2)) * np.cbrt(flat) ** -2
    out = amp * np.exp(2j * flat - 1j * phase_integral(q, flat))
    return complex(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)


@dataclass
class SSetDiagnostic:
    lam: float
    N: float
    phi_value: complex
    mplus_estimate: float
    variant: str
    x_window: float
    h_grid: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "N": self.N,
            "variant": self.variant,
            "x_window": self.x_window,
            "phi_re": self.phi_value.real,
            "phi_im": self.phi_value.imag,
            "phi_abs": abs(self.phi_value),
            "mplus_estimate": self.mplus_estimate,
            "h_grid": list(self.h_grid),
        }


def _window_function(q: PotentialSpec, x, variant: str):
    if variant == "proof":
        return tilde_q(q, x ** 3) * x ** (13.0 / 6.0)
    if variant == "theorem":
        amp = np.asarray(evaluate(q, C_LIOUVILLE * x * x)) * x ** (1.0 / 6.0)
        return amp * np.exp(1j * x ** 3 - 1j * phase_integral(q, x ** 3))
    raise ValueError("variant must be 'proof' or 'theorem'")


def s_set_diagnostic(q: PotentialSpec, lam: float, N: float, variant: str = "proof",
                     h_grid=None, window: str = "xi") -> SSetDiagnostic:
    """Windowed transform and M+ proxy for membership of ``lam`` in the set S.

    The window function is w(x) = tilde_q(x^3) x^(13/6) (``variant="proof"``)
    or exp(i x^3 - i Q(x^3)) q(c x^2) x^(1/6) (``variant="theorem"``), set to
    zero for x < 0. ``N`` is the horizon in the original variable xi, so the
    x-window is [0, N^(1/3)]; pass ``window="x"`` to use [0, N] directly.
    Phi w is computed on a uniform k-grid around ``lam`` and M+ is taken there.
    """
    if not q.is_decaying and q.family != "tabulated":
        raise ValueError("the exceptional-set diagnostic applies to decaying potentials")
    if h_grid is None:
        h_grid = 2.0 ** -np.arange(1, 7)
    h_grid = np.asarray(h_grid, dtype=float)
    X = N ** (1.0 / 3.0) if window == "xi" else float(N)
    dk = h_grid.min() / 8.0
    m = int(math.ceil(h_grid.max() / dk)) + 1
    kgrid = lam + dk * np.arange(-m, m + 1)
    if q.family == "zero":
        return SSetDiagnostic(lam, N, 0j, 0.0, variant, X, h_grid.tolist())
    chirp = 2.0 if variant == "proof" else 1.0
    rate = 3.0 * chirp * X * X + np.abs(kgrid).max() + 3.0 * C_LIOUVILLE * np.abs(
        evaluate(q, C_LIOUVILLE * np.linspace(0, X, 257) ** 2)).max()
    width = min(0.05, MAX_PHASE_PER_PANEL / rate)
    npan = max(1, int(math.ceil(X / width)))
    nodes, weights = gauss_panels(X * np.arange(npan + 1) / npan)
    nodes, weights = nodes.ravel(), weights.ravel()
    wv = weights * _window_function(q, nodes, variant)
    phi = np.empty(kgrid.size, dtype=complex)
    base = np.exp(1j * kgrid[0] * nodes)
    step = np.exp(1j * dk * nodes)
    for i in range(kgrid.size):
        phi[i] = np.sum(wv * base)
        base = base * step
    mplus = maximal_plus((kgrid, phi), lam, h_grid)
    return SSetDiagnostic(lam, N, complex(phi[m]), mplus, variant, X, h_grid.tolist())
