"""Prüfer amplitude/phase integration of the transformed equation.

In the variable xi, omega = R sin(theta) and omega' = R cos(theta) give

    (log R)' = (1/2) V sin(2 theta),    theta' = 1 - V sin(theta)^2.

The integrator works with phi = theta - xi (slowly varying) and two phase
integrals s and s_tilde, with

    sigma = 2 xi + s,   s' = -V - (lam / x) cos(2 theta),
    sigma_tilde = 2 xi + s_tilde,   s_tilde' = -V,

so that gamma = 2 theta - sigma obeys gamma' = b cos(gamma + sigma) exactly.
The integral of V sin(2 theta) and the L2 mass of u are accumulated by
Gauss-Legendre quadrature on the dense output of every accepted step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import _kernel as K
from .oscillatory import loglog_slope
from .potentials import PotentialSpec
from .transforms import C_LIOUVILLE, b_term, effective_potential, push_solution, x_of_xi

__all__ = [
    "PruferState",
    "PruferTrajectory",
    "SpectralVerdict",
    "ConvergenceVerdict",
    "SigmaGamma",
    "ControlSample",
    "SmoothControl",
    "ControlProfile",
    "StiffnessError",
    "RangeError",
    "UnreliableTailError",
    "initial_state",
    "integrate_prufer",
    "integral6_partial",
    "convergence_verdict",
    "sigma_gamma",
    "gamma_residual",
    "control_decaying",
    "control_smooth",
    "control_profile",
    "control_slope",
    "amplitude_bound",
    "trajectory_table",
    "VERDICTS",
]

DIAG_PER_DECADE = 64
MAX_STEP = 0.25 * math.pi
DIRECT_MAX_STEP = 0.1
VERDICTS = ("ac_consistent", "inconclusive", "resonant")


class StiffnessError(RuntimeError):
    """Step-size underflow or step budget exhausted."""

    def __init__(self, message, reached=None, stats=None):
        super().__init__(message)
        self.reached = reached
        self.stats = stats


class RangeError(ValueError):
    """Argument outside the range covered by a trajectory or sample."""


class UnreliableTailError(RuntimeError):
    """Truncation error of a tail integral exceeds half of its magnitude."""


class PruferState(NamedTuple):
    xi: float
    logR: float
    theta: float


class _Run(NamedTuple):
    t: np.ndarray
    y: np.ndarray
    acc: np.ndarray
    F: np.ndarray
    ye: np.ndarray
    ae: np.ndarray
    stats: np.ndarray


def _run(q: PotentialSpec, system: int, lam: float, t0: float, t1: float, y0, rtol: float,
         max_step: float, store_dense: bool, t_eval=None, max_steps: int = 10 ** 8) -> _Run:
    if q.family == "tabulated":
        xneed = x_of_xi(t1) if system == 0 else t1
        if xneed > q.x_max * (1 + 1e-12):
            raise RangeError(f"tabulated potential ends at x={q.x_max:g}, need {xneed:g}")
    code, p, tx, tq, qf = q.kernel_args()
    te = np.empty(0) if t_eval is None else np.ascontiguousarray(t_eval, dtype=float)
    out = K.integrate(system, code, p, tx, tq, qf, float(lam), float(t0), float(t1),
                      np.array(y0, dtype=float), float(rtol), float(rtol), float(max_step),
                      bool(store_dense), te, int(max_steps))
    status = out[0]
    run = _Run(*out[1:])
    if status != K.STATUS_OK:
        what = "step size underflow" if status == K.STATUS_STEP_UNDERFLOW else "step budget exhausted"
        raise StiffnessError(f"{what} at t={run.t[-1]:.6g} (lam={lam:g}, {q.describe()})",
                             reached=float(run.t[-1]), stats=_stats_dict(run.stats))
    return run


def _stats_dict(s) -> dict:
    return {"steps": int(s[0]), "rejected": int(s[1]), "min_step": float(s[2]),
            "max_step": float(s[3]), "mean_step": float(s[4]), "rhs_evaluations": int(s[5])}


def _check_rtol(rtol):
    if not (1e-13 < rtol < 1e-3):
        raise ValueError("rtol must lie in (1e-13, 1e-3)")


def _direct(q, lam, theta0, x1, amplitude, rtol, t_eval=None):
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    return _run(q, 1, lam, 0.0, x1, [math.log(amplitude), theta0], rtol,
                DIRECT_MAX_STEP, False, t_eval)


def _state_from_direct(xi0, x1, logrho, vartheta) -> PruferState:
    w, dw = push_solution(math.sin(vartheta), math.cos(vartheta), x1)
    r = math.hypot(w, dw)
    if not r > 0:
        raise StiffnessError("solution vanished at the matching point")
    theta = math.atan2(w, dw)
    theta += 2 * math.pi * round((vartheta - theta) / (2 * math.pi))
    return PruferState(float(xi0), float(logrho + math.log(r)), float(theta))


def initial_state(q: PotentialSpec, lam: float, theta0: float, xi0: float = 1.0,
                  amplitude: float = 1.0, rtol: float = 1e-12) -> PruferState:
    """Prüfer state at ``xi0`` of the solution with u(0) = a sin(theta0), u'(0) = a cos(theta0).

    The original equation is integrated in its own Prüfer form on
    [0, x(xi0)] and the result is pushed through the Liouville map. The phase
    is taken on the branch nearest to the direct-integration phase, which is
    continuous from ``theta0``.
    """
    if xi0 <= 0:
        raise ValueError("xi0 must be positive")
    x1 = x_of_xi(xi0)
    run = _direct(q, lam, theta0, x1, amplitude, rtol)
    return _state_from_direct(xi0, x1, run.y[-1, 0], run.y[-1, 1])


class PruferTrajectory:
    """Result of :func:`integrate_prufer`. Treat as immutable.

    Step samples are in ``xi``/``y`` (columns logR, phi, s, s_tilde); the
    diagnostic grid (64 points per decade) is in ``diag_xi``/``diag_y``.
    ``integral6`` and ``l2`` hold the accumulated integrals of V sin(2 theta)
    and of u^2 dx at the step samples.
    """

    def __init__(self, q, lam, start, Xi, rtol, run: _Run, diag_xi):
        self.q = q
        self.lam = float(lam)
        self.start = start
        self.xi0 = float(start.xi)
        self.Xi = float(Xi)
        self.rtol = float(rtol)
        self.xi = run.t
        self.y = run.y
        self.F = run.F
        self.integral6 = run.acc[:, 0]
        self.l2 = run.acc[:, 1]
        self.diag_xi = diag_xi
        self.diag_y = run.ye
        self.diag_integral6 = run.ae[:, 0]
        self.diag_l2 = run.ae[:, 1]
        self.step_stats = _stats_dict(run.stats)
        for a in (self.xi, self.y, self.F, self.diag_xi, self.diag_y, run.acc, run.ae):
            a.flags.writeable = False
        self._profiles = {}

    def __repr__(self):
        return (f"PruferTrajectory({self.q.describe()}, lam={self.lam:g}, "
                f"xi=[{self.xi0:g}, {self.Xi:g}], steps={self.step_stats['steps']})")

    @property
    def logR(self):
        return self.y[:, 0]

    @property
    def theta(self):
        return self.xi + self.y[:, 1]

    @property
    def samples(self) -> list[PruferState]:
        return [PruferState(float(a), float(b), float(c))
                for a, b, c in zip(self.xi, self.logR, self.theta)]

    @property
    def integral6_partials(self):
        """(N, partial integral (6)) on the diagnostic grid."""
        return self.diag_xi, self.diag_integral6

    def _locate(self, pts):
        pts = np.atleast_1d(np.asarray(pts, dtype=float))
        lo, hi = self.xi[0], self.xi[-1]
        tol = 1e-12 * hi
        if np.any(pts < lo - tol) or np.any(pts > hi + tol):
            raise RangeError(f"xi outside trajectory range [{lo:g}, {hi:g}]")
        pts = np.clip(pts, lo, hi)
        j = np.clip(np.searchsorted(self.xi, pts, side="right") - 1, 0, len(self.xi) - 2)
        h = self.xi[j + 1] - self.xi[j]
        return pts, j, h, (pts - self.xi[j]) / h

    def evaluate(self, pts) -> np.ndarray:
        """State vector (logR, phi, s, s_tilde) at arbitrary xi via dense output."""
        if self.F.shape[0] == 0:
            raise RangeError("trajectory was integrated without dense output")
        pts, j, _, frac = self._locate(pts)
        return K.dense_eval(self.F[j], self.y[j], frac)

    def state_at(self, xi: float) -> PruferState:
        y = self.evaluate(xi)[0]
        return PruferState(float(xi), float(y[0]), float(xi + y[1]))

    def omega(self, pts):
        """(omega, omega') at xi."""
        pts = np.atleast_1d(np.asarray(pts, dtype=float))
        y = self.evaluate(pts)
        R = np.exp(y[:, 0])
        th = pts + y[:, 1]
        return R * np.sin(th), R * np.cos(th)

    @cached_property
    def _nodes(self):
        h = np.diff(self.xi)
        nodes = self.xi[:-1, None] + h[:, None] * K.GL_X[None, :]
        weights = h[:, None] * K.GL_W[None, :]
        frac = np.broadcast_to(K.GL_X, (len(h), K.GL_X.size))
        ynodes = K.dense_eval(self.F, self.y[:-1], frac)
        return nodes, weights, ynodes

    def _partial_nodes(self, pts):
        pts, j, h, frac = self._locate(pts)
        fr = frac[:, None] * K.GL_X[None, :]
        nodes = self.xi[j][:, None] + h[:, None] * fr
        weights = (frac * h)[:, None] * K.GL_W[None, :]
        ynodes = K.dense_eval(self.F[j], self.y[j], fr)
        return j, nodes, weights, ynodes

    def _integrand(self, kind, nodes, ynodes):
        V = effective_potential(self.q, nodes, self.lam)
        if kind == "integral6":
            return V * np.sin(2.0 * (nodes + ynodes[..., 1]))
        if kind == "decaying":
            b = V + self.lam / (C_LIOUVILLE * np.cbrt(nodes) ** 2)
            return b * np.exp(1j * (2.0 * nodes + ynodes[..., 2]))
        if kind == "smooth":
            return V * np.exp(1j * (2.0 * nodes + ynodes[..., 3]))
        raise ValueError(f"unknown integrand {kind!r}")

    def _cumulative(self, kind):
        if kind not in self._profiles:
            nodes, weights, ynodes = self._nodes
            panel = np.sum(weights * self._integrand(kind, nodes, ynodes), axis=1)
            self._profiles[kind] = np.concatenate([[0.0], np.cumsum(panel)])
        return self._profiles[kind]

    def cumulative_at(self, kind, pts):
        """int_{xi0}^{pts} of the named integrand, recomputed from the dense output."""
        C = self._cumulative(kind)
        j, nodes, weights, ynodes = self._partial_nodes(pts)
        return C[j] + np.sum(weights * self._integrand(kind, nodes, ynodes), axis=1)


def integrate_prufer(q: PotentialSpec, lam: float, start: PruferState, Xi: float,
                     rtol: float = 1e-11, dense: bool = True,
                     diag_per_decade: int = DIAG_PER_DECADE) -> PruferTrajectory:
    """Integrate the Prüfer system from ``start`` to ``Xi``.

    Steps are capped at pi/4 (and by the frequency of q for the Weierstrass
    family). ``rtol`` is used as both relative and absolute tolerance on
    (logR, phi, s, s_tilde).
    """
    _check_rtol(rtol)
    if not Xi > start.xi:
        raise ValueError("Xi must exceed the starting point")
    ndiag = max(2, int(math.ceil(diag_per_decade * math.log10(Xi / start.xi))) + 1)
    diag = np.geomspace(start.xi, Xi, ndiag)
    diag[0], diag[-1] = start.xi, Xi
    y0 = [start.logR, start.theta - start.xi, 0.0, 0.0]
    run = _run(q, 0, lam, start.xi, Xi, y0, rtol, MAX_STEP, dense, diag)
    return PruferTrajectory(q, lam, start, Xi, rtol, run, diag)


def integral6_partial(traj: PruferTrajectory, N) -> float | np.ndarray:
    """int_{xi0}^N V sin(2 theta) dxi recomputed from the trajectory's dense samples."""
    val = traj.cumulative_at("integral6", N)
    return float(val[0]) if np.ndim(N) == 0 else val


class ConvergenceVerdict(NamedTuple):
    converged: bool
    oscillation: float
    rate_slope: float
    drift: float


def convergence_verdict(partials, decade: float = 10.0, tol: float = 0.05) -> ConvergenceVerdict:
    """Decide whether the partial integrals settle over the last decade.

    ``partials`` is a pair of arrays (N, value) or a sequence of (N, value).
    ``rate_slope`` is the log-log slope of the oscillation in consecutive
    windows of ratio sqrt(decade); it is NaN when fewer than two windows have
    positive oscillation. ``drift`` is value(end) - value(end / decade).
    """
    if isinstance(partials, tuple) and len(partials) == 2 and np.ndim(partials[0]) == 1:
        N, v = (np.asarray(a, dtype=float) for a in partials)
    else:
        arr = np.asarray(partials, dtype=float)
        N, v = arr[:, 0], arr[:, 1]
    order = np.argsort(N)
    N, v = N[order], v[order]
    if N.size < 3 or N[0] <= 0 or N[-1] / N[0] < decade ** 2 * (1 - 1e-9):
        raise RangeError("partials must cover at least two decades")
    end = N[-1]
    last = N >= end / decade * (1 - 1e-12)
    osc = float(v[last].max() - v[last].min())
    r = math.sqrt(decade)
    edges = [end]
    while edges[-1] / r >= N[0] * (1 - 1e-12):
        edges.append(edges[-1] / r)
    centers, oscs = [], []
    for hi, lo in zip(edges[:-1], edges[1:]):
        sel = (N >= lo * (1 - 1e-12)) & (N <= hi * (1 + 1e-12))
        if sel.sum() >= 2:
            centers.append(math.sqrt(lo * hi))
            oscs.append(v[sel].max() - v[sel].min())
    oscs = np.array(oscs)
    positive = oscs > 1e-14 * max(1.0, float(np.abs(v).max()))
    slope = loglog_slope(np.array(centers)[positive], oscs[positive]) if positive.sum() >= 2 else float("nan")
    drift = float(v[-1] - np.interp(end / decade, N, v))
    return ConvergenceVerdict(bool(osc < tol), osc, slope, drift)


class SigmaGamma(NamedTuple):
    xi: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    b: np.ndarray
    theta: np.ndarray
    sigma_tilde: np.ndarray
    gamma_tilde: np.ndarray


def sigma_gamma(traj: PruferTrajectory, pts=None) -> SigmaGamma:
    """sigma, gamma = 2 theta - sigma (and the tilde pair) at step samples or ``pts``."""
    if pts is None:
        xi, y = traj.xi, traj.y
    else:
        xi = np.atleast_1d(np.asarray(pts, dtype=float))
        y = traj.evaluate(xi)
    theta = xi + y[:, 1]
    sigma = 2.0 * xi + y[:, 2]
    st = 2.0 * xi + y[:, 3]
    return SigmaGamma(xi, sigma, 2.0 * theta - sigma, np.asarray(b_term(traj.q, xi)),
                      theta, st, 2.0 * theta - st)


def gamma_residual(traj: PruferTrajectory, pts=None, delta: float = 1e-4) -> float:
    """max |gamma'(finite difference) - b cos(gamma + sigma)| / (1 + |b|)."""
    if pts is None:
        pts = traj.diag_xi[1:-1]
    pts = np.asarray(pts, dtype=float)
    pts = pts[(pts - delta > traj.xi0) & (pts + delta < traj.Xi)]
    gp = sigma_gamma(traj, pts + delta).gamma
    gm = sigma_gamma(traj, pts - delta).gamma
    mid = sigma_gamma(traj, pts)
    d = (gp - gm) / (2.0 * delta)
    rhs = mid.b * np.cos(mid.gamma + mid.sigma)
    return float(np.max(np.abs(d - rhs) / (1.0 + np.abs(mid.b))))


# ---------------------------------------------------------------------------
# control expressions

class ControlSample(NamedTuple):
    value: float
    tail: complex
    truncation_error: float


class SmoothControl(NamedTuple):
    w_plus: complex
    w_minus: complex
    control: float
    truncation_error: float


class ControlProfile(NamedTuple):
    xi: np.ndarray
    value: np.ndarray
    tail_abs: np.ndarray
    truncation_error: np.ndarray
    reliable: np.ndarray


def _tail_remainder(traj: PruferTrajectory, kind: str) -> float:
    """Estimated |int_Xi^inf| of the control integrand.

    Takes the larger of a Richardson extrapolation of the last two decade
    increments and the leading integration-by-parts term |a(Xi)| / 2.
    """
    key = kind + "_rem"
    if key not in traj._profiles:
        Xi = traj.Xi
        yend = traj.y[-1:]
        amp = abs(complex(traj._integrand(kind, np.array([Xi]), yend[None, :, :])[0, 0]))
        ibp = amp / 2.0
        rich = 0.0
        if Xi / 100.0 >= traj.xi0:
            c0, c1, c2 = traj.cumulative_at(kind, [Xi, Xi / 10.0, Xi / 100.0])
            d1, d2 = abs(c0 - c1), abs(c1 - c2)
            if d2 > 0:
                r = d1 / d2
                rich = d1 * r / (1.0 - r) if r < 0.95 else float("inf")
        traj._profiles[key] = max(ibp, rich)
    return traj._profiles[key]


def _check_pair(q, lam, traj, Xi_max):
    if q is not traj.q and q.describe() != traj.q.describe():
        raise ValueError("potential does not match the trajectory")
    if lam != traj.lam:
        raise ValueError("lam does not match the trajectory")
    if Xi_max is not None and not math.isclose(Xi_max, traj.Xi, rel_tol=1e-12):
        raise ValueError("Xi_max must equal the trajectory end point")


def _tails(traj, kind, pts):
    C = traj._cumulative(kind)
    return C[-1] - traj.cumulative_at(kind, pts)


def control_decaying(q: PotentialSpec, lam: float, traj: PruferTrajectory, xi: float,
                     Xi_max: float | None = None) -> ControlSample:
    """|b(xi)| |int_xi^Xi b(eta) exp(i sigma(eta)) d eta|^2 with a truncation estimate."""
    _check_pair(q, lam, traj, Xi_max)
    tail = complex(_tails(traj, "decaying", xi)[0])
    rem = _tail_remainder(traj, "decaying")
    if rem > 0.5 * abs(tail):
        raise UnreliableTailError(f"tail at xi={xi:g}: truncation {rem:.3g} vs |tail| {abs(tail):.3g}")
    b = abs(float(b_term(q, xi)))
    err = b * (2.0 * abs(tail) * rem + rem * rem)
    return ControlSample(b * abs(tail) ** 2, tail, err)


def control_smooth(q: PotentialSpec, lam: float, traj: PruferTrajectory, xi: float,
                   Xi_max: float | None = None) -> SmoothControl:
    """w_pm = int_xi^Xi V exp(pm i (2 eta - int_{xi0}^eta V)) and |V(xi)| max|w_pm|^2."""
    _check_pair(q, lam, traj, Xi_max)
    wp = complex(_tails(traj, "smooth", xi)[0])
    wm = wp.conjugate()  # V is real
    rem = _tail_remainder(traj, "smooth")
    if rem > 0.5 * abs(wp):
        raise UnreliableTailError(f"tail at xi={xi:g}: truncation {rem:.3g} vs |w| {abs(wp):.3g}")
    V = abs(float(effective_potential(q, xi, lam)))
    return SmoothControl(wp, wm, V * abs(wp) ** 2, V * (2.0 * abs(wp) * rem + rem * rem))


def control_profile(traj: PruferTrajectory, kind: str, lo: float | None = None,
                    hi: float | None = None) -> ControlProfile:
    """Control expression on the diagnostic grid within [lo, hi].

    ``kind`` is "decaying" (b-based) or "smooth" (V-based). Points whose
    tail is dominated by the truncation estimate are flagged unreliable
    rather than raising.
    """
    lo = traj.xi0 if lo is None else lo
    hi = traj.Xi if hi is None else hi
    d = traj.diag_xi
    xi = d[(d >= lo * (1 - 1e-12)) & (d <= hi * (1 + 1e-12)) & (d < traj.Xi)]
    tails = _tails(traj, kind, xi)
    rem = _tail_remainder(traj, kind)
    if kind == "decaying":
        amp = np.abs(b_term(traj.q, xi))
    else:
        amp = np.abs(effective_potential(traj.q, xi, traj.lam))
    ta = np.abs(tails)
    err = amp * (2.0 * ta * rem + rem * rem)
    return ControlProfile(xi, amp * ta ** 2, ta, err, rem <= 0.5 * ta)


def control_slope(profile: ControlProfile, bins_per_decade: int = 8) -> float:
    """Log-log slope of the per-bin maxima of a control profile (reliable points)."""
    xi, v = profile.xi[profile.reliable], profile.value[profile.reliable]
    if xi.size < 4:
        return float("nan")
    lx = np.log10(xi)
    edges = np.arange(math.floor(lx.min() * bins_per_decade),
                      math.ceil(lx.max() * bins_per_decade) + 1) / bins_per_decade
    cx, cv = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (lx >= a) & (lx < b)
        if sel.any() and v[sel].max() > 0:
            k = np.argmax(v[sel])
            cx.append(xi[sel][k])
            cv.append(v[sel][k])
    return loglog_slope(np.array(cx), np.array(cv))


def amplitude_bound(traj: PruferTrajectory, upto: float | None = None) -> float:
    """sup |logR - logR(xi0)| over step samples with xi <= upto."""
    sel = slice(None) if upto is None else traj.xi <= upto * (1 + 1e-12)
    return float(np.max(np.abs(traj.logR[sel] - traj.logR[0])))


def trajectory_table(traj: PruferTrajectory, where: str = "diag") -> dict:
    """Columns xi, logR, theta, V, b, sigma, gamma at the diagnostic grid or steps."""
    if where == "diag":
        xi, y = traj.diag_xi, traj.diag_y
    elif where == "steps":
        xi, y = traj.xi, traj.y
    else:
        raise ValueError("where must be 'diag' or 'steps'")
    theta = xi + y[:, 1]
    sigma = 2.0 * xi + y[:, 2]
    return {
        "xi": xi,
        "logR": y[:, 0],
        "theta": theta,
        "V": np.asarray(effective_potential(traj.q, xi, traj.lam)),
        "b": np.asarray(b_term(traj.q, xi)),
        "sigma": sigma,
        "gamma": 2.0 * theta - sigma,
    }


# ---------------------------------------------------------------------------

@dataclass
class SpectralVerdict:
    """Per-energy evidence collected by a survey."""

    lam: float
    amplitude_bound: float = float("nan")
    integral6_oscillation: float = float("nan")
    integral6_drift: float = float("nan")
    control_kind: str = ""
    control_L1_tail: float = float("nan")
    control_slope: float = float("nan")
    subordinacy_ratio: float | None = None
    ratio_slope: float | None = None
    asymptotic_residual: float | None = None
    verdict: str = "inconclusive"
    error: str | None = None

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")
        if self.verdict == "ac_consistent" and not (
                math.isfinite(self.amplitude_bound) and math.isfinite(self.integral6_oscillation)):
            raise ValueError("ac_consistent needs a finite amplitude bound and oscillation")

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "verdict": self.verdict,
            "amplitude_bound": self.amplitude_bound,
            "integral6_oscillation": self.integral6_oscillation,
            "integral6_drift": self.integral6_drift,
            "control_kind": self.control_kind,
            "control_L1_tail": self.control_L1_tail,
            "control_slope": self.control_slope,
            "subordinacy_ratio": self.subordinacy_ratio,
            "ratio_slope": self.ratio_slope,
            "asymptotic_residual": self.asymptotic_residual,
            "error": self.error,
        }
