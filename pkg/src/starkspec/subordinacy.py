"""Solutions of the original equation, L2 growth and subordinacy proxies.

Solutions are parametrized by the boundary data (u(0), u'(0)) =
a (sin theta0, cos theta0). On [0, x(1)] the equation is integrated in its
own Prüfer form; beyond that point the integration continues in the
Liouville variables and is pulled back to (u, u').
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from . import prufer as P
from ._version import __version__
from .oscillatory import loglog_slope
from .potentials import PotentialSpec, evaluate, evaluate_derivative
from .prufer import RangeError, SpectralVerdict, StiffnessError
from .reporting import canonical_json, config_hash
from .transforms import pull_solution, x_of_xi, xi_of_x

__all__ = [
    "SolutionSample",
    "AsymptoticFit",
    "SurveyConfig",
    "SurveyReport",
    "DomainError",
    "FitResolutionError",
    "solve_original",
    "wronskian",
    "l2_growth",
    "subordinacy_ratio",
    "ratio_slope",
    "asymptotic_fit",
    "assess_energy",
    "spectral_survey",
    "FINITE_HORIZON_NOTE",
]

HANDOFF_XI = 1.0
HANDOFF_TOL = 1e-6

FINITE_HORIZON_NOTE = (
    "finite-horizon proxy: verdicts summarize numerical evidence on a bounded "
    "range of xi and x; they do not certify spectral type, and sets of measure "
    "zero in lambda cannot be resolved"
)


class DomainError(ValueError):
    """Ratio of norms requested for a trivial solution."""


class FitResolutionError(ValueError):
    """Fit window holds too few oscillations."""


@dataclass(frozen=True, eq=False)
class SolutionSample:
    """A solution sampled on an increasing x grid with running L2 norms."""

    lam: float
    theta0: float
    amplitude: float
    grid: np.ndarray
    u: np.ndarray
    du: np.ndarray
    l2: np.ndarray
    q: PotentialSpec | None = None
    handoff_error: float = 0.0
    rtol: float = 1e-11

    @property
    def l2_partials(self):
        return list(zip(self.grid.tolist(), self.l2.tolist()))


def _zero_solution(q, lam, theta0, X, spacing):
    grid = np.append(np.arange(0.0, X, spacing), X)
    z = np.zeros_like(grid)
    return SolutionSample(float(lam), float(theta0), 0.0, grid, z, z.copy(), z.copy(), q)


def solve_original(q: PotentialSpec, lam: float, theta0: float, X: float,
                   amplitude: float = 1.0, rtol: float = 1e-11,
                   xi_spacing: float = 0.25 * math.pi, direct_spacing: float = 0.01,
                   check_handoff: bool = True) -> SolutionSample:
    """Solve -u'' - x u + q u = lam u on [0, X] with u(0) = a sin(theta0), u'(0) = a cos(theta0).

    The output grid has spacing ``direct_spacing`` in x up to x(1) and
    ``xi_spacing`` in xi beyond it. When ``check_handoff`` is set, the direct
    integration is also continued across one decade past the matching point
    and compared with the transformed one; the relative discrepancy is stored
    in ``handoff_error`` and a warning is issued above 1e-6.
    """
    if X < 1:
        raise ValueError("X must be >= 1")
    if amplitude == 0:
        return _zero_solution(q, lam, theta0, X, direct_spacing)
    P._check_rtol(rtol)
    x1 = x_of_xi(HANDOFF_XI)
    xd = np.arange(0.0, min(X, x1), direct_spacing)
    xd = np.append(xd, min(X, x1))
    run = P._direct(q, lam, theta0, xd[-1], amplitude, rtol, t_eval=xd)
    rho = np.exp(run.ye[:, 0])
    ud, dud = rho * np.sin(run.ye[:, 1]), rho * np.cos(run.ye[:, 1])
    l2d = run.ae[:, 1]
    if X <= x1:
        return SolutionSample(float(lam), float(theta0), float(amplitude), xd, ud, dud, l2d, q,
                              rtol=rtol)

    st = P._state_from_direct(HANDOFF_XI, x1, run.y[-1, 0], run.y[-1, 1])
    Xi = xi_of_x(X)
    xg = HANDOFF_XI + xi_spacing * np.arange(1, int(math.ceil((Xi - HANDOFF_XI) / xi_spacing)))
    xg = np.append(xg, Xi)
    y0 = [st.logR, st.theta - st.xi, 0.0, 0.0]
    tr = P._run(q, 0, lam, HANDOFF_XI, Xi, y0, rtol, P.MAX_STEP, False, xg)
    R = np.exp(tr.ye[:, 0])
    th = xg + tr.ye[:, 1]
    ut, dut = pull_solution(R * np.sin(th), R * np.cos(th), xg)
    xt = np.asarray(x_of_xi(xg))
    l2t = l2d[-1] + tr.ae[:, 1]

    herr = 0.0
    if check_handoff:
        xo_end = min(X, 10.0 * x1)
        sel = xt <= xo_end
        if sel.any():
            y_end = run.y[-1]
            ov = P._run(q, 1, lam, x1, xt[sel][-1], y_end, rtol, P.DIRECT_MAX_STEP, False, xt[sel])
            rho_o = np.exp(ov.ye[:, 0])
            uo, duo = rho_o * np.sin(ov.ye[:, 1]), rho_o * np.cos(ov.ye[:, 1])
            scale = np.hypot(uo, duo)
            herr = float(np.max(np.hypot(uo - ut[sel], duo - dut[sel]) / scale))
            if herr > HANDOFF_TOL:
                warnings.warn(f"hand-off discrepancy {herr:.2e} exceeds {HANDOFF_TOL:g}",
                              RuntimeWarning, stacklevel=2)
    grid = np.concatenate([xd, xt])
    return SolutionSample(float(lam), float(theta0), float(amplitude), grid,
                          np.concatenate([ud, ut]), np.concatenate([dud, dut]),
                          np.concatenate([l2d, l2t]), q, herr, rtol)


def wronskian(sol1: SolutionSample, sol2: SolutionSample) -> np.ndarray:
    """u1 u2' - u1' u2 on the common grid."""
    if not np.array_equal(sol1.grid, sol2.grid):
        raise ValueError("solutions must share a grid")
    return sol1.u * sol2.du - sol1.du * sol2.u


def l2_growth(sol: SolutionSample, N: float) -> float:
    """int_0^N u^2 dx from the running norms on the solution grid.

    Between grid points the equation is integrated from the nearest grid
    point on the left; samples without a potential fall back to linear
    interpolation of the running norm.
    """
    grid = sol.grid
    if N < 0 or N > grid[-1] * (1 + 1e-12):
        raise RangeError(f"N outside [0, {grid[-1]:g}]")
    j = int(np.searchsorted(grid, N, side="right")) - 1
    j = min(max(j, 0), grid.size - 1)
    if math.isclose(N, grid[j], rel_tol=1e-14, abs_tol=1e-300) or j == grid.size - 1:
        return float(sol.l2[j])
    rho = math.hypot(sol.u[j], sol.du[j])
    if sol.q is None or rho == 0:
        return float(np.interp(N, grid, sol.l2))
    y0 = [math.log(rho), math.atan2(sol.u[j], sol.du[j])]
    run = P._run(sol.q, 1, sol.lam, float(grid[j]), float(N), y0, sol.rtol,
                 P.DIRECT_MAX_STEP, False)
    return float(sol.l2[j] + run.acc[-1, 1])


def subordinacy_ratio(sol1: SolutionSample, sol2: SolutionSample, N: float) -> float:
    """||u1||_{L2(0,N)} / ||u2||_{L2(0,N)}."""
    if sol1.lam != sol2.lam:
        raise ValueError("solutions must share lam")
    if not np.array_equal(sol1.grid, sol2.grid):
        raise ValueError("solutions must share a grid")
    a, b = l2_growth(sol1, N), l2_growth(sol2, N)
    if b == 0:
        raise DomainError("denominator solution is trivial")
    return math.sqrt(a / b)


def ratio_slope(sol1: SolutionSample, sol2: SolutionSample, lo: float, hi: float,
                n: int = 16) -> float:
    """Log-log slope of the norm ratio over N in [lo, hi]."""
    N = np.geomspace(lo, hi, n)
    r = np.array([subordinacy_ratio(sol1, sol2, v) for v in N])
    return loglog_slope(N, r)


class AsymptoticFit(NamedTuple):
    amplitude: float
    x: np.ndarray
    phase: np.ndarray
    residual: float
    f_prime_envelope: float
    f_prime: np.ndarray
    envelope: np.ndarray


def asymptotic_fit(sol: SolutionSample, window) -> AsymptoticFit:
    """Fit u = A x^(-1/4) sin((2/3) x^(3/2) + f(x)) on ``window``.

    With the local momentum k = sqrt(x + lam - q), the pair (u, u'/k) gives
    the envelope A(x) x^(-1/4) and the total phase; f is that phase minus
    (2/3) x^(3/2), shifted so that f at the window start lies in (-pi, pi].
    f' is computed from the equation rather than by differencing.
    """
    x1, x2 = map(float, window)
    if not 0 < x1 < x2 <= sol.grid[-1] * (1 + 1e-12):
        raise RangeError("window must lie inside the solution grid")
    if (xi_of_x(x2) - xi_of_x(x1)) / (2 * math.pi) < 5:
        raise FitResolutionError("window holds fewer than 5 oscillations")
    if sol.q is None:
        raise ValueError("solution carries no potential")
    sel = (sol.grid >= x1) & (sol.grid <= x2)
    x, u, du = sol.grid[sel], sol.u[sel], sol.du[sel]
    qx = np.asarray(evaluate(sol.q, x))
    k2 = x + sol.lam - qx
    if np.any(k2 <= 0):
        raise FitResolutionError("window is not in the oscillatory regime")
    k = np.sqrt(k2)
    step = 1e-4 if sol.q.family == "tabulated" else None
    kp = (1.0 - np.asarray(evaluate_derivative(sol.q, x, step=step))) / (2.0 * k)
    v = du / k
    env2 = u * u + v * v
    zeta = np.unwrap(np.arctan2(u, v))
    f = zeta - 2.0 / 3.0 * x ** 1.5
    f -= 2 * math.pi * math.ceil((f[0] - math.pi) / (2 * math.pi))
    zeta_p = (du * du / k + k * u * u + u * du * kp / k2) / env2
    fp = zeta_p - np.sqrt(x)
    A = np.sqrt(env2) * x ** 0.25
    mean = float(A.mean())
    return AsymptoticFit(mean, x, f, float(np.max(np.abs(A / mean - 1.0))),
                         float(np.max(np.abs(fp) * np.sqrt(1.0 + x))), fp, A)


# ---------------------------------------------------------------------------
# survey

@dataclass(frozen=True)
class SurveyConfig:
    xi0: float = 1.0
    Xi: float = 1e4
    tail_factor: float = 10.0
    rtol: float = 1e-11
    oscillation_tol: float = 0.05
    ratio_band: tuple = (0.2, 5.0)
    ratio_slope_tol: float = 0.05
    theta0_pair: tuple = (0.0, 0.5 * math.pi)
    subordinacy: bool = True
    workers: int = 1

    def __post_init__(self):
        if not (self.xi0 > 0 and self.Xi >= 100 * self.xi0):
            raise ValueError("need xi0 > 0 and Xi >= 100 xi0")
        if self.tail_factor < 1:
            raise ValueError("tail_factor must be >= 1")
        P._check_rtol(self.rtol)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "ratio_band", tuple(float(v) for v in self.ratio_band))
        object.__setattr__(self, "theta0_pair", tuple(float(v) for v in self.theta0_pair))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("workers")  # does not affect results
        d["ratio_band"] = list(d["ratio_band"])
        d["theta0_pair"] = list(d["theta0_pair"])
        return d


def _verdict_label(cv, amp, in_band) -> str:
    if cv.converged and math.isfinite(amp) and in_band:
        return "ac_consistent"
    if not cv.converged and abs(cv.drift) >= 0.8 * cv.oscillation:
        return "resonant"
    return "inconclusive"


def assess_energy(q: PotentialSpec, lam: float, config: SurveyConfig,
                  artifacts: dict | None = None) -> SpectralVerdict:
    """Run the Prüfer and direct-solution pipelines at one energy.

    If ``artifacts`` is a dict it receives the curves used for plots.
    """
    c = config
    start = P.initial_state(q, lam, c.theta0_pair[0], c.xi0)
    traj = P.integrate_prufer(q, lam, start, c.Xi * c.tail_factor, c.rtol)
    d = traj.diag_xi <= c.Xi * (1 + 1e-12)
    cv = P.convergence_verdict((traj.diag_xi[d], traj.diag_integral6[d]), tol=c.oscillation_tol)
    amp = P.amplitude_bound(traj, c.Xi)
    kind = "decaying" if q.is_decaying else "smooth"
    prof = P.control_profile(traj, kind, c.Xi / 100.0, c.Xi)
    slope = P.control_slope(prof)
    last = prof.xi >= c.Xi / 10.0
    l1 = float(np.trapezoid(prof.value[last], prof.xi[last])) if last.sum() > 1 else float("nan")
    if artifacts is not None:
        artifacts["xi"] = traj.diag_xi[d]
        artifacts["logR"] = traj.diag_y[d, 0]
        artifacts["integral6"] = traj.diag_integral6[d]

    ratio = rslope = resid = None
    if c.subordinacy:
        X = x_of_xi(c.Xi)
        s1 = solve_original(q, lam, c.theta0_pair[0], X, rtol=c.rtol, check_handoff=False)
        s2 = solve_original(q, lam, c.theta0_pair[1], X, rtol=c.rtol, check_handoff=False)
        ratio = subordinacy_ratio(s1, s2, X)
        rslope = ratio_slope(s1, s2, X / 10.0, X)
        if artifacts is not None:
            Ns = np.geomspace(1.0, X, 97)
            artifacts["N"] = Ns
            artifacts["l2_scaled"] = np.array([l2_growth(s1, v) for v in Ns]) / np.sqrt(Ns)
        try:
            resid = asymptotic_fit(s1, (X / 10.0, X)).residual
        except (FitResolutionError, RangeError):
            resid = None
    in_band = ratio is None or (c.ratio_band[0] <= ratio <= c.ratio_band[1]
                                and abs(rslope) <= c.ratio_slope_tol)
    return SpectralVerdict(
        lam=float(lam), amplitude_bound=amp, integral6_oscillation=cv.oscillation,
        integral6_drift=cv.drift, control_kind=kind, control_L1_tail=l1, control_slope=slope,
        subordinacy_ratio=ratio, ratio_slope=rslope, asymptotic_residual=resid,
        verdict=_verdict_label(cv, amp, in_band))


def _safe_assess(q, lam, config, artifacts=None):
    try:
        return assess_energy(q, lam, config, artifacts)
    except (StiffnessError, RangeError, ValueError, FloatingPointError, RuntimeError) as exc:
        return SpectralVerdict(lam=float(lam), error=f"{type(exc).__name__}: {exc}")


@dataclass
class SurveyReport:
    potential: dict
    config: dict
    lambda_grid: list
    verdicts: list = field(default_factory=list)
    version: str = __version__
    artifacts: dict = field(default_factory=dict, repr=False)

    @property
    def config_hash(self) -> str:
        return config_hash({"potential": self.potential, "config": self.config,
                            "lambda_grid": self.lambda_grid})

    @property
    def all_failed(self) -> bool:
        return bool(self.verdicts) and all(v.error is not None for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "toolkit": "starkspec",
            "version": self.version,
            "config_hash": self.config_hash,
            "potential": self.potential,
            "config": self.config,
            "lambda_grid": self.lambda_grid,
            "disclaimer": FINITE_HORIZON_NOTE,
            "verdicts": [v.to_dict() for v in sorted(self.verdicts, key=lambda v: v.lam)],
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def spectral_survey(q: PotentialSpec, lam_grid, config: SurveyConfig | None = None,
                    collect: bool = False) -> SurveyReport:
    """Per-energy verdicts over ``lam_grid``. Failures are recorded, never raised.

    With ``collect`` the report's ``artifacts`` maps each lambda to its curves.
    """
    lam_grid = [float(v) for v in lam_grid]
    if not lam_grid:
        raise ValueError("lambda grid is empty")
    config = SurveyConfig() if config is None else config
    arts = {lam: {} for lam in lam_grid} if collect else {}

    def work(lam):
        return _safe_assess(q, lam, config, arts.get(lam))

    if config.workers > 1 and len(lam_grid) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            verdicts = list(pool.map(work, lam_grid))
    else:
        verdicts = [work(lam) for lam in lam_grid]
    return SurveyReport(q.to_dict(), config.to_dict(), lam_grid, verdicts, artifacts=arts)
