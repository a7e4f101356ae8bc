"""Perturbation families q(x) for the Stark equation -u'' - x u + q(x) u = lam u.

Every family is described by an immutable :class:`PotentialSpec`. The
analytic families are

* ``zero``                 q = 0
* ``power_law``            q = A (1+x)^(-beta)
* ``resonant``             q = A (1+x)^(-d) sin((4/3) x^(3/2) + phi)
* ``weierstrass_smooth``   q = A sum_{k=0..K} 2^(-(alpha+1)k) sin(2^k x)

and ``tabulated`` wraps user samples with linear interpolation. The resonant
phase (4/3) x^(3/2) equals 2*xi under xi = (2/3) x^(3/2), which is what makes
the family resonate with the free Prufer rotation at lam = 0.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

__all__ = [
    "FAMILIES",
    "PRESETS",
    "PotentialSpec",
    "PotentialRangeError",
    "DecayCheck",
    "evaluate",
    "evaluate_derivative",
    "verify_decay",
    "verify_holder",
    "weierstrass_bounds",
    "parse_preset",
    "preset",
    "load_tabulated",
]

FAMILIES = ("zero", "power_law", "resonant", "weierstrass_smooth", "tabulated")

# integer codes understood by the compiled integrator
_FAMILY_CODE = {name: i for i, name in enumerate(FAMILIES)}


class PotentialRangeError(ValueError):
    """Raised when a tabulated potential is evaluated outside its grid."""


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """Symbolic description of a perturbation q(x) on x >= 0.

    Parameters
    ----------
    family : str
        One of :data:`FAMILIES`.
    amplitude : float
        Overall factor A (every analytic family).
    decay_exponent : float
        beta for ``power_law``.
    resonant_phase, resonant_decay : float
        phi and d for ``resonant``.
    holder_alpha : float
        alpha in (0, 1] for ``weierstrass_smooth``.
    term_count : int
        K for ``weierstrass_smooth`` (terms k = 0..K).
    samples : tuple of ndarray, optional
        ``(x, q)`` grid for ``tabulated``; x strictly increasing.
    """

    family: str = "zero"
    amplitude: float = 1.0
    decay_exponent: float = 0.5
    resonant_phase: float = 0.0
    resonant_decay: float = 0.5
    holder_alpha: float = 0.5
    term_count: int = 8
    samples: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}")
        if self.family == "weierstrass_smooth":
            if not 0.0 < self.holder_alpha <= 1.0:
                raise ValueError("holder_alpha must lie in (0, 1]")
            if int(self.term_count) != self.term_count or self.term_count < 1:
                raise ValueError("term_count must be a positive integer")
            object.__setattr__(self, "term_count", int(self.term_count))
        if self.family == "tabulated":
            if self.samples is None:
                raise ValueError("tabulated potential needs samples")
            xs = np.array(self.samples[0], dtype=float)
            qs = np.array(self.samples[1], dtype=float)
            if xs.ndim != 1 or xs.shape != qs.shape or xs.size < 2:
                raise ValueError("samples must be two 1-d arrays of equal length >= 2")
            if np.any(np.diff(xs) <= 0):
                raise ValueError("tabulated grid must be strictly increasing in x")
            xs.setflags(write=False)
            qs.setflags(write=False)
            object.__setattr__(self, "samples", (xs, qs))

    def __call__(self, x):
        return evaluate(self, x)

    @property
    def satisfies_decay_hypothesis(self) -> bool:
        """Whether |q(x)| <= C (1+x)^(-1/3-eps) holds for some eps > 0."""
        if self.family == "zero":
            return True
        if self.family == "power_law":
            return self.decay_exponent > 1.0 / 3.0
        if self.family == "resonant":
            return self.resonant_decay > 1.0 / 3.0
        return False

    @property
    def is_decaying(self) -> bool:
        return self.family in ("zero", "power_law", "resonant")

    @property
    def x_max(self) -> float:
        if self.family == "tabulated":
            return float(self.samples[0][-1])
        return math.inf

    def params(self) -> dict:
        """Family parameters under their short (CLI) names."""
        if self.family == "power_law":
            return {"A": self.amplitude, "beta": self.decay_exponent}
        if self.family == "resonant":
            return {"A": self.amplitude, "decay": self.resonant_decay,
                    "phi": self.resonant_phase}
        if self.family == "weierstrass_smooth":
            return {"A": self.amplitude, "alpha": self.holder_alpha,
                    "K": self.term_count}
        if self.family == "tabulated":
            return {"n_samples": int(self.samples[0].size)}
        return {}

    def describe(self) -> str:
        inner = ",".join(f"{k}={v:g}" for k, v in self.params().items())
        return f"{self.family}{{{inner}}}"

    def to_dict(self) -> dict:
        out = {"family": self.family, **self.params()}
        if self.family == "tabulated":
            out["x"] = self.samples[0].tolist()
            out["q"] = self.samples[1].tolist()
        return out

    def kernel_args(self):
        """Arguments for the compiled integrator.

        Returns ``(code, params, tab_x, tab_q, qfreq)`` where ``qfreq`` is the
        largest angular frequency of q in x (0 if q is not oscillatory or the
        phase is already slaved to the Prufer rotation).
        """
        code = _FAMILY_CODE[self.family]
        empty = np.zeros(1)
        qfreq = 0.0
        if self.family == "power_law":
            p = np.array([self.amplitude, self.decay_exponent])
        elif self.family == "resonant":
            p = np.array([self.amplitude, self.resonant_decay, self.resonant_phase])
        elif self.family == "weierstrass_smooth":
            p = np.array([self.amplitude, self.holder_alpha, float(self.term_count)])
            qfreq = float(2 ** self.term_count)
        else:
            p = np.zeros(1)
        if self.family == "tabulated":
            return code, p, self.samples[0], self.samples[1], qfreq
        return code, p, empty, empty, qfreq


def _check_x(spec: PotentialSpec, x: np.ndarray):
    if np.any(x < 0):
        raise ValueError("potentials are defined on x >= 0 only")
    if spec.family == "tabulated":
        xs = spec.samples[0]
        if np.any(x < xs[0]) or np.any(x > xs[-1]):
            raise PotentialRangeError(
                f"x outside tabulated range [{xs[0]:g}, {xs[-1]:g}]")


def evaluate(spec: PotentialSpec, x):
    """Evaluate q at ``x`` (scalar or array, x >= 0)."""
    xa = np.asarray(x, dtype=float)
    _check_x(spec, xa)
    fam = spec.family
    A = spec.amplitude
    if fam == "zero":
        out = np.zeros_like(xa)
    elif fam == "power_law":
        out = A * (1.0 + xa) ** (-spec.decay_exponent)
    elif fam == "resonant":
        out = (A * (1.0 + xa) ** (-spec.resonant_decay)
               * np.sin(4.0 / 3.0 * xa ** 1.5 + spec.resonant_phase))
    elif fam == "weierstrass_smooth":
        out = np.zeros_like(xa)
        for k in range(spec.term_count + 1):
            out = out + 2.0 ** (-(spec.holder_alpha + 1.0) * k) * np.sin(2.0 ** k * xa)
        out = A * out
    else:
        out = np.interp(xa, spec.samples[0], spec.samples[1])
    return float(out) if out.ndim == 0 else out


def evaluate_derivative(spec: PotentialSpec, x, step: float | None = None):
    """q'(x): closed form for analytic families, central difference otherwise.

    ``step`` is mandatory for tabulated potentials. Near the ends of the table
    the difference is one-sided.
    """
    xa = np.asarray(x, dtype=float)
    _check_x(spec, xa)
    fam = spec.family
    A = spec.amplitude
    if fam == "zero":
        out = np.zeros_like(xa)
    elif fam == "power_law":
        b = spec.decay_exponent
        out = -A * b * (1.0 + xa) ** (-b - 1.0)
    elif fam == "resonant":
        d = spec.resonant_decay
        ph = 4.0 / 3.0 * xa ** 1.5 + spec.resonant_phase
        out = A * ((1.0 + xa) ** (-d) * 2.0 * np.sqrt(xa) * np.cos(ph)
                   - d * (1.0 + xa) ** (-d - 1.0) * np.sin(ph))
    elif fam == "weierstrass_smooth":
        out = np.zeros_like(xa)
        for k in range(spec.term_count + 1):
            out = out + 2.0 ** (-spec.holder_alpha * k) * np.cos(2.0 ** k * xa)
        out = A * out
    else:
        if step is None or step <= 0:
            raise ValueError("tabulated potentials need a positive finite-difference step")
        lo, hi = spec.samples[0][0], spec.samples[0][-1]
        xp = np.minimum(xa + step, hi)
        xm = np.maximum(xa - step, lo)
        out = (np.interp(xp, *spec.samples) - np.interp(xm, *spec.samples)) / (xp - xm)
    return float(out) if out.ndim == 0 else out


def weierstrass_bounds(spec: PotentialSpec) -> tuple[float, float]:
    """Uniform bounds ``(sup|q|, sup|q'|)`` of a weierstrass_smooth potential."""
    if spec.family != "weierstrass_smooth":
        raise ValueError("bounds are only defined for weierstrass_smooth")
    k = np.arange(spec.term_count + 1)
    a = spec.holder_alpha
    return (abs(spec.amplitude) * float(np.sum(2.0 ** (-(a + 1.0) * k))),
            abs(spec.amplitude) * float(np.sum(2.0 ** (-a * k))))


class DecayCheck(NamedTuple):
    holds: bool
    best_constant: float


def verify_decay(spec: PotentialSpec, beta: float, grid) -> DecayCheck:
    """Empirical check of |q(x)| <= C (1+x)^(-beta) on ``grid``.

    ``best_constant`` is the sup of |q|(1+x)^beta over the grid. The bound is
    said to hold when that envelope is finite and does not grow over the last
    decade of the grid, i.e. its maximum on [x_max/10, x_max] does not exceed
    the maximum over the rest of the grid.
    """
    x = np.asarray(grid, dtype=float)
    if x.size == 0:
        raise ValueError("grid must be nonempty")
    env = np.abs(np.asarray(evaluate(spec, x))) * (1.0 + x) ** beta
    best = float(np.max(env))
    if not np.isfinite(best):
        return DecayCheck(False, best)
    tail = x >= x.max() / 10.0
    if tail.all() or best == 0.0:
        return DecayCheck(True, best)
    head_max = float(np.max(env[~tail]))
    tail_max = float(np.max(env[tail]))
    return DecayCheck(tail_max <= head_max * (1.0 + 1e-9) + 1e-300, best)


def verify_holder(spec: PotentialSpec, alpha: float, grid, h_grid=None,
                  step: float | None = None) -> float:
    """Empirical Holder constant of q': max |q'(x+h) - q'(x)| / h^alpha.

    Defaults to ``h_grid = 2^-j`` for j = 0..(K+4) (weierstrass) or 0..16.
    """
    x = np.asarray(grid, dtype=float)
    if h_grid is None:
        top = spec.term_count + 4 if spec.family == "weierstrass_smooth" else 16
        h_grid = 2.0 ** -np.arange(top + 1)
    h = np.asarray(h_grid, dtype=float)
    if np.any(h <= 0) or np.any(h > 1):
        raise ValueError("h-grid entries must lie in (0, 1]")
    if spec.family == "tabulated":
        x = x[x + h.max() <= spec.x_max]
    d0 = np.asarray(evaluate_derivative(spec, x, step))
    best = 0.0
    for hj in h:
        d1 = np.asarray(evaluate_derivative(spec, x + hj, step))
        best = max(best, float(np.max(np.abs(d1 - d0))) / hj ** alpha)
    return best


# ---------------------------------------------------------------------------
# preset registry

_PARAM_FIELDS = {
    "A": "amplitude",
    "beta": "decay_exponent",
    "phi": "resonant_phase",
    "decay": "resonant_decay",
    "alpha": "holder_alpha",
    "K": "term_count",
}

PRESETS: dict[str, PotentialSpec] = {
    "zero": PotentialSpec("zero"),
    "power_law": PotentialSpec("power_law", amplitude=1.0, decay_exponent=0.5),
    "resonant": PotentialSpec("resonant", amplitude=2.0, resonant_decay=0.5,
                              resonant_phase=0.0),
    "weierstrass_smooth": PotentialSpec("weierstrass_smooth", amplitude=1.0,
                                        holder_alpha=0.5, term_count=8),
}

# energy at which the resonant preset's phase locks to the Prufer rotation
RESONANT_ENERGY = 0.0

_PRESET_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\{(.*)\})?\s*$")


def preset(name: str, **params) -> PotentialSpec:
    """Preset ``name`` with overrides given under short names (A, beta, ...)."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    changes = {}
    for key, value in params.items():
        if key not in _PARAM_FIELDS:
            raise ValueError(f"unknown potential parameter {key!r}")
        changes[_PARAM_FIELDS[key]] = value
    return replace(PRESETS[name], **changes)


def parse_preset(text: str) -> PotentialSpec:
    """Parse ``name{key=value,...}``, e.g. ``power_law{A=1,beta=0.5}``."""
    m = _PRESET_RE.match(text)
    if m is None:
        raise ValueError(f"malformed potential string {text!r}")
    name, body = m.group(1), m.group(2)
    params = {}
    if body:
        for item in body.split(","):
            if not item.strip():
                continue
            if "=" not in item:
                raise ValueError(f"malformed parameter {item!r}")
            k, v = (s.strip() for s in item.split("=", 1))
            params[k] = int(v) if k == "K" else float(v)
    return preset(name, **params)


def load_tabulated(path) -> PotentialSpec:
    """Tabulated potential from a two-column CSV file ``x, q``.

    Lines starting with ``#`` and a non-numeric header row are skipped.
    """
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except (ValueError, IndexError):
            if rows:
                raise ValueError(f"bad row in {path}: {line!r}") from None
    if not rows:
        raise ValueError(f"no samples in {path}")
    data = np.array(rows)
    return PotentialSpec("tabulated", samples=(data[:, 0], data[:, 1]))
