"""Command-line front end: ``starkspec {presets,survey,trajectory,tails,sset}``.

Every command accepts ``--config FILE`` with a flat JSON object whose keys
are the long option names (dashes or underscores); explicit flags override
the file. A survey report may itself be passed as ``--config`` to re-run it.
Output files go to ``--out`` (default: $STARKSPEC_OUT or the working
directory) and are named after the config hash, so identical configs
overwrite identical bytes.

Exit codes: 0 success, 1 numeric failure on every lambda, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .oscillatory import PhaseSpec, cubic_phase_tails, s_set_diagnostic, tail_table
from .potentials import PRESETS, PotentialSpec, load_tabulated, parse_preset, preset
from .prufer import initial_state, integrate_prufer, trajectory_table
from .reporting import canonical_json, config_hash, write_csv, write_svg_plot
from .subordinacy import FINITE_HORIZON_NOTE, SurveyConfig, spectral_survey

log = logging.getLogger("starkspec")

OUT_ENV = "STARKSPEC_OUT"
EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

_POTENTIAL_PARAMS = {"A": float, "beta": float, "phi": float, "decay": float,
                     "alpha": float, "K": int}


class UsageError(ValueError):
    """Invalid configuration; reported with exit code 2."""


# ---------------------------------------------------------------------------
# parsing helpers

def parse_grid(text) -> list[float]:
    """``a:b:n`` (n points, both ends included), ``v1,v2,...`` or a number."""
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text).strip()
    try:
        if ":" in text:
            a, b, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError
            return [float(v) for v in np.linspace(float(a), float(b), n)]
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}; use a:b:n or a comma-separated list") from None
    if not vals:
        raise UsageError("empty grid")
    return vals


def _pair(text) -> tuple[float, float]:
    vals = parse_grid(text)
    if len(vals) != 2:
        raise UsageError(f"expected two values, got {text!r}")
    return vals[0], vals[1]


def _join_negative_values(argv: list[str]) -> list[str]:
    # argparse takes "-2:3:9" or "-0.5" for an option; glue such values on
    out, i = [], 0
    neg = re.compile(r"^-(\d|\.\d)")
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and neg.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    if "toolkit" in data and "config" in data:
        return _flatten_report(data)
    return {k.replace("-", "_"): v for k, v in data.items()}


def _flatten_report(rep: dict) -> dict:
    """Turn an emitted report back into a flat run config."""
    pot = dict(rep.get("potential", {}))
    flat = dict(rep.get("config", {}))
    if pot.get("family") == "tabulated":
        raise UsageError("re-running a tabulated report needs --potential-file")
    flat["potential"] = pot.pop("family", "zero")
    flat.update(pot)
    if "lambda_grid" in rep:
        flat["lambda"] = rep["lambda_grid"]
    if "records" in rep:
        flat["lambda"] = sorted(float(k) for k in rep["records"])
    return flat


@dataclass
class RunConfig:
    """Merged settings for one command (file values overridden by flags)."""

    command: str
    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def potential(self) -> PotentialSpec:
        path = self.get("potential_file")
        if path:
            return load_tabulated(path)
        name = str(self.get("potential", "zero"))
        try:
            if "{" in name:
                return parse_preset(name)
            params = {}
            for k, conv in _POTENTIAL_PARAMS.items():
                v = self.get(k)
                if v is not None:
                    params[k] = conv(v)
            return preset(name, **params)
        except (ValueError, TypeError) as exc:
            raise UsageError(str(exc)) from None

    def out_dir(self) -> Path:
        return Path(self.get("out") or os.environ.get(OUT_ENV) or ".")


def _merge(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(_load_config_file(args.config))
    for k, v in vars(args).items():
        if k in ("command", "config", "func"):
            continue
        if v is not None:
            values[k] = v
    return RunConfig(args.command, values)


# ---------------------------------------------------------------------------
# commands

def _survey_config(rc: RunConfig) -> SurveyConfig:
    try:
        return SurveyConfig(
            xi0=float(rc.get("xi0", 1.0)),
            Xi=float(rc.get("Xi", 1e4)),
            tail_factor=float(rc.get("tail_factor", 10.0)),
            rtol=float(rc.get("rtol", 1e-11)),
            oscillation_tol=float(rc.get("oscillation_tol", rc.get("osc_tol", 0.05))),
            ratio_band=_pair(rc.get("ratio_band", [0.2, 5.0])),
            ratio_slope_tol=float(rc.get("ratio_slope_tol", 0.05)),
            theta0_pair=_pair(rc.get("theta0_pair", [0.0, 0.5 * math.pi])),
            subordinacy=bool(rc.get("subordinacy", True)),
            workers=int(rc.get("workers", os.cpu_count() or 1)),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def cmd_presets(rc: RunConfig) -> int:
    for name, spec in PRESETS.items():
        hyp = "yes" if spec.satisfies_decay_hypothesis else "no"
        print(f"{name:20s} {spec.describe():40s} decay>1/3: {hyp}")
    return EXIT_OK


def cmd_survey(rc: RunConfig) -> int:
    q = rc.potential()
    grid = parse_grid(rc.get("lambda", "0"))
    cfg = _survey_config(rc)
    out = rc.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    plots = bool(rc.get("plots", False))
    report = spectral_survey(q, grid, cfg, collect=plots)
    h = report.config_hash
    path = out / f"survey_{h}.json"
    path.write_text(report.to_json())
    written = [path]
    if rc.get("csv"):
        rows = [v.to_dict() for v in sorted(report.verdicts, key=lambda v: v.lam)]
        cols = {k: [r[k] if r[k] is not None else float("nan") for r in rows]
                for k in rows[0] if k not in ("error",)}
        written.append(write_csv(out / f"survey_{h}.csv", cols, h, q.describe()))
    if plots:
        written += _survey_plots(report, out, h)
    for v in sorted(report.verdicts, key=lambda v: v.lam):
        msg = v.error if v.error else v.verdict
        print(f"lambda={v.lam:+.6g}  {msg}")
    for p in written:
        print(f"wrote {p}")
    return EXIT_FAILED if report.all_failed else EXIT_OK


def _survey_plots(report, out: Path, h: str) -> list[Path]:
    arts = [(lam, a) for lam, a in sorted(report.artifacts.items()) if "xi" in a]
    if not arts:
        return []
    paths = [
        write_svg_plot(out / f"survey_{h}_logR.svg",
                       [(f"lambda={lam:g}", a["xi"], a["logR"] - a["logR"][0]) for lam, a in arts],
                       "xi", "logR - logR(xi0)", "amplitude", h),
        write_svg_plot(out / f"survey_{h}_integral6.svg",
                       [(f"lambda={lam:g}", a["xi"], a["integral6"]) for lam, a in arts],
                       "N", "partial integral", "integral of V sin 2theta", h),
    ]
    l2 = [(f"lambda={lam:g}", a["N"], a["l2_scaled"]) for lam, a in arts if "N" in a]
    if l2:
        paths.append(write_svg_plot(out / f"survey_{h}_l2.svg", l2, "N",
                                    "||u||^2 / N^(1/2)", "L2 growth", h))
    return paths


def cmd_trajectory(rc: RunConfig) -> int:
    q = rc.potential()
    grid = parse_grid(rc.get("lambda", "0"))
    if len(grid) != 1:
        raise UsageError("trajectory takes a single lambda")
    lam = grid[0]
    xi0, Xi = float(rc.get("xi0", 1.0)), float(rc.get("Xi", 1e4))
    rtol = float(rc.get("rtol", 1e-11))
    theta0 = float(rc.get("theta0", 0.0))
    where = str(rc.get("where", "diag"))
    if where not in ("diag", "steps"):
        raise UsageError("--where must be diag or steps")
    if not (xi0 > 0 and Xi > xi0):
        raise UsageError("need 0 < xi0 < Xi")
    try:
        start = initial_state(q, lam, theta0, xi0)
        traj = integrate_prufer(q, lam, start, Xi, rtol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    h = config_hash({"command": "trajectory", "potential": q.to_dict(), "lambda": lam,
                     "xi0": xi0, "Xi": Xi, "rtol": rtol, "theta0": theta0, "where": where})
    out = rc.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    table = trajectory_table(traj, where)
    path = write_csv(out / f"trajectory_{h}.csv", table, h, f"{q.describe()} lambda={lam!r}")
    print(f"wrote {path}")
    if rc.get("plots"):
        p = write_svg_plot(out / f"trajectory_{h}_logR.svg",
                           [("logR", table["xi"], table["logR"])], "xi", "logR",
                           f"{q.describe()} lambda={lam:g}", h)
        print(f"wrote {p}")
    return EXIT_OK


def cmd_tails(rc: RunConfig) -> int:
    kind = str(rc.get("kind", "lemma13"))
    if kind == "lemma13":
        p = float(rc.get("p", -2.0 / 3.0))
        Ns = parse_grid(rc.get("N", "100,1000,10000"))
        Xi_max = float(rc.get("Xi_max", 100.0 * max(Ns)))
        phase = PhaseSpec(float(rc.get("linear", 1.0)), float(rc.get("cubic_root", 0.0)))
        settings = {"kind": kind, "p": p, "N": Ns, "Xi_max": Xi_max,
                    "linear": phase.linear_coeff, "cubic_root": phase.cubic_root_coeff}
        try:
            rows = tail_table(p, phase, Ns, Xi_max)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    elif kind == "cubic_phase":
        lam = parse_grid(rc.get("lambda", "1"))
        if len(lam) != 1:
            raise UsageError("tails takes a single lambda")
        decay = float(rc.get("f_decay", 0.9))
        Ns = parse_grid(rc.get("N", "1000,10000,100000,1000000"))
        settings = {"kind": kind, "lambda": lam[0], "f_decay": decay, "N": Ns}
        try:
            rows = cubic_phase_tails(lambda xi: (1.0 + xi) ** -decay, lam[0], Ns, decay)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        raise UsageError("--kind must be lemma13 or cubic_phase")
    h = config_hash(settings)
    out = rc.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    cols = {"N": [r.N for r in rows], "re": [r.value.real for r in rows],
            "im": [r.value.imag for r in rows], "abs": [abs(r.value) for r in rows],
            "truncation_error": [r.truncation_error for r in rows]}
    comment = f"{kind} fitted_exponent={rows[0].fitted_exponent!r}"
    path = write_csv(out / f"tails_{h}.csv", cols, h, comment)
    print(comment)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_sset(rc: RunConfig) -> int:
    q = rc.potential()
    lams = parse_grid(rc.get("lambda", "1"))
    Ns = parse_grid(rc.get("N", "100,200,400"))
    variant = str(rc.get("variant", "proof"))
    settings = {"command": "sset", "potential": q.to_dict(), "lambda": lams, "N": Ns,
                "variant": variant}
    h = config_hash(settings)
    records = {}
    try:
        for lam in lams:
            records[repr(lam)] = [s_set_diagnostic(q, lam, N, variant).to_dict() for N in Ns]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = rc.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    doc = {"toolkit": "starkspec", "version": __version__, "config_hash": h,
           "config": {"N": Ns, "variant": variant}, "potential": q.to_dict(),
           "disclaimer": FINITE_HORIZON_NOTE, "records": records}
    path = out / f"sset_{h}.json"
    path.write_text(canonical_json(doc))
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def _add_potential(p):
    g = p.add_argument_group("potential")
    g.add_argument("--potential", help="preset name, or name{key=value,...}")
    g.add_argument("--potential-file", help="two-column CSV (x, q) for a tabulated potential")
    g.add_argument("--A", type=float, help="amplitude")
    g.add_argument("--beta", type=float, help="power_law decay exponent")
    g.add_argument("--phi", type=float, help="resonant phase")
    g.add_argument("--decay", type=float, help="resonant decay exponent")
    g.add_argument("--alpha", type=float, help="weierstrass_smooth Holder exponent")
    g.add_argument("--K", type=int, help="weierstrass_smooth number of terms")


def _add_common(p):
    p.add_argument("--config", help="flat JSON config (flags override it)")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="starkspec",
                                 description="Spectral diagnostics for perturbed Stark operators.")
    ap.add_argument("--version", action="version", version=f"starkspec {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("presets", help="list potential presets")
    sp.set_defaults(func=cmd_presets)

    sp = sub.add_parser("survey", help="per-lambda spectral verdicts")
    _add_common(sp)
    _add_potential(sp)
    sp.add_argument("--lambda", dest="lambda", help="a:b:n or comma list")
    sp.add_argument("--xi0", type=float)
    sp.add_argument("--Xi", type=float)
    sp.add_argument("--tail-factor", type=float,
                    help="trajectory runs to Xi * factor so control tails are resolved")
    sp.add_argument("--rtol", type=float)
    sp.add_argument("--oscillation-tol", type=float)
    sp.add_argument("--ratio-band", help="lo,hi")
    sp.add_argument("--ratio-slope-tol", type=float)
    sp.add_argument("--theta0-pair", help="two boundary angles, comma separated")
    sp.add_argument("--no-subordinacy", dest="subordinacy", action="store_const", const=False)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--csv", action="store_const", const=True, help="also write a verdict CSV")
    sp.add_argument("--plots", action="store_const", const=True, help="write SVG plots")
    sp.set_defaults(func=cmd_survey)

    sp = sub.add_parser("trajectory", help="dump one Prüfer trajectory as CSV")
    _add_common(sp)
    _add_potential(sp)
    sp.add_argument("--lambda", dest="lambda")
    sp.add_argument("--theta0", type=float)
    sp.add_argument("--xi0", type=float)
    sp.add_argument("--Xi", type=float)
    sp.add_argument("--rtol", type=float)
    sp.add_argument("--where", choices=("diag", "steps"))
    sp.add_argument("--plots", action="store_const", const=True)
    sp.set_defaults(func=cmd_trajectory)

    sp = sub.add_parser("tails", help="oscillatory tail tables")
    _add_common(sp)
    sp.add_argument("--kind", choices=("lemma13", "cubic_phase"))
    sp.add_argument("--p", type=float, help="power of xi (lemma13)")
    sp.add_argument("--linear", type=float, help="coefficient of xi in the phase (lemma13)")
    sp.add_argument("--cubic-root", type=float, help="coefficient of xi^(1/3) (lemma13)")
    sp.add_argument("--N", help="N values, a:b:n or comma list")
    sp.add_argument("--Xi-max", type=float)
    sp.add_argument("--lambda", dest="lambda", help="frequency (cubic_phase)")
    sp.add_argument("--f-decay", type=float, help="f = (1+xi)^(-f_decay) (cubic_phase)")
    sp.set_defaults(func=cmd_tails)

    sp = sub.add_parser("sset", help="exceptional-set diagnostics")
    _add_common(sp)
    _add_potential(sp)
    sp.add_argument("--lambda", dest="lambda")
    sp.add_argument("--N", help="xi horizons, a:b:n or comma list")
    sp.add_argument("--variant", choices=("proof", "theorem"))
    sp.set_defaults(func=cmd_sset)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    try:
        args = ap.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        rc = _merge(args)
        return args.func(rc)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
