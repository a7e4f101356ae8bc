"""Deterministic serialization: canonical JSON, config hashes, CSV and SVG."""

from __future__ import annotations

import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from ._version import __version__

__all__ = ["canonical_json", "config_hash", "write_csv", "csv_text", "write_svg_plot"]


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    return obj


def canonical_json(obj) -> str:
    """Sorted-key JSON with non-finite floats written as null."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(obj) -> str:
    """SHA-256 (first 16 hex digits) of the compact canonical JSON of ``obj``."""
    text = json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def csv_text(columns: dict, chash: str, comment: str | None = None) -> str:
    """CSV with a two-line '#' preamble (version, config hash) and fixed formatting."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    buf = io.StringIO()
    buf.write(f"# starkspec {__version__} config_hash={chash}\n")
    if comment:
        buf.write(f"# {comment}\n")
    buf.write(",".join(names) + "\n")
    for row in zip(*arrays):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, (str, np.str_)):
        return str(v)
    v = float(v)
    return repr(v) if math.isfinite(v) else "nan"


def write_csv(path, columns: dict, chash: str, comment: str | None = None) -> Path:
    path = Path(path)
    path.write_text(csv_text(columns, chash, comment))
    return path


def write_svg_plot(path, series, xlabel: str, ylabel: str, title: str, chash: str,
                   logx: bool = True, logy: bool = False) -> Path:
    """Static SVG line plot. Needs matplotlib (the ``plots`` extra).

    ``series`` is a list of (label, x, y). Output is byte-stable: fixed
    hash salt, no date metadata.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "starkspec"
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, x, y in series:
        ax.plot(x, y, lw=1.0, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    if len(series) > 1:
        ax.legend(fontsize=8)
    fig.text(0.99, 0.01, f"starkspec {__version__} {chash}", ha="right", va="bottom", fontsize=6)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path
