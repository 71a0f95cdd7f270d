"""CSV / JSON / SVG writers.  Every file is written to a temporary sibling and renamed."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np


def atomic_write(path: str | Path, data: str | bytes) -> Path:
    path = Path(path)
    directory = path.parent
    if not directory.is_dir():
        raise OSError(f"output directory {directory} does not exist")
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=directory)
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "", "encoding": "utf-8"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(v: Any) -> Any:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    return atomic_write(path, csv_text(header, rows))


def write_waveform_csv(path, times: Sequence[float], values: Sequence[float]) -> Path:
    return write_csv(path, ("time_ns", "value"), zip(times, values))


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj: Any) -> Path:
    return atomic_write(path, json_text(obj))


# ---------------------------------------------------------------------------
# SVG


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "orbitlab"
    matplotlib.rcParams["svg.fonttype"] = "none"
    import matplotlib.pyplot as plt

    return plt


def save_svg(fig, path) -> Path:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    _pyplot().close(fig)
    return atomic_write(path, buf.getvalue())


def plot_lines(
    path,
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    xlabel: str,
    ylabel: str,
    title: str = "",
    markers: Sequence[tuple[str, Sequence[float], Sequence[float]]] = (),
    logx: bool = False,
) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, x, y in markers:
        ax.plot(x, y, "o", ms=3, label=label)
    for label, x, y in series:
        ax.plot(x, y, "-", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if logx:
        ax.set_xscale("log")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return save_svg(fig, path)


def plot_panels(path, panels: Sequence[dict], title: str = "") -> Path:
    """Side-by-side line panels: dicts with xlabel, ylabel and series."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 3.6))
    axes = np.atleast_1d(axes)
    for ax, panel in zip(axes, panels):
        for label, x, y in panel["series"]:
            ax.plot(x, y, "o-", ms=2, label=label)
        ax.set_xlabel(panel["xlabel"])
        ax.set_ylabel(panel["ylabel"])
        ax.legend(fontsize=7)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return save_svg(fig, path)


def plot_map(
    path,
    x: Sequence[float],
    y: Sequence[float],
    z: np.ndarray,
    xlabel: str,
    ylabel: str,
    colorbar: str,
    bands: Sequence[float] | None = None,
) -> Path:
    """Grid z[i, j] over (x[i], y[j]); optional legend bands at the given edges."""
    plt = _pyplot()
    from matplotlib.colors import BoundaryNorm, ListedColormap

    fig, ax = plt.subplots(figsize=(6, 4.5))
    z = np.asarray(z).T
    if bands:
        edges = [-np.inf] + list(bands) + [np.inf]
        finite = [float(np.nanmin(z)) - 1.0] + list(bands) + [float(np.nanmax(z)) + 1.0]
        cmap = ListedColormap(["#2c7bb6", "#ffffbf", "#d7191c"][: len(edges) - 1])
        norm = BoundaryNorm(finite, cmap.N)
        mesh = ax.pcolormesh(x, y, z, cmap=cmap, norm=norm, shading="nearest")
        cb = fig.colorbar(mesh, ax=ax, ticks=list(bands))
        labels = [f"< {bands[0]:g}"] + [f"{a:g}-{b:g}" for a, b in zip(bands, bands[1:])] + [f"> {bands[-1]:g}"]
        ax.set_title("bands: " + ", ".join(labels), fontsize=8)
    else:
        mesh = ax.pcolormesh(x, y, z, shading="nearest")
        cb = fig.colorbar(mesh, ax=ax)
    cb.set_label(colorbar)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    return save_svg(fig, path)
