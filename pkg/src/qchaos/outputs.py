"""Portable run outputs: CSV tables, P6 heatmaps, key=value manifests.

Floats are written with repr(), the shortest decimal that round-trips, so
identical runs produce byte-identical files.  Heatmaps use a linear
blue-to-red map over [0, vmax]: value v gives RGB
(round(255 v), 0, 255 - round(255 v)).
"""

from __future__ import annotations

import os
import time

import numpy as np


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str, header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


TIMESERIES_HEADER = ["t", "fidelity", "<y2>", "P_left", "P_right"]


def write_timeseries_csv(path: str, t, fidelity=None, y2=None,
                         p_left=None, p_right=None) -> str:
    """The shared time-series format; columns not supplied stay empty."""
    cols = [fidelity, y2, p_left, p_right]
    rows = []
    for k, tk in enumerate(t):
        rows.append([tk] + [None if c is None else c[k] for c in cols])
    return write_csv(path, TIMESERIES_HEADER, rows)


def heatmap_rgb(matrix: np.ndarray, vmax: float | None = None) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if vmax is None:
        vmax = float(m.max())
    if vmax <= 0:
        vmax = 1.0
    v = np.clip(m / vmax, 0.0, 1.0)
    r = np.round(255.0 * v).astype(np.uint8)
    rgb = np.zeros(m.shape + (3,), dtype=np.uint8)
    rgb[..., 0] = r
    rgb[..., 2] = 255 - r
    return rgb


def write_ppm(path: str, matrix: np.ndarray, vmax: float | None = None) -> str:
    """Binary portable pixmap (P6); matrix rows become image rows, top down."""
    rgb = heatmap_rgb(matrix, vmax)
    height, width = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())
    return path


class Manifest:
    """Config keys plus `# key=value` result comments; the plain keys reload
    as a config file, so a run can be reproduced from its manifest."""

    def __init__(self, experiment: str, params: dict):
        self.experiment = experiment
        self.params = dict(params)
        self.results: list[tuple[str, str]] = []
        self.outputs: list[str] = []
        self.started = time.time()

    def record(self, key: str, value) -> None:
        self.results.append((key, fmt(value)))

    def add_output(self, path: str) -> str:
        self.outputs.append(os.path.basename(path))
        return path

    def write(self, out_dir: str) -> str:
        lines = ["# qchaos run manifest; plain key=value lines reload with --config"]
        lines.append(f"experiment={self.experiment}")
        for key in sorted(self.params):
            lines.append(f"{key}={fmt(self.params[key])}")
        lines.append(f"# wall_clock_s={time.time() - self.started:.3f}")
        for name in self.outputs:
            lines.append(f"# output={name}")
        for key, value in self.results:
            lines.append(f"# {key}={value}")
        path = os.path.join(out_dir, "manifest.txt")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        return path


def read_config_file(path: str) -> dict[str, str]:
    """key=value lines; blank lines and # comments ignored."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
