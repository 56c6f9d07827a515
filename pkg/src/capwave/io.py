"""Plain-text artifacts: CSV time series, columnar snapshots and the run manifest.

Floats are written with ``repr`` so that reruns give byte-identical files and values
round-trip exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import yaml

from .dynamics import FlowState
from .geometry import SurfaceState

__all__ = [
    "CsvWriter",
    "read_csv",
    "write_snapshot",
    "read_grid_dump",
    "read_surface_dump",
    "load_snapshot",
    "write_manifest",
    "read_manifest",
]


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


class CsvWriter:
    """Row-at-a-time CSV writer flushing after every row, so partial runs stay readable."""

    def __init__(self, path, columns):
        self.path = Path(path)
        self.columns = list(columns)
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(self.columns)
        self._fh.flush()

    def write(self, row):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} entries, expected {len(self.columns)}")
        self._w.writerow([_fmt(v) for v in row])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_csv(path, columns, rows):
    with CsvWriter(path, columns) as w:
        for r in rows:
            w.write(r)


def read_csv(path):
    """Columns of a numeric CSV file as a dict of arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    head, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body]).reshape(len(body), len(head))
    return {h: data[:, k] for k, h in enumerate(head)}


# ---------------------------------------------------------------- snapshots
GRID_COLUMNS = ["i", "j", "x", "z", "vx", "vz", "P_vv"]
SURFACE_COLUMNS = ["i", "x", "z", "d", "q", "kappa"]


def _write_table(path, header, columns, rows):
    with open(path, "w") as fh:
        for k, v in header.items():
            fh.write(f"# {k} = {_fmt(v) if not isinstance(v, str) else v}\n")
        fh.write(" ".join(columns) + "\n")
        for r in rows:
            fh.write(" ".join(_fmt(v) for v in r) + "\n")


def _read_table(path):
    header, cols, rows = {}, None, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                k, _, v = line[1:].partition("=")
                header[k.strip()] = v.strip()
            elif cols is None:
                cols = line.split()
            else:
                rows.append([float(x) for x in line.split()])
    if cols is None:
        raise ValueError(f"{path}: no column header")
    data = np.array(rows).reshape(len(rows), len(cols))
    return header, {c: data[:, k] for k, c in enumerate(cols)}


def write_snapshot(directory, index, state: FlowState):
    """Write ``grid_<index>.txt`` (nodes, velocity, pressure) and ``surface_<index>.txt``."""
    directory = Path(directory)
    st = state.stage
    m = st.mesh
    header = {"time": state.time, "M": m.M, "N": m.N, "step": index}
    ii, jj = np.meshgrid(np.arange(m.M + 1), np.arange(m.N + 1), indexing="ij")
    P = np.asarray(st.P_vv.values if hasattr(st.P_vv, "values") else st.P_vv)
    grid_rows = zip(ii.ravel(), jj.ravel(), *m.nodes.reshape(-1, 2).T, *st.v.reshape(-1, 2).T, P.ravel())
    gpath = directory / f"grid_{index:06d}.txt"
    _write_table(gpath, header, GRID_COLUMNS, grid_rows)
    X = m.surface_points
    surf_rows = zip(np.arange(m.M + 1), X[:, 0], X[:, 1], state.d, state.rate, m.curvature)
    spath = directory / f"surface_{index:06d}.txt"
    _write_table(spath, header, SURFACE_COLUMNS, surf_rows)
    return gpath, spath


def read_grid_dump(path, field=None):
    """Nodes ``(M+1, N+1, 2)`` and one field of a grid dump.

    ``field`` names a column; by default the last column is used.
    """
    header, cols = _read_table(path)
    for c in ("i", "j", "x", "z"):
        if c not in cols:
            raise ValueError(f"{path}: missing column {c!r}")
    M = int(cols["i"].max())
    N = int(cols["j"].max())
    order = np.lexsort((cols["j"], cols["i"]))
    nodes = np.stack([cols["x"][order], cols["z"][order]], axis=1).reshape(M + 1, N + 1, 2)
    name = field or list(cols)[-1]
    if name not in cols:
        raise ValueError(f"{path}: no column {name!r}")
    return nodes, cols[name][order].reshape(M + 1, N + 1), header


def read_surface_dump(path):
    return _read_table(path)


def load_snapshot(path, domain, physics) -> FlowState:
    """Rebuild a :class:`FlowState` from a surface dump on the configured domain."""
    header, cols = _read_table(path)
    d, q = cols["d"], cols["q"]
    if len(d) != domain.M + 1:
        raise ValueError(f"{path}: {len(d)} surface nodes, domain has {domain.M + 1}")
    t = float(header.get("time", 0.0))
    surf = SurfaceState(d, float(d[0]), float(d[-1]), float(q[0]), float(q[-1]), t)
    return FlowState(domain, surf, q, physics)


# ----------------------------------------------------------------- manifest
def write_manifest(path, manifest: dict):
    with open(path, "w") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=False, default_flow_style=False)


def read_manifest(path):
    with open(path) as fh:
        return yaml.safe_load(fh)
