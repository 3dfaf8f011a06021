"""Parameter sweeps behind the five figure setups.

Tables are plain data (meta dict, column names, row dicts); file output
lives in :mod:`dmberry.cli`.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import __version__
from .berry import TWO_PI, berry_closed, berry_wilson_levels
from .errors import NumericalError, TrackingAmbiguous
from .model import ModelParams, hamiltonian_stack
from .spectrum import eigenvalues, jacobi_batch

AXES = ("b", "d", "theta")
JUMP_THRESHOLD = 0.1
DEFAULT_COUNT = 201


@dataclass(frozen=True)
class GridSpec:
    axis: str
    start: float
    stop: float
    count: int = DEFAULT_COUNT

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.start < self.stop:
            raise ValueError("grid needs start < stop")
        if int(self.count) < 2:
            raise ValueError("grid needs at least 2 points")
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "stop", float(self.stop))
        object.__setattr__(self, "count", int(self.count))
        if self.axis == "b" and self.start < 0:
            raise ValueError("b grid must stay >= 0")
        if self.axis == "theta" and (self.start < 0 or self.stop > math.pi):
            raise ValueError("theta grid must stay inside [0, pi]")

    def values(self):
        return np.linspace(self.start, self.stop, self.count)

    def as_dict(self):
        return {"axis": self.axis, "start": self.start, "stop": self.stop, "count": self.count}


@dataclass
class SweepTable:
    meta: dict
    columns: List[str]
    rows: List[dict] = field(default_factory=list)

    def column(self, name):
        return np.array([np.nan if r[name] is None else r[name] for r in self.rows], dtype=float)


@dataclass(frozen=True)
class LevelTracking:
    """``perms[i][k]`` is the ascending-sort index, at grid point ``i``, of
    the level that continuity label ``k`` follows."""

    perms: tuple
    ambiguous: tuple = ()


def _map(fn, items, threads):
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(fn, items))


def sweep_eigenvalues(base, grid, threads=1):
    xs = grid.values()

    def point(args):
        i, x = args
        row = {"i": i, grid.axis: float(x)}
        try:
            spec = eigenvalues(base.with_(**{grid.axis: float(x)}))
        except NumericalError as exc:
            row.update({f"e{k}": None for k in range(4)}, min_gap=None, upper_width=None, flag=exc.name)
            return row
        row.update({f"e{k}": e for k, e in enumerate(spec.energies)})
        row.update(min_gap=spec.min_gap, upper_width=spec.upper_width, flag="")
        return row

    rows = _map(point, list(enumerate(xs)), threads)
    columns = ["i", grid.axis, "e0", "e1", "e2", "e3", "min_gap", "upper_width", "flag"]
    meta = {"kind": "energies", "base": base.as_dict(), "grids": [grid.as_dict()], "version": __version__}
    return SweepTable(meta, columns, rows)


def track_levels(vectors, strict=True):
    """Relabel ascending-sorted levels into continuous branches.

    ``vectors`` has shape (N, 4, 4): eigenvector columns, ascending energy,
    at consecutive grid points.  Consecutive bases are matched greedily by
    largest |overlap|.  With ``strict`` a weak best match raises
    TrackingAmbiguous; otherwise the previous labels carry over and the
    index is recorded.
    """
    vectors = np.asarray(vectors, dtype=complex)
    n = vectors.shape[-1]
    perm = tuple(range(n))
    perms = [perm]
    ambiguous = []
    for i in range(1, len(vectors)):
        ov = np.abs(np.conj(np.swapaxes(vectors[i - 1], 0, 1)) @ vectors[i])
        if np.any(ov.max(axis=1) <= 1 / math.sqrt(2)):
            if strict:
                raise TrackingAmbiguous(f"no dominant overlap at grid point {i}", index=i)
            ambiguous.append(i)
            perms.append(perm)
            continue
        match = [-1] * n
        used_r, used_c = set(), set()
        for flat in np.argsort(-ov, axis=None, kind="stable"):
            r, c = divmod(int(flat), n)
            if r in used_r or c in used_c:
                continue
            match[r] = c
            used_r.add(r)
            used_c.add(c)
        perm = tuple(match[k] for k in perm)
        perms.append(perm)
    return LevelTracking(tuple(perms), tuple(ambiguous))


def eigenvectors_along(base, grid):
    """Jacobi eigenvectors at phi = 0 for every point of ``grid``."""
    mats = np.stack([hamiltonian_stack(base.with_(**{grid.axis: float(x)}), [0.0])[0] for x in grid.values()])
    return jacobi_batch(mats)


def _berry_row(base, outer, x, inner, levels, method, n):
    """One inner line of a Berry sweep, tracked along the inner axis."""
    row_base = base.with_(**{outer.axis: float(x)}) if outer is not None else base
    _, vecs = eigenvectors_along(row_base, inner)
    tracking = track_levels(vecs, strict=False)
    out = []
    for j, y in enumerate(inner.values()):
        p = row_base.with_(**{inner.axis: float(y)})
        row = {inner.axis: float(y)}
        flags = []
        if j in tracking.ambiguous:
            flags.append("TrackingAmbiguous")
        try:
            spec = eigenvalues(p)
            row["min_gap"] = spec.min_gap
        except NumericalError as exc:
            spec = None
            row["min_gap"] = None
            flags.append(exc.name)
        wilson = berry_wilson_levels(p, n) if method == "wilson" and spec is not None else None
        for k in levels:
            key = f"beta{k}"
            if spec is None:
                row[key] = None
                continue
            try:
                if method == "closed":
                    res = berry_closed(p, tracking.perms[j][k], spec)
                else:
                    res = wilson[tracking.perms[j][k]]
                    if isinstance(res, NumericalError):
                        raise res
                row[key] = res.phase
            except NumericalError as exc:
                row[key] = None
                flags.append(f"{exc.name}@{k}")
        row["flag"] = ";".join(flags)
        out.append(row)
    return out


def sweep_berry(base, grid_outer, grid_inner, level=None, method="closed", n=1024, threads=1):
    """Berry phases of continuity-tracked levels on a 1-D or 2-D grid.

    ``grid_outer`` may be None for a single line.  Levels are tracked along
    the inner axis starting from ascending order at its first point;
    ``level=None`` reports all four.
    """
    if method not in ("closed", "wilson"):
        raise ValueError("method must be 'closed' or 'wilson'")
    levels = list(range(4)) if level is None else [int(level)]
    xs = [None] if grid_outer is None else list(grid_outer.values())
    lines = _map(lambda x: _berry_row(base, grid_outer, x, grid_inner, levels, method, n), xs, threads)
    rows = []
    for i, (x, line) in enumerate(zip(xs, lines)):
        for j, r in enumerate(line):
            row = {"i": i, "j": j}
            if grid_outer is not None:
                row[grid_outer.axis] = float(x)
            row.update(r)
            rows.append(row)
    columns = ["i", "j"] + ([grid_outer.axis] if grid_outer is not None else [])
    columns += [grid_inner.axis] + [f"beta{k}" for k in levels] + ["min_gap", "flag"]
    grids = ([grid_outer.as_dict()] if grid_outer is not None else []) + [grid_inner.as_dict()]
    meta = {"kind": "berry", "base": base.as_dict(), "grids": grids, "method": method,
            "levels": levels, "version": __version__}
    if method == "wilson":
        meta["n"] = n
    return SweepTable(meta, columns, rows)


def detect_jumps(xs, phases, threshold=JUMP_THRESHOLD):
    """Locations of steep steps in a phase curve.

    A step between consecutive samples counts when its circular size exceeds
    both ``threshold`` and ten times the median step.  Runs of consecutive
    steps form one jump, placed where the run has accumulated half of its
    total phase change.
    """
    xs = np.asarray(xs, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if len(xs) < 2:
        return []
    diff = np.abs((np.diff(phases) + math.pi) % TWO_PI - math.pi)
    flagged = (diff > threshold) & (diff > 10 * np.median(diff))
    jumps = []
    k = 0
    while k < len(diff):
        if not flagged[k]:
            k += 1
            continue
        start = k
        while k < len(diff) and flagged[k]:
            k += 1
        run = diff[start:k]
        cum = np.concatenate([[0.0], np.cumsum(run)])
        half = cum[-1] / 2
        m = int(np.searchsorted(cum, half)) - 1
        m = min(max(m, 0), len(run) - 1)
        frac = (half - cum[m]) / run[m]
        jumps.append(float(xs[start + m] + frac * (xs[start + m + 1] - xs[start + m])))
    return jumps


def refine_minimum(f, lo, hi, tol=1e-6):
    """Bisect on the sign of the slope of a unimodal ``f`` over [lo, hi]."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        h = 0.25 * tol
        if f(mid + h) > f(mid - h):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def locate_subdegeneracy(base, grid, tol=1e-6):
    """Grid argmin of the excited-cluster width, refined by bisection.

    The three excited levels come closest together where their spread
    ``E4 - E2`` is smallest; for a weak field this is the point where they
    would meet at zero field.
    """
    table = sweep_eigenvalues(base, grid)
    width = table.column("upper_width")
    k = int(np.nanargmin(width))
    xs = grid.values()
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]

    def objective(x):
        return eigenvalues(base.with_(**{grid.axis: x})).upper_width

    return float(xs[k]), refine_minimum(objective, lo, hi, tol)


# Presets for the five reference scans: base parameters and grids.
FIGURES = {
    1: ("energies", ModelParams(j=1.0, jz=1.0, d=0.5, b=0.0, theta=math.pi / 4),
        [GridSpec("b", 0.0, 2.0)]),
    2: ("energies", ModelParams(j=1.0, jz=1.0, d=0.0, b=1.0, theta=math.pi / 4),
        [GridSpec("d", 0.0, 2.0)]),
    3: ("berry", ModelParams(j=1.0, jz=1.1, d=0.0, b=1.0, theta=0.0),
        [GridSpec("theta", 0.0, math.pi), GridSpec("d", 0.0, 1.0)]),
    4: ("berry", ModelParams(j=1.0, jz=1.1, d=0.0, b=0.02, theta=math.pi / 4),
        [GridSpec("b", 0.02, 1.0), GridSpec("d", 0.0, 1.0)]),
    5: ("energies", ModelParams(j=1.0, jz=1.1, d=0.0, b=0.02, theta=math.pi / 4),
        [GridSpec("d", 0.3, 0.6)]),
}


def figure_table(k, threads=1):
    kind, base, grids = FIGURES[k]
    if kind == "energies":
        table = sweep_eigenvalues(base, grids[0], threads=threads)
    else:
        table = sweep_berry(base, grids[0], grids[1], threads=threads)
    table.meta["figure"] = k
    return table


def berry_curve(table, level, outer_index=None):
    """(x, phase) arrays of one tracked level along the inner axis, with
    flagged points dropped."""
    inner = table.meta["grids"][-1]["axis"]
    rows = [r for r in table.rows if outer_index is None or r["i"] == outer_index]
    pts = [(r[inner], r[f"beta{level}"]) for r in rows if r[f"beta{level}"] is not None]
    xs, ph = zip(*pts) if pts else ((), ())
    return np.array(xs), np.array(ph)

