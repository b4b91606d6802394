"""Explicit single-flip paths between stable states: the column-filling
reference path, the two-column bar paths, concatenation and path statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .geom import classify
from .lattice import InputError, TorusLattice
from .spin import Configuration, communicates, hamiltonian


@dataclass(frozen=True)
class PathRecord:
    """A non-empty sequence of configurations, consecutive ones differing at one site."""

    configs: tuple[Configuration, ...]
    lat: TorusLattice
    heights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.configs:
            raise InputError("a path needs at least one configuration")
        for a, b in zip(self.configs, self.configs[1:]):
            if not communicates(a, b):
                raise InputError("consecutive configurations must differ at exactly one site")
        h = np.array([hamiltonian(c, self.lat) for c in self.configs], dtype=np.int64)
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)

    def __len__(self) -> int:
        return len(self.configs)

    def __getitem__(self, i: int) -> Configuration:
        return self.configs[i]

    @property
    def height(self) -> int:
        return int(self.heights.max())

    @property
    def trace(self) -> list[int]:
        """Positions of the configurations attaining the maximal height."""
        return [int(i) for i in np.flatnonzero(self.heights == self.heights.max())]

    def to_json(self, q: int) -> str:
        return json.dumps([c.pack(q) for c in self.configs])


def _flip_sequence(start: Configuration, lat: TorusLattice, cells: Iterable[tuple[int, int]], spin: int) -> list[Configuration]:
    out = [start]
    spins = list(start.spins)
    for i, j in cells:
        v = lat.index((i % lat.K, j % lat.L))
        if spins[v] == spin:
            raise InputError(f"cell {(i, j)} already carries spin {spin}")
        spins[v] = spin
        out.append(Configuration(tuple(spins), lat.K, lat.L))
    return out


def reference_cells(lat: TorusLattice, start_col: int = 0) -> list[tuple[int, int]]:
    """Flip order of the reference path: column by column, each top to bottom from row 0."""
    return [(i, (start_col + c) % lat.L) for c in range(lat.L) for i in range(lat.K)]


def reference_path(lat: TorusLattice, r: int, s: int, start_col: int = 0) -> PathRecord:
    """Path from constant r to constant s filling the torus column by column."""
    if r == s or r < 1 or s < 1:
        raise InputError("r and s must be distinct spins >= 1")
    if not 0 <= start_col < lat.L:
        raise InputError(f"start_col must be in 0..{lat.L - 1}")
    start = Configuration.constant(lat, r)
    return PathRecord(tuple(_flip_sequence(start, lat, reference_cells(lat, start_col), s)), lat)


def reference_position(K: int, column: int, filled: int) -> int:
    """Index on the reference path of the state with ``column - 1`` full columns
    and ``filled`` cells of the next one (columns numbered from 1)."""
    if column < 1 or not 0 <= filled <= K:
        raise InputError("column must be >= 1 and filled in 0..K")
    return (column - 1) * K + filled


def _bar_geometry(target: Configuration, inside: int, outside: int) -> tuple[int, list[int], int, list[int]]:
    """Locate the column of the rectangle and the bar for a one-column rect-plus-bar shape.

    Returns (rect column, rect rows in cyclic order, bar column, bar rows in cyclic order).
    """
    K, L = target.K, target.L
    grid = target.grid()
    mask = grid == inside
    cols = [j for j in range(L) if mask[:, j].any()]
    if len(cols) != 2:
        raise InputError("target is not a one-column rectangle with an adjacent bar")
    counts = {j: int(mask[:, j].sum()) for j in cols}
    c_rect, c_bar = sorted(cols, key=lambda j: -counts[j])
    if counts[c_rect] == counts[c_bar] or (c_bar - c_rect) % L not in (1, L - 1):
        raise InputError("target is not a one-column rectangle with an adjacent bar")

    def cyclic_rows(col: int) -> list[int]:
        occupied = [i for i in range(K) if mask[i, col]]
        if len(occupied) == K:
            return list(range(K))
        first = next(i for i in occupied if not mask[(i - 1) % K, col])
        run = [(first + k) % K for k in range(len(occupied))]
        if sorted(run) != occupied:
            raise InputError("rectangle or bar column is not contiguous")
        return run

    return c_rect, cyclic_rows(c_rect), c_bar, cyclic_rows(c_bar)


def bar_path(lat: TorusLattice, r: int, s: int, target: Configuration) -> PathRecord:
    """Path from a constant configuration to ``target`` staying strictly below
    2K+2+H(constant) before the endpoint.

    Admissible targets are one-column rect-plus-bar shapes: a full column with
    a one-cell bar, or a (K-1)-cell column with an h-cell bar, 2 <= h <= K-2.
    For the r-background shapes the path starts at constant r; for the
    s-background twins it starts at constant s.
    """
    K = lat.K
    labels = classify(target, r, s)
    admissible = {f"Bbar({1},{K},{1})"} | {f"Bbar({1},{K - 1},{h})" for h in range(2, K - 1)}
    if labels & admissible:
        source, spin = r, s
    elif labels & {x.replace("Bbar", "Btilde") for x in admissible}:
        source, spin = s, r
    else:
        raise InputError(f"target is not an admissible bar shape, labels {sorted(labels)}")
    c_rect, rect_rows, c_bar, bar_rows = _bar_geometry(target, spin, source)
    start = Configuration.constant(lat, source)
    if len(rect_rows) == K:
        # full column first (a prefix of the reference path when the bar follows it), then the bar cell
        cells = [(i, c_rect) for i in range(K)] + [(bar_rows[0], c_bar)]
    else:
        # two-column zig-zag over the bar rows, then extend the rectangle column
        cells = []
        for i in bar_rows:
            cells += [(i, c_rect), (i, c_bar)]
        k = rect_rows.index(bar_rows[0])
        below = rect_rows[k + len(bar_rows):]
        above = rect_rows[:k][::-1]
        cells += [(i, c_rect) for i in below] + [(i, c_rect) for i in above]
    path = PathRecord(tuple(_flip_sequence(start, lat, cells, spin)), lat)
    if path.configs[-1] != target:
        raise InputError("internal: bar construction did not reach the target")
    return path


def concatenate(*paths: PathRecord) -> PathRecord:
    if not paths:
        raise InputError("nothing to concatenate")
    configs = list(paths[0].configs)
    for p in paths[1:]:
        if p.lat != paths[0].lat:
            raise InputError("paths live on different lattices")
        if p.configs[0] != configs[-1]:
            raise InputError("endpoint mismatch between consecutive paths")
        configs.extend(p.configs[1:])
    return PathRecord(tuple(configs), paths[0].lat)


@dataclass(frozen=True)
class PathStats:
    height: int
    trace: list[int]
    path: PathRecord

    def is_optimal_for(self, idx, r: int, s: int) -> bool:
        """True iff the path joins constants r and s at their communication height."""
        a, b = self.path.configs[0], self.path.configs[-1]
        lat = self.path.lat
        if a != Configuration.constant(lat, r) or b != Configuration.constant(lat, s):
            return False
        return self.height == idx.comm_height(idx.stable(r), idx.stable(s))

    def avoids(self, configs: Iterable[Configuration]) -> bool:
        forbidden = set(configs)
        return not any(c in forbidden for c in self.path.configs)

    def as_dict(self) -> dict:
        return {"height": self.height, "trace": self.trace, "length": len(self.path)}


def path_stats(p: PathRecord) -> PathStats:
    return PathStats(p.height, p.trace, p)


def states_of(idx, p: PathRecord) -> list[int]:
    """Landscape state ids along a path."""
    return [idx.state_of(c) for c in p.configs]


def positions_in(idx, p: PathRecord, states: Sequence[int] | np.ndarray) -> list[int]:
    """Positions along the path whose state lies in ``states``."""
    ids = np.array(states_of(idx, p), dtype=np.int64)
    return [int(i) for i in np.flatnonzero(np.isin(ids, np.asarray(states, dtype=np.int64)))]
