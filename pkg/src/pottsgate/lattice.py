"""Periodic K x L grid: vertices, edges and neighbor lookup."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np


class InputError(ValueError):
    """Invalid user-supplied input (bad vertex, spin, size, ...)."""


class DomainError(ValueError):
    """Operation undefined for the given arguments (e.g. an empty cluster set)."""


class Vertex(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class TorusLattice:
    """K rows by L columns with periodic boundary in both directions.

    The standing assumption is 3 <= K < L. ``degenerate=True`` admits K = 2
    or K = L for exploration; theorem checks refuse such lattices.
    """

    K: int
    L: int
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        K, L = self.K, self.L
        if not isinstance(K, (int, np.integer)) or not isinstance(L, (int, np.integer)):
            raise InputError("K and L must be integers")
        if K < 2 or L < 3:
            raise InputError(f"need K >= 2 and L >= 3, got K={K}, L={L}")
        if K > L:
            raise InputError(f"need K <= L (rows are the short side), got K={K}, L={L}")
        if K == 2 or K == L:
            if not self.degenerate:
                raise InputError(
                    f"K={K}, L={L} violates 3 <= K < L; pass degenerate=True to allow it"
                )
            warnings.warn(
                f"degenerate lattice K={K}, L={L}: theorem checks do not apply",
                stacklevel=2,
            )

    @property
    def n_vertices(self) -> int:
        return self.K * self.L

    @property
    def n_edges(self) -> int:
        return 2 * self.K * self.L

    def index(self, v: Vertex | tuple[int, int] | int) -> int:
        """Linear index i*L + j of a vertex (ints pass through after a range check)."""
        if isinstance(v, (int, np.integer)):
            if not 0 <= v < self.n_vertices:
                raise InputError(f"vertex index {v} out of range")
            return int(v)
        i, j = v
        if not (0 <= i < self.K and 0 <= j < self.L):
            raise InputError(f"vertex {(i, j)} out of range for {self.K}x{self.L}")
        return int(i) * self.L + int(j)

    def vertex(self, idx: int) -> Vertex:
        if not 0 <= idx < self.n_vertices:
            raise InputError(f"vertex index {idx} out of range")
        return Vertex(*divmod(int(idx), self.L))

    def neighbors(self, v: Vertex | tuple[int, int] | int) -> list[Vertex]:
        """The four neighbors in the order up, down, left, right."""
        i, j = self.vertex(self.index(v))
        K, L = self.K, self.L
        return [
            Vertex((i - 1) % K, j),
            Vertex((i + 1) % K, j),
            Vertex(i, (j - 1) % L),
            Vertex(i, (j + 1) % L),
        ]

    def edges(self) -> list[tuple[Vertex, Vertex]]:
        """Each undirected edge once: per vertex in index order, right then down."""
        out = []
        for idx in range(self.n_vertices):
            i, j = divmod(idx, self.L)
            out.append((Vertex(i, j), Vertex(i, (j + 1) % self.L)))
            out.append((Vertex(i, j), Vertex((i + 1) % self.K, j)))
        return out

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """(|V|, 4) int array of neighbor linear indices, same order as ``neighbors``."""
        idx = np.arange(self.n_vertices)
        i, j = np.divmod(idx, self.L)
        K, L = self.K, self.L
        table = np.stack(
            [((i - 1) % K) * L + j, ((i + 1) % K) * L + j, i * L + (j - 1) % L, i * L + (j + 1) % L],
            axis=1,
        )
        table.setflags(write=False)
        return table

    @cached_property
    def edge_array(self) -> np.ndarray:
        """(2|V|, 2) int array matching ``edges``."""
        arr = np.array(
            [(self.index(a), self.index(b)) for a, b in self.edges()], dtype=np.int64
        )
        arr.setflags(write=False)
        return arr

    def require_standard(self) -> None:
        """Raise if the lattice is outside 3 <= K < L."""
        if not (3 <= self.K < self.L):
            raise InputError(
                f"theorem checks need 3 <= K < L, got K={self.K}, L={self.L}"
            )
