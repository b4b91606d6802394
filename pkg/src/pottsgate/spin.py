"""Potts configurations, the Hamiltonian, single-spin moves and Gibbs weights."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .lattice import InputError, TorusLattice, Vertex


@dataclass(frozen=True)
class ModelParams:
    """Spin alphabet size and inverse temperature; the coupling is fixed to 1."""

    q: int
    beta: float = 0.0

    def __post_init__(self) -> None:
        if int(self.q) != self.q or self.q < 2:
            raise InputError(f"q must be an integer >= 2, got {self.q}")
        if not self.beta >= 0:
            raise InputError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class Configuration:
    """Spin values 1..q indexed by vertex linear index, on a K x L grid."""

    spins: tuple[int, ...]
    K: int
    L: int

    def __post_init__(self) -> None:
        if len(self.spins) != self.K * self.L:
            raise InputError(f"expected {self.K * self.L} spins, got {len(self.spins)}")
        if any(s < 1 for s in self.spins):
            raise InputError("spins must be >= 1")

    @classmethod
    def constant(cls, lat: TorusLattice, s: int) -> "Configuration":
        return cls((int(s),) * lat.n_vertices, lat.K, lat.L)

    @classmethod
    def from_array(cls, spins: Iterable[int], lat: TorusLattice) -> "Configuration":
        return cls(tuple(int(x) for x in np.asarray(spins).ravel()), lat.K, lat.L)

    @classmethod
    def from_text(cls, text: str) -> "Configuration":
        """Parse K lines of L digits (row-major)."""
        rows = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        if not rows or len({len(r) for r in rows}) != 1 or not all(r.isdigit() for r in rows):
            raise InputError("configuration text must be K equal-length lines of digits")
        return cls(tuple(int(c) for r in rows for c in r), len(rows), len(rows[0]))

    def to_text(self) -> str:
        if max(self.spins) > 9:
            raise InputError("text encoding supports spins 1..9 only")
        return "\n".join(
            "".join(str(x) for x in self.spins[i * self.L:(i + 1) * self.L])
            for i in range(self.K)
        )

    def grid(self) -> np.ndarray:
        return np.array(self.spins, dtype=np.int64).reshape(self.K, self.L)

    def __getitem__(self, v: Vertex | tuple[int, int] | int) -> int:
        if isinstance(v, (int, np.integer)):
            return self.spins[v]
        return self.spins[v[0] * self.L + v[1]]

    def pack(self, q: int) -> int:
        """Canonical integer code: ceil(log2 q) bits per site, site 0 least significant."""
        bits = max(1, math.ceil(math.log2(q)))
        code = 0
        for v, x in enumerate(self.spins):
            if x > q:
                raise InputError(f"spin {x} exceeds q={q}")
            code |= (x - 1) << (bits * v)
        return code

    @classmethod
    def unpack(cls, code: int, q: int, lat: TorusLattice) -> "Configuration":
        bits = max(1, math.ceil(math.log2(q)))
        mask = (1 << bits) - 1
        return cls(
            tuple(((code >> (bits * v)) & mask) + 1 for v in range(lat.n_vertices)),
            lat.K,
            lat.L,
        )


def _check(sigma: Configuration, lat: TorusLattice) -> None:
    if (sigma.K, sigma.L) != (lat.K, lat.L):
        raise InputError(
            f"configuration is {sigma.K}x{sigma.L}, lattice is {lat.K}x{lat.L}"
        )


def hamiltonian(sigma: Configuration, lat: TorusLattice) -> int:
    """Minus the number of edges whose endpoints carry equal spins."""
    _check(sigma, lat)
    s = np.asarray(sigma.spins)
    e = lat.edge_array
    return -int(np.count_nonzero(s[e[:, 0]] == s[e[:, 1]]))


def disagreeing_edges(sigma: Configuration, lat: TorusLattice) -> int:
    """Number of edges with unequal endpoint spins, i.e. H(sigma) - H(constant)."""
    return hamiltonian(sigma, lat) + lat.n_edges


def energy_delta(sigma: Configuration, lat: TorusLattice, v, s: int) -> int:
    """H(flip(sigma, v, s)) - H(sigma) computed from the four neighbors of v."""
    _check(sigma, lat)
    idx = lat.index(v)
    if int(s) != s or s < 1:
        raise InputError(f"invalid spin {s}")
    own = sigma.spins[idx]
    if s == own:
        return 0
    return sum(
        int(own == sigma.spins[w]) - int(sigma.spins[w] == s) for w in lat.neighbor_table[idx]
    )


def flip(sigma: Configuration, lat: TorusLattice, v, s: int) -> Configuration:
    """Copy of sigma with the spin at v set to s."""
    _check(sigma, lat)
    idx = lat.index(v)
    if int(s) != s or s < 1:
        raise InputError(f"invalid spin {s}")
    spins = list(sigma.spins)
    spins[idx] = int(s)
    return Configuration(tuple(spins), sigma.K, sigma.L)


def communicates(a: Configuration, b: Configuration) -> bool:
    """True iff the two configurations differ at exactly one vertex."""
    if (a.K, a.L) != (b.K, b.L):
        raise InputError("configurations have different sizes")
    return sum(x != y for x, y in zip(a.spins, b.spins)) == 1


def stable_set(params: ModelParams | int, lat: TorusLattice) -> list[Configuration]:
    """The q constant configurations, which are the global minima of H."""
    q = params.q if isinstance(params, ModelParams) else int(params)
    return [Configuration.constant(lat, s) for s in range(1, q + 1)]


def n_s(sigma: Configuration, s: int) -> int:
    """Number of vertices carrying spin s."""
    return sum(1 for x in sigma.spins if x == s)


def log_gibbs_weight(sigma: Configuration, lat: TorusLattice, beta: float) -> float:
    if beta < 0:
        raise InputError("beta must be >= 0")
    return -beta * hamiltonian(sigma, lat)


def gibbs_weight(sigma: Configuration, lat: TorusLattice, beta: float) -> float:
    """Unnormalized weight exp(-beta H(sigma)); use ``log_gibbs_weight`` when it may overflow."""
    return math.exp(log_gibbs_weight(sigma, lat, beta))


def config_from_grid(rows: Sequence[Sequence[int]]) -> Configuration:
    """Build a configuration from a nested row list."""
    K = len(rows)
    L = len(rows[0])
    return Configuration(tuple(int(x) for r in rows for x in r), K, L)
