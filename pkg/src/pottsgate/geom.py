"""Cluster geometry and the named configuration families.

Rectangles are described as width x height: width counts columns, height
counts rows. A family label refers to an ordered spin pair (r, s): "bar"
families (Rbar, Bbar, ...) describe the s-cells inside an r-background,
"tilde" families describe the r-cells inside an s-background.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator

import numpy as np

from .lattice import DomainError, InputError, TorusLattice
from .spin import Configuration, hamiltonian


@dataclass(frozen=True)
class RectDescriptor:
    wraps_horizontal: bool
    wraps_vertical: bool
    width: int
    height: int
    anchor: tuple[int, int]  # top-left (row, col); row 0 / col 0 on a wrapping axis

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height


@dataclass(frozen=True)
class ClusterDecomposition:
    spin: int
    K: int
    L: int
    clusters: tuple[frozenset[int], ...]
    interacting: tuple[tuple[bool, ...], ...]

    @property
    def cells(self) -> frozenset[int]:
        return frozenset().union(*self.clusters) if self.clusters else frozenset()

    def pairwise_interacting(self) -> bool:
        """True for a single cluster or when every pair of clusters interacts."""
        n = len(self.clusters)
        return n >= 1 and all(self.interacting[i][j] for i in range(n) for j in range(i + 1, n))


def _neighbor_table(K: int, L: int) -> np.ndarray:
    idx = np.arange(K * L)
    i, j = np.divmod(idx, L)
    return np.stack(
        [((i - 1) % K) * L + j, ((i + 1) % K) * L + j, i * L + (j - 1) % L, i * L + (j + 1) % L], axis=1
    )


def s_clusters(sigma: Configuration, s: int) -> ClusterDecomposition:
    """4-connected components of the s-sites, with the interaction relation.

    Two clusters interact when some site outside both has one neighbor in each.
    """
    if int(s) != s or s < 1:
        raise InputError(f"invalid spin {s}")
    K, L = sigma.K, sigma.L
    nbr = _neighbor_table(K, L)
    spins = np.asarray(sigma.spins)
    label = np.full(K * L, -1)
    clusters: list[frozenset[int]] = []
    for start in np.flatnonzero(spins == s):
        if label[start] >= 0:
            continue
        comp = [int(start)]
        label[start] = len(clusters)
        k = 0
        while k < len(comp):
            for w in nbr[comp[k]]:
                if spins[w] == s and label[w] < 0:
                    label[w] = len(clusters)
                    comp.append(int(w))
            k += 1
        clusters.append(frozenset(comp))
    n = len(clusters)
    inter = [[False] * n for _ in range(n)]
    for v in np.flatnonzero(spins != s):
        labs = {int(label[w]) for w in nbr[v] if label[w] >= 0}
        for a, b in combinations(sorted(labs), 2):
            inter[a][b] = inter[b][a] = True
    return ClusterDecomposition(int(s), K, L, tuple(clusters), tuple(tuple(r) for r in inter))


def _arc(occupied: np.ndarray) -> tuple[int, int, bool]:
    """(start, length, wraps) of the smallest cyclic arc covering the occupied positions."""
    n = len(occupied)
    if occupied.all():
        return 0, n, True
    best_len, best_start = -1, 0
    for start in range(n):
        if occupied[start] or not occupied[start - 1]:
            continue
        run = 0
        while not occupied[(start + run) % n]:
            run += 1
        if run > best_len:
            best_len, best_start = run, start
    return (best_start + best_len) % n, n - best_len, False


def _rect_of_mask(mask: np.ndarray) -> RectDescriptor:
    r0, h, wv = _arc(mask.any(axis=1))
    c0, w, wh = _arc(mask.any(axis=0))
    return RectDescriptor(wh, wv, w, h, (r0, c0))


def bounding_rect(decomp: ClusterDecomposition) -> RectDescriptor:
    """Smallest torus rectangle containing every cell of the decomposition."""
    cells = decomp.cells
    if not cells:
        raise DomainError("bounding rectangle of an empty cluster set")
    mask = np.zeros(decomp.K * decomp.L, bool)
    mask[list(cells)] = True
    return _rect_of_mask(mask.reshape(decomp.K, decomp.L))


# -- shape predicates on boolean K x L masks --------------------------------------------

def rect_shape(mask: np.ndarray) -> tuple[int, int] | None:
    """(width, height) if the marked cells form exactly one torus rectangle."""
    n = int(mask.sum())
    if n == 0:
        return None
    rd = _rect_of_mask(mask)
    return (rd.width, rd.height) if n == rd.width * rd.height else None


def _cyclic_run(rows: list[int], n: int) -> int | None:
    """Start of the cyclic run formed by ``rows`` (sorted), or None when not contiguous."""
    if not rows or len(rows) >= n:
        return None
    occ = np.zeros(n, bool)
    occ[rows] = True
    start, length, _ = _arc(occ)
    return start if length == len(rows) else None


def bar_shapes(mask: np.ndarray) -> set[tuple[int, int, int]]:
    """All (a, b, h) such that the cells are an a x b rectangle plus an h-cell bar.

    The bar occupies h consecutive rows of the rectangle's rows, in a column
    adjacent to a vertical side, with 1 <= h <= b - 1.
    """
    K, L = mask.shape
    cols = np.flatnonzero(mask.any(axis=0))
    if len(cols) < 2:
        return set()
    out: set[tuple[int, int, int]] = set()
    for c in cols:
        rest = mask.copy()
        rest[:, c] = False
        shape = rect_shape(rest)
        if shape is None:
            continue
        a, b = shape
        rd = _rect_of_mask(rest)
        if rd.wraps_horizontal or a + 1 > L:
            continue
        c0 = rd.anchor[1]
        if c not in ((c0 - 1) % L, (c0 + a) % L):
            continue
        bar_rows = np.flatnonzero(mask[:, c]).tolist()
        h = len(bar_rows)
        if not 1 <= h <= b - 1:
            continue
        r0 = rd.anchor[0]
        rect_rows = [(r0 + t) % K for t in range(b)]
        if b == K:
            if _cyclic_run(bar_rows, K) is None:
                continue
        else:
            pos = sorted(rect_rows.index(x) for x in bar_rows if x in rect_rows)
            if len(pos) != h or pos[-1] - pos[0] != h - 1:
                continue
        out.add((a, b, h))
    return out


# -- family labels ---------------------------------------------------------------------

def _rect_label(tilde: bool, a: int, b: int) -> str:
    return f"{'Rtilde' if tilde else 'Rbar'}({a},{b})"


def _bar_label(tilde: bool, a: int, b: int, h: int) -> str:
    return f"{'Btilde' if tilde else 'Bbar'}({a},{b},{h})"


def _two_spin(sigma: Configuration, r: int, s: int) -> bool:
    return all(x == r or x == s for x in sigma.spins)


def _mask(sigma: Configuration, spin: int) -> np.ndarray:
    return sigma.grid() == spin


def _base_labels(sigma: Configuration, r: int, s: int) -> set[str]:
    labels: set[str] = set()
    for tilde, spin in ((False, s), (True, r)):
        m = _mask(sigma, spin)
        if m.all():
            continue
        shape = rect_shape(m)
        if shape:
            labels.add(_rect_label(tilde, *shape))
        for a, b, h in bar_shapes(m):
            labels.add(_bar_label(tilde, a, b, h))
    return labels


def _gate_labels(base: set[str], K: int, L: int) -> set[str]:
    out = set()
    for tilde, suf in ((False, "bar"), (True, "tilde")):
        R = lambda a, b: _rect_label(tilde, a, b) in base  # noqa: E731
        B = lambda a, b, h: _bar_label(tilde, a, b, h) in base  # noqa: E731
        if B(1, K, K - 1):
            out.add(f"P_{suf}")
        if R(2, K - 1) or B(1, K, K - 2):
            out.add(f"Q_{suf}")
        for i in range(1, K - 2):
            if B(1, K, i) or any(B(1, K - 1, h) for h in range(i + 1, K - 1)):
                out.add(f"H_{suf}({i})")
    for j in range(2, L - 2):
        for h in range(1, K):
            if _bar_label(False, j, K, h) in base:
                out.add(f"W({j},{h})")
    return out


def _cycle_shape_targets(K: int) -> list[tuple[str, tuple[int, int], int]]:
    """(family stem, bounding box, energy above ground) for the energy+shape families."""
    out = [("K", (2, K - 1), 2 * K + 2), ("D(1)", (2, K - 2), 2 * K), ("E(1)", (1, K - 1), 2 * K)]
    for i in range(2, K - 1):
        out.append((f"D({i})", (2, K - i - 1), 2 * K - 2 * i + 2))
        out.append((f"E({i})", (1, K - i), 2 * K - 2 * i + 2))
    return out


def _stem_label(stem: str, tilde: bool) -> str:
    suf = "tilde" if tilde else "bar"
    if "(" in stem:
        name, arg = stem.split("(")
        return f"{name}_{suf}({arg}"
    return f"{stem}_{suf}"


def classify_detailed(sigma: Configuration, r: int, s: int) -> tuple[set[str], set[str]]:
    """(labels, shape_only) where shape_only lists energy+shape families whose
    geometric condition holds but whose energy condition does not."""
    if r == s:
        raise InputError("r and s must differ")
    if not _two_spin(sigma, r, s):
        return set(), set()
    K, L = sigma.K, sigma.L
    base = _base_labels(sigma, r, s)
    gates = _gate_labels(base, K, L)
    labels = base | gates
    shape_only: set[str] = set()
    excess = hamiltonian(sigma, _lat(K, L)) + 2 * K * L
    for tilde, spin in ((False, s), (True, r)):
        m = _mask(sigma, spin)
        if not m.any() or m.all():
            continue
        dec = s_clusters(sigma, spin)
        if not dec.pairwise_interacting():
            continue
        rd = bounding_rect(dec)
        if rd.wraps_horizontal or rd.wraps_vertical:
            continue
        for stem, box, energy in _cycle_shape_targets(K):
            if rd.size == box:
                lab = _stem_label(stem, tilde)
                (labels if excess == energy else shape_only).add(lab)
    suf = ("bar", "tilde")
    for tilde in (False, True):
        t = suf[tilde]
        if _rect_label(tilde, 1, K) in labels:
            labels.add(f"E_{t}(1)")
        if labels & {f"Q_{t}", f"P_{t}"} or any(x.startswith(f"H_{t}(") for x in labels):
            labels.add(f"K_{t}")
    return labels, shape_only


_LAT_CACHE: dict[tuple[int, int], TorusLattice] = {}


def _lat(K: int, L: int) -> TorusLattice:
    if (K, L) not in _LAT_CACHE:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _LAT_CACHE[(K, L)] = TorusLattice(K, L, degenerate=True)
    return _LAT_CACHE[(K, L)]


def classify(sigma: Configuration, r: int, s: int) -> set[str]:
    """Every family label whose defining condition sigma satisfies for the pair (r, s)."""
    return classify_detailed(sigma, r, s)[0]


# -- generative enumeration ---------------------------------------------------------------

def _rect_cells(K: int, L: int, r0: int, c0: int, a: int, b: int) -> list[tuple[int, int]]:
    return [((r0 + i) % K, (c0 + j) % L) for i in range(b) for j in range(a)]


def _masks_to_configs(masks: Iterable[frozenset], K: int, L: int, inside: int, outside: int) -> list[Configuration]:
    out = []
    for cells in sorted(set(masks), key=lambda c: sorted(c)):
        spins = [outside] * (K * L)
        for i, j in cells:
            spins[i * L + j] = inside
        out.append(Configuration(tuple(spins), K, L))
    return out


def rect_members(lat: TorusLattice, a: int, b: int, r: int, s: int, tilde: bool = False) -> list[Configuration]:
    """All placements of an a x b rectangle (s in r, or r in s when tilde)."""
    K, L = lat.K, lat.L
    if not (1 <= a <= L and 1 <= b <= K) or (a == L and b == K):
        return []
    masks = {frozenset(_rect_cells(K, L, r0, c0, a, b)) for r0 in range(K) for c0 in range(L)}
    inside, outside = (r, s) if tilde else (s, r)
    return _masks_to_configs(masks, K, L, inside, outside)


def bar_members(lat: TorusLattice, a: int, b: int, h: int, r: int, s: int, tilde: bool = False) -> list[Configuration]:
    """All placements of an a x b rectangle with an h-cell bar on a vertical side."""
    K, L = lat.K, lat.L
    if not (1 <= a and a + 1 <= L and 1 <= b <= K and 1 <= h <= b - 1):
        return []
    masks = set()
    for r0 in range(K):
        for c0 in range(L):
            rect = _rect_cells(K, L, r0, c0, a, b)
            for bc in ((c0 - 1) % L, (c0 + a) % L):
                offsets = range(K) if b == K else range(b - h + 1)
                for t in offsets:
                    bar = [((r0 + t + u) % K, bc) for u in range(h)]
                    masks.add(frozenset(rect + bar))
    inside, outside = (r, s) if tilde else (s, r)
    return _masks_to_configs(masks, K, L, inside, outside)


def gate_family_members(lat: TorusLattice, label: str, r: int, s: int) -> list[Configuration]:
    """Members of P_bar/P_tilde, Q_*, H_*(i) and W(j,h), built from rectangles and bars."""
    K, L = lat.K, lat.L
    name, _, arg = label.partition("(")
    params = tuple(int(x) for x in arg.rstrip(")").split(",")) if arg else ()
    tilde = name.endswith("tilde")
    parts: list[Configuration] = []
    if name in ("P_bar", "P_tilde"):
        parts = bar_members(lat, 1, K, K - 1, r, s, tilde)
    elif name in ("Q_bar", "Q_tilde"):
        parts = rect_members(lat, 2, K - 1, r, s, tilde) + bar_members(lat, 1, K, K - 2, r, s, tilde)
    elif name in ("H_bar", "H_tilde"):
        (i,) = params
        if not 1 <= i <= K - 3:
            return []
        parts = bar_members(lat, 1, K, i, r, s, tilde)
        for h in range(i + 1, K - 1):
            parts += bar_members(lat, 1, K - 1, h, r, s, tilde)
    elif name == "W":
        j, h = params
        if not (2 <= j <= L - 3 and 1 <= h <= K - 1):
            return []
        parts = bar_members(lat, j, K, h, r, s)
    else:
        raise InputError(f"no generator for family {label!r}")
    return sorted(set(parts), key=lambda c: c.spins)


def gate_family_labels(lat: TorusLattice) -> list[str]:
    """Labels of the gate families that are defined (possibly empty) at this size."""
    K, L = lat.K, lat.L
    out = ["P_bar", "P_tilde", "Q_bar", "Q_tilde"]
    out += [f"H_bar({i})" for i in range(1, K - 2)] + [f"H_tilde({i})" for i in range(1, K - 2)]
    out += [f"W({j},{h})" for j in range(2, L - 2) for h in range(1, K)]
    return out


def cycle_family_labels(lat: TorusLattice) -> list[str]:
    """K, D(i), E(i) labels (bar and tilde) defined at this size."""
    K = lat.K
    out = []
    for t in ("bar", "tilde"):
        out.append(f"K_{t}")
        out += [f"D_{t}({i})" for i in range(1, K - 1)]
        out += [f"E_{t}({i})" for i in range(1, K - 1)]
    return out


# -- perimeter facts ------------------------------------------------------------------------

def k_star(K: int) -> int:
    """Largest area whose minimal polyomino perimeter does not exceed 2K + 2."""
    if K < 2:
        raise InputError("K must be >= 2")
    return (K * K + 2 * K + 1) // 4 if K % 2 else (K * K + 2 * K) // 4


def minimal_polyomino_perimeter(n: int) -> int:
    """Minimal perimeter over polyominoes of area n: 2 * ceil(2 sqrt(n))."""
    if n < 1:
        raise InputError("n must be >= 1")
    root = math.isqrt(4 * n)
    return 2 * (root if root * root == 4 * n else root + 1)


# -- family state sets on an enumerated landscape ---------------------------------------------

def _cycle_family_energy(label: str, K: int) -> int | None:
    """Energy above ground required by K/D/E labels, None for other labels."""
    name, _, arg = label.partition("(")
    stem = name.split("_")[0]
    if stem == "K":
        return 2 * K + 2
    if stem in ("D", "E"):
        i = int(arg.rstrip(")"))
        return 2 * K if i == 1 else 2 * K - 2 * i + 2
    return None


def two_spin_states(idx, r: int, s: int) -> np.ndarray:
    """States of the landscape that only use spins r and s."""
    d = idx.digits
    return np.flatnonzero(np.all((d == r - 1) | (d == s - 1), axis=1))


def family_states(idx, label: str, r: int, s: int) -> np.ndarray:
    """Sorted state ids of a labeled family for the pair (r, s) on an enumerated landscape."""
    lat = idx.lat
    K = lat.K
    name, _, arg = label.partition("(")
    params = tuple(int(x) for x in arg.rstrip(")").split(",")) if arg else ()
    if name in ("Rbar", "Rtilde"):
        confs = rect_members(lat, *params, r, s, tilde=name == "Rtilde")
    elif name in ("Bbar", "Btilde"):
        confs = bar_members(lat, *params, r, s, tilde=name == "Btilde")
    elif name.split("_")[0] in ("P", "Q", "H", "W"):
        confs = gate_family_members(lat, label, r, s)
    else:
        energy = _cycle_family_energy(label, K)
        if energy is None:
            raise InputError(f"unknown family label {label!r}")
        cand = two_spin_states(idx, r, s)
        cand = cand[idx.energies[cand] == idx.ground_energy + energy]
        keep = [int(x) for x in cand if label in classify(idx.config(int(x)), r, s)]
        return np.array(sorted(keep), dtype=np.int64)
    return np.array(sorted({idx.state_of(c) for c in confs}), dtype=np.int64)
