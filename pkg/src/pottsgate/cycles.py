"""Cycles, principal boundaries and tubes of typical paths.

Every computation here lives inside a sub-level set {H <= cap} of a
``LandscapeIndex``. States are global integer ids; sets are sorted int64 arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .lattice import DomainError, InputError
from .landscape import LandscapeIndex, LevelGraph, _as_array, valley

TRIVIAL = "trivial"
NONTRIVIAL = "nontrivial"
EXTENDED = "extended"


@dataclass
class CycleNode:
    members: np.ndarray
    kind: str
    level: int
    boundary: np.ndarray
    principal: np.ndarray

    @property
    def nonprincipal(self) -> np.ndarray:
        return np.setdiff1d(self.boundary, self.principal)

    def __len__(self) -> int:
        return len(self.members)

    def contains(self, state: int) -> bool:
        i = np.searchsorted(self.members, state)
        return i < len(self.members) and self.members[i] == state


def _boundary(idx: LandscapeIndex, members: np.ndarray) -> np.ndarray:
    nb = np.unique(idx.neighbors(members).ravel())
    return np.setdiff1d(nb, members, assume_unique=True)


def principal_set(idx: LandscapeIndex, members: np.ndarray, kind: str, boundary: np.ndarray | None = None) -> np.ndarray:
    """Principal boundary by cycle kind: lowest boundary states, or strictly lower boundary states."""
    members = _as_array(members)
    bd = _boundary(idx, members) if boundary is None else boundary
    if len(bd) == 0:
        return bd
    e = idx.energies[bd]
    if kind == NONTRIVIAL:
        return bd[e == e.min()]
    return bd[e < int(idx.energies[members].max())]


def make_cycle(idx: LandscapeIndex, members, kind: str) -> CycleNode:
    members = _as_array(members)
    if kind not in (TRIVIAL, NONTRIVIAL, EXTENDED):
        raise InputError(f"unknown cycle kind {kind!r}")
    bd = _boundary(idx, members)
    return CycleNode(members, kind, int(idx.energies[members].max()), bd, principal_set(idx, members, kind, bd))


def principal_boundary(idx: LandscapeIndex, C: CycleNode) -> np.ndarray:
    return principal_set(idx, C.members, C.kind, C.boundary)


def is_cycle(idx: LandscapeIndex, members) -> bool:
    """Singleton, or connected with max energy inside below the minimum on the boundary."""
    members = _as_array(members)
    if len(members) == 1:
        return True
    g = LevelGraph(idx, members)
    if connected_components(g.adj, directed=False)[0] != 1:
        return False
    bd = _boundary(idx, members)
    return len(bd) == 0 or int(idx.energies[members].max()) < int(idx.energies[bd].min())


# -- communication heights to a target ---------------------------------------------------

@dataclass
class PhiMap:
    """Phi(x, A) for every x in ``nodes``; values above ``cap`` are stored as cap + 1."""

    nodes: np.ndarray
    values: np.ndarray
    cap: int | None

    def __getitem__(self, state: int) -> int:
        i = np.searchsorted(self.nodes, state)
        if i >= len(self.nodes) or self.nodes[i] != state:
            raise KeyError(f"state {state} lies above the cap")
        v = int(self.values[i])
        if self.cap is not None and v > self.cap:
            raise KeyError(f"Phi of state {state} exceeds the cap")
        return v

    def lookup(self, states) -> np.ndarray:
        states = np.asarray(states, dtype=np.int64)
        pos = np.minimum(np.searchsorted(self.nodes, states), len(self.nodes) - 1)
        ok = self.nodes[pos] == states
        big = np.iinfo(np.int64).max
        return np.where(ok, self.values[pos], big)


def phi_to_target(idx: LandscapeIndex, A, cap: int | None = None) -> PhiMap:
    """Minimax relaxation: value(x) = max(H(x), min over neighbors of value), fixed at H on A.

    With ``cap`` only {H <= cap} is explored; states whose value exceeds the cap
    are reported as cap + 1.
    """
    A = _as_array(A)
    if len(A) == 0:
        raise InputError("target set is empty")
    top = int(idx.energies.max()) if cap is None else int(cap)
    g = idx.level_graph(top)
    inf = top + 1
    H = g.energies.astype(np.int64)
    val = np.full(len(g), inf, dtype=np.int64)
    la = g.local(A)
    la = la[la >= 0]
    val[la] = H[la]
    in_a = np.zeros(len(g), bool)
    in_a[la] = True
    indptr, indices = g.adj.indptr, g.adj.indices
    has_nb = np.diff(indptr) > 0
    starts = indptr[:-1][has_nb]
    while True:
        nbmin = np.full(len(g), inf, dtype=np.int64)
        if len(indices):
            nbmin[has_nb] = np.minimum.reduceat(val[indices], starts)
        new = np.where(in_a, val, np.maximum(H, np.minimum(val, nbmin)))
        new = np.minimum(new, inf)
        if np.array_equal(new, val):
            break
        val = new
    return PhiMap(g.nodes, val, None if cap is None else top)


def phi_by_sweep(idx: LandscapeIndex, A, cap: int) -> PhiMap:
    """Same map from the level sweep: Phi(x, A) is the first level whose component of x meets A."""
    A = _as_array(A)
    g = idx.level_graph(cap)
    val = np.full(len(g), cap + 1, dtype=np.int64)
    for level in idx.distinct_levels[idx.distinct_levels <= cap]:
        sub, lab = idx._components(int(level))
        la = sub.local(A)
        hit = np.unique(lab[la[la >= 0]])
        if hit.size == 0:
            continue
        states = sub.nodes[np.isin(lab, hit)]
        loc = g.local(states)
        fresh = val[loc] > cap
        val[loc[fresh]] = level
    return PhiMap(g.nodes, val, cap)


# -- initial / relevant cycles ----------------------------------------------------------------

def initial_cycle(idx: LandscapeIndex, sigma: int, A) -> CycleNode:
    """{sigma} plus every state reachable from sigma strictly below Phi(sigma, A)."""
    A = _as_array(A)
    if sigma in set(A.tolist()):
        return make_cycle(idx, [sigma], TRIVIAL)
    phi = idx.comm_height(sigma, A)
    if phi == int(idx.energies[sigma]):
        return make_cycle(idx, [sigma], TRIVIAL)
    return make_cycle(idx, idx.component(sigma, phi, strict=True), NONTRIVIAL)


def path_height_gap(idx: LandscapeIndex, sigma: int, A) -> int:
    """Smallest positive difference between achievable path heights from sigma to A.

    A height e >= Phi(sigma, A) is achievable iff some state of energy e lies in
    the component of sigma within {H <= e}.
    """
    A = _as_array(A)
    phi = idx.comm_height(sigma, A)
    levels = idx.distinct_levels[idx.distinct_levels >= phi]
    min_gap = int(np.diff(idx.distinct_levels).min()) if len(idx.distinct_levels) > 1 else 0
    heights = [phi]
    best = None
    for e in levels[1:]:
        comp = idx.component(sigma, int(e))
        if (idx.energies[comp] == e).any():
            gap = int(e) - heights[-1]
            best = gap if best is None else min(best, gap)
            heights.append(int(e))
            if best == min_gap:
                break
    if best is None:
        raise DomainError("only one achievable path height")
    return best


def relevant_cycle(idx: LandscapeIndex, sigma: int, A) -> np.ndarray:
    """States eta with Phi(sigma, eta) < Phi(sigma, A) + gap / 2."""
    A = _as_array(A)
    phi = idx.comm_height(sigma, A)
    delta = path_height_gap(idx, sigma, A)
    threshold = math.ceil(phi + delta / 2) - 1
    return idx.component(sigma, threshold)


# -- maximal cycle partition --------------------------------------------------------------

def maximal_cycle_partition(idx: LandscapeIndex, S) -> list[CycleNode]:
    """Partition of S into maximal cycles, then equal-energy trivial cycles merged into plateaus.

    Nontrivial cycles are the connected components of strict sub-level sets
    {H < c}. For each state the largest such component inside S is kept;
    states with none become singletons, and adjacent singletons of equal
    energy are merged into extended cycles.
    """
    S = _as_array(S)
    if len(S) == 0:
        raise InputError("cannot partition an empty set")
    top = int(idx.energies[S].max())
    g = idx.level_graph(top)
    loc = g.local(S)
    if (loc < 0).any():
        raise RuntimeError("set escapes its own level graph")
    inS = np.zeros(len(g), bool)
    inS[loc] = True
    owner = np.full(len(g), -1, dtype=np.int64)  # cycle id per node
    cycles: list[tuple[np.ndarray, str]] = []
    levels = idx.distinct_levels[(idx.distinct_levels > idx.energies[S].min()) & (idx.distinct_levels <= top)]
    thresholds = list(levels) + [top + 1]
    for c in reversed(thresholds):
        removed = g.energies >= c
        lab = g.components(removed)
        valid = lab >= 0
        if not valid.any():
            continue
        nlab = int(lab.max()) + 1
        bad = np.zeros(nlab, bool)
        np.logical_or.at(bad, lab[valid], ~inS[valid])
        good_nodes = valid & ~bad[np.where(valid, lab, 0)] & (owner < 0)
        for comp in np.unique(lab[good_nodes]):
            nodes = np.flatnonzero(lab == comp)
            if (owner[nodes] >= 0).any():
                continue
            owner[nodes] = len(cycles)
            cycles.append((g.nodes[nodes], NONTRIVIAL))
    rest = np.flatnonzero(inS & (owner < 0))
    if len(rest):
        sub = g.adj[rest][:, rest].tocoo()
        same = g.energies[rest[sub.row]] == g.energies[rest[sub.col]]
        m = csr_matrix((np.ones(int(same.sum())), (sub.row[same], sub.col[same])), shape=(len(rest), len(rest)))
        _, plab = connected_components(m, directed=False)
        for P in np.unique(plab):
            members = g.nodes[rest[plab == P]]
            cycles.append((members, EXTENDED if len(members) > 1 else TRIVIAL))
    return [make_cycle(idx, m, k) for m, k in sorted(cycles, key=lambda t: int(t[0][0]))]


# -- cycle paths ------------------------------------------------------------------------------

def plateau(idx: LandscapeIndex, state: int, exclude=()) -> np.ndarray:
    """Maximal connected set of states at the energy of ``state``, avoiding ``exclude``."""
    e = int(idx.energies[state])
    g = idx.level_graph(e)
    removed = g.energies < e
    lx = g.local(_as_array(list(exclude))) if len(exclude) else np.zeros(0, np.int64)
    removed[lx[lx >= 0]] = True
    lab = g.components(removed)
    return g.nodes[lab == lab[g.local([state])[0]]]


def _path_cycle(idx: LandscapeIndex, state: int, A: np.ndarray) -> CycleNode:
    """Initial cycle, widened to its plateau outside A when it is trivial."""
    C = initial_cycle(idx, state, A)
    if C.kind != TRIVIAL or state in set(A.tolist()):
        return C
    flat = plateau(idx, state, A)
    return C if len(flat) == 1 else make_cycle(idx, flat, EXTENDED)


def cycle_path_of(idx: LandscapeIndex, path: Sequence[int], A) -> list[CycleNode]:
    """G(omega): C1 = initial cycle of omega_0, then the initial cycle of the first exit state, ...

    A trivial initial cycle is replaced by the extended cycle of its plateau, so
    that paths crossing a flat saddle region map to one cycle rather than to a
    chain of equal-energy singletons with empty principal boundaries.
    """
    A = _as_array(A)
    if len(path) == 0:
        raise InputError("empty path")
    path = [int(x) for x in path]
    for a, b in zip(path, path[1:]):
        if int(np.count_nonzero(idx.digits[a] != idx.digits[b])) != 1:
            raise InputError("consecutive states do not communicate")
    aset = set(A.tolist())
    if path[-1] not in aset:
        raise InputError("path does not end in the target set")
    out = [_path_cycle(idx, path[0], A)]
    k = 0
    while path[k] not in aset:
        cur = out[-1]
        k = next(i for i in range(k + 1, len(path)) if not cur.contains(path[i]))
        if path[k] in aset:
            break
        out.append(_path_cycle(idx, path[k], A))
    return out


def is_vtj(idx: LandscapeIndex, cycle_path: Sequence[CycleNode], A) -> bool:
    """Each principal boundary meets the next cycle; the last one meets A."""
    if not cycle_path:
        raise InputError("empty cycle path")
    A = _as_array(A)
    for c1, c2 in zip(cycle_path, cycle_path[1:]):
        if np.intersect1d(c1.principal, c2.members).size == 0:
            return False
    return np.intersect1d(cycle_path[-1].principal, A).size > 0


# -- tubes ------------------------------------------------------------------------------------

@dataclass
class TubeResult:
    source: int
    targets: np.ndarray
    states: np.ndarray  # tube members, targets excluded
    targets_hit: np.ndarray
    phi: PhiMap | None = None
    _partition: list[CycleNode] | None = field(default=None, repr=False)
    _nonprincipal: np.ndarray | None = field(default=None, repr=False)

    def partition(self, idx: LandscapeIndex) -> list[CycleNode]:
        if self._partition is None:
            self._partition = maximal_cycle_partition(idx, self.states)
        return self._partition

    def nonprincipal_boundary(self, idx: LandscapeIndex) -> np.ndarray:
        """Union of boundary-minus-principal-boundary over the partition, minus tube and targets."""
        if self._nonprincipal is None:
            parts = [c.nonprincipal for c in self.partition(idx)]
            u = np.unique(np.concatenate(parts)) if parts else np.zeros(0, np.int64)
            self._nonprincipal = np.setdiff1d(u, np.union1d(self.states, self.targets))
        return self._nonprincipal


def typical_tube(idx: LandscapeIndex, sigma: int, A, forbidden=()) -> TubeResult:
    """States on some path from sigma to A along which Phi(., A) never increases.

    Arcs join communicating states x -> y with Phi(y, A) <= Phi(x, A); x must
    lie outside A (A is absorbing) and neither endpoint may be forbidden.
    Phi is computed on the whole state space.
    """
    A = _as_array(A)
    forbidden = _as_array(list(forbidden)) if len(forbidden) else np.zeros(0, np.int64)
    if sigma in set(forbidden.tolist()) or np.intersect1d(A, forbidden).size:
        raise InputError("source and targets must not be forbidden")
    if sigma in set(A.tolist()):
        return TubeResult(sigma, A, np.array([sigma], dtype=np.int64), np.zeros(0, np.int64))
    cap = idx.comm_height(sigma, A)
    phi = phi_to_target(idx, A, cap)
    g = idx.level_graph(cap)
    val = phi.values
    keep = np.ones(len(g), bool)
    lf = g.local(forbidden)
    keep[lf[lf >= 0]] = False
    la = g.local(A)
    in_a = np.zeros(len(g), bool)
    in_a[la[la >= 0]] = True
    coo = g.adj.tocoo()
    x, y = coo.row, coo.col
    arc = keep[x] & keep[y] & ~in_a[x] & (val[y] <= val[x]) & (val[x] <= cap)
    D = csr_matrix((np.ones(int(arc.sum()), np.int8), (x[arc], y[arc])), shape=(len(g), len(g)))
    src = int(g.local([sigma])[0])
    fwd = np.zeros(len(g), bool)
    fwd[breadth_first_order(D, src, directed=True, return_predecessors=False)] = True
    hit = np.flatnonzero(fwd & in_a)
    if hit.size == 0:
        raise DomainError("no Phi-nonincreasing path reaches the target")
    back = np.zeros(len(g), bool)
    DT = D.T.tocsr()
    for t in hit:
        if not back[t]:
            back[breadth_first_order(DT, int(t), directed=True, return_predecessors=False)] = True
    tube = fwd & back & ~in_a
    return TubeResult(sigma, A, g.nodes[tube], g.nodes[hit], phi)


def restricted_tube(idx: LandscapeIndex, r: int, s: int, avoid: str = "valleys") -> TubeResult:
    """Tube from r to s avoiding the other stable states.

    ``avoid="valleys"`` forbids the valleys (components of {H < Phi}) of the
    other stable states, matching the restricted-gate graph; ``avoid="stables"``
    forbids only the stable configurations themselves.
    """
    others = [idx.stable(t) for t in range(1, idx.q + 1) if t not in (r, s)]
    if avoid == "valleys" and others:
        phi = idx.comm_height(idx.stable(r), idx.stable(s))
        others = reduce(np.union1d, [valley(idx, o, phi) for o in others])
    elif avoid not in ("valleys", "stables"):
        raise InputError(f"unknown avoid mode {avoid!r}")
    return typical_tube(idx, idx.stable(r), [idx.stable(s)], others)


@dataclass
class TubeComparison:
    union: np.ndarray
    direct: TubeResult
    only_in_union: np.ndarray
    only_in_direct: np.ndarray

    @property
    def equal(self) -> bool:
        return self.only_in_union.size == 0 and self.only_in_direct.size == 0


def _compare(union: np.ndarray, direct: TubeResult) -> TubeComparison:
    return TubeComparison(
        union, direct, np.setdiff1d(union, direct.states), np.setdiff1d(direct.states, union)
    )


def tube_for_targets(idx: LandscapeIndex, r: int, avoid: str = "valleys") -> TubeComparison:
    """Union over t != r of restricted tubes r -> t, against the direct tube r -> other stables."""
    others = [t for t in range(1, idx.q + 1) if t != r]
    direct = typical_tube(idx, idx.stable(r), [idx.stable(t) for t in others])
    union = reduce(np.union1d, [restricted_tube(idx, r, t, avoid).states for t in others])
    return _compare(union, direct)


def tube_r_to_s(idx: LandscapeIndex, r: int, s: int, avoid: str = "valleys") -> TubeComparison:
    """Three-part union of restricted tubes (r -> t, t' -> t avoiding r and s, t' -> s)
    against the direct tube r -> s."""
    if r == s:
        raise InputError("r and s must differ")
    q = idx.q
    parts = [restricted_tube(idx, r, t, avoid).states for t in range(1, q + 1) if t != r]
    mids = [t for t in range(1, q + 1) if t not in (r, s)]
    parts += [restricted_tube(idx, tp, t, avoid).states for t in mids for tp in mids if t != tp]
    parts += [restricted_tube(idx, tp, s, avoid).states for tp in range(1, q + 1) if tp != s]
    direct = typical_tube(idx, idx.stable(r), [idx.stable(s)])
    return _compare(reduce(np.union1d, parts), direct)


# -- theorem verification ---------------------------------------------------------------

TUBE_THEOREMS = ("exittuberes", "exittubestable", "exittubetarget")


def _tube_bands(K: int, L: int) -> list[str]:
    """Family labels whose union is the stated restricted tube for one pair."""
    bands = ["Rbar(1,1)", "K_bar"]
    bands += [f"D_bar({i})" for i in range(1, K - 1)] + [f"E_bar({i})" for i in range(1, K - 1)]
    bands += [f"Bbar(1,{K - 1},{h})" for h in range(2, K - 1)]
    bands += [f"Bbar({j},{K},{h})" for j in range(2, L - 1) for h in range(1, K)]
    bands += [f"Rbar({j},{K})" for j in range(2, L - 1)]
    bands += [f"Btilde(1,{K - 1},{h})" for h in range(2, K - 1)]
    bands += ["K_tilde"] + [f"D_tilde({i})" for i in range(1, K - 1)] + [f"E_tilde({i})" for i in range(1, K - 1)]
    bands += ["Rtilde(1,1)"]
    return bands


def claimed_restricted_tube(idx: LandscapeIndex, r: int, s: int) -> dict[str, np.ndarray]:
    """Per-band state sets of the stated restricted tube from r to s."""
    from .geom import family_states

    return {b: family_states(idx, b, r, s) for b in _tube_bands(idx.lat.K, idx.lat.L)}


def verify_tube_theorems(idx: LandscapeIndex, which: str, r: int = 1, s: int = 2) -> "VerificationReport":
    """Restricted tube against the stated band union, or tube unions against direct tubes."""
    from .landscape import VerificationReport

    if which not in TUBE_THEOREMS:
        raise InputError(f"unknown tube theorem {which!r}; choose from {', '.join(TUBE_THEOREMS)}")
    if r == s or not (1 <= r <= idx.q and 1 <= s <= idx.q):
        raise InputError("need distinct spins r, s in 1..q")
    idx.lat.require_standard()
    rep = VerificationReport(which, {"q": idx.q, "K": idx.lat.K, "L": idx.lat.L, "r": r, "s": s})
    if which == "exittuberes":
        tube = restricted_tube(idx, r, s)
        bands = claimed_restricted_tube(idx, r, s)
        claim = reduce(np.union1d, bands.values())
        got = np.setdiff1d(tube.states, [idx.stable(r)])
        extra, missing = np.setdiff1d(got, claim), np.setdiff1d(claim, got)
        rep.add(
            "restricted tube equals the stated band union", extra.size == 0 and missing.size == 0,
            tube=int(got.size), union=int(claim.size), tube_not_in_union=int(extra.size),
            union_not_in_tube=int(missing.size),
            examples=[idx.config(int(x)).to_text() for x in np.concatenate([extra, missing])[:3]],
            bands={b: {"size": int(v.size), "in_tube": int(np.isin(v, got).sum())} for b, v in bands.items()},
        )
    else:
        if idx.q == 2:
            rep.warnings.append("q = 2: the tube union has a single term")
        cmp = tube_for_targets(idx, r) if which == "exittubestable" else tube_r_to_s(idx, r, s)
        rep.add(
            "union of restricted tubes equals the direct tube", cmp.equal,
            union=int(cmp.union.size), direct=int(cmp.direct.states.size),
            union_only=int(cmp.only_in_union.size), direct_only=int(cmp.only_in_direct.size),
        )
    return rep


def family_principal_boundary(idx: LandscapeIndex, states) -> np.ndarray:
    """Union of the principal boundaries of the maximal cycles of a state set, minus the set."""
    states = _as_array(states)
    parts = [principal_boundary(idx, c) for c in maximal_cycle_partition(idx, states)]
    u = np.unique(np.concatenate(parts)) if parts else np.zeros(0, np.int64)
    return np.setdiff1d(u, states)


def _lemma_claims(K: int) -> list[tuple[str, str, list[str]]]:
    """(lemma id, family, stated principal boundary as labels) for the bar side."""
    out = [("lemmaprinboundHK", "K_bar", ["D_bar(1)", "D_bar(2)", "E_bar(1)", "E_bar(2)"])]
    for i in range(1, K - 3):
        out.append(("lemmaprinboundDE", f"D_bar({i})",
                    [f"D_bar({i + 1})", f"D_bar({i + 2})", f"E_bar({i + 1})", f"E_bar({i + 2})"]))
        out.append(("lemmaprinboundDE", f"E_bar({i})", [f"E_bar({i + 1})", f"E_bar({i + 2})"]))
    if K >= 4:
        out.append(("lemmaprinboundfinal", f"D_bar({K - 3})", [f"D_bar({K - 2})", f"E_bar({K - 2})", "Rbar(1,1)"]))
        out.append(("lemmaprinboundfinal", f"E_bar({K - 3})", [f"E_bar({K - 2})", "Rbar(1,1)"]))
    out.append(("lemmaprinboundfinal", f"D_bar({K - 2})", ["Rbar(1,1)"]))
    out.append(("lemmaprinboundfinal", f"E_bar({K - 2})", ["Rbar(1,1)"]))
    return out


def verify_principal_boundary_lemmas(idx: LandscapeIndex, r: int = 1, s: int = 2) -> "VerificationReport":
    """Principal boundaries of the K, D and E families against the stated unions."""
    from .geom import family_states
    from .landscape import VerificationReport

    idx.lat.require_standard()
    K = idx.lat.K
    rep = VerificationReport("principal_boundary_lemmas", {"q": idx.q, "K": K, "L": idx.lat.L, "r": r, "s": s})
    if K - 4 < 1:
        rep.warnings.append(f"the general D/E lemma needs K >= 5; its index range is empty at K={K}")
    cache: dict[str, np.ndarray] = {}

    def fam(label: str) -> np.ndarray:
        if label not in cache:
            cache[label] = family_states(idx, label, r, s)
        return cache[label]

    for lemma, label, claim_labels in _lemma_claims(K):
        members = fam(label)
        if members.size == 0:
            rep.warnings.append(f"family {label} is empty at this size")
            continue
        got = family_principal_boundary(idx, members)
        claim = reduce(np.union1d, [fam(x) for x in claim_labels])
        extra, missing = np.setdiff1d(got, claim), np.setdiff1d(claim, got)
        # every boundary state must be a downhill step of size 2 or 4 from the family
        nb = idx.neighbors(members)
        drop = idx.energies[nb].astype(int) - idx.energies[members].astype(int)[:, None]
        steps = {int(x) for x in np.unique(drop[np.isin(nb, got)])}
        rep.add(
            f"{lemma}: B({label}) = {' U '.join(claim_labels)}",
            extra.size == 0 and missing.size == 0 and steps <= {-2, -4},
            family=int(members.size), boundary=int(got.size), union=int(claim.size),
            boundary_not_in_union=int(extra.size), union_not_in_boundary=int(missing.size),
            downhill_steps=sorted(steps),
            examples=[idx.config(int(x)).to_text() for x in np.concatenate([extra, missing])[:3]],
        )
    return rep
