"""Exhaustive state-space analysis.

States are integers: the base-q number whose digit at position v is
sigma(v) - 1. This order coincides with the order of the packed bit encoding.
All energy questions reduce to connectivity inside sub-level sets
{H <= c}, which stay small for the levels that matter here.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .lattice import DomainError, InputError, TorusLattice
from .spin import Configuration

DEFAULT_CAP = 2_000_000


class ResourceCapError(RuntimeError):
    """State space larger than the enumeration cap."""

    def __init__(self, required: int, cap: int):
        super().__init__(f"state space has {required} states; raise the cap to at least {required} (current cap {cap})")
        self.required = required
        self.cap = cap


def _as_array(states: Iterable[int] | int | np.ndarray) -> np.ndarray:
    if isinstance(states, (int, np.integer)):
        return np.array([int(states)], dtype=np.int64)
    return np.unique(np.fromiter(states, dtype=np.int64) if not isinstance(states, np.ndarray) else states.astype(np.int64))


class LevelGraph:
    """Induced single-flip graph on a set of states (usually a sub-level set).

    ``nodes`` is sorted; local node k is global state ``nodes[k]``.
    """

    def __init__(self, index: "LandscapeIndex", nodes: np.ndarray):
        self.index = index
        self.nodes = np.asarray(nodes, dtype=np.int64)
        self.energies = index.energies[self.nodes]
        m = len(self.nodes)
        if m:
            nb = index.neighbors(self.nodes)
            loc = self.local(nb.ravel()).reshape(nb.shape)
            rows = np.repeat(np.arange(m), nb.shape[1]).reshape(nb.shape)
            keep = loc >= 0
            r, c = rows[keep], loc[keep]
        else:
            r = c = np.zeros(0, dtype=np.int64)
        self.adj = csr_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(m, m))

    def __len__(self) -> int:
        return len(self.nodes)

    def local(self, states) -> np.ndarray:
        """Local indices of global states, -1 where absent."""
        states = np.asarray(states, dtype=np.int64)
        if len(self.nodes) == 0:
            return np.full(states.shape, -1, dtype=np.int64)
        pos = np.searchsorted(self.nodes, states)
        pos = np.minimum(pos, len(self.nodes) - 1)
        return np.where(self.nodes[pos] == states, pos, -1)

    def neighbors_local(self, k: int) -> np.ndarray:
        return self.adj.indices[self.adj.indptr[k]:self.adj.indptr[k + 1]]

    def components(self, removed: np.ndarray | None = None) -> np.ndarray:
        """Component label per local node; removed nodes get -1."""
        if removed is None or not removed.any():
            return connected_components(self.adj, directed=False)[1]
        keep = np.flatnonzero(~removed)
        sub = self.adj[keep][:, keep]
        lab = np.full(len(self.nodes), -1, dtype=np.int64)
        lab[keep] = connected_components(sub, directed=False)[1]
        return lab

    def reachable(self, sources_local: np.ndarray, removed: np.ndarray | None = None) -> np.ndarray:
        """Boolean mask of nodes reachable from any source, avoiding removed nodes."""
        lab = self.components(removed)
        src = [s for s in np.asarray(sources_local) if lab[s] >= 0]
        return np.isin(lab, np.unique(lab[src])) & (lab >= 0) if src else np.zeros(len(lab), bool)

    def path(self, source_local: int, targets_local: np.ndarray, removed: np.ndarray | None = None) -> list[int] | None:
        """Shortest path (global states) from a source to the nearest target, or None."""
        keep = np.ones(len(self.nodes), bool) if removed is None else ~removed
        if not keep[source_local]:
            return None
        keep_idx = np.flatnonzero(keep)
        sub = self.adj[keep_idx][:, keep_idx]
        pos = np.full(len(self.nodes), -1)
        pos[keep_idx] = np.arange(len(keep_idx))
        order, pred = breadth_first_order(sub, pos[source_local], directed=False, return_predecessors=True)
        tset = {int(pos[t]) for t in np.asarray(targets_local) if pos[t] >= 0}
        hit = next((int(v) for v in order if int(v) in tset), None)
        if hit is None:
            return None
        seq = [hit]
        while pred[seq[-1]] >= 0:
            seq.append(int(pred[seq[-1]]))
        return [int(self.nodes[keep_idx[v]]) for v in reversed(seq)]


class LandscapeIndex:
    """All q^(K L) configurations with their exact integer energies."""

    def __init__(self, q: int, lat: TorusLattice, cap: int = DEFAULT_CAP):
        if q < 2:
            raise InputError("q must be >= 2")
        n = q ** lat.n_vertices
        if n > cap:
            raise ResourceCapError(n, cap)
        self.q = q
        self.lat = lat
        self.n_states = n
        self.powers = q ** np.arange(lat.n_vertices, dtype=np.int64)
        codes = np.arange(n, dtype=np.int64)
        digits = np.empty((n, lat.n_vertices), dtype=np.uint8)
        rest = codes.copy()
        for v in range(lat.n_vertices):
            digits[:, v] = rest % q
            rest //= q
        self.digits = digits
        agree = np.zeros(n, dtype=np.int16)
        for a, b in lat.edge_array:
            agree += digits[:, a] == digits[:, b]
        self.energies = -agree
        self._levels: dict[tuple[int, bool], LevelGraph] = {}
        self._comp_cache: dict[tuple[int, bool], tuple[LevelGraph, np.ndarray]] = {}

    # -- encoding -----------------------------------------------------------------
    def state_of(self, sigma: Configuration) -> int:
        if (sigma.K, sigma.L) != (self.lat.K, self.lat.L) or max(sigma.spins) > self.q:
            raise InputError("configuration does not belong to this landscape")
        return int(np.dot(np.asarray(sigma.spins, dtype=np.int64) - 1, self.powers))

    def config(self, state: int) -> Configuration:
        return Configuration(tuple(int(x) + 1 for x in self.digits[state]), self.lat.K, self.lat.L)

    def spins_of(self, states) -> np.ndarray:
        """Spin arrays (values 1..q) for an array of states."""
        return self.digits[np.asarray(states, dtype=np.int64)].astype(np.int64) + 1

    def stable(self, s: int) -> int:
        """State index of the constant configuration s."""
        if not 1 <= s <= self.q:
            raise InputError(f"spin {s} outside 1..{self.q}")
        return int((s - 1) * self.powers.sum())

    @property
    def stable_states(self) -> list[int]:
        return [self.stable(s) for s in range(1, self.q + 1)]

    @cached_property
    def ground_energy(self) -> int:
        return int(self.energies.min())

    # -- adjacency ----------------------------------------------------------------
    def neighbors(self, states) -> np.ndarray:
        """(m, |V|(q-1)) array of the single-flip neighbors of each state."""
        states = np.asarray(states, dtype=np.int64)
        d = self.digits[states].astype(np.int64)
        blocks = []
        for t in range(1, self.q):
            nd = (d + t) % self.q
            blocks.append(states[:, None] + (nd - d) * self.powers)
        return np.concatenate(blocks, axis=1)

    def level_graph(self, threshold: int, strict: bool = False) -> LevelGraph:
        """Induced graph on {H <= threshold} (or {H < threshold} when strict)."""
        key = (int(threshold), strict)
        if key not in self._levels:
            mask = self.energies < threshold if strict else self.energies <= threshold
            self._levels[key] = LevelGraph(self, np.flatnonzero(mask))
        return self._levels[key]

    def _components(self, threshold: int, strict: bool = False) -> tuple[LevelGraph, np.ndarray]:
        key = (int(threshold), strict)
        if key not in self._comp_cache:
            g = self.level_graph(threshold, strict)
            self._comp_cache[key] = (g, g.components())
        return self._comp_cache[key]

    def component(self, state: int, threshold: int, strict: bool = False) -> np.ndarray:
        """Global states in the component of ``state`` inside the (strict) sub-level set."""
        g, lab = self._components(threshold, strict)
        k = int(g.local([state])[0])
        if k < 0:
            return np.zeros(0, dtype=np.int64)
        return g.nodes[lab == lab[k]]

    @cached_property
    def distinct_levels(self) -> np.ndarray:
        return np.unique(self.energies)

    def comm_height(self, A, B) -> int:
        """min over paths A -> B of the max energy along the path (bottleneck sweep).

        Levels are visited in increasing order; at each level the components of
        {H <= level} are formed and the sweep stops when one of them meets both sets.
        """
        A, B = _as_array(A), _as_array(B)
        if len(A) == 0 or len(B) == 0:
            raise InputError("comm_height needs non-empty sets")
        if np.intersect1d(A, B).size:
            raise InputError("comm_height needs disjoint sets")
        start = max(int(self.energies[A].min()), int(self.energies[B].min()))
        for level in self.distinct_levels[self.distinct_levels >= start]:
            g, lab = self._components(int(level))
            la, lb = g.local(A), g.local(B)
            ca = lab[la[la >= 0]]
            cb = lab[lb[lb >= 0]]
            if np.intersect1d(ca, cb).size:
                return int(level)
        raise RuntimeError("state space is disconnected")  # single flips connect every pair

    @cached_property
    def phi_stable(self) -> int:
        """Communication height between two distinct stable states (all pairs agree)."""
        vals = {
            self.comm_height(self.stable(r), self.stable(s))
            for r in range(1, self.q + 1)
            for s in range(r + 1, self.q + 1)
        }
        if len(vals) != 1:
            raise RuntimeError(f"stable pairs have different heights {sorted(vals)}")
        return vals.pop()

    def argmin_states(self) -> np.ndarray:
        return np.flatnonzero(self.energies == self.ground_energy)


def enumerate_landscape(q: int, lat: TorusLattice, cap: int = DEFAULT_CAP) -> LandscapeIndex:
    """Enumerate every configuration; raises ``ResourceCapError`` above ``cap``."""
    return LandscapeIndex(q, lat, cap)


def saddle_set(idx: LandscapeIndex, r: int, s: int) -> np.ndarray:
    """States at height Phi(r,s) joined to both r and s inside {H <= Phi(r,s)}."""
    if r == s:
        raise InputError("r and s must differ")
    phi = idx.comm_height(idx.stable(r), idx.stable(s))
    comp = idx.component(idx.stable(r), phi)
    return comp[idx.energies[comp] == phi]


def valley(idx: LandscapeIndex, eta: int, level: int) -> np.ndarray:
    """Component of the state ``eta`` inside {H < level}."""
    return idx.component(eta, level, strict=True)


def restricted_graph(idx: LandscapeIndex, r: int, s: int) -> LevelGraph:
    """{H <= Phi(r,s)} without the valleys of the stable states other than r and s."""
    phi = idx.comm_height(idx.stable(r), idx.stable(s))
    base = idx.level_graph(phi)
    drop = [valley(idx, idx.stable(t), phi) for t in range(1, idx.q + 1) if t not in (r, s)]
    if not drop:
        return base
    removed = np.concatenate(drop)
    return LevelGraph(idx, np.setdiff1d(base.nodes, removed))


# -- transitions and gates ------------------------------------------------------------

RESTRICTED = "restricted"
TO_OTHERS = "to_others"
TO_TARGET = "to_target"


@dataclass(frozen=True)
class Transition:
    """r -> s avoiding other stable valleys, r -> every other stable state, or plain r -> s."""

    kind: str
    source: int
    target: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in (RESTRICTED, TO_OTHERS, TO_TARGET):
            raise InputError(f"unknown transition kind {self.kind!r}")
        if self.kind != TO_OTHERS and (self.target is None or self.target == self.source):
            raise InputError("transition needs a target different from the source")

    def describe(self) -> str:
        if self.kind == TO_OTHERS:
            return f"{self.source}->others"
        tag = "restricted " if self.kind == RESTRICTED else ""
        return f"{tag}{self.source}->{self.target}"

    def target_spins(self, q: int) -> list[int]:
        if self.kind == TO_OTHERS:
            return [t for t in range(1, q + 1) if t != self.source]
        return [self.target]


class TransitionGraph:
    """Level graph of a transition restricted to the component of its source."""

    def __init__(self, idx: LandscapeIndex, tr: Transition):
        if tr.source > idx.q or (tr.target or 1) > idx.q:
            raise InputError("transition spins exceed q")
        if tr.kind == TO_OTHERS and idx.q < 2:
            raise InputError("need at least two stable states")
        self.idx = idx
        self.transition = tr
        src = idx.stable(tr.source)
        tgt = np.array([idx.stable(t) for t in tr.target_spins(idx.q)])
        self.phi = idx.comm_height(src, tgt)
        if tr.kind == RESTRICTED:
            base = restricted_graph(idx, tr.source, tr.target)
        else:
            base = idx.level_graph(self.phi)
        lab = base.components()
        k = int(base.local([src])[0])
        self.graph = LevelGraph(idx, base.nodes[lab == lab[k]])
        g = self.graph
        self.source_local = g.local([src])
        self.target_local = g.local(tgt)
        if (self.target_local < 0).any():
            raise RuntimeError("target not connected to source at the transition level")
        self.saddle_mask = g.energies == self.phi

    @cached_property
    def saddles(self) -> np.ndarray:
        return self.graph.nodes[self.saddle_mask]

    def removed_mask(self, W) -> np.ndarray:
        W = _as_array(W)
        loc = self.graph.local(W)
        bad = W[(loc < 0)]
        if bad.size or not self.saddle_mask[loc].all():
            raise InputError("candidate set contains states that are not saddles of the transition")
        mask = np.zeros(len(self.graph), bool)
        mask[loc] = True
        return mask


@dataclass
class GateReport:
    transition: str
    family: str
    size: int
    is_gate: bool
    is_minimal: bool = False
    witnesses: list = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.is_minimal and not self.is_gate:
            raise ValueError("minimal implies gate")

    def as_dict(self) -> dict:
        return {
            "transition": self.transition,
            "family": self.family,
            "size": self.size,
            "is_gate": self.is_gate,
            "is_minimal": self.is_minimal,
            "witnesses": self.witnesses,
        }


def _text(idx: LandscapeIndex, state: int) -> str:
    return idx.config(int(state)).to_text()


def is_gate(idx: LandscapeIndex, W, transition: Transition | TransitionGraph, family: str = "") -> GateReport:
    """Gate iff removing W disconnects source from target in the transition's level graph."""
    tg = transition if isinstance(transition, TransitionGraph) else TransitionGraph(idx, transition)
    W = _as_array(W)
    removed = tg.removed_mask(W)
    reach = tg.graph.reachable(tg.source_local, removed)
    gate = not reach[tg.target_local].any()
    rep = GateReport(tg.transition.describe(), family, int(len(W)), gate)
    if not gate:
        p = tg.graph.path(int(tg.source_local[0]), tg.target_local, removed)
        rep.witnesses.append({"kind": "avoiding_path", "path": [_text(idx, x) for x in p]})
    return rep


def is_minimal_gate(idx: LandscapeIndex, W, transition: Transition | TransitionGraph, family: str = "") -> GateReport:
    """Leave-one-out test: W is minimal iff every eta in W reconnects source and target.

    With W removed, eta restores a connection exactly when it touches both the
    source component and a target component of the graph minus W.
    """
    tg = transition if isinstance(transition, TransitionGraph) else TransitionGraph(idx, transition)
    rep = is_gate(idx, W, tg, family)
    if not rep.is_gate:
        return rep
    W = _as_array(W)
    removed = tg.removed_mask(W)
    g = tg.graph
    lab = g.components(removed)
    src_lab = lab[tg.source_local[0]]
    tgt_labs = set(int(x) for x in lab[tg.target_local])
    redundant = []
    for k in np.flatnonzero(removed):
        nl = {int(x) for x in lab[g.neighbors_local(k)] if x >= 0}
        if not (src_lab in nl and nl & tgt_labs):
            redundant.append(int(g.nodes[k]))
    rep.is_minimal = not redundant
    if redundant:
        rep.witnesses.append({"kind": "redundant_state", "state": _text(idx, redundant[0]), "count": len(redundant)})
    return rep


# -- essential saddles -----------------------------------------------------------------

@dataclass
class EssentialResult:
    essential: np.ndarray
    unessential: np.ndarray
    inconclusive: np.ndarray
    stats: dict


class _Quotient:
    """Quotient of a transition graph: sub-threshold components become fixed nodes.

    Fixed nodes can never belong to a separator. A saddle found unessential
    is turned into a fixed node, which leaves the family of minimal
    separators unchanged, and adjacent fixed nodes are contracted.
    """

    def __init__(self, tg: TransitionGraph):
        g = tg.graph
        low = ~tg.saddle_mask
        low_idx = np.flatnonzero(low)
        sub = g.adj[low_idx][:, low_idx]
        _, low_lab = connected_components(sub, directed=False)
        n_low = int(low_lab.max()) + 1 if len(low_idx) else 0
        node_of = np.empty(len(g), dtype=np.int64)
        node_of[low_idx] = low_lab
        sad_idx = np.flatnonzero(tg.saddle_mask)
        node_of[sad_idx] = n_low + np.arange(len(sad_idx))
        self.n = n_low + len(sad_idx)
        self.saddle_state = {n_low + i: int(g.nodes[k]) for i, k in enumerate(sad_idx)}
        coo = g.adj.tocoo()
        a, b = node_of[coo.row], node_of[coo.col]
        keep = a != b
        self.adj: list[set[int]] = [set() for _ in range(self.n)]
        for x, y in zip(a[keep].tolist(), b[keep].tolist()):
            self.adj[x].add(y)
        self.parent = list(range(self.n))
        self.fixed = [i < n_low for i in range(self.n)]
        self.a = int(node_of[tg.source_local[0]])
        targets = {int(node_of[t]) for t in tg.target_local}
        b0 = targets.pop()
        for t in targets:
            b0 = self._merge(b0, t)
        self.b = b0

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def _merge(self, x: int, y: int) -> int:
        x, y = self.find(x), self.find(y)
        if x == y:
            return x
        if len(self.adj[x]) < len(self.adj[y]):
            x, y = y, x
        self.parent[y] = x
        for z in self.adj[y]:
            self.adj[z].discard(y)
            if z != x:
                self.adj[z].add(x)
                self.adj[x].add(z)
        self.adj[x].discard(y)
        self.adj[x].discard(x)
        self.adj[y] = set()
        return x

    def fix(self, x: int) -> None:
        """Make saddle x undeletable and contract it into fixed neighbors."""
        self.fixed[x] = True
        for z in list(self.adj[x]):
            if self.fixed[self.find(z)]:
                x = self._merge(x, z)
        self.a, self.b = self.find(self.a), self.find(self.b)
        if self.a == self.b:
            raise RuntimeError("source and target merged; separator structure violated")

    def trivially_unessential(self, x: int) -> bool:
        nb = self.adj[x]
        if len(nb) <= 1:
            return True
        for z in nb:
            if self.fixed[z] and nb <= self.adj[z] | {z}:
                return True
        items = list(nb)
        for i, u in enumerate(items):
            au = self.adj[u]
            for v in items[i + 1:]:
                if v not in au:
                    return False
        return True

    def live_saddles(self) -> list[int]:
        return [x for x in range(self.n) if self.find(x) == x and not self.fixed[x]]

    # witness search ---------------------------------------------------------------------
    def _closure(self, nodes: set[int]) -> set[int]:
        out = set(nodes)
        for x in nodes:
            if not self.fixed[x]:
                out.update(z for z in self.adj[x] if self.fixed[z])
        return out

    def _bfs(self, start: int, blocked: set[int]) -> dict[int, int]:
        pred = {start: -1}
        dq = deque([start])
        while dq:
            x = dq.popleft()
            for z in self.adj[x]:
                if z not in pred and z not in blocked:
                    pred[z] = x
                    dq.append(z)
        return pred

    def _side_witness(self, eta: int, a: int, b: int) -> bool:
        """Try C = closure of a shortest a-x path (x a neighbor of eta), then look for b's side."""
        pred = self._bfs(a, {eta, b})
        for x in self.adj[eta]:
            if x not in pred or x == b:
                continue
            path = set()
            y = x
            while y != -1:
                path.add(y)
                y = pred[y]
            C = self._closure(path)
            if eta in C or b in C:
                continue
            NC = set()
            for y in C:
                NC.update(self.adj[y])
            NC -= C
            if b in NC or eta not in NC:
                continue
            side = self._bfs(b, C | NC)
            if any(z in side for z in self.adj[eta]):
                return True
        return False

    def _connects(self, T: set[int]) -> bool:
        allowed = T
        pred = {self.a}
        dq = deque([self.a])
        while dq:
            x = dq.popleft()
            if x == self.b:
                return True
            for z in self.adj[x]:
                if z not in pred and (self.fixed[z] or z in allowed):
                    pred.add(z)
                    dq.append(z)
        return False

    def _path_support(self, eta: int) -> set[int] | None:
        p1 = self._bfs(self.a, {eta, self.b})
        p2 = self._bfs(self.b, {eta, self.a})
        best = None
        for x in self.adj[eta]:
            for y in self.adj[eta]:
                if x in p1 and y in p2:
                    sup = {eta}
                    for pred, z in ((p1, x), (p2, y)):
                        while z != -1:
                            if not self.fixed[z]:
                                sup.add(z)
                            z = pred[z]
                    if best is None or len(sup) < len(best):
                        best = sup
        return best

    def _reduction_search(self, eta: int, budget: int) -> tuple[bool | None, int]:
        """Exact search for T containing eta that connects a and b while T - {eta} does not."""
        start = self._path_support(eta)
        if start is None:
            return False, 0
        tests = 0
        seen: set[frozenset] = set()
        stack = [frozenset(start)]
        while stack:
            T = stack.pop()
            if T in seen:
                continue
            seen.add(T)
            tests += 1
            if not self._connects(set(T - {eta})):
                return True, tests
            for x in sorted(T - {eta}, reverse=True):
                if tests >= budget:
                    return None, tests
                T2 = T - {x}
                if T2 in seen:
                    continue
                tests += 1
                if self._connects(set(T2)):
                    stack.append(T2)
        return False, tests


def essential_saddles(idx: LandscapeIndex, transition: Transition | TransitionGraph, budget: int = 100_000) -> EssentialResult:
    """Saddles lying in some inclusion-minimal separator of source and target.

    Equivalently: saddles eta for which some saddle set T containing eta joins
    source and target through {H < Phi} while T without eta does not.
    """
    tg = transition if isinstance(transition, TransitionGraph) else TransitionGraph(idx, transition)
    qg = _Quotient(tg)
    unessential: set[int] = set()
    work = deque(qg.live_saddles())
    queued = set(work)
    while work:
        x = work.popleft()
        queued.discard(x)
        if qg.find(x) != x or qg.fixed[x]:
            continue
        if qg.trivially_unessential(x):
            nbrs = list(qg.adj[x])
            unessential.add(x)
            qg.fix(x)
            for z in nbrs:
                z = qg.find(z)
                for w in [z, *qg.adj[z]]:
                    w = qg.find(w)
                    if not qg.fixed[w] and w not in queued:
                        work.append(w)
                        queued.add(w)
    essential: list[int] = []
    inconclusive: list[int] = []
    tests_total = 0
    for x in qg.live_saddles():
        if qg._side_witness(x, qg.a, qg.b) or qg._side_witness(x, qg.b, qg.a):
            essential.append(x)
            continue
        found, tests = qg._reduction_search(x, budget)
        tests_total += tests
        if found is True:
            essential.append(x)
        elif found is False:
            unessential.add(x)
        else:
            inconclusive.append(x)
    ess = np.array(sorted(qg.saddle_state[x] for x in essential), dtype=np.int64)
    un_states = set(tg.saddles.tolist()) - set(ess.tolist()) - {qg.saddle_state[x] for x in inconclusive}
    return EssentialResult(
        essential=ess,
        unessential=np.array(sorted(un_states), dtype=np.int64),
        inconclusive=np.array(sorted(qg.saddle_state[x] for x in inconclusive), dtype=np.int64),
        stats={"saddles": int(len(tg.saddles)), "eliminated": len(unessential), "reduction_tests": tests_total},
    )


# -- theorem verification ---------------------------------------------------------------

@dataclass
class VerificationReport:
    """Named pass/fail checks for one theorem on one instance."""

    theorem: str
    instance: dict
    checks: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def add(self, name: str, passed: bool, **detail) -> None:
        self.checks.append({"name": name, "passed": bool(passed), **detail})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "theorem": self.theorem, "instance": self.instance, "passed": self.passed,
            "checks": self.checks, "warnings": self.warnings,
        }


GATE_THEOREMS = (
    "mingatescond", "mingatescondset", "mingatesNOcond", "setmingatesNOcond", "mingatessingh0", "setmingatefin",
)


def family_union(idx: LandscapeIndex, label: str, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    """Union over spin pairs of a labeled family."""
    from .geom import family_states

    parts = [family_states(idx, label, a, b) for a, b in pairs]
    return np.unique(np.concatenate(parts)) if parts else np.zeros(0, np.int64)


def gate_union(idx: LandscapeIndex, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    """Union over spin pairs of every gate family (P, Q, H, W, bar and tilde)."""
    from .geom import gate_family_labels

    pairs = list(pairs)
    parts = [family_union(idx, lab, pairs) for lab in gate_family_labels(idx.lat)]
    return np.unique(np.concatenate(parts))


def claimed_gate_union(idx: LandscapeIndex, transition: Transition) -> np.ndarray:
    """The geometric union of minimal gates stated for each transition kind."""
    q, r = idx.q, transition.source
    if transition.kind == RESTRICTED:
        return gate_union(idx, [(r, transition.target)])
    out_pairs = [(r, t) for t in range(1, q + 1) if t != r]
    if transition.kind == TO_OTHERS:
        return gate_union(idx, out_pairs)
    s = transition.target
    return gate_union(idx, out_pairs + [(t, s) for t in range(1, q + 1) if t != s])


def _instance(idx: LandscapeIndex) -> dict:
    return {"q": idx.q, "K": idx.lat.K, "L": idx.lat.L}


def _family_checks(idx: LandscapeIndex, rep: VerificationReport, tr: Transition,
                   families: dict[str, np.ndarray]) -> None:
    tg = TransitionGraph(idx, tr)
    for name, W in families.items():
        if W.size == 0:
            rep.warnings.append(f"family {name} is empty at this size")
            continue
        g = is_minimal_gate(idx, W, tg, name)
        rep.add(f"{name} minimal gate for {tr.describe()}", g.is_gate and g.is_minimal, size=g.size,
                is_gate=g.is_gate, is_minimal=g.is_minimal, witnesses=g.witnesses)


def _union_check(idx: LandscapeIndex, rep: VerificationReport, tr: Transition, budget: int) -> None:
    res = essential_saddles(idx, tr, budget)
    claim = claimed_gate_union(idx, tr)
    extra = np.setdiff1d(res.essential, claim)
    missing = np.setdiff1d(claim, res.essential)
    rep.add(
        f"essential saddles equal the stated union for {tr.describe()}",
        extra.size == 0 and missing.size == 0 and res.inconclusive.size == 0,
        essential=int(res.essential.size), union=int(claim.size), inconclusive=int(res.inconclusive.size),
        essential_not_in_union=int(extra.size), union_not_essential=int(missing.size),
        examples=[_text(idx, x) for x in np.concatenate([extra, missing])[:3]],
    )


def verify_gate_theorems(idx: LandscapeIndex, which: str, r: int = 1, s: int = 2,
                         budget: int = 100_000) -> VerificationReport:
    """Check one gate theorem: family-wise minimal gates or the union of minimal gates."""
    from .geom import gate_family_labels

    if which not in GATE_THEOREMS:
        raise InputError(f"unknown gate theorem {which!r}; choose from {', '.join(GATE_THEOREMS)}")
    if r == s or not (1 <= r <= idx.q and 1 <= s <= idx.q):
        raise InputError("need distinct spins r, s in 1..q")
    idx.lat.require_standard()
    rep = VerificationReport(which, {**_instance(idx), "r": r, "s": s})
    q = idx.q
    labels = gate_family_labels(idx.lat)
    out_pairs = [(r, t) for t in range(1, q + 1) if t != r]
    in_pairs = [(t, s) for t in range(1, q + 1) if t != s]
    K, L = idx.lat.K, idx.lat.L
    if K - 3 < 1:
        rep.warnings.append(f"H families need K >= 4; none exist at K={K}")
    if L - 3 < 2:
        rep.warnings.append(f"W families need L >= 5; none exist at L={L}")
    if q == 2 and which not in ("mingatescond", "mingatescondset"):
        rep.warnings.append("q = 2: this theorem coincides with the two-stable-state case")
    if which == "mingatescond":
        tr = Transition(RESTRICTED, r, s)
        _family_checks(idx, rep, tr, {lab: family_union(idx, lab, [(r, s)]) for lab in labels})
    elif which == "mingatesNOcond":
        tr = Transition(TO_OTHERS, r)
        _family_checks(idx, rep, tr, {f"union_t {lab}(r,t)": family_union(idx, lab, out_pairs) for lab in labels})
    elif which == "mingatessingh0":
        tr = Transition(TO_TARGET, r, s)
        fams = {f"union_t {lab}(r,t)": family_union(idx, lab, out_pairs) for lab in labels}
        fams.update({f"union_t {lab}(t,s)": family_union(idx, lab, in_pairs) for lab in labels})
        _family_checks(idx, rep, tr, fams)
    else:
        kind = {"mingatescondset": RESTRICTED, "setmingatesNOcond": TO_OTHERS, "setmingatefin": TO_TARGET}[which]
        tr = Transition(kind, r, None if kind == TO_OTHERS else s)
        _union_check(idx, rep, tr, budget)
    return rep
