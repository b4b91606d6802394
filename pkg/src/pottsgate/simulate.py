"""Metropolis dynamics, trial runner and Monte Carlo estimators.

Two exact engines are provided:

* ``MetropolisEngine`` runs the single-site Metropolis chain on a spin
  array. Runs of rejected or no-op proposals are drawn in one geometric
  sample, so the reported hitting time counts every proposal.
* ``LumpedEngine`` runs the jump chain on an enumerated landscape and
  crosses the valleys of the stable states in one move, sampled from the
  exact exit distribution (harmonic measure). The order of visited
  watched and target sets has the same law as under the Metropolis chain.
  Times are not tracked.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np
from scipy import stats
from scipy.sparse import csc_matrix, csr_matrix, identity
from scipy.sparse.linalg import splu

from .landscape import RESTRICTED, TO_OTHERS, LandscapeIndex, Transition, _as_array, valley
from .lattice import DomainError, InputError, TorusLattice
from .spin import Configuration, ModelParams

THREADS_ENV = "POTTSGATE_THREADS"
DEFAULT_MAX_STEPS = 10**8


def trial_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator owned by one trial; depends only on (seed, stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


def acceptance(delta, beta: float):
    """Metropolis acceptance exp(-beta * max(delta, 0))."""
    return np.exp(-beta * np.maximum(delta, 0))


def metropolis_probability(delta, beta: float, q: int, n_sites: int):
    """Kernel entry P(sigma, sigma') for a single-site move with energy change ``delta``."""
    return acceptance(delta, beta) / (q * n_sites)


# -- single-step chain -----------------------------------------------------------------


@dataclass
class ChainState:
    spins: np.ndarray
    lat: TorusLattice
    rng: np.random.Generator
    step: int = 0

    @classmethod
    def start(cls, sigma: Configuration, lat: TorusLattice, seed: int, stream: int = 0) -> "ChainState":
        return cls(np.array(sigma.spins, dtype=np.int64), lat, trial_rng(seed, stream))

    def configuration(self) -> Configuration:
        return Configuration.from_array(self.spins, self.lat)


def _delta(spins: np.ndarray, nbr: np.ndarray, v: int, s: int) -> int:
    own = spins[v]
    if s == own:
        return 0
    around = spins[nbr[v]]
    return int(np.count_nonzero(around == own) - np.count_nonzero(around == s))


def step(chain: ChainState, params: ModelParams) -> ChainState:
    """One Metropolis step: uniform proposal (v, s), accepted with exp(-beta [dH]^+)."""
    n = chain.lat.n_vertices
    k = int(chain.rng.integers(params.q * n))
    v, s = divmod(k, params.q)
    s += 1
    d = _delta(chain.spins, chain.lat.neighbor_table, v, s)
    if d <= 0 or chain.rng.random() < math.exp(-params.beta * d):
        chain.spins[v] = s
    chain.step += 1
    return chain


# -- trial reports ---------------------------------------------------------------------


@dataclass
class TrialReport:
    start: int
    absorbed: int | None
    absorbed_state: int | None
    time: int | None
    moves: int
    visited: tuple[bool, ...]
    censored: bool

    def as_dict(self) -> dict:
        return asdict(self)


class _Membership:
    """State-id lookups for target and watched sets."""

    def __init__(self, targets: Sequence, watched: Sequence):
        if not targets:
            raise InputError("at least one target set is required")
        self.target_of: dict[int, int] = {}
        for k, T in enumerate(targets):
            for x in _as_array(T).tolist():
                self.target_of.setdefault(x, k)
        self.watched_of: dict[int, list[int]] = {}
        for k, W in enumerate(watched):
            for x in _as_array(W).tolist():
                self.watched_of.setdefault(x, []).append(k)
        self.n_watched = len(watched)
        self.stop = set(self.target_of) | set(self.watched_of)
        self.checked_by: set[int] = set()


def _walk(start: int, members: _Membership, advance: Callable[[int], tuple[int, int]], max_moves: int) -> TrialReport:
    visited = [False] * members.n_watched
    state, time, moves = start, 0, 0
    while True:
        k = members.target_of.get(state)
        if k is not None:
            return TrialReport(start, k, state, time, moves, tuple(visited), False)
        for w in members.watched_of.get(state, ()):
            visited[w] = True
        if moves >= max_moves:
            return TrialReport(start, None, None, time, moves, tuple(visited), True)
        state, dt = advance(state)
        time += dt
        moves += 1


class MetropolisEngine:
    """Exact Metropolis chain on spin arrays; states are base-q ids (site 0 least significant)."""

    exact_time = True

    def __init__(self, lat: TorusLattice, params: ModelParams):
        self.lat = lat
        self.params = params
        self.powers = [params.q**v for v in range(lat.n_vertices)]

    def spins_of(self, state: int) -> np.ndarray:
        q = self.params.q
        out = np.empty(self.lat.n_vertices, dtype=np.int64)
        for v in range(self.lat.n_vertices):
            state, out[v] = divmod(state, q)
        return out + 1

    def run(self, start: int, members: _Membership, rng: np.random.Generator, max_moves: int) -> TrialReport:
        q, beta, n = self.params.q, self.params.beta, self.lat.n_vertices
        spins = self.spins_of(start)
        nbr = self.lat.neighbor_table
        spin_values = np.arange(1, q + 1)

        def advance(state: int) -> tuple[int, int]:
            around = spins[nbr]
            agree_new = (around[:, :, None] == spin_values).sum(axis=1)
            agree_old = (around == spins[:, None]).sum(axis=1)
            delta = agree_old[:, None] - agree_new
            prob = acceptance(delta, beta)
            prob[np.arange(n), spins - 1] = 0.0
            total = prob.sum()
            move_prob = total / (q * n)
            if move_prob <= 0:
                raise DomainError("chain is frozen: no proposal has positive probability")
            wait = int(rng.geometric(move_prob)) if move_prob < 1 else 1
            k = int(np.searchsorted(np.cumsum(prob.ravel()), rng.random() * total, side="right"))
            k = min(k, prob.size - 1)
            v, s = divmod(k, q)
            new = state + (s + 1 - spins[v]) * self.powers[v]
            spins[v] = s + 1
            return int(new), wait

        return _walk(start, members, advance, max_moves)


class LumpedEngine:
    """Jump chain on an enumerated landscape with the stable valleys crossed exactly.

    The lumped region is the union of the valleys (components of {H < level})
    of all stable states, minus the stable states and minus every target or
    watched state. From a region state the chain jumps straight to its exit
    point; from a stable state that is not a stop state it jumps to the first
    state outside the region reached before returning.
    """

    exact_time = False

    def __init__(self, idx: LandscapeIndex, beta: float, stop, level: int | None = None):
        if beta < 0:
            raise InputError("beta must be >= 0")
        self.idx, self.beta = idx, float(beta)
        self.level = idx.phi_stable if level is None else int(level)
        stop = _as_array(stop)
        self.stables = np.array(idx.stable_states, dtype=np.int64)
        valleys = reduce(np.union1d, [valley(idx, int(t), self.level) for t in self.stables])
        self.region = np.setdiff1d(valleys, np.union1d(stop, self.stables))
        self._region_set = set(self.region.tolist())
        self._jump_rows: dict[int, tuple[list[int], list[float]]] = {}
        self._exit_rows: dict[int, tuple[list[int], list[float]]] = {}
        self._build()

    def _weights(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        nb = self.idx.neighbors(states)
        e = self.idx.energies
        d = e[nb].astype(np.int64) - e[states].astype(np.int64)[:, None]
        return nb, acceptance(d, self.beta)

    def _build(self) -> None:
        R = self.region
        if R.size == 0:
            self._lu = None
            return
        nb, w = self._weights(R)
        p = w / w.sum(axis=1, keepdims=True)
        loc = np.searchsorted(R, nb)
        loc[loc >= R.size] = 0
        inside = R[loc] == nb
        rows = np.repeat(np.arange(R.size), nb.shape[1]).reshape(nb.shape)
        self.boundary = np.unique(nb[~inside])
        bloc = np.searchsorted(self.boundary, nb[~inside])
        P_RR = csr_matrix((p[inside], (rows[inside], loc[inside])), shape=(R.size, R.size))
        self._P_RB = csr_matrix((p[~inside], (rows[~inside], bloc)), shape=(R.size, self.boundary.size))
        self._lu = splu(csc_matrix(identity(R.size) - P_RR))

    def _in_region(self, state: int) -> int:
        k = int(np.searchsorted(self.region, state))
        return k if k < self.region.size and self.region[k] == state else -1

    @staticmethod
    def _as_row(states: np.ndarray, cum: np.ndarray) -> tuple[list[int], list[float]]:
        return states.tolist(), cum.tolist()

    def jump_row(self, state: int) -> tuple[list[int], list[float]]:
        row = self._jump_rows.get(state)
        if row is None:
            nb, w = self._weights(np.array([state]))
            nb, w = nb[0], w[0]
            keep = w > 0
            row = self._as_row(nb[keep], np.cumsum(w[keep]) / w[keep].sum())
            self._jump_rows[state] = row
        return row

    def _exit_from(self, f: np.ndarray, direct: dict[int, float], drop: int | None) -> tuple[np.ndarray, np.ndarray]:
        """Exit distribution for a start distribution ``f`` on the region plus direct boundary mass."""
        w = self._lu.solve(f, trans="T") if self._lu is not None and f.any() else np.zeros(0)
        mass: dict[int, float] = dict(direct)
        if w.size:
            out = self._P_RB.T @ w
            for k in np.flatnonzero(out > 0):
                x = int(self.boundary[k])
                mass[x] = mass.get(x, 0.0) + float(out[k])
        if drop is not None:
            mass.pop(drop, None)
        states = np.array(sorted(mass), dtype=np.int64)
        probs = np.array([mass[x] for x in states.tolist()])
        total = probs.sum()
        if not total > 0 or not np.isfinite(total):
            raise DomainError("exit probabilities underflow; beta too large for double precision")
        return states, np.cumsum(probs) / total

    def exit_row(self, state: int) -> tuple[list[int], list[float]]:
        row = self._exit_rows.get(state)
        if row is None:
            k = self._in_region(state)
            if k >= 0:
                f = np.zeros(self.region.size)
                f[k] = 1.0
                row = self._as_row(*self._exit_from(f, {}, None))
            else:
                nb, w = self._weights(np.array([state]))
                if not w[0].sum() > 0:
                    raise DomainError("exit probabilities underflow; beta too large for double precision")
                p = w[0] / w[0].sum()
                f = np.zeros(self.region.size)
                direct: dict[int, float] = {}
                for x, px in zip(nb[0].tolist(), p.tolist()):
                    j = self._in_region(x)
                    if j >= 0:
                        f[j] += px
                    elif px > 0:
                        direct[x] = direct.get(x, 0.0) + px
                row = self._as_row(*self._exit_from(f, direct, state))
            self._exit_rows[state] = row
        return row

    def _advance(self, rng: np.random.Generator, stop: set[int]) -> Callable[[int], tuple[int, int]]:
        lumped = (set(self.stables.tolist()) - stop) | self._region_set

        def advance(state: int) -> tuple[int, int]:
            states, cum = self.exit_row(state) if state in lumped else self.jump_row(state)
            k = min(bisect.bisect_right(cum, rng.random()), len(states) - 1)
            return states[k], 0

        return advance

    def run(self, start: int, members: _Membership, rng: np.random.Generator, max_moves: int) -> TrialReport:
        if id(self) not in members.checked_by:
            if np.isin(_as_array(list(members.stop)), self.region).any():
                raise InputError("engine was built for a different stop set")
            members.checked_by.add(id(self))
        rep = _walk(start, members, self._advance(rng, members.stop), max_moves)
        rep.time = None
        return rep

    def __getstate__(self) -> dict:
        state = dict(self.__dict__)
        for k in ("_lu", "_P_RB", "boundary"):
            state.pop(k, None)
        state["_jump_rows"], state["_exit_rows"] = {}, {}
        return state

    def __setstate__(self, state: dict) -> None:
        self.__dict__.update(state)
        self._build()


def run_trial(engine, start: int, targets: Sequence, watched: Sequence = (), *, seed: int = 0,
              stream: int = 0, max_moves: int = DEFAULT_MAX_STEPS) -> TrialReport:
    """Simulate from ``start`` until a target set is hit or ``max_moves`` moves elapse."""
    return engine.run(int(start), _Membership(targets, watched), trial_rng(seed, stream), max_moves)


# -- batches and parallel runs -----------------------------------------------------------


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def _run_block(args) -> list[TrialReport]:
    engine, start, targets, watched, seed, streams, max_moves = args
    members = _Membership(targets, watched)
    return [engine.run(start, members, trial_rng(seed, k), max_moves) for k in streams]


def run_trials(engine, start: int, targets: Sequence, watched: Sequence, n: int, *, seed: int,
               first_stream: int = 0, max_moves: int = DEFAULT_MAX_STEPS,
               threads: int | None = None) -> list[TrialReport]:
    """Run trials on streams first_stream .. first_stream+n-1; output is independent of threads."""
    threads = thread_count() if threads is None else max(1, int(threads))
    streams = list(range(first_stream, first_stream + n))
    if threads == 1 or n < 2 * threads:
        return _run_block((engine, start, targets, watched, seed, streams, max_moves))
    chunks = [streams[i::threads] for i in range(threads)]
    with ProcessPoolExecutor(threads) as pool:
        parts = list(pool.map(_run_block, [(engine, start, targets, watched, seed, c, max_moves) for c in chunks]))
    by_stream = {}
    for c, reps in zip(chunks, parts):
        by_stream.update(zip(c, reps))
    return [by_stream[k] for k in streams]


# -- estimators --------------------------------------------------------------------------


def wilson_interval(hits: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(hits), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class Estimate:
    beta: float
    label: str
    hits: int
    n: int
    censored: int = 0
    rejected: int = 0

    @property
    def usable(self) -> bool:
        return self.n > 0

    @property
    def value(self) -> float:
        return self.hits / self.n if self.n else float("nan")

    @property
    def stderr(self) -> float:
        if not self.n:
            return float("nan")
        p = self.value
        return math.sqrt(p * (1 - p) / self.n)

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.hits, self.n) if self.n else (float("nan"), float("nan"))

    @property
    def upper_bound(self) -> float:
        """Rule-of-three 95% upper bound, used when no hit was observed."""
        return 3.0 / self.n if self.n else float("nan")

    def as_dict(self) -> dict:
        lo, hi = self.ci
        return {
            "beta": self.beta, "label": self.label, "estimate": self.value, "stderr": self.stderr,
            "n": self.n, "hits": self.hits, "censored": self.censored, "rejected": self.rejected,
            "ci_low": lo, "ci_high": hi, "usable": self.usable,
        }


CSV_FIELDS = ["beta", "label", "estimate", "stderr", "n", "hits", "censored", "rejected", "ci_low", "ci_high", "usable"]


@dataclass
class EstimatorReport:
    kind: str
    estimates: list[Estimate]
    slope: float | None = None
    slope_stderr: float | None = None
    extra: dict = field(default_factory=dict)

    def labels(self) -> list[str]:
        return list(dict.fromkeys(e.label for e in self.estimates))

    def series(self, label: str) -> list[Estimate]:
        return sorted((e for e in self.estimates if e.label == label), key=lambda e: e.beta)

    def non_decreasing(self, label: str) -> bool:
        """Consecutive estimates never drop below the previous one beyond their 95% intervals."""
        s = [e for e in self.series(label) if e.usable]
        return all(b.ci[1] >= a.ci[0] for a, b in zip(s, s[1:]))

    def non_increasing(self, label: str) -> bool:
        s = [e for e in self.series(label) if e.usable]
        return all(b.ci[0] <= a.ci[1] for a, b in zip(s, s[1:]))

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "estimates": [e.as_dict() for e in self.estimates]}
        if self.slope is not None:
            out["slope"] = self.slope
            out["slope_stderr"] = self.slope_stderr
        out.update(self.extra)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for e in self.estimates:
            d = e.as_dict()
            w.writerow({k: (f"{d[k]:.10g}" if isinstance(d[k], float) else d[k]) for k in CSV_FIELDS})
        return buf.getvalue()


def _transition_targets(idx: LandscapeIndex, tr: Transition) -> tuple[list[np.ndarray], int | None]:
    """Target sets and the index of the accepted target (None = accept any)."""
    others = [t for t in range(1, idx.q + 1) if t != tr.source]
    if tr.kind == TO_OTHERS:
        return [np.array([idx.stable(t)]) for t in others], None
    if tr.kind == RESTRICTED:
        return [np.array([idx.stable(t)]) for t in others], others.index(tr.target)
    return [np.array([idx.stable(tr.target)])], None


def _check_grid(betas: Sequence[float], trials: int) -> list[float]:
    betas = [float(b) for b in betas]
    if not betas or any(not b >= 0 for b in betas):
        raise InputError("beta values must be >= 0")
    if int(trials) != trials or trials < 1:
        raise InputError("trials must be a positive integer")
    return betas


def _lumped(idx: LandscapeIndex, beta: float, targets, watched) -> LumpedEngine:
    return LumpedEngine(idx, beta, reduce(np.union1d, [_as_array(x) for x in list(targets) + list(watched)]))


def estimate_gate_crossing(idx: LandscapeIndex, transition: Transition, families: dict[str, np.ndarray],
                           betas: Sequence[float], trials: int, *, seed: int = 0,
                           max_moves: int = DEFAULT_MAX_STEPS, threads: int | None = None) -> EstimatorReport:
    """Per family and beta, the frequency of visiting the family before absorption.

    For a restricted transition, trials absorbed at another stable state than
    the target are rejected (conditioning on reaching the target first).
    """
    betas = _check_grid(betas, trials)
    labels = list(families)
    watched = [_as_array(families[k]) for k in labels]
    targets, accept = _transition_targets(idx, transition)
    start = idx.stable(transition.source)
    out = []
    for b in betas:
        reps = run_trials(_lumped(idx, b, targets, watched), start, targets, watched, trials,
                          seed=seed, max_moves=max_moves, threads=threads)
        ok = [r for r in reps if not r.censored and (accept is None or r.absorbed == accept)]
        censored = sum(r.censored for r in reps)
        rejected = len(reps) - censored - len(ok)
        for k, lab in enumerate(labels):
            out.append(Estimate(b, lab, sum(r.visited[k] for r in ok), len(ok), censored, rejected))
    return EstimatorReport("gate_crossing", out, extra={"transition": transition.describe()})


def _log_slope(estimates: list[Estimate]) -> tuple[float | None, float | None]:
    pts = [(e.beta, math.log(e.value)) for e in estimates if e.usable and e.hits > 0]
    if len(pts) < 3:
        return None, None
    fit = stats.linregress(*zip(*pts))
    return float(fit.slope), float(fit.stderr)


def estimate_tube_exit(idx: LandscapeIndex, r: int, s: int, exit_states, betas: Sequence[float], trials: int, *,
                       seed: int = 0, max_moves: int = DEFAULT_MAX_STEPS, threads: int | None = None) -> EstimatorReport:
    """Frequency of touching ``exit_states`` before reaching s, per beta, with a log-linear slope.

    With q > 2 the run stops at any other stable state and such trials are
    rejected, matching the conditioning of the restricted tube.
    """
    betas = _check_grid(betas, trials)
    tr = Transition(RESTRICTED, r, s)
    targets, accept = _transition_targets(idx, tr)
    watched = [_as_array(exit_states)]
    out = []
    for b in betas:
        reps = run_trials(_lumped(idx, b, targets, watched), idx.stable(r), targets, watched, trials,
                          seed=seed, max_moves=max_moves, threads=threads)
        ok = [x for x in reps if not x.censored and x.absorbed == accept]
        censored = sum(x.censored for x in reps)
        out.append(Estimate(b, "tube_exit", sum(x.visited[0] for x in ok), len(ok), censored,
                            len(reps) - censored - len(ok)))
    slope, err = _log_slope(out)
    zero = [e.beta for e in out if e.usable and e.hits == 0]
    extra = {"zero_exit_betas": zero, "upper_bounds": {str(e.beta): e.upper_bound for e in out if e.beta in zero}}
    return EstimatorReport("tube_exit", out, slope, err, extra)


def estimate_stable_split(idx: LandscapeIndex, r: int, beta: float, trials: int, *, seed: int = 0,
                          max_moves: int = DEFAULT_MAX_STEPS, threads: int | None = None,
                          batch: int = 1000) -> EstimatorReport:
    """Distribution of the first stable state hit from r, collected until ``trials`` absorbed runs."""
    if idx.q <= 2:
        raise InputError("the stable split needs q > 2")
    _check_grid([beta], trials)
    others = [t for t in range(1, idx.q + 1) if t != r]
    targets = [np.array([idx.stable(t)]) for t in others]
    engine = _lumped(idx, beta, targets, [])
    counts = np.zeros(len(others), dtype=np.int64)
    censored, next_stream = 0, 0
    while counts.sum() < trials:
        n = min(batch, int(trials - counts.sum()))
        for rep in run_trials(engine, idx.stable(r), targets, [], n, seed=seed, first_stream=next_stream,
                              max_moves=max_moves, threads=threads):
            if rep.censored:
                censored += 1
            else:
                counts[rep.absorbed] += 1
        next_stream += n
    total = int(counts.sum())
    test = stats.chisquare(counts)
    est = [Estimate(float(beta), f"first_hit_{t}", int(c), total, censored) for t, c in zip(others, counts)]
    return EstimatorReport("stable_split", est, extra={
        "chi2": float(test.statistic), "p_value": float(test.pvalue), "expected_share": 1.0 / (idx.q - 1),
    })
