import math
import pickle

import numpy as np
import pytest
from scipy import stats

import oracles
from pottsgate.geom import family_states
from pottsgate.landscape import RESTRICTED, TO_OTHERS, Transition
from pottsgate.lattice import DomainError, InputError
from pottsgate.simulate import (
    CSV_FIELDS, THREADS_ENV, ChainState, Estimate, EstimatorReport, LumpedEngine, MetropolisEngine,
    acceptance, estimate_gate_crossing, estimate_stable_split, estimate_tube_exit, metropolis_probability,
    run_trial, run_trials, step, thread_count, trial_rng, wilson_interval,
)
from pottsgate.spin import Configuration, ModelParams


def _spins(idx, state):
    return tuple(int(v) for v in idx.config(int(state)).spins)


class TestKernel:
    def test_beta_zero_accepts(self):
        assert np.all(acceptance(np.array([-4, 0, 2, 4]), 0.0) == 1.0)

    def test_uphill_four_at_beta_one(self):
        assert acceptance(4, 1.0) == pytest.approx(math.exp(-4), rel=1e-15)

    def test_downhill_always(self):
        assert acceptance(-2, 5.0) == 1.0

    def test_entry(self):
        # q=2 on 12 sites: 1/24 times the acceptance
        assert metropolis_probability(2, 1.0, 2, 12) == pytest.approx(math.exp(-2) / 24)

    def test_detailed_balance_all_pairs(self, idx234):
        beta = 1.3
        e = idx234.energies.astype(float)
        x = np.repeat(np.arange(idx234.n_states), idx234.neighbors([0]).shape[1])
        y = idx234.neighbors(np.arange(idx234.n_states)).ravel()
        d = e[y] - e[x]
        lhs = np.exp(-beta * e[x]) * metropolis_probability(d, beta, 2, 12)
        rhs = np.exp(-beta * e[y]) * metropolis_probability(-d, beta, 2, 12)
        assert np.allclose(lhs, rhs, rtol=1e-12, atol=0)

    def test_oracle_rows_sum_to_one(self):
        row = oracles.metropolis_row(oracles.grid(["2111", "2111", "1111"]), 3, 3, 4, 0.7)
        assert sum(row.values()) == pytest.approx(1.0, abs=1e-15)


class TestStep:
    def _sample(self, lat, sigma, beta, n, q=2):
        params = ModelParams(q, beta)
        counts = {}
        for k in range(n):
            chain = step(ChainState.start(sigma, lat, seed=11, stream=k), params)
            key = tuple(int(v) for v in chain.spins)
            counts[key] = counts.get(key, 0) + 1
        return counts

    @pytest.mark.parametrize("beta", [0.0, 1.0])
    def test_one_step_law(self, lat34, beta):
        sigma = Configuration.constant(lat34, 1)
        n = 6000
        counts = self._sample(lat34, sigma, beta, n)
        law = oracles.metropolis_row(sigma.spins, 2, 3, 4, beta)
        keys = sorted(law)
        obs = np.array([counts.get(k, 0) for k in keys])
        exp = np.array([law[k] * n for k in keys])
        assert set(counts) <= set(law)
        assert stats.chisquare(obs, exp).pvalue > 1e-3

    def test_step_counter(self, lat34):
        chain = ChainState.start(Configuration.constant(lat34, 1), lat34, seed=0)
        for _ in range(5):
            step(chain, ModelParams(2, 1.0))
        assert chain.step == 5


class TestTrials:
    def test_start_in_target(self, lat34, idx234):
        eng = MetropolisEngine(lat34, ModelParams(2, 1.0))
        rep = run_trial(eng, idx234.stable(1), [[idx234.stable(1)]], [[5]])
        assert rep.time == 0 and rep.absorbed == 0 and rep.visited == (False,)

    def test_censored(self, lat34, idx234):
        eng = MetropolisEngine(lat34, ModelParams(2, 1.0))
        rep = run_trial(eng, idx234.stable(1), [[idx234.stable(2)]], max_moves=3)
        assert rep.censored and rep.absorbed is None and rep.moves == 3

    def test_time_counts_rejections(self, lat34, idx234):
        # from constant 1 only uphill flips exist, so waiting times are long at beta = 2
        eng = MetropolisEngine(lat34, ModelParams(2, 2.0))
        rep = run_trial(eng, idx234.stable(1), [[idx234.stable(2)]], max_moves=1, seed=3)
        assert rep.moves == 1 and rep.time >= 1

    def test_no_targets(self, lat34, idx234):
        with pytest.raises(InputError):
            run_trial(MetropolisEngine(lat34, ModelParams(2, 1.0)), 0, [])

    def test_reproducible(self, idx234):
        eng = LumpedEngine(idx234, 1.0, [idx234.stable(2)])
        a = run_trials(eng, idx234.stable(1), [[idx234.stable(2)]], [], 50, seed=7)
        b = run_trials(eng, idx234.stable(1), [[idx234.stable(2)]], [], 50, seed=7)
        assert a == b

    def test_independent_of_threads(self, idx234):
        P = family_states(idx234, "P_bar", 1, 2)
        stop = np.union1d(P, [idx234.stable(2)])
        eng = LumpedEngine(idx234, 1.0, stop)
        a = run_trials(eng, idx234.stable(1), [[idx234.stable(2)]], [P], 40, seed=5, threads=1)
        b = run_trials(eng, idx234.stable(1), [[idx234.stable(2)]], [P], 40, seed=5, threads=2)
        assert a == b

    def test_lumped_stop_mismatch(self, idx234):
        eng = LumpedEngine(idx234, 1.0, [idx234.stable(2)])
        inside = int(eng.region[0])
        with pytest.raises(InputError):
            run_trial(eng, idx234.stable(1), [[idx234.stable(2)]], [[inside]])

    def test_lumped_pickles(self, idx234):
        eng = LumpedEngine(idx234, 1.0, [idx234.stable(2)])
        clone = pickle.loads(pickle.dumps(eng))
        a = run_trial(eng, idx234.stable(1), [[idx234.stable(2)]], seed=1)
        b = run_trial(clone, idx234.stable(1), [[idx234.stable(2)]], seed=1)
        assert a == b

    def test_negative_beta(self, idx234):
        with pytest.raises(InputError):
            LumpedEngine(idx234, -1.0, [idx234.stable(2)])

    def test_underflow_reported(self, idx234):
        eng = LumpedEngine(idx234, 400.0, [idx234.stable(2)])
        with pytest.raises(DomainError):
            run_trial(eng, idx234.stable(1), [[idx234.stable(2)]])

    def test_thread_env(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert thread_count() == 3
        monkeypatch.setenv(THREADS_ENV, "many")
        with pytest.raises(InputError):
            thread_count()

    def test_streams_differ(self):
        assert trial_rng(1, 0).random() != trial_rng(1, 1).random()


@pytest.fixture(scope="module")
def setup(idx234):
    P = family_states(idx234, "P_bar", 1, 2)
    exact = oracles.hit_first_probability(2, 3, 4, 1.0, (1,) * 12, [_spins(idx234, x) for x in P], [(2,) * 12])
    return P, exact


class TestEnginesAgainstExactLaw:
    """Crossing frequency of P_bar before 2 from 1 against the exact absorption probability."""

    def test_exact_value(self, setup):
        # frozen from the dense linear solve
        assert setup[1] == pytest.approx(0.8241476769675543, rel=1e-9)

    @pytest.mark.parametrize("engine", ["metropolis", "lumped"])
    def test_engine_frequency(self, idx234, lat34, setup, engine):
        P, exact = setup
        n = 3000 if engine == "lumped" else 400
        stop = np.union1d(P, [idx234.stable(2)])
        eng = (LumpedEngine(idx234, 1.0, stop) if engine == "lumped"
               else MetropolisEngine(lat34, ModelParams(2, 1.0)))
        reps = run_trials(eng, idx234.stable(1), [[idx234.stable(2)]], [P], n, seed=21)
        hits = sum(r.visited[0] for r in reps)
        assert abs(hits / n - exact) < 4 * math.sqrt(exact * (1 - exact) / n)


class TestEstimates:
    def test_wilson_matches_formula(self):
        z, n, k = stats.norm.ppf(0.975), 40, 9
        p = k / n
        c = (p + z * z / (2 * n)) / (1 + z * z / n)
        h = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
        assert wilson_interval(k, n) == pytest.approx((c - h, c + h), rel=1e-9)

    def test_estimate_fields(self):
        e = Estimate(1.0, "x", 0, 100)
        assert e.value == 0 and e.upper_bound == 0.03 and e.usable
        assert not Estimate(1.0, "x", 0, 0).usable

    def test_csv_header(self):
        rep = EstimatorReport("k", [Estimate(1.0, "a", 3, 10), Estimate(2.0, "a", 8, 10)])
        lines = rep.to_csv().splitlines()
        assert lines[0].split(",") == CSV_FIELDS and len(lines) == 3
        assert rep.non_decreasing("a")


class TestEstimators:
    def test_gate_crossing_beta_zero_below_one(self, idx234):
        fam = {"P_bar": family_states(idx234, "P_bar", 1, 2)}
        rep = estimate_gate_crossing(idx234, Transition(RESTRICTED, 1, 2), fam, [0.0], 300, seed=1)
        (e,) = rep.estimates
        # the exact beta = 0 value is 0.958, a proper-subset gate is sometimes bypassed
        assert e.n == 300 and e.hits < 300

    def test_restricted_rejects_other_stable(self, idx334):
        fam = {"P_bar": family_states(idx334, "P_bar", 1, 2)}
        rep = estimate_gate_crossing(idx334, Transition(RESTRICTED, 1, 2), fam, [1.0], 200, seed=2)
        (e,) = rep.estimates
        assert e.rejected > 0 and e.n + e.rejected + e.censored == 200

    def test_to_others_accepts_all(self, idx334):
        fam = {"P_bar": family_states(idx334, "P_bar", 1, 2)}
        rep = estimate_gate_crossing(idx334, Transition(TO_OTHERS, 1), fam, [1.0], 100, seed=2)
        assert rep.estimates[0].n == 100

    def test_tube_exit_slope(self, idx234):
        from pottsgate.cycles import restricted_tube

        npb = restricted_tube(idx234, 1, 2).nonprincipal_boundary(idx234)
        rep = estimate_tube_exit(idx234, 1, 2, npb, [0.0, 1.0, 2.0, 3.0], 300, seed=4)
        assert rep.estimates[0].value > 0
        assert rep.slope is not None and rep.slope < 0
        assert rep.non_increasing("tube_exit")

    def test_split(self, idx334):
        rep = estimate_stable_split(idx334, 1, 2.0, 500, seed=3, batch=200)
        assert sum(e.hits for e in rep.estimates) == 500
        assert rep.extra["expected_share"] == 0.5 and rep.extra["p_value"] > 1e-3

    def test_split_needs_three_spins(self, idx234):
        with pytest.raises(InputError):
            estimate_stable_split(idx234, 1, 1.0, 10)

    @pytest.mark.parametrize("betas,trials", [([], 10), ([-1.0], 10), ([1.0], 0), ([1.0], 2.5)])
    def test_bad_grid(self, idx234, betas, trials):
        with pytest.raises(InputError):
            estimate_tube_exit(idx234, 1, 2, [5], betas, trials)
