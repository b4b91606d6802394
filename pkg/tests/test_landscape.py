from collections import deque

import numpy as np
import pytest

from oracles import bottleneck_heights, energy, grid, neighbor_lists, sublevel_component
from pottsgate.geom import family_states
from pottsgate.landscape import (
    RESTRICTED, TO_OTHERS, TO_TARGET, LandscapeIndex, ResourceCapError, Transition, TransitionGraph,
    claimed_gate_union, essential_saddles, is_gate, is_minimal_gate, restricted_graph, saddle_set,
    valley, verify_gate_theorems,
)
from pottsgate.lattice import InputError, TorusLattice
from pottsgate.spin import Configuration


def _ids(idx, configs):
    return np.array(sorted(idx.state_of(Configuration(c, idx.lat.K, idx.lat.L)) for c in configs))


class TestIndex:
    def test_state_roundtrip(self, idx334):
        sigma = Configuration.from_text("1231\n1111\n3332")
        assert idx334.config(idx334.state_of(sigma)) == sigma

    def test_energies_match_oracle(self, idx234):
        rng = np.random.default_rng(3)
        for x in rng.integers(0, idx234.n_states, 100):
            assert idx234.energies[x] == energy(idx234.config(int(x)).spins, 3, 4)

    def test_stables_are_argmin(self, idx334):
        assert sorted(idx334.argmin_states().tolist()) == sorted(idx334.stable_states)

    def test_cap(self):
        with pytest.raises(ResourceCapError):
            LandscapeIndex(2, TorusLattice(6, 7))

    def test_neighbors_are_single_flips(self, idx334):
        x = idx334.stable(1)
        nb = idx334.neighbors([x])[0]
        # 12 sites times 2 other spins
        assert len(set(nb.tolist())) == 24
        assert all(np.count_nonzero(idx334.digits[y] != idx334.digits[x]) == 1 for y in nb)


class TestCommunicationHeight:
    @pytest.mark.parametrize("q,K,L", [(2, 3, 4), (3, 3, 4), (2, 4, 5)])
    def test_matches_bottleneck_oracle(self, q, K, L):
        idx = LandscapeIndex(q, TorusLattice(K, L))
        one = (1,) * (K * L)
        targets = [(s,) * (K * L) for s in range(2, q + 1)]
        oracle = bottleneck_heights(q, K, L, one, targets)
        for s in range(2, q + 1):
            assert idx.comm_height(idx.stable(1), idx.stable(s)) == oracle[targets[s - 2]]

    def test_formula_values(self, idx234, idx245):
        # 2K + 2 + H(1): 8 - 24 and 10 - 40
        assert idx234.phi_stable == -16
        assert idx245.phi_stable == -30

    def test_symmetric_and_bounded(self, idx334):
        a, b = idx334.stable(1), idx334.stable(3)
        assert idx334.comm_height(a, b) == idx334.comm_height(b, a)
        x = idx334.state_of(Configuration.from_text("1231\n1111\n3332"))
        assert idx334.comm_height(x, b) >= max(idx334.energies[x], idx334.energies[b])


class TestSaddlesAndValleys:
    def test_saddle_count_234(self, idx234):
        comp = sublevel_component(2, 3, 4, (1,) * 12, -16)
        oracle = sum(1 for e in comp.values() if e == -16)
        assert oracle == 330
        assert saddle_set(idx234, 1, 2).size == oracle

    def test_saddles_at_phi(self, idx245):
        S = saddle_set(idx245, 1, 2)
        assert S.size == 2408  # oracle component count at level Phi
        assert set(idx245.energies[S].tolist()) == {-30}

    def test_valley_sizes(self, idx234, idx334, idx245):
        # oracle: component of the constant in {H < Phi}
        assert valley(idx234, idx234.stable(1), -16).size == 41
        assert valley(idx334, idx334.stable(3), -16).size == 129
        assert valley(idx245, idx245.stable(2), -30).size == 356

    def test_restricted_graph_drops_other_valley(self, idx334):
        g = restricted_graph(idx334, 1, 2)
        v3 = valley(idx334, idx334.stable(3), -16)
        assert not np.isin(v3, g.nodes).any()
        assert idx334.stable(1) in g.nodes and idx334.stable(2) in g.nodes

    def test_restricted_saddle_count(self, idx334):
        # oracle: states at Phi reachable from 1 inside {H <= Phi} minus the valley of 3
        v3 = set(sublevel_component(3, 3, 4, (3,) * 12, -16, strict=True))
        nb = neighbor_lists(3, 4)
        seen, todo = {(1,) * 12}, deque([(1,) * 12])
        while todo:
            x = todo.popleft()
            for v in range(12):
                for s in (1, 2, 3):
                    y = x[:v] + (s,) + x[v + 1:]
                    if y not in seen and y not in v3 and energy(y, 3, 4) <= -16:
                        seen.add(y)
                        todo.append(y)
        oracle = sum(1 for x in seen if energy(x, 3, 4) == -16)
        assert TransitionGraph(idx334, Transition(RESTRICTED, 1, 2)).saddles.size == oracle == 1188


class TestGates:
    def test_empty_is_not_gate(self, idx234):
        rep = is_gate(idx234, [], Transition(RESTRICTED, 1, 2))
        assert not rep.is_gate
        assert rep.witnesses[0]["kind"] == "avoiding_path"

    def test_saddle_set_is_gate(self, idx234):
        assert is_gate(idx234, saddle_set(idx234, 1, 2), Transition(TO_TARGET, 1, 2)).is_gate

    def test_p_bar_minimal(self, idx245):
        W = family_states(idx245, "P_bar", 1, 2)
        rep = is_minimal_gate(idx245, W, Transition(RESTRICTED, 1, 2), "P_bar")
        assert rep.is_gate and rep.is_minimal

    def test_union_not_minimal(self, idx245):
        W = np.union1d(family_states(idx245, "P_bar", 1, 2), family_states(idx245, "P_tilde", 1, 2))
        rep = is_minimal_gate(idx245, W, Transition(RESTRICTED, 1, 2))
        assert rep.is_gate and not rep.is_minimal
        assert rep.witnesses[0]["kind"] == "redundant_state"

    def test_non_saddle_rejected(self, idx234):
        with pytest.raises(InputError):
            is_gate(idx234, [idx234.stable(1)], Transition(RESTRICTED, 1, 2))

    def test_minimality_literal_form(self, idx245):
        # each state of a minimal gate reconnects source and target when restored
        tg = TransitionGraph(idx245, Transition(RESTRICTED, 1, 2))
        W = family_states(idx245, "Q_tilde", 1, 2)
        for eta in W[:10]:
            assert not is_gate(idx245, np.setdiff1d(W, [eta]), tg).is_gate

    def test_union_over_targets_q3(self, idx334):
        W = np.union1d(family_states(idx334, "P_bar", 1, 2), family_states(idx334, "P_bar", 1, 3))
        rep = is_minimal_gate(idx334, W, Transition(TO_OTHERS, 1))
        assert rep.is_gate and rep.is_minimal

    def test_transition_validation(self):
        with pytest.raises(InputError):
            Transition(RESTRICTED, 1, 1)
        with pytest.raises(InputError):
            Transition("sideways", 1, 2)


class TestEssentialSaddles:
    def test_245_equals_union(self, idx245):
        res = essential_saddles(idx245, Transition(RESTRICTED, 1, 2))
        assert res.inconclusive.size == 0
        assert np.array_equal(res.essential, claimed_gate_union(idx245, Transition(RESTRICTED, 1, 2)))
        assert res.essential.size == 560

    def test_234_contains_l_trominoes(self, idx234):
        res = essential_saddles(idx234, Transition(RESTRICTED, 1, 2))
        union = claimed_gate_union(idx234, Transition(RESTRICTED, 1, 2))
        extra = np.setdiff1d(res.essential, union)
        assert union.size == 120 and np.isin(union, res.essential).all()
        # 48 L-tromino placements per background, both backgrounds
        assert extra.size == 96
        shapes = {tuple(sorted(np.bincount(idx234.digits[x], minlength=2).tolist())) for x in extra}
        assert shapes == {(3, 9)}

    def test_l_tromino_certificate(self):
        # T joins 1 and 2 through {H < Phi}, and dropping the L-tromino breaks it
        T = [grid(r) for r in (
            ["2111", "2211", "1111"], ["2211", "2211", "1111"], ["2211", "2211", "2111"],
            ["2221", "2211", "2211"], ["2221", "2221", "2211"],
        )]
        assert all(energy(t, 3, 4) == -16 for t in T)

        def connects(allowed):
            nb = neighbor_lists(3, 4)
            start, goal = (1,) * 12, (2,) * 12
            seen, todo = {start}, deque([start])
            while todo:
                x = todo.popleft()
                if x == goal:
                    return True
                for v in range(12):
                    y = x[:v] + (3 - x[v],) + x[v + 1:]
                    if y not in seen and (energy(y, 3, 4) < -16 or y in allowed):
                        seen.add(y)
                        todo.append(y)
            return False

        assert connects(set(T))
        for k in range(len(T)):
            assert not connects(set(T[:k] + T[k + 1:]))

    def test_subset_of_saddles(self, idx334):
        tr = Transition(TO_TARGET, 1, 2)
        res = essential_saddles(idx334, tr)
        assert np.isin(res.essential, TransitionGraph(idx334, tr).saddles).all()
        assert res.essential.size + res.unessential.size + res.inconclusive.size == res.stats["saddles"]


class TestVerifyGateTheorems:
    def test_mingatescond_245(self, idx245):
        rep = verify_gate_theorems(idx245, "mingatescond")
        assert rep.passed and len(rep.checks) == 9  # P, Q, H(1) bar and tilde, W(2,1..3)

    def test_warns_on_empty_ranges(self, idx334):
        rep = verify_gate_theorems(idx334, "mingatesNOcond")
        assert rep.passed
        assert any("H families" in w for w in rep.warnings)

    def test_unknown_theorem(self, idx234):
        with pytest.raises(InputError):
            verify_gate_theorems(idx234, "nosuch")

    def test_refuses_degenerate(self, degenerate_lattice):
        idx = LandscapeIndex(2, degenerate_lattice(2, 4))
        with pytest.raises(InputError):
            verify_gate_theorems(idx, "mingatescond")
