import numpy as np
import pytest

import oracles
from pottsgate.cycles import (
    EXTENDED, NONTRIVIAL, TRIVIAL, TUBE_THEOREMS, cycle_path_of, family_principal_boundary,
    initial_cycle, is_cycle, is_vtj, plateau, make_cycle, maximal_cycle_partition, phi_by_sweep, phi_to_target,
    principal_boundary, relevant_cycle, restricted_tube, tube_for_targets, tube_r_to_s, typical_tube,
    verify_principal_boundary_lemmas, verify_tube_theorems,
)
from pottsgate.landscape import valley
from pottsgate.lattice import DomainError, InputError

def _const(q, n):
    return (q,) * n

def _sid(idx, spins):
    # base-q number with digit spin-1 at position v
    return int(sum((s - 1) * idx.q ** v for v, s in enumerate(spins)))

class TestCycles:
    def test_valley_is_cycle(self, idx234):
        phi = idx234.phi_stable
        assert is_cycle(idx234, valley(idx234, idx234.stable(1), phi))

    def test_singleton_is_cycle(self, idx234):
        assert is_cycle(idx234, [5])

    def test_bottom_with_one_flip_is_not_cycle(self, idx234):
        # the flipped state sits at -20, as do the other single flips on the boundary
        r = idx234.stable(1)
        assert not is_cycle(idx234, [r, int(idx234.neighbors([r])[0, 0])])

    def test_disconnected_is_not_cycle(self, idx234):
        assert not is_cycle(idx234, [idx234.stable(1), idx234.stable(2)])

    def test_principal_of_nontrivial(self, idx234):
        C = make_cycle(idx234, valley(idx234, idx234.stable(1), idx234.phi_stable), NONTRIVIAL)
        e = idx234.energies[C.principal]
        assert (e == idx234.energies[C.boundary].min()).all()
        # lowest exit of the valley of 1 sits at Phi = -24 + 8
        assert int(e[0]) == -16

    def test_bad_kind(self, idx234):
        with pytest.raises(InputError):
            make_cycle(idx234, [0], "bogus")

class TestPhi:
    def test_relaxation_matches_sweep_and_oracle(self, idx234):
        A = [idx234.stable(2)]
        cap = idx234.phi_stable
        a, b = phi_to_target(idx234, A, cap), phi_by_sweep(idx234, A, cap)
        assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.values, b.values)
        ref = oracles.phi_to_set(2, 3, 4, [_const(2, 12)], cap)
        got = {int(n): int(v) for n, v in zip(a.nodes, a.values) if v <= cap}
        assert got == {_sid(idx234, t): v for t, v in ref.items()}

    def test_lookup_above_cap(self, idx234):
        m = phi_to_target(idx234, [idx234.stable(2)], idx234.phi_stable)
        assert m.lookup([idx234.stable(1)])[0] == -16
        with pytest.raises(KeyError):
            m[int(np.argmax(idx234.energies))]

    def test_empty_target(self, idx234):
        with pytest.raises(InputError):
            phi_to_target(idx234, [])

class TestInitialAndRelevant:
    def test_initial_cycle_of_stable_is_valley(self, idx234):
        r, s = idx234.stable(1), idx234.stable(2)
        C = initial_cycle(idx234, r, [s])
        assert C.kind == NONTRIVIAL
        assert np.array_equal(C.members, valley(idx234, r, idx234.phi_stable))

    def test_initial_cycle_in_target(self, idx234):
        s = idx234.stable(2)
        assert initial_cycle(idx234, s, [s]).kind == TRIVIAL

    def test_relevant_cycle(self, idx234):
        # q=2 energies are even, so the gap is 2 and the threshold is Phi
        r, s = idx234.stable(1), idx234.stable(2)
        rc = relevant_cycle(idx234, r, [s])
        assert np.array_equal(rc, idx234.component(r, idx234.phi_stable))

@pytest.fixture(scope="module")
def tube(idx234):
    return typical_tube(idx234, idx234.stable(1), [idx234.stable(2)])


class TestPartition:
    def test_partition_covers_disjointly(self, idx234, tube):
        parts = tube.partition(idx234)
        allm = np.concatenate([c.members for c in parts])
        assert len(allm) == len(np.unique(allm))
        assert np.array_equal(np.sort(allm), tube.states)

    def test_parts_are_cycles(self, idx234, tube):
        for c in tube.partition(idx234):
            if c.kind != EXTENDED:
                assert is_cycle(idx234, c.members)
            else:
                assert len(np.unique(idx234.energies[c.members])) == 1

    def test_principal_is_lower_than_top(self, idx234, tube):
        for c in tube.partition(idx234):
            p = principal_boundary(idx234, c)
            if c.kind == NONTRIVIAL:
                assert (idx234.energies[p] == idx234.energies[c.boundary].min()).all()

    def test_empty(self, idx234):
        with pytest.raises(InputError):
            maximal_cycle_partition(idx234, [])

class TestTubes:
    def test_unrestricted_matches_oracle(self, idx234):
        got = typical_tube(idx234, idx234.stable(1), [idx234.stable(2)])
        ref = oracles.typical_tube(2, 3, 4, _const(1, 12), [_const(2, 12)])
        assert set(got.states.tolist()) == {_sid(idx234, t) for t in ref}
        assert got.states.size == 382

    def test_to_others_matches_oracle(self, idx334):
        got = typical_tube(idx334, idx334.stable(1), [idx334.stable(2), idx334.stable(3)])
        ref = oracles.typical_tube(3, 3, 4, _const(1, 12), [_const(2, 12), _const(3, 12)])
        assert set(got.states.tolist()) == {_sid(idx334, t) for t in ref}

    def test_restricted_stables_matches_oracle(self, idx334):
        got = restricted_tube(idx334, 1, 2, avoid="stables")
        ref = oracles.typical_tube(3, 3, 4, _const(1, 12), [_const(2, 12)], forbidden=[_const(3, 12)])
        assert set(got.states.tolist()) == {_sid(idx334, t) for t in ref}

    def test_restricted_valleys_matches_oracle(self, idx334):
        phi = idx334.phi_stable
        forb = oracles.sublevel_component(3, 3, 4, _const(3, 12), phi, strict=True)
        got = restricted_tube(idx334, 1, 2)
        ref = oracles.typical_tube(3, 3, 4, _const(1, 12), [_const(2, 12)], forbidden=forb)
        assert set(got.states.tolist()) == {_sid(idx334, t) for t in ref}
        assert not np.isin(got.states, valley(idx334, idx334.stable(3), phi)).any()

    def test_avoid_modes_coincide_for_two_spins(self, idx234):
        a = restricted_tube(idx234, 1, 2, "valleys").states
        b = restricted_tube(idx234, 1, 2, "stables").states
        assert np.array_equal(a, b)

    def test_bad_avoid(self, idx234):
        with pytest.raises(InputError):
            restricted_tube(idx234, 1, 2, "walls")

    def test_forbidden_source(self, idx234):
        with pytest.raises(InputError):
            typical_tube(idx234, idx234.stable(1), [idx234.stable(2)], forbidden=[idx234.stable(1)])

    def test_unions_equal_direct(self, idx334):
        assert tube_for_targets(idx334, 1).equal
        assert tube_r_to_s(idx334, 1, 2).equal

    def test_literal_avoid_overshoots(self, idx334):
        # forbidding only the other stable configurations lets the unions detour through their valleys
        a, b = tube_for_targets(idx334, 1, "stables"), tube_r_to_s(idx334, 1, 2, "stables")
        assert (a.only_in_union.size, a.only_in_direct.size) == (348, 0)
        assert (b.only_in_union.size, b.only_in_direct.size) == (174, 0)

    def test_r_equals_s(self, idx334):
        with pytest.raises(InputError):
            tube_r_to_s(idx334, 1, 1)

    def test_nonprincipal_boundary_outside_tube(self, idx234):
        t = typical_tube(idx234, idx234.stable(1), [idx234.stable(2)])
        npb = t.nonprincipal_boundary(idx234)
        assert not np.isin(npb, t.states).any()
        # a tube boundary state is left only uphill, so it sits above its cycle's bottom
        assert npb.size > 0

class TestCyclePaths:
    def test_reference_like_path_is_vtj(self, idx234):
        # fill columns of spin 2 top to bottom, one cell at a time
        spins = [1] * 12
        path = [_sid(idx234, spins)]
        for j in range(4):
            for i in range(3):
                spins[i * 4 + j] = 2
                path.append(_sid(idx234, spins))
        A = [idx234.stable(2)]
        cp = cycle_path_of(idx234, path, A)
        assert is_vtj(idx234, cp, A)

    def test_uphill_detour_is_not_vtj(self, idx234):
        # after the first full column (-18) an isolated cell at column 2 costs +4 to -14,
        # a non-principal exit of the valley of 1
        order = [(0, 0), (1, 0), (2, 0), (1, 2)] + [(i, j) for j in (1, 2, 3) for i in range(3) if (i, j) != (1, 2)]
        spins = [1] * 12
        path = [_sid(idx234, spins)]
        for i, j in order:
            spins[i * 4 + j] = 2
            path.append(_sid(idx234, spins))
        assert int(idx234.energies[path[4]]) == -14
        assert not is_vtj(idx234, cycle_path_of(idx234, path, [idx234.stable(2)]), [idx234.stable(2)])

    def test_saddle_plateau_is_one_cycle(self, idx234):
        # one full column plus one cell next to it, at Phi
        s = _sid(idx234, (2, 2, 1, 1, 2, 1, 1, 1, 2, 1, 1, 1))
        flat = plateau(idx234, s, [idx234.stable(2)])
        assert (idx234.energies[flat] == -16).all() and len(flat) > 1

    def test_non_communicating(self, idx234):
        with pytest.raises(InputError):
            cycle_path_of(idx234, [idx234.stable(1), idx234.stable(2)], [idx234.stable(2)])

    def test_path_must_end_in_target(self, idx234):
        with pytest.raises(InputError):
            cycle_path_of(idx234, [idx234.stable(1)], [idx234.stable(2)])

class TestVerification:
    def test_tube_unions_pass(self, idx334):
        for which in ("exittubestable", "exittubetarget"):
            assert verify_tube_theorems(idx334, which).passed

    def test_band_union_is_inside_tube(self, idx234):
        # every stated band lies in the tube; 33 extra states with non-adjacent cells are not stated
        rep = verify_tube_theorems(idx234, "exittuberes").as_dict()["checks"][0]
        assert rep["union_not_in_tube"] == 0
        assert (rep["tube"], rep["union"], rep["tube_not_in_union"]) == (381, 348, 33)

    def test_unknown_theorem(self, idx234):
        with pytest.raises(InputError):
            verify_tube_theorems(idx234, "nope")

    def test_lemmas_warn_small_k(self, idx234):
        rep = verify_principal_boundary_lemmas(idx234)
        assert any("K >= 5" in w for w in rep.warnings)

    def test_family_boundary_excludes_family(self, idx234):
        from pottsgate.geom import family_states

        fam = family_states(idx234, "K_bar", 1, 2)
        b = family_principal_boundary(idx234, fam)
        assert b.size and not np.isin(b, fam).any()

    def test_theorem_ids(self):
        assert TUBE_THEOREMS == ("exittuberes", "exittubestable", "exittubetarget")
