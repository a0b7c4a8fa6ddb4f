import numpy as np
import pytest

from qwedge import histories as hi
from qwedge.errors import InconsistentFamily, ZeroConditioningEvent

import oracles


@pytest.fixture(scope="module")
def fam():
    return hi.path_family()


@pytest.fixture(scope="module")
def det_fam():
    return hi.detector_family()


class TestStructures:
    def test_labels_unique(self):
        with pytest.raises(ValueError):
            hi.LabeledBasis(("c", "c"))
        assert hi.LabeledBasis(("c", "d")).dimension == 2

    def test_grid_requires_unitaries(self):
        with pytest.raises(ValueError):
            hi.TimeGrid([0.0, 1.0], [np.array([[1.0, 0.0], [1.0, 1.0]])])
        with pytest.raises(ValueError):
            hi.TimeGrid([0.0, 0.0], [np.eye(2)])

    def test_family_validates_projectors(self):
        grid = hi.TimeGrid([0.0, 1.0], [np.eye(2)])
        bad = hi.Projector("p", np.array([[0.5, 0.0], [0.0, 0.5]]))  # not idempotent
        good = hi.basis_decomposition(("u", "v"))
        with pytest.raises(ValueError):
            hi.HistoryFamily(grid, [good, (bad, bad)], [1.0, 0.0])
        with pytest.raises(ValueError):
            hi.HistoryFamily(grid, [good, good], [2.0, 0.0])  # not normalized
        with pytest.raises(ValueError):
            hi.HistoryFamily(grid, [good[:1], good], [1.0, 0.0])  # not complete

    def test_history_index_validation(self, fam):
        with pytest.raises(ValueError):
            fam.history(0, 0, 0, 0)
        with pytest.raises(ValueError):
            fam.history(0, 0, 0, 0, 2)


class TestChainVector:
    def test_single_time_identity_family(self):
        psi = np.array([0.6, 0.8j])
        grid = hi.TimeGrid([0.0], [])
        one = hi.Projector("all", np.eye(2, dtype=complex))
        f = hi.HistoryFamily(grid, [(one,)], psi)
        cv = hi.chain_vector(f, f.history(0))
        assert np.array_equal(cv, psi.astype(complex))

    def test_zero_weight_history_vanishes(self, fam):
        y_df = fam.history(0, 1, 1, 1, 1)
        assert np.linalg.norm(hi.chain_vector(fam, y_df)) < 1e-14
        y_ce = fam.history(0, 0, 0, 0, 0)
        assert np.linalg.norm(hi.chain_vector(fam, y_ce)) < 1e-14

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_naive_matrix_product(self, seed):
        rng = np.random.default_rng(seed)
        f = oracles.random_family(rng, dim=3, n_times=4)
        for h in hi.all_histories(f):
            assert np.allclose(
                hi.chain_vector(f, h), oracles.naive_chain_vector(f, h), atol=1e-13
            )


class TestWeights:
    def test_named_weights(self, fam):
        w = hi.named_weights(fam)
        assert abs(w["Y_cf"] - 0.5) < 1e-12
        assert abs(w["Y_de"] - 0.5) < 1e-12
        assert abs(w["Y_ce"]) < 1e-12
        assert abs(w["Y_df"]) < 1e-12

    def test_biased_splitter_weight(self):
        theta = 0.3
        fam_b = hi.path_family(theta=theta)
        w = hi.named_weights(fam_b)
        assert abs(w["Y_cf"] - np.cos(theta) ** 2) < 1e-12
        assert abs(w["Y_de"] - np.sin(theta) ** 2) < 1e-12
        table = hi.enumerate_and_assign(fam_b)
        assert abs(table.total() - 1.0) < 1e-10

    def test_identity_dynamics_single_history(self):
        eye = np.eye(2, dtype=complex)
        f = hi.path_family(unitaries=(eye, eye, eye, eye))
        table = hi.enumerate_and_assign(f)
        nz = table.nonzero()
        assert len(nz) == 1
        assert abs(nz[0][1] - 1.0) < 1e-12
        # all-initial-projector history: a0 kept at every time
        assert nz[0][0].projector_choice == (0, 0, 0, 0, 0)

    def test_weight_in_unit_interval(self, fam):
        for h in hi.all_histories(fam):
            w = hi.weight(fam, h)
            assert -1e-15 <= w <= 1.0 + 1e-12


class TestDecoherenceFunctional:
    def test_diagonal_equals_weight(self, fam):
        for h in list(hi.all_histories(fam))[:8]:
            d = hi.decoherence_functional(fam, h, h)
            assert abs(d.imag) < 1e-15
            assert abs(d.real - hi.weight(fam, h)) < 1e-14

    def test_nonzero_pair_orthogonal(self, fam):
        y_cf = fam.history(0, 0, 0, 0, 1)
        y_de = fam.history(0, 1, 1, 1, 0)
        assert abs(hi.decoherence_functional(fam, y_cf, y_de)) < 1e-12

    def test_hermiticity_exact(self, fam):
        hs = list(hi.all_histories(fam))[:6]
        for h1 in hs:
            for h2 in hs:
                d12 = hi.decoherence_functional(fam, h1, h2)
                d21 = hi.decoherence_functional(fam, h2, h1)
                assert d12 == np.conj(d21)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_gram_oracle(self, seed):
        rng = np.random.default_rng(50 + seed)
        f = oracles.random_family(rng, dim=3, n_times=3)
        hs = hi.all_histories(f)
        D_oracle = oracles.gram_decoherence_matrix(f)
        for i, h1 in enumerate(hs):
            for j, h2 in enumerate(hs):
                assert abs(hi.decoherence_functional(f, h1, h2) - D_oracle[i, j]) < 1e-12


class TestConsistency:
    def test_default_family_consistent(self, fam):
        rep = hi.check_consistency(fam, tol=1e-12)
        assert rep.consistent
        assert rep.max_offdiag < 1e-12

    def test_superposition_control_inconsistent(self):
        rep = hi.check_consistency(hi.superposition_final_family())
        assert not rep.consistent
        assert rep.max_offdiag > 0.1

    def test_single_history_family_consistent(self):
        grid = hi.TimeGrid([0.0, 1.0], [np.eye(2)])
        one = hi.Projector("all", np.eye(2, dtype=complex))
        f = hi.HistoryFamily(grid, [(one,), (one,)], [1.0, 0.0])
        assert hi.check_consistency(f).consistent

    def test_enumerate_refuses_inconsistent(self):
        with pytest.raises(InconsistentFamily):
            hi.enumerate_and_assign(hi.superposition_final_family())


class TestConditionals:
    def test_paper_conditionals(self, fam):
        assert abs(hi.conditional(fam, 2, 1, 4, 0) - 1.0) < 1e-12  # d@t2 | e@t4
        assert abs(hi.conditional(fam, 2, 0, 4, 1) - 1.0) < 1e-12  # c@t2 | f@t4
        assert abs(hi.conditional(fam, 2, 0, 4, 0)) < 1e-12        # c@t2 | e@t4

    def test_zero_conditioning_event(self, fam):
        # conditioning on the orthogonal complement of a0 at t0
        with pytest.raises(ZeroConditioningEvent):
            hi.conditional(fam, 0, 1, 4, 0)


class TestDetectorFamily:
    def test_two_nonzero_histories_with_pointer_pattern(self, det_fam):
        table = hi.enumerate_and_assign(det_fam)
        nz = table.nonzero()
        assert len(nz) == 2
        labels = sorted(det_fam.label(h) for h, _ in nz)
        assert labels == [
            "a0 D > c D > c D > c D > f D",
            "a0 D > d D > d D* > d D* > e D*",
        ]
        assert all(abs(w - 0.5) < 1e-12 for _, w in nz)

    def test_consistent_and_complete(self, det_fam):
        assert hi.check_consistency(det_fam, tol=1e-12).consistent
        assert abs(hi.enumerate_and_assign(det_fam).total() - 1.0) < 1e-10


class TestFamilyProperties:
    @pytest.mark.parametrize("seed", range(10))
    def test_completeness_sums_to_one(self, seed):
        rng = np.random.default_rng(300 + seed)
        f = oracles.random_family(rng, dim=int(rng.integers(2, 5)), n_times=int(rng.integers(2, 5)))
        table_total = sum(hi.weight(f, h) for h in hi.all_histories(f))
        assert abs(table_total - 1.0) < 1e-10

    @pytest.mark.parametrize("seed", range(6))
    def test_positivity(self, seed):
        rng = np.random.default_rng(400 + seed)
        f = oracles.random_family(rng, dim=3, n_times=3)
        for h in hi.all_histories(f):
            assert hi.weight(f, h) >= -1e-15

    @pytest.mark.parametrize("seed", range(6))
    def test_refinement_stability(self, seed):
        # inserting an extra time carrying the trivial {I} decomposition
        # (splitting one unitary into U then I) leaves every weight unchanged
        rng = np.random.default_rng(500 + seed)
        f = oracles.random_family(rng, dim=3, n_times=3)
        times = list(f.grid.times)
        us = list(f.grid.unitaries)
        t_new = 0.5 * (times[0] + times[1])
        grid2 = hi.TimeGrid(
            [times[0], t_new] + times[1:], [us[0], np.eye(3)] + us[1:]
        )
        trivial = (hi.Projector("any", np.eye(3, dtype=complex)),)
        decs2 = [f.decompositions[0], trivial, *f.decompositions[1:]]
        f2 = hi.HistoryFamily(grid2, decs2, f.initial_state)
        for h in hi.all_histories(f):
            h2 = hi.History((h.projector_choice[0], 0, *h.projector_choice[1:]))
            assert abs(hi.weight(f, h) - hi.weight(f2, h2)) < 1e-12

    @pytest.mark.parametrize("seed", range(8))
    def test_two_time_reduction_is_born_rule(self, seed):
        # projectors only at first and last time: weight = |<phi_f| U |psi0>|^2
        rng = np.random.default_rng(600 + seed)
        d = 3
        u = oracles.haar_unitary(rng, d)
        psi0 = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi0 /= np.linalg.norm(psi0)
        basis = oracles.haar_unitary(rng, d)
        grid = hi.TimeGrid([0.0, 1.0], [u])
        full = (hi.Projector("all", np.eye(d, dtype=complex)),)
        final = tuple(
            hi.Projector(f"f{k}", np.outer(basis[:, k], basis[:, k].conj()))
            for k in range(d)
        )
        f = hi.HistoryFamily(grid, [full, final], psi0)
        for k in range(d):
            w = hi.weight(f, f.history(0, k))
            born = abs(np.vdot(basis[:, k], u @ psi0)) ** 2
            assert abs(w - born) < 1e-12


class TestConfigLoading:
    def test_roundtrip_inline_family(self):
        spec = {
            "times": [0.0, 1.0],
            "unitaries": [[[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]]],
            "initial_state": [[1.0, 0.0], [0.0, 0.0]],
            "decompositions": [
                [{"label": "up", "basis": [0]}, {"label": "down", "basis": [1]}],
                [{"label": "up", "basis": [0]}, {"label": "down", "basis": [1]}],
            ],
        }
        f = hi.family_from_config(spec)
        table = hi.enumerate_and_assign(f)
        nz = table.nonzero()
        assert len(nz) == 1
        assert f.label(nz[0][0]) == "up > down"

    def test_bad_spec_raises_config_error(self):
        from qwedge.errors import ConfigError

        with pytest.raises(ConfigError):
            hi.family_from_config({"times": [0.0]})
        with pytest.raises(ConfigError):
            hi.family_from_config("not-a-dict")
