import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TINY4, corr_oracle, ols_residual
from stepgraph import (SampleSet, ScanCache, Thresholds, assemble_omega,
                       backward_scan, forward_scan, gen_ar1,
                       partial_corr_oracle, residual_for_node, run_gsa,
                       sample_mvn)
from stepgraph.errors import (ContractViolation, CycleDetected,
                              DegenerateResidual, IterationLimit)
from stepgraph.serialize import load_example16
from stepgraph.stepwise import (CandidateScore, NeighborhoodSystem,
                                default_cap, default_max_iter)

# deterministic churn instance: standard-normal noise at these thresholds
# revisits a neighborhood state (found by scan, frozen here)
CYCLE_CASE = dict(seed=20024, n=40, p=20, alpha=Thresholds(0.24, 0.238))


def noise(seed, n, p):
    return SampleSet.from_matrix(
        np.random.default_rng(seed).standard_normal((n, p)))


class TestThresholds:
    def test_validates_order_and_range(self):
        Thresholds(0.5, 0.2)
        for af, ab in [(0.2, 0.5), (0.2, 0.2), (1.2, 0.1), (0.5, -0.1)]:
            with pytest.raises(ContractViolation):
                Thresholds(af, ab)


class TestCandidateScore:
    def test_swaps_reversed_pair(self):
        c = CandidateScore(3, 1, 0.5)
        assert (c.j, c.l) == (1, 3)
        assert c.pair == (1, 3)

    def test_rejects_self_pair_and_overshoot(self):
        with pytest.raises(ContractViolation):
            CandidateScore(2, 2, 0.1)
        with pytest.raises(ContractViolation):
            CandidateScore(0, 1, 1.5)


class TestNeighborhoodSystem:
    def test_add_remove_roundtrip(self):
        nb = NeighborhoodSystem.empty(4)
        nb.add_edge(0, 2)
        nb.add_edge(2, 1)
        assert nb.neighbors_of(2) == (0, 1)
        nb.remove_edge(2, 0)
        assert nb.neighbors_of(2) == (1,)
        assert nb.to_edge_set().pairs == {(1, 2)}

    def test_duplicate_and_missing_edges(self):
        nb = NeighborhoodSystem.empty(3)
        nb.add_edge(0, 1)
        with pytest.raises(ContractViolation):
            nb.add_edge(1, 0)
        with pytest.raises(ContractViolation):
            nb.remove_edge(0, 2)

    def test_state_key_is_order_free(self):
        a = NeighborhoodSystem.empty(4)
        b = NeighborhoodSystem.empty(4)
        a.add_edge(0, 1); a.add_edge(2, 3)
        b.add_edge(2, 3); b.add_edge(0, 1)
        assert a.state_key() == b.state_key()

    def test_copy_is_independent(self):
        a = NeighborhoodSystem.empty(3)
        a.add_edge(0, 1)
        b = a.copy()
        b.add_edge(1, 2)
        assert a.neighbors_of(1) == (0,)


class TestResidualForNode:
    def test_matches_reference_on_centered_data(self, tiny4c):
        nb = NeighborhoodSystem.empty(4)
        nb.add_edge(0, 1); nb.add_edge(0, 2)
        r = residual_for_node(tiny4c, 0, nb)
        expect = ols_residual(tiny4c.data[:, 0], tiny4c.data[:, [1, 2]])
        assert np.allclose(r, expect, atol=1e-10)

    def test_exclude_drops_partner(self, tiny4c):
        nb = NeighborhoodSystem.empty(4)
        nb.add_edge(0, 1); nb.add_edge(0, 2)
        r = residual_for_node(tiny4c, 0, nb, exclude=2)
        expect = ols_residual(tiny4c.data[:, 0], tiny4c.data[:, [1]])
        assert np.allclose(r, expect, atol=1e-10)

    def test_empty_neighborhood_centers(self, tiny4):
        r = residual_for_node(tiny4, 3, NeighborhoodSystem.empty(4))
        col = tiny4.data[:, 3]
        assert np.allclose(r, col - col.mean())

    def test_bad_node(self, tiny4):
        with pytest.raises(ContractViolation):
            residual_for_node(tiny4, 4, NeighborhoodSystem.empty(4))


class TestForwardScan:
    def test_empty_state_frozen_oracle(self, tiny4c):
        # marginal correlations; best |f| is the (1,3) pair
        best = forward_scan(tiny4c, NeighborhoodSystem.empty(4))
        assert best.pair == (1, 3)
        assert best.value == pytest.approx(-0.53311438688318513, abs=1e-12)

    def test_one_edge_state_frozen_oracle(self, tiny4c):
        nb = NeighborhoodSystem.empty(4)
        nb.add_edge(0, 1)
        best = forward_scan(tiny4c, nb)
        assert best.pair == (1, 3)
        assert best.value == pytest.approx(-0.6579076987377338, abs=1e-12)

    def test_adjacent_pairs_skipped(self, tiny4c):
        nb = NeighborhoodSystem.empty(4)
        for i, l in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]:
            nb.add_edge(i, l)
        best = forward_scan(tiny4c, nb)
        assert best.pair == (2, 3)

    def test_cap_excludes_saturated_nodes(self, tiny4c):
        nb = NeighborhoodSystem.empty(4)
        nb.add_edge(0, 1)
        best = forward_scan(tiny4c, nb, cap=1)
        assert best.pair == (2, 3)  # only pair avoiding capped nodes 0, 1

    def test_no_candidates_returns_none(self, tiny4c):
        assert forward_scan(tiny4c, NeighborhoodSystem.empty(4), cap=0) is None

    def test_tie_breaks_lexicographic(self):
        # a triplicated column makes all three pair scores bit-identical,
        # so the scan must fall back to the smallest pair
        a = np.random.default_rng(8).standard_normal(20)
        data = SampleSet.from_matrix(np.column_stack([a, a, a]))
        best = forward_scan(data, NeighborhoodSystem.empty(3))
        assert best.pair == (0, 1)
        assert best.value == pytest.approx(1.0)


class TestBackwardScan:
    def test_frozen_oracle(self, tiny4c):
        nb = NeighborhoodSystem.empty(4)
        nb.add_edge(0, 1); nb.add_edge(0, 2)
        worst = backward_scan(tiny4c, nb)
        assert worst.pair == (0, 2)
        assert worst.value == pytest.approx(0.11364051898046232, abs=1e-12)

    def test_empty_graph_returns_none(self, tiny4c):
        assert backward_scan(tiny4c, NeighborhoodSystem.empty(4)) is None

    def test_just_added_edge_scores_its_f_value(self):
        # with a single edge, the leave-partner-out residuals are the
        # centered columns, so b equals the marginal f that added it
        for seed in (0, 1, 2):
            data = noise(seed, 25, 5)
            best = forward_scan(data, NeighborhoodSystem.empty(5))
            nb = NeighborhoodSystem.empty(5)
            nb.add_edge(*best.pair)
            back = backward_scan(data, nb)
            assert back.pair == best.pair
            assert back.value == pytest.approx(best.value, abs=1e-12)


class TestAssembleOmega:
    def test_frozen_oracle(self, tiny4c):
        nb = NeighborhoodSystem.empty(4)
        nb.add_edge(0, 1)
        omega = assemble_omega(tiny4c, nb)
        diag = [0.77972653500309885, 0.6202293290454689,
                0.43552640152577471, 0.76516407341492099]
        assert np.allclose(np.diag(omega), diag, atol=1e-12)
        assert omega[0, 1] == pytest.approx(-0.34976181251034028, abs=1e-12)
        assert omega[0, 2] == 0.0 and omega[2, 3] == 0.0
        assert np.array_equal(omega, omega.T)

    def test_matches_run_gsa_assembly(self, tiny4c):
        fit = run_gsa(tiny4c, Thresholds(0.4, 0.1))
        again = assemble_omega(tiny4c, fit.neighborhoods)
        assert np.allclose(fit.omega_hat, again, atol=1e-12)

    def test_degenerate_residual(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal(20)
        data = SampleSet.from_matrix(
            np.column_stack([a, a, rng.standard_normal(20)]))
        nb = NeighborhoodSystem.empty(3)
        nb.add_edge(0, 1)  # exact fit: zero residual variance
        with pytest.raises(DegenerateResidual) as exc:
            assemble_omega(data, nb)
        assert exc.value.node in (0, 1)


class TestRunGsa:
    def test_stops_immediately_on_high_threshold(self, tiny4):
        fit = run_gsa(tiny4, Thresholds(1.0, 0.0))
        assert fit.edges.pairs == frozenset()
        assert fit.stop_reason == "threshold"
        assert fit.iterations == 1
        assert fit.trace[0][0] == "stop"
        assert np.allclose(fit.omega_hat, np.diag(np.diag(fit.omega_hat)))

    def test_recovers_example16(self):
        model = load_example16()
        data = sample_mvn(model, 1000, seed=0)
        fit = run_gsa(data, Thresholds(0.17, 0.09))
        assert fit.edges.pairs == model.edges.pairs
        assert fit.trace[0][0] == "add"
        assert fit.trace[-1][0] == "stop"
        adds = sum(1 for kind, *_ in fit.trace if kind == "add")
        removes = sum(1 for kind, *_ in fit.trace if kind == "remove")
        assert adds - removes == len(fit.edges.pairs)

    def test_assemble_false_skips_omega(self, tiny4):
        fit = run_gsa(tiny4, Thresholds(0.4, 0.1), assemble=False)
        assert fit.omega_hat is None
        assert fit.edges.pairs

    def test_centering_invariance(self, tiny4):
        shifted = SampleSet.from_matrix(tiny4.data + np.arange(4) * 7.0)
        a = run_gsa(tiny4, Thresholds(0.3, 0.1))
        b = run_gsa(shifted, Thresholds(0.3, 0.1))
        assert a.edges.pairs == b.edges.pairs
        assert np.allclose(a.omega_hat, b.omega_hat, atol=1e-10)

    def test_iteration_limit(self):
        model = load_example16()
        data = sample_mvn(model, 500, seed=1)
        with pytest.raises(IterationLimit) as exc:
            run_gsa(data, Thresholds(0.17, 0.09), max_iter=1)
        assert exc.value.iterations == 1
        assert exc.value.trace

    def test_cycle_detected(self):
        case = CYCLE_CASE
        data = noise(case["seed"], case["n"], case["p"])
        with pytest.raises(CycleDetected) as exc:
            run_gsa(data, case["alpha"], assemble=False)
        assert exc.value.trace[-1][0] in ("add", "remove")

    def test_shared_cache_across_thresholds(self, tiny4):
        cache = ScanCache()
        a = run_gsa(tiny4, Thresholds(0.4, 0.1), cache=cache)
        b = run_gsa(tiny4, Thresholds(0.6, 0.2), cache=cache)
        assert run_gsa(tiny4, Thresholds(0.4, 0.1)).edges.pairs == a.edges.pairs
        assert run_gsa(tiny4, Thresholds(0.6, 0.2)).edges.pairs == b.edges.pairs

    def test_cache_refuses_other_dataset(self, tiny4):
        cache = ScanCache()
        run_gsa(tiny4, Thresholds(0.4, 0.1), cache=cache)
        with pytest.raises(ContractViolation):
            run_gsa(noise(0, 12, 4), Thresholds(0.4, 0.1), cache=cache)

    def test_needs_three_rows(self):
        with pytest.raises(ContractViolation):
            run_gsa(noise(0, 2, 3), Thresholds(0.5, 0.1))


class TestDefaults:
    def test_default_cap(self):
        assert default_cap(100, 50) == 49
        assert default_cap(10, 50) == 8

    def test_default_max_iter(self):
        assert default_max_iter(10) == 256
        assert default_max_iter(100) == 800


class TestPartialCorrOracle:
    def test_symmetry_and_range(self):
        m = gen_ar1(6, rho=0.45)
        for i in range(5):
            v = partial_corr_oracle(m.omega, i, i + 1)
            assert v == pytest.approx(partial_corr_oracle(m.omega, i + 1, i))
            assert abs(v) <= 1.0

    def test_diagonal_omega_gives_zero(self):
        omega = np.diag([1.0, 2.0, 3.0])
        assert partial_corr_oracle(omega, 0, 2) == 0.0

    def test_two_by_two_sign_flip(self):
        omega = np.array([[1.0, -0.3], [-0.3, 1.0]])
        assert partial_corr_oracle(omega, 0, 1) == pytest.approx(0.3)

    def test_population_residual_identity(self):
        # sampled version of the conditional-independence identity: with
        # the true neighborhoods installed, residual correlations of
        # adjacent pairs approach the population partial correlation
        m = gen_ar1(5, rho=0.4)
        data = sample_mvn(m, 50000, seed=4)
        nb = NeighborhoodSystem.empty(5)
        for i, l in m.edges.sorted_pairs():
            nb.add_edge(i, l)
        for i, l in m.edges.sorted_pairs():
            ri = residual_for_node(data, i, nb, exclude=l)
            rl = residual_for_node(data, l, nb, exclude=i)
            want = partial_corr_oracle(m.omega, i, l)
            assert corr_oracle(ri, rl) == pytest.approx(want, abs=0.03)


@given(st.integers(0, 2**32 - 1), st.integers(3, 5), st.integers(10, 18))
@settings(max_examples=30, deadline=None)
def test_forward_scan_equals_bruteforce(seed, p, n):
    """The vectorized scan agrees with a direct per-pair reference."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    x -= x.mean(axis=0)
    data = SampleSet.from_matrix(x)
    nb = NeighborhoodSystem.empty(p)
    if p >= 4:
        nb.add_edge(0, 1)
    best = forward_scan(data, nb)
    scores = {}
    for i in range(p):
        for l in range(i + 1, p):
            if l in nb.neighbors_of(i):
                continue
            ri = ols_residual(x[:, i], x[:, list(nb.neighbors_of(i))]
                              if nb.neighbors_of(i) else None)
            rl = ols_residual(x[:, l], x[:, list(nb.neighbors_of(l))]
                              if nb.neighbors_of(l) else None)
            scores[(i, l)] = corr_oracle(ri, rl)
    want = max(scores, key=lambda pr: (abs(scores[pr]), [-pr[0], -pr[1]]))
    assert abs(best.value) == pytest.approx(abs(scores[want]), abs=1e-9)
    assert best.value == pytest.approx(scores[best.pair], abs=1e-9)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_walk_edges_match_trace_replay(seed):
    """Replaying the trace reproduces the final edge set, and every event
    respects its threshold."""
    rng = np.random.default_rng(seed)
    data = SampleSet.from_matrix(rng.standard_normal((30, 6)))
    th = Thresholds(0.35, 0.15)
    fit = run_gsa(data, th, assemble=False)
    edges = set()
    for kind, pair, score in fit.trace:
        if kind == "add":
            assert pair not in edges
            assert abs(score) >= th.alpha_f
            edges.add(pair)
        elif kind == "remove":
            assert pair in edges
            assert abs(score) <= th.alpha_b
            edges.remove(pair)
    assert edges == set(fit.edges.pairs)
    again = run_gsa(data, th, assemble=False)
    assert again.trace == fit.trace  # deterministic replay
