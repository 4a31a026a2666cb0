import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepgraph import (EdgeSet, SampleSet, gen_ar1, gen_bg, gen_nn2,
                       sample_mvn, support_of)
from stepgraph.errors import ContractViolation
from stepgraph.stepwise import partial_corr_oracle


class TestEdgeSet:
    def test_canonicalizes_pairs(self):
        es = EdgeSet.from_pairs(5, [(3, 1), (1, 3), (0, 4)])
        assert es.pairs == frozenset({(1, 3), (0, 4)})
        assert es.sorted_pairs() == [(0, 4), (1, 3)]

    def test_rejects_self_loops_and_range(self):
        with pytest.raises(ContractViolation):
            EdgeSet.from_pairs(4, [(2, 2)])
        with pytest.raises(ContractViolation):
            EdgeSet.from_pairs(4, [(0, 4)])

    def test_degree(self):
        es = EdgeSet.from_pairs(4, [(0, 1), (0, 2), (0, 3)])
        assert es.degree(0) == 3
        assert es.degree(1) == 1


class TestAr1:
    def test_sigma_closed_form(self):
        m = gen_ar1(4, rho=0.4)
        idx = np.arange(4)
        expect = 0.4 ** np.abs(np.subtract.outer(idx, idx))
        assert np.allclose(m.sigma, expect)

    def test_chain_edges(self):
        m = gen_ar1(6)
        assert m.edges.pairs == frozenset((i, i + 1) for i in range(5))

    def test_omega_tridiagonal(self):
        m = gen_ar1(7, rho=0.3)
        off = np.abs(np.triu(m.omega, k=2))
        assert off.max() < 1e-10
        m.validate()

    def test_partial_corr_values(self):
        # p=4, rho=0.4: boundary pair and interior pair of the chain,
        # frozen from direct inversion of the closed-form sigma
        m = gen_ar1(4, rho=0.4)
        assert partial_corr_oracle(m.omega, 0, 1) == pytest.approx(
            0.37139067635410378, abs=1e-12)
        assert partial_corr_oracle(m.omega, 1, 2) == pytest.approx(
            0.34482758620689657, abs=1e-12)

    def test_bad_args(self):
        with pytest.raises(ContractViolation):
            gen_ar1(1)
        with pytest.raises(ContractViolation):
            gen_ar1(5, rho=1.0)


class TestNn2:
    def test_deterministic_in_seed(self):
        a, b = gen_nn2(20, seed=5), gen_nn2(20, seed=5)
        assert a.edges.pairs == b.edges.pairs
        assert np.array_equal(a.omega, b.omega)
        assert gen_nn2(20, seed=6).edges.pairs != a.edges.pairs

    def test_degree_and_count_bounds(self):
        m = gen_nn2(30, seed=1)
        assert 30 <= len(m.edges.pairs) <= 60  # between p and 2p by construction
        assert all(m.edges.degree(j) >= 2 for j in range(30))

    def test_valid_model(self):
        m = gen_nn2(15, seed=3)
        m.validate()
        assert np.allclose(np.diag(m.omega), 1.0)
        assert np.linalg.eigvalsh(m.omega)[0] > 0


class TestBg:
    def test_block_structure(self):
        m = gen_bg(10, block_size=5)
        assert len(m.edges.pairs) == 2 * 10  # two blocks, C(5,2) each
        expect = frozenset((i, l) for b in (0, 5)
                           for i in range(b, b + 5)
                           for l in range(i + 1, b + 5))
        assert m.edges.pairs == expect
        assert m.omega[0, 1] == 0.5 and m.omega[0, 5] == 0.0
        m.validate()

    def test_indivisible_p_rejected(self):
        with pytest.raises(ContractViolation):
            gen_bg(49, block_size=5)


class TestSupportOf:
    def test_reads_off_generated_models(self):
        for m in (gen_ar1(8), gen_bg(10), gen_nn2(12, seed=2)):
            assert support_of(m.omega).pairs == m.edges.pairs

    def test_tolerance(self):
        omega = np.eye(3)
        omega[0, 1] = omega[1, 0] = 1e-12
        assert support_of(omega).pairs == frozenset()
        assert support_of(omega, tol=1e-13).pairs == {(0, 1)}


class TestSampleMvn:
    def test_shape_and_determinism(self):
        m = gen_ar1(5)
        a = sample_mvn(m, 40, seed=9)
        b = sample_mvn(m, 40, seed=9)
        assert a.data.shape == (40, 5)
        assert np.array_equal(a.data, b.data)
        assert not np.array_equal(a.data, sample_mvn(m, 40, seed=10).data)

    def test_covariance_converges(self):
        m = gen_ar1(4, rho=0.5)
        x = sample_mvn(m, 60000, seed=0).data
        emp = np.cov(x, rowvar=False)
        assert np.abs(emp - m.sigma).max() < 0.05

    def test_bad_n(self):
        with pytest.raises(ContractViolation):
            sample_mvn(gen_ar1(3), 0, seed=0)


class TestSampleSet:
    def test_from_matrix_validates(self):
        with pytest.raises(ContractViolation):
            SampleSet.from_matrix(np.array([1.0, 2.0]))
        bad = np.ones((3, 2))
        bad[0, 0] = np.nan
        with pytest.raises(ContractViolation):
            SampleSet.from_matrix(bad)


@given(st.integers(2, 30))
@settings(max_examples=20, deadline=None)
def test_ar1_validates_for_any_p(p):
    m = gen_ar1(p)
    m.validate()
    assert len(m.edges.pairs) == p - 1


@given(st.integers(0, 10**6))
@settings(max_examples=15, deadline=None)
def test_nn2_always_valid(seed):
    m = gen_nn2(10, seed=seed)
    m.validate()
    assert support_of(m.omega).pairs == m.edges.pairs
