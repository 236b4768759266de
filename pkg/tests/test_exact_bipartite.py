"""Bipartite engine: factorization, hand values, oracle agreement."""
import math
from itertools import product

import numpy as np
import pytest

from exactmrf import oracle
from exactmrf.exact_bipartite import (h_forward_bipartite, partition_bipartite,
                                      unary_marginals_bipartite)
from exactmrf.model import ModelSpec, random_model
from exactmrf.numerics import rat


def joint_recursion_table(spec):
    """Literal joint (m_A label-1 count, m_B label-1 count) recursion.

    Test-only rational reference for the factorization claim: vertices are
    inserted one at a time on either side, each insertion splitting a class
    by the inserted vertex's label, exactly as the per-side recursion does
    but on the joint index.
    """
    assert spec.K == 2 and spec.mode == "rational"
    table = {(0, 0): rat(1)}
    sizes = [0, 0]
    for side, rows in [(0, spec.q_rat[:spec.n1]), (1, spec.q_rat[spec.n1:])]:
        for q0, q1 in rows:
            new = {}
            for (ma, mb) in product(range(sizes[0] + 2), range(sizes[1] + 2)):
                m = (ma, mb)
                stay = table.get(m, rat(0)) * q0
                dec = (ma - 1, mb) if side == 0 else (ma, mb - 1)
                take = table.get(dec, rat(0)) * q1
                if stay + take != 0:
                    new[m] = stay + take
            sizes[side] += 1
            table = new
    return table


class TestSideTables:
    def test_binomials(self):
        spec = ModelSpec.bipartite(2, 2, 1, [[1, 1], [1, 1]], [[1, 1]] * 3)
        tabs = h_forward_bipartite(spec)
        a = [tabs.h_A.value((2 - m, m)).to_linear() for m in range(3)]
        b = [tabs.h_B.value((1 - m, m)).to_linear() for m in range(2)]
        assert a == pytest.approx([1, 2, 1]) and b == pytest.approx([1, 1])

    def test_single_vertex_sides(self):
        spec = ModelSpec.bipartite(2, 1, 1, [["1", "1"], ["1", "1"]],
                                   [["2", "1"], ["3", "1"]], mode="rational")
        tabs = h_forward_bipartite(spec)
        assert tabs.h_A.value((1, 0)) == 2 and tabs.h_A.value((0, 1)) == 1
        assert tabs.h_B.value((1, 0)) == 3 and tabs.h_B.value((0, 1)) == 1

    def test_factorizes_joint_recursion(self):
        spec = random_model("bipartite", 2, (3, 4), seed=1, mode="rational")
        tabs = h_forward_bipartite(spec)
        joint = joint_recursion_table(spec)
        for ma in range(spec.n1 + 1):
            for mb in range(spec.n2 + 1):
                va = tabs.h_A.value((spec.n1 - ma, ma))
                vb = tabs.h_B.value((spec.n2 - mb, mb))
                assert joint.get((ma, mb), rat(0)) == va * vb


class TestPartitionBipartite:
    def test_single_edge_expansion(self):
        # one edge: Z = b1*b2 + alpha*b1 + alpha*b2 + 1
        b1, b2, alpha = 2, 5, 3
        spec = ModelSpec.bipartite(2, 1, 1,
                                   [["1", str(alpha)], [str(alpha), "1"]],
                                   [[str(b1), "1"], [str(b2), "1"]],
                                   mode="rational")
        assert partition_bipartite(spec).Z_rational == b1 * b2 + alpha * (b1 + b2) + 1

    def test_independent_factorizes(self):
        spec = ModelSpec.bipartite(2, 2, 1, [["1", "1"], ["1", "1"]],
                                   [["2", "1"], ["3", "1"], ["4", "1"]],
                                   mode="rational")
        assert partition_bipartite(spec).Z_rational == 3 * 4 * 5

    def test_disagreement_count_identity(self):
        # the per-class cross-edge exponent equals the brute count of
        # disagreeing edges for every labelling, for all n1, n2 <= 6
        for n1, n2 in [(1, 1), (2, 3), (4, 4), (6, 5), (6, 6)]:
            for x in product((0, 1), repeat=n1 + n2):
                m1 = sum(x[:n1])
                m2 = sum(x[n1:])
                kappa = m1 * (n2 - m2) + m2 * (n1 - m1)
                brute = sum(1 for i in range(n1) for j in range(n1, n1 + n2)
                            if x[i] != x[j])
                assert kappa == brute

    @pytest.mark.parametrize("k,n1,n2,seed", [(2, 4, 5, 2), (3, 3, 3, 3)])
    def test_matches_oracle(self, k, n1, n2, seed):
        spec = random_model("bipartite", k, (n1, n2), seed=seed)
        assert partition_bipartite(spec).log_Z == pytest.approx(
            oracle.brute_partition(spec).log_Z, abs=1e-10)

    def test_rational_exact(self):
        spec = random_model("bipartite", 2, (3, 3), seed=4, mode="rational")
        assert (partition_bipartite(spec).Z_rational
                == oracle.brute_partition(spec).Z_rational)

    def test_asymmetric_g(self):
        spec = ModelSpec.bipartite(2, 2, 2, [["2", "3"], ["5", "7"]],
                                   [["1", "2"]] * 4, mode="rational")
        assert (partition_bipartite(spec).Z_rational
                == oracle.brute_partition(spec).Z_rational)


class TestUnaryMarginalsBipartite:
    def test_independent_field(self):
        spec = ModelSpec.bipartite(3, 2, 2, [[1] * 3] * 3,
                                   [[1, 2, 5]] * 4)
        rep = unary_marginals_bipartite(spec)
        assert np.allclose(rep.unary, np.array([1, 2, 5]) / 8.0, atol=1e-12)

    def test_side_symmetry(self):
        spec = ModelSpec.bipartite(2, 3, 4, [[1, 0.4], [0.4, 1]],
                                   [[2, 1]] * 3 + [[5, 1]] * 4)
        rep = unary_marginals_bipartite(spec)
        assert np.allclose(rep.unary[:3], rep.unary[0], atol=1e-12)
        assert np.allclose(rep.unary[3:], rep.unary[3], atol=1e-12)
        assert np.allclose(rep.unary.sum(axis=1), 1.0, atol=1e-12)

    @pytest.mark.parametrize("k,n1,n2,seed", [(2, 3, 4, 5), (3, 2, 4, 6),
                                              (2, 1, 5, 7), (2, 1, 1, 8)])
    def test_matches_oracle(self, k, n1, n2, seed):
        spec = random_model("bipartite", k, (n1, n2), seed=seed)
        rep = unary_marginals_bipartite(spec)
        ref = oracle.brute_marginals(spec)
        assert np.max(np.abs(rep.unary - ref.unary)) < 1e-9

    def test_rational_exact(self):
        spec = random_model("bipartite", 2, (2, 3), seed=9, mode="rational")
        rep = unary_marginals_bipartite(spec)
        ref = oracle.brute_marginals(spec)
        assert rep.unary_exact == ref.unary_exact

    def test_cost_stays_within_theorem_bound(self):
        # factorized tables: O(n1^(K-1) + n2^(K-1)) cells, far inside
        # O(n1^K n2^K); just pin the table shapes
        spec = random_model("bipartite", 3, (6, 4), seed=10)
        tabs = h_forward_bipartite(spec)
        assert tabs.h_A.dense.shape == (7, 7)
        assert tabs.h_B.dense.shape == (5, 5)
