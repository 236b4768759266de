"""Brute-force enumeration oracle: closed forms and self-consistency."""
import math

import numpy as np
import pytest

from exactmrf.model import ModelSpec, random_model
from exactmrf.numerics import rat
from exactmrf.oracle import (TooLargeError, brute_marginals, brute_partition)


def coupling_spec(n, alpha, mode="log"):
    g = ([["1", str(alpha)], [str(alpha), "1"]] if mode == "rational"
         else [[1, alpha], [alpha, 1]])
    q = [["1", "1"] if mode == "rational" else [1, 1]] * n
    return ModelSpec.complete(2, n, g, q, mode=mode)


def test_uniform_binary():
    spec = coupling_spec(5, 1)
    assert brute_partition(spec).log_Z == pytest.approx(math.log(32), abs=1e-12)


def test_three_vertex_alpha_two_is_26():
    # 2 all-equal labellings weigh 1; the 6 mixed ones have two disagreeing
    # edges each, weight alpha^2 = 4; Z = 2 + 6*4 = 26
    assert brute_partition(coupling_spec(3, 2, "rational")).Z_rational == 26
    assert brute_partition(coupling_spec(3, 2)).log_Z == pytest.approx(
        math.log(26), abs=1e-12)


def test_single_vertex():
    spec = ModelSpec.complete(4, 1, [["1"] * 4] * 4, [["1", "2", "3", "4"]],
                              mode="rational")
    assert brute_partition(spec).Z_rational == 10


def test_cap_enforced():
    spec = ModelSpec.complete(2, 30, [[1, 1], [1, 1]], [[1, 1]] * 30)
    with pytest.raises(TooLargeError):
        brute_partition(spec, cap=2 ** 20)
    with pytest.raises(TooLargeError):
        brute_marginals(spec, cap=2 ** 20)


def test_independent_marginals():
    spec = ModelSpec.complete(2, 3, [[1, 1], [1, 1]], [[3, 1]] * 3)
    rep = brute_marginals(spec)
    assert np.allclose(rep.unary[:, 1], 0.25, atol=1e-14)


def test_symmetric_model_equal_marginals():
    spec = coupling_spec(5, 0.7)
    rep = brute_marginals(spec)
    assert np.allclose(rep.unary, rep.unary[0], atol=1e-13)


def test_pairwise_margins_exact_in_rational_mode():
    spec = random_model("complete", 2, 4, seed=3, mode="rational")
    pairs = [(0, 1), (1, 3)]
    rep = brute_marginals(spec, pairs=pairs)
    for (i, j) in pairs:
        tab = rep.pairwise_exact[(i, j)]
        for a in range(2):
            assert sum(tab[a], rat(0)) == rep.unary_exact[i][a]
        for b in range(2):
            assert sum((tab[a][b] for a in range(2)), rat(0)) == rep.unary_exact[j][b]


def test_bipartite_edges_enumerated_cross_only():
    # cross edges only: with zero cross weight between unequal labels and a
    # same-side disagreement, Z counts only all-equal-side labellings
    spec = ModelSpec.bipartite(2, 2, 1, [["1", "0"], ["0", "1"]],
                               [["1", "1"]] * 3, mode="rational")
    # A side may disagree internally (no A-A edges), so labellings where all
    # cross pairs agree: x_B free once A-side matches it
    assert brute_partition(spec).Z_rational == 2


def test_log_and_rational_oracles_agree():
    for seed in (0, 1):
        spec_r = random_model("complete", 3, 5, seed=seed, mode="rational")
        spec_l = ModelSpec.complete(
            3, 5, [[float(v) for v in row] for row in spec_r.g_rat],
            [[float(v) for v in row] for row in spec_r.q_rat])
        zr = brute_partition(spec_r)
        zl = brute_partition(spec_l)
        assert zl.log_Z == pytest.approx(zr.log_Z, abs=1e-10)
