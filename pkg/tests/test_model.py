"""Model schema: validation, canonical two-label form, random instances,
document round trips."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exactmrf import model, oracle
from exactmrf.model import (ModelSpec, NonPositiveWeightError, SchemaError,
                            canonicalize_binary, parse, random_model,
                            serialize, validate)
from exactmrf.numerics import NonSquareRatioError, rat


class TestValidate:
    def test_symmetric_binary_ok(self):
        spec = ModelSpec.complete(2, 3, [[1, 2], [2, 1]], [[1, 1]] * 3)
        assert validate(spec).ok

    def test_asymmetric_g_rejected_on_complete(self):
        spec = ModelSpec.complete(2, 3, [[1, 2], [3, 1]], [[1, 1]] * 3)
        rep = validate(spec)
        assert not rep.ok
        assert any("symmetric" in v for v in rep.violations)

    def test_asymmetric_g_fine_on_bipartite(self):
        spec = ModelSpec.bipartite(2, 2, 2, [[1, 2], [3, 1]], [[1, 1]] * 4)
        assert validate(spec).ok

    def test_all_zero_unary_row_rejected(self):
        spec = ModelSpec.complete(2, 2, [[1, 1], [1, 1]], [[0, 0], [1, 1]])
        rep = validate(spec)
        assert not rep.ok
        assert any("vertex 0" in v for v in rep.violations)

    def test_partial_zero_unary_allowed(self):
        spec = ModelSpec.complete(2, 2, [[1, 1], [1, 1]], [[0, 1], [1, 0]])
        assert validate(spec).ok

    def test_negative_weight_rejected_at_construction(self):
        with pytest.raises(SchemaError):
            ModelSpec.complete(2, 2, [[1, -1], [-1, 1]], [[1, 1]] * 2)

    def test_wrong_shape_rejected(self):
        with pytest.raises(SchemaError):
            ModelSpec.complete(2, 2, [[1, 1, 1], [1, 1, 1]], [[1, 1]] * 2)
        with pytest.raises(SchemaError):
            ModelSpec.complete(3, 2, [[1] * 3] * 3, [[1, 1], [1, 1]])


class TestCanonicalizeBinary:
    def test_stated_formula(self):
        # g=[[4,2],[2,1]], n=3: alpha = 2/sqrt(4) = 1, beta_i scales by 4^(n-1)/2... = 4
        q = [[5, 1], [7, 1], [1, 1]]
        spec = ModelSpec.complete(2, 3, [[4, 2], [2, 1]], q)
        canon = canonicalize_binary(spec)
        assert math.exp(canon.log_alpha) == pytest.approx(1.0, rel=1e-12)
        for i, (q0, _q1) in enumerate(q):
            assert math.exp(canon.log_beta[i]) == pytest.approx(4.0 * q0, rel=1e-12)

    def test_already_canonical_is_fixed_point(self):
        spec = ModelSpec.complete(2, 4, [[1, 0.5], [0.5, 1]],
                                  [[b, 1] for b in (2.0, 3.0, 0.25, 1.0)])
        canon = canonicalize_binary(spec)
        assert canon.log_alpha == pytest.approx(math.log(0.5), abs=1e-15)
        assert canon.log_scale == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(np.exp(canon.log_beta), [2.0, 3.0, 0.25, 1.0])

    def test_partition_recovery_via_scale(self):
        spec = random_model("complete", 2, 4, seed=3)
        canon = canonicalize_binary(spec)
        z_orig = oracle.brute_partition(spec).log_Z
        z_canon = oracle.brute_partition(canon.as_model_spec()).log_Z
        assert z_canon + canon.log_scale == pytest.approx(z_orig, abs=1e-12)

    def test_distribution_preserved_per_labelling(self):
        spec = random_model("complete", 2, 4, seed=5)
        canon = canonicalize_binary(spec)
        orig = oracle.brute_marginals(spec, pairs=[(0, 1), (2, 3)])
        new = oracle.brute_marginals(canon.as_model_spec(), pairs=[(0, 1), (2, 3)])
        assert np.allclose(orig.unary, new.unary, atol=1e-12)
        for p in [(0, 1), (2, 3)]:
            assert np.allclose(orig.pairwise[p], new.pairwise[p], atol=1e-12)

    def test_rational_exact(self):
        q = [["0.5", "2"], ["3", "1"], ["1", "4"]]
        spec = ModelSpec.complete(2, 3, [["4", "2"], ["2", "1"]], q,
                                  mode="rational")
        canon = canonicalize_binary(spec)
        z_orig = oracle.brute_partition(spec).Z_rational
        z_canon = oracle.brute_partition(canon.as_model_spec()).Z_rational
        assert z_canon * canon.scale == z_orig

    def test_rational_non_square_ratio(self):
        spec = ModelSpec.complete(2, 4, [["2", "1"], ["1", "1"]],
                                  [["1", "1"]] * 4, mode="rational")
        with pytest.raises(NonSquareRatioError):
            canonicalize_binary(spec)

    def test_zero_divisor_rejected(self):
        spec = ModelSpec.complete(2, 2, [[1, 0], [0, 1]], [[1, 1]] * 2)
        with pytest.raises(NonPositiveWeightError):
            canonicalize_binary(spec)
        spec = ModelSpec.complete(2, 2, [[1, 1], [1, 1]], [[1, 0], [1, 1]])
        with pytest.raises(NonPositiveWeightError):
            canonicalize_binary(spec)


class TestRandomModel:
    def test_deterministic(self):
        a = random_model("complete", 2, 5, (0.5, 2), seed=7)
        b = random_model("complete", 2, 5, (0.5, 2), seed=7)
        assert a == b

    def test_shapes_bipartite(self):
        spec = random_model("bipartite", 3, (4, 3), seed=1)
        assert len(spec.log_g) == 3 and len(spec.log_g[0]) == 3
        assert len(spec.log_q) == 7

    def test_degenerate_range_gives_uniform(self):
        spec = random_model("complete", 2, 6, (1, 1), seed=2)
        assert np.all(spec.log_q_arr == 0.0) and np.all(spec.log_g_arr == 0.0)
        z = oracle.brute_partition(spec)
        assert z.log_Z == pytest.approx(6 * math.log(2), abs=1e-12)

    @given(st.integers(0, 10 ** 6), st.sampled_from([2, 3]),
           st.sampled_from(["log", "rational"]))
    @settings(max_examples=40, deadline=None)
    def test_validate_accepts_every_output(self, seed, k, mode):
        spec = random_model("complete", k, 5, seed=seed, mode=mode)
        assert validate(spec).ok
        spec = random_model("bipartite", k, (2, 3), seed=seed, mode=mode)
        assert validate(spec).ok


class TestDocuments:
    @given(st.integers(0, 10 ** 6), st.sampled_from(["log", "rational"]),
           st.sampled_from(["complete", "bipartite"]))
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, seed, mode, family):
        sizes = 4 if family == "complete" else (2, 3)
        spec = random_model(family, 2, sizes, seed=seed, mode=mode)
        assert parse(serialize(spec)) == spec

    def test_serialize_is_canonical(self):
        spec = random_model("complete", 3, 4, seed=9)
        text = serialize(spec)
        assert serialize(parse(text)) == text

    def test_rational_non_terminating_decimal(self):
        spec = ModelSpec.complete(2, 2, [["1/3", "1"], ["1", "2"]],
                                  [["1", "1"]] * 2, mode="rational")
        back = parse(serialize(spec))
        assert back.g_rat[0][0] == rat("1/3")

    def test_missing_field(self):
        with pytest.raises(SchemaError, match="'g'"):
            parse('{"family": "complete", "K": 2, "n": 2, "q": [[1,1],[1,1]]}')

    def test_negative_weight_names_constraint(self):
        with pytest.raises(SchemaError, match="non-negative"):
            parse('{"family": "complete", "K": 2, "n": 2,'
                  ' "g": [[1,-2],[-2,1]], "q": [[1,1],[1,1]]}')

    def test_bad_json_reports_line(self):
        with pytest.raises(SchemaError, match="line"):
            parse('{"family": "complete",\n  "K": }')

    def test_log_domain_round_trip(self):
        spec = ModelSpec.complete(2, 2, [[0.0, -700.5], [-700.5, 0.0]],
                                  [[0.25, 0.0]] * 2, log_domain=True)
        assert parse(serialize(spec)) == spec

    def test_log_domain_rejected_in_rational_mode(self):
        with pytest.raises(SchemaError):
            ModelSpec.complete(2, 2, [["1", "1"], ["1", "1"]],
                               [["1", "1"]] * 2, mode="rational",
                               log_domain=True)
