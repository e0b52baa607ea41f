import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clwe import (
    ClweError,
    build_csls_index,
    csls_translate,
    evaluate_bli,
    induce_synthetic_dictionary,
    topk_cosine,
    write_bli_report,
)
from helpers import (
    make_dict,
    make_emb,
    oracle_csls_scores,
    oracle_csls_translate,
    oracle_mutual_pairs,
    oracle_topk,
)


def random_instance(n, m, d, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, d)), rng.normal(size=(m, d))


class TestTopkCosine:
    def test_standard_basis_self_match(self):
        basis = make_emb(np.eye(2))
        idx, vals = topk_cosine(basis, basis, k=1)
        np.testing.assert_array_equal(idx[:, 0], [0, 1])
        np.testing.assert_allclose(vals[:, 0], 1.0)

    def test_matches_oracle_small(self):
        q, k_mat = random_instance(5, 7, 3, seed=11)
        idx, vals = topk_cosine(make_emb(q), make_emb(k_mat), k=3)
        oidx, ovals = oracle_topk(q, k_mat, k=3)
        np.testing.assert_array_equal(idx, oidx)
        np.testing.assert_array_equal(vals, ovals)

    def test_orthogonal_query_all_zero(self):
        queries = make_emb([[0.0, 0.0, 1.0]])
        keys = make_emb([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        _, vals = topk_cosine(queries, keys, k=2)
        np.testing.assert_allclose(vals, 0.0, atol=1e-15)

    def test_ties_break_to_lower_index(self):
        queries = make_emb([[1.0, 0.0]])
        keys = make_emb([[2.0, 0.0], [1.0, 0.0], [0.5, 0.0]])  # all cosine 1.0
        idx, _ = topk_cosine(queries, keys, k=2)
        np.testing.assert_array_equal(idx, [[0, 1]])

    def test_k_out_of_range(self):
        emb = make_emb(np.eye(2))
        with pytest.raises(ClweError, match="out of range"):
            topk_cosine(emb, emb, k=3)

    def test_zero_row_rejected(self):
        queries = make_emb([[0.0, 0.0]])
        keys = make_emb(np.eye(2))
        with pytest.raises(ClweError, match="zero-norm"):
            topk_cosine(queries, keys, k=1)

    @given(
        n=st.integers(1, 64),
        m=st.integers(1, 64),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_oracle_equivalence_exhaustive(self, n, m, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 8))
        k = int(rng.integers(1, m + 1))
        q, k_mat = rng.normal(size=(n, d)), rng.normal(size=(m, d))
        idx, vals = topk_cosine(make_emb(q), make_emb(k_mat), k=k)
        oidx, ovals = oracle_topk(q, k_mat, k=k)
        np.testing.assert_array_equal(idx, oidx)
        np.testing.assert_array_equal(vals, ovals)


class TestCslsIndex:
    def test_identical_spaces_k1_all_ones(self):
        rng = np.random.default_rng(5)
        emb = make_emb(rng.normal(size=(6, 4)))
        index = build_csls_index(emb, emb, k=1)
        np.testing.assert_allclose(index.r_src, 1.0, atol=1e-12)
        np.testing.assert_allclose(index.r_tgt, 1.0, atol=1e-12)

    def test_hand_instance_matches_oracle(self):
        src, tgt = random_instance(4, 4, 3, seed=2)
        index = build_csls_index(make_emb(src), make_emb(tgt), k=2)
        _, r_src, r_tgt = oracle_csls_scores(src, tgt, k=2)
        np.testing.assert_allclose(index.r_src, r_src, atol=1e-12)
        np.testing.assert_allclose(index.r_tgt, r_tgt, atol=1e-12)

    def test_mutually_orthogonal_all_zero(self):
        src = make_emb(np.eye(4)[:2])
        tgt = make_emb(np.eye(4)[2:])
        index = build_csls_index(src, tgt, k=1)
        np.testing.assert_allclose(index.r_src, 0.0, atol=1e-15)
        np.testing.assert_allclose(index.r_tgt, 0.0, atol=1e-15)

    def test_k_must_be_smaller_than_vocabularies(self):
        emb = make_emb(np.eye(3))
        with pytest.raises(ClweError, match="smaller"):
            build_csls_index(emb, emb, k=3)


class TestCslsTranslate:
    def test_identical_spaces_identity(self):
        rng = np.random.default_rng(9)
        emb = make_emb(rng.normal(size=(8, 5)))
        index = build_csls_index(emb, emb, k=2)
        out = csls_translate(index, emb, emb, np.arange(8))
        np.testing.assert_array_equal(out, np.arange(8))

    def test_hub_demoted_gold_wins(self):
        # Sources cluster around the hub target; the gold target sits near
        # source 0 only. Raw cosine retrieves the hub for source 0, CSLS
        # penalizes its large r_tgt and retrieves the gold word instead.
        src = make_emb([[1.0, 0.0, 0.45], [1.0, 0.1, 0.0], [1.0, -0.1, 0.0]])
        tgt = make_emb([[1.0, 0.0, 0.0], [1.0, 0.0, 1.3], [0.0, 1.0, 0.0]])  # hub, gold, other
        raw_idx, _ = topk_cosine(src, tgt, k=1)
        assert raw_idx[0, 0] == 0  # raw cosine picks the hub

        index = build_csls_index(src, tgt, k=1)
        assert csls_translate(index, src, tgt, [0])[0] == 1  # CSLS picks gold

        scores, _, _ = oracle_csls_scores(src.matrix, tgt.matrix, k=1)
        np.testing.assert_array_equal(np.argmax(scores, axis=1)[0], 1)

    def test_dropping_query_constant_keeps_argmax(self):
        src_mat, tgt_mat = random_instance(10, 12, 4, seed=3)
        src, tgt = make_emb(src_mat), make_emb(tgt_mat)
        index = build_csls_index(src, tgt, k=3)
        with_both = oracle_csls_translate(src_mat, tgt_mat, k=3)
        produced = csls_translate(index, src, tgt, np.arange(10))
        np.testing.assert_array_equal(produced, with_both)

    def test_out_of_bounds_query(self):
        emb = make_emb(np.eye(3))
        index = build_csls_index(emb, emb, k=1)
        with pytest.raises(ClweError, match="bounds"):
            csls_translate(index, emb, emb, [3])


class TestInduce:
    def test_identical_spaces_self_pairs(self):
        rng = np.random.default_rng(21)
        emb = make_emb(rng.normal(size=(7, 4)))
        index = build_csls_index(emb, emb, k=2)
        induced = induce_synthetic_dictionary(index, emb, emb)
        np.testing.assert_array_equal(
            induced.pairs, np.column_stack([np.arange(7), np.arange(7)])
        )

    def test_mutuality_matches_oracle(self):
        for seed in range(8):
            n, m = 30, 50
            src_mat, tgt_mat = random_instance(n, m, 6, seed=seed)
            src, tgt = make_emb(src_mat), make_emb(tgt_mat)
            index = build_csls_index(src, tgt, k=4)
            induced = induce_synthetic_dictionary(index, src, tgt)
            expected = oracle_mutual_pairs(src_mat, tgt_mat, k=4)
            assert induced.pairs.tolist() == [list(p) for p in expected]

    def test_non_mutual_pair_excluded(self):
        # Source 0's best target is t0, but t0's best source is source 1,
        # so (0, 0) must not be induced; (1, 0) and (2, 1) are mutual.
        deg = np.deg2rad
        src = make_emb(
            [[np.cos(deg(26)), np.sin(deg(26))],
             [np.cos(deg(5)), np.sin(deg(5))],
             [0.0, 1.0]]
        )
        tgt = make_emb(
            [[1.0, 0.0],
             [np.cos(deg(60)), np.sin(deg(60))],
             [-1.0, 0.0]]
        )
        index = build_csls_index(src, tgt, k=1)
        forward = csls_translate(index, src, tgt, [0])
        assert forward[0] == 0  # sanity: source 0 does prefer t0
        induced = induce_synthetic_dictionary(index, src, tgt)
        assert [0, 0] not in induced.pairs.tolist()
        assert induced.pairs.tolist() == [[1, 0], [2, 1]]

    def test_each_index_appears_at_most_once(self):
        src_mat, tgt_mat = random_instance(25, 25, 5, seed=77)
        src, tgt = make_emb(src_mat), make_emb(tgt_mat)
        index = build_csls_index(src, tgt, k=3)
        induced = induce_synthetic_dictionary(index, src, tgt)
        assert len(set(induced.source_indices.tolist())) == len(induced)
        assert len(set(induced.target_indices.tolist())) == len(induced)

    def test_exclude_existing_pairs(self):
        rng = np.random.default_rng(4)
        emb = make_emb(rng.normal(size=(6, 3)))
        index = build_csls_index(emb, emb, k=1)
        exclude = make_dict([(0, 0), (2, 2)], 6, 6)
        induced = induce_synthetic_dictionary(index, emb, emb, exclude=exclude)
        assert induced.pairs.tolist() == [[1, 1], [3, 3], [4, 4], [5, 5]]

    def test_max_rank_caps_candidates(self):
        rng = np.random.default_rng(13)
        emb = make_emb(rng.normal(size=(10, 4)))
        index = build_csls_index(emb, emb, k=2)
        induced = induce_synthetic_dictionary(index, emb, emb, max_rank=4)
        assert induced.pairs.tolist() == [[i, i] for i in range(4)]
        assert induced.src_vocab_size == 10  # still bound to the full vocabulary


class TestEvaluateBli:
    def test_identity_gold_perfect(self):
        rng = np.random.default_rng(31)
        emb = make_emb(rng.normal(size=(9, 4)))
        index = build_csls_index(emb, emb, k=2)
        gold = make_dict([(i, i) for i in range(9)], 9, 9)
        report = evaluate_bli(index, emb, emb, gold, emb.vocab, emb.vocab)
        assert report.p_at_1 == 1.0
        assert report.evaluated_words == 9
        assert report.oov_words == 0

    def test_multimap_either_target_counts(self):
        rng = np.random.default_rng(8)
        emb = make_emb(rng.normal(size=(5, 3)))
        index = build_csls_index(emb, emb, k=1)
        gold = make_dict([(0, 3), (0, 0)], 5, 5)  # prediction will be 0
        report = evaluate_bli(index, emb, emb, gold, emb.vocab, emb.vocab)
        assert report.p_at_1 == 1.0
        assert report.evaluated_words == 1
        assert report.per_word[0].gold == ["w3", "w0"]

    def test_gold_order_permutation_invariant(self):
        src_mat, tgt_mat = random_instance(12, 12, 4, seed=6)
        src, tgt = make_emb(src_mat), make_emb(tgt_mat)
        index = build_csls_index(src, tgt, k=2)
        pairs = [(i, (i * 5) % 12) for i in range(12)]
        rng = np.random.default_rng(0)
        perm = rng.permutation(12)
        a = evaluate_bli(index, src, tgt, make_dict(pairs, 12, 12), src.vocab, tgt.vocab)
        b = evaluate_bli(
            index, src, tgt, make_dict([pairs[i] for i in perm], 12, 12), src.vocab, tgt.vocab
        )
        assert a.p_at_1 == b.p_at_1

    def test_report_tsv_layout(self, tmp_path):
        rng = np.random.default_rng(2)
        emb = make_emb(rng.normal(size=(4, 3)))
        index = build_csls_index(emb, emb, k=1)
        gold = make_dict([(0, 0), (1, 1)], 4, 4)
        report = evaluate_bli(index, emb, emb, gold, emb.vocab, emb.vocab, oov_words=3)
        path = tmp_path / "report.tsv"
        write_bli_report(report, str(path))
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "source\tprediction\tgold\tcorrect\trank"
        assert lines[1].split("\t") == ["w0", "w0", "w0", "1", "0"]
        assert lines[-1].startswith("#p_at_1=1.000000")
        assert "oov=3" in lines[-1]


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_positive_scaling_never_changes_translations(seed):
    rng = np.random.default_rng(seed)
    n, m, d = 8, 9, 4
    src_mat, tgt_mat = rng.normal(size=(n, d)), rng.normal(size=(m, d))
    scale_src = rng.uniform(0.1, 10.0, size=(n, 1))
    scale_tgt = rng.uniform(0.1, 10.0, size=(m, 1))
    base_src, base_tgt = make_emb(src_mat), make_emb(tgt_mat)
    scaled_src, scaled_tgt = make_emb(src_mat * scale_src), make_emb(tgt_mat * scale_tgt)
    k = 3
    base_idx = build_csls_index(base_src, base_tgt, k)
    scaled_idx = build_csls_index(scaled_src, scaled_tgt, k)
    base = csls_translate(base_idx, base_src, base_tgt, np.arange(n))
    scaled = csls_translate(scaled_idx, scaled_src, scaled_tgt, np.arange(n))
    np.testing.assert_array_equal(base, scaled)
