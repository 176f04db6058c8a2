import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmd.agents import AgentConfig, DecompositionSet, FixtureLLM, render_retrieval
from rmd.corpus import EMBEDDING_KEYS, DatabaseEntry, MotionDatabase, StubEmbedder, TableEmbedder
from rmd.errors import InvalidArgumentError
from rmd.retrieval import (
    HierarchicalRetriever,
    Query,
    RetrievalConfig,
    RetrievalPlan,
    choose_level,
    hierarchical_retrieve,
    naive_retrieve,
    retrieve_part_with_agent,
    similarity_score,
    similarity_scores,
)

TAG = "table-test"


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def entry(eid, length, vectors, texts=None):
    """``vectors``: key -> vector; missing keys reuse the 'full' vector."""
    d = DecompositionSet(*(f"{eid} {p}" for p in ("u", "l", "h", "t", "la", "ra", "lb", "tr")))
    emb = {k: unit(vectors.get(k, vectors["full"])) for k in EMBEDDING_KEYS}
    return DatabaseEntry(eid, f"{eid}.json", length, 20, texts or [f"text of {eid}"], d, emb)


def make_db(entries, dim):
    return MotionDatabase(entries, embedding_dim=dim, provider_tag=TAG)


class TestSimilarity:
    def test_identical_same_length(self):
        v = unit([1, 2, 3])
        assert similarity_score(v, v, 40, 40) == pytest.approx(1.0, abs=1e-15)

    def test_equal_lengths_is_cosine(self):
        a, b = np.array([1.0, 0.0]), np.array([0.9, math.sqrt(1 - 0.81)])
        assert similarity_score(a, b, 60, 60) == pytest.approx(0.9, abs=1e-15)

    def test_worked_value(self):
        v = unit([0, 1])
        s = similarity_score(v, v, 60, 120, 0.05)
        assert s == pytest.approx(math.exp(-0.025), abs=1e-15)
        assert round(s, 7) == 0.9753099

    def test_dim_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            similarity_score(unit([1, 0]), unit([1, 0, 0]), 5, 5)

    def test_non_unit_rejected(self):
        with pytest.raises(InvalidArgumentError):
            similarity_score([2.0, 0.0], unit([1, 0]), 5, 5)

    def test_zero_length_rejected(self):
        with pytest.raises(InvalidArgumentError):
            similarity_score(unit([1, 0]), unit([1, 0]), 0, 5)

    @given(st.floats(-1, 1), st.integers(1, 400), st.integers(1, 400), st.integers(1, 400), st.floats(0, 2))
    def test_monotone_in_length_gap(self, cos, l_p, a, b, lam):
        f_i, f_p = np.array([1.0, 0.0]), np.array([cos, math.sqrt(max(0.0, 1 - cos * cos))])
        near, far = sorted([a, b], key=lambda n: abs(n - l_p) / max(n, l_p))
        s_near, s_far = similarity_score(f_i, f_p, near, l_p, lam), similarity_score(f_i, f_p, far, l_p, lam)
        if cos >= 0:
            assert s_near >= s_far - 1e-15
        assert -1 <= s_far <= 1

    @given(st.floats(-1, 1), st.floats(-1, 1), st.integers(1, 300), st.integers(1, 300))
    def test_increasing_in_cosine(self, c1, c2, l_i, l_p):
        lo, hi = sorted([c1, c2])
        base = np.array([1.0, 0.0])
        s_lo = similarity_score(base, [lo, math.sqrt(max(0.0, 1 - lo * lo))], l_i, l_p)
        s_hi = similarity_score(base, [hi, math.sqrt(max(0.0, 1 - hi * hi))], l_i, l_p)
        assert s_hi >= s_lo - 1e-15

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(0)
        m = np.array([unit(r) for r in rng.standard_normal((10, 6))])
        q = unit(rng.standard_normal(6))
        lengths = rng.integers(1, 200, 10)
        s = similarity_scores(m, q, lengths, 77)
        for i in range(10):
            assert s[i] == pytest.approx(similarity_score(m[i], q, int(lengths[i]), 77), abs=1e-14)


class TestPolicy:
    cfg = RetrievalConfig()

    def test_examples(self):
        assert choose_level(0.97, None, self.cfg) == "full"
        assert choose_level(0.90, (0.97 + 0.99) / 2, self.cfg) == "half"
        assert choose_level(0.90, 0.95, self.cfg) == "fine"

    def test_thresholds_inclusive(self):
        assert choose_level(0.96, 0.0, self.cfg) == "full"
        assert choose_level(0.5, 0.96, self.cfg) == "half"

    def test_config_validation(self):
        with pytest.raises(InvalidArgumentError):
            RetrievalConfig(lam=-1)
        with pytest.raises(InvalidArgumentError):
            RetrievalConfig(tau_full=1.5)
        with pytest.raises(InvalidArgumentError):
            RetrievalConfig(score_rule="mean")


class TestNaive:
    def test_single_entry(self):
        db = make_db([entry("only", 10, {"full": [0, 1]})], 2)
        m = naive_retrieve(db, unit([1, 0]), 50)
        assert m.entry_id == "only" and m.score == pytest.approx(0.0, abs=1e-15)

    def test_length_breaks_equal_cosine(self):
        db = make_db([entry("long", 100, {"full": [1, 0]}), entry("short", 60, {"full": [1, 0]})], 2)
        m = naive_retrieve(db, unit([1, 0]), 60)
        assert m.entry_id == "short" and m.score == pytest.approx(1.0)
        # the loser scores exp(-0.05 * 0.4)
        assert similarity_scores(db.matrix("full"), unit([1, 0]), db.lengths, 60)[0] == pytest.approx(
            math.exp(-0.02))

    def test_tie_goes_to_smallest_id(self):
        db = make_db([entry("b", 30, {"full": [1, 0]}), entry("a", 30, {"full": [1, 0]})], 2)
        assert naive_retrieve(db, unit([1, 0]), 30).entry_id == "a"

    def test_lambda_zero_is_cosine_ranking(self):
        rng = np.random.default_rng(3)
        entries = [entry(f"e{i}", int(rng.integers(1, 200)), {"full": rng.standard_normal(5)}) for i in range(30)]
        db = make_db(entries, 5)
        for _ in range(20):
            q = unit(rng.standard_normal(5))
            best = int(np.argmax(db.matrix("full") @ q))
            assert naive_retrieve(db, q, 50, lam=0.0).entry_id == db.ids[best]

    def test_empty(self):
        with pytest.raises(InvalidArgumentError):
            naive_retrieve(make_db([], 2), unit([1, 0]), 5)


def agent_setup():
    """Four entries on basis axes; query description i points at entry i with cosine c_i."""
    cos = [0.90, 0.92, 0.94, 0.99]
    lengths = [60, 80, 60, 100]
    entries = []
    for i in range(4):
        v = np.zeros(5)
        v[i] = 1.0
        entries.append(entry(f"e{i + 1}", lengths[i], {"full": v}))
    db = make_db(entries, 5)
    table = {}
    for i, c in enumerate(cos):
        q = np.zeros(5)
        q[i], q[4] = c, math.sqrt(1 - c * c)
        table[f"query {i + 1}"] = q
    return db, TableEmbedder(table, TAG), cos, lengths


class TestAgentRetrieval:
    def test_selected_entry_with_max_score(self):
        db, emb, cos, lengths = agent_setup()
        descs = [f"query {i + 1}" for i in range(4)]
        # enumerate scores of every (query, entry) pair by the formula
        oracle = [max(cos[i] * math.exp(-0.05 * abs(l - 60) / max(l, 60)) * (i == j)
                      for j, l in enumerate(lengths)) for i in range(4)]
        assert int(np.argmax(oracle)) == 3
        cand_texts = [db[f"e{i + 1}"].descriptions()["half.lower"] for i in range(4)]
        llm = FixtureLLM().add(render_retrieval("lower", "orig", cand_texts), "second one\n2")
        sel = retrieve_part_with_agent(db, "lower", "orig", descs, 60, llm, emb)
        assert sel.entry_id == "e2"
        assert sel.score == pytest.approx(oracle[3], abs=1e-6)
        assert sel.selected_score == pytest.approx(oracle[1], abs=1e-6)
        assert not sel.fallback
        sel2 = retrieve_part_with_agent(db, "lower", "orig", descs, 60, llm, emb,
                                        RetrievalConfig(score_rule="selected"))
        assert sel2.score == pytest.approx(oracle[1], abs=1e-6)

    def test_single_description_no_llm(self):
        db, emb, *_ = agent_setup()
        llm = FixtureLLM(default="1")
        sel = retrieve_part_with_agent(db, "upper", "orig", ["query 3"], 60, llm, emb)
        naive = naive_retrieve(db, emb.embed(["query 3"])[0], 60, "half.upper")
        assert (sel.entry_id, sel.score) == (naive.entry_id, naive.score)
        assert llm.call_count == 0

    def test_degenerate_candidates(self):
        db, emb, *_ = agent_setup()
        llm = FixtureLLM(default="1")
        sel = retrieve_part_with_agent(db, "head", "orig", ["query 4"] * 5, 60, llm, emb)
        assert sel.entry_id == "e4" and llm.call_count == 0 and len(sel.candidates) == 1

    def test_embedder_tag_checked(self):
        db, *_ = agent_setup()
        with pytest.raises(InvalidArgumentError):
            hierarchical_retrieve(db, Query("x", 5), RetrievalConfig(), FixtureLLM(), StubEmbedder())


class TestHierarchical:
    def plan(self, fixture_db, fixture_corpus, level, **kw):
        prompt, length = fixture_corpus.queries[level]
        return hierarchical_retrieve(fixture_db, Query(prompt, length), RetrievalConfig(),
                                     fixture_corpus.fresh_llm(), StubEmbedder(), **kw)

    def test_full(self, fixture_db, fixture_corpus):
        p = self.plan(fixture_db, fixture_corpus, "full")
        assert p.level == "full" and list(p.selections) == ["full"]
        assert p.selections["full"].entry_id == "m05"
        assert p.decided_scores["s_half_mean"] is None and p.decided_scores["s_full"] >= 0.96

    def test_full_makes_no_llm_calls(self, fixture_db, fixture_corpus):
        llm = fixture_corpus.fresh_llm()
        prompt, length = fixture_corpus.queries["full"]
        hierarchical_retrieve(fixture_db, Query(prompt, length), RetrievalConfig(), llm, StubEmbedder())
        assert llm.call_count == 0

    def test_half(self, fixture_db, fixture_corpus):
        p = self.plan(fixture_db, fixture_corpus, "half")
        assert p.level == "half" and set(p.selections) == {"upper", "lower"}
        upper, lower = p.selections["upper"].entry_id, p.selections["lower"].entry_id
        # upper source performs raise_left (m04..m07); lower source walks a circle (m01, m05, ...)
        assert upper in {"m04", "m05", "m06", "m07"}
        assert int(lower[1:]) % 4 == 1
        assert p.decided_scores["s_full"] < 0.96 <= p.decided_scores["s_half_mean"]

    def test_fine(self, fixture_db, fixture_corpus):
        p = self.plan(fixture_db, fixture_corpus, "fine")
        assert p.level == "fine" and len(p.selections) == 6
        assert p.decided_scores["s_half_mean"] < 0.96
        for s in p.selections.values():
            assert -1 <= s.score <= 1

    def test_deterministic(self, fixture_db, fixture_corpus):
        a = self.plan(fixture_db, fixture_corpus, "fine", seed=4)
        b = self.plan(fixture_db, fixture_corpus, "fine", seed=4)
        assert a.to_dict() == b.to_dict()

    def test_force_level(self, fixture_db, fixture_corpus):
        p = self.plan(fixture_db, fixture_corpus, "half", force_level="fine")
        assert p.level == "fine" and p.decided_scores["s_half_mean"] is not None

    def test_plan_roundtrip(self, fixture_db, fixture_corpus):
        p = self.plan(fixture_db, fixture_corpus, "fine")
        assert RetrievalPlan.from_dict(p.to_dict()).to_dict() == p.to_dict()

    def test_plan_invariants(self, fixture_db, fixture_corpus):
        p = self.plan(fixture_db, fixture_corpus, "half")
        with pytest.raises(InvalidArgumentError):
            RetrievalPlan("full", p.selections)

    def test_estimator(self, fixture_db, fixture_corpus):
        est = HierarchicalRetriever(llm=fixture_corpus.fresh_llm(), embedder=StubEmbedder(), k=3)
        assert est.get_params()["k"] == 3
        est.set_params(tau_full=0.999999)
        plans = est.fit(fixture_db).predict([fixture_corpus.queries["half"], fixture_corpus.queries["fine"]])
        assert [p.level for p in plans] == ["half", "fine"]
        assert len(plans[0].selections["upper"].query_descriptions) == 3

    def test_estimator_requires_embedded_db(self):
        with pytest.raises(InvalidArgumentError):
            HierarchicalRetriever(llm=FixtureLLM(), embedder=StubEmbedder()).fit(MotionDatabase([]))

    def test_agent_config_k_follows_retrieval(self, fixture_db, fixture_corpus):
        prompt, length = fixture_corpus.queries["half"]
        llm = fixture_corpus.fresh_llm()
        hierarchical_retrieve(fixture_db, Query(prompt, length), RetrievalConfig(k=2), llm, StubEmbedder(),
                              AgentConfig(k=5))
        # 2 samples x (half + fine prompt)
        assert sum(1 for p, _ in llm.calls if p.startswith("The following sentence")) == 4
