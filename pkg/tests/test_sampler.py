import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from editbench.kg import Entity
from editbench.retrieval import ScoredEntity
from editbench.sampler import (
    HeadSampler,
    NoCandidateError,
    SamplerConfig,
    description_segments,
    sample_heads,
    similarity,
    weighted_draw,
    weighted_index,
)

CFG = SamplerConfig()


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def tvd(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def test_segments():
    assert description_segments("study of stars and stars") == {"study", "of", "stars", "and"}
    assert description_segments("") == frozenset()
    assert description_segments("black-hole physics") == {"black", "hole", "physics"}


def test_similarity_worked_example():
    e, s = Entity("Q1", "e", "black hole astro"), Entity("Q2", "s", "black hole star")
    assert similarity(e, s, ["hole"], SamplerConfig(delta_in=0.2, delta_out=1.0)) == pytest.approx(0.4, abs=1e-12)


def test_similarity_identity_case():
    e = Entity("Q1", "e", "alpha beta gamma delta")
    assert similarity(e, e, ["nothing"], CFG) == 1.0


def test_similarity_disjoint_and_empty():
    assert similarity(Entity("Q1", "a", "red"), Entity("Q2", "b", "blue"), [], CFG) == 0.0
    assert similarity(Entity("Q1", "a", ""), Entity("Q2", "b", "blue"), [], CFG) == 0.0


def test_multiword_keyword_segments_count_as_inside():
    e, s = Entity("Q1", "e", "dark energy"), Entity("Q2", "s", "dark energy")
    assert similarity(e, s, ["dark energy"], CFG) == pytest.approx(0.2)


def test_weighted_index_frequencies():
    g = rng(1)
    counts = np.bincount([weighted_index([1, 3], g) for _ in range(100_000)], minlength=2) / 100_000
    assert tvd(counts, [0.25, 0.75]) <= 0.02


def test_weighted_index_zero_weight_never_drawn():
    g = rng(2)
    assert {weighted_index([0, 5], g) for _ in range(1000)} == {1}
    assert weighted_draw(["a", "b"], [0, 5], g) == "b"


@pytest.mark.parametrize("weights", [[0, 0], []])
def test_weighted_index_no_candidate(weights):
    with pytest.raises(NoCandidateError):
        weighted_index(weights, rng())


@pytest.mark.parametrize("weights", [[1, -1], [1, float("nan")], [float("inf"), 1]])
def test_weighted_index_rejects_bad_weights(weights):
    with pytest.raises(ValueError):
        weighted_index(weights, rng())


@pytest.mark.parametrize("kw", [dict(gamma=1.0), dict(delta_in=0), dict(delta_in=2.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SamplerConfig(**kw)


def test_single_candidate():
    ents = {"Q1": Entity("Q1", "a", "star")}
    assert sample_heads([ScoredEntity("Q1", 2.0, 1)], ents, ["star"], CFG, rng(), n=1) == ["Q1"]


def test_exhaustion_returns_shorter_list(caplog):
    ents = {f"Q{i}": Entity(f"Q{i}", "a", "star") for i in range(3)}
    cands = [ScoredEntity(f"Q{i}", 1.0, 1) for i in range(3)]
    out = sample_heads(cands, ents, ["star"], CFG, rng(), n=10)
    assert sorted(out) == ["Q0", "Q1", "Q2"]
    assert "exhausted" in caplog.text


def test_no_positive_candidates():
    with pytest.raises(NoCandidateError):
        sample_heads([ScoredEntity("Q1", 1.0, 0)], {"Q1": Entity("Q1", "a", "")}, [], CFG, rng(), n=1)


# --------------------------------------------------------------------------- oracle

WORDS = ["star", "galaxy", "black", "hole", "nebula", "red", "giant", "dwarf", "cluster", "dust"]
KEYWORDS = ["star", "black hole", "nebula"]


def fixture_20(seed=3):
    g = rng(seed)
    ents, cands = {}, []
    for i in range(20):
        words = list(g.choice(WORDS, size=int(g.integers(0, 6))))
        eid = f"Q{i + 1}"
        ents[eid] = Entity(eid, eid, " ".join(words))
        cands.append(ScoredEntity(eid, float(g.uniform(0.5, 5.0)), int(g.integers(1, 4))))
    return ents, cands


def oracle_sim(e_desc: str, s_desc: str, keywords, d_in=0.2, d_out=1.0) -> float:
    """Independent restatement: shared segments weighted by keyword membership, over |segments(e)|."""
    seg_e = set(e_desc.lower().split())
    if not seg_e:
        return 0.0
    inside = {w for k in keywords for w in k.lower().split()}
    shared = seg_e & set(s_desc.lower().split())
    return sum(d_in if u in inside else d_out for u in shared) / len(seg_e)


def oracle_probs(ents, cands, chosen, gamma=1.05):
    w = []
    for c in cands:
        if c.id in chosen:
            w.append(0.0)
            continue
        psi = sum(oracle_sim(ents[c.id].description, ents[s].description, KEYWORDS) for s in chosen)
        w.append(c.es * c.em / gamma ** psi)
    total = sum(w)
    return [x / total for x in w]


def test_incremental_probabilities_match_brute_force():
    ents, cands = fixture_20()
    hs = HeadSampler(cands, ents, KEYWORDS, CFG, rng(11))
    while not hs.exhausted:
        np.testing.assert_allclose(hs.probabilities(), oracle_probs(ents, cands, hs.order), rtol=0, atol=1e-9)
        direct = hs.weights()
        np.testing.assert_allclose(direct / direct.sum(), hs.probabilities(), rtol=0, atol=1e-9)
        hs.step()
    assert sorted(hs.order) == sorted(c.id for c in cands)


def test_psi_matches_brute_force():
    ents, cands = fixture_20(5)
    hs = HeadSampler(cands, ents, KEYWORDS, CFG, rng(4))
    for _ in range(10):
        hs.step()
    for i, c in enumerate(cands):
        want = sum(oracle_sim(ents[c.id].description, ents[s].description, KEYWORDS) for s in hs.order)
        assert hs.psi[i] == pytest.approx(want, abs=1e-12)


def frozen_state():
    ents = {
        "Q1": Entity("Q1", "a", "red giant star"),
        "Q2": Entity("Q2", "b", "red dwarf"),
        "Q3": Entity("Q3", "c", "spiral galaxy"),
        "Q4": Entity("Q4", "d", "red giant"),
    }
    cands = [ScoredEntity("Q1", 2.0, 1), ScoredEntity("Q2", 1.0, 2), ScoredEntity("Q3", 1.5, 1),
             ScoredEntity("Q4", 3.0, 1)]
    hs = HeadSampler(cands, ents, ["star"], SamplerConfig(gamma=2.0), rng(0))
    # force Q4 as the first pick so three candidates remain with distinct decays
    hs.chosen[3] = True
    hs.order.append("Q4")
    hs._absorb(3)
    return hs


def test_frozen_state_probabilities_by_hand():
    hs = frozen_state()
    # psi: Q1 shares {red, giant} -> 2/3; Q2 shares {red} -> 1/2; Q3 -> 0
    want = np.array([2.0 / 2 ** (2 / 3), 2.0 / 2 ** 0.5, 1.5, 0.0])
    np.testing.assert_allclose(hs.probabilities(), want / want.sum(), atol=1e-12)


def test_frozen_state_empirical_frequencies():
    hs = frozen_state()
    p = hs.probabilities()
    g = rng(99)
    draws = [weighted_index(p, g) for _ in range(100_000)]
    freq = np.bincount(draws, minlength=4) / len(draws)
    assert freq[3] == 0
    assert tvd(freq, p) <= 0.02


def test_large_decay_does_not_underflow():
    ents = {"Q1": Entity("Q1", "a", "x"), "Q2": Entity("Q2", "b", "y")}
    hs = HeadSampler([ScoredEntity("Q1", 1.0, 1), ScoredEntity("Q2", 1.0, 1)], ents, [], CFG, rng())
    hs.psi[:] = [20_000.0, 20_001.0]
    p = hs.probabilities()
    assert math.isclose(p.sum(), 1.0) and p[0] == pytest.approx(1.05 / 2.05)


def test_fixed_seed_identical_sequence():
    ents, cands = fixture_20()
    a = sample_heads(cands, ents, KEYWORDS, CFG, rng(8), n=12)
    b = sample_heads(cands, ents, KEYWORDS, CFG, rng(8), n=12)
    assert a == b


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 5), st.integers(0, 3), st.lists(st.sampled_from(WORDS), max_size=4)),
                min_size=1, max_size=12),
       st.integers(0, 15), st.integers(0, 2**32 - 1))
def test_sample_heads_properties(rows, n, seed):
    ents = {f"Q{i}": Entity(f"Q{i}", "x", " ".join(w)) for i, (_, _, w) in enumerate(rows)}
    cands = [ScoredEntity(f"Q{i}", es, em) for i, (es, em, _) in enumerate(rows)]
    positive = {c.id for c in cands if c.iw > 0}
    if not positive:
        with pytest.raises(NoCandidateError):
            sample_heads(cands, ents, KEYWORDS, CFG, rng(seed), n=n)
        return
    out = sample_heads(cands, ents, KEYWORDS, CFG, rng(seed), n=n)
    assert len(out) == len(set(out)) == min(n, len(positive))
    assert set(out) <= positive
