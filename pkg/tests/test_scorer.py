import pytest
import scoring_fixture as fx
from records import make_record

from editbench.scorer import EmptyReportError, ScoringError, read_log, score_dataset, score_sample


def test_hand_scored_fixture():
    report = score_dataset(fx.records(), fx.log())
    for m in ("reliability", "generality", "locality"):
        assert getattr(report, m) == pytest.approx(fx.EXPECTED[m], abs=1e-9)
        assert report.counts[m]["not_scorable"] == fx.EXPECTED["not_scorable"][m]
        assert report.counts[m]["bridged"] == fx.EXPECTED["bridged"][m]
    for domain, want in fx.EXPECTED["by_domain"].items():
        for m, v in want.items():
            assert report.by_domain[domain][m] == pytest.approx(v, abs=1e-9)
    assert report.diagnostics == {}


def test_cloze_top5_hit():
    rec = make_record(0)
    entry = {"topk": [["Par", "a", "b", "c", "d"], ["x", "y", "is", "z", "w"]], "target_tokens": ["Par", "is"]}
    assert score_sample("generality", rec.generality, entry).hit == 1
    assert score_sample("edit", None, entry).hit == 1


def test_cloze_token_outside_top5_misses():
    entry = {"topk": [["a", "b", "c", "d", "e", "Par"], ["is"] * 5], "target_tokens": ["Par", "is"]}
    assert score_sample("edit", None, entry).hit == 0


def test_judgment_no_scores_zero():
    rec = make_record(0, "double")
    assert score_sample("generality", rec.generality, {"top1": "No", "hops_known": [True, True]}).hit == 0
    assert score_sample("generality", rec.generality, {"top1": "Yes", "hops_known": [True, True]}).hit == 1


def test_two_hop_unknown_unbridged_not_scorable():
    rec = make_record(0, "2hop")
    entry = {"topk": fx.HIT, "target_tokens": fx.TOK, "hops_known": [True, False]}
    assert not score_sample("generality", rec.generality, entry, rec.edit.triple).scorable


def test_unknown_edit_hop_does_not_count():
    # the edited hop itself is expected to be unknown before the edit
    rec = make_record(0, "2hop")
    entry = {"topk": fx.HIT, "target_tokens": fx.TOK, "hops_known": [False, True]}
    assert score_sample("generality", rec.generality, entry, rec.edit.triple).hit == 1


def test_reliability_four_of_five():
    recs = [make_record(i) for i in range(5)]
    log = [{"record_id": r.id, "sample": "edit", "topk": fx.HIT if i < 4 else fx.MISS, "target_tokens": fx.TOK}
           for i, r in enumerate(recs)]
    assert score_dataset(recs, log).reliability == 80.0


def test_locality_matches_pre_edit_output():
    recs = [make_record(i) for i in range(3)]
    log = [{"record_id": r.id, "sample": "locality", "topk": fx.HIT, "pre_edit_tokens": fx.TOK} for r in recs]
    report = score_dataset(recs, log)
    assert report.locality == 100.0
    assert report.reliability is None and report.generality is None


def test_empty_intersection_raises():
    with pytest.raises(EmptyReportError):
        score_dataset([make_record(0)], [{"record_id": "other", "sample": "edit"}])
    with pytest.raises(EmptyReportError):
        score_dataset([make_record(0)], [])


def test_malformed_entries_counted():
    recs = [make_record(0), make_record(1, "2hop")]
    log = [
        {"record_id": recs[0].id, "sample": "edit", "topk": fx.HIT, "target_tokens": fx.TOK},
        {"record_id": recs[0].id, "sample": "edit", "topk": [["Par"]], "target_tokens": fx.TOK},
        {"record_id": recs[1].id, "sample": "generality", "topk": fx.HIT, "target_tokens": fx.TOK},
        {"record_id": recs[1].id, "sample": "bogus"},
    ]
    report = score_dataset(recs, log)
    assert report.reliability == 100.0
    assert report.diagnostics == {"malformed-entry": 2, "unknown-sample-kind": 1}


@pytest.mark.parametrize("entry", [{"topk": fx.HIT}, {"topk": fx.HIT, "target_tokens": []},
                                   {"topk": [["Par"] * 5], "target_tokens": fx.TOK}])
def test_bad_cloze_entries_raise(entry):
    with pytest.raises(ScoringError):
        score_sample("edit", None, entry)


def test_by_criteria_breakdown():
    report = score_dataset(fx.records(), fx.log())
    assert report.by_criteria["generality"]["MH+SER"] == 50.0
    assert report.by_criteria["locality"]["MH+WO"] == 100.0


def test_read_log_skips_blank_lines():
    assert read_log(['{"a": 1}', "", "  ", '{"b": 2}']) == [{"a": 1}, {"b": 2}]
