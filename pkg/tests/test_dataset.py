import textwrap

import numpy as np
import pytest

from emotrans.affect import EMOTIONS, Emotion
from emotrans.dataset import (
    MAIN_ROLE_PERSONALITIES,
    DataError,
    Dataset,
    DialogTriple,
    Split,
    TransitionMatrix,
    dataset_stats,
    parse_triples,
    transition_dispersion,
    transition_matrix,
    write_triples,
)

HEADER = "role,O,C,E,A,N,split,u1,e1,u2,e2,u3,e3"


def _row(role="Ross", split="Train", u1="hi there", e1="Joy", u2="oh", e2="Neutral",
         u3="bye now", e3="Sadness", traits="0.722,0.489,0.6,0.533,0.356"):
    return f"{role},{traits},{split},{u1},{e1},{u2},{e2},{u3},{e3}"


def _write(tmp_path, text, name="triples.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _triple(role="Ross", e1=Emotion.ANGER, e3=Emotion.JOY, split=Split.TRAIN,
            u1="a b", u2="c", u3="d e f", e2=None):
    return DialogTriple(
        role=role,
        personality=MAIN_ROLE_PERSONALITIES[role],
        u1=u1, u2=u2, u3=u3, e1=e1, e2=e2, e3=e3, split=split,
    )


# ---------------------------------------------------------------------------
# Parsing


def test_parse_well_formed_file(tmp_path):
    text = "\n".join([HEADER, _row(), _row(split="Valid"), _row(split="Test")]) + "\n"
    d = parse_triples(_write(tmp_path, text))
    assert len(d) == 3
    assert d.skipped_rows == 0
    assert d.triples[0].e1 is Emotion.JOY
    assert d.triples[0].personality == MAIN_ROLE_PERSONALITIES["Ross"]
    assert {t.split for t in d.triples} == {Split.TRAIN, Split.VALID, Split.TEST}


def test_parse_skips_bad_emotion_in_lenient_mode(tmp_path):
    text = "\n".join([HEADER, _row(), _row(e1="Jooy")]) + "\n"
    d = parse_triples(_write(tmp_path, text))
    assert len(d) == 1
    assert d.skipped_rows == 1


def test_parse_strict_mode_aborts_with_line_number(tmp_path):
    text = "\n".join([HEADER, _row(), _row(e1="Jooy")]) + "\n"
    with pytest.raises(DataError, match=r":3: .*Jooy"):
        parse_triples(_write(tmp_path, text), strict=True)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"traits": "1.2,0.4,0.6,0.5,0.3"},  # trait outside [0,1]
        {"traits": "x,0.4,0.6,0.5,0.3"},  # unparseable trait
        {"split": "Dev"},  # unknown split tag
        {"u2": "  "},  # empty utterance after trimming
        {"e3": "Happy"},  # unknown emotion
    ],
)
def test_parse_rejects_malformed_rows(tmp_path, kwargs):
    text = "\n".join([HEADER, _row(**kwargs)]) + "\n"
    d = parse_triples(_write(tmp_path, text))
    assert len(d) == 0
    assert d.skipped_rows == 1
    with pytest.raises(DataError):
        parse_triples(_write(tmp_path, text, "strict.csv"), strict=True)


def test_parse_optional_e2(tmp_path):
    text = "\n".join([HEADER, _row(e2="")]) + "\n"
    d = parse_triples(_write(tmp_path, text))
    assert d.triples[0].e2 is None


def test_parse_tolerates_column_reordering(tmp_path):
    text = textwrap.dedent(
        """\
        split,e1,e3,u1,u2,u3,role,O,C,E,A,N,e2
        Train,Anger,Joy,first line,second,third,Ross,0.722,0.489,0.6,0.533,0.356,Neutral
        """
    )
    d = parse_triples(_write(tmp_path, text))
    assert len(d) == 1
    t = d.triples[0]
    assert t.e1 is Emotion.ANGER and t.e3 is Emotion.JOY
    assert t.u1 == "first line"


def test_parse_missing_header_column_is_fatal(tmp_path):
    text = "role,O,C,E,A,N,split,u1,e1,u2,e2,u3\n"
    with pytest.raises(DataError, match="missing columns.*e3"):
        parse_triples(_write(tmp_path, text))


def test_parse_missing_file():
    with pytest.raises(DataError, match="cannot open"):
        parse_triples("/nonexistent/peld.csv")


def test_parse_case_insensitive_split_tags(tmp_path):
    text = "\n".join([HEADER, _row(split="train"), _row(split="TEST")]) + "\n"
    d = parse_triples(_write(tmp_path, text))
    assert [t.split for t in d.triples] == [Split.TRAIN, Split.TEST]


def test_parse_rejects_personality_disagreement(tmp_path):
    text = "\n".join(
        [HEADER, _row(), _row(traits="0.1,0.489,0.6,0.533,0.356")]
    ) + "\n"
    d = parse_triples(_write(tmp_path, text))
    assert len(d) == 1
    assert d.skipped_rows == 1


def test_write_parse_round_trip(tmp_path, corpus):
    path = tmp_path / "out.csv"
    write_triples(corpus, str(path))
    back = parse_triples(str(path), strict=True)
    assert back.triples == corpus.triples
    assert back.role_table == corpus.role_table


def test_round_trip_preserves_commas_and_quotes(tmp_path):
    d = Dataset(
        (_triple(u1='say "hi", please', u2="a, b, and c"),),
        {"Ross": MAIN_ROLE_PERSONALITIES["Ross"]},
    )
    path = tmp_path / "quoted.csv"
    write_triples(d, str(path))
    back = parse_triples(str(path), strict=True)
    assert back.triples[0].u1 == 'say "hi", please'
    assert back.triples[0].u2 == "a, b, and c"


# ---------------------------------------------------------------------------
# Statistics


def test_stats_empty_dataset():
    stats = dataset_stats(Dataset((), {}))
    assert stats.triple_counts == {"train": 0, "valid": 0, "test": 0, "total": 0}
    assert all(v == 0 for v in stats.unique_utterances.values())
    assert all(v == 0.0 for v in stats.avg_utterance_length.values())
    assert all(all(v == 0 for v in row.values()) for row in stats.emotion_counts.values())


def test_stats_hand_counts():
    triples = (
        _triple(e1=Emotion.ANGER, e2=Emotion.NEUTRAL, e3=Emotion.JOY,
                u1="one two", u2="three", u3="four five six"),
        _triple(e1=Emotion.JOY, e2=None, e3=Emotion.JOY, split=Split.VALID,
                u1="one two", u2="seven", u3="eight"),
    )
    stats = dataset_stats(Dataset(triples, {"Ross": MAIN_ROLE_PERSONALITIES["Ross"]}))
    assert stats.triple_counts == {"train": 1, "valid": 1, "test": 0, "total": 2}
    # slot tally: Anger 1, Neutral 1, Joy 3
    assert stats.emotion_counts["Anger"]["total"] == 1
    assert stats.emotion_counts["Neutral"]["total"] == 1
    assert stats.emotion_counts["Joy"]["total"] == 3
    # endpoints only: Joy 3 (e1+e3+e3), Neutral 0
    assert stats.emotion_counts_endpoints["Joy"]["total"] == 3
    assert stats.emotion_counts_endpoints["Neutral"]["total"] == 0
    # "one two" appears in both splits: counted per split, once in total
    assert stats.unique_utterances["train"] == 3
    assert stats.unique_utterances["valid"] == 3
    assert stats.unique_utterances["total"] == 5
    # train uniques: "one two"(2) "three"(1) "four five six"(3) -> mean 2.0
    assert stats.avg_utterance_length["train"] == pytest.approx(2.0)
    assert stats.position_emotions["e_i"] == {
        "Anger": 1, "Disgust": 0, "Fear": 0, "Joy": 1, "Neutral": 0, "Sadness": 0, "Surprise": 0,
    }
    assert stats.position_emotions["e_r"]["Joy"] == 2
    assert stats.position_sentiments["s_r"] == {"Negative": 0, "Neutral": 0, "Positive": 2}


def test_stats_totals_equal_split_sums(corpus):
    stats = dataset_stats(corpus)
    for table in (stats.emotion_counts, stats.sentiment_counts, stats.role_counts):
        for row in table.values():
            assert row["total"] == row["train"] + row["valid"] + row["test"]
    assert stats.triple_counts["total"] == sum(
        stats.triple_counts[k] for k in ("train", "valid", "test")
    )


def test_stats_sentiments_are_image_of_emotions(corpus):
    stats = dataset_stats(corpus)
    for key in ("train", "valid", "test", "total"):
        assert stats.sentiment_counts["Positive"][key] == (
            stats.emotion_counts["Joy"][key] + stats.emotion_counts["Surprise"][key]
        )
        assert stats.sentiment_counts["Neutral"][key] == stats.emotion_counts["Neutral"][key]
        assert stats.sentiment_counts["Negative"][key] == sum(
            stats.emotion_counts[e][key] for e in ("Anger", "Disgust", "Fear", "Sadness")
        )


def test_stats_json_has_stable_shape(corpus):
    doc = dataset_stats(corpus).to_json_dict()
    assert doc["total_triples"] == len(corpus)
    assert list(doc["emotions"]) == [e.value for e in EMOTIONS]


# ---------------------------------------------------------------------------
# Transition matrices


def test_transition_single_triple():
    d = Dataset((_triple(e1=Emotion.ANGER, e3=Emotion.JOY),),
                {"Ross": MAIN_ROLE_PERSONALITIES["Ross"]})
    m = transition_matrix(d)
    assert m.counts[Emotion.ANGER.index, Emotion.JOY.index] == 1
    assert m.ratios[Emotion.ANGER.index, Emotion.JOY.index] == 1.0
    assert m.counts.sum() == 1


def test_transition_hand_ratios():
    d = Dataset(
        (_triple(e1=Emotion.ANGER, e3=Emotion.JOY),
         _triple(e1=Emotion.ANGER, e3=Emotion.NEUTRAL)),
        {"Ross": MAIN_ROLE_PERSONALITIES["Ross"]},
    )
    m = transition_matrix(d)
    row = m.ratios[Emotion.ANGER.index]
    assert row[Emotion.JOY.index] == 0.5
    assert row[Emotion.NEUTRAL.index] == 0.5
    assert m.row_empty[Emotion.FEAR.index]
    assert np.all(m.ratios[Emotion.FEAR.index] == 0.0)


def test_transition_unknown_role(corpus):
    with pytest.raises(DataError, match="unknown role"):
        transition_matrix(corpus, "Gunther")


def test_transition_role_filter_and_count_sum(corpus):
    overall = transition_matrix(corpus)
    by_role = [transition_matrix(corpus, role) for role in sorted(corpus.role_table)]
    assert np.array_equal(overall.counts, sum(m.counts for m in by_role))


def test_transition_rows_are_stochastic(corpus):
    m = transition_matrix(corpus)
    sums = m.ratios.sum(axis=1)
    for i in range(7):
        if m.row_empty[i]:
            assert sums[i] == 0.0
        else:
            assert abs(sums[i] - 1.0) < 1e-9
    assert np.all((m.ratios >= 0) & (m.ratios <= 1))


# ---------------------------------------------------------------------------
# Dispersion


def _matrix_with_anger_row(row_counts):
    counts = np.zeros((7, 7), dtype=np.int64)
    counts[0, : len(row_counts)] = row_counts
    row_sums = counts.sum(axis=1)
    ratios = np.zeros((7, 7))
    nz = row_sums > 0
    ratios[nz] = counts[nz] / row_sums[nz, None]
    return TransitionMatrix(None, counts, ratios)


def test_dispersion_identical_matrices_is_zero(corpus):
    m = transition_matrix(corpus)
    report = transition_dispersion([m, m])
    for row in report.rows:
        if row.inf_norm_std is not None:
            assert row.inf_norm_std == 0.0
            assert row.l2_norm_std == 0.0


def test_dispersion_hand_example():
    a = _matrix_with_anger_row([1])  # ratios (1, 0, ..., 0)
    b = _matrix_with_anger_row([1, 1])  # ratios (0.5, 0.5, 0, ..., 0)
    report = transition_dispersion([a, b])
    anger = report.rows[0]
    assert anger.contributing == 2
    assert anger.inf_norm_std == pytest.approx(0.25, abs=1e-12)
    assert anger.l2_norm_std == pytest.approx(0.14644660940672621, abs=1e-12)


def test_dispersion_requires_two_matrices(corpus):
    with pytest.raises(ValueError, match="at least 2"):
        transition_dispersion([transition_matrix(corpus)])


def test_dispersion_skips_rows_with_single_contributor():
    a = _matrix_with_anger_row([1])
    b = _matrix_with_anger_row([0])  # anger row empty here
    report = transition_dispersion([a, b])
    anger = report.rows[0]
    assert anger.contributing == 1
    assert anger.inf_norm_std is None and anger.l2_norm_std is None
    # rows empty in every matrix are absent too
    assert report.rows[3].contributing == 0


def test_dataset_subset(corpus):
    train = corpus.subset(Split.TRAIN)
    assert train
    assert all(t.split is Split.TRAIN for t in train)
    assert len(train) + len(corpus.subset(Split.VALID)) + len(corpus.subset(Split.TEST)) == len(corpus)
