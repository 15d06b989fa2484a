"""Evaluation statistics against exact oracles and the published table row."""

from fractions import Fraction

import pytest

from relkit.metrics import (
    EvalError,
    accuracy,
    auc_roc,
    auc_roc_fraction,
    confusion,
    evaluate,
    format_confusion,
    format_logit_report,
    format_matrix,
    format_proportions,
    generalization_matrix,
    mean_logit_by_class,
    median_over_seeds,
    proportion_same,
)
from relkit.records import PredictionRecord
from relkit.seeds import derive_stream
from tests.oracles import auc_bruteforce


def pred(sid, score, predicted, logit=None):
    return PredictionRecord(
        stimulus_id=sid, score_same=score, predicted=predicted,
        model_id="m", seed_id=0, logit_same=logit,
    )


def scored_instance(scores_same, scores_diff):
    labels = {}
    preds = []
    for i, s in enumerate(scores_same):
        sid = f"s{i}"
        labels[sid] = "same"
        preds.append(pred(sid, s, "same" if s >= 0.5 else "different"))
    for i, s in enumerate(scores_diff):
        sid = f"d{i}"
        labels[sid] = "different"
        preds.append(pred(sid, s, "same" if s >= 0.5 else "different"))
    return preds, labels


# ----------------------------------------------------------------- accuracy


def test_accuracy_perfect_and_half():
    preds, labels = scored_instance([0.9, 0.8], [0.1, 0.2])
    assert accuracy(preds, labels) == 1.0
    labels_flipped = {k: ("different" if v == "same" else "same") for k, v in labels.items()}
    assert accuracy(preds, labels_flipped) == 0.0


def test_join_errors():
    preds, labels = scored_instance([0.9], [0.1])
    with pytest.raises(EvalError, match="duplicate"):
        accuracy(preds + [preds[0]], labels)
    with pytest.raises(EvalError, match="unknown"):
        accuracy(preds + [pred("ghost", 0.5, "same")], labels)
    with pytest.raises(EvalError, match="lack predictions"):
        accuracy(preds[:1], labels)


# ---------------------------------------------------------------------- auc


def test_auc_separation_extremes():
    preds, labels = scored_instance([0.9, 0.8], [0.1, 0.2])
    assert auc_roc(preds, labels) == 1.0
    preds, labels = scored_instance([0.1, 0.2], [0.8, 0.9])
    assert auc_roc(preds, labels) == 0.0  # sub-chance reported as-is


def test_auc_all_tied_is_half():
    preds, labels = scored_instance([0.5, 0.5, 0.5], [0.5, 0.5])
    assert auc_roc_fraction(preds, labels) == Fraction(1, 2)


def test_auc_single_class_errors():
    preds, labels = scored_instance([0.9, 0.8], [])
    with pytest.raises(EvalError):
        auc_roc(preds, labels)


def test_auc_matches_bruteforce_with_ties():
    # quantized scores force heavy ties; equality must be exact rationals
    s = derive_stream(123, 0)
    for trial in range(40):
        n_pos = 1 + s.randint(40)
        n_neg = 1 + s.randint(40)
        scores_same = [s.randint(8) / 8 for _ in range(n_pos)]
        scores_diff = [s.randint(8) / 8 for _ in range(n_neg)]
        preds, labels = scored_instance(scores_same, scores_diff)
        assert auc_roc_fraction(preds, labels) == auc_bruteforce(scores_same, scores_diff)


def test_auc_monotone_transform_invariance():
    s = derive_stream(124, 0)
    scores_same = [s.uniform() for _ in range(50)]
    scores_diff = [s.uniform() for _ in range(60)]
    preds, labels = scored_instance(scores_same, scores_diff)
    base = auc_roc_fraction(preds, labels)
    # strictly increasing exact-arithmetic transform keeps order and ties
    warped, _ = scored_instance(
        [x / 4 + 0.25 for x in scores_same], [x / 4 + 0.25 for x in scores_diff]
    )
    assert auc_roc_fraction(warped, labels) == base


# ------------------------------------------------------------ confusion/eval


def test_confusion_counts():
    preds, labels = scored_instance([0.9, 0.3], [0.7, 0.1])
    c = confusion(preds, labels)
    assert (c.ts_ps, c.ts_pd, c.td_ps, c.td_pd) == (1, 1, 1, 1)
    assert c.as_grid() == [[1, 1], [1, 1]]
    assert c.n == 4


def test_evaluate_bundles():
    preds, labels = scored_instance([0.9, 0.8], [0.1, 0.2])
    r = evaluate(preds, labels)
    assert r.accuracy == 1.0 and r.auc == 1.0 and r.n == 4
    assert r.confusion.ts_ps == 2 and r.confusion.td_pd == 2


# ------------------------------------------------------------------ medians


def test_median_over_seeds():
    assert median_over_seeds([3.0, 1.0, 2.0]) == 2.0
    assert median_over_seeds([1.0, 2.0, 3.0, 4.0]) == 2.5
    with pytest.raises(EvalError):
        median_over_seeds([])


# ------------------------------------------------------------------- matrix


def test_generalization_matrix_medians_and_averages():
    results = {
        ("A", "A"): [0.9, 1.0, 0.8],
        ("A", "B"): [0.5, 0.7, 0.6],
        ("B", "A"): [0.4],
        ("B", "B"): [1.0],
    }
    m = generalization_matrix(results)
    assert m.train_names == ["A", "B"] and m.test_names == ["A", "B"]
    assert m.cells == [[0.9, 0.6], [0.4, 1.0]]
    assert m.row_avgs == {"A": 0.6, "B": 0.4}
    assert m.col_avgs == {"A": 0.4, "B": 0.6}


def test_generalization_matrix_missing_cell():
    with pytest.raises(EvalError, match="missing grid cell"):
        generalization_matrix({("A", "A"): [1.0], ("A", "B"): [1.0], ("B", "A"): [1.0]})


def test_generalization_matrix_single_dataset():
    m = generalization_matrix({("A", "A"): [0.9]})
    assert m.cells == [[0.9]]
    assert m.row_avgs == {} and m.col_avgs == {}


def test_reference_row_average():
    # one training set scored on four test sets: 99.6 / 97.7 / 99.1 / 96.7,
    # row average over the three transfer cells lands on 97.8
    results = {
        ("SQU", "SQU"): [0.996],
        ("SQU", "ALPH"): [0.977],
        ("SQU", "SHA"): [0.991],
        ("SQU", "NAT"): [0.967],
    }
    m = generalization_matrix(results)
    assert abs(100 * m.row_avgs["SQU"] - 97.8) <= 0.05
    rendered = format_matrix(m, fmt="csv")
    assert rendered.splitlines()[1].endswith(",97.8")


# ------------------------------------------------------------- dissociation


def test_proportion_same_all_conditions():
    preds_by, mans_by = {}, {}
    for cond in ("none", "S", "T", "TS", "C", "CS", "CT", "CTS"):
        want = "same" if cond == "CTS" else "different"
        preds, labels = scored_instance([], [0.1, 0.2]) if want == "different" else (
            scored_instance([0.9, 0.8], [])
        )
        preds_by[cond] = preds
        mans_by[cond] = labels
    props = proportion_same(preds_by, mans_by)
    assert props["CTS"] == 1.0
    assert all(props[c] == 0.0 for c in props if c != "CTS")


def test_proportion_same_missing_condition():
    with pytest.raises(EvalError, match="missing dissociation sets"):
        proportion_same({"CTS": []}, {})


def test_mean_logit_by_class():
    preds = [
        pred("a", 0.9, "same", logit=2.0),
        pred("b", 0.8, "same", logit=4.0),
        pred("c", 0.2, "different", logit=-1.0),
        pred("d", 0.6, "same", logit=1.0),
    ]
    labels = {"a": "same", "b": "same", "c": "different", "d": "different"}
    r = mean_logit_by_class(preds, labels)
    assert r.mean_logit_true_same == 3.0
    assert r.mean_logit_true_different == 0.0
    assert r.percent_predicted_same == 75.0


def test_mean_logit_requires_logits():
    preds = [pred("a", 0.9, "same"), pred("b", 0.1, "different")]
    labels = {"a": "same", "b": "different"}
    with pytest.raises(EvalError, match="logit_same absent"):
        mean_logit_by_class(preds, labels)


# ------------------------------------------------------------------ renders


def test_format_matrix_md():
    m = generalization_matrix({("A", "A"): [0.5], ("A", "B"): [1.0],
                               ("B", "A"): [0.25], ("B", "B"): [0.75]})
    text = format_matrix(m, fmt="md")
    lines = text.splitlines()
    assert lines[0].startswith("| train\\test")
    assert set(lines[1]) <= {"|", "-"}
    assert len({line.index("|", 1) for line in lines if "|" in line[1:]}) >= 1


def test_format_confusion_and_tables():
    preds, labels = scored_instance([0.9], [0.1])
    c = confusion(preds, labels)
    assert "TD,1,0" in format_confusion(c)
    props = {c: 0.0 for c in ("none", "S", "T", "TS", "C", "CS", "CT")}
    props["CTS"] = 1.0
    out = format_proportions(props)
    assert out.splitlines()[1].endswith("1.0000")
    from relkit.metrics import MeanLogitReport

    table = format_logit_report({"m1": MeanLogitReport(50.0, 1.5, -1.5)})
    assert "m1,50.00,1.50,-1.50" in table


def test_format_unknown():
    m = generalization_matrix({("A", "A"): [1.0]})
    with pytest.raises(EvalError):
        format_matrix(m, fmt="xml")
