"""Evaluation statistics: accuracy, AUC, confusion, matrices, dissociation.

All operations join prediction records against a manifest's ground truth by
stimulus_id and fail loudly on missing or duplicated ids.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from relkit.records import (
    DISSOCIATION_CONDITIONS,
    DatasetManifest,
    PredictionRecord,
    PredictionSet,
)


class EvalError(ValueError):
    """Predictions and manifest do not line up, or inputs are degenerate."""


def _true_labels(manifest) -> dict[str, str]:
    if isinstance(manifest, DatasetManifest):
        return {r.stimulus_id: r.label for r in manifest.records}
    return dict(manifest)  # already an id -> label map


def _records(preds) -> list[PredictionRecord]:
    if isinstance(preds, PredictionSet):
        return preds.records
    return list(preds)


def join(preds, manifest) -> list[tuple[str, PredictionRecord]]:
    """Align predictions with true labels; exactly one prediction per stimulus."""
    truth = _true_labels(manifest)
    records = _records(preds)
    seen: set[str] = set()
    out = []
    for rec in records:
        if rec.stimulus_id in seen:
            raise EvalError(f"duplicate prediction for {rec.stimulus_id}")
        seen.add(rec.stimulus_id)
        label = truth.get(rec.stimulus_id)
        if label is None:
            raise EvalError(f"prediction for unknown stimulus {rec.stimulus_id}")
        out.append((label, rec))
    missing = set(truth) - seen
    if missing:
        raise EvalError(f"{len(missing)} stimuli lack predictions (e.g. {sorted(missing)[:3]})")
    return out


def accuracy(preds, manifest) -> float:
    joined = join(preds, manifest)
    correct = sum(1 for label, rec in joined if rec.predicted == label)
    return correct / len(joined)


@dataclass(frozen=True)
class Confusion:
    """Counts by (true, predicted); D = different, S = same."""

    td_pd: int
    td_ps: int
    ts_pd: int
    ts_ps: int

    @property
    def n(self) -> int:
        return self.td_pd + self.td_ps + self.ts_pd + self.ts_ps

    def as_grid(self) -> list[list[int]]:
        # rows: TD, TS; columns: PD, PS
        return [[self.td_pd, self.td_ps], [self.ts_pd, self.ts_ps]]


def confusion(preds, manifest) -> Confusion:
    counts = {("different", "different"): 0, ("different", "same"): 0,
              ("same", "different"): 0, ("same", "same"): 0}
    for label, rec in join(preds, manifest):
        counts[(label, rec.predicted)] += 1
    return Confusion(
        td_pd=counts[("different", "different")],
        td_ps=counts[("different", "same")],
        ts_pd=counts[("same", "different")],
        ts_ps=counts[("same", "same")],
    )


def auc_roc_fraction(preds, manifest) -> Fraction:
    """Mann-Whitney AUC with midrank tie handling, in exact rationals.

    P(score of a random "same" > score of a random "different"), ties 1/2.
    Sub-chance values are returned as they are, never flipped.
    """
    joined = join(preds, manifest)
    scored = sorted((rec.score_same, label) for label, rec in joined)
    n_pos = sum(1 for _, lab in scored if lab == "same")
    n_neg = len(scored) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvalError("AUC needs both classes present")
    rank_sum_pos = Fraction(0)
    i = 0
    while i < len(scored):
        j = i
        while j < len(scored) and scored[j][0] == scored[i][0]:
            j += 1
        midrank = Fraction(i + 1 + j, 2)  # average of ranks i+1 .. j
        rank_sum_pos += midrank * sum(1 for k in range(i, j) if scored[k][1] == "same")
        i = j
    u = rank_sum_pos - Fraction(n_pos * (n_pos + 1), 2)
    return u / (n_pos * n_neg)


def auc_roc(preds, manifest) -> float:
    return float(auc_roc_fraction(preds, manifest))


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    auc: float
    confusion: Confusion
    n: int


def evaluate(preds, manifest) -> EvalResult:
    return EvalResult(
        accuracy=accuracy(preds, manifest),
        auc=auc_roc(preds, manifest),
        confusion=confusion(preds, manifest),
        n=len(_records(preds)),
    )


def median_over_seeds(values: Sequence[float]) -> float:
    if not values:
        raise EvalError("median of empty list")
    return float(statistics.median(values))


# ---------------------------------------------------------------- matrices


@dataclass
class GeneralizationMatrix:
    """Median-over-seeds accuracy grid with off-diagonal averages."""

    train_names: list[str]
    test_names: list[str]
    cells: list[list[float]]  # [train][test]
    row_avgs: dict[str, float]
    col_avgs: dict[str, float]


def generalization_matrix(
    results: Mapping[tuple[str, str], Sequence[float]]
) -> GeneralizationMatrix:
    train_names: list[str] = []
    test_names: list[str] = []
    for tr, te in results:
        if tr not in train_names:
            train_names.append(tr)
        if te not in test_names:
            test_names.append(te)
    for tr in train_names:
        for te in test_names:
            if (tr, te) not in results:
                raise EvalError(f"missing grid cell ({tr}, {te})")
    cells = [
        [median_over_seeds(results[(tr, te)]) for te in test_names]
        for tr in train_names
    ]
    row_avgs: dict[str, float] = {}
    for i, tr in enumerate(train_names):
        off = [cells[i][j] for j, te in enumerate(test_names) if te != tr]
        if off:
            row_avgs[tr] = sum(off) / len(off)
    col_avgs: dict[str, float] = {}
    for j, te in enumerate(test_names):
        off = [cells[i][j] for i, tr in enumerate(train_names) if tr != te]
        if off:
            col_avgs[te] = sum(off) / len(off)
    return GeneralizationMatrix(train_names, test_names, cells, row_avgs, col_avgs)


# ------------------------------------------------------------- dissociation


def proportion_same(
    preds_by_condition: Mapping[str, object],
    manifests_by_condition: Mapping[str, DatasetManifest],
) -> dict[str, float]:
    """Fraction of "same" predictions per dissociation condition (all 8)."""
    missing = [c for c in DISSOCIATION_CONDITIONS if c not in preds_by_condition]
    if missing:
        raise EvalError(f"missing dissociation sets: {missing}")
    out: dict[str, float] = {}
    for cond in DISSOCIATION_CONDITIONS:
        manifest = manifests_by_condition.get(cond)
        if manifest is None:
            raise EvalError(f"missing manifest for condition {cond}")
        joined = join(preds_by_condition[cond], manifest)
        out[cond] = sum(1 for _, rec in joined if rec.predicted == "same") / len(joined)
    return out


@dataclass(frozen=True)
class MeanLogitReport:
    percent_predicted_same: float
    mean_logit_true_same: float
    mean_logit_true_different: float


def mean_logit_by_class(preds, manifest) -> MeanLogitReport:
    joined = join(preds, manifest)
    same_logits = []
    diff_logits = []
    n_pred_same = 0
    for label, rec in joined:
        if rec.logit_same is None:
            raise EvalError(f"{rec.stimulus_id}: logit_same absent")
        (same_logits if label == "same" else diff_logits).append(rec.logit_same)
        if rec.predicted == "same":
            n_pred_same += 1
    if not same_logits or not diff_logits:
        raise EvalError("mean_logit_by_class needs both classes")
    return MeanLogitReport(
        percent_predicted_same=100.0 * n_pred_same / len(joined),
        mean_logit_true_same=sum(same_logits) / len(same_logits),
        mean_logit_true_different=sum(diff_logits) / len(diff_logits),
    )


# ----------------------------------------------------------------- reports


def format_matrix(matrix: GeneralizationMatrix, fmt: str = "csv", digits: int = 1) -> str:
    """Table-style render: one row per training set, off-diagonal averages last."""
    header = ["train\\test"] + matrix.test_names + ["avg"]
    rows = []
    for i, tr in enumerate(matrix.train_names):
        row = [tr] + [f"{100 * v:.{digits}f}" for v in matrix.cells[i]]
        row.append(f"{100 * matrix.row_avgs[tr]:.{digits}f}" if tr in matrix.row_avgs else "")
        rows.append(row)
    avg_row = ["avg"] + [
        f"{100 * matrix.col_avgs[te]:.{digits}f}" if te in matrix.col_avgs else ""
        for te in matrix.test_names
    ] + [""]
    rows.append(avg_row)
    return _render_table(header, rows, fmt)


def format_confusion(c: Confusion, fmt: str = "csv") -> str:
    header = ["true\\pred", "PD", "PS"]
    rows = [["TD", str(c.td_pd), str(c.td_ps)], ["TS", str(c.ts_pd), str(c.ts_ps)]]
    return _render_table(header, rows, fmt)


def format_proportions(props: Mapping[str, float], fmt: str = "csv") -> str:
    header = ["condition"] + list(DISSOCIATION_CONDITIONS)
    rows = [
        ["proportion_same"]
        + [f"{props[c]:.4f}" for c in DISSOCIATION_CONDITIONS]
    ]
    return _render_table(header, rows, fmt)


def format_logit_report(by_model: Mapping[str, MeanLogitReport], fmt: str = "csv") -> str:
    header = ["model", "pct_pred_same", "gt_same_logit", "gt_diff_logit"]
    rows = [
        [
            name,
            f"{r.percent_predicted_same:.2f}",
            f"{r.mean_logit_true_same:.2f}",
            f"{r.mean_logit_true_different:.2f}",
        ]
        for name, r in by_model.items()
    ]
    return _render_table(header, rows, fmt)


def _render_table(header: list[str], rows: list[list[str]], fmt: str) -> str:
    if fmt == "csv":
        lines = [",".join(header)] + [",".join(r) for r in rows]
        return "\n".join(lines) + "\n"
    if fmt == "md":
        widths = [
            max(len(header[c]), *(len(r[c]) for r in rows)) for c in range(len(header))
        ]
        def line(cells):
            return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
        sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
        return "\n".join([line(header), sep] + [line(r) for r in rows]) + "\n"
    raise EvalError(f"unknown report format {fmt!r}")
