"""Evaluation harness.

Ground truth for one prediction is the overlap between the explanation's
top-k suspicious lines and the known vulnerable lines: when the
intersection-over-union is at or below a cutoff the prediction is labeled
untrustworthy. The harness sweeps that cutoff, calibrates decision
thresholds on a held-out slice, and reports classification metrics for the
trust score against a naive baseline that distrusts low-confidence
predictions.

Untrustworthy is the positive class everywhere in this module. Both methods
score predictions so that LOWER values mean less trustworthy, which is what
the rank-based AUC orientation encodes.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .assess import assess_prediction
from .config import RunConfig
from .corpus import CorpusRecord
from .errors import (
    CalibrationError,
    TrustvetError,
    UndefinedGroundTruthError,
    UndefinedInputError,
)
from .frontend import pdg_from_source
from .frontend.graphio import import_raw_graph
from .lineassess.diffs import extract_vulnerable_lines
from .pdg import SCHEMA_VERSION, Explanation, LineId, Pdg


# --- ground truth ---------------------------------------------------------------


def iou(suspicious: Iterable[LineId], truth: Iterable[LineId]) -> float:
    """Intersection over union of two line sets."""
    s = frozenset(suspicious)
    t = frozenset(truth)
    if not t:
        raise UndefinedGroundTruthError("ground-truth line set is empty")
    if not s:
        return 0.0
    return len(s & t) / len(s | t)


def select_suspicious(
    expl: Explanation, k: int, resident: frozenset[LineId] | None = None
) -> frozenset[LineId]:
    """Top-k explanation lines by score; ties prefer the smaller line id.

    When resident is given, lines outside it are ignored before ranking.
    """
    if k <= 0:
        raise UndefinedInputError(f"top-k must be positive, got {k}")
    pool = [
        (line, score)
        for line, score in expl.entries
        if resident is None or line in resident
    ]
    pool.sort(key=lambda item: (-item[1], item[0]))
    return frozenset(line for line, _ in pool[:k])


def label_ground_truth(iou_value: float, tau: float) -> bool:
    """True when the prediction counts as untrustworthy at cutoff tau."""
    return iou_value <= tau


# --- metrics --------------------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    accuracy: float | None
    auc: float | None
    precision: float | None
    sensitivity: float | None
    f1: float | None
    specificity: float | None
    gmean: float | None


def rank_auc(
    scores: Sequence[float], labels: Sequence[bool], lower_is_positive: bool = True
) -> float | None:
    """Rank-based AUC with tie-averaged ranks; None for single-class labels."""
    if len(scores) != len(labels):
        raise UndefinedInputError("scores and labels differ in length")
    pos = sum(1 for x in labels if x)
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        return None
    vals = [-s for s in scores] if lower_is_positive else list(scores)
    order = sorted(range(len(vals)), key=lambda i: vals[i])
    ranks = [0.0] * len(vals)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and vals[order[j + 1]] == vals[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    rank_sum = sum(r for r, lab in zip(ranks, labels) if lab)
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg)


def compute_metrics(
    truth: Sequence[bool],
    predictions: Sequence[bool],
    scores: Sequence[float] | None = None,
    lower_is_positive: bool = True,
) -> Metrics:
    """Confusion-matrix metrics with None wherever a denominator is zero."""
    if len(truth) != len(predictions):
        raise UndefinedInputError("truth and predictions differ in length")
    tp = sum(1 for t, p in zip(truth, predictions) if t and p)
    fp = sum(1 for t, p in zip(truth, predictions) if not t and p)
    tn = sum(1 for t, p in zip(truth, predictions) if not t and not p)
    fn = sum(1 for t, p in zip(truth, predictions) if t and not p)
    n = tp + fp + tn + fn
    accuracy = (tp + tn) / n if n else None
    precision = tp / (tp + fp) if tp + fp else None
    sensitivity = tp / (tp + fn) if tp + fn else None
    specificity = tn / (tn + fp) if tn + fp else None
    if precision is None or sensitivity is None:
        f1 = None
    elif precision + sensitivity == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * sensitivity / (precision + sensitivity)
    if sensitivity is None or specificity is None:
        gmean = None
    else:
        gmean = math.sqrt(sensitivity * specificity)
    auc = None
    if scores is not None:
        auc = rank_auc(scores, truth, lower_is_positive=lower_is_positive)
    return Metrics(
        accuracy=accuracy,
        auc=auc,
        precision=precision,
        sensitivity=sensitivity,
        f1=f1,
        specificity=specificity,
        gmean=gmean,
    )


# --- threshold calibration ------------------------------------------------------


@dataclass(frozen=True)
class CalibrationResult:
    threshold: float
    gmean: float
    degenerate: bool


def calibrate_threshold(scores: Sequence[float], labels: Sequence[bool]) -> CalibrationResult:
    """Pick the cutoff maximizing G-mean for the rule score < threshold.

    Candidates are the midpoints between consecutive distinct scores; ties
    resolve toward the smaller threshold. A single distinct score cannot be
    split, so that value is returned with the degenerate flag set.
    """
    if len(scores) != len(labels):
        raise UndefinedInputError("scores and labels differ in length")
    if not scores:
        raise CalibrationError("nothing to calibrate on")
    pos = sum(1 for x in labels if x)
    if pos == 0 or pos == len(labels):
        raise CalibrationError("calibration labels are single-class")
    distinct = sorted(set(scores))
    if len(distinct) == 1:
        return CalibrationResult(threshold=distinct[0], gmean=0.0, degenerate=True)

    def gmean_at(threshold: float) -> float:
        preds = [s < threshold for s in scores]
        m = compute_metrics(labels, preds)
        if m.sensitivity is None or m.specificity is None:
            return 0.0
        return math.sqrt(m.sensitivity * m.specificity)

    best_threshold = None
    best_gmean = -1.0
    for lo, hi in zip(distinct, distinct[1:]):
        candidate = (lo + hi) / 2.0
        value = gmean_at(candidate)
        if value > best_gmean:
            best_gmean = value
            best_threshold = candidate
    return CalibrationResult(threshold=best_threshold, gmean=best_gmean, degenerate=False)


def naive_baseline(confidence: float, threshold: float) -> bool:
    """The baseline distrusts any prediction whose confidence is below cutoff."""
    return confidence < threshold


# --- corpus-level evaluation ----------------------------------------------------


@dataclass(frozen=True)
class RecordResult:
    """Everything tau-independent about one evaluated prediction."""

    function_id: str
    skipped: str | None
    trust_score: float | None
    confidence: float | None
    iou: float | None
    suspicious: tuple[LineId, ...]
    truth: tuple[LineId, ...]
    degenerate: bool


@dataclass(frozen=True)
class TauReport:
    tau: float
    trust_threshold: float
    conf_threshold: float
    trust_degenerate: bool
    conf_degenerate: bool
    untrustworthy_count: int
    evaluated: int
    trust: Metrics
    naive: Metrics


@dataclass(frozen=True)
class EvaluationReport:
    taus: tuple[TauReport, ...]
    results: tuple[RecordResult, ...]
    skipped: Mapping[str, int]


def _record_pdg(record: CorpusRecord) -> Pdg:
    if record.graph is not None:
        return import_raw_graph(record.graph).to_pdg()
    return pdg_from_source(record.source, function_id=record.function_id)


def _truth_lines(record: CorpusRecord) -> frozenset[LineId]:
    if record.vul_lines:
        return frozenset(record.vul_lines)
    if record.diff is not None:
        return extract_vulnerable_lines(record.source, record.diff)
    return frozenset()


def evaluate_record(record: CorpusRecord, ensemble: Sequence, config: RunConfig) -> RecordResult:
    """Tau-independent evaluation of one prediction; failures become skips."""

    def skip(reason: str) -> RecordResult:
        return RecordResult(
            function_id=record.function_id,
            skipped=reason,
            trust_score=None,
            confidence=None,
            iou=None,
            suspicious=(),
            truth=(),
            degenerate=False,
        )

    if record.explanation is None or record.confidence is None:
        return skip("no-explanation")
    try:
        truth = _truth_lines(record)
    except TrustvetError as exc:
        return skip(f"ground-truth: {exc}")
    if not truth:
        return skip("no-ground-truth")
    try:
        pdg = _record_pdg(record)
    except TrustvetError as exc:
        return skip(f"graph: {exc}")
    expl = record.to_explanation()
    try:
        assessment = assess_prediction(
            expl,
            pdg,
            ensemble,
            threshold=0.0,
            normalize_weights=config.normalize_weights,
            mode=config.data_rule_mode,
        )
    except TrustvetError as exc:
        return skip(f"assessment: {exc}")
    suspicious = select_suspicious(expl, config.top_k, resident=pdg.nodes)
    value = iou(suspicious, truth)
    return RecordResult(
        function_id=record.function_id,
        skipped=None,
        trust_score=assessment.trust_score,
        confidence=record.confidence,
        iou=value,
        suspicious=tuple(sorted(suspicious)),
        truth=tuple(sorted(truth)),
        degenerate=assessment.degenerate,
    )


def _split_indices(n: int, fraction: float, seed: int) -> tuple[list[int], list[int]]:
    """Deterministic calibration/evaluation split over record positions."""
    order = list(range(n))
    random.Random(seed).shuffle(order)
    cut = math.ceil(fraction * n)
    return order[:cut], order[cut:]


def _pick_threshold(
    fixed: float | None, scores: Sequence[float], labels: Sequence[bool]
) -> tuple[float, bool]:
    if fixed is not None:
        return fixed, False
    try:
        result = calibrate_threshold(scores, labels)
    except CalibrationError:
        return 0.5, True
    return result.threshold, result.degenerate


def run_evaluation(
    records: Sequence[CorpusRecord],
    ensemble: Sequence,
    config: RunConfig,
    taus: Sequence[float] | None = None,
) -> EvaluationReport:
    """Evaluate a corpus of predictions across one or more IoU cutoffs.

    When either decision threshold is left unset, a seeded slice of the
    usable records is reserved for calibration and the metrics are computed
    on the remainder; with both thresholds pinned every usable record is
    evaluated directly.
    """
    if taus is None:
        taus = (config.iou_threshold,)
    worker: Callable[[CorpusRecord], RecordResult] = lambda r: evaluate_record(
        r, ensemble, config
    )
    workers = config.workers or 1
    if workers > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = tuple(pool.map(worker, records))
    else:
        results = tuple(map(worker, records))

    skipped: dict[str, int] = {}
    usable: list[RecordResult] = []
    for result in results:
        if result.skipped is None:
            usable.append(result)
        else:
            key = result.skipped.split(":", 1)[0]
            skipped[key] = skipped.get(key, 0) + 1

    need_split = config.trust_threshold is None or config.conf_threshold is None
    if need_split and usable:
        cal_idx, eval_idx = _split_indices(
            len(usable), config.calibration_fraction, config.seed
        )
        calibration = [usable[i] for i in cal_idx]
        evaluation = [usable[i] for i in sorted(eval_idx)]
    else:
        calibration = []
        evaluation = usable

    reports: list[TauReport] = []
    for tau in taus:
        cal_labels = [label_ground_truth(r.iou, tau) for r in calibration]
        trust_threshold, trust_degenerate = _pick_threshold(
            config.trust_threshold,
            [r.trust_score for r in calibration],
            cal_labels,
        )
        conf_threshold, conf_degenerate = _pick_threshold(
            config.conf_threshold,
            [r.confidence for r in calibration],
            cal_labels,
        )
        truth = [label_ground_truth(r.iou, tau) for r in evaluation]
        trust_scores = [r.trust_score for r in evaluation]
        conf_scores = [r.confidence for r in evaluation]
        trust_preds = [s < trust_threshold for s in trust_scores]
        naive_preds = [naive_baseline(c, conf_threshold) for c in conf_scores]
        reports.append(
            TauReport(
                tau=tau,
                trust_threshold=trust_threshold,
                conf_threshold=conf_threshold,
                trust_degenerate=trust_degenerate,
                conf_degenerate=conf_degenerate,
                untrustworthy_count=sum(1 for t in truth if t),
                evaluated=len(evaluation),
                trust=compute_metrics(truth, trust_preds, trust_scores),
                naive=compute_metrics(truth, naive_preds, conf_scores),
            )
        )
    return EvaluationReport(taus=tuple(reports), results=results, skipped=skipped)


# --- rendering and serialization -------------------------------------------------

_METRIC_FIELDS = (
    ("Acc", "accuracy"),
    ("AUC", "auc"),
    ("Pre", "precision"),
    ("Sen", "sensitivity"),
    ("F1", "f1"),
    ("Spe", "specificity"),
    ("Gm", "gmean"),
)


def _metrics_to_dict(m: Metrics) -> dict:
    return {field: getattr(m, field) for _, field in _METRIC_FIELDS}


def report_to_dict(report: EvaluationReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "skipped": dict(sorted(report.skipped.items())),
        "taus": [
            {
                "tau": t.tau,
                "trust_threshold": t.trust_threshold,
                "conf_threshold": t.conf_threshold,
                "trust_degenerate": t.trust_degenerate,
                "conf_degenerate": t.conf_degenerate,
                "untrustworthy_count": t.untrustworthy_count,
                "evaluated": t.evaluated,
                "trust": _metrics_to_dict(t.trust),
                "naive": _metrics_to_dict(t.naive),
            }
            for t in report.taus
        ],
        "records": [
            {
                "function_id": r.function_id,
                "skipped": r.skipped,
                "trust_score": r.trust_score,
                "confidence": r.confidence,
                "iou": r.iou,
                "suspicious": list(r.suspicious),
                "truth": list(r.truth),
                "degenerate": r.degenerate,
            }
            for r in report.results
        ],
    }


def _fmt(value: float | None) -> str:
    return "  -  " if value is None else f"{value:.3f}"


def render_table(report: EvaluationReport | dict) -> str:
    """Fixed-width metric table, one row per method per cutoff."""
    doc = report_to_dict(report) if isinstance(report, EvaluationReport) else report
    header = f"{'tau':>5}  {'method':<6}  " + "  ".join(f"{name:>5}" for name, _ in _METRIC_FIELDS)
    out = [header, "-" * len(header)]
    for t in doc["taus"]:
        for method in ("trust", "naive"):
            cells = "  ".join(_fmt(t[method][field]) for _, field in _METRIC_FIELDS)
            out.append(f"{t['tau']:>5.2f}  {method:<6}  {cells}")
    total_skipped = sum(doc["skipped"].values())
    if total_skipped:
        detail = ", ".join(f"{k}={v}" for k, v in sorted(doc["skipped"].items()))
        out.append(f"skipped {total_skipped} record(s): {detail}")
    return "\n".join(out) + "\n"
