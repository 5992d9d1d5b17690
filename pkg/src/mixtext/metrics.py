"""Transcription scoring: edit distance, bag-of-words, document similarity,
options-list statistics, and corpus-level reports.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from .docmodel import options_size
from .embeddings import EmbeddingModel, cosine, embed_document

HISTOGRAM_METRICS = ("lev_accuracy", "doc_similarity")
SCALAR_FIELDS = ("lev_accuracy", "doc_similarity", "precision", "recall", "f_score")


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over Unicode scalar values."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i] + [0] * len(b)
        for j, cb in enumerate(b, 1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            )
        previous = current
    return previous[-1]


def lev_accuracy(pred: str, target: str) -> float:
    """1 minus edit distance normalized by the longer string; empty/empty is 1."""
    longest = max(len(pred), len(target))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(pred, target) / longest


def bow_prf(pred, target) -> tuple[float, float, float]:
    """Bag-of-words precision, recall, and F-score over word multisets."""
    pred = list(pred)
    target = list(target)
    overlap = Counter(pred) & Counter(target)
    tp = sum(overlap.values())
    precision = tp / len(pred) if pred else 0.0
    recall = tp / len(target) if target else 0.0
    f_score = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return (precision, recall, f_score)


def doc_similarity(pred, target, model: EmbeddingModel) -> float:
    """Cosine similarity of the mean word embeddings of the two documents."""
    return cosine(embed_document(model, pred), embed_document(model, target))


def options_stats(pages) -> tuple[float, float, float]:
    """Fractions of words whose options lists have size 1, 3, and 4."""
    counts = Counter()
    for page in pages:
        for options in page.options.values():
            counts[options_size(options)] += 1
    total = sum(counts.values())
    if total == 0:
        return (0.0, 0.0, 0.0)
    return (counts[1] / total, counts[3] / total, counts[4] / total)


@dataclass(frozen=True)
class DocScores:
    """Per-document metric results."""

    lev_accuracy: float
    doc_similarity: float
    precision: float
    recall: float
    f_score: float
    options_histogram: dict[int, int] = field(default_factory=dict)

    def scalar(self, name: str) -> float:
        return getattr(self, name)


@dataclass(frozen=True)
class EvalPair:
    """One evaluated document: flattened prediction and target word lists."""

    source_id: str
    predicted: tuple[str, ...]
    target: tuple[str, ...]
    options_histogram: dict[int, int] = field(default_factory=dict)


def score_document(pred_words, target_words, model: EmbeddingModel,
                   options_histogram=None) -> DocScores:
    """All per-document metrics; character comparison joins words by spaces."""
    pred_words = list(pred_words)
    target_words = list(target_words)
    precision, recall, f_score = bow_prf(pred_words, target_words)
    return DocScores(
        lev_accuracy=lev_accuracy(" ".join(pred_words), " ".join(target_words)),
        doc_similarity=doc_similarity(pred_words, target_words, model),
        precision=precision,
        recall=recall,
        f_score=f_score,
        options_histogram=dict(options_histogram or {}),
    )


def _decile(value: float) -> int:
    # [0,10) .. [80,90) half-open, final [90,100] closed; negatives clamp to 0.
    if value >= 1.0:
        return 9
    if value <= 0.0:
        return 0
    return min(9, int(value * 10 + 1e-9))


@dataclass(frozen=True)
class EvaluationReport:
    """Per-document scores, corpus means, and decile accuracy histograms."""

    per_doc: dict[str, DocScores]
    corpus: dict[str, float]
    options_totals: dict[int, int]
    accuracy_histogram: dict[str, list[int]]

    def document_count(self) -> int:
        return len(self.per_doc)

    def to_json(self) -> str:
        doc = {
            "per_doc": {
                source_id: {
                    **{name: scores.scalar(name) for name in SCALAR_FIELDS},
                    "options_histogram": {str(k): v for k, v in sorted(scores.options_histogram.items())},
                }
                for source_id, scores in sorted(self.per_doc.items())
            },
            "corpus": self.corpus,
            "options_totals": {str(k): v for k, v in sorted(self.options_totals.items())},
            "accuracy_histogram": self.accuracy_histogram,
        }
        return json.dumps(doc, ensure_ascii=False, indent=2)

    def render_text(self) -> str:
        """Aligned plain-text tables: corpus means, then accuracy ranges."""
        out = [f"Documents evaluated: {self.document_count()}", ""]
        labels = {
            "lev_accuracy": "Levenshtein accuracy",
            "doc_similarity": "Document similarity",
            "precision": "Precision",
            "recall": "Recall",
            "f_score": "F-score",
        }
        out.append(f"{'Metric':<24}{'Mean':>8}")
        for name in SCALAR_FIELDS:
            value = self.corpus.get(name, 0.0)
            out.append(f"{labels[name]:<24}{100 * value:>7.2f}%")
        out.append("")
        sizes = ", ".join(f"{k}: {self.options_totals.get(k, 0)}" for k in (1, 3, 4))
        out.append(f"Options list sizes  {sizes}")
        out.append("")
        out.append(f"{'Accuracy range':<16}{'Levenshtein':>12}{'Similarity':>12}")
        for i in range(10):
            hi_bracket = "]" if i == 9 else ")"
            label = f"[{10 * i}%, {10 * (i + 1)}%{hi_bracket}"
            lev_n = self.accuracy_histogram["lev_accuracy"][i]
            sim_n = self.accuracy_histogram["doc_similarity"][i]
            out.append(f"{label:<16}{lev_n:>12}{sim_n:>12}")
        return "\n".join(out) + "\n"


def build_report(pairs, model: EmbeddingModel) -> EvaluationReport:
    """Score every (prediction, target) pair and aggregate corpus statistics."""
    per_doc: dict[str, DocScores] = {}
    for pair in pairs:
        per_doc[pair.source_id] = score_document(
            pair.predicted, pair.target, model, pair.options_histogram
        )
    corpus = {}
    for name in SCALAR_FIELDS:
        values = [scores.scalar(name) for scores in per_doc.values()]
        corpus[name] = sum(values) / len(values) if values else 0.0
    options_totals: Counter = Counter()
    for scores in per_doc.values():
        options_totals.update(scores.options_histogram)
    histogram = {name: [0] * 10 for name in HISTOGRAM_METRICS}
    for scores in per_doc.values():
        for name in HISTOGRAM_METRICS:
            histogram[name][_decile(scores.scalar(name))] += 1
    return EvaluationReport(
        per_doc=per_doc,
        corpus=corpus,
        options_totals=dict(options_totals),
        accuracy_histogram=histogram,
    )
