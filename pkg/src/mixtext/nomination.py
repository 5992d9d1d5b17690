"""Resolving per-word options lists to final words.

Rule strategy picks by list shape alone; context strategy scores bi-gram
embeddings of each candidate against its neighbors and takes the best row
of the similarity matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

from .docmodel import (
    UNK,
    OptionsList,
    Transcription,
    options_members,
    options_size,
    unflatten,
)
from .embeddings import EmbeddingModel, cosine, embed_bigram

RULE = "rule"
CONTEXT = "context"
STRATEGIES = (RULE, CONTEXT)

# Neighbor stand-in at document boundaries; embeds to the zero vector, so
# boundary cosines are 0 and the missing side never dominates.
BOUNDARY = ""

# Entries this close count as tied; far below any genuine similarity gap but
# above float noise between structurally equal bi-grams (mean is symmetric,
# so e.g. prev==next makes whole matrix cells equal by construction).
TIE_EPSILON = 1e-9


@dataclass(frozen=True)
class NominationContext:
    """Candidate lists of the previous, current, and next word plus the
    similarity matrix between (prev x current) and (current x next) bi-grams."""

    prev: tuple[str, ...]
    current: tuple[str, ...]
    next: tuple[str, ...]
    sm: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.prev) != 1:
            raise ValueError(f"previous options list must be a singleton, got {self.prev!r}")
        rows = len(self.prev) * len(self.current)
        cols = len(self.current) * len(self.next)
        if len(self.sm) != rows or any(len(row) != cols for row in self.sm):
            raise ValueError(f"similarity matrix must be {rows}x{cols}")


def nominate_rule(options: OptionsList) -> str:
    """Shape-based choice: A for size 1, C for size 3; size 4 takes D unless
    it is UNK, then B unless it is UNK, then A."""
    size = options_size(options)
    if size == 1:
        return options.a
    if size == 3:
        return options.c
    if options.d != UNK:
        return options.d
    if options.b != UNK:
        return options.b
    return options.a


def build_similarity(prev, current, next_options, model: EmbeddingModel) -> NominationContext:
    """Cross-join neighbors into bi-grams and fill the cosine matrix.

    Rows follow current-candidate order (prev is a singleton); columns are
    (current, next) pairs in row-major order. Words are casefolded before
    embedding lookup.
    """
    prev = tuple(prev)
    current = tuple(current)
    next_options = tuple(next_options)
    if len(prev) != 1:
        raise ValueError(f"previous options list must be a singleton, got {prev!r}")
    if not current or not next_options:
        raise ValueError("current and next options lists must be nonempty")
    prev_current = [(prev[0], cur) for cur in current]
    current_next = [(cur, nxt) for cur in current for nxt in next_options]
    pc_embedded = [embed_bigram(model, a.casefold(), b.casefold()) for a, b in prev_current]
    cn_embedded = [embed_bigram(model, a.casefold(), b.casefold()) for a, b in current_next]
    sm = tuple(
        tuple(cosine(pc, cn) for cn in cn_embedded) for pc in pc_embedded
    )
    return NominationContext(prev, current, next_options, sm)


def nominate_context(ctx: NominationContext) -> str:
    """Candidate on the row of the similarity matrix's maximal entry.

    Ties, within TIE_EPSILON, break toward the smallest row index, then the
    smallest column index.
    """
    best_row = 0
    best_value = None
    for i, row in enumerate(ctx.sm):
        for value in row:
            if best_value is None or value > best_value + TIE_EPSILON:
                best_value = value
                best_row = i
    return ctx.current[best_row]


def resolve_document(
    options_seq,
    strategy: str,
    model: EmbeddingModel | None = None,
    line_lengths: list[int] | None = None,
    source_id: str = "",
) -> Transcription:
    """Left-to-right pass turning a sequence of options lists into words.

    Under the context strategy the previous list is the already-resolved
    word and the next list is the following word's full candidate set; both
    fall back to the boundary sentinel at document edges.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown nomination strategy {strategy!r}")
    if strategy == CONTEXT and model is None:
        raise ValueError("context nomination needs an embedding model")
    options_seq = list(options_seq)
    words: list[str] = []
    previous = BOUNDARY
    for idx, options in enumerate(options_seq):
        if strategy == RULE:
            word = nominate_rule(options)
        else:
            current = options_members(options)
            if idx + 1 < len(options_seq):
                following = options_members(options_seq[idx + 1])
            else:
                following = [BOUNDARY]
            ctx = build_similarity([previous], current, following, model)
            word = nominate_context(ctx)
        words.append(word)
        previous = word
    if line_lengths is None:
        line_lengths = [len(words)] if words else []
    return unflatten(words, line_lengths, source_id)
