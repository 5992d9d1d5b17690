"""Transcription of scanned pages that mix machine-printed and handwritten
text, with no up-front text-type classification, plus the evaluation suite
used to score the results.
"""

from .docmodel import (
    UNK,
    InvariantError,
    OptionsList,
    PageRecord,
    Transcription,
    WordBox,
    flatten,
    options_members,
    options_size,
    unflatten,
)
from .embeddings import EmbeddingModel, cosine, embed_bigram, embed_document, hash_model, load_model
from .hocr import HocrPage, HocrParseError, parse_bbox_title, parse_hocr, render_hocr
from .imaging import (
    RasterImage,
    SkewEstimate,
    crop_word,
    enhance,
    estimate_skew,
    load_image,
    rotate,
    save_pgm,
)
from .lexicon import (
    Dictionary,
    SpellChecker,
    SpellResult,
    dictionary_score,
    load_dictionary,
    spell_chain,
    spell_check,
    tokenize,
)
from .metrics import (
    EvalPair,
    EvaluationReport,
    bow_prf,
    build_report,
    doc_similarity,
    lev_accuracy,
    levenshtein,
    options_stats,
    score_document,
)
from .mixed_labels import build_mixed_label, parse_iam_ascii
from .nomination import (
    NominationContext,
    build_similarity,
    nominate_context,
    nominate_rule,
    resolve_document,
)
from .pipeline import (
    CheckerConfig,
    ConfigError,
    CorpusResult,
    PageError,
    PipelineConfig,
    Resources,
    load_resources,
    run_corpus,
    select_rotation,
    transcribe_page,
)
from .recognizers import (
    RecognizerError,
    RecognizerSpec,
    ScriptedMissError,
    image_fingerprint,
    recognize_page,
    recognize_word,
)

__version__ = "0.1.0"
