"""End-to-end page transcription: preprocessing, page-level recognition,
spell-check gating into word-level handwriting recognition, nomination, and
corpus runs with evaluation reports.
"""

from __future__ import annotations

import json
import logging
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

from .docmodel import UNK, OptionsList, PageRecord, Transcription, flatten, options_size
from .embeddings import (
    BACKEND_FILE,
    BACKEND_HASH,
    DEFAULT_HASH_DIM,
    EmbeddingModel,
    hash_model,
    load_model,
)
from .imaging import (
    DEFAULT_DESKEW_RANGE,
    DEFAULT_DESKEW_STEP,
    DEFAULT_PAD_PIXELS,
    EnhancementError,
    GeometryError,
    ImageFormatError,
    RasterImage,
    crop_word,
    enhance,
    estimate_skew,
    load_image,
    rotate,
)
from .hocr import HocrPage
from .lexicon import Dictionary, SpellChecker, dictionary_score, load_dictionary, spell_chain
from .metrics import EvalPair, EvaluationReport, build_report
from .nomination import RULE, STRATEGIES, resolve_document
from .recognizers import RecognizerError, RecognizerSpec, recognize_page, recognize_word

log = logging.getLogger(__name__)

CARDINAL_ANGLES = (0, 90, 180, 270)
IMAGE_SUFFIXES = (".pgm", ".png")


class ConfigError(ValueError):
    """The pipeline configuration is unusable."""


class PageError(RuntimeError):
    """A page could not be processed at all; word-level failures never raise."""


@dataclass(frozen=True)
class CheckerConfig:
    """One spell-checker entry of the chain, as it appears in config files."""

    dictionary_path: str
    frequency_path: str | None = None
    max_edit: int = 2
    checker_id: str = "builtin"


@dataclass(frozen=True)
class PipelineConfig:
    machine_printed: RecognizerSpec | None = None
    handwritten: RecognizerSpec | None = None
    dictionary_path: str | None = None
    frequency_path: str | None = None
    checker_chain: tuple[CheckerConfig, ...] = ()
    embedding_path: str | None = None
    embedding_backend: str = BACKEND_HASH
    embedding_dim: int = DEFAULT_HASH_DIM
    pad_pixels: int = DEFAULT_PAD_PIXELS
    deskew_range: float = DEFAULT_DESKEW_RANGE
    deskew_step: float = DEFAULT_DESKEW_STEP
    rotation_candidates: tuple[int, ...] = CARDINAL_ANGLES
    nomination: str = RULE
    enhancement_command: tuple[str, ...] | None = None
    enhance: bool = True
    deskew: bool = True
    rotate_select: bool = True
    parallelism: int = 4
    timeout: float = 30.0
    max_edit: int = 2

    def validate(self) -> None:
        if not self.rotation_candidates:
            raise ConfigError("rotation_candidates must not be empty")
        bad = [a for a in self.rotation_candidates if a not in CARDINAL_ANGLES]
        if bad:
            raise ConfigError(f"rotation_candidates outside {CARDINAL_ANGLES}: {bad}")
        if self.nomination not in STRATEGIES:
            raise ConfigError(f"unknown nomination strategy {self.nomination!r}")
        if self.embedding_backend not in (BACKEND_FILE, BACKEND_HASH):
            raise ConfigError(f"unknown embedding backend {self.embedding_backend!r}")
        if self.pad_pixels < 0:
            raise ConfigError(f"pad_pixels must be non-negative, got {self.pad_pixels}")
        if not 0 < self.deskew_step <= self.deskew_range <= 45:
            raise ConfigError(
                f"need 0 < deskew_step ({self.deskew_step}) <= deskew_range "
                f"({self.deskew_range}) <= 45"
            )
        if self.parallelism < 1:
            raise ConfigError(f"parallelism must be at least 1, got {self.parallelism}")
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be positive, got {self.timeout}")
        if self.max_edit not in (1, 2):
            raise ConfigError(f"max_edit must be 1 or 2, got {self.max_edit}")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(doc)
        default_timeout = kwargs.get("timeout", 30.0)
        for key in ("machine_printed", "handwritten"):
            if kwargs.get(key) is not None:
                kwargs[key] = _recognizer_from_dict(kwargs[key], default_timeout)
        if kwargs.get("checker_chain"):
            kwargs["checker_chain"] = tuple(
                CheckerConfig(**entry) for entry in kwargs["checker_chain"]
            )
        if kwargs.get("rotation_candidates") is not None:
            kwargs["rotation_candidates"] = tuple(int(a) for a in kwargs["rotation_candidates"])
        if kwargs.get("enhancement_command") is not None:
            kwargs["enhancement_command"] = tuple(kwargs["enhancement_command"])
        try:
            cfg = cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(doc)


def _recognizer_from_dict(doc: dict, default_timeout: float = 30.0) -> RecognizerSpec:
    """Build a RecognizerSpec from config JSON; the pipeline's external-call
    timeout applies unless the entry sets its own."""
    try:
        return RecognizerSpec(
            kind=doc["kind"],
            backend=doc["backend"],
            argv_template=tuple(doc["argv_template"]) if doc.get("argv_template") else None,
            mock_script=doc.get("mock_script"),
            timeout=doc.get("timeout", default_timeout),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad recognizer spec: {exc}") from None


@dataclass
class Resources:
    """Shared read-only state loaded once per run."""

    dictionary: Dictionary
    checkers: tuple[SpellChecker, ...]
    model: EmbeddingModel
    semaphore: threading.Semaphore | None = None


def embedding_model_from_config(cfg: PipelineConfig) -> EmbeddingModel:
    if cfg.embedding_backend == BACKEND_FILE:
        if not cfg.embedding_path:
            raise ConfigError("embedding_backend 'file' needs embedding_path")
        return load_model(cfg.embedding_path)
    return hash_model(cfg.embedding_dim)


def load_resources(cfg: PipelineConfig) -> Resources:
    """Load dictionaries, the checker chain, and the embedding model."""
    cfg.validate()
    checkers: list[SpellChecker] = []
    if cfg.checker_chain:
        for entry in cfg.checker_chain:
            dictionary = load_dictionary(entry.dictionary_path, entry.frequency_path)
            checkers.append(
                SpellChecker(dictionary, entry.max_edit, entry.checker_id)
            )
    elif cfg.dictionary_path:
        dictionary = load_dictionary(cfg.dictionary_path, cfg.frequency_path)
        checkers.append(SpellChecker(dictionary, cfg.max_edit))
    if not checkers:
        raise ConfigError("transcription needs dictionary_path or a checker_chain")
    return Resources(
        dictionary=checkers[0].dictionary,
        checkers=tuple(checkers),
        model=embedding_model_from_config(cfg),
        semaphore=threading.Semaphore(max(1, cfg.parallelism)),
    )


def select_rotation(
    img: RasterImage, cfg: PipelineConfig, resources: Resources
) -> tuple[int, HocrPage]:
    """Recognize every candidate cardinal rotation and keep the one whose
    words score best against the dictionary; ties go to the smaller angle."""
    if cfg.machine_printed is None:
        raise ConfigError("no machine_printed recognizer configured")
    best: tuple[float, int, HocrPage] | None = None
    errors: list[str] = []
    for angle in sorted(set(cfg.rotation_candidates)):
        candidate = rotate(img, angle) if angle else img
        try:
            page = recognize_page(cfg.machine_printed, candidate, resources.semaphore)
        except RecognizerError as exc:
            errors.append(f"{angle}deg: {exc}")
            continue
        score = dictionary_score([wb.text for wb in page.words], resources.dictionary)
        if best is None or score > best[0]:
            best = (score, angle, page)
    if best is None:
        raise PageError("recognition failed at every rotation: " + "; ".join(errors))
    return best[1], best[2]


def transcribe_page(
    path: str | Path, cfg: PipelineConfig, resources: Resources | None = None
) -> PageRecord:
    """Full single-page flow from image file to nominated transcription.

    Word-level handwriting failures degrade that word's options to the UNK
    pair; only unreadable images or total recognition failure raise.
    """
    cfg.validate()
    if cfg.machine_printed is None:
        raise ConfigError("no machine_printed recognizer configured")
    if resources is None:
        resources = load_resources(cfg)
    source_id = Path(path).stem
    try:
        img = load_image(path)
    except (OSError, ImageFormatError) as exc:
        raise PageError(f"{path}: {exc}") from exc

    if cfg.enhance:
        if cfg.enhancement_command is not None:
            try:
                img = enhance(img, list(cfg.enhancement_command), cfg.timeout)
            except EnhancementError as exc:
                log.warning("%s: external enhancement failed (%s); using built-in", source_id, exc)
                img = enhance(img)
        else:
            img = enhance(img)
    if cfg.deskew:
        estimate = estimate_skew(img, cfg.deskew_range, cfg.deskew_step)
        if estimate.angle_degrees:
            img = rotate(img, estimate.angle_degrees)
    if cfg.rotate_select:
        angle, page = select_rotation(img, cfg, resources)
        if angle:
            img = rotate(img, angle)
    else:
        try:
            page = recognize_page(cfg.machine_printed, img, resources.semaphore)
        except RecognizerError as exc:
            raise PageError(f"{source_id}: {exc}") from exc
    if not page.words:
        log.warning("page %s produced no word boxes", source_id)

    ordered = sorted(page.words, key=lambda wb: wb.position)
    options = {wb.position: _word_options(wb, img, cfg, resources) for wb in ordered}
    counts: Counter = Counter(wb.line_index for wb in ordered)
    line_lengths = [counts[line] for line in sorted(counts)]
    final = resolve_document(
        [options[wb.position] for wb in ordered],
        cfg.nomination,
        resources.model,
        line_lengths,
        source_id,
    )
    return PageRecord(
        source_id=source_id,
        image_path=str(path),
        word_boxes=tuple(ordered),
        options=options,
        final=final,
    )


def _word_options(
    wb, img: RasterImage, cfg: PipelineConfig, resources: Resources
) -> OptionsList:
    a = wb.text
    machine_result = spell_chain(a, resources.checkers)
    if machine_result.passed:
        return OptionsList(a=a, b=machine_result.corrected)
    c = d = UNK
    if cfg.handwritten is not None:
        try:
            crop = crop_word(img, wb, cfg.pad_pixels)
            raw = recognize_word(cfg.handwritten, crop, resources.semaphore)
        except (RecognizerError, GeometryError) as exc:
            log.warning("word %s at %s failed handwriting recognition: %s", a, wb.position, exc)
        else:
            if raw:
                c = raw
                d = spell_chain(c, resources.checkers).corrected
    return OptionsList(a=a, b=machine_result.corrected, c=c, d=d)


@dataclass
class CorpusResult:
    """Outcome of a corpus run: page records, per-page failures, optional report."""

    pages: list[PageRecord]
    failures: dict[str, str]
    report: EvaluationReport | None = None


def run_corpus(
    input_dir: str | Path,
    cfg: PipelineConfig,
    out_dir: str | Path,
    labels_dir: str | Path | None = None,
    resume: bool = False,
) -> CorpusResult:
    """Transcribe every image in a directory, writing per-page text and JSON
    checkpoints; with labels, also build the evaluation report."""
    cfg.validate()
    resources = load_resources(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = sorted(
        p for p in Path(input_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )

    def process(path: Path) -> PageRecord:
        record_path = out / f"{path.stem}.json"
        if resume and record_path.exists():
            return PageRecord.from_json(record_path.read_text(encoding="utf-8"))
        record = transcribe_page(path, cfg, resources)
        record_path.write_text(record.to_json(), encoding="utf-8")
        assert record.final is not None
        (out / f"{path.stem}.txt").write_text(record.final.to_text(), encoding="utf-8")
        return record

    results: dict[str, PageRecord] = {}
    failures: dict[str, str] = {}
    with ThreadPoolExecutor(max_workers=max(1, cfg.parallelism)) as pool:
        futures = {pool.submit(process, p): p for p in paths}
        for future, path in futures.items():
            try:
                results[path.stem] = future.result()
            except Exception as exc:  # page isolation: one failure must not stop the run
                failures[path.stem] = str(exc)
                log.error("page %s failed: %s", path.stem, exc)

    report = None
    if labels_dir is not None:
        pairs = []
        for stem, record in sorted(results.items()):
            label_path = Path(labels_dir) / f"{stem}.txt"
            if not label_path.exists() or record.final is None:
                log.warning("no label or final transcription for %s; skipping", stem)
                continue
            target = Transcription.from_text(label_path.read_text(encoding="utf-8"), stem)
            histogram = Counter(options_size(o) for o in record.options.values())
            pairs.append(
                EvalPair(
                    source_id=stem,
                    predicted=tuple(flatten(record.final)),
                    target=tuple(flatten(target)),
                    options_histogram=dict(histogram),
                )
            )
        report = build_report(pairs, resources.model)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        (out / "report.txt").write_text(report.render_text(), encoding="utf-8")
    return CorpusResult(pages=list(results.values()), failures=failures, report=report)
