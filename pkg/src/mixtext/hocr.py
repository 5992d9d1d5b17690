"""hOCR parsing: word texts and bounding boxes out of OCR engine markup.

Only `ocrx_word` granularity is consumed; words are grouped by their
enclosing `ocr_line` (in document order) to assign (line_index, word_index).
"""

from __future__ import annotations

import xml.parsers.expat
from dataclasses import dataclass, field
from xml.sax.saxutils import escape, quoteattr

from .docmodel import WordBox


class HocrParseError(ValueError):
    """Malformed hOCR markup; carries the byte offset of the failure."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte {byte_offset})")
        self.byte_offset = byte_offset


class NoBboxError(ValueError):
    """A title attribute holds no usable bbox property."""


@dataclass
class HocrPage:
    """Parsed page: word boxes plus the raw title fields behind each of them."""

    page_bbox: tuple[int, int, int, int]
    words: list[WordBox]
    raw_title_fields: list[dict[str, str]] = field(default_factory=list)
    skipped_no_bbox: int = 0


def parse_title_fields(title: str) -> dict[str, str]:
    """Split an hOCR title attribute into its semicolon-separated properties."""
    fields: dict[str, str] = {}
    for part in title.split(";"):
        part = part.strip()
        if not part:
            continue
        key, _, rest = part.partition(" ")
        fields[key] = rest.strip()
    return fields


def parse_bbox_title(title: str) -> tuple[int, int, int, int]:
    """Extract the four bbox integers from a title attribute."""
    raw = parse_title_fields(title).get("bbox")
    if raw is None:
        raise NoBboxError(f"no bbox property in {title!r}")
    parts = raw.split()
    if len(parts) < 4:
        raise NoBboxError(f"bbox property too short in {title!r}")
    try:
        x0, y0, x1, y1 = (int(p) for p in parts[:4])
    except ValueError:
        raise NoBboxError(f"non-integer bbox in {title!r}") from None
    if min(x0, y0, x1, y1) < 0:
        raise NoBboxError(f"negative bbox coordinate in {title!r}")
    return (x0, y0, x1, y1)


class _HocrBuilder:
    """Expat callback state: tracks open lines/words and collects word boxes.

    Words outside any ocr_line fall back to their enclosing ocr_par (each par
    acts as one line), and failing that to a single page-level implicit line.
    """

    def __init__(self):
        self.words: list[WordBox] = []
        self.titles: list[dict[str, str]] = []
        self.page_bbox: tuple[int, int, int, int] | None = None
        self.skipped = 0
        self.depth = 0
        self.line_stack: list[tuple[int, int]] = []  # (element depth, line index)
        self.par_stack: list[list] = []  # [element depth, lazily allocated index]
        self.next_line_index = 0
        self.word_counts: dict[int, int] = {}
        self.implicit_line: int | None = None
        self.word_depth = 0
        self.word_chunks: list[str] = []
        self.word_title = ""
        self.word_line = 0

    def start(self, name: str, attrs: dict[str, str]) -> None:
        self.depth += 1
        if self.word_depth:
            self.word_depth += 1
            return
        classes = attrs.get("class", "").split()
        if "ocr_page" in classes and self.page_bbox is None:
            try:
                self.page_bbox = parse_bbox_title(attrs.get("title", ""))
            except NoBboxError:
                pass
        if "ocr_line" in classes:
            self.line_stack.append((self.depth, self.next_line_index))
            self.next_line_index += 1
        elif "ocr_par" in classes:
            self.par_stack.append([self.depth, None])
        elif "ocrx_word" in classes:
            self.word_depth = 1
            self.word_chunks = []
            self.word_title = attrs.get("title", "")
            self.word_line = self._current_line()

    def chars(self, data: str) -> None:
        if self.word_depth:
            self.word_chunks.append(data)

    def end(self, name: str) -> None:
        if self.word_depth:
            self.word_depth -= 1
            if self.word_depth == 0:
                self._close_word()
        elif self.line_stack and self.line_stack[-1][0] == self.depth:
            self.line_stack.pop()
        elif self.par_stack and self.par_stack[-1][0] == self.depth:
            self.par_stack.pop()
        self.depth -= 1

    def _current_line(self) -> int:
        if self.line_stack:
            return self.line_stack[-1][1]
        if self.par_stack:
            par = self.par_stack[-1]
            if par[1] is None:
                par[1] = self.next_line_index
                self.next_line_index += 1
            return par[1]
        if self.implicit_line is None:
            self.implicit_line = self.next_line_index
            self.next_line_index += 1
        return self.implicit_line

    def _close_word(self) -> None:
        text = "".join(self.word_chunks).strip()
        if not text:
            return
        try:
            bbox = parse_bbox_title(self.word_title)
        except NoBboxError:
            self.skipped += 1
            return
        fields = parse_title_fields(self.word_title)
        confidence = None
        if "x_wconf" in fields:
            try:
                confidence = max(0.0, min(1.0, float(fields["x_wconf"]) / 100.0))
            except ValueError:
                confidence = None
        line = self.word_line
        word_index = self.word_counts.get(line, 0)
        self.word_counts[line] = word_index + 1
        self.words.append(WordBox(text, bbox, line, word_index, confidence))
        self.titles.append(fields)


def parse_hocr(document: str) -> HocrPage:
    """Parse hOCR markup into a page of word boxes.

    Words with empty trimmed text are dropped; words whose title lacks a
    bbox are skipped and tallied. The page bbox is taken from the first
    `ocr_page` element and expanded to cover every word box.
    """
    builder = _HocrBuilder()
    parser = xml.parsers.expat.ParserCreate()
    parser.buffer_text = True
    parser.StartElementHandler = builder.start
    parser.EndElementHandler = builder.end
    parser.CharacterDataHandler = builder.chars
    try:
        parser.Parse(document, True)
    except xml.parsers.expat.ExpatError as exc:
        raise HocrParseError(str(exc), parser.ErrorByteIndex) from None

    page_bbox = builder.page_bbox
    for wb in builder.words:
        x0, y0, x1, y1 = wb.bbox
        if page_bbox is None:
            page_bbox = wb.bbox
        else:
            page_bbox = (
                min(page_bbox[0], x0),
                min(page_bbox[1], y0),
                max(page_bbox[2], x1),
                max(page_bbox[3], y1),
            )
    if page_bbox is None:
        page_bbox = (0, 0, 1, 1)
    return HocrPage(page_bbox, builder.words, builder.titles, builder.skipped)


def render_hocr(words: list[WordBox], page_bbox: tuple[int, int, int, int] | None = None) -> str:
    """Minimal hOCR skeleton for the given word boxes (tests and mocks)."""
    if page_bbox is None:
        if words:
            page_bbox = (
                min(wb.bbox[0] for wb in words),
                min(wb.bbox[1] for wb in words),
                max(wb.bbox[2] for wb in words),
                max(wb.bbox[3] for wb in words),
            )
        else:
            page_bbox = (0, 0, 1, 1)
    lines: dict[int, list[WordBox]] = {}
    for wb in words:
        lines.setdefault(wb.line_index, []).append(wb)
    parts = [
        "<?xml version='1.0' encoding='UTF-8'?>",
        "<html><body>",
        f"<div class='ocr_page' title='bbox {page_bbox[0]} {page_bbox[1]} {page_bbox[2]} {page_bbox[3]}'>",
        "<p class='ocr_par'>",
    ]
    for line_index in sorted(lines):
        parts.append("<span class='ocr_line'>")
        for wb in sorted(lines[line_index], key=lambda w: w.word_index):
            title = "bbox {} {} {} {}".format(*wb.bbox)
            if wb.confidence is not None:
                title += f"; x_wconf {round(wb.confidence * 100)}"
            parts.append(
                f"<span class='ocrx_word' title={quoteattr(title)}>{escape(wb.text)}</span>"
            )
        parts.append("</span>")
    parts.extend(["</p>", "</div>", "</body></html>"])
    return "\n".join(parts)
