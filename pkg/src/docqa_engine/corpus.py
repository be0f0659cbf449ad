"""Page corpus: ingestion, text normalization, and persistence.

One record per page, line-delimited JSON on the wire. Pages of a document
must be contiguous starting at page 0; the corpus is immutable once built.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

from .errors import ConflictError, FormatError, IntegrityError, ParseError
from .tokenizer import count_numeric_tokens

CORPUS_FORMAT_VERSION = 1

PageRef = tuple[str, int]


def normalize_text(raw: str) -> str:
    """Deterministic, idempotent text normalization.

    Unicode compatibility (NFKC) folding — full-width ASCII becomes
    half-width, ideographic spaces become plain spaces — then control and
    format characters are stripped and whitespace runs collapse to single
    spaces. Re-normalizing after the strip keeps the result stable when
    removing a control character brings combining marks together.
    """
    text = unicodedata.normalize("NFKC", raw)
    kept = []
    for ch in text:
        if ch.isspace():
            kept.append(" ")
        elif unicodedata.category(ch) in ("Cc", "Cf"):
            continue
        else:
            kept.append(ch)
    text = unicodedata.normalize("NFKC", "".join(kept))
    return " ".join(text.split())


@dataclass(frozen=True)
class Page:
    doc_id: str
    page_index: int
    raw_text: str
    normalized_text: str
    char_count: int
    numeric_token_count: int

    @classmethod
    def from_raw(cls, doc_id: str, page_index: int, raw_text: str) -> "Page":
        normalized = normalize_text(raw_text)
        return cls(
            doc_id=doc_id,
            page_index=page_index,
            raw_text=raw_text,
            normalized_text=normalized,
            char_count=len(normalized),
            numeric_token_count=count_numeric_tokens(normalized),
        )


@dataclass(frozen=True)
class Corpus:
    pages: tuple[Page, ...]
    doc_count: int
    page_count: int

    @classmethod
    def from_pages(cls, pages: Iterable[Page]) -> "Corpus":
        ordered = sorted(pages, key=lambda p: (p.doc_id, p.page_index))
        if not ordered:
            raise IntegrityError("corpus has no pages")
        _check_contiguous(ordered)
        doc_ids = {p.doc_id for p in ordered}
        return cls(pages=tuple(ordered), doc_count=len(doc_ids), page_count=len(ordered))

    def doc_page_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for p in self.pages:
            counts[p.doc_id] = counts.get(p.doc_id, 0) + 1
        return counts

    def get(self, doc_id: str, page_index: int) -> Page:
        for p in self.pages:
            if p.doc_id == doc_id and p.page_index == page_index:
                return p
        raise KeyError((doc_id, page_index))


def _check_contiguous(ordered_pages: list[Page]) -> None:
    expected: dict[str, int] = {}
    for p in ordered_pages:
        want = expected.get(p.doc_id, 0)
        if p.page_index != want:
            raise IntegrityError(
                f"doc {p.doc_id!r}: expected page_index {want}, got {p.page_index}"
            )
        expected[p.doc_id] = want + 1


def ingest(source: Iterable[str] | IO[str]) -> Corpus:
    """Build a corpus from line-delimited JSON records.

    Each record must supply doc_id, page_index, and text. Duplicate
    (doc_id, page_index) pairs are rejected, pages of a document must end
    up contiguous from 0, and an empty stream is an error.
    """
    pages: dict[PageRef, Page] = {}
    for line_no, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
        if not isinstance(record, dict):
            raise ParseError("record is not an object", line_no)
        try:
            doc_id = record["doc_id"]
            page_index = record["page_index"]
            text = record["text"]
        except KeyError as exc:
            raise ParseError(f"missing field {exc.args[0]!r}", line_no) from exc
        if not isinstance(doc_id, str) or not doc_id:
            raise ParseError("doc_id must be a non-empty string", line_no)
        if not isinstance(page_index, int) or isinstance(page_index, bool) or page_index < 0:
            raise ParseError("page_index must be a non-negative integer", line_no)
        if not isinstance(text, str):
            raise ParseError("text must be a string", line_no)
        key = (doc_id, page_index)
        if key in pages:
            raise ConflictError(f"duplicate page {key}")
        pages[key] = Page.from_raw(doc_id, page_index, text)
    if not pages:
        raise IntegrityError("input stream contains no page records")
    return Corpus.from_pages(pages.values())


def ingest_path(path: str | Path) -> Corpus:
    with Path(path).open("r", encoding="utf-8") as fh:
        return ingest(fh)


def _page_to_record(page: Page) -> dict:
    return {
        "doc_id": page.doc_id,
        "page_index": page.page_index,
        "raw_text": page.raw_text,
        "normalized_text": page.normalized_text,
        "char_count": page.char_count,
        "numeric_token_count": page.numeric_token_count,
    }


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus: one header line, then one record per page."""
    header = {
        "format": "corpus",
        "version": CORPUS_FORMAT_VERSION,
        "page_count": corpus.page_count,
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for page in corpus.pages:
            fh.write(json.dumps(_page_to_record(page), ensure_ascii=False) + "\n")


def load_corpus(path: str | Path) -> Corpus:
    """Load a corpus written by save_corpus; field-for-field inverse."""
    with Path(path).open("r", encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line:
            raise FormatError("empty corpus file")
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"corrupt corpus header: {exc.msg}") from exc
        if not isinstance(header, dict) or header.get("format") != "corpus":
            raise FormatError("not a corpus file")
        version = header.get("version")
        if version != CORPUS_FORMAT_VERSION:
            raise FormatError(f"unsupported corpus version {version!r}")
        expected = header.get("page_count")
        pages = []
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                page = Page(
                    doc_id=rec["doc_id"],
                    page_index=rec["page_index"],
                    raw_text=rec["raw_text"],
                    normalized_text=rec["normalized_text"],
                    char_count=rec["char_count"],
                    numeric_token_count=rec["numeric_token_count"],
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise FormatError(f"corrupt corpus record at line {line_no}") from exc
            pages.append(page)
        if len(pages) != expected:
            raise FormatError(
                f"corpus file truncated: header says {expected} pages, found {len(pages)}"
            )
    return Corpus.from_pages(pages)
