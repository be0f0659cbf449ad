"""Synthetic QA generation: content-page selection, prompt construction,
structured-output parsing, and the multi-layer quality gates.

The pipeline is: pick content-rich pages (covers, thin pages, and
table-of-contents pages excluded), prompt a model for one candidate
question per attempt across five question types, parse the structured
reply, run the five quality gates, then verify answerability with a
second model round-trip. Every rejection lands in an audit log with the
stage that killed it, so attempts = accepted + audited rejections.
"""

from __future__ import annotations

import json
import logging
import math
import random
import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from string import Template
from typing import Iterable

from .corpus import Corpus, Page, PageRef, normalize_text
from .errors import ConfigError, ContractError, EndpointError, ParseError, TransportError
from .tokenizer import count_numeric_tokens, token_set, tokenize

logger = logging.getLogger(__name__)

QTYPES = ("comparative", "computational", "conditional", "causal", "comprehensive")

DEFAULT_CONTENT_FLOOR = 200      # min normalized chars for a content page
DEFAULT_TOC_DENSITY_MAX = 0.5    # max fraction of lines ending in a digit
DEFAULT_STRATA = 5               # relative-position strata for sampling
NUMERIC_RICHNESS_WEIGHT = 5.0    # numbers count this many chars toward richness
MIDDLE_WEIGHT_DEPTH = 0.5        # edge pages keep 1 - depth of their score

GATE_NAMES = ("length", "complexity", "answer_support", "option_quality", "dedup")


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class PageScore:
    page_ref: PageRef
    richness: float
    middle_weight: float
    final: float


@dataclass(frozen=True)
class QACandidate:
    question: str
    options: tuple[str, ...]
    answer_index: int
    qtype: str
    source_page: PageRef
    evidence: str

    def to_record(self) -> dict:
        return {
            "question": self.question,
            "options": list(self.options),
            "answer_index": self.answer_index,
            "qtype": self.qtype,
            "doc_id": self.source_page[0],
            "page_index": self.source_page[1],
            "evidence": self.evidence,
        }

    @classmethod
    def from_record(cls, record: dict) -> "QACandidate":
        try:
            options = tuple(str(o) for o in record["options"])
            return cls(
                question=str(record["question"]),
                options=options,
                answer_index=int(record["answer_index"]),
                qtype=str(record.get("qtype", "comprehensive")),
                source_page=(str(record["doc_id"]), int(record["page_index"])),
                evidence=str(record.get("evidence", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad QA record: {exc}") from exc


@dataclass(frozen=True)
class FeasibilityVerdict:
    reasoning: str
    answerable: bool
    answer: str
    evidence: str


@dataclass(frozen=True)
class GateReport:
    length: bool
    complexity: bool
    answer_support: bool
    option_quality: bool
    dedup: bool

    @property
    def overall(self) -> bool:
        return all(getattr(self, name) for name in GATE_NAMES)

    def failed_gates(self) -> list[str]:
        return [name for name in GATE_NAMES if not getattr(self, name)]

    def to_record(self) -> dict:
        record = {name: getattr(self, name) for name in GATE_NAMES}
        record["overall"] = self.overall
        return record


@dataclass(frozen=True)
class GateThresholds:
    question_min_chars: int = 10
    question_max_chars: int = 300
    min_clauses: int = 2
    support_jaccard: float = 0.2
    option_length_ratio: float = 5.0
    dedup_jaccard: float = 0.8
    min_reasoning_chars: int = 30
    evidence_overlap: float = 0.5


@dataclass
class AugmentResult:
    accepted: list[QACandidate]
    audit: list[dict]
    attempts: int

    def summary(self) -> dict:
        stages: dict[str, int] = {}
        for record in self.audit:
            stages[record["stage"]] = stages.get(record["stage"], 0) + 1
        return {
            "attempts": self.attempts,
            "accepted": len(self.accepted),
            "rejected": len(self.audit),
            "rejections_by_stage": dict(sorted(stages.items())),
        }


# ---------------------------------------------------------------------------
# Page selection


def score_page(page: Page, pages_in_doc: int) -> PageScore:
    """Content richness damped toward 1x at the middle, 0.5x at the edges."""
    richness = page.char_count + NUMERIC_RICHNESS_WEIGHT * page.numeric_token_count
    if pages_in_doc > 1:
        offset = abs(2 * page.page_index / (pages_in_doc - 1) - 1)
        middle_weight = 1.0 - offset * MIDDLE_WEIGHT_DEPTH
    else:
        middle_weight = 1.0
    return PageScore(
        page_ref=(page.doc_id, page.page_index),
        richness=richness,
        middle_weight=middle_weight,
        final=richness * middle_weight,
    )


def toc_density(raw_text: str) -> float:
    """Fraction of non-empty lines that end in a digit (page-number rows)."""
    lines = [line.strip() for line in raw_text.splitlines()]
    lines = [line for line in lines if line]
    if not lines:
        return 0.0
    return sum(1 for line in lines if line[-1].isdigit()) / len(lines)


def is_content_page(
    page: Page,
    content_floor: int = DEFAULT_CONTENT_FLOOR,
    toc_density_max: float = DEFAULT_TOC_DENSITY_MAX,
) -> bool:
    if page.page_index == 0:  # covers never carry answerable content
        return False
    if page.char_count < content_floor:
        return False
    return toc_density(page.raw_text) <= toc_density_max


def select_pages(
    corpus: Corpus,
    quota: int,
    seed: int = 0,
    strata: int = DEFAULT_STRATA,
    content_floor: int = DEFAULT_CONTENT_FLOOR,
    toc_density_max: float = DEFAULT_TOC_DENSITY_MAX,
) -> list[PageRef]:
    """Pick up to `quota` content pages, spread across document positions.

    Eligible pages are bucketed into `strata` bands by relative position
    within their document and drained round-robin, best score first within
    each band, so picks span the document rather than clustering. The seed
    fixes the band visiting order; everything else is deterministic.
    """
    if quota < 1:
        raise ValueError("quota must be at least 1")
    if strata < 1:
        raise ValueError("strata must be at least 1")
    counts = corpus.doc_page_counts()
    buckets: list[list[PageScore]] = [[] for _ in range(strata)]
    for page in corpus.pages:
        if not is_content_page(page, content_floor, toc_density_max):
            continue
        pages_in_doc = counts[page.doc_id]
        relative = page.page_index / (pages_in_doc - 1) if pages_in_doc > 1 else 0.0
        bucket = min(int(relative * strata), strata - 1)
        buckets[bucket].append(score_page(page, pages_in_doc))
    for bucket in buckets:
        bucket.sort(key=lambda s: (-s.final, s.page_ref))

    eligible_total = sum(len(bucket) for bucket in buckets)
    if eligible_total == 0:
        logger.warning("no eligible content pages to select from")
        return []
    if quota > eligible_total:
        logger.warning(
            "quota %d exceeds %d eligible pages; returning all", quota, eligible_total
        )

    band_order = list(range(strata))
    random.Random(seed).shuffle(band_order)
    target = min(quota, eligible_total)
    cursors = [0] * strata
    picked: list[PageRef] = []
    while len(picked) < target:
        for band in band_order:
            if len(picked) >= target:
                break
            if cursors[band] < len(buckets[band]):
                picked.append(buckets[band][cursors[band]].page_ref)
                cursors[band] += 1
    return picked


# ---------------------------------------------------------------------------
# Prompt templates


_PROMPT_KINDS = ("ocr_enhance", "feasibility") + tuple(f"generate_{q}" for q in QTYPES)


@lru_cache(maxsize=None)
def _load_template(kind: str) -> Template:
    resource = resources.files("docqa_engine").joinpath(f"templates/{kind}.txt")
    try:
        text = resource.read_text(encoding="utf-8")
    except (FileNotFoundError, OSError) as exc:
        raise ConfigError(f"prompt template not found: {kind}.txt") from exc
    return Template(text)


def build_prompt(kind: str, context: dict) -> str:
    """Instantiate the named prompt template with `context` values.

    Same kind + context always yields identical bytes. Unknown kinds are a
    caller bug (ValueError); a missing template file is an installation
    problem (ConfigError).
    """
    if kind not in _PROMPT_KINDS:
        raise ValueError(f"unknown prompt kind: {kind!r}")
    template = _load_template(kind)
    try:
        return template.substitute(context)
    except KeyError as exc:
        raise ValueError(f"prompt context missing key: {exc.args[0]!r}") from exc


# ---------------------------------------------------------------------------
# Structured-output parsing


_QUESTION_LABEL_RE = re.compile(r"^[ \t>*#-]*question\s*[:：]\s*(.*)$", re.IGNORECASE)
_OPTIONS_HEADER_RE = re.compile(r"^[ \t>*#-]*options\s*[:：]?\s*$", re.IGNORECASE)
_OPTION_LINE_RE = re.compile(r"^[ \t>*-]*[\(（]?([A-J])[\)）\.．。:：]\s*(.*)$")
_ANSWER_LABEL_RE = re.compile(
    r"^[ \t>*#-]*answer\s*[:：]\s*[\(（]?([A-Ja-j])\b", re.IGNORECASE
)
_EVIDENCE_LABEL_RE = re.compile(r"^[ \t>*#-]*evidence\s*[:：]\s*(.*)$", re.IGNORECASE)


def parse_qa_candidate(model_output: str, qtype: str, source_page: PageRef) -> QACandidate:
    """Parse one generated QA candidate from labeled model output.

    Expects Question/Options/Answer/Evidence labels with options lettered
    consecutively from A; tolerates list markers, blank lines, and
    wrapped continuation lines.
    """
    question: str | None = None
    options: list[str] = []
    letters: list[str] = []
    answer_letter: str | None = None
    evidence: str | None = None
    collecting: str | None = None

    for line in model_output.splitlines():
        stripped = line.strip()
        if not stripped:
            collecting = None
            continue
        m = _QUESTION_LABEL_RE.match(line)
        if m and question is None:
            question = m.group(1).strip()
            collecting = "question"
            continue
        if _OPTIONS_HEADER_RE.match(line):
            collecting = None
            continue
        m = _ANSWER_LABEL_RE.match(line)
        if m and answer_letter is None:
            answer_letter = m.group(1).upper()
            collecting = None
            continue
        m = _EVIDENCE_LABEL_RE.match(line)
        if m and evidence is None:
            evidence = m.group(1).strip()
            collecting = "evidence"
            continue
        m = _OPTION_LINE_RE.match(line)
        if m:
            letters.append(m.group(1))
            options.append(m.group(2).strip())
            collecting = "option"
            continue
        if collecting == "question" and question is not None:
            question = f"{question} {stripped}".strip()
        elif collecting == "evidence" and evidence is not None:
            evidence = f"{evidence} {stripped}".strip()
        elif collecting == "option" and options:
            options[-1] = f"{options[-1]} {stripped}".strip()

    if not question:
        raise ParseError("generation output missing question")
    if len(options) < 2:
        raise ParseError("generation output needs at least two options")
    expected = [chr(ord("A") + i) for i in range(len(options))]
    if letters != expected:
        raise ParseError("option labels must run A, B, C, ... without gaps")
    if answer_letter is None:
        raise ParseError("generation output missing answer letter")
    answer_index = ord(answer_letter) - ord("A")
    if answer_index >= len(options):
        raise ParseError(f"answer letter {answer_letter} has no matching option")
    if evidence is None:
        raise ParseError("generation output missing evidence")

    return QACandidate(
        question=normalize_text(question),
        options=tuple(normalize_text(o) for o in options),
        answer_index=answer_index,
        qtype=qtype,
        source_page=source_page,
        evidence=normalize_text(evidence),
    )


_FEAS_LABEL_RE = re.compile(
    r"^[ \t>*#-]*(reasoning|answerable|answer(?!able)|evidence)\s*[:：]",
    re.IGNORECASE | re.MULTILINE,
)
_FEAS_SECTIONS = ("reasoning", "answerable", "answer", "evidence")

_YES_TOKENS = {"yes", "y", "true", "はい", "可能"}
_NO_TOKENS = {"no", "n", "false", "いいえ", "不可", "不可能"}


def _parse_yes_no(text: str) -> bool:
    m = re.match(r"[^\s。、，,\.:：;；!！?？]*", text.strip())
    token = m.group(0).casefold() if m else ""
    if token in _YES_TOKENS:
        return True
    if token in _NO_TOKENS:
        return False
    raise ParseError(f"answerable section must start with a yes/no token, got {token!r}")


def parse_feasibility(model_output: str) -> FeasibilityVerdict:
    """Extract the labeled Reasoning/Answerable/Answer/Evidence sections.

    Tolerates prose around the labels; each section runs to the next label.
    Any missing section is a parse error, as is an answerable verdict with
    an empty answer.
    """
    sections: dict[str, str] = {}
    matches = list(_FEAS_LABEL_RE.finditer(model_output))
    for i, m in enumerate(matches):
        label = m.group(1).lower()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(model_output)
        if label not in sections:
            sections[label] = model_output[m.end():end].strip()
    for name in _FEAS_SECTIONS:
        if name not in sections:
            raise ParseError(f"feasibility output missing section: {name}")
    answerable = _parse_yes_no(sections["answerable"])
    answer = normalize_text(sections["answer"])
    if answerable and not answer:
        raise ParseError("feasibility output marked answerable but gave no answer")
    return FeasibilityVerdict(
        reasoning=sections["reasoning"],
        answerable=answerable,
        answer=answer,
        evidence=normalize_text(sections["evidence"]),
    )


# ---------------------------------------------------------------------------
# Quality gates


def _jaccard(a: set[str], b: set[str]) -> float:
    union = a | b
    if not union:
        return 1.0  # two empty texts are identical
    return len(a & b) / len(union)


def _matching_option_count(answer: str, options: Iterable[str]) -> int:
    normalized = normalize_text(answer).casefold().strip(" .。")
    if not normalized:
        return 0
    candidates = [normalize_text(o).casefold() for o in options]
    exact = sum(1 for o in candidates if o == normalized)
    if exact:
        return exact
    return sum(
        1 for o in candidates if o and (normalized in o or o in normalized)
    )


_CLAUSE_SPLIT_RE = re.compile(r"[、。，．,\.;；:：!！?？]+")


def clause_count(question: str) -> int:
    return sum(1 for seg in _CLAUSE_SPLIT_RE.split(question) if seg.strip())


def validate_feasibility(
    verdict: FeasibilityVerdict,
    candidate: QACandidate,
    page_text: str,
    thresholds: GateThresholds = GateThresholds(),
) -> bool:
    """True iff the verdict affirms answerability with usable substance.

    Requires substantive reasoning, a yes verdict, an answer that matches
    exactly one option (normalized; substring match as fallback), and
    evidence whose tokens are mostly found on the page.
    """
    if not verdict.answerable:
        return False
    if len(verdict.reasoning.strip()) < thresholds.min_reasoning_chars:
        return False
    if _matching_option_count(verdict.answer, candidate.options) != 1:
        return False
    evidence_tokens = token_set(verdict.evidence)
    if not evidence_tokens:
        return False
    page_tokens = token_set(page_text)
    contained = len(evidence_tokens & page_tokens) / len(evidence_tokens)
    return contained >= thresholds.evidence_overlap


def run_gates(
    candidate: QACandidate,
    accepted: Iterable[QACandidate],
    page_text: str,
    thresholds: GateThresholds = GateThresholds(),
) -> GateReport:
    """Run the five quality gates; the report's overall is their conjunction.

    length: question within the char bounds. complexity: at least two
    clauses or a numeric reference. answer_support: the correct option's
    tokens reach the Jaccard floor against the page, or the option is
    numeric and all its numbers appear on the page. option_quality:
    non-empty pairwise-distinct options, bounded length spread, in-range
    answer index. dedup: question's token Jaccard stays below the ceiling
    against every accepted question.
    """
    question = candidate.question
    length_ok = thresholds.question_min_chars <= len(question) <= thresholds.question_max_chars

    complexity_ok = (
        clause_count(question) >= thresholds.min_clauses
        or count_numeric_tokens(question) >= 1
    )

    index_ok = 0 <= candidate.answer_index < len(candidate.options)
    page_tokens = token_set(page_text)
    if index_ok:
        option = candidate.options[candidate.answer_index]
        option_tokens = token_set(option)
        support_ok = _jaccard(option_tokens, page_tokens) >= thresholds.support_jaccard
        if not support_ok:
            numbers = [t.text for t in tokenize(option) if t.kind == "number"]
            support_ok = bool(numbers) and all(n in page_tokens for n in numbers)
    else:
        support_ok = False

    normalized_options = [normalize_text(o).casefold() for o in candidate.options]
    distinct_ok = (
        bool(normalized_options)
        and all(normalized_options)
        and len(set(normalized_options)) == len(normalized_options)
    )
    if distinct_ok:
        lengths = [len(o) for o in normalized_options]
        ratio_ok = max(lengths) <= thresholds.option_length_ratio * min(lengths)
    else:
        ratio_ok = False
    option_quality_ok = distinct_ok and ratio_ok and index_ok

    question_tokens = token_set(question)
    dedup_ok = all(
        _jaccard(question_tokens, token_set(prior.question)) < thresholds.dedup_jaccard
        for prior in accepted
    )

    return GateReport(
        length=length_ok,
        complexity=complexity_ok,
        answer_support=support_ok,
        option_quality=option_quality_ok,
        dedup=dedup_ok,
    )


# ---------------------------------------------------------------------------
# Orchestration


def _apportion(quota: int, weights: dict[str, float]) -> dict[str, int]:
    """Largest-remainder split of `quota` attempts across question types."""
    for qtype, weight in weights.items():
        if qtype not in QTYPES:
            raise ValueError(f"unknown question type: {qtype!r}")
        if weight < 0:
            raise ValueError(f"negative weight for {qtype!r}")
    total = sum(weights.values())
    if total <= 0:
        raise ValueError("type mix weights must sum to a positive value")
    shares = {q: quota * w / total for q, w in weights.items()}
    counts = {q: math.floor(s) for q, s in shares.items()}
    leftover = quota - sum(counts.values())
    by_remainder = sorted(
        weights, key=lambda q: (-(shares[q] - counts[q]), QTYPES.index(q))
    )
    for qtype in by_remainder[:leftover]:
        counts[qtype] += 1
    return counts


def _type_sequence(quota: int, counts: dict[str, int]) -> list[str]:
    remaining = dict(counts)
    sequence: list[str] = []
    while len(sequence) < quota:
        for qtype in QTYPES:
            if len(sequence) >= quota:
                break
            if remaining.get(qtype, 0) > 0:
                sequence.append(qtype)
                remaining[qtype] -= 1
    return sequence


def _options_block(options: Iterable[str]) -> str:
    return "\n".join(f"{chr(ord('A') + i)}. {text}" for i, text in enumerate(options))


def augment(
    corpus: Corpus,
    client,
    quota: int,
    per_type_mix: dict[str, float] | None = None,
    *,
    thresholds: GateThresholds = GateThresholds(),
    seed: int = 0,
    feasibility_check: bool = True,
    gen_temperature: float = 0.7,
    max_tokens: int = 512,
    page_quota: int | None = None,
    strata: int = DEFAULT_STRATA,
    content_floor: int = DEFAULT_CONTENT_FLOOR,
    toc_density_max: float = DEFAULT_TOC_DENSITY_MAX,
) -> AugmentResult:
    """Generate, gate, and verify `quota` QA candidates over the corpus.

    Attempts are apportioned across the five question types (uniformly
    unless `per_type_mix` gives weights) and cycled over the selected
    pages. Each attempt is generate -> parse -> gates -> feasibility
    round-trip; the first failing stage rejects the candidate and writes
    one audit record, so attempts == accepted + rejections. Candidates are
    processed strictly in attempt order, which keeps the accepted set and
    the dedup decisions reproducible for a fixed seed and model.
    """
    if quota < 1:
        raise ValueError("quota must be at least 1")
    weights = {q: 1.0 for q in QTYPES} if per_type_mix is None else dict(per_type_mix)
    counts = _apportion(quota, weights)
    pages = select_pages(
        corpus,
        page_quota or quota,
        seed=seed,
        strata=strata,
        content_floor=content_floor,
        toc_density_max=toc_density_max,
    )
    if not pages:
        logger.warning("augmentation produced nothing: no eligible pages")
        return AugmentResult(accepted=[], audit=[], attempts=0)

    rng = random.Random(seed)
    accepted: list[QACandidate] = []
    audit: list[dict] = []
    sequence = _type_sequence(quota, counts)
    for attempt, qtype in enumerate(sequence):
        doc_id, page_index = pages[attempt % len(pages)]
        page = corpus.get(doc_id, page_index)
        base = {
            "attempt": attempt,
            "qtype": qtype,
            "doc_id": doc_id,
            "page_index": page_index,
        }
        prompt = build_prompt(
            f"generate_{qtype}",
            {"page_text": page.normalized_text, "doc_id": doc_id, "page_index": page_index},
        )
        request = {
            "messages": [{"role": "user", "content": prompt}],
            "temperature": gen_temperature,
            "top_p": 0.95,
            "top_k": 50,
            "seed": rng.randrange(2**31),
            "max_tokens": max_tokens,
        }
        try:
            raw = client.generate(request)
        except (TransportError, EndpointError, ContractError) as exc:
            audit.append({**base, "stage": "transport", "reason": str(exc)})
            continue
        try:
            candidate = parse_qa_candidate(raw, qtype, (doc_id, page_index))
        except ParseError as exc:
            audit.append({**base, "stage": "parse", "reason": str(exc)})
            continue

        report = run_gates(candidate, accepted, page.normalized_text, thresholds)
        if not report.overall:
            failed = report.failed_gates()
            audit.append(
                {
                    **base,
                    "stage": f"gate:{failed[0]}",
                    "reason": "failed gates: " + ",".join(failed),
                    "question": candidate.question,
                }
            )
            continue

        if feasibility_check:
            feas_prompt = build_prompt(
                "feasibility",
                {
                    "page_text": page.normalized_text,
                    "question": candidate.question,
                    "options_block": _options_block(candidate.options),
                },
            )
            feas_request = {
                "messages": [{"role": "user", "content": feas_prompt}],
                "temperature": 0.0,
                "top_p": 1.0,
                "top_k": 1,
                "seed": rng.randrange(2**31),
                "max_tokens": max_tokens,
            }
            try:
                feas_raw = client.generate(feas_request)
            except (TransportError, EndpointError, ContractError) as exc:
                audit.append(
                    {**base, "stage": "transport", "reason": str(exc), "question": candidate.question}
                )
                continue
            try:
                verdict = parse_feasibility(feas_raw)
            except ParseError as exc:
                audit.append(
                    {**base, "stage": "feasibility_parse", "reason": str(exc), "question": candidate.question}
                )
                continue
            if not validate_feasibility(verdict, candidate, page.normalized_text, thresholds):
                audit.append(
                    {
                        **base,
                        "stage": "feasibility",
                        "reason": "feasibility validation failed",
                        "question": candidate.question,
                    }
                )
                continue

        accepted.append(candidate)
    return AugmentResult(accepted=accepted, audit=audit, attempts=len(sequence))


# ---------------------------------------------------------------------------
# OCR enhancement


_HEADING_RE = re.compile(r"^(#{1,6})[ \t]*")


def tidy_ocr_text(text: str) -> str:
    """Whitespace/heading cleanup applied to model-enhanced OCR output."""
    text = unicodedata.normalize("NFKC", text)
    lines = []
    for line in text.splitlines():
        line = line.rstrip()
        if line.startswith("#"):
            line = _HEADING_RE.sub(lambda m: m.group(1) + " ", line)
        lines.append(line)
    collapsed: list[str] = []
    for line in lines:
        if not line and collapsed and not collapsed[-1]:
            continue
        collapsed.append(line)
    while collapsed and not collapsed[0]:
        collapsed.pop(0)
    while collapsed and not collapsed[-1]:
        collapsed.pop()
    return "\n".join(collapsed)


def enhance_ocr(raw_text: str, client, *, max_tokens: int = 2048, seed: int = 0) -> str:
    """One model round-trip that restructures noisy OCR text, then tidies it."""
    prompt = build_prompt("ocr_enhance", {"page_text": raw_text})
    raw = client.generate(
        {
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0.0,
            "top_p": 1.0,
            "top_k": 1,
            "seed": seed,
            "max_tokens": max_tokens,
        }
    )
    return tidy_ocr_text(raw)


# ---------------------------------------------------------------------------
# Line-delimited record I/O


def write_qa_jsonl(path: str | Path, candidates: Iterable[QACandidate]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for candidate in candidates:
            fh.write(json.dumps(candidate.to_record(), ensure_ascii=False) + "\n")


def read_qa_jsonl(path: str | Path) -> list[QACandidate]:
    candidates = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no=line_no) from exc
            try:
                candidates.append(QACandidate.from_record(record))
            except ParseError as exc:
                raise ParseError(str(exc), line_no=line_no) from exc
    return candidates


def write_audit_jsonl(path: str | Path, audit: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in audit:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
