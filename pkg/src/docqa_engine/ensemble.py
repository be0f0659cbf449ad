"""Ensemble multiple-choice inference: decoding-config schedules, fan-out
with early stopping, answer extraction, and majority voting.

A schedule is one greedy configuration plus samplers whose temperatures
are evenly spaced over [0.1, 1.5] with cycling top-p/top-k. Responses are
tallied strictly in schedule order; the run stops early once the leading
option's vote share reaches the confidence threshold with the minimum
response count satisfied.
"""

from __future__ import annotations

import random
import re
from collections import Counter
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import normalize_text
from .errors import ContractError, EndpointError, TransportError

TEMPERATURE_RANGE = (0.1, 1.5)
TOP_P_CYCLE = (0.7, 0.8, 0.9, 0.95)
TOP_K_CYCLE = (20, 40, 50)

DEFAULT_SCHEDULE_COUNT = 20


@dataclass(frozen=True)
class DecodingConfig:
    id: int
    greedy: bool
    temperature: float  # ignored when greedy
    top_p: float
    top_k: int
    seed: int

    def to_request(self) -> dict:
        return {
            "temperature": 0.0 if self.greedy else self.temperature,
            "top_p": self.top_p,
            "top_k": self.top_k,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class StopRule:
    min_responses: int = 10
    confidence_threshold: float = 0.8


@dataclass
class EnsembleState:
    completed: list[tuple[int, str, str | None]] = field(default_factory=list)
    vote_counts: Counter = field(default_factory=Counter)

    @property
    def extractable(self) -> int:
        return sum(self.vote_counts.values())

    @property
    def confidence(self) -> float:
        if not self.vote_counts:
            return 0.0
        return max(self.vote_counts.values()) / self.extractable

    def record(self, config_id: int, raw: str, extracted: str | None) -> None:
        self.completed.append((config_id, raw, extracted))
        if extracted is not None:
            self.vote_counts[extracted] += 1


@dataclass(frozen=True)
class EnsembleVerdict:
    chosen_option: str | None  # None only when abstaining
    confidence: float
    votes: dict[str, int]
    responses_used: int
    stopped_early: bool
    abstained: bool = False

    def to_record(self) -> dict:
        return {
            "chosen_option": self.chosen_option,
            "confidence": self.confidence,
            "votes": dict(sorted(self.votes.items())),
            "responses_used": self.responses_used,
            "stopped_early": self.stopped_early,
            "abstained": self.abstained,
        }


def make_schedule(count: int = DEFAULT_SCHEDULE_COUNT, seed: int = 0) -> list[DecodingConfig]:
    """Deterministic decoding schedule: greedy first, then count-1 samplers.

    Sampler temperatures are evenly spaced over [0.1, 1.5]; top-p and
    top-k cycle through fixed value sets; per-config seeds derive from the
    master seed. Pure function of (count, seed).
    """
    if count < 2:
        raise ValueError("schedule needs at least a greedy config and one sampler")
    rng = random.Random(seed)
    seeds = [rng.randrange(2**31) for _ in range(count)]
    configs = [
        DecodingConfig(id=0, greedy=True, temperature=1.0, top_p=1.0, top_k=1, seed=seeds[0])
    ]
    lo, hi = TEMPERATURE_RANGE
    samplers = count - 1
    for i in range(1, count):
        if samplers == 1:
            temperature = lo
        else:
            temperature = lo + (i - 1) * ((hi - lo) / (samplers - 1))
        configs.append(
            DecodingConfig(
                id=i,
                greedy=False,
                temperature=temperature,
                top_p=TOP_P_CYCLE[(i - 1) % len(TOP_P_CYCLE)],
                top_k=TOP_K_CYCLE[(i - 1) % len(TOP_K_CYCLE)],
                seed=seeds[i],
            )
        )
    return configs


# Marker words must be followed by a real separator so "answered" or
# "answers" never match, and the captured letter must not continue into a
# longer word.
_MARKER_RE = re.compile(
    r"(?:final\s+answer|answer|答え|回答|正解)"
    r"(?:\s+(?:is|was)\s+|\s*[:：]\s*|は\s*|\s+)"
    r"[\(（\[]?([A-Ja-j])(?![0-9A-Za-z])",
    re.IGNORECASE,
)

_STANDALONE_LINE_RE = re.compile(r"^[\(（]?([A-Ja-j])[\)）\.。:：]?$")
_LEADING_LETTER_RE = re.compile(r"^\s*[\(（]?([A-Ja-j])[\)）\.。:：]")


def extract_option(
    raw: str,
    option_labels: list[str],
    option_texts: list[str] | None = None,
) -> str | None:
    """Extract the chosen option letter from a model response.

    Patterns are tried in priority order: explicit answer markers
    ("Answer: X", "答え: X", "the answer is X"), then a standalone label
    letter on its own line or at the start, then an exact option-text
    match when option strings are supplied. Returns None when nothing
    matches.
    """
    labels = {label.upper() for label in option_labels}

    marker_hits = [
        m.group(1).upper() for m in _MARKER_RE.finditer(raw)
        if m.group(1).upper() in labels
    ]
    if marker_hits:
        return marker_hits[-1]  # the final stated answer wins

    line_hits = []
    for line in raw.splitlines():
        m = _STANDALONE_LINE_RE.match(line.strip())
        if m and m.group(1).upper() in labels:
            line_hits.append(m.group(1).upper())
    if line_hits:
        return line_hits[-1]
    m = _LEADING_LETTER_RE.match(raw)
    if m and m.group(1).upper() in labels:
        return m.group(1).upper()

    if option_texts:
        raw_norm = normalize_text(raw).casefold()
        matches = [
            option_labels[i].upper()
            for i, text in enumerate(option_texts)
            if text and normalize_text(text).casefold() in raw_norm
        ]
        if len(matches) == 1:
            return matches[0]
    return None


def _structure_score(raw: str, option_texts: list[str] | None) -> int:
    score = 0
    if _MARKER_RE.search(raw):
        score += 2
    if len(raw.strip()) >= 50:
        score += 1
    if option_texts:
        raw_norm = normalize_text(raw).casefold()
        if any(
            text and normalize_text(text).casefold() in raw_norm
            for text in option_texts
        ):
            score += 1
    return score


def tiebreak_structural(
    tied_options: list[str],
    responses: list[tuple[int, str, str | None]],
    option_texts: list[str] | None = None,
) -> str:
    """Resolve a vote tie by the supporters' structural clarity.

    Each supporting response scores 2 for an explicit answer marker, 1 for
    reasoning of at least 50 characters, and 1 for referencing an option
    by its text; the tied option with the highest mean score wins, with
    residual ties going to the alphabetically first option.
    """
    if len(tied_options) == 1:
        return tied_options[0]
    means = {}
    for option in tied_options:
        scores = [
            _structure_score(raw, option_texts)
            for _, raw, extracted in responses
            if extracted == option
        ]
        means[option] = sum(scores) / len(scores) if scores else 0.0
    best = max(means.values())
    return min(option for option, mean in means.items() if mean == best)


def compose_user_message(prompt: str, context_texts: list[str] | None) -> str:
    if not context_texts:
        return prompt
    blocks = [f"[Context {i + 1}]\n{text}" for i, text in enumerate(context_texts)]
    return "\n\n".join(blocks) + "\n\n" + prompt


def build_answer_prompt(question: str, option_texts: list[str],
                        option_labels: list[str] | None = None) -> str:
    """Deterministic multiple-choice prompt demanding a labeled answer line."""
    labels = option_labels or [chr(ord("A") + i) for i in range(len(option_texts))]
    lines = [
        "Answer the following multiple-choice question using the context above.",
        f"Question: {question}",
        "Options:",
    ]
    lines += [f"{label}. {text}" for label, text in zip(labels, option_texts)]
    lines.append('Reply with the single best option letter on its own line as "Answer: X".')
    return "\n".join(lines)


def run_ensemble(
    prompt: str,
    context_texts: list[str] | None,
    schedule: list[DecodingConfig],
    client,
    stop: StopRule = StopRule(),
    option_texts: list[str] | None = None,
    option_labels: list[str] | None = None,
    max_tokens: int = 256,
) -> EnsembleVerdict:
    """Fan out the schedule, tally votes, and resolve the final answer.

    Requests are dispatched in schedule order with bounded concurrency but
    tallied strictly in schedule order, which keeps verdicts reproducible.
    Once the stop rule holds (min responses AND confidence), no further
    requests are issued and any in-flight completions are discarded. A
    transport failure after the gateway's retries counts as a completed
    but unextractable response. If no response yields an option the
    verdict abstains rather than guessing.
    """
    if not schedule:
        raise ValueError("schedule must not be empty")
    if option_texts and not option_labels:
        option_labels = [chr(ord("A") + i) for i in range(len(option_texts))]
    labels = option_labels or ["A", "B", "C", "D"]

    messages = [{"role": "user", "content": compose_user_message(prompt, context_texts)}]

    def call(config: DecodingConfig) -> str:
        request = {**config.to_request(), "messages": messages, "max_tokens": max_tokens}
        try:
            return client.generate(request)
        except (TransportError, EndpointError, ContractError):
            return ""

    window = getattr(getattr(client, "config", None), "max_in_flight", 4)
    window = max(1, min(window, len(schedule)))

    state = EnsembleState()
    stopped_early = False
    with ThreadPoolExecutor(max_workers=window) as pool:
        pending: list[tuple[DecodingConfig, Future]] = []
        next_i = 0

        def dispatch():
            nonlocal next_i
            while next_i < len(schedule) and len(pending) < window:
                config = schedule[next_i]
                pending.append((config, pool.submit(call, config)))
                next_i += 1

        dispatch()
        while pending:
            config, future = pending.pop(0)
            raw = future.result()
            state.record(config.id, raw, extract_option(raw, labels, option_texts))
            if (
                len(state.completed) >= stop.min_responses
                and state.confidence >= stop.confidence_threshold
            ):
                break
            dispatch()
        for _, future in pending:
            future.cancel()
    stopped_early = len(state.completed) < len(schedule)

    if state.extractable == 0:
        return EnsembleVerdict(
            chosen_option=None,
            confidence=0.0,
            votes={},
            responses_used=len(state.completed),
            stopped_early=stopped_early,
            abstained=True,
        )
    top = max(state.vote_counts.values())
    tied = sorted(opt for opt, count in state.vote_counts.items() if count == top)
    if len(tied) == 1:
        chosen = tied[0]
    else:
        chosen = tiebreak_structural(tied, state.completed, option_texts)
    return EnsembleVerdict(
        chosen_option=chosen,
        confidence=state.confidence,
        votes=dict(state.vote_counts),
        responses_used=len(state.completed),
        stopped_early=stopped_early,
    )
