"""Multi-stage tokenizer for mixed Japanese/Latin/numeric text.

Latin alphanumeric runs become single lowercased word tokens, digit runs
(with optional decimal point and percent sign) become number tokens, and
contiguous CJK runs are expanded into overlapping character bigrams plus
the whole run when it is short. Everything else that is not whitespace is
kept as a symbol token. Input is expected to be already normalized by
``corpus.normalize_text``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

# Hiragana, katakana (incl. prolonged sound mark), iteration marks, CJK
# unified ideographs + extension A, compatibility ideographs.
_CJK_CLASS = "々〆぀-ヿ㐀-䶿一-鿿豈-﫿"

# Whole CJK runs up to this length are emitted in addition to their bigrams.
SHORT_RUN_MAX = 4

# Joiner for n-grams; a control character, so it can never occur inside a
# token produced from normalized text.
NGRAM_SEP = "\x1f"

_TOKEN_RE = re.compile(
    rf"(?P<number>\d+(?:\.\d+)?%?(?![0-9A-Za-z]))"
    rf"|(?P<latin>[0-9A-Za-z]+)"
    rf"|(?P<cjk>[{_CJK_CLASS}]+)"
    rf"|(?P<symbol>[^\s0-9A-Za-z{_CJK_CLASS}]+)"
)

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?%?(?![0-9A-Za-z])")

TOKEN_KINDS = ("cjk_gram", "latin_word", "number", "symbol")


@dataclass(frozen=True)
class Token:
    text: str
    kind: str  # one of TOKEN_KINDS


def _cjk_run_tokens(run: str) -> list[Token]:
    """Overlapping bigrams plus the whole run when len <= SHORT_RUN_MAX.

    A two-character run is emitted once: its single bigram already equals
    the whole run, and emitting both would double the term frequency of one
    occurrence.
    """
    grams = [Token(run[i : i + 2], "cjk_gram") for i in range(len(run) - 1)]
    if len(run) <= SHORT_RUN_MAX and len(run) != 2:
        grams.append(Token(run, "cjk_gram"))
    return grams


def tokenize(text: str) -> list[Token]:
    """Split normalized text into tokens, preserving source order.

    Deterministic and total: any input yields a (possibly empty) token list.
    """
    tokens: list[Token] = []
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        value = m.group()
        if kind == "number":
            tokens.append(Token(value, "number"))
        elif kind == "latin":
            tokens.append(Token(value.lower(), "latin_word"))
        elif kind == "cjk":
            tokens.extend(_cjk_run_tokens(value))
        else:
            tokens.append(Token(value, "symbol"))
    return tokens


def ngrams(tokens: list[Token], n_min: int = 1, n_max: int = 5) -> list[str]:
    """All contiguous token n-grams for n in [n_min, n_max].

    Grams are token texts joined with NGRAM_SEP. Order is deterministic:
    ascending n, then position.
    """
    if not 1 <= n_min <= n_max:
        raise ValueError(f"invalid n-gram range [{n_min}, {n_max}]")
    texts = [t.text for t in tokens]
    grams: list[str] = []
    for n in range(n_min, n_max + 1):
        for i in range(len(texts) - n + 1):
            grams.append(NGRAM_SEP.join(texts[i : i + n]))
    return grams


def count_numeric_tokens(text: str) -> int:
    """Number of numeric tokens in the text (decimal/percent forms included)."""
    return sum(1 for _ in _NUMBER_RE.finditer(text))


def token_set(text: str) -> set[str]:
    """Set of token texts, for overlap measures over normalized text."""
    return {t.text for t in tokenize(text)}
