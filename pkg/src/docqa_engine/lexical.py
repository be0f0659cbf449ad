"""TF-IDF page index: sublinear tf, smoothed idf, 1-5 gram features.

Weights follow w(f, d) = (1 + ln tf) * (ln((1 + N) / (1 + df)) + 1) with
per-page L2 normalization, so scoring a query is a cosine over sparse
vectors. The vocabulary keeps the max_features features with the highest
document frequency (ties broken lexicographically ascending).
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, PageRef
from .errors import FormatError
from .tokenizer import ngrams, tokenize

LEXICAL_MAGIC = b"LEXI"
LEXICAL_FORMAT_VERSION = 1

DEFAULT_MAX_FEATURES = 50_000


@dataclass
class Vocabulary:
    feature_ids: dict[str, int]  # feature -> dense id in [0, size)
    df: list[int]  # document frequency, indexed by feature id

    @property
    def size(self) -> int:
        return len(self.feature_ids)


@dataclass
class LexicalIndex:
    vocabulary: Vocabulary
    page_refs: list[PageRef]
    # Per page: sorted (feature_id, weight) pairs; L2 norm 1 unless empty.
    doc_vectors: list[list[tuple[int, float]]]
    page_count: int
    n_min: int
    n_max: int

    def __post_init__(self):
        self._postings: dict[int, list[tuple[int, float]]] = {}
        for page_i, vector in enumerate(self.doc_vectors):
            for fid, weight in vector:
                self._postings.setdefault(fid, []).append((page_i, weight))

    def idf(self, feature_id: int) -> float:
        return math.log((1 + self.page_count) / (1 + self.vocabulary.df[feature_id])) + 1.0


def page_features(normalized_text: str, n_min: int, n_max: int) -> Counter:
    """Gram frequencies for one page (or query), identical on both sides."""
    return Counter(ngrams(tokenize(normalized_text), n_min, n_max))


def build_lexical_index(
    corpus: Corpus,
    max_features: int = DEFAULT_MAX_FEATURES,
    n_min: int = 1,
    n_max: int = 5,
) -> LexicalIndex:
    if corpus.page_count == 0:
        raise ValueError("cannot index an empty corpus")
    if max_features < 1:
        raise ValueError("max_features must be >= 1")

    page_grams = [page_features(p.normalized_text, n_min, n_max) for p in corpus.pages]

    df_counts: Counter = Counter()
    for grams in page_grams:
        df_counts.update(grams.keys())

    # Highest-df features first; lexicographic ascending on ties. Taking a
    # prefix of this fixed order keeps the vocabulary monotone in
    # max_features.
    selection = sorted(df_counts.items(), key=lambda item: (-item[1], item[0]))
    selection = selection[:max_features]
    feature_ids = {feature: fid for fid, (feature, _) in enumerate(selection)}
    df = [count for _, count in selection]
    vocabulary = Vocabulary(feature_ids=feature_ids, df=df)

    n_pages = corpus.page_count
    doc_vectors: list[list[tuple[int, float]]] = []
    for grams in page_grams:
        pairs: list[tuple[int, float]] = []
        for feature, tf in grams.items():
            fid = feature_ids.get(feature)
            if fid is None:
                continue
            idf = math.log((1 + n_pages) / (1 + df[fid])) + 1.0
            pairs.append((fid, (1.0 + math.log(tf)) * idf))
        norm = math.sqrt(sum(w * w for _, w in pairs))
        if norm > 0:
            pairs = [(fid, w / norm) for fid, w in pairs]
        pairs.sort()
        doc_vectors.append(pairs)

    return LexicalIndex(
        vocabulary=vocabulary,
        page_refs=[(p.doc_id, p.page_index) for p in corpus.pages],
        doc_vectors=doc_vectors,
        page_count=n_pages,
        n_min=n_min,
        n_max=n_max,
    )


def score_lexical(index: LexicalIndex, query_text: str) -> list[tuple[PageRef, float]]:
    """Cosine scores of all pages against the query, descending.

    The query is tokenized, gram-expanded, and weighted exactly like a
    document. Pages with score 0 are omitted; ties are broken by
    (doc_id, page_index) ascending.
    """
    grams = page_features(query_text, index.n_min, index.n_max)
    weights: dict[int, float] = {}
    for feature, tf in grams.items():
        fid = index.vocabulary.feature_ids.get(feature)
        if fid is None:
            continue
        weights[fid] = (1.0 + math.log(tf)) * index.idf(fid)
    if not weights:
        return []
    norm = math.sqrt(sum(w * w for w in weights.values()))
    scores: dict[int, float] = {}
    for fid, q_weight in weights.items():
        for page_i, d_weight in index._postings.get(fid, ()):
            scores[page_i] = scores.get(page_i, 0.0) + (q_weight / norm) * d_weight
    results = [
        (index.page_refs[page_i], min(1.0, s)) for page_i, s in scores.items() if s > 0.0
    ]
    results.sort(key=lambda item: (-item[1], item[0]))
    return results


def _write_str(fh, text: str) -> None:
    data = text.encode("utf-8")
    fh.write(struct.pack("<I", len(data)))
    fh.write(data)


def _read_exact(fh, count: int) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise FormatError("lexical index file truncated")
    return data


def _read_str(fh) -> str:
    (length,) = struct.unpack("<I", _read_exact(fh, 4))
    return _read_exact(fh, length).decode("utf-8")


def save_lexical_index(index: LexicalIndex, path: str | Path) -> None:
    """Binary layout: header, vocabulary table, per-page sparse vectors.

    Header carries version, page count, vocabulary size, and the gram
    range so queries can be expanded identically after a reload. All
    integers and the float64 weights are little-endian.
    """
    features = sorted(index.vocabulary.feature_ids.items(), key=lambda item: item[1])
    with Path(path).open("wb") as fh:
        fh.write(LEXICAL_MAGIC)
        fh.write(
            struct.pack(
                "<IIIII",
                LEXICAL_FORMAT_VERSION,
                index.page_count,
                index.vocabulary.size,
                index.n_min,
                index.n_max,
            )
        )
        for feature, fid in features:
            _write_str(fh, feature)
            fh.write(struct.pack("<I", index.vocabulary.df[fid]))
        for (doc_id, page_index), vector in zip(index.page_refs, index.doc_vectors):
            _write_str(fh, doc_id)
            fh.write(struct.pack("<II", page_index, len(vector)))
            for fid, weight in vector:
                fh.write(struct.pack("<Id", fid, weight))


def load_lexical_index(path: str | Path) -> LexicalIndex:
    with Path(path).open("rb") as fh:
        if fh.read(4) != LEXICAL_MAGIC:
            raise FormatError("not a lexical index file")
        version, page_count, vocab_size, n_min, n_max = struct.unpack(
            "<IIIII", _read_exact(fh, 20)
        )
        if version != LEXICAL_FORMAT_VERSION:
            raise FormatError(f"unsupported lexical index version {version}")
        feature_ids: dict[str, int] = {}
        df: list[int] = []
        for fid in range(vocab_size):
            feature = _read_str(fh)
            (feature_df,) = struct.unpack("<I", _read_exact(fh, 4))
            feature_ids[feature] = fid
            df.append(feature_df)
        page_refs: list[PageRef] = []
        doc_vectors: list[list[tuple[int, float]]] = []
        for _ in range(page_count):
            doc_id = _read_str(fh)
            page_index, nnz = struct.unpack("<II", _read_exact(fh, 8))
            vector = []
            for _ in range(nnz):
                fid, weight = struct.unpack("<Id", _read_exact(fh, 12))
                vector.append((fid, weight))
            page_refs.append((doc_id, page_index))
            doc_vectors.append(vector)
        if fh.read(1):
            raise FormatError("trailing bytes after lexical index payload")
    return LexicalIndex(
        vocabulary=Vocabulary(feature_ids=feature_ids, df=df),
        page_refs=page_refs,
        doc_vectors=doc_vectors,
        page_count=page_count,
        n_min=n_min,
        n_max=n_max,
    )
