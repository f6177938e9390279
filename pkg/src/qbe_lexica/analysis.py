"""Analyzer pipelines turning raw text into token streams.

Four pipelines are supported:

* ``sa``      — Unicode word-boundary segmentation (UAX #29) + lowercase,
                the behavior of a stock search-engine standard analyzer.
* ``stm1``    — whitespace segmentation + lowercase + Porter stem.
* ``stm2``    — word-boundary segmentation + lowercase + Porter stem.
* ``subword`` — BERT-style basic tokenization followed by greedy
                longest-match subword segmentation against a vocabulary
                file; the only pipeline that emits token ids.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import regex

from .errors import ConfigError
from .porter import porter_stem
from .wordpiece import (
    DEFAULT_MAX_WORD_CHARS,
    Token,
    Vocabulary,
    load_vocabulary,
    wordpiece_tokenize,
)


class AnalyzerKind(str, Enum):
    SA = "sa"
    STM1 = "stm1"
    STM2 = "stm2"
    SUBWORD = "subword"


@dataclass(frozen=True)
class AnalyzerSpec:
    kind: AnalyzerKind
    vocab_path: str | None = None
    lowercase: bool = True
    strip_accents: bool = True

    def __post_init__(self):
        if self.kind == AnalyzerKind.SUBWORD and not self.vocab_path:
            raise ConfigError("subword analyzer requires a vocabulary file")


_WORD_BOUNDARY = regex.compile(r"(?w)\b")
_HAS_WORD_CHAR = regex.compile(r"\w")


def uax29_words(text: str) -> list[str]:
    """Split on default Unicode word boundaries, keeping word-like segments."""
    bounds = [m.start() for m in _WORD_BOUNDARY.finditer(text)]
    out = []
    for a, b in zip(bounds, bounds[1:]):
        seg = text[a:b]
        if _HAS_WORD_CHAR.search(seg):
            out.append(seg)
    return out


def _strip_accents(text: str) -> str:
    return "".join(
        ch for ch in unicodedata.normalize("NFD", text)
        if unicodedata.category(ch) != "Mn"
    )


def _is_punctuation(ch: str) -> bool:
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def basic_tokenize(text: str, lowercase: bool = True, strip_accents: bool = True) -> list[str]:
    """Whitespace split with punctuation isolated into separate tokens."""
    out: list[str] = []
    for chunk in text.split():
        if lowercase:
            chunk = chunk.lower()
        if strip_accents:
            chunk = _strip_accents(chunk)
        current: list[str] = []
        for ch in chunk:
            if _is_punctuation(ch):
                if current:
                    out.append("".join(current))
                    current = []
                out.append(ch)
            else:
                current.append(ch)
        if current:
            out.append("".join(current))
    return out


class Analyzer:
    """A compiled analyzer; holds the loaded vocabulary for subword specs."""

    def __init__(self, spec: AnalyzerSpec):
        self.spec = spec
        self.vocab: Vocabulary | None = None
        if spec.kind == AnalyzerKind.SUBWORD:
            self.vocab = load_vocabulary(spec.vocab_path)

    def __call__(self, text: str) -> list[Token]:
        kind = self.spec.kind
        if kind == AnalyzerKind.SA:
            return [Token(w.lower()) for w in uax29_words(text)]
        if kind == AnalyzerKind.STM1:
            return [Token(porter_stem(w.lower())) for w in text.split()]
        if kind == AnalyzerKind.STM2:
            return [Token(porter_stem(w.lower())) for w in uax29_words(text)]
        tokens: list[Token] = []
        for word in basic_tokenize(
            text, lowercase=self.spec.lowercase, strip_accents=self.spec.strip_accents
        ):
            tokens.extend(wordpiece_tokenize(word, self.vocab, DEFAULT_MAX_WORD_CHARS))
        return tokens


_ANALYZER_CACHE: dict[AnalyzerSpec, Analyzer] = {}


def build_analyzer(spec: AnalyzerSpec) -> Analyzer:
    analyzer = _ANALYZER_CACHE.get(spec)
    if analyzer is None:
        analyzer = Analyzer(spec)
        _ANALYZER_CACHE[spec] = analyzer
    return analyzer


def analyze(text: str, spec: AnalyzerSpec) -> list[Token]:
    """Run the pipeline selected by ``spec`` over ``text``."""
    return build_analyzer(spec)(text)


def unique_token_counts(tokens: Iterable) -> Mapping:
    """Histogram of a token stream.

    ``Token`` instances are keyed by id when present, by surface otherwise;
    plain strings or ints are keyed as themselves.
    """
    def key(tok):
        if isinstance(tok, Token):
            return tok.id if tok.id is not None else tok.surface
        return tok

    return Counter(key(t) for t in tokens)
