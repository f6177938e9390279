"""Greedy longest-match-first subword tokenization over a fixed vocabulary."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import ConfigError, ValidationError

DEFAULT_UNK_TOKEN = "[UNK]"
DEFAULT_CONTINUATION_PREFIX = "##"
DEFAULT_SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
DEFAULT_MAX_WORD_CHARS = 100


class Token(NamedTuple):
    """A single analyzed token; ``id`` is set only by subword analysis."""

    surface: str
    id: int | None = None


@dataclass(frozen=True)
class Vocabulary:
    """Token-to-id table in the one-token-per-line file layout.

    The line number (0-based) of a token is its id.
    """

    tokens: tuple[str, ...]
    unk_token: str = DEFAULT_UNK_TOKEN
    continuation_prefix: str = DEFAULT_CONTINUATION_PREFIX
    special_tokens: frozenset[str] = field(
        default_factory=lambda: frozenset(DEFAULT_SPECIAL_TOKENS)
    )
    ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = {}
        for i, tok in enumerate(self.tokens):
            if tok in ids:
                raise ValidationError(f"duplicate vocabulary token {tok!r} at ids {ids[tok]} and {i}")
            ids[tok] = i
        if self.unk_token not in ids:
            raise ValidationError(f"unk token {self.unk_token!r} missing from vocabulary")
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.ids

    def id_of(self, token: str) -> int:
        return self.ids[token]

    def is_special(self, token: str) -> bool:
        return token in self.special_tokens

    def is_continuation(self, token: str) -> bool:
        return token.startswith(self.continuation_prefix)


def load_vocabulary(
    path,
    unk_token: str = DEFAULT_UNK_TOKEN,
    continuation_prefix: str = DEFAULT_CONTINUATION_PREFIX,
    special_tokens=DEFAULT_SPECIAL_TOKENS,
) -> Vocabulary:
    """Read a vocabulary file (UTF-8, one token per line, line number = id)."""
    try:
        with open(path, encoding="utf-8") as fh:
            tokens = tuple(line.rstrip("\n") for line in fh)
    except OSError as exc:
        raise ConfigError(f"cannot read vocabulary file {path}: {exc}") from exc
    if tokens and tokens[-1] == "":
        tokens = tokens[:-1]
    return Vocabulary(
        tokens=tokens,
        unk_token=unk_token,
        continuation_prefix=continuation_prefix,
        special_tokens=frozenset(special_tokens),
    )


def wordpiece_tokenize(
    word: str,
    vocab: Vocabulary,
    max_word_chars: int = DEFAULT_MAX_WORD_CHARS,
) -> list[Token]:
    """Segment one basic token into subword pieces.

    Greedy longest-match-first: at each position, the longest vocabulary
    entry (with the continuation prefix for non-initial positions) wins.
    A word that cannot be fully segmented, or that exceeds
    ``max_word_chars``, becomes a single unk token.
    """
    unk = Token(vocab.unk_token, vocab.id_of(vocab.unk_token))
    if len(word) > max_word_chars:
        return [unk]
    pieces: list[Token] = []
    start = 0
    n = len(word)
    while start < n:
        end = n
        match = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = vocab.continuation_prefix + piece
            if piece in vocab:
                match = piece
                break
            end -= 1
        if match is None:
            return [unk]
        pieces.append(Token(match, vocab.id_of(match)))
        start = end
    return pieces
