import pytest
from hypothesis import given
from hypothesis import strategies as st

from qbe_lexica.errors import ValidationError
from qbe_lexica.wordpiece import Token, Vocabulary, wordpiece_tokenize


def test_golden_cases(wordpiece_golden, toy_vocab):
    for case in wordpiece_golden["cases"]:
        out = wordpiece_tokenize(case["word"], toy_vocab, case.get("max_word_chars", 100))
        assert [t.surface for t in out] == case["pieces"], case["word"]
        assert [t.id for t in out] == case["ids"], case["word"]


def test_whole_word_in_vocab(toy_vocab):
    assert wordpiece_tokenize("un", toy_vocab) == [Token("un", toy_vocab.id_of("un"))]


def test_unmatched_word_yields_unk(toy_vocab):
    out = wordpiece_tokenize("xqz", toy_vocab)
    assert out == [Token("[UNK]", toy_vocab.id_of("[UNK]"))]


def test_greedy_longest_match(toy_vocab):
    assert [t.surface for t in wordpiece_tokenize("unaffable", toy_vocab)] == [
        "un", "##aff", "##able",
    ]


def test_over_length_word_is_unk(toy_vocab):
    out = wordpiece_tokenize("a" * 101, toy_vocab, max_word_chars=100)
    assert [t.surface for t in out] == ["[UNK]"]


def test_vocabulary_rejects_duplicates():
    with pytest.raises(ValidationError):
        Vocabulary(tokens=("[UNK]", "x", "x"))


def test_vocabulary_requires_unk():
    with pytest.raises(ValidationError):
        Vocabulary(tokens=("a", "b"))


ROUNDTRIP_VOCAB = Vocabulary(tokens=(
    "[UNK]", "a", "b", "c", "d", "q", "r", "u", "n",
    "##a", "##b", "##c", "##d", "##q", "##r", "##u", "##n",
    "un", "##able", "ab", "##cd",
))


@given(st.text(alphabet="abcdqrun", min_size=1, max_size=20))
def test_roundtrip_reassembles_word(word):
    vocab = ROUNDTRIP_VOCAB
    pieces = wordpiece_tokenize(word, vocab)
    if pieces[0].surface == "[UNK]":
        return
    rebuilt = pieces[0].surface + "".join(
        p.surface[len(vocab.continuation_prefix):] for p in pieces[1:]
    )
    assert rebuilt == word
    assert all(p.id is not None and p.id < len(vocab) for p in pieces)
