import json
from pathlib import Path

import pytest

from qbe_lexica.corpus import Corpus, Document
from qbe_lexica.wordpiece import Vocabulary

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def wordpiece_golden():
    with open(DATA_DIR / "wordpiece_golden.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def toy_vocab(wordpiece_golden):
    return Vocabulary(tokens=tuple(wordpiece_golden["vocab"]))


@pytest.fixture
def tiny_corpus():
    return Corpus([
        Document("d1", title="a b", abstract=""),
        Document("d2", title="b b", abstract=""),
    ])


def write_lines(path, lines):
    Path(path).write_text("".join(ln + "\n" for ln in lines), encoding="utf-8")
    return path
