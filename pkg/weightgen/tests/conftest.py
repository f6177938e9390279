import json

import pytest
import torch
from transformers import BertConfig, BertForMaskedLM

WORDS = [f"term{i}" for i in range(80)] + ["alpha", "beta", "gamma", "ranking", "signal"]
VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + WORDS + [f"##p{i}" for i in range(15)]


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    """A tiny randomly initialized MLM checkpoint with its vocabulary file."""
    path = tmp_path_factory.mktemp("model")
    (path / "vocab.txt").write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=512,
    )
    BertForMaskedLM(config).save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "corpus.jsonl"
    import random
    rng = random.Random(5)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(12):
            words = [rng.choice(WORDS) for _ in range(rng.randint(6, 20))]
            fh.write(json.dumps({
                "doc_id": f"d{i:03d}",
                "title": " ".join(words[:3]),
                "abstract": " ".join(words[3:]),
            }) + "\n")
    return str(path)
