"""Zero-shot export of per-document token weights from an MLM checkpoint.

Two stores are produced in the reranking engine's file formats:

* distribution store — per document, a vocabulary-wide log-softmax taken
  from the language-modeling head over a sequence-level representation,
  sparsified to the top-k entries; the emitted file-level floor is the
  maximum over documents of the (k+1)-th log-probability, an upper bound
  on every dropped entry.
* impact store — per document token, ``relu(projection(hidden_state))``
  reduced to one weight per token id (maximum over positions).

No training happens here; an absent projection head is initialized from
the configured seed and clearly flagged as untrained.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import torch
from tokenizers import Tokenizer, normalizers, pre_tokenizers, processors
from tokenizers.models import WordPiece
from transformers import AutoModelForMaskedLM

log = logging.getLogger("weightgen")


class ExportError(Exception):
    pass


class ConfigError(ExportError):
    pass


class StoreKind(str, Enum):
    TILDE_DISTRIBUTION = "tilde-distribution"
    IMPACT = "impact"


@dataclass
class ExportConfig:
    model_name: str
    store_kind: StoreKind = StoreKind.TILDE_DISTRIBUTION
    top_k: int = 64
    max_doc_tokens: int = 512
    batch_size: int = 8
    device: str = "cpu"
    seed: int = 42
    mean_pool: bool = False
    skip_special_tokens: bool = True
    projection_path: str | None = None
    lowercase: bool = True
    strip_accents: bool = True

    def __post_init__(self):
        if self.store_kind == StoreKind.TILDE_DISTRIBUTION and self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1 for distribution export, got {self.top_k}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


def read_corpus(path) -> list[tuple[str, str]]:
    """Load (doc_id, text) pairs from the engine's corpus JSONL format."""
    docs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from exc
            doc_id = str(rec["doc_id"])
            if doc_id in seen:
                raise ExportError(f"{path}:{line_no}: duplicate doc_id {doc_id!r}")
            seen.add(doc_id)
            text = " ".join(p for p in (rec.get("title", ""), rec.get("abstract", "")) if p)
            docs.append((doc_id, text))
    return docs


class WeightExporter:
    def __init__(self, config: ExportConfig):
        self.config = config
        torch.manual_seed(config.seed)
        try:
            self.model = AutoModelForMaskedLM.from_pretrained(config.model_name)
        except Exception as exc:
            raise ConfigError(f"cannot load model {config.model_name!r}: {exc}") from exc
        self.model.eval()
        self.device = torch.device(config.device)
        self.model.to(self.device)
        limit = getattr(self.model.config, "max_position_embeddings", config.max_doc_tokens)
        if config.max_doc_tokens > limit:
            raise ConfigError(
                f"max_doc_tokens {config.max_doc_tokens} exceeds the model's positional limit {limit}"
            )
        self.vocab: list[str] = self._model_vocab()
        self.vocab_index = {t: i for i, t in enumerate(self.vocab)}
        self.tokenizer = self._build_tokenizer()
        self.special_ids = {
            self.vocab_index[t]
            for t in ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
            if t in self.vocab_index
        }
        self._projection: torch.nn.Linear | None = None

    def _model_vocab(self) -> list[str]:
        path = Path(self.config.model_name) / "vocab.txt"
        if path.is_file():
            tokens = path.read_text(encoding="utf-8").splitlines()
            if len(tokens) != self.model.config.vocab_size:
                raise ConfigError(
                    f"{path}: {len(tokens)} tokens but the model expects {self.model.config.vocab_size}"
                )
            return tokens
        raise ConfigError(
            f"no vocab.txt found next to {self.config.model_name!r}; "
            "a one-token-per-line vocabulary is required"
        )

    def _build_tokenizer(self) -> Tokenizer:
        tok = Tokenizer(WordPiece(
            vocab=dict(self.vocab_index), unk_token="[UNK]", max_input_chars_per_word=100,
        ))
        tok.normalizer = normalizers.BertNormalizer(
            lowercase=self.config.lowercase, strip_accents=self.config.strip_accents,
        )
        tok.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
        tok.post_processor = processors.TemplateProcessing(
            single="[CLS] $A [SEP]",
            special_tokens=[
                ("[CLS]", self.vocab_index["[CLS]"]),
                ("[SEP]", self.vocab_index["[SEP]"]),
            ],
        )
        tok.enable_truncation(max_length=self.config.max_doc_tokens)
        tok.enable_padding(pad_id=self.vocab_index.get("[PAD]", 0), pad_token="[PAD]")
        return tok

    def write_vocab(self, path) -> None:
        Path(path).write_text("\n".join(self.vocab) + "\n", encoding="utf-8")

    def _batches(self, docs):
        truncated = 0
        bs = self.config.batch_size
        for start in range(0, len(docs), bs):
            chunk = docs[start:start + bs]
            encodings = self.tokenizer.encode_batch([text for _, text in chunk])
            truncated += sum(1 for e in encodings if e.overflowing)
            ids = torch.tensor([e.ids for e in encodings], dtype=torch.long, device=self.device)
            mask = torch.tensor([e.attention_mask for e in encodings], dtype=torch.long,
                                device=self.device)
            yield [d for d, _ in chunk], ids, mask
        if truncated:
            log.warning("%d documents exceeded %d tokens and were truncated",
                        truncated, self.config.max_doc_tokens)

    def _sequence_logits(self, ids, mask) -> torch.Tensor:
        """Vocabulary logits from the LM head over the sequence representation."""
        if not self.config.mean_pool:
            return self.model(input_ids=ids, attention_mask=mask).logits[:, 0, :]
        if not hasattr(self.model, "cls"):
            raise ConfigError("mean-pool export needs a model with a separable MLM head")
        hidden = self.model.base_model(input_ids=ids, attention_mask=mask).last_hidden_state
        weights = mask.unsqueeze(-1).to(hidden.dtype)
        pooled = (hidden * weights).sum(dim=1) / weights.sum(dim=1)
        return self.model.cls(pooled)

    @torch.no_grad()
    def tilde_distributions(self, docs, top_k: int | None = None):
        """Yield (doc_id, entries, dropped_bound) with entries sorted by log-probability."""
        k = self.config.top_k if top_k is None else top_k
        vocab_size = len(self.vocab)
        k_eff = min(k, vocab_size)
        for doc_ids, ids, mask in self._batches(docs):
            log_probs = torch.log_softmax(self._sequence_logits(ids, mask).float(), dim=-1)
            take = min(k_eff + 1, vocab_size)
            values, indices = torch.topk(log_probs, take, dim=-1)
            for row, doc_id in enumerate(doc_ids):
                row_values = values[row].tolist()
                row_indices = indices[row].tolist()
                entries = list(zip(row_indices[:k_eff], row_values[:k_eff]))
                dropped_bound = row_values[k_eff] if take > k_eff else row_values[-1]
                entries.sort(key=lambda e: (-e[1], e[0]))
                yield doc_id, entries, dropped_bound

    def export_tilde(self, corpus_path, out_path, top_k: int | None = None) -> int:
        docs = read_corpus(corpus_path)
        records = []
        floor = None
        for doc_id, entries, bound in self.tilde_distributions(docs, top_k=top_k):
            floor = bound if floor is None else max(floor, bound)
            records.append((doc_id, entries))
        records.sort(key=lambda r: r[0])
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"floor_logprob": floor}) + "\n")
            for doc_id, entries in records:
                fh.write(json.dumps(
                    {"doc_id": doc_id, "entries": [[t, lp] for t, lp in entries]},
                    sort_keys=True, separators=(",", ":"),
                ) + "\n")
        log.info("wrote %d distributions to %s (floor %.6f)", len(records), out_path, floor)
        return len(records)

    def export_expansion_lists(self, corpus_path, out_path, m: int) -> int:
        """Top-m ranked token lists per document, in the distribution file format."""
        if m < 1:
            raise ConfigError(f"expansion list size must be >= 1, got {m}")
        docs = read_corpus(corpus_path)
        records = []
        for doc_id, entries, _bound in self.tilde_distributions(docs, top_k=m):
            records.append((doc_id, entries))
        records.sort(key=lambda r: r[0])
        with open(out_path, "w", encoding="utf-8") as fh:
            for doc_id, entries in records:
                fh.write(json.dumps(
                    {"doc_id": doc_id, "entries": [[t, lp] for t, lp in entries]},
                    sort_keys=True, separators=(",", ":"),
                ) + "\n")
        log.info("wrote %d expansion lists to %s", len(records), out_path)
        return len(records)

    def _projection_head(self, hidden_size: int) -> torch.nn.Linear:
        if self._projection is not None:
            return self._projection
        proj = torch.nn.Linear(hidden_size, 1)
        if self.config.projection_path:
            state = torch.load(self.config.projection_path, map_location=self.device)
            proj.load_state_dict(state)
            log.info("loaded projection head from %s", self.config.projection_path)
        else:
            generator = torch.Generator().manual_seed(self.config.seed)
            with torch.no_grad():
                proj.weight.copy_(torch.randn(proj.weight.shape, generator=generator) * 0.02)
                proj.bias.zero_()
            log.warning(
                "no projection head supplied; using an UNTRAINED head "
                "randomly initialized from seed %d", self.config.seed,
            )
        proj.to(self.device)
        proj.eval()
        self._projection = proj
        return proj

    @torch.no_grad()
    def export_impacts(self, corpus_path, out_path) -> int:
        docs = read_corpus(corpus_path)
        proj = self._projection_head(self.model.config.hidden_size)
        records = []
        for doc_ids, ids, mask in self._batches(docs):
            hidden = self.model.base_model(input_ids=ids, attention_mask=mask).last_hidden_state
            weights = torch.relu(proj(hidden).squeeze(-1)).float()
            for row, doc_id in enumerate(doc_ids):
                table: dict[int, float] = {}
                for pos in range(int(mask[row].sum().item())):
                    tid = int(ids[row, pos].item())
                    if self.config.skip_special_tokens and tid in self.special_ids:
                        continue
                    w = float(weights[row, pos].item())
                    if tid not in table or w > table[tid]:
                        table[tid] = w
                records.append((doc_id, sorted(table.items())))
        records.sort(key=lambda r: r[0])
        with open(out_path, "w", encoding="utf-8") as fh:
            for doc_id, weights_list in records:
                fh.write(json.dumps(
                    {"doc_id": doc_id, "weights": [[t, w] for t, w in weights_list]},
                    sort_keys=True, separators=(",", ":"),
                ) + "\n")
        log.info("wrote %d impact maps to %s", len(records), out_path)
        return len(records)
