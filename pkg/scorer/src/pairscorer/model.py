"""Base model handling.

``load_base`` accepts anything ``transformers`` can resolve: a hub name
(bert-base-uncased, a biomedical variant) or a local directory.
``init_base`` materializes a small randomly-initialized bidirectional
encoder with a word-level vocabulary drawn from pairs files, for
environments without hub access; it flows through the exact same
fine-tuning path as a downloaded checkpoint.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

import torch
from transformers import (
    AutoModelForSequenceClassification,
    AutoTokenizer,
    BertConfig,
    BertForSequenceClassification,
    BertTokenizer,
)

from .records import read_pairs

SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]


def build_vocab(pairs_paths: Iterable[Path | str]) -> list[str]:
    """Word-level vocabulary over every query and candidate string."""
    words: set[str] = set()
    for path in pairs_paths:
        for record in read_pairs(path):
            words.update(record.query.split())
            words.update(record.candidate.split())
    return SPECIAL_TOKENS + sorted(words)


def init_base(pairs_paths: Iterable[Path | str], out_dir: Path | str,
              hidden_size: int = 128, num_layers: int = 2,
              num_heads: int = 4, max_seq_len: int = 128,
              seed: int = 13) -> Path:
    """Create a local base-model artifact and return its directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocab = build_vocab(pairs_paths)
    # human-readable copy; the tokenizer itself serializes to tokenizer.json
    (out / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(vocab={token: i for i, token in enumerate(vocab)},
                              do_lower_case=True, model_max_length=max_seq_len)
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=hidden_size * 4,
        max_position_embeddings=max(64, max_seq_len),
        num_labels=2,
    )
    model = BertForSequenceClassification(config)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return out


def load_base(name_or_dir: str):
    """(tokenizer, model) ready for sentence-pair fine-tuning."""
    tokenizer = AutoTokenizer.from_pretrained(name_or_dir)
    model = AutoModelForSequenceClassification.from_pretrained(name_or_dir, num_labels=2)
    return tokenizer, model
