"""Batch inference: pairs file in, scores file out.

The emitted score is the softmax probability of the positive class.
Inputs are padded to the model's maximum length so a pair's score never
depends on what else shares its batch; over-length pairs are truncated
and noted in a warnings log, never rejected.
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import load_base
from .records import read_pairs, write_scores
from .training import CONFIG_FILE, predict_probs


def _configured_max_len(model_dir: str, default: int = 128) -> int:
    config_path = Path(model_dir) / CONFIG_FILE
    if config_path.exists():
        return int(json.loads(config_path.read_text(encoding="utf-8"))["max_seq_len"])
    return default


def score(pairs_path: Path | str, model_dir: str, out_path: Path | str,
          batch_size: int = 64, warnings_path: Path | str | None = None) -> Path:
    """Score every pair and write the scores JSONL; returns the output path."""
    records = read_pairs(pairs_path)
    tokenizer, model = load_base(model_dir)
    max_seq_len = _configured_max_len(model_dir)

    if warnings_path is None:
        warnings_path = Path(str(out_path) + ".warnings")
    with open(warnings_path, "w", encoding="utf-8") as log:
        for record in records:
            length = len(tokenizer(record.query, record.candidate,
                                   truncation=False)["input_ids"])
            if length > max_seq_len:
                log.write(f"truncated {record.query_id}\t{record.candidate_id}\t"
                          f"{length} > {max_seq_len}\n")

    probs = predict_probs(model, tokenizer, records, max_seq_len,
                          batch_size=batch_size, pad_to_max=True)
    write_scores(records, probs[:, 1].tolist(), out_path)
    return Path(out_path)
