"""Fine-tuning of the sentence-pair classifier.

Inputs are encoded as `[CLS] named entity [SEP] candidate concept [SEP]`;
the classifier is a linear head over the pooled classification token with
a two-way softmax. The recipe defaults to 10 epochs, batch size 16 and a
3e-5 learning rate. The checkpoint kept is the epoch with the best
dev-set group-argmax accuracy (earliest epoch wins ties).
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import torch

from .model import load_base
from .records import PairRecord, group_indices, read_pairs, require_labels

CONFIG_FILE = "finetune_config.json"
SUMMARY_FILE = "training_summary.json"


@dataclass(frozen=True)
class FineTuneConfig:
    base_model: str
    epochs: int = 10
    batch_size: int = 16
    learning_rate: float = 3e-5
    max_seq_len: int = 128
    seed: int = 13


@dataclass
class TrainResult:
    out_dir: Path
    step_losses: list[float] = field(default_factory=list)
    epoch_dev_accuracy: list[float] = field(default_factory=list)
    best_epoch: int = 0  # 1-based


def encode_batch(tokenizer, records: Sequence[PairRecord], max_seq_len: int,
                 pad_to_max: bool = False):
    return tokenizer(
        [r.query for r in records],
        [r.candidate for r in records],
        truncation=True,
        max_length=max_seq_len,
        padding="max_length" if pad_to_max else True,
        return_tensors="pt",
    )


@torch.no_grad()
def predict_probs(model, tokenizer, records: Sequence[PairRecord],
                  max_seq_len: int, batch_size: int = 64,
                  pad_to_max: bool = False) -> torch.Tensor:
    """(len(records), 2) class probabilities, rows summing to 1."""
    model.eval()
    chunks = []
    for start in range(0, len(records), batch_size):
        batch = records[start:start + batch_size]
        logits = model(**encode_batch(tokenizer, batch, max_seq_len, pad_to_max)).logits
        chunks.append(torch.softmax(logits, dim=-1))
    return torch.cat(chunks) if chunks else torch.empty((0, 2))


def group_argmax_accuracy(records: Sequence[PairRecord],
                          scores: Sequence[float]) -> float:
    """Fraction of gold-bearing groups whose top-scored pair is the gold one.

    Groups without a label-1 pair cannot be answered correctly by any
    ranking and stay out of the denominator.
    """
    groups = group_indices(records)
    scored_groups = 0
    correct = 0
    for indices in groups.values():
        if not any(records[i].label == 1 for i in indices):
            continue
        scored_groups += 1
        best = max(indices, key=lambda i: (scores[i], -i))
        if records[best].label == 1:
            correct += 1
    return correct / scored_groups if scored_groups else 0.0


def train(pairs_path: Path | str, config: FineTuneConfig, out_dir: Path | str,
          dev_path: Path | str | None = None) -> TrainResult:
    """Fine-tune on a labeled pairs file and save the best checkpoint."""
    records = read_pairs(pairs_path)
    require_labels(records, pairs_path)
    dev_records = records if dev_path is None else read_pairs(dev_path)
    require_labels(dev_records, dev_path or pairs_path)

    tokenizer, model = load_base(config.base_model)
    torch.manual_seed(config.seed)
    device = torch.device("cpu")
    model.to(device)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    rng = random.Random(config.seed)

    result = TrainResult(out_dir=Path(out_dir))
    best_accuracy = -1.0
    best_state = None
    for epoch in range(1, config.epochs + 1):
        order = list(range(len(records)))
        rng.shuffle(order)
        model.train()
        for start in range(0, len(order), config.batch_size):
            batch = [records[i] for i in order[start:start + config.batch_size]]
            encoded = encode_batch(tokenizer, batch, config.max_seq_len)
            labels = torch.tensor([r.label for r in batch], device=device)
            output = model(**encoded.to(device), labels=labels)
            output.loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            result.step_losses.append(output.loss.detach().item())
        probs = predict_probs(model, tokenizer, dev_records, config.max_seq_len)
        accuracy = group_argmax_accuracy(dev_records, probs[:, 1].tolist())
        result.epoch_dev_accuracy.append(accuracy)
        if accuracy > best_accuracy:
            best_accuracy = accuracy
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
            result.best_epoch = epoch

    model.load_state_dict(best_state)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    (out / CONFIG_FILE).write_text(json.dumps(asdict(config), indent=2) + "\n",
                                   encoding="utf-8")
    (out / SUMMARY_FILE).write_text(json.dumps({
        "best_epoch": result.best_epoch,
        "epoch_dev_accuracy": result.epoch_dev_accuracy,
        "first_step_loss": result.step_losses[0],
        "last_step_loss": result.step_losses[-1],
        "steps": len(result.step_losses),
    }, indent=2) + "\n", encoding="utf-8")
    return result
