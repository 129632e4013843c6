"""Fine-tuning loop and prediction emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import torch
from torch import nn

from .data import Record, label_space, macro_f1, read_jsonl, task_label
from .model import build_model


@dataclass
class FinetuneSpec:
    encoder: str = "tiny"
    epochs: int = 5
    learning_rate: float = 3e-4
    weight_decay: float = 1e-3
    batch_size: int = 256
    task: str = "binary"
    max_len: int = 512
    seed: int = 0
    extra_model_args: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "encoder": self.encoder,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "batch_size": self.batch_size,
            "task": self.task,
            "max_len": self.max_len,
            "seed": self.seed,
        }


def _batches(n: int, batch_size: int, generator: torch.Generator):
    order = torch.randperm(n, generator=generator).tolist()
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


@torch.no_grad()
def _evaluate(model: nn.Module, records: list[Record], labels: list[str],
              space: list[str], batch_size: int) -> tuple[list[str], list[list[float]]]:
    model.eval()
    preds, scores = [], []
    for start in range(0, len(records), batch_size):
        chunk = records[start:start + batch_size]
        ids, pad = model.tokenize([r.code for r in chunk])
        logits = model(ids, pad)
        probs = torch.softmax(logits, dim=-1)
        for row in probs:
            idx = int(torch.argmax(row))
            preds.append(space[idx])
            scores.append([float(v) for v in row])
    return preds, scores


def finetune(spec: FinetuneSpec, train_path: str | Path, val_path: str | Path,
             out_dir: str | Path) -> dict:
    """Train, select the best epoch by validation macro-F1, write the
    checkpoint (config.json / weights.pt / log.json). Returns the log."""
    torch.manual_seed(spec.seed)
    train_records = read_jsonl(train_path, split="train")
    val_records = read_jsonl(val_path, split="val")
    train_labels = [task_label(r, spec.task) for r in train_records]
    val_labels = [task_label(r, spec.task) for r in val_records]
    space = label_space(train_labels)
    if len(space) < 2:
        raise ValueError("degenerate labels: need at least 2 classes")
    index = {label: i for i, label in enumerate(space)}
    targets = torch.tensor([index[l] for l in train_labels])

    model = build_model(spec.encoder, len(space), spec.max_len)
    optimizer = torch.optim.AdamW(model.parameters(), lr=spec.learning_rate,
                                  weight_decay=spec.weight_decay)
    steps_per_epoch = max(1, -(-len(train_records) // spec.batch_size))
    total_steps = max(1, steps_per_epoch * spec.epochs)
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: max(0.0, 1.0 - step / total_steps)
    )
    loss_fn = nn.CrossEntropyLoss()
    generator = torch.Generator().manual_seed(spec.seed)

    log: dict = {"spec": spec.to_dict(), "label_space": space,
                 "epochs": [], "notes": []}
    best_state = None
    best = (-1.0, -1)  # (val macro-F1, epoch); earlier epoch wins ties
    batch_size = spec.batch_size
    accumulation = 1

    for epoch in range(spec.epochs):
        model.train()
        epoch_loss = 0.0
        batches = 0
        for rows in _batches(len(train_records), batch_size, generator):
            codes = [train_records[i].code for i in rows]
            try:
                ids, pad = model.tokenize(codes)
                logits = model(ids, pad)
                loss = loss_fn(logits, targets[rows]) / accumulation
                loss.backward()
            except RuntimeError as exc:
                if "out of memory" in str(exc).lower() and batch_size > 1:
                    batch_size = max(1, batch_size // 2)
                    accumulation *= 2
                    log["notes"].append(
                        f"epoch {epoch}: out of memory; falling back to "
                        f"batch {batch_size} with gradient accumulation "
                        f"x{accumulation}"
                    )
                    optimizer.zero_grad(set_to_none=True)
                    continue
                raise
            batches += 1
            epoch_loss += float(loss.detach()) * accumulation
            if batches % accumulation == 0:
                optimizer.step()
                scheduler.step()
                optimizer.zero_grad(set_to_none=True)
        preds, _ = _evaluate(model, val_records, val_labels, space,
                             max(batch_size, 32))
        val_f1 = macro_f1(preds, val_labels, space)
        log["epochs"].append({
            "epoch": epoch,
            "train_loss": epoch_loss / max(batches, 1),
            "val_macro_f1": val_f1,
        })
        if val_f1 > best[0] + 1e-12:
            best = (val_f1, epoch)
            best_state = {k: v.detach().clone()
                          for k, v in model.state_dict().items()}
    log["best_epoch"] = best[1]
    log["best_val_macro_f1"] = best[0]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps({
        **spec.to_dict(), "label_space": space,
    }, indent=2), encoding="utf-8")
    torch.save(best_state if best_state is not None else model.state_dict(),
               out / "weights.pt")
    (out / "log.json").write_text(json.dumps(log, indent=2), encoding="utf-8")
    return log


def load_checkpoint(checkpoint_dir: str | Path) -> tuple[nn.Module, dict]:
    root = Path(checkpoint_dir)
    config = json.loads((root / "config.json").read_text(encoding="utf-8"))
    model = build_model(config["encoder"], len(config["label_space"]),
                        config["max_len"])
    state = torch.load(root / "weights.pt", map_location="cpu",
                       weights_only=True)
    model.load_state_dict(state)
    return model, config


def emit_predictions(checkpoint_dir: str | Path, test_path: str | Path,
                     out_path: str | Path,
                     split: Optional[str] = "test") -> dict:
    """Predict a corpus file and write the exchange-format predictions.

    Output rows keep the input order. Returns a small summary including the
    bridge's own macro-F1 for cross-checking against the harness.
    """
    model, config = load_checkpoint(checkpoint_dir)
    records = read_jsonl(test_path, split=split)
    seen: set[str] = set()
    for record in records:
        if record.id in seen:
            raise ValueError(f"duplicate input id {record.id!r}")
        seen.add(record.id)
    space = config["label_space"]
    golds = [task_label(r, config["task"]) for r in records]
    preds, scores = _evaluate(model, records, golds, space,
                              max(int(config.get("batch_size", 32)), 32))
    with open(out_path, "w", encoding="utf-8") as handle:
        for record, gold, pred, row in zip(records, golds, preds, scores):
            handle.write(json.dumps({
                "id": record.id,
                "gold": gold,
                "pred": pred,
                "scores": {label: row[i] for i, label in enumerate(space)},
            }) + "\n")
    return {
        "n": len(records),
        "macro_f1": macro_f1(preds, golds, space),
        "label_space": space,
    }
