"""Sequence classifiers over code text.

Two encoder families behind one constructor: the self-contained "tiny"
byte-level transformer (no downloads, deterministic, desk-scale), and any
Hugging Face encoder id via transformers when a model cache or network is
available.
"""

from __future__ import annotations

import torch
from torch import nn

PAD, CLS = 256, 257
TINY_VOCAB = 258


class TinyByteEncoder(nn.Module):
    """Byte-level transformer classifier; small enough for CPU epochs."""

    def __init__(self, n_classes: int, max_len: int = 512, d_model: int = 48,
                 heads: int = 4, layers: int = 2):
        super().__init__()
        self.max_len = max_len
        self.embedding = nn.Embedding(TINY_VOCAB, d_model, padding_idx=PAD)
        self.positions = nn.Embedding(max_len, d_model)
        block = nn.TransformerEncoderLayer(
            d_model=d_model, nhead=heads, dim_feedforward=4 * d_model,
            batch_first=True, dropout=0.1,
        )
        self.encoder = nn.TransformerEncoder(block, num_layers=layers)
        self.head = nn.Linear(d_model, n_classes)

    def tokenize(self, texts: list[str]) -> tuple[torch.Tensor, torch.Tensor]:
        rows = []
        for text in texts:
            ids = [CLS] + list(text.encode("utf-8")[: self.max_len - 1])
            rows.append(ids)
        width = max(len(r) for r in rows)
        batch = torch.full((len(rows), width), PAD, dtype=torch.long)
        for i, ids in enumerate(rows):
            batch[i, :len(ids)] = torch.tensor(ids, dtype=torch.long)
        return batch, batch.eq(PAD)

    def forward(self, ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.shape[1], device=ids.device)
        hidden = self.embedding(ids) + self.positions(positions)[None, :, :]
        hidden = self.encoder(hidden, src_key_padding_mask=pad_mask)
        keep = (~pad_mask).float().unsqueeze(-1)
        pooled = (hidden * keep).sum(dim=1) / keep.sum(dim=1).clamp(min=1.0)
        return self.head(pooled)


class HfEncoder(nn.Module):
    """Wrapper over a Hugging Face sequence-classification checkpoint."""

    def __init__(self, encoder_id: str, n_classes: int, max_len: int = 512):
        super().__init__()
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self.tokenizer = AutoTokenizer.from_pretrained(encoder_id)
        self.model = AutoModelForSequenceClassification.from_pretrained(
            encoder_id, num_labels=n_classes
        )
        self.max_len = max_len

    def tokenize(self, texts: list[str]):
        packed = self.tokenizer(texts, truncation=True, max_length=self.max_len,
                                padding=True, return_tensors="pt")
        return packed["input_ids"], packed["attention_mask"].eq(0)

    def forward(self, ids, pad_mask):
        return self.model(input_ids=ids, attention_mask=(~pad_mask).long()).logits


def build_model(encoder_id: str, n_classes: int, max_len: int) -> nn.Module:
    if encoder_id == "tiny":
        return TinyByteEncoder(n_classes, max_len=max_len)
    return HfEncoder(encoder_id, n_classes, max_len=max_len)
