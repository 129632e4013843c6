"""Command-line front for the bridge."""

from __future__ import annotations

import json

import click

from .train import FinetuneSpec, emit_predictions, finetune


@click.group()
def main():
    """Fine-tune code encoders and emit detector-format predictions."""


@main.command("finetune")
@click.option("--train", "train_path", type=click.Path(exists=True), required=True)
@click.option("--val", "val_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--encoder", default="tiny", show_default=True)
@click.option("--task", default="binary",
              type=click.Choice(["binary", "attribution", "ternary"]))
@click.option("--epochs", type=int, default=5, show_default=True)
@click.option("--learning-rate", type=float, default=3e-4, show_default=True)
@click.option("--weight-decay", type=float, default=1e-3, show_default=True)
@click.option("--batch-size", type=int, default=256, show_default=True)
@click.option("--max-len", type=int, default=512, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_finetune(train_path, val_path, out_dir, encoder, task, epochs,
                 learning_rate, weight_decay, batch_size, max_len, seed):
    spec = FinetuneSpec(encoder=encoder, epochs=epochs,
                        learning_rate=learning_rate,
                        weight_decay=weight_decay, batch_size=batch_size,
                        task=task, max_len=max_len, seed=seed)
    log = finetune(spec, train_path, val_path, out_dir)
    click.echo(json.dumps({"best_epoch": log["best_epoch"],
                           "best_val_macro_f1": log["best_val_macro_f1"]}))


@main.command("predict")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--test", "test_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--split", default="test", show_default=True)
def cmd_predict(checkpoint, test_path, out_path, split):
    summary = emit_predictions(checkpoint, test_path, out_path, split=split)
    click.echo(json.dumps(summary))


if __name__ == "__main__":
    main()
