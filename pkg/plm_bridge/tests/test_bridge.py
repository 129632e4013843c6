"""Bridge behavior: fine-tune, emit, round-trip through the harness."""

import json
import random
import subprocess
import sys

import pytest

from plm_bridge.data import label_space, macro_f1, read_jsonl, task_label
from plm_bridge.train import FinetuneSpec, emit_predictions, finetune


def render_sample(rng, style):
    """Two byte-level styles a small encoder separates quickly."""
    name = rng.choice(["total", "result", "value", "counter"])
    const = rng.randint(1, 99)
    if style == "llm":
        return (
            f"def compute_{name}(values):\n"
            f"    {name} = {const}\n"
            "\n"
            "    for value in values:\n"
            f"        {name} += value\n"
            "\n"
            f"    return {name}\n"
        )
    short = rng.choice("abcdqrs")
    return f"def f({short}):\n s={const}\n for i in {short}:s+=i\n return s\n"


def write_fixture(path, n=200, seed=11, task="binary"):
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8") as handle:
        for i in range(n):
            # parity alternates across blocks too, so every split sees both
            style = "llm" if (i + i // 10) % 2 else "human"
            split = ("train", "val", "test")[0 if i % 10 < 8 else
                                             (1 if i % 10 == 8 else 2)]
            record = {
                "id": f"fx{i:04d}",
                "code": render_sample(rng, style),
                "language": "python",
                "source": "github",
                "label": style,
                "split": split,
            }
            if style == "llm":
                record["generator"] = ("gpt4o", "codellama")[i % 2 == 0]
            if task == "ternary" and style == "llm" and i % 4 == 1:
                record["label"] = "hybrid"
            handle.write(json.dumps(record) + "\n")
    return path


def small_spec(**kw):
    base = dict(encoder="tiny", epochs=1, batch_size=8, max_len=192, seed=3)
    base.update(kw)
    return FinetuneSpec(**base)


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    return write_fixture(tmp_path_factory.mktemp("data") / "corpus.jsonl")


@pytest.fixture(scope="module")
def checkpoint(tmp_path_factory, corpus):
    out = tmp_path_factory.mktemp("ckpt") / "run"
    log = finetune(small_spec(), corpus, corpus, out)
    return out, log


def test_one_epoch_tiny_encoder_learns(checkpoint):
    _, log = checkpoint
    assert len(log["epochs"]) == 1
    assert log["best_val_macro_f1"] > 0.5


def test_best_epoch_deterministic(tmp_path, corpus):
    a = finetune(small_spec(epochs=2, seed=9), corpus, corpus, tmp_path / "a")
    b = finetune(small_spec(epochs=2, seed=9), corpus, corpus, tmp_path / "b")
    assert a["best_epoch"] == b["best_epoch"]
    assert a["epochs"] == b["epochs"]


def test_predictions_shape_and_score_simplex(tmp_path, corpus, checkpoint):
    ckpt, _ = checkpoint
    ten = tmp_path / "ten.jsonl"
    rows = [json.loads(l) for l in open(corpus, encoding="utf-8")]
    test_rows = [r for r in rows if r["split"] == "test"][:10]
    ten.write_text("\n".join(json.dumps(r) for r in test_rows))
    out = tmp_path / "preds.jsonl"
    summary = emit_predictions(ckpt, ten, out)
    assert summary["n"] == 10
    lines = [json.loads(l) for l in open(out, encoding="utf-8")]
    assert len(lines) == 10
    assert [l["id"] for l in lines] == [r["id"] for r in test_rows]
    for line in lines:
        values = list(line["scores"].values())
        assert all(v >= 0 for v in values)
        assert abs(sum(values) - 1.0) <= 1e-6


def test_duplicate_id_rejected(tmp_path, corpus, checkpoint):
    ckpt, _ = checkpoint
    rows = [json.loads(l) for l in open(corpus, encoding="utf-8")]
    dup = [r for r in rows if r["split"] == "test"][:2]
    dup[1]["id"] = dup[0]["id"]
    bad = tmp_path / "dup.jsonl"
    bad.write_text("\n".join(json.dumps(r) for r in dup))
    with pytest.raises(ValueError, match=dup[0]["id"]):
        emit_predictions(ckpt, bad, tmp_path / "out.jsonl")


def test_round_trip_matches_harness(tmp_path, corpus, checkpoint):
    # the detector toolkit's CLI scores the emitted file; its macro-F1 must
    # equal the bridge's own within 1e-9 over all 200 fixture rows
    ckpt, _ = checkpoint
    out = tmp_path / "preds.jsonl"
    summary = emit_predictions(ckpt, corpus, out, split=None)
    assert summary["n"] == 200
    result = subprocess.run(
        [sys.executable, "-m", "codetect.cli", "evaluate",
         "--predictions", str(out)],
        capture_output=True, text=True,
    )
    assert result.returncode == 0, result.stderr
    report = json.loads(result.stdout)
    assert abs(report["overall"]["F"] - summary["macro_f1"]) <= 1e-9


def test_ternary_checkpoint_three_class_scores(tmp_path):
    corpus = write_fixture(tmp_path / "tern.jsonl", n=200, seed=5,
                           task="ternary")
    ckpt = tmp_path / "ckpt"
    log = finetune(small_spec(task="ternary"), corpus, corpus, ckpt)
    assert set(log["label_space"]) == {"human", "llm", "hybrid"}
    out = tmp_path / "preds.jsonl"
    emit_predictions(ckpt, corpus, out)
    line = json.loads(open(out, encoding="utf-8").readline())
    assert set(line["scores"]) == {"human", "llm", "hybrid"}


def test_macro_f1_helper_matches_known_case():
    golds = ["human", "human", "llm", "llm"]
    preds = ["human", "llm", "llm", "llm"]
    assert macro_f1(preds, golds, ["human", "llm"]) == pytest.approx(11 / 15)


def test_read_jsonl_validates(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps({"code": "x", "label": "human"}) + "\n")
    with pytest.raises(ValueError, match="language"):
        read_jsonl(path)


def test_label_space_and_task_mapping():
    assert label_space(["llm", "human", "hybrid"]) == ["human", "llm", "hybrid"]
    from plm_bridge.data import Record

    hybrid = Record(id="1", code="x", language="python", label="hybrid",
                    generator="gpt4o")
    assert task_label(hybrid, "binary") == "llm"
    assert task_label(hybrid, "attribution") == "gpt4o"


def test_finetune_spec_defaults():
    spec = FinetuneSpec()
    assert spec.epochs == 5
    assert spec.learning_rate == 3e-4
    assert spec.weight_decay == 1e-3
    assert spec.batch_size == 256
