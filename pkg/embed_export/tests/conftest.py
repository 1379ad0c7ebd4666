import json
import os
from pathlib import Path

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> Path:
    """A small randomly initialized transformer saved locally."""
    from transformers import BertConfig, BertModel, BertTokenizer

    out = tmp_path_factory.mktemp("tinybert")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += list("abcdefghijklmnopqrstuvwxyz0123456789.,';")
    vocab += ["##" + c for c in "abcdefghijklmnopqrstuvwxyz"]
    (out / "vocab.txt").write_text("\n".join(vocab), encoding="utf-8")
    tokenizer = BertTokenizer(vocab_file=str(out / "vocab.txt"))
    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=192,
    )
    import torch

    torch.manual_seed(0)
    model = BertModel(config)
    model.eval()
    tokenizer.save_pretrained(out)
    model.save_pretrained(out)
    return out


@pytest.fixture()
def bundle_dir(tmp_path) -> Path:
    bundles = tmp_path / "bundles"
    bundles.mkdir()
    docs = {
        "alpha": ["the first unit of text", "a second unit", "and one more"],
        "beta": ["short claim", "its supporting premise"],
    }
    for doc_id, texts in docs.items():
        units = []
        cursor = 0
        for i, text in enumerate(texts, start=1):
            units.append(
                {"id": f"u{i}", "text": text, "span": [cursor, cursor + len(text)],
                 "kind": "adu"}
            )
            cursor += len(text) + 1
        payload = {"id": doc_id, "language": "en", "variant": "original", "units": units}
        (bundles / f"{doc_id}.json").write_text(json.dumps(payload), encoding="utf-8")
    return bundles
