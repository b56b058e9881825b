"""Versioned single-file model checkpoints.

The container is JSON with a fixed field order:

    {"format_version": 1,
     "checksum": "sha256:<hex of the canonical payload serialization>",
     "payload": {"config": {...}, "url_vocab": {...}, "html_vocab": {...},
                 "tensors": [{"name", "dtype", "shape", "data"}, ...]}}

Tensor data is written as decimal numbers with full round-trip precision
(every float32/float64 value survives save/load bit-for-bit). The checksum
covers the canonical (sorted-key, no-whitespace) serialization of the
payload, so truncation or tampering is detected before any tensor is
rebuilt.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import ModelConfig, ModelParams
from .tokenizer import CharVocabulary

FORMAT_VERSION = 1


class CheckpointError(DataError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class IntegrityError(CheckpointError):
    pass


def _vocab_to_dict(vocab: CharVocabulary) -> dict:
    return {"size": vocab.size, "chars": vocab.index_of}


def _vocab_from_dict(data: dict) -> CharVocabulary:
    vocab = CharVocabulary(index_of=dict(data["chars"]))
    if vocab.size != data["size"]:
        raise IntegrityError("vocabulary size field disagrees with its character map")
    return vocab


def _payload_checksum(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_checkpoint(
    params: ModelParams,
    config: ModelConfig,
    url_vocab: CharVocabulary | None,
    html_vocab: CharVocabulary | None,
    path: str | Path,
) -> None:
    tensors = []
    for name, arr in params.tensors.items():
        tensors.append({
            "name": name,
            "dtype": str(arr.dtype),
            "shape": list(arr.shape),
            "data": [float(x) for x in arr.reshape(-1)],
        })
    payload = {
        "config": asdict(config) | {"fc_units": list(config.fc_units)},
        "url_vocab": _vocab_to_dict(url_vocab) if url_vocab is not None else None,
        "html_vocab": _vocab_to_dict(html_vocab) if html_vocab is not None else None,
        "tensors": tensors,
    }
    document = {
        "format_version": FORMAT_VERSION,
        "checksum": _payload_checksum(payload),
        "payload": payload,
    }
    Path(path).write_text(json.dumps(document, ensure_ascii=True), encoding="utf-8")


def load_checkpoint(
    path: str | Path,
) -> tuple[ModelParams, ModelConfig, CharVocabulary | None, CharVocabulary | None]:
    """Load and verify a checkpoint; inverse of save_checkpoint on success."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise IntegrityError(f"checkpoint is not readable JSON ({exc})") from None
    if not isinstance(document, dict) or "format_version" not in document:
        raise IntegrityError("checkpoint lacks a format_version field")
    if document["format_version"] != FORMAT_VERSION:
        raise VersionMismatchError(
            f"checkpoint format {document['format_version']!r}, expected {FORMAT_VERSION}"
        )
    payload = document.get("payload")
    if payload is None or "checksum" not in document:
        raise IntegrityError("checkpoint is missing its payload or checksum")
    if _payload_checksum(payload) != document["checksum"]:
        raise IntegrityError("checkpoint checksum mismatch")

    cfg_dict = dict(payload["config"])
    cfg_dict["fc_units"] = tuple(cfg_dict["fc_units"])
    config = ModelConfig(**cfg_dict)
    tensors: dict[str, np.ndarray] = {}
    for entry in payload["tensors"]:
        arr = np.array(entry["data"], dtype=np.dtype(entry["dtype"])).reshape(entry["shape"])
        tensors[entry["name"]] = arr
    params = ModelParams(tensors, use_embedding=config.use_embedding)
    url_vocab = _vocab_from_dict(payload["url_vocab"]) if payload["url_vocab"] else None
    html_vocab = _vocab_from_dict(payload["html_vocab"]) if payload["html_vocab"] else None
    return params, config, url_vocab, html_vocab
