"""Self-describing model checkpoints.

Layout: 4-byte magic, little-endian uint32 format version and header
length, a canonical-JSON header (config echo, vocabulary tables, tensor
names and shapes), then the tensors as row-major little-endian float32 in
header order. The canonical JSON plus float32 payload make
save -> load -> save byte-identical.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..config import Config
from ..embeddings import Vocabulary
from ..errors import CorruptCheckpoint, ShapeMismatch, VersionMismatch
from .model import ModelParams, NetConfig, tensor_shapes

MAGIC = b"SQFG"
FORMAT_VERSION = 1


def save_model(params: ModelParams, vocab: Vocabulary, config: Config,
               path: Path | str) -> Path:
    """Write a checkpoint; tensors are stored as float32."""
    names = sorted(params.tensors)
    header = {
        "config": config.to_dict(),
        "vocab": {
            "tokens": list(vocab.tokens[2:]),  # PAD/UNK re-added on load
            "chars": list(vocab.chars[2:]),
            "labels": list(vocab.labels),
        },
        "tensors": [
            {"name": n, "shape": list(params.tensors[n].shape)} for n in names
        ],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(params.tensors[n], dtype="<f4").tobytes()
        for n in names)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(payload)
    return path


def load_model(path: Path | str,
               expected_config: Config | None = None
               ) -> tuple[ModelParams, Vocabulary, Config]:
    """Read a checkpoint back into float64 tensors.

    Raises VersionMismatch for a foreign format version, CorruptCheckpoint
    for truncation or internal inconsistency, and ShapeMismatch when
    `expected_config` disagrees with the stored architecture.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CorruptCheckpoint(f"cannot read checkpoint {path}: {exc}")
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise CorruptCheckpoint(f"{path} is not a model checkpoint")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: format version {version}, expected {FORMAT_VERSION}")
    if len(raw) < 12 + header_len:
        raise CorruptCheckpoint(f"{path}: truncated header")
    try:
        header = json.loads(raw[12:12 + header_len].decode("utf-8"))
        config = Config.from_dict(header["config"])
        vocab = Vocabulary.from_parts(
            header["vocab"]["tokens"], header["vocab"]["chars"],
            header["vocab"]["labels"])
        specs = [(t["name"], tuple(t["shape"])) for t in header["tensors"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptCheckpoint(f"{path}: bad header: {exc}")

    expected_shapes = tensor_shapes(NetConfig.from_config(config, vocab))
    if dict(specs) != expected_shapes:
        raise CorruptCheckpoint(
            f"{path}: tensor shapes disagree with the stored config/vocab")

    payload = raw[12 + header_len:]
    total = sum(4 * int(np.prod(shape)) for _, shape in specs)
    if len(payload) != total:
        raise CorruptCheckpoint(
            f"{path}: payload is {len(payload)} bytes, expected {total}")
    tensors: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in specs:
        count = int(np.prod(shape))
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        tensors[name] = arr.astype(np.float64).reshape(shape)
        offset += 4 * count

    if expected_config is not None:
        for key in ("char_embedding_dimension", "char_lstm_dimension",
                    "token_embedding_dimension", "token_lstm_dimension",
                    "using_character_lstm", "using_crf", "tagging_format"):
            if getattr(config, key) != getattr(expected_config, key):
                raise ShapeMismatch(
                    f"{path}: checkpoint {key}={getattr(config, key)!r} but "
                    f"run expects {getattr(expected_config, key)!r}")
    return ModelParams(tensors), vocab, config
