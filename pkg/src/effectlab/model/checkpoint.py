"""Single-file checkpoints: text manifest plus raw float32 payload.

The manifest is line-oriented ``key=value`` text. ``format_version`` comes
first and is mandatory on load. Tensor entries record name, shape, and
byte offset into the payload, which follows the ``end_header`` line as
little-endian float32 in C order. Save then load returns bitwise-equal
float32 tensors.
"""
from __future__ import annotations

import numpy as np

from ..errors import ContractError
from .config import ModelConfig

CHECKPOINT_FORMAT_VERSION = 1

_CONFIG_FIELDS = ("d_model", "n_layers", "n_heads", "ffn_dim", "max_features")


def save_checkpoint(path, params: dict[str, np.ndarray], config: ModelConfig,
                    extras: dict[str, float] | None = None) -> None:
    """Write params and config; ``extras`` holds scalar training state."""
    lines = [f"format_version={CHECKPOINT_FORMAT_VERSION}"]
    for f in _CONFIG_FIELDS:
        lines.append(f"config.{f}={getattr(config, f)}")
    for k, v in (extras or {}).items():
        if "=" in k or "\n" in k:
            raise ContractError(f"invalid extras key {k!r}")
        lines.append(f"extra.{k}={v!r}")
    payload = bytearray()
    for name in sorted(params):
        t = np.ascontiguousarray(params[name], dtype="<f4")
        shape = ",".join(str(s) for s in t.shape) or ""
        lines.append(f"tensor={name}:{shape}:{len(payload)}")
        payload.extend(t.tobytes(order="C"))
    lines.append("end_header")
    with open(path, "wb") as fh:
        fh.write("\n".join(lines).encode("utf-8"))
        fh.write(b"\n")
        fh.write(bytes(payload))


def load_checkpoint(path):
    """Returns ``(params, config, extras)``; params are float32."""
    with open(path, "rb") as fh:
        raw = fh.read()
    head, sep, payload = raw.partition(b"\nend_header\n")
    if not sep:
        raise ContractError("checkpoint has no end_header line")
    lines = head.decode("utf-8").split("\n")
    if not lines or not lines[0].startswith("format_version="):
        raise ContractError("checkpoint must start with format_version")
    version = int(lines[0].split("=", 1)[1])
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ContractError(f"unsupported checkpoint format version {version}")
    config_kv: dict[str, int] = {}
    extras: dict[str, float] = {}
    params: dict[str, np.ndarray] = {}
    for line in lines[1:]:
        if not line:
            continue
        key, _, value = line.partition("=")
        if key.startswith("config."):
            config_kv[key[len("config."):]] = int(value)
        elif key.startswith("extra."):
            extras[key[len("extra."):]] = _parse_scalar(value)
        elif key == "tensor":
            name, shape_s, offset_s = value.rsplit(":", 2)
            shape = tuple(int(s) for s in shape_s.split(",") if s)
            count = int(np.prod(shape)) if shape else 1
            offset = int(offset_s)
            if offset + 4 * count > len(payload):
                raise ContractError(
                    f"checkpoint payload truncated: tensor {name!r} needs "
                    f"{offset + 4 * count} bytes, payload has {len(payload)}"
                )
            arr = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
            params[name] = arr.reshape(shape).copy()
        else:
            raise ContractError(f"unknown manifest line {line!r}")
    missing = [f for f in _CONFIG_FIELDS if f not in config_kv]
    if missing:
        raise ContractError(f"checkpoint manifest missing config fields {missing}")
    config = ModelConfig(**config_kv)
    return params, config, extras


def _parse_scalar(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)
