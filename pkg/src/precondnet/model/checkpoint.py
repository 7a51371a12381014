"""
Model checkpoints in the PMC1 text format.

Layout (UTF-8, LF line endings)::

    PMC1
    k=1,2,2,2,2,1 c=2,8,16,32,16,8,1
    tensor <name> <ndim> <d1> ... <dk>
    <value>                                   # prod(d) lines, row-major
    ...

Kernels come first (conv_0 .. conv_5), then the PReLU slopes as 1-element
tensors (prelu_0 .. prelu_4).
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..core.config import FLOAT_FORMAT
from ..core.exceptions import CheckpointError
from .network import CnnParams, architecture_string, parameter_shapes

logger = logging.getLogger(__name__)

MAGIC = "PMC1"


def save_checkpoint(params: CnnParams, path: Path) -> None:
    """Write parameters to a PMC1 file."""
    lines = [MAGIC, architecture_string()]
    for name, tensor in params.items():
        dims = " ".join(str(d) for d in tensor.shape)
        lines.append(f"tensor {name} {tensor.ndim} {dims}")
        lines.extend(FLOAT_FORMAT % v for v in tensor.ravel())
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    logger.debug(f"Wrote checkpoint {path}")


def _error(message: str, line_no: int) -> CheckpointError:
    return CheckpointError(f"line {line_no}: {message}")


def load_checkpoint(path: Path) -> CnnParams:
    """
    Read a PMC1 file.

    Raises:
        FileNotFoundError: If the file does not exist
        CheckpointError: On malformed content or an architecture mismatch
    """
    if not Path(path).exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()

    if not lines or lines[0].strip() != MAGIC:
        raise _error(f"expected '{MAGIC}' header", 1)
    if len(lines) < 2 or lines[1].strip() != architecture_string():
        found = lines[1].strip() if len(lines) > 1 else "<missing>"
        raise _error(
            f"architecture mismatch: expected '{architecture_string()}', got '{found}'", 2
        )

    expected = parameter_shapes()
    tensors: dict[str, np.ndarray] = {}
    pos = 2
    while pos < len(lines):
        line = lines[pos]
        pos += 1
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) < 3 or parts[0] != "tensor":
            raise _error(f"expected 'tensor <name> <ndim> <dims...>', got {line!r}", pos)
        name = parts[1]
        if name not in expected:
            raise _error(f"unknown tensor {name!r}", pos)
        if name in tensors:
            raise _error(f"duplicate tensor {name!r}", pos)
        try:
            ndim = int(parts[2])
            shape = tuple(int(d) for d in parts[3:])
        except ValueError:
            raise _error(f"invalid tensor header {line!r}", pos) from None
        if len(shape) != ndim or shape != expected[name]:
            raise _error(f"{name} must have shape {expected[name]}, got {shape}", pos)

        size = int(np.prod(shape))
        chunk = lines[pos : pos + size]
        if len(chunk) != size:
            raise _error(f"unexpected end of file inside tensor {name}", len(lines) + 1)
        try:
            values = np.array([float(v) for v in chunk], dtype=np.float64)
        except ValueError:
            raise _error(f"invalid value in tensor {name}", pos + 1) from None
        tensors[name] = values.reshape(shape)
        pos += size

    missing = [name for name in expected if name not in tensors]
    if missing:
        raise _error(f"missing tensors: {', '.join(missing)}", len(lines))
    logger.info(f"Loaded checkpoint {path}")
    return CnnParams(tensors)
