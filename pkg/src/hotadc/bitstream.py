"""Single-bit modulator output and its on-disk formats.

Text format (``.txt``/``.bits``)::

    # hotadc-bitstream v1
    # f_s = 150000.0
    # v_ref = 1.8
    # length = 524288
    # format = pm1            (or 01)
    # <any further "# key = value" metadata lines>
    1
    -1
    ...

one sample per line, ``-1``/``1`` for ``pm1`` or ``0``/``1`` for ``01``.

Binary format (``.bsb``), little endian::

    offset 0   8s   magic b"HADCBS01"
    offset 8   f8   f_s
    offset 16  f8   v_ref
    offset 24  u8   length (samples)
    offset 32  u1   format tag, 1 = packed bits (MSB first, 1 -> +1, 0 -> -1)
    offset 33  ...  ceil(length / 8) bytes of packed samples
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputError

TEXT_MAGIC = "# hotadc-bitstream v1"
BINARY_MAGIC = b"HADCBS01"
_HEADER = struct.Struct("<8sddQB")
PACKED = 1


@dataclass(frozen=True, eq=False)
class Bitstream:
    """Ordered sequence of quantizer decisions in {-1, +1}.

    ``v_ref`` converts decisions to DAC volts; ``meta`` carries provenance
    (resolved configuration, seed) through export.
    """

    bits: np.ndarray
    f_s: float
    v_ref: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1:
            raise InputError("bitstream must be one-dimensional")
        if bits.size and not np.all((bits == 1) | (bits == -1)):
            raise InputError("bitstream values must be -1 or +1")
        if not self.f_s > 0:
            raise ConfigurationError("bitstream sample rate must be positive")
        object.__setattr__(self, "bits", bits.astype(np.int8, copy=False))

    def __len__(self) -> int:
        return self.bits.size

    def __eq__(self, other):
        if not isinstance(other, Bitstream):
            return NotImplemented
        return (self.f_s == other.f_s and self.v_ref == other.v_ref
                and np.array_equal(self.bits, other.bits))

    @property
    def length(self) -> int:
        return self.bits.size

    def volts(self) -> np.ndarray:
        return self.bits.astype(float) * self.v_ref


def save(bs: Bitstream, path, fmt: str = "text", levels: str = "pm1") -> Path:
    path = Path(path)
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(BINARY_MAGIC, bs.f_s, bs.v_ref, bs.length, PACKED))
            fh.write(np.packbits(bs.bits > 0).tobytes())
        return path
    if fmt != "text":
        raise ConfigurationError(f"unknown bitstream format {fmt!r}")
    if levels not in ("pm1", "01"):
        raise ConfigurationError(f"unknown level encoding {levels!r}")
    values = bs.bits if levels == "pm1" else (bs.bits > 0).astype(np.int8)
    header = [TEXT_MAGIC, f"# f_s = {bs.f_s!r}", f"# v_ref = {bs.v_ref!r}",
              f"# length = {bs.length}", f"# format = {levels}"]
    for key in sorted(bs.meta):
        header.append(f"# {key} = {json.dumps(bs.meta[key], sort_keys=True)}")
    with open(path, "w") as fh:
        fh.write("\n".join(header) + "\n")
        fh.write("\n".join(map(str, values.tolist())))
        fh.write("\n")
    return path


def load(path) -> Bitstream:
    """Read a bitstream written by :func:`save` (either format)."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(BINARY_MAGIC))
    if head == BINARY_MAGIC:
        return _load_binary(path)
    return _load_text(path)


def _load_binary(path: Path) -> Bitstream:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise InputError(f"{path}: truncated binary header")
    _, f_s, v_ref, length, tag = _HEADER.unpack_from(raw)
    if tag != PACKED:
        raise InputError(f"{path}: unsupported binary format tag {tag}")
    payload = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size)
    if payload.size * 8 < length:
        raise InputError(f"{path}: payload shorter than declared length {length}")
    ones = np.unpackbits(payload, count=length).astype(np.int8)
    return Bitstream(2 * ones - 1, f_s, v_ref)


def parse_header(lines) -> dict:
    """Collect ``# key = value`` pairs from comment lines."""
    meta = {}
    for line in lines:
        body = line.lstrip("#").strip()
        if "=" not in body:
            continue
        key, _, value = body.partition("=")
        meta[key.strip()] = value.strip()
    return meta


def _load_text(path: Path) -> Bitstream:
    header, values = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                header.append(line)
                continue
            try:
                values.append(int(line))
            except ValueError:
                raise InputError(f"{path}:{lineno}: malformed sample {line!r}") from None
    meta = parse_header(header)
    levels = meta.pop("format", "pm1")
    if "f_s" not in meta:
        raise ConfigurationError(f"{path}: missing f_s in header")
    f_s = float(meta.pop("f_s"))
    v_ref = float(meta.pop("v_ref", 1.0))
    length = int(meta.pop("length", len(values)))
    if length != len(values):
        raise InputError(f"{path}: header length {length} != {len(values)} samples")
    arr = np.asarray(values, dtype=np.int8)
    if levels == "01":
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise InputError(f"{path}: 01-encoded file contains other values")
        arr = 2 * arr - 1
    extra = {}
    for key, value in meta.items():
        try:
            extra[key] = json.loads(value)
        except json.JSONDecodeError:
            extra[key] = value
    return Bitstream(arr, f_s, v_ref, extra)
