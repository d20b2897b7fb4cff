"""Lossless compression driven by the switcher's coding probabilities.

Container layout (all fields big-endian)::

    magic        4s   b"CTSW"
    version      B    1
    alphabet     H
    depth        B
    pad_symbol   H
    alpha        d    IEEE-754 double
    g_default    d
    beta_default d
    length       Q    number of symbols
    payload      ...  range-coded bytes, then a 4-byte CRC-32 of the symbols
                      (each symbol as a big-endian uint16); empty when length is 0

The range coder keeps a 64-bit ``low`` and ``range``, shifts out whole bytes
while ``range < 2**56`` and propagates carries back into the bytes already
written.  The final flush emits the shortest byte string that still decodes
inside the last interval; the decoder reads zeros past the end, checks the
payload length it expects against the bytes it was given and requires the
final bytes to be exactly that flush.  A minimally flushed range code is
nearly complete, so a shortened payload is often the valid code of some other
sequence; the trailing CRC is what makes truncation and corruption reliably
detectable.
"""

from __future__ import annotations

import math
import struct
import zlib
from bisect import bisect_right
from dataclasses import dataclass
from itertools import accumulate
from typing import Sequence

from .ctm import DirichletPrior, NodeHyperPrior
from .switcher import ConfigError, SwitchConfig, make_switcher

MAGIC = b"CTSW"
VERSION = 1
TOTAL = 1 << 30
HEADER = struct.Struct(">4sBHBHdddQ")
CRC = struct.Struct(">I")

_MASK = (1 << 64) - 1
_TOP = 1 << 56


class DecodeError(ValueError):
    pass


def quantize(p: Sequence[float], total: int = TOTAL) -> list[int]:
    """Integer frequencies summing to ``total``, each at least 1.

    Largest-remainder rounding; ties go to the lower symbol index.
    """
    p = [float(x) for x in p]
    if any(not x > 0.0 for x in p):
        raise ValueError("probabilities must be strictly positive")
    if abs(math.fsum(p) - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {math.fsum(p)!r}, not 1")
    raw = [x * total for x in p]
    floors = [math.floor(r) for r in raw]
    rem = [r - f for r, f in zip(raw, floors)]
    freq = [max(1, f) for f in floors]
    diff = total - sum(freq)
    n = len(freq)
    if diff > 0:
        order = sorted(range(n), key=lambda i: (-rem[i], i))
        for k in range(diff):
            freq[order[k % n]] += 1
    while diff < 0:
        order = sorted((i for i in range(n) if freq[i] > 1), key=lambda i: (rem[i], -freq[i], i))
        for i in order:
            if diff == 0:
                break
            freq[i] -= 1
            diff += 1
    return freq


def _flush_value(low: int, rng: int) -> tuple[int, int]:
    """Shortest prefix (value, byte count) inside [low, low + rng)."""
    hi = low + rng - 1
    for nbytes in range(9):
        step = 1 << (64 - 8 * nbytes)
        v = -(-low // step) * step
        if v <= hi:
            return v, nbytes
    raise AssertionError("unreachable")


class RangeEncoder:
    def __init__(self) -> None:
        self.low = 0
        self.range = _MASK
        self.out = bytearray()

    def encode(self, cum: int, freq: int, total: int) -> None:
        r = self.range // total
        self.low += r * cum
        self.range = r * freq
        if self.low > _MASK:
            self.low &= _MASK
            self._carry()
        while self.range < _TOP:
            self.out.append(self.low >> 56)
            self.low = (self.low << 8) & _MASK
            self.range <<= 8

    def _carry(self) -> None:
        i = len(self.out) - 1
        while self.out[i] == 0xFF:
            self.out[i] = 0
            i -= 1
        if i < 0:
            raise AssertionError("carry escaped the code word")
        self.out[i] += 1

    def finish(self) -> bytes:
        v, nbytes = _flush_value(self.low, self.range)
        if v > _MASK:
            v &= _MASK
            self._carry()
        for k in range(nbytes):
            self.out.append((v >> (56 - 8 * k)) & 0xFF)
        return bytes(self.out)


class RangeDecoder:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0
        self.low = 0
        self.range = _MASK
        self.shifts = 0
        self.code = 0
        for _ in range(8):
            self.code = (self.code << 8) | self._byte()

    def _byte(self) -> int:
        pos = self.pos
        self.pos += 1
        if pos < len(self.data):
            return self.data[pos]
        if pos >= len(self.data) + 8:
            raise DecodeError("payload truncated")
        return 0

    def decode(self, cum: Sequence[int], freq: Sequence[int], total: int) -> int:
        r = self.range // total
        target = ((self.code - self.low) & _MASK) // r
        if target >= total:
            raise DecodeError("corrupt payload")
        sym = bisect_right(cum, target) - 1
        self.low = (self.low + r * cum[sym]) & _MASK
        self.range = r * freq[sym]
        while self.range < _TOP:
            self.low = (self.low << 8) & _MASK
            self.code = ((self.code << 8) & _MASK) | self._byte()
            self.range <<= 8
            self.shifts += 1
        return sym

    def expected_length(self) -> int:
        return self.shifts + _flush_value(self.low, self.range)[1]

    def canonical_tail(self) -> bool:
        """True when the unread bytes are exactly the encoder's final flush."""
        v, _ = _flush_value(self.low, self.range)
        return self.code == v & _MASK


def _codec_config(config: SwitchConfig) -> None:
    if not config.exact:
        raise ConfigError("the codec does not support pruning")
    if isinstance(config.g, NodeHyperPrior) and config.g.overrides:
        raise ConfigError("the container only stores a default g")
    if isinstance(config.beta, DirichletPrior) and config.beta.overrides:
        raise ConfigError("the container only stores a default beta")
    if config.alphabet_size > 0xFFFF or config.depth > 0xFF:
        raise ConfigError("alphabet or depth too large for the container header")


def pack_header(config: SwitchConfig, n: int) -> bytes:
    _codec_config(config)
    return HEADER.pack(
        MAGIC,
        VERSION,
        config.alphabet_size,
        config.depth,
        config.pad_symbol,
        float(config.alpha),
        float(config.hyper_g.default),
        float(config.dirichlet.default),
        n,
    )


def unpack_header(data: bytes) -> tuple[SwitchConfig, int]:
    if len(data) < HEADER.size:
        raise DecodeError(f"truncated header: {len(data)} bytes, need {HEADER.size}")
    magic, version, A, d, pad, alpha, g, beta, n = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DecodeError(f"bad magic {magic!r}")
    if version != VERSION:
        raise DecodeError(f"unsupported container version {version}")
    if not all(math.isfinite(x) for x in (alpha, g, beta)):
        raise DecodeError("non-finite hyper-parameter in header")
    try:
        config = SwitchConfig(A, d, alpha, g, beta, pad)
    except ConfigError as exc:
        raise DecodeError(f"invalid header: {exc}") from None
    return config, n


@dataclass
class EncodeReport:
    data: bytes
    ideal_bits: float

    @property
    def payload_bits(self) -> int:
        return 8 * (len(self.data) - HEADER.size)


def symbols_crc(xs: Sequence[int]) -> int:
    return zlib.crc32(b"".join(x.to_bytes(2, "big") for x in map(int, xs)))


def _cumulative(freq: list[int]) -> list[int]:
    return [0, *accumulate(freq)][:-1]


def encode_report(xs: Sequence[int], config: SwitchConfig, engine: str = "auto") -> EncodeReport:
    header = pack_header(config, len(xs))
    sw = make_switcher(config, engine)
    enc = RangeEncoder()
    logs = []
    for x in xs:
        x = int(x)
        if not 0 <= x < config.alphabet_size:
            raise ValueError(f"symbol {x} outside alphabet of size {config.alphabet_size}")
        freq = quantize(sw.predict())
        enc.encode(_cumulative(freq)[x], freq[x], TOTAL)
        logs.append(-math.log2(sw.advance(x)))
    payload = enc.finish() + CRC.pack(symbols_crc(xs)) if len(xs) else b""
    return EncodeReport(header + payload, math.fsum(logs))


def encode(xs: Sequence[int], config: SwitchConfig, engine: str = "auto") -> bytes:
    return encode_report(xs, config, engine).data


def decode(data: bytes, engine: str = "auto") -> list[int]:
    config, n = unpack_header(data)
    payload = data[HEADER.size :]
    if n == 0:
        if payload:
            raise DecodeError(f"trailing data: {len(payload)} bytes after an empty stream")
        return []
    if len(payload) < CRC.size:
        raise DecodeError("payload truncated: missing checksum")
    payload, (crc,) = payload[: -CRC.size], CRC.unpack(payload[-CRC.size :])
    sw = make_switcher(config, engine)
    dec = RangeDecoder(payload)
    out = []
    for _ in range(n):
        freq = quantize(sw.predict())
        x = dec.decode(_cumulative(freq), freq, TOTAL)
        sw.advance(x)
        out.append(x)
    expected = dec.expected_length()
    if len(payload) < expected:
        raise DecodeError(f"payload truncated: {len(payload)} bytes, expected {expected}")
    if len(payload) > expected:
        raise DecodeError(f"trailing data: {len(payload)} bytes, expected {expected}")
    if not dec.canonical_tail():
        raise DecodeError("payload does not end with the expected flush bytes (truncated or corrupt)")
    if symbols_crc(out) != crc:
        raise DecodeError("checksum mismatch: payload truncated or corrupt")
    return out
