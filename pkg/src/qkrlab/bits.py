"""Bit strings as 1-D ``uint8`` numpy arrays holding 0/1 values."""

from __future__ import annotations

import numpy as np


def as_bits(bits) -> np.ndarray:
    """Coerce a sequence of 0/1 values to a bit array, validating the alphabet."""
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit strings may only contain 0 and 1")
    return arr


def xor(a, b) -> np.ndarray:
    a, b = as_bits(a), as_bits(b)
    if a.size != b.size:
        raise ValueError(f"XOR of unequal lengths {a.size} and {b.size}")
    return a ^ b


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Big-endian fixed-width encoding of a non-negative integer."""
    if value < 0 or (width < value.bit_length()):
        raise ValueError(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    out = 0
    for b in as_bits(bits):
        out = (out << 1) | int(b)
    return out


def hamming_weight(bits) -> int:
    return int(as_bits(bits).sum())


def to_str(bits) -> str:
    return "".join("1" if b else "0" for b in as_bits(bits))


def from_str(text: str) -> np.ndarray:
    return as_bits([1 if c == "1" else 0 for c in text if c in "01"])
