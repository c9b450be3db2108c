"""
Universal hash families.

* ``mac_tag``: polynomial-evaluation hash over GF(2^t), an
  ``L/2^t``-almost-XOR-universal family keyed by a single field element.
* ``asu2_encrypt_tag``: the tag one-time-padded with ``t`` fresh bits, which
  makes the family almost strongly universal.
* ``toeplitz_extract``: two-universal Toeplitz hashing, used for privacy
  amplification when a key is recycled.
* ``upd``: key update, ``k' || k_new`` with ``k' = toeplitz(k)`` and
  ``k_new`` drawn from a key pool so the key keeps its length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .bits import as_bits, bits_to_int, int_to_bits

# Irreducible reduction polynomials, including the leading term.
REDUCTION_POLYNOMIALS = {
    4: (1 << 4) | 0b11,                      # x^4 + x + 1
    8: (1 << 8) | 0x1B,                      # x^8 + x^4 + x^3 + x + 1
    16: (1 << 16) | 0x2B,                    # x^16 + x^5 + x^3 + x + 1
    32: (1 << 32) | 0x8D,                    # x^32 + x^7 + x^3 + x^2 + 1
    64: (1 << 64) | 0x1B,                    # x^64 + x^4 + x^3 + x + 1
}


def gf_mul(a: int, b: int, t: int) -> int:
    """Product of two elements of GF(2^t) in polynomial basis."""
    poly = REDUCTION_POLYNOMIALS[t]
    top = 1 << t
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return out


@dataclass(frozen=True)
class MacParams:
    """Tag width ``t`` (also the block width) and message capacity in blocks."""

    tag_bits: int
    max_blocks: int

    def __post_init__(self):
        if self.tag_bits not in REDUCTION_POLYNOMIALS:
            raise ValueError(f"unsupported tag width {self.tag_bits}; choose from {sorted(REDUCTION_POLYNOMIALS)}")
        if self.max_blocks < 1:
            raise ValueError("max_blocks must be at least 1")

    @property
    def block_bits(self) -> int:
        return self.tag_bits

    @property
    def epsilon(self) -> float:
        return self.max_blocks / 2.0 ** self.tag_bits

    @classmethod
    def for_message(cls, tag_bits: int, message_bits: int) -> "MacParams":
        return cls(tag_bits, padded_block_count(message_bits, tag_bits))


def padded_block_count(message_bits: int, t: int) -> int:
    return math.ceil((message_bits + 1) / t) + 1


def pad_message(msg, t: int) -> list[int]:
    """Append a 1, zero-fill to a block boundary, then one block holding the
    original bit length. Returns the blocks as field elements."""
    bits = as_bits(msg)
    if bits.size >= 1 << t:
        raise ValueError(f"message of {bits.size} bits cannot be length-encoded in {t} bits")
    body = np.concatenate([bits, [1]]).astype(np.uint8)
    fill = (-body.size) % t
    body = np.concatenate([body, np.zeros(fill, dtype=np.uint8)])
    blocks = [bits_to_int(body[i:i + t]) for i in range(0, body.size, t)]
    blocks.append(bits.size)
    return blocks


def poly_hash(key: int, blocks, t: int) -> int:
    """``sum_i m_i * key^i`` for ``i = 1..L`` over GF(2^t); no constant term."""
    acc = 0
    for m in reversed(list(blocks)):
        acc = gf_mul(acc ^ int(m), key, t)
    return acc


def mac_tag(u, msg, params: MacParams | None = None) -> np.ndarray:
    """Authentication tag of ``msg`` under key ``u``; ``t = len(u)``."""
    u = as_bits(u)
    t = u.size
    if t not in REDUCTION_POLYNOMIALS:
        raise ValueError(f"MAC key must be one field element of {sorted(REDUCTION_POLYNOMIALS)} bits, got {t}")
    if params is not None and params.tag_bits != t:
        raise ValueError(f"key has {t} bits but params expect {params.tag_bits}")
    blocks = pad_message(msg, t)
    if params is not None and len(blocks) > params.max_blocks:
        raise ValueError(f"message needs {len(blocks)} blocks; capacity is {params.max_blocks}")
    return int_to_bits(poly_hash(bits_to_int(u), blocks, t), t)


def asu2_encrypt_tag(u, pad, msg, params: MacParams | None = None) -> np.ndarray:
    """``mac_tag(u, msg) XOR pad``."""
    pad = as_bits(pad)
    if pad.size != as_bits(u).size:
        raise ValueError(f"pad has {pad.size} bits, tag has {as_bits(u).size}")
    return mac_tag(u, msg, params) ^ pad


# ---------------------------------------------------------------------------
# Toeplitz two-universal hashing
# ---------------------------------------------------------------------------

def toeplitz_seed_length(in_len: int, out_len: int) -> int:
    return in_len + out_len - 1 if out_len > 0 else 0


def toeplitz_extract(seed, x, out_len: int) -> np.ndarray:
    """Multiply ``x`` by the ``out_len x len(x)`` Toeplitz matrix whose entry
    ``(j, i)`` is ``seed[j - i + len(x) - 1]``, over GF(2)."""
    x = as_bits(x)
    n = x.size
    if not (0 <= out_len <= n):
        raise ValueError(f"output length {out_len} outside [0, {n}]")
    seed = as_bits(seed)
    if seed.size != toeplitz_seed_length(n, out_len):
        raise ValueError(f"seed has {seed.size} bits; need {toeplitz_seed_length(n, out_len)}")
    if out_len == 0:
        return np.zeros(0, dtype=np.uint8)
    if n <= 512:
        full = np.convolve(seed.astype(np.int64), x.astype(np.int64))
    else:
        full = np.rint(fftconvolve(seed.astype(float), x.astype(float))).astype(np.int64)
    return (full[n - 1:n - 1 + out_len] & 1).astype(np.uint8)


def recycled_length(key_len: int, rate: float) -> int:
    if not (0.0 <= rate <= 1.0):
        raise ValueError(f"recycling rate {rate} outside [0, 1]")
    # slack absorbs representation error in rates such as (n - a) / n
    return min(key_len, int(math.floor(rate * key_len + 1e-9)))


def upd(k, rate: float, pool, seed) -> np.ndarray:
    """Refresh key ``k`` at recycling ``rate``: keep ``floor(rate*|k|)``
    extracted bits and top up from ``pool`` to the original length.

    ``seed`` must hold at least ``|k| + |k'| - 1`` bits; its prefix is used.
    ``pool`` needs ``remaining`` and ``draw(n) -> (key_id, bits)``; a pool
    that cannot cover the top-up raises its own exhaustion error before
    anything is drawn.
    """
    k = as_bits(k)
    keep = recycled_length(k.size, rate)
    fresh = k.size - keep
    if pool.remaining < fresh:
        pool.draw(fresh)  # raises the pool's exhaustion error
    seed = as_bits(seed)
    need = toeplitz_seed_length(k.size, keep)
    if seed.size < need:
        raise ValueError(f"extractor seed has {seed.size} bits; need {need}")
    kept = toeplitz_extract(seed[:need], k, keep)
    _, k_new = pool.draw(fresh)
    return np.concatenate([kept, k_new]).astype(np.uint8)
