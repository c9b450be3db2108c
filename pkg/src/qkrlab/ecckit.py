"""
Binary linear block codes with syndrome decoding.

``LinearCode`` is a small systematic code decoded by coset-leader lookup.
``BlockCode`` applies one to a message of any length, block by block, with
the blocks interleaved on the channel. ``IdealCode`` models a code that
meets the Shannon limit for a predicted error rate; its decoder is emulated
from the transmitted codeword.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import ratecore
from .bits import as_bits
from .hashkit import toeplitz_extract

__all__ = [
    "LinearCode", "BlockCode", "IdealCode", "DecodeResult",
    "hamming_7_4", "bch_15_7", "get_code", "ideal_code_params", "CODE_NAMES",
]


@dataclass(frozen=True)
class DecodeResult:
    """Decoded message, the number of corrected flips ``q`` and where they were.

    ``reliable`` is False when the decoder knows it is beyond its radius.
    A miscorrection it cannot see still comes back as reliable; the MAC is
    the final arbiter.
    """

    message: np.ndarray
    corrected_errors: int
    error_positions: tuple[int, ...]
    reliable: bool = True


def _gf2_matmul(msgs: np.ndarray, G: np.ndarray) -> np.ndarray:
    return (msgs.astype(np.int64) @ G.astype(np.int64)) & 1


class LinearCode:
    """Systematic ``[n, k, d]`` binary code with generator ``[I | P]``."""

    def __init__(self, name: str, parity: np.ndarray, min_distance: int | None = None):
        P = np.asarray(parity, dtype=np.uint8) & 1
        self.name = name
        self.k, self.r = P.shape
        self.n = self.k + self.r
        self.P = P
        self.G = np.concatenate([np.eye(self.k, dtype=np.uint8), P], axis=1)
        self.H = np.concatenate([P.T, np.eye(self.r, dtype=np.uint8)], axis=1)
        self._weights = 1 << np.arange(self.r - 1, -1, -1)
        self.d = self._min_distance() if min_distance is None else min_distance
        self.t = (self.d - 1) // 2
        self._leaders = self._coset_leaders()

    def __repr__(self):
        return f"LinearCode({self.name!r}, n={self.n}, k={self.k}, d={self.d})"

    def _min_distance(self) -> int:
        msgs = np.array(list(itertools.product((0, 1), repeat=self.k))[1:], dtype=np.uint8)
        return int(_gf2_matmul(msgs, self.G).sum(axis=1).min())

    def syndrome(self, word) -> int:
        s = (self.H.astype(np.int64) @ as_bits(word).astype(np.int64)) & 1
        return int(s @ self._weights)

    def _coset_leaders(self) -> dict[int, tuple[int, ...]]:
        leaders: dict[int, tuple[int, ...]] = {0: ()}
        cols = [int(((self.H[:, i].astype(np.int64)) @ self._weights)) for i in range(self.n)]
        total = 1 << self.r
        for w in range(1, self.n + 1):
            for pos in itertools.combinations(range(self.n), w):
                s = 0
                for p in pos:
                    s ^= cols[p]
                leaders.setdefault(s, pos)
            if len(leaders) == total:
                break
        return leaders

    @property
    def syndrome_table(self) -> dict[int, tuple[int, ...]]:
        return dict(self._leaders)

    def encode(self, msg) -> np.ndarray:
        m = as_bits(msg)
        if m.size != self.k:
            raise ValueError(f"{self.name} encodes {self.k} bits, got {m.size}")
        return _gf2_matmul(m[None, :], self.G)[0].astype(np.uint8)

    def decode(self, word) -> DecodeResult:
        w = as_bits(word).copy()
        if w.size != self.n:
            raise ValueError(f"{self.name} decodes {self.n}-bit words, got {w.size}")
        positions = self._leaders[self.syndrome(w)]
        for p in positions:
            w[p] ^= 1
        return DecodeResult(w[:self.k], len(positions), tuple(positions), len(positions) <= self.t)


def hamming_7_4() -> LinearCode:
    P = [[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]]
    return LinearCode("hamming7-4", np.array(P))


def _poly_mod(a: int, g: int) -> int:
    dg = g.bit_length() - 1
    while a and a.bit_length() - 1 >= dg:
        a ^= g << (a.bit_length() - 1 - dg)
    return a


def bch_15_7() -> LinearCode:
    # double-error-correcting narrow-sense BCH, g(x) = x^8 + x^7 + x^6 + x^4 + 1
    g = 0b111010001
    rows = []
    for i in range(7):
        rem = _poly_mod(1 << (14 - i), g)
        rows.append([(rem >> (7 - j)) & 1 for j in range(8)])
    return LinearCode("bch15-7", np.array(rows))


class BlockCode:
    """A ``LinearCode`` applied blockwise to ``message_bits`` bits.

    The message is zero-filled to whole blocks. On the channel the blocks
    are interleaved: bit ``j`` of block ``b`` goes to position
    ``j * blocks + b``, so a burst spreads over many blocks.
    """

    def __init__(self, code: LinearCode, message_bits: int):
        if message_bits < 1:
            raise ValueError("message_bits must be positive")
        self.code = code
        self.name = code.name
        self.message_bits = message_bits
        self.blocks = math.ceil(message_bits / code.k)
        self.codeword_bits = self.blocks * code.n
        self.redundancy_bits = self.codeword_bits - message_bits
        self.max_correctable = self.blocks * code.t

    def block_positions(self, block: int) -> np.ndarray:
        """Channel positions occupied by one block, in codeword order."""
        return np.arange(self.code.n) * self.blocks + block

    def encode(self, msg) -> np.ndarray:
        m = as_bits(msg)
        if m.size != self.message_bits:
            raise ValueError(f"expected {self.message_bits} message bits, got {m.size}")
        padded = np.zeros(self.blocks * self.code.k, dtype=np.uint8)
        padded[:m.size] = m
        rows = _gf2_matmul(padded.reshape(self.blocks, self.code.k), self.code.G)
        return rows.T.ravel().astype(np.uint8)

    def decode(self, word, reference=None) -> DecodeResult:
        w = as_bits(word)
        if w.size != self.codeword_bits:
            raise ValueError(f"expected {self.codeword_bits} code bits, got {w.size}")
        rows = w.reshape(self.code.n, self.blocks).T.copy()
        code = self.code
        syndromes = ((rows.astype(np.int64) @ code.H.T.astype(np.int64)) & 1) @ code._weights
        positions = []
        reliable = True
        for b, s in enumerate(syndromes):
            leader = code._leaders[int(s)]
            reliable &= len(leader) <= code.t
            for p in leader:
                rows[b, p] ^= 1
                positions.append(int(p) * self.blocks + b)
        msg = rows[:, :code.k].ravel()
        message = msg[:self.message_bits].copy()
        return DecodeResult(message, len(positions), tuple(sorted(positions)), reliable)


class IdealCode:
    """Shannon-ideal code for predicted QBER ``Qp``.

    Encoding is systematic: the message, then ``s`` redundancy bits from a
    fixed public Toeplitz map. Decoding is emulated against the transmitted
    codeword: it succeeds, reporting the exact flips, when the flip fraction
    is at most ``Qp``; otherwise it returns the uncorrected message bits.
    """

    name = "ideal"
    PUBLIC_SEED = 0x51C0DE

    def __init__(self, message_bits: int, predicted_qber: float):
        if message_bits < 1:
            raise ValueError("message_bits must be positive")
        self.message_bits = message_bits
        self.predicted_qber = float(predicted_qber)
        self.codeword_bits, self.redundancy_bits = ideal_code_params(message_bits, predicted_qber)
        self.max_correctable = int(math.floor(self.predicted_qber * self.codeword_bits + 1e-9))
        width = max(message_bits, self.redundancy_bits)
        rng = np.random.default_rng(self.PUBLIC_SEED)
        self._width = width
        self._seed = rng.integers(0, 2, size=width + self.redundancy_bits - 1, dtype=np.uint8)

    def encode(self, msg) -> np.ndarray:
        m = as_bits(msg)
        if m.size != self.message_bits:
            raise ValueError(f"expected {self.message_bits} message bits, got {m.size}")
        if self.redundancy_bits == 0:
            return m.copy()
        x = np.zeros(self._width, dtype=np.uint8)
        x[:m.size] = m
        return np.concatenate([m, toeplitz_extract(self._seed, x, self.redundancy_bits)])

    def decode(self, word, reference=None) -> DecodeResult:
        w = as_bits(word)
        if w.size != self.codeword_bits:
            raise ValueError(f"expected {self.codeword_bits} code bits, got {w.size}")
        if reference is None:
            raise ValueError("ideal-code decoding is emulated and needs the transmitted codeword")
        ref = as_bits(reference)
        errors = np.flatnonzero(w ^ ref)
        if errors.size <= self.max_correctable:
            return DecodeResult(ref[:self.message_bits].copy(), int(errors.size),
                                tuple(int(e) for e in errors), True)
        return DecodeResult(w[:self.message_bits].copy(), 0, (), False)


def ideal_code_params(n: int, Qp: float) -> tuple[int, int]:
    """``(codeword bits, redundancy bits)`` of the ideal code for ``n``
    message bits at predicted QBER ``Qp``."""
    length = ratecore.kv_length(n, Qp)
    return length, length - n


CODE_NAMES = ("hamming7-4", "bch15-7", "ideal")


def get_code(name: str, message_bits: int, predicted_qber: float = 0.0):
    """Build the named code for messages of ``message_bits`` bits."""
    if name == "hamming7-4":
        return BlockCode(_cached("hamming7-4"), message_bits)
    if name == "bch15-7":
        return BlockCode(_cached("bch15-7"), message_bits)
    if name == "ideal":
        return IdealCode(message_bits, predicted_qber)
    raise ValueError(f"unknown code {name!r}; choose from {CODE_NAMES}")


_BASE_CODES: dict[str, LinearCode] = {}


def _cached(name: str) -> LinearCode:
    if name not in _BASE_CODES:
        _BASE_CODES[name] = hamming_7_4() if name == "hamming7-4" else bch_15_7()
    return _BASE_CODES[name]
