"""
Classical simulation of the conjugate-coding quantum layer.

A qubit from the four-state alphabet is a (basis, value) pair: basis Z
holds |0>, |1> and basis X holds |+>, |->. Measuring in the preparation
basis returns the value; measuring in the other basis returns a fair coin
and collapses the qubit into the measured basis. For this alphabet and
these operations the model is exact.

Sequences are stored as parallel ``uint8`` arrays (``Qubits``) so that
10^5-qubit runs stay vectorised; ``SimQubit`` is the single-qubit view.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bits import as_bits

Z = 0
X = 1
_LABELS = {(Z, 0): "|0>", (Z, 1): "|1>", (X, 0): "|+>", (X, 1): "|->"}

EVE_KINDS = ("passive", "intercept-z", "intercept-x", "intercept-random", "replace")


@dataclass
class SimQubit:
    basis: int
    value: int

    def __post_init__(self):
        if self.basis not in (Z, X) or self.value not in (0, 1):
            raise ValueError(f"not a four-state qubit: basis={self.basis}, value={self.value}")

    @property
    def label(self) -> str:
        return _LABELS[(self.basis, self.value)]


def measure(q: SimQubit, basis: int, rng: np.random.Generator) -> int:
    """Measure ``q`` in ``basis``, collapsing it on a basis mismatch."""
    if basis == q.basis:
        return q.value
    outcome = int(rng.integers(0, 2))
    q.basis, q.value = basis, outcome
    return outcome


@dataclass
class Qubits:
    """A sequence of four-state qubits."""

    basis: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        self.basis = as_bits(self.basis)
        self.value = as_bits(self.value)
        if self.basis.size != self.value.size:
            raise ValueError("basis and value arrays differ in length")

    def __len__(self):
        return int(self.basis.size)

    def __getitem__(self, i: int) -> SimQubit:
        return SimQubit(int(self.basis[i]), int(self.value[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def copy(self) -> "Qubits":
        return Qubits(self.basis.copy(), self.value.copy())

    def labels(self) -> list[str]:
        return [q.label for q in self]


def encode_qubits(bits, basis_bits) -> Qubits:
    """Basis bit 0 selects Z, 1 selects X; the value is the data bit."""
    bits, basis_bits = as_bits(bits), as_bits(basis_bits)
    if bits.size != basis_bits.size:
        raise ValueError(f"{bits.size} data bits but {basis_bits.size} basis bits")
    return Qubits(basis_bits.copy(), bits.copy())


def measure_all(qs: Qubits, bases, rng: np.random.Generator) -> np.ndarray:
    """Measure every qubit in the given bases, collapsing mismatches in place."""
    bases = as_bits(bases)
    if bases.size != len(qs):
        raise ValueError(f"{bases.size} bases for {len(qs)} qubits")
    mismatch = qs.basis != bases
    coins = rng.integers(0, 2, size=len(qs), dtype=np.uint8)
    qs.value = np.where(mismatch, coins, qs.value).astype(np.uint8)
    qs.basis = bases.copy()
    return qs.value.copy()


def apply_noise(qs: Qubits, Q: float, rng: np.random.Generator) -> tuple[Qubits, int]:
    """Flip each value within its own basis with probability ``Q``.

    Returns the noisy copy and the number of flips.
    """
    if not (0.0 <= Q <= 0.5):
        raise ValueError(f"noise rate {Q} outside [0, 0.5]")
    flips = (rng.random(len(qs)) < Q).astype(np.uint8)
    out = Qubits(qs.basis.copy(), qs.value ^ flips)
    return out, int(flips.sum())


def flip_positions(qs: Qubits, positions) -> Qubits:
    """Deterministically flip the values at ``positions``."""
    out = qs.copy()
    for p in positions:
        out.value[p] ^= 1
    return out


@dataclass
class EveStrategy:
    """One of the simulated adversaries; it never sees any key material."""

    kind: str = "passive"
    seed: int | None = None
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in EVE_KINDS:
            raise ValueError(f"unknown eve strategy {self.kind!r}; choose from {EVE_KINDS}")
        self.rng = np.random.default_rng(self.seed)

    @classmethod
    def from_stream(cls, kind: str, rng: np.random.Generator) -> "EveStrategy":
        eve = cls(kind)
        eve.rng = rng
        return eve


@dataclass
class EveTranscript:
    kind: str
    bases: np.ndarray
    outcomes: np.ndarray


def eve_attack(strategy: EveStrategy, qs: Qubits) -> tuple[Qubits, EveTranscript]:
    """Let Eve act on the qubits in flight.

    Interceptors measure every qubit and forward the collapsed state; the
    replacing adversary discards the originals and sends fresh uniform qubits.
    """
    rng = strategy.rng
    n = len(qs)
    empty = np.zeros(0, dtype=np.uint8)
    if strategy.kind == "passive":
        return qs.copy(), EveTranscript("passive", empty, empty)
    if strategy.kind == "replace":
        fresh = Qubits(rng.integers(0, 2, n, dtype=np.uint8), rng.integers(0, 2, n, dtype=np.uint8))
        return fresh, EveTranscript("replace", fresh.basis.copy(), empty)
    if strategy.kind == "intercept-z":
        bases = np.full(n, Z, dtype=np.uint8)
    elif strategy.kind == "intercept-x":
        bases = np.full(n, X, dtype=np.uint8)
    else:
        bases = rng.integers(0, 2, n, dtype=np.uint8)
    out = qs.copy()
    outcomes = measure_all(out, bases, rng)
    return out, EveTranscript(strategy.kind, bases, outcomes)


# ---------------------------------------------------------------------------
# Basis indistinguishability
# ---------------------------------------------------------------------------

_KETS = {
    "0": np.array([1.0, 0.0], dtype=complex),
    "1": np.array([0.0, 1.0], dtype=complex),
    "+": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
    "-": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
}


def outcome_probability(M, ket) -> float:
    """``<psi| M^dagger M |psi>`` for a single-qubit operator ``M``."""
    M = np.asarray(M, dtype=complex)
    E = M.conj().T @ M
    return float(np.real(np.vdot(ket, E @ ket)))


def basis_indistinguishability_residual(M) -> float:
    """``|(p_0 + p_1) - (p_+ + p_-)|`` for measurement operator ``M``.

    Both sums equal ``tr(M^dagger M)``, so an outcome carries no
    information about which basis the qubit was prepared in; the return
    value is the floating-point residual of that identity.
    """
    M = np.asarray(M, dtype=complex)
    if M.shape != (2, 2) or not np.all(np.isfinite(M)):
        raise ValueError("measurement operator must be a finite 2x2 matrix")
    z = outcome_probability(M, _KETS["0"]) + outcome_probability(M, _KETS["1"])
    x = outcome_probability(M, _KETS["+"]) + outcome_probability(M, _KETS["-"])
    return abs(z - x)


def random_measurement_operator(rng: np.random.Generator) -> np.ndarray:
    """2x2 complex matrix with entries uniform in the unit disc."""
    r = np.sqrt(rng.random((2, 2)))
    phase = rng.random((2, 2)) * 2.0 * np.pi
    return r * np.exp(1j * phase)


def qber(sent, received) -> float:
    sent, received = as_bits(sent), as_bits(received)
    if sent.size == 0:
        return 0.0
    return float(np.mean(sent != received))
