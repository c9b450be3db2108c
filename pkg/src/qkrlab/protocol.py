"""
The key-recycling protocol between two parties sharing a key pool.

Each direction of traffic (alice->bob, bob->alice) owns a MAC key ``u``,
a one-time-pad key ``k_v`` and a basis key ``k_b``, all as long-lived
slots that are recycled round after round:

* ``u`` is reused unchanged;
* ``k_b`` loses a few bits per round to cover what the receiver's
  response reveals, then is topped up from the pool;
* ``k_v`` is compressed according to the error count ``q`` the receiver
  corrected and topped up from the pool. The sender only learns ``q`` from
  a fixed-width field at the front of the next message travelling the
  other way, so until then its ``k_v`` is *pending*.

Both parties hold identical copies of the pool and make the same pool
draws in the same order, so their key slots stay bit-identical without
any classical channel. The accept/reject verdict of a round is treated as
public (it is the receiver's observable response); ``q`` itself only ever
travels inside an authenticated payload.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import ratecore
from .bits import as_bits, bits_to_int, int_to_bits, xor
from .ecckit import IdealCode, get_code
from .hashkit import MacParams, mac_tag, recycled_length, upd
from .qchannel import EveStrategy, Qubits, apply_noise, encode_qubits, eve_attack, measure_all

ROLES = ("u", "kv", "kb")


class PoolExhausted(RuntimeError):
    """The shared pool cannot supply the bits a protocol step needs."""


class ProtocolDesync(RuntimeError):
    """A party was asked to act on state it does not have."""


# ---------------------------------------------------------------------------
# Key pool
# ---------------------------------------------------------------------------

@dataclass
class PoolLedger:
    """Bit accounting for one party.

    ``fresh`` counts reservoir bits taken. ``drawn`` counts key bits put to
    use in rounds; each of those ends up ``consumed``, ``recycled`` or is
    still ``pending``, so ``drawn == consumed + recycled + pending``.
    """

    fresh: int = 0
    drawn: int = 0
    consumed: int = 0
    recycled: int = 0
    pending: int = 0

    @property
    def balanced(self) -> bool:
        return self.drawn == self.consumed + self.recycled + self.pending


class KeyPool:
    """Pre-shared reservoir of secret bits read through a cursor.

    Two pools built from the same reservoir return identical bits for
    identical draw sequences.
    """

    def __init__(self, reservoir):
        self.reservoir = as_bits(reservoir)
        self.cursor = 0
        self.ledger = PoolLedger()
        self._next_id = 0

    @classmethod
    def from_seed(cls, seed: int, capacity: int) -> "KeyPool":
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x900C]))
        return cls(rng.integers(0, 2, size=capacity, dtype=np.uint8))

    @property
    def remaining(self) -> int:
        return self.reservoir.size - self.cursor

    def draw(self, length: int) -> tuple[int, np.ndarray]:
        """Take the next ``length`` reservoir bits."""
        if length < 0:
            raise ValueError("negative draw")
        if length > self.remaining:
            raise PoolExhausted(f"pool has {self.remaining} bits left, {length} requested")
        bits = self.reservoir[self.cursor:self.cursor + length].copy()
        self.cursor += length
        self.ledger.fresh += length
        key_id = self._next_id
        self._next_id += 1
        return key_id, bits


def pool_draw(pool: KeyPool, length: int) -> tuple[int, np.ndarray]:
    return pool.draw(length)


# ---------------------------------------------------------------------------
# Configuration and derived layout
# ---------------------------------------------------------------------------

@dataclass
class SessionConfig:
    """Protocol parameters.

    ``n`` is the payload length per message, including the feedback field
    that carries the previous round's ``q``.
    """

    n: int = 256
    t: int = 32
    code: str = "hamming7-4"
    predicted_qber: float = 0.05
    epsilon_budget: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.t < 1:
            raise ValueError("n and t must be at least 1")
        if not (0.0 <= self.predicted_qber < 0.5):
            raise ValueError(f"predicted QBER {self.predicted_qber} outside [0, 0.5)")


@dataclass(frozen=True)
class Layout:
    """Sizes derived from a ``SessionConfig``."""

    n: int
    t: int
    codeword_bits: int
    redundancy_bits: int
    feedback_bits: int
    max_q: int
    kb_allowance: int
    mac: MacParams

    @property
    def reject_sentinel(self) -> int:
        return (1 << self.feedback_bits) - 1


def build_layout(cfg: SessionConfig):
    if cfg.n >= 1 << cfg.t:
        raise ValueError(f"a {cfg.n}-bit payload cannot be length-encoded in a {cfg.t}-bit MAC block")
    code = get_code(cfg.code, cfg.n + cfg.t, cfg.predicted_qber)
    N = code.codeword_bits
    width = math.ceil(math.log2(N + 2))
    if width >= cfg.n:
        raise ValueError(f"payload of {cfg.n} bits cannot hold a {width}-bit feedback field")
    max_q = code.max_correctable
    allowance = math.ceil(math.log2(max_q + 2))
    mac = MacParams.for_message(cfg.t, cfg.n)
    layout = Layout(cfg.n, cfg.t, N, code.redundancy_bits, width, max_q, allowance, mac)
    return layout, code


# ---------------------------------------------------------------------------
# Messages and outcomes
# ---------------------------------------------------------------------------

@dataclass
class QuantumMessage:
    """Everything that crosses from sender to receiver: the qubits only."""

    qubits: Qubits
    round_index: int


@dataclass
class RoundOutcome:
    accepted: bool
    q: int
    recovered_message: np.ndarray
    consumed_bits: int
    recycled_bits: int
    kv_recycled_bits: int
    kv_recycling_rate: float
    effective_qber: float
    feedback_received: int | None
    feedback_q: int | None


@dataclass
class _Verdict:
    round_index: int
    accepted: bool
    q: int


@dataclass
class _Pending:
    round_index: int
    key: np.ndarray


@dataclass
class PreparedRecord:
    """Sender-side intermediates of the last prepared message."""

    payload: np.ndarray
    codeword: np.ndarray
    cipher: np.ndarray


def _key_rate(q: int, codeword_bits: int) -> float:
    return ratecore.min_recycling_rate(q / codeword_bits)


# ---------------------------------------------------------------------------
# Party
# ---------------------------------------------------------------------------

class Party:
    """One endpoint: its copy of the pool and its key slots."""

    def __init__(self, name: str, peer: str, cfg: SessionConfig, pool: KeyPool,
                 rng: np.random.Generator | None = None):
        self.name = name
        self.peer = peer
        self.cfg = cfg
        self.layout, self.code = build_layout(cfg)
        self.pool = pool
        self.rng = rng if rng is not None else np.random.default_rng()
        self.keys: dict[tuple[str, str], np.ndarray] = {}
        self.seeds: dict[tuple[str, str], np.ndarray] = {}
        self.mac_uses: dict[str, int] = {}
        self.pending: dict[str, _Pending] = {}
        self.awaiting: dict[str, _Verdict] = {}
        self.last_prepared: PreparedRecord | None = None
        self.last_measured: np.ndarray | None = None
        self._setup()

    @property
    def outgoing(self) -> str:
        return f"{self.name}->{self.peer}"

    @property
    def incoming(self) -> str:
        return f"{self.peer}->{self.name}"

    def _setup(self):
        # canonical order, shared by both parties
        L = self.layout
        lengths = {"u": L.t, "kv": L.codeword_bits, "kb": L.codeword_bits}
        for d in sorted((self.outgoing, self.incoming)):
            for role in ROLES:
                self.keys[(d, role)] = self.pool.draw(lengths[role])[1]
            self.mac_uses[d] = 0
        for d in sorted((self.outgoing, self.incoming)):
            for role in ("kv", "kb"):
                self.seeds[(d, role)] = self.pool.draw(2 * L.codeword_bits - 1)[1]

    def _take(self, direction: str, role: str) -> np.ndarray:
        key = self.keys[(direction, role)]
        self.pool.ledger.drawn += key.size
        return key

    def _refresh(self, direction: str, role: str, key: np.ndarray, rate: float) -> int:
        """Run ``upd`` on a key and store the result; returns bits kept."""
        kept = recycled_length(key.size, rate)
        self.keys[(direction, role)] = upd(key, rate, self.pool, self.seeds[(direction, role)])
        return kept

    def _recycle_round_keys(self, direction: str, u: np.ndarray, kb: np.ndarray):
        # u unchanged; k_b minus the response-leakage allowance
        L = self.layout
        kb_rate = (kb.size - L.kb_allowance) / kb.size
        kept = self._refresh(direction, "kb", kb, kb_rate)
        self.mac_uses[direction] += 1
        led = self.pool.ledger
        led.recycled += u.size + kept
        led.consumed += kb.size - kept

    def _settle_kv(self, direction: str, key: np.ndarray, q: int | None) -> int:
        """Resolve a pending or provisional ``k_v``: recycle at the rate for
        ``q``, or replace it entirely when ``q`` is None."""
        led = self.pool.ledger
        rate = 0.0 if q is None else _key_rate(q, self.layout.codeword_bits)
        kept = self._refresh(direction, "kv", key, rate)
        led.pending -= key.size
        led.recycled += kept
        led.consumed += key.size - kept
        return kept

    def settled(self, direction: str, role: str) -> bool:
        if role != "kv":
            return True
        return direction not in self.pending and direction not in self.awaiting

    # -- sender ---------------------------------------------------------

    def prepare(self, msg, round_index: int = 0) -> QuantumMessage:
        L = self.layout
        out = self.outgoing
        if out in self.pending:
            raise ProtocolDesync(f"{self.name}: k_v for {out} still awaits feedback")
        verdict = self.awaiting.get(self.incoming)
        msg = as_bits(msg)
        expected = L.n - (L.feedback_bits if verdict is not None else 0)
        if msg.size != expected:
            raise ValueError(f"message must have {expected} bits, got {msg.size}")
        if verdict is not None:
            value = verdict.q if verdict.accepted else L.reject_sentinel
            payload = np.concatenate([int_to_bits(value, L.feedback_bits), msg])
        else:
            payload = msg.copy()

        u = self._take(out, "u")
        tag = mac_tag(u, payload, L.mac)
        codeword = self.code.encode(np.concatenate([payload, tag]))
        kv = self._take(out, "kv")
        cipher = xor(codeword, kv)
        kb = self._take(out, "kb")
        qubits = encode_qubits(cipher, kb)

        self._recycle_round_keys(out, u, kb)
        self.pending[out] = _Pending(round_index, kv)
        self.pool.ledger.pending += kv.size
        self.last_prepared = PreparedRecord(payload, codeword, cipher)
        return QuantumMessage(qubits, round_index)

    def confirm(self, accepted: bool):
        """Settle the provisional ``k_v`` of the last round this party
        received, once the public verdict on its own reply is known."""
        verdict = self.awaiting.pop(self.incoming, None)
        if verdict is None:
            return None
        key = self.keys[(self.incoming, "kv")]
        q = verdict.q if (verdict.accepted and accepted) else None
        return self._settle_kv(self.incoming, key, q)

    # -- receiver -------------------------------------------------------

    def receive(self, qm: QuantumMessage, reference=None) -> RoundOutcome:
        L = self.layout
        inc = self.incoming
        if inc in self.awaiting:
            raise ProtocolDesync(f"{self.name}: k_v for {inc} is not settled yet")
        u = self._take(inc, "u")
        kv = self._take(inc, "kv")
        kb = self._take(inc, "kb")
        if len(qm.qubits) != L.codeword_bits:
            raise ValueError(f"expected {L.codeword_bits} qubits, got {len(qm.qubits)}")

        measured = measure_all(qm.qubits.copy(), kb, self.rng)
        self.last_measured = measured
        received = xor(measured, kv)
        if isinstance(self.code, IdealCode):
            result = self.code.decode(received, reference=reference)
        else:
            result = self.code.decode(received)
        payload = result.message[:L.n]
        tag = result.message[L.n:L.n + L.t]
        accepted = bool(np.array_equal(mac_tag(u, payload, L.mac), tag))
        q = result.corrected_errors if accepted else 0

        has_field = self.outgoing in self.pending
        feedback = bits_to_int(payload[:L.feedback_bits]) if (has_field and accepted) else None
        message = payload[L.feedback_bits:] if has_field else payload

        led = self.pool.ledger
        before = (led.consumed, led.recycled)
        self._recycle_round_keys(inc, u, kb)
        led.pending += kv.size
        self.awaiting[inc] = _Verdict(qm.round_index, accepted, q)
        if accepted:
            rate = _key_rate(q, L.codeword_bits)
            kv_kept = recycled_length(kv.size, rate)
        else:
            rate, kv_kept = 0.0, 0
        consumed = led.consumed - before[0] + kv.size - kv_kept
        recycled = led.recycled - before[1] + kv_kept

        if has_field:
            self.apply_feedback(feedback if accepted else None)

        return RoundOutcome(
            accepted=accepted,
            q=q,
            recovered_message=message.copy(),
            consumed_bits=consumed,
            recycled_bits=recycled,
            kv_recycled_bits=kv_kept,
            kv_recycling_rate=kv_kept / kv.size,
            effective_qber=q / L.codeword_bits if accepted else 0.5,
            feedback_received=feedback,
            feedback_q=q if accepted else None,
        )

    def apply_feedback(self, q: int | None) -> int:
        """Settle the pending ``k_v`` of the last round this party sent.

        ``q`` is the count reported back by the peer; ``None`` or the reject
        sentinel discards the key entirely. Returns the bits recycled.
        """
        pending = self.pending.pop(self.outgoing, None)
        if pending is None:
            raise ProtocolDesync(f"{self.name}: no pending k_v for {self.outgoing}")
        L = self.layout
        if q is not None and (q == L.reject_sentinel or q > L.max_q):
            q = None
        return self._settle_kv(self.outgoing, pending.key, q)


def alice_prepare(party: Party, msg, round_index: int = 0) -> QuantumMessage:
    return party.prepare(msg, round_index)


def bob_receive(party: Party, qm: QuantumMessage, reference=None) -> RoundOutcome:
    return party.receive(qm, reference)


def apply_feedback(party: Party, q: int | None) -> int:
    return party.apply_feedback(q)


def keys_in_sync(a: Party, b: Party) -> bool:
    """True when every settled key slot is identical on both sides."""
    for slot, key in a.keys.items():
        d, role = slot
        if a.settled(d, role) and b.settled(d, role):
            if not np.array_equal(key, b.keys[slot]):
                return False
    return all(np.array_equal(a.seeds[s], b.seeds[s]) for s in a.seeds)


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------

def pool_capacity(cfg: SessionConfig, rounds: int) -> int:
    """Reservoir size that covers setup plus ``rounds`` worst-case rounds."""
    layout, _ = build_layout(cfg)
    N = layout.codeword_bits
    setup = 2 * (layout.t + 2 * N) + 4 * (2 * N - 1)
    return setup + rounds * (N + layout.kb_allowance)


def session_streams(seed: int) -> dict[str, np.random.Generator]:
    names = ("pool", "messages", "noise", "eve", "alice", "bob")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}


@dataclass
class RoundRecord:
    """One row of a session transcript.

    ``consumed`` and ``recycled`` follow the receiver's decision for this
    round's keys; ``pending`` is the ``k_v`` the sender holds until the
    feedback arrives.
    """

    session: int
    round: int
    direction: str
    accepted: int
    q: int
    flips: int
    consumed: int
    recycled: int
    pending: int
    kv_recycling_rate: float


@dataclass
class SessionStats:
    rounds: int = 0
    accepted: int = 0
    message_bits: int = 0
    codeword_bits: int = 0
    accept_rate: float = 0.0
    mean_q: float = 0.0
    empirical_qber: float = 0.0
    mean_kv_recycling_rate: float = 0.0
    consumed_key_rate: float = 0.0
    consumed_key_rate_accepted: float = math.nan
    kv_consumed_bits: int = 0
    kv_recycled_bits: int = 0
    kb_leakage_bits: int = 0
    mac_leakage_bits: float = 0.0
    mac_epsilon_spent: float = 0.0
    epsilon_budget: float = 0.0
    sync_failures: int = 0
    pool_balanced: bool = True
    error: str = ""
    ledgers: dict = field(default_factory=dict)
    records: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        out = asdict(self)
        out.pop("records")
        return out


class Session:
    """Alice and Bob with synchronised pools, alternating directions."""

    def __init__(self, cfg: SessionConfig, rounds: int, capacity: int | None = None):
        self.cfg = cfg
        self.streams = session_streams(cfg.seed)
        cap = pool_capacity(cfg, rounds) if capacity is None else capacity
        pool_seed = int(self.streams["pool"].integers(0, 2 ** 63))
        self.alice = Party("alice", "bob", cfg, KeyPool.from_seed(pool_seed, cap), self.streams["alice"])
        self.bob = Party("bob", "alice", cfg, KeyPool.from_seed(pool_seed, cap), self.streams["bob"])
        self.layout = self.alice.layout
        self.round_index = 0

    def step(self, channel_qber: float, eve: EveStrategy | None = None):
        """Run one round; returns ``(outcome, flips, sent_message)``."""
        r = self.round_index
        sender, receiver = (self.alice, self.bob) if r % 2 == 0 else (self.bob, self.alice)
        L = self.layout
        width = L.feedback_bits if sender.incoming in sender.awaiting else 0
        msg = self.streams["messages"].integers(0, 2, size=L.n - width, dtype=np.uint8)
        qm = sender.prepare(msg, r)
        cipher = sender.last_prepared.cipher
        qubits = qm.qubits
        if eve is not None:
            qubits, _ = eve_attack(eve, qubits)
        qubits, _ = apply_noise(qubits, channel_qber, self.streams["noise"])
        arrived = QuantumMessage(qubits, r)
        reference = sender.last_prepared.codeword if isinstance(receiver.code, IdealCode) else None
        outcome = receiver.receive(arrived, reference)
        flips = int(np.sum(receiver.last_measured != cipher))
        sender.confirm(outcome.accepted)
        self.round_index += 1
        return outcome, flips, msg


def run_session(cfg: SessionConfig, channel_qber: float, eve: EveStrategy | str | None,
                rounds: int, session_index: int = 0, capacity: int | None = None) -> SessionStats:
    """Run ``rounds`` alternating rounds and aggregate the statistics."""
    session = Session(cfg, rounds, capacity)
    if isinstance(eve, str):
        eve = EveStrategy.from_stream(eve, session.streams["eve"])
    L = session.layout
    stats = SessionStats(codeword_bits=L.codeword_bits, epsilon_budget=cfg.epsilon_budget)
    q_sum = 0
    flip_sum = 0
    rate_sum = 0.0
    acc_consumed = 0
    acc_message = 0
    try:
        for _ in range(rounds):
            r = session.round_index
            direction = "alice->bob" if r % 2 == 0 else "bob->alice"
            outcome, flips, msg = session.step(channel_qber, eve)
            kv_consumed = L.codeword_bits - outcome.kv_recycled_bits
            stats.rounds += 1
            stats.accepted += int(outcome.accepted)
            stats.message_bits += msg.size
            stats.kv_consumed_bits += kv_consumed
            stats.kv_recycled_bits += outcome.kv_recycled_bits
            stats.kb_leakage_bits += L.kb_allowance
            stats.mac_epsilon_spent += L.mac.epsilon
            q_sum += outcome.q
            flip_sum += flips
            rate_sum += outcome.kv_recycling_rate
            if outcome.accepted:
                acc_consumed += kv_consumed
                acc_message += msg.size
            if not keys_in_sync(session.alice, session.bob):
                stats.sync_failures += 1
            stats.records.append(RoundRecord(
                session_index, r, direction, int(outcome.accepted), outcome.q, flips,
                outcome.consumed_bits, outcome.recycled_bits, L.codeword_bits,
                outcome.kv_recycling_rate))
    except PoolExhausted as exc:
        stats.error = f"pool exhausted after {stats.rounds} rounds: {exc}"

    if stats.rounds:
        stats.accept_rate = stats.accepted / stats.rounds
        stats.mean_q = q_sum / stats.rounds
        stats.empirical_qber = flip_sum / (stats.rounds * L.codeword_bits)
        stats.mean_kv_recycling_rate = rate_sum / stats.rounds
        stats.consumed_key_rate = stats.kv_consumed_bits / stats.message_bits
    if acc_message:
        stats.consumed_key_rate_accepted = acc_consumed / acc_message
    M = 2 ** cfg.t
    stats.mac_leakage_bits = sum(
        ratecore.mac_key_leakage_bound(M, min(uses, M)) for uses in session.alice.mac_uses.values())
    stats.ledgers = {p.name: asdict(p.pool.ledger) for p in (session.alice, session.bob)}
    stats.pool_balanced = session.alice.pool.ledger.balanced and session.bob.pool.ledger.balanced
    return stats
