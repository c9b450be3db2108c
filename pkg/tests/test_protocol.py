import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from qkrlab import protocol, ratecore
from qkrlab.hashkit import recycled_length, toeplitz_extract
from qkrlab.protocol import (KeyPool, Party, PoolExhausted, ProtocolDesync, QuantumMessage, Session,
                             SessionConfig, build_layout, pool_capacity, run_session)
from qkrlab.qchannel import EveStrategy, Qubits, apply_noise


def pair(cfg, rounds=10, extra=0):
    cap = pool_capacity(cfg, rounds) + extra
    return (Party("alice", "bob", cfg, KeyPool.from_seed(9, cap), np.random.default_rng(1)),
            Party("bob", "alice", cfg, KeyPool.from_seed(9, cap), np.random.default_rng(2)))


# -- pool ----------------------------------------------------------------------

def test_synchronised_pools_return_identical_bits():
    a, b = KeyPool.from_seed(3, 1000), KeyPool.from_seed(3, 1000)
    for n in (5, 0, 100, 37):
        assert np.array_equal(a.draw(n)[1], b.draw(n)[1])


def test_zero_draw_leaves_cursor():
    pool = KeyPool.from_seed(3, 10)
    _, bits = protocol.pool_draw(pool, 0)
    assert bits.size == 0 and pool.cursor == 0


def test_ledger_counts_step_by_step_draw_sizes():
    n, t, s = 64, 32, 40
    pool = KeyPool.from_seed(0, 1000)
    sizes = [t, n + t + s, n + t + s]
    for size in sizes:
        pool.draw(size)
    assert pool.ledger.fresh == pool.cursor == t + 2 * (n + t + s)


def test_pool_exhaustion_raises():
    pool = KeyPool.from_seed(0, 10)
    with pytest.raises(PoolExhausted):
        pool.draw(11)


# -- layout --------------------------------------------------------------------

def test_layout_sizes_for_ideal_code():
    layout, code = build_layout(SessionConfig(n=1000, t=32, code="ideal", predicted_qber=0.05))
    assert layout.codeword_bits == ratecore.kv_length(1032, 0.05)
    assert layout.feedback_bits == int(np.ceil(np.log2(layout.codeword_bits + 2)))
    assert layout.reject_sentinel == 2 ** layout.feedback_bits - 1
    assert layout.max_q == int(0.05 * layout.codeword_bits)


def test_layout_rejects_payload_too_long_for_tag_width():
    with pytest.raises(ValueError):
        build_layout(SessionConfig(n=16, t=4))


def test_session_config_rejects_bad_prediction():
    with pytest.raises(ValueError):
        SessionConfig(predicted_qber=0.5)


# -- a single round -----------------------------------------------------------

def test_noiseless_loopback_identity():
    cfg = SessionConfig(n=128, t=16)
    alice, bob = pair(cfg)
    msg = np.random.default_rng(0).integers(0, 2, 128, dtype=np.uint8)
    out = bob.receive(alice.prepare(msg))
    assert out.accepted and out.q == 0
    assert np.array_equal(out.recovered_message, msg)
    assert out.kv_recycling_rate == 1.0
    assert out.consumed_bits == alice.layout.kb_allowance


def test_prepare_is_deterministic_given_pool_state():
    cfg = SessionConfig(n=64, t=16)
    msg = np.ones(64, dtype=np.uint8)
    q1 = pair(cfg)[0].prepare(msg)
    q2 = pair(cfg)[0].prepare(msg)
    assert np.array_equal(q1.qubits.basis, q2.qubits.basis)
    assert np.array_equal(q1.qubits.value, q2.qubits.value)


def test_cipher_xor_kv_is_codeword():
    alice, _ = pair(SessionConfig(n=64, t=16))
    kv = alice.keys[("alice->bob", "kv")].copy()
    kb = alice.keys[("alice->bob", "kb")].copy()
    qm = alice.prepare(np.zeros(64, dtype=np.uint8))
    rec = alice.last_prepared
    assert np.array_equal(rec.cipher ^ kv, rec.codeword)
    assert np.array_equal(qm.qubits.value, rec.cipher)
    assert np.array_equal(qm.qubits.basis, kb)


def test_message_length_is_checked():
    alice, _ = pair(SessionConfig(n=64, t=16))
    with pytest.raises(ValueError):
        alice.prepare(np.zeros(63, dtype=np.uint8))


def test_cannot_send_twice_without_feedback():
    alice, _ = pair(SessionConfig(n=64, t=16))
    alice.prepare(np.zeros(64, dtype=np.uint8))
    with pytest.raises(ProtocolDesync):
        alice.prepare(np.zeros(64, dtype=np.uint8))


def test_feedback_without_pending_key_is_desync():
    alice, _ = pair(SessionConfig(n=64, t=16))
    with pytest.raises(ProtocolDesync):
        alice.apply_feedback(0)


def test_replacing_adversary_is_rejected_and_kv_not_recycled():
    cfg = SessionConfig(n=64, t=32, seed=4)
    rounds = 300
    session = Session(cfg, rounds)
    eve = EveStrategy.from_stream("replace", session.streams["eve"])
    for _ in range(rounds):
        out, _, _ = session.step(0.0, eve)
        assert not out.accepted
        assert out.kv_recycled_bits == 0 and out.kv_recycling_rate == 0.0
        assert out.effective_qber == 0.5


def test_tampered_payload_is_rejected_despite_decoding():
    cfg = SessionConfig(n=64, t=16)
    alice, bob = pair(cfg)
    qm = alice.prepare(np.zeros(64, dtype=np.uint8))
    # two flips inside one Hamming block: the decoder miscorrects
    code = alice.code
    pos = code.block_positions(0)[[0, 1]]
    tampered = Qubits(qm.qubits.basis.copy(), qm.qubits.value.copy())
    tampered.value[pos] ^= 1
    out = bob.receive(QuantumMessage(tampered, 0))
    assert not out.accepted and out.q == 0


# -- feedback ------------------------------------------------------------------

def two_rounds(cfg, Q=0.0, seed=0):
    alice, bob = pair(cfg)
    g = np.random.default_rng(seed)
    layout = alice.layout
    kv0 = alice.keys[("alice->bob", "kv")].copy()
    qm = alice.prepare(g.integers(0, 2, layout.n, dtype=np.uint8), 0)
    noisy, _ = apply_noise(qm.qubits, Q, g)
    first = bob.receive(QuantumMessage(noisy, 0))
    alice.confirm(first.accepted)
    qm2 = bob.prepare(g.integers(0, 2, layout.n - layout.feedback_bits, dtype=np.uint8), 1)
    second = alice.receive(QuantumMessage(qm2.qubits, 1))
    bob.confirm(second.accepted)
    return alice, bob, kv0, first, second


def test_zero_errors_recycle_full_extractor_image_on_both_sides():
    alice, bob, kv0, first, second = two_rounds(SessionConfig(n=64, t=16))
    assert first.accepted and second.accepted and second.feedback_received == 0
    slot = ("alice->bob", "kv")
    expected = toeplitz_extract(alice.seeds[slot], kv0, kv0.size)
    assert np.array_equal(alice.keys[slot], expected)
    assert np.array_equal(bob.keys[slot], expected)


def test_feedback_carries_q_and_resynchronises():
    cfg = SessionConfig(n=512, t=32, code="bch15-7")
    alice, bob, _, first, second = two_rounds(cfg, Q=0.01, seed=3)
    assert first.accepted and first.q > 0
    assert second.feedback_received == first.q
    assert protocol.keys_in_sync(alice, bob)
    assert alice.pool.cursor == bob.pool.cursor
    assert alice.pool.ledger == bob.pool.ledger


def test_reject_signal_discards_pending_key():
    cfg = SessionConfig(n=64, t=16)
    alice, _ = pair(cfg, extra=1000)
    alice.prepare(np.zeros(64, dtype=np.uint8))
    before = alice.pool.ledger.consumed
    N = alice.layout.codeword_bits
    cursor = alice.pool.cursor
    kept = alice.apply_feedback(alice.layout.reject_sentinel)
    assert kept == 0
    assert alice.pool.ledger.consumed - before == N
    assert np.array_equal(alice.keys[("alice->bob", "kv")], alice.pool.reservoir[cursor:cursor + N])


@pytest.mark.parametrize("q", [0, 1, 3, 7])
def test_accepted_feedback_recycles_exactly_the_formula(q):
    cfg = SessionConfig(n=256, t=32)
    alice, _ = pair(cfg, extra=1000)
    alice.prepare(np.zeros(256, dtype=np.uint8))
    N = alice.layout.codeword_bits
    before = alice.pool.ledger.recycled
    kept = alice.apply_feedback(q)
    assert kept == recycled_length(N, ratecore.min_recycling_rate(q / N))
    assert alice.pool.ledger.recycled - before == kept


def test_feedback_above_decoder_radius_is_treated_as_reject():
    cfg = SessionConfig(n=64, t=16)
    alice, _ = pair(cfg, extra=1000)
    alice.prepare(np.zeros(64, dtype=np.uint8))
    assert alice.apply_feedback(alice.layout.max_q + 1) == 0


# -- sessions ------------------------------------------------------------------

def test_noiseless_session_recycles_everything():
    stats = run_session(SessionConfig(n=256, t=32, seed=1), 0.0, "passive", 100)
    assert stats.accept_rate == 1.0
    assert stats.kv_consumed_bits == 0
    assert stats.sync_failures == 0 and stats.pool_balanced


def test_session_at_predicted_qber_consumption():
    cfg = SessionConfig(n=2000, t=32, code="ideal", predicted_qber=0.05, seed=2)
    stats = run_session(cfg, 0.05, "passive", 100)
    # accepted rounds follow the analytic curve; rejected rounds lose all of k_v
    assert stats.consumed_key_rate_accepted == pytest.approx(ratecore.consumed_key_rate(0.05, 0.05), abs=0.03)
    assert stats.consumed_key_rate > stats.consumed_key_rate_accepted
    assert 0.0 < stats.accept_rate < 1.0
    assert stats.sync_failures == 0 and stats.pool_balanced


def test_intercept_resend_session_is_reject_dominated():
    stats = run_session(SessionConfig(n=256, t=32, seed=3), 0.0, "intercept-random", 100)
    assert stats.empirical_qber == pytest.approx(0.25, abs=0.02)
    assert stats.accepted == 0
    assert stats.kv_recycled_bits == 0
    assert stats.kv_consumed_bits == 100 * stats.codeword_bits


def test_pool_exhaustion_reports_partial_stats():
    cfg = SessionConfig(n=128, t=16, seed=5)
    layout, _ = build_layout(cfg)
    # enough for setup and a couple of noisy rounds only
    stats = run_session(cfg, 0.3, "passive", 50, capacity=pool_capacity(cfg, 0) + 3 * layout.codeword_bits)
    assert stats.error.startswith("pool exhausted")
    assert 0 < stats.rounds < 50


def test_final_round_kv_stays_pending():
    stats = run_session(SessionConfig(n=64, t=16, seed=6), 0.0, "passive", 5)
    N = stats.codeword_bits
    for ledger in stats.ledgers.values():
        assert ledger["pending"] == N


@given(st.sampled_from(["hamming7-4", "bch15-7", "ideal"]), st.floats(0, 0.08),
       st.sampled_from(["passive", "intercept-z", "replace"]), st.integers(1, 12), st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_sessions_stay_synchronised_and_balanced(code, Q, eve, rounds, seed):
    cfg = SessionConfig(n=96, t=16, code=code, predicted_qber=0.05, seed=seed)
    session = Session(cfg, rounds)
    eve_obj = EveStrategy.from_stream(eve, session.streams["eve"])
    for _ in range(rounds):
        out, _, _ = session.step(Q, eve_obj)
        a, b = session.alice, session.bob
        assert a.pool.cursor == b.pool.cursor
        assert protocol.keys_in_sync(a, b)
        for p in (a, b):
            led = p.pool.ledger
            assert led.drawn == led.consumed + led.recycled + led.pending
        if not out.accepted:
            assert out.kv_recycled_bits == 0


def test_same_seed_same_statistics():
    cfg = SessionConfig(n=128, t=16, code="bch15-7", seed=77)
    a = run_session(cfg, 0.02, "passive", 10)
    b = run_session(cfg, 0.02, "passive", 10)
    assert a.summary() == b.summary()
    assert a.records == b.records


# -- secrecy and interface -----------------------------------------------------

def test_ciphertext_is_uniform_for_fixed_plaintext():
    cfg = SessionConfig(n=8, t=4)
    layout, _ = build_layout(cfg)
    draws = 100_000
    pool = KeyPool.from_seed(11, pool_capacity(cfg, draws) + draws * layout.codeword_bits)
    alice = Party("alice", "bob", cfg, pool)
    msg = np.zeros(8, dtype=np.uint8)
    weights = 1 << np.arange(3, -1, -1)
    counts = np.zeros(16, dtype=np.int64)
    for i in range(draws):
        qm = alice.prepare(msg, i)
        counts[int(qm.qubits.value[:4] @ weights)] += 1
        alice.apply_feedback(None)   # fresh k_v every time
    assert chisquare(counts).pvalue > 0.001


def test_only_qubits_cross_between_parties():
    assert {f.name for f in dataclasses.fields(QuantumMessage)} == {"qubits", "round_index"}
    assert {f.name for f in dataclasses.fields(Qubits)} == {"basis", "value"}
