import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import toeplitz
from scipy.stats import chisquare

from qkrlab import hashkit, verify
from qkrlab.bits import int_to_bits
from qkrlab.protocol import KeyPool, PoolExhausted


def bitvec(n):
    return st.lists(st.integers(0, 1), min_size=n, max_size=n).map(lambda v: np.array(v, dtype=np.uint8))


# -- field arithmetic ----------------------------------------------------------

def clmul_mod(a, b, poly):
    """Carry-less product then long division: the schoolbook oracle."""
    prod = 0
    for i in range(b.bit_length()):
        if (b >> i) & 1:
            prod ^= a << i
    deg = poly.bit_length() - 1
    while prod.bit_length() - 1 >= deg:
        prod ^= poly << (prod.bit_length() - 1 - deg)
    return prod


def gf2_polymod(a, m):
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def gf2_gcd(a, b):
    while b:
        a, b = b, gf2_polymod(a, b)
    return a


def x_power_mod(e, poly):
    """x^(2^e) mod poly by repeated squaring."""
    r = 0b10
    for _ in range(e):
        r = clmul_mod(r, r, poly)
    return r


@pytest.mark.parametrize("t", sorted(hashkit.REDUCTION_POLYNOMIALS))
def test_reduction_polynomial_is_irreducible(t):
    # Rabin: x^(2^t) = x mod p, and gcd(x^(2^(t/2)) - x, p) = 1 (t is a power of two)
    p = hashkit.REDUCTION_POLYNOMIALS[t]
    assert p.bit_length() - 1 == t
    assert x_power_mod(t, p) == 0b10
    assert gf2_gcd(p, x_power_mod(t // 2, p) ^ 0b10) == 1


@pytest.mark.parametrize("t", sorted(hashkit.REDUCTION_POLYNOMIALS))
def test_gf_mul_matches_schoolbook(t):
    rng = np.random.default_rng(t)
    p = hashkit.REDUCTION_POLYNOMIALS[t]
    for _ in range(200):
        a, b = (int(x) for x in rng.integers(0, 2 ** min(t, 62), size=2))
        assert hashkit.gf_mul(a, b, t) == clmul_mod(a, b, p)


def test_gf16_multiplicative_group_is_cyclic_of_order_15():
    seen = {1}
    x = 1
    for _ in range(14):
        x = hashkit.gf_mul(x, 2, 4)
        seen.add(x)
    assert len(seen) == 15 and hashkit.gf_mul(x, 2, 4) == 1


# -- MAC ---------------------------------------------------------------------

@given(bitvec(32), st.integers(0, 200))
def test_all_zero_message_blocks_hash_to_zero(u, n):
    # the zero polynomial: all-zero blocks give a zero hash for every key
    assert hashkit.poly_hash(int("".join(map(str, u)), 2), [0] * (n // 8 + 1), 32) == 0


@given(bitvec(32), st.integers(0, 100))
def test_mac_tag_of_zero_message_hashes_its_padded_blocks(u, n):
    # the appended 1 and length block make this a nonzero polynomial
    msg = np.zeros(n, dtype=np.uint8)
    blocks = hashkit.pad_message(msg, 32)
    assert np.array_equal(hashkit.mac_tag(u, msg), int_to_bits(hashkit.poly_hash(int("".join(map(str, u)), 2), blocks, 32), 32))


def test_padding_appends_one_zero_fill_and_length_block():
    blocks = hashkit.pad_message([1, 0, 1], 4)
    assert blocks == [0b1011, 3]
    blocks = hashkit.pad_message([1, 1, 1, 1], 4)
    assert blocks == [0b1111, 0b1000, 4]


@given(st.lists(st.integers(0, 1), max_size=40), st.lists(st.integers(0, 1), max_size=40))
def test_padding_is_injective(a, b):
    if a != b:
        assert hashkit.pad_message(a, 8) != hashkit.pad_message(b, 8)


def test_unpadded_message_matches_explicit_padding():
    u = int_to_bits(0xB7, 8)
    msg = [1, 0, 1, 1, 0]
    blocks = hashkit.pad_message(msg, 8)
    expected = int_to_bits(hashkit.poly_hash(0xB7, blocks, 8), 8)
    assert np.array_equal(hashkit.mac_tag(u, msg), expected)


def test_mac_tag_is_deterministic():
    rng = np.random.default_rng(1)
    u, msg = rng.integers(0, 2, 32), rng.integers(0, 2, 500)
    assert np.array_equal(hashkit.mac_tag(u, msg), hashkit.mac_tag(u, msg))


def test_mac_rejects_oversized_message():
    params = hashkit.MacParams(4, 2)
    with pytest.raises(ValueError):
        hashkit.mac_tag(int_to_bits(3, 4), np.zeros(4, dtype=np.uint8), params)


def test_mac_rejects_unsupported_key_width():
    with pytest.raises(ValueError):
        hashkit.mac_tag(np.zeros(5, dtype=np.uint8), [1])


def test_mac_params_epsilon():
    p = hashkit.MacParams.for_message(32, 256)
    assert p.max_blocks == 10
    assert p.epsilon == 10 / 2 ** 32


def test_axu_exhaustive_two_blocks_hits_bound():
    assert verify.axu_max_probability(4, 2) == 2 / 16


def test_axu_exhaustive_three_blocks_within_bound():
    assert verify.axu_max_probability_by_difference(4, 3) <= 3 / 16


def test_axu_single_block_is_xor_universal():
    assert verify.axu_max_probability(4, 1) == 1 / 16


def test_axu_padded_mac_within_epsilon():
    p, eps = verify.mac_tag_max_probability(4, 2)
    assert p <= eps


# -- ASU2 --------------------------------------------------------------------

def test_zero_pad_equals_mac():
    u, msg = int_to_bits(0xC0FFEE11, 32), np.ones(70, dtype=np.uint8)
    assert np.array_equal(hashkit.asu2_encrypt_tag(u, np.zeros(32, dtype=np.uint8), msg), hashkit.mac_tag(u, msg))


@given(st.integers(0, 31))
def test_flipping_one_pad_bit_flips_one_tag_bit(i):
    u, msg = int_to_bits(0x1234567, 32), np.ones(40, dtype=np.uint8)
    pad = np.zeros(32, dtype=np.uint8)
    base = hashkit.asu2_encrypt_tag(u, pad, msg)
    pad[i] = 1
    diff = hashkit.asu2_encrypt_tag(u, pad, msg) ^ base
    assert diff.sum() == 1 and diff[i] == 1


def test_asu2_exhaustive_bound():
    assert verify.asu_max_probability(4) <= (1 / 16) / 16


def test_asu2_rejects_pad_length_mismatch():
    with pytest.raises(ValueError):
        hashkit.asu2_encrypt_tag(int_to_bits(1, 8), np.zeros(4, dtype=np.uint8), [1])


def test_encrypted_tag_is_uniform():
    rng = np.random.default_rng(5)
    u, msg = int_to_bits(0x9, 4), [1, 0, 1]
    counts = np.zeros(16, dtype=int)
    for _ in range(16000):
        pad = rng.integers(0, 2, 4, dtype=np.uint8)
        counts[int("".join(map(str, hashkit.asu2_encrypt_tag(u, pad, msg))), 2)] += 1
    assert chisquare(counts).pvalue > 0.001


# -- Toeplitz ------------------------------------------------------------------

def toeplitz_oracle(seed, x, m):
    n = len(x)
    col = seed[n - 1:n - 1 + m]         # T[j, 0] = seed[j + n - 1]
    row = seed[n - 1::-1][:n]           # T[0, i] = seed[n - 1 - i]
    T = toeplitz(col, row)
    return (T.astype(int) @ np.asarray(x, dtype=int)) % 2


@given(st.integers(1, 40).flatmap(lambda n: st.tuples(bitvec(n), st.integers(0, n))), st.data())
def test_toeplitz_matches_scipy_oracle(args, data):
    x, m = args
    seed = data.draw(bitvec(hashkit.toeplitz_seed_length(len(x), m)))
    assert np.array_equal(hashkit.toeplitz_extract(seed, x, m), toeplitz_oracle(seed, x, m) if m else np.zeros(0))


def test_toeplitz_fft_path_matches_oracle():
    rng = np.random.default_rng(3)
    n, m = 1500, 900
    x = rng.integers(0, 2, n, dtype=np.uint8)
    seed = rng.integers(0, 2, n + m - 1, dtype=np.uint8)
    assert np.array_equal(hashkit.toeplitz_extract(seed, x, m), toeplitz_oracle(seed, x, m))


def test_toeplitz_zero_output_length():
    assert hashkit.toeplitz_extract(np.zeros(0, dtype=np.uint8), [1, 0, 1], 0).size == 0


@given(st.integers(1, 30).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))), st.data())
def test_toeplitz_zero_input_maps_to_zero(args, data):
    n, m = args
    seed = data.draw(bitvec(n + m - 1))
    assert not hashkit.toeplitz_extract(seed, np.zeros(n, dtype=np.uint8), m).any()


@given(st.data())
def test_toeplitz_is_linear(data):
    n = data.draw(st.integers(1, 64))
    m = data.draw(st.integers(1, n))
    seed = data.draw(bitvec(n + m - 1))
    x, y = data.draw(bitvec(n)), data.draw(bitvec(n))
    f = lambda v: hashkit.toeplitz_extract(seed, v, m)
    assert np.array_equal(f(x ^ y), f(x) ^ f(y))


def test_toeplitz_rejects_wrong_seed_length():
    with pytest.raises(ValueError):
        hashkit.toeplitz_extract(np.zeros(3, dtype=np.uint8), [1, 0, 1], 2)


def test_toeplitz_two_universal_exhaustive_4_to_2():
    assert verify.toeplitz_max_collision(4, 2) <= 1 / 4


@pytest.mark.parametrize("n, m", [(n, m) for n in range(1, 7) for m in range(1, min(3, n) + 1)])
def test_toeplitz_two_universal_exhaustive_small(n, m):
    assert verify.toeplitz_max_collision(n, m) <= 2.0 ** -m


# -- upd -----------------------------------------------------------------------

def make_pool(bits=4096, seed=0):
    return KeyPool.from_seed(seed, bits)


def test_upd_rate_one_uses_no_pool_bits():
    pool = make_pool()
    k = np.random.default_rng(0).integers(0, 2, 64, dtype=np.uint8)
    seed = np.random.default_rng(1).integers(0, 2, 127, dtype=np.uint8)
    out = hashkit.upd(k, 1.0, pool, seed)
    assert pool.cursor == 0
    assert np.array_equal(out, hashkit.toeplitz_extract(seed, k, 64))


def test_upd_rate_zero_is_fully_fresh():
    pool = make_pool()
    reference = make_pool()
    k = np.ones(50, dtype=np.uint8)
    out = hashkit.upd(k, 0.0, pool, np.zeros(99, dtype=np.uint8))
    assert pool.cursor == 50
    assert np.array_equal(out, reference.draw(50)[1])


def test_upd_half_rate_arithmetic():
    pool = make_pool()
    out = hashkit.upd(np.ones(100, dtype=np.uint8), 0.5, pool, np.ones(199, dtype=np.uint8))
    assert out.size == 100 and pool.cursor == 50


@given(st.integers(1, 200), st.floats(0, 1))
def test_upd_preserves_length_and_accounts(n, rate):
    pool = make_pool(512)
    k = np.zeros(n, dtype=np.uint8)
    out = hashkit.upd(k, rate, pool, np.zeros(2 * n - 1, dtype=np.uint8))
    assert out.size == n
    assert pool.cursor + hashkit.recycled_length(n, rate) == n


def test_upd_raises_on_exhausted_pool_before_drawing():
    pool = make_pool(10)
    with pytest.raises(PoolExhausted):
        hashkit.upd(np.ones(20, dtype=np.uint8), 0.0, pool, np.zeros(39, dtype=np.uint8))
    assert pool.cursor == 0


def test_upd_rejects_rate_out_of_range():
    with pytest.raises(ValueError):
        hashkit.upd(np.ones(4, dtype=np.uint8), 1.5, make_pool(), np.zeros(7, dtype=np.uint8))
