"""
Authentication tags, Toeplitz extraction and key update
=======================================================

The MAC is a polynomial evaluated at the key over GF(2^t). Encrypting the
tag with fresh pad bits makes it strongly universal. Recycled keys pass
through a Toeplitz extractor and are topped up from the shared pool.
"""

import numpy as np

from qkrlab import hashkit, verify
from qkrlab.bits import int_to_bits, to_str
from qkrlab.protocol import KeyPool

rng = np.random.default_rng(1)
u = int_to_bits(0xDEADBEEF, 32)
msg = rng.integers(0, 2, 100, dtype=np.uint8)
params = hashkit.MacParams.for_message(32, msg.size)
print("tag:", to_str(hashkit.mac_tag(u, msg, params)), f"epsilon={params.epsilon:.3g}")

# Exhaustive checks at t = 4: collision probability never exceeds L/2^t.
print("AXU, two blocks:", verify.axu_max_probability(4, 2), "<= 2/16")
print("ASU, one block: ", verify.asu_max_probability(4), "<= 1/256")

# Toeplitz hashing is two-universal: any pair collides on at most 1/4 of seeds.
print("Toeplitz 4->2:", verify.toeplitz_max_collision(4, 2))

# Key update at rate 0.75: a quarter of the key is replaced from the pool.
pool = KeyPool.from_seed(0, 1000)
k = rng.integers(0, 2, 64, dtype=np.uint8)
seed = rng.integers(0, 2, 2 * 64 - 1, dtype=np.uint8)
k2 = hashkit.upd(k, 0.75, pool, seed)
print(f"updated key {k2.size} bits, pool bits used {pool.cursor}")
