"""
Error correction and the error count q
======================================

The receiver decodes and counts the flips it corrected. Small codes are
decoded by syndrome lookup; the ideal code is emulated at the Shannon limit.
"""

import numpy as np

from qkrlab import ecckit

ham = ecckit.hamming_7_4()
cw = ham.encode([1, 0, 1, 1])
cw[5] ^= 1
print(ham.decode(cw))

# Two flips exceed the radius: the decoder "corrects" to the wrong message
# and still reports q = 1. The MAC has to catch this.
cw = ham.encode([1, 0, 1, 1])
cw[[0, 1]] ^= 1
print(ham.decode(cw))

# BCH(15,7) corrects two errors per block; blocks are interleaved.
code = ecckit.get_code("bch15-7", 200)
rng = np.random.default_rng(0)
msg = rng.integers(0, 2, 200, dtype=np.uint8)
word = code.encode(msg)
word[code.block_positions(3)[[2, 9]]] ^= 1
res = code.decode(word)
print("BCH blocks:", code.blocks, "q =", res.corrected_errors, "ok =", np.array_equal(res.message, msg))

# The ideal code for Qp = 0.05 and 1000 message bits.
ideal = ecckit.IdealCode(1000, 0.05)
print("ideal code:", ideal.codeword_bits, "bits, corrects up to", ideal.max_correctable)
