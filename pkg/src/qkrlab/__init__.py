"""Error-tolerant quantum key recycling lab.

Modules:

* ``ratecore``: entropies, Eve's states, the recycling-rate optimum and
  the key-consumption and key-rate curves.
* ``hashkit``: polynomial MAC over GF(2^t), Toeplitz extraction, key update.
* ``ecckit``: Hamming(7,4), BCH(15,7) and an emulated Shannon-ideal code.
* ``qchannel``: four-state qubit simulation, noise and adversaries.
* ``protocol``: the two-party recycling protocol over a shared key pool.
* ``verify``: exhaustive and Monte-Carlo property suites.
* ``cli``: the ``qkrlab`` command.
"""

__version__ = "0.1.0"
