"""
The quantum channel and four eavesdroppers
==========================================

Qubits are (basis, value) pairs. Measuring in the wrong basis gives a fair
coin and collapses the state. Each eavesdropper leaves a characteristic
error rate on the receiver's matching-basis measurement.
"""

import numpy as np

from qkrlab import qchannel
from qkrlab.qchannel import EveStrategy

rng = np.random.default_rng(3)
n = 100_000
data = rng.integers(0, 2, n)
bases = rng.integers(0, 2, n)
sent = qchannel.encode_qubits(data, bases)
print(sent.labels()[:8])

for kind in qchannel.EVE_KINDS:
    forwarded, _ = qchannel.eve_attack(EveStrategy(kind, seed=4), sent)
    received = qchannel.measure_all(forwarded, bases, rng)
    print(f"{kind:<17} QBER = {qchannel.qber(data, received):.4f}")

# No measurement outcome depends on which basis the qubit was prepared in.
worst = max(qchannel.basis_indistinguishability_residual(qchannel.random_measurement_operator(rng))
            for _ in range(1000))
print("max residual:", worst)
