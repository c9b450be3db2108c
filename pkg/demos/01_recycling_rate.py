"""
How much of the one-time-pad key can be recycled
================================================

Eve's best collective attack on a qubit with error rate Q leaves her with
one of two states, depending on Alice's bit. The recyclable fraction of the
pad key is the conditional entropy S(A|E), minimised over the attacks that
produce that error rate.
"""

import numpy as np

from qkrlab import ratecore
from qkrlab.ratecore import BellDiagonalSpectrum

# An attack is a Bell-diagonal spectrum. Fixing Q leaves one free
# parameter, lambda4, in [0, Q].
Q = 0.1
lo, hi = ratecore.feasible_lambda4_interval(Q)
print(f"feasible lambda4 for Q={Q}: [{lo}, {hi}]")

# Eve's state for a = 0 is block diagonal with rank-one blocks.
spec = BellDiagonalSpectrum.from_qber(Q, 0.004)
rho0 = ratecore.eve_state(spec, 0)
print(np.round(rho0, 4))
print("eigenvalues:", np.round(ratecore.hermitian_eigenvalues(rho0), 6))

# Scan the attack family and find the minimum.
for lam4 in np.linspace(0, Q, 6):
    s = ratecore.s_a_given_e(BellDiagonalSpectrum.from_qber(Q, lam4))
    print(f"lambda4={lam4:.3f}  S(A|E)={s:.6f}")

opt = ratecore.optimize_recycling(Q)
print(f"optimum at lambda4={opt.lambda4:.6f} (Q^2={Q * Q:.6f}), rate={opt.rate:.6f}")
print(f"1 - h(Q) = {1 - ratecore.binary_entropy(Q):.6f}")

# The whole curve: every key bit is recycled at Q = 0, none at Q = 0.5.
for sample in ratecore.recycling_curve(ratecore.qber_grid(0.1)):
    print(f"Q={sample.realQ:.1f}  r={sample.value:.6f}")
