"""
Key consumption against the one-time pad and BB84
=================================================

Every message bit costs 1/(1 - h(Qp)) code bits. Of the pad key covering
them, a fraction r(Q) is recycled, so the net consumption per message bit
is (1 - r(Q)) / (1 - h(Qp)).
"""

from qkrlab import ratecore

# With the prediction equal to the real error rate the recycling scheme
# beats a plain one-time pad (one key bit per message bit) below Q ~ 0.11.
for row in ratecore.consumption_curve(ratecore.qber_grid(0.025)):
    print(f"Q={row['Q']:.3f}  qkr={row['qkr_consumed']:.4f}  noisy otp={row['classical_otp_noisy']:.4f}")
print("crossover at h(Q) = 1/2:", round(ratecore.entropy_root(0.5), 6))

# Key rate when the code is built for Qp = 0.07. At Q = Qp it touches
# the BB84 curve; below Qp it beats schemes that always discard at Qp.
Qp = 0.07
for row in ratecore.rate_curve(Qp, ratecore.qber_grid(0.01))[:10]:
    print(f"Q={row['Q']:.2f}  ours={row['qkr_rate_at_Qp']:.4f}  "
          f"existing={row['existing_qkr_at_Qp']:.4f}  bb84={row['bb84_rate']:.4f}")

# Code length for a 1000-bit message.
for qp in (0.0, 0.05, 0.11):
    print(f"Qp={qp}: {ratecore.kv_length(1000, qp)} code bits")
