"""The binary symmetric channel on quantizer indexes.

A B-bit index crosses the channel as B independent bits, each flipping
with probability eps. The induced transition matrix depends only on the
Hamming distance between the sent and received codewords.
"""

import numpy as np

from cscovq import bsc_channel, hamming_distance, transmit, transmit_indices

rng = np.random.default_rng(7)

B, eps = 3, 0.1
ch = bsc_channel(B, eps)
print(f"{B}-bit channel, crossover {eps}: {ch.size} x {ch.size} transition matrix")
print("rows sum to 1:", np.allclose(ch.transition.sum(axis=1), 1.0))
print("symmetric:", np.array_equal(ch.transition, ch.transition.T))

# Probability of receiving j given i is eps^d (1-eps)^(B-d), d = Hamming distance.
i, j = 0b101, 0b110
d = hamming_distance(i, j, B)
print(f"\nP({j:03b} | {i:03b}) = {ch.transition[i, j]:.6f}"
      f"  (distance {d}, closed form {eps**d * (1-eps)**(B-d):.6f})")

# Empirical transmission frequencies converge to the matrix row.
draws = 100_000
sent = 0b011
received = transmit_indices(ch, np.full(draws, sent), rng)
freq = np.bincount(received, minlength=ch.size) / draws
print(f"\nsending index {sent:03b} {draws} times:")
print("   j   P(j|i)    empirical")
for out in range(ch.size):
    print(f"  {out:03b}  {ch.transition[sent, out]:.4f}   {freq[out]:.4f}")

# An error-free channel is the identity on indexes.
clean = bsc_channel(B, 0.0)
print("\neps=0 always delivers the sent index:",
      all(transmit(clean, k, rng) == k for k in range(clean.size)))
print(f"eps={eps}: P(index survives) = (1-eps)^B = {(1-eps)**B:.4f},"
      f" empirical {np.mean(received == sent):.4f}")
