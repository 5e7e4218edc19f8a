"""
Reconciliation efficiency across error rates
============================================

Measures how many bits the corrector discloses relative to the Shannon
floor n*h(e) as the planted error rate varies.  Keys are synthetic here
(exact error counts) so each rate is sampled at its nominal value.
"""

import numpy as np

from qkdlab.cascade import CascadeConfig, default_k1, run_cascade
from qkdlab.keyrate import binary_entropy

N = 10_000
TRIALS = 30

rng = np.random.default_rng(99)

print(f"key length {N}, {TRIALS} trials per rate")
print("\n  e      k1    mean f   sd f    residual-error trials")
for e in (0.02, 0.05, 0.08, 0.10):
    n_err = int(round(e * N))
    fs = []
    residual = 0
    for _ in range(TRIALS):
        alice = rng.integers(0, 2, size=N, dtype=np.uint8)
        flips = rng.choice(N, size=n_err, replace=False)
        bob = alice.copy()
        bob[flips] ^= 1
        result = run_cascade(alice, bob, e, CascadeConfig(seed=int(rng.integers(1 << 31))))
        if np.any(result.corrected_bob_key != alice):
            residual += 1
        fs.append(result.transcript.leak_ab_bits / (N * binary_entropy(e)))
    fs = np.array(fs)
    print(f"  {e:.2f}  {default_k1(e, N):4d}   {fs.mean():.3f}   {fs.std():.3f}   "
          f"{residual}/{TRIALS}")

# the disclosed fraction grows with e while f stays in a narrow band, so
# the protocol tracks the Shannon floor rather than a fixed budget
print("\ndisclosed fraction of the key (A->B only):")
for e in (0.02, 0.05, 0.08, 0.10):
    print(f"  e = {e:.2f}: floor h(e) = {binary_entropy(e):.4f}")
