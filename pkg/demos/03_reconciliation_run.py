"""
One full reconciliation, message by message
===========================================

Runs a complete session (sift, estimate, abort check), corrects the
surviving key with the multi-pass parity protocol, verifies both sides
hold the same string, and compresses what remains.
"""

import numpy as np

from qkdlab.amplify import AmplificationPlan, privacy_amplify, verify_keys
from qkdlab.cascade import CascadeConfig, measured_efficiency, run_cascade
from qkdlab.channel import ChannelParams
from qkdlab.keyrate import binary_entropy
from qkdlab.protocol import run_session

SEED = 20240817

# -- raw exchange and sifting --------------------------------------------

params = ChannelParams(theta=0.05, q=0.03)
session = run_session(40_000, params, seed=SEED)
print(f"raw rounds        {session.n_raw}")
print(f"sifted bits       {session.n_sifted} (+ {session.n_test} spent on the estimate)")
print(f"estimated QBER    {session.qber_est:.5f}")
print(f"true QBER         {session.qber_true:.5f}")
print(f"aborted           {session.aborted}")

# -- interactive error correction ----------------------------------------

result = run_cascade(
    session.alice_key, session.bob_key, session.qber_est, CascadeConfig(seed=SEED)
)
t = result.transcript
mismatch_before = int(np.sum(session.alice_key != session.bob_key))
mismatch_after = int(np.sum(session.alice_key != result.corrected_bob_key))
print(f"\nerrors before     {mismatch_before}")
print(f"errors after      {mismatch_after}")
print(f"corrections       {len(t.corrections)} (pass, position) pairs")
print(f"pass block sizes  {t.pass_sizes}")
print(f"disclosed A->B    {t.leak_ab_bits} bits, B->A {t.leak_ba_bits} bits")
f_measured = measured_efficiency(t, session.qber_true, session.n_sifted)
shannon = session.n_sifted * binary_entropy(session.qber_true)
print(f"efficiency        {t.leak_ab_bits}/{shannon:.0f} = {f_measured:.3f} "
      f"(1 = Shannon floor)")

# -- verification and compression ----------------------------------------

ok = verify_keys(session.alice_key, result.corrected_bob_key, SEED + 1)
print(f"\npolynomial-hash tags agree: {ok}")

plan = AmplificationPlan(
    input_len=session.n_sifted,
    leak_total=t.leak_ab_bits + t.leak_ba_bits + session.n_test,
    entropy_rate=1.0 - binary_entropy(session.qber_est),
)
final = privacy_amplify(session.alice_key, plan, seed=SEED + 2)
print(f"final key length  {plan.output_len} bits "
      f"({plan.output_len / session.n_raw:.3f} per raw round)")
print(f"first final bits  {''.join(str(b) for b in final[:48])}...")
