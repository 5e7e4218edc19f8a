"""
Post-processing cost vs a one-shot prediction
=============================================

Times the interactive corrector and the trained network's forward pass
across key sizes, fits log-log slopes, and evaluates the calibrated
polynomial cost model that stands in for conventional optimization.
"""

from qkdlab import autoencoder, benchmarks

# a fresh (untrained) model times identically; inference cost does not
# depend on the weights
model = autoencoder.init_model([3, 32, 8, 32, 2], seed=0)

rows, summary = benchmarks.bench([10_000, 100_000, 1_000_000], model, trials=3, seed=0)

print("   n        cascade (s)   inference (s)  traditional (s)")
for row in rows:
    print(f"  {row.n:>7}   {row.cascade_seconds:.5f}       "
          f"{row.inference_seconds:.7f}      {row.traditional_model_seconds:.5f}")

print(f"\ncascade slope      {summary['cascade_slope']:.3f}  (linear-ish protocol)")
print(f"inference slope    {summary['inference_slope']:.3f}  (one batch of n rows)")
print(f"traditional slope  {summary['traditional_slope']:.3f}  (calibrated polynomial)")
ratio = rows[-1].traditional_model_seconds / rows[-1].inference_seconds
print(f"\ntraditional / inference at n = {rows[-1].n}: {ratio:.0f}x")

# the calibrated constants come from small exact solves, so the model
# extrapolates measured work rather than inventing wall-clock numbers
cal = benchmarks.calibrate_cost_model(seed=0)
print(f"\ncalibrated cost constants: c1 {cal[0]:.2e}  c2 {cal[1]:.2e}  c3 {cal[2]:.2e}")
for n in (1e4, 1e5, 1e6):
    print(f"  projected traditional time at n = {n:>9.0f}: "
          f"{benchmarks.traditional_seconds(int(n), cal):.3f} s")
