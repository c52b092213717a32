"""
Coded computation: encode, compute on shares, decode
====================================================

A tensor is compressed K-fold along its coding axis into N worker shares,
an arbitrary function is applied share-by-share, and decoding from any
subset of results approximates the function applied to the original
slices.  The error shrinks as more workers answer, which is the straggler
tolerance of the scheme.
"""

import numpy as np

from pbacc import NoiseSpec, decode, encode, make_plan, roundtrip_error

rng = np.random.default_rng(42)

# %% A basic round trip with no noise.

plan = make_plan(K=4, T=0, N=64)
x = np.sort(rng.normal(0.0, 1.0, size=16))
shares, _ = encode(x, plan, NoiseSpec(0.0, 0, 0))
print(f"encoded {x.size} values into {len(shares)} shares of "
      f"{shares[0].payload.size} values each")

decoded = decode([(s.beta, s.payload) for s in shares], plan, out_extent=16)
print(f"identity round trip, all workers: max error {np.max(np.abs(decoded - x)):.2e}")

# %% Straggler tolerance: decode from the fastest subset only.
# Mean error over random subsets decays as the subset grows.

for fn_name, fn in (("identity", lambda v: v),
                    ("square", lambda v: v * v),
                    ("relu", lambda v: np.maximum(v, 0.0))):
    row = []
    for n in (16, 32, 64):
        errs = [roundtrip_error(x, fn, plan, NoiseSpec(0.0, 0, 0),
                                sorted(np.random.default_rng(rep).choice(64, n, replace=False)))
                for rep in range(20)]
        row.append(np.mean(errs))
    print(f"{fn_name:9s} mean error for n=16/32/64: "
          + "  ".join(f"{e:.2e}" for e in row))

# %% Privacy padding.
# T Gaussian noise blocks ride along at the shifted nodes.  They blur every
# share but decode out again (up to an approximation error that grows with
# the noise scale and shrinks as the noise nodes move away from the data).

x4 = np.array([1.0, -0.5, 2.0, 0.7])
for shift in (-2.0, -10.0):
    plan_noise = make_plan(K=2, T=2, N=32, shift=shift)
    err = roundtrip_error(x4, lambda v: v, plan_noise,
                          NoiseSpec(sigma_n=0.5, T=2, seed=3), subset=range(32))
    print(f"noisy identity round trip, shift {shift:+.0f}: error {err:.2e}")

# %% Noise makes shares look random.
# The same input encoded with two different seeds gives unrelated shares.

plan_noise = make_plan(K=2, T=8, N=32)
a, _ = encode(x4, plan_noise, NoiseSpec(sigma_n=2.0, T=8, seed=1))
b, _ = encode(x4, plan_noise, NoiseSpec(sigma_n=2.0, T=8, seed=2))
print("share 0 with seed 1:", np.round(a[0].payload, 3))
print("share 0 with seed 2:", np.round(b[0].payload, 3))
