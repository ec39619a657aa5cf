"""Build a few permutation groups and watch the sum-product layer ignore their action."""
import numpy as np

from ginvnet import Tensor, act_on_rows, parse_group, sigma_pi
from ginvnet.layers import Dense, f_in_forward

# a group is generated once and kept in a fixed element order
d8 = parse_group("D8")  # rotations and reflections of a square's corners
print(d8, "elements:")
for p in d8:
    print("  ", p.cycle_notation())

# products of groups act on disjoint blocks of rows
print(parse_group("S3xS2"))

# one shared row network gives an n x n x n_mid tensor: entry [i, j] is head j applied to row i
rng = np.random.default_rng(0)
phi = Dense(1, 4 * 3, True, rng, np.float64)
phi.b.data[:] = rng.normal(size=12)  # zero biases would make f_in nearly rank one for small inputs
x = rng.normal(scale=2.0, size=(4, 1))
feats = f_in_forward(phi, Tensor(x), n=4, n_mid=3)
print("f_in shape:", feats.shape)

# summing products along every permuted diagonal gives a D8-invariant vector
base = sigma_pi(feats, d8).data
for g in d8:
    moved = sigma_pi(f_in_forward(phi, Tensor(act_on_rows(g, x)), 4, 3), d8).data
    assert np.allclose(moved, base)
print("invariant latent:", np.round(base, 5))

# a rotation-invariant layer is not reflection invariant
z4 = parse_group("Z4")
flip = [g for g in d8 if g not in z4][0]
a = sigma_pi(feats, z4).data
b = sigma_pi(f_in_forward(phi, Tensor(act_on_rows(flip, x)), 4, 3), z4).data
print("Z4 latent under the reflection", flip.cycle_notation(), "changes by",
      f"{np.abs(a - b).max() / np.abs(a).max():.2%}")
