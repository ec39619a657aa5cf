"""Orbit sums of monomials: the feature map behind the polynomial baseline."""
import numpy as np

from ginvnet import benchmark_polynomial, generating_candidates, parse_group
from ginvnet.invariants import PolynomialFeatures, is_invariant

z3 = parse_group("Z3")
for p in generating_candidates(z3, max_degree=3):
    print(p.format())

# the Z3 target is not symmetric under swapping its first two variables
pz3 = benchmark_polynomial("PZ3")
print(pz3.format())
x = np.random.default_rng(0).uniform(size=(10, 5))
print("Z3 invariant:", is_invariant(pz3, parse_group("Z3xE2"), x))
print("S3 invariant:", is_invariant(pz3, parse_group("S3xE2"), x))

# all orbit sums up to degree |G| evaluated in one matrix product
feats = PolynomialFeatures(generating_candidates(parse_group("D8")))
print(feats.n_features, "D8 features; first row:", np.round(feats(x[:1, :4])[0, :6], 4))
