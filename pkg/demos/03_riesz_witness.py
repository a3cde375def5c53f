# %% [markdown]
# Greedy lacunary sets and Riesz products on a finite abelian group.
#
# Starting from a set of characters, a greedy search finds a shift h and a
# set S such that every h + (subset sum of S) stays in the set. The Riesz
# product over S is then a sum of 2^|S| distinct characters whose l2 norm is
# much larger than its l1 norm once the phases are chosen well.

# %%
import math

import numpy as np

from fourier_sampling.designs import lowest_block
from fourier_sampling.witness import (
    GroupSpec, greedy_select, phase_search, riesz_product, theorem2_witness, witness_ratio,
)

G = GroupSpec((1024,))
lam = np.arange(1024) < 512
res = greedy_select(G, lam, delta=0.5)
print("S =", [int(s[0]) for s in res.S], " h =", res.h[0], " |Lambda_j| =", res.Lambda_sizes)

# %%
search = phase_search(G, res.S, res.h, trials=4000, seed=1)
w = riesz_product(G, res.S, res.h, search.phases)
n = res.n
print(f"l2^2 = {w.norm(2) ** 2:.1f} (2^n = {2 ** n}),  mean l1 {search.mean_ell1:.3f} vs (4/pi)^n {(4 / math.pi) ** n:.3f}")
for p in (1.25, 1.5, 2.0):
    print(f"  l_p / l_1 at p={p}: {witness_ratio(w, p):.3f}")

# %% [markdown]
# The same construction on the trigonometric side: a polynomial of degree
# 2^k that vanishes on every sampled frequency yet has a large L2/L1 ratio.

# %%
for k in (4, 5, 6, 7):
    poly, rep = theorem2_witness(k, 1, lowest_block((2**k - 1) // 4, 1), trials=2000, seed=0)
    print(f"k={k}: n={rep.n}, vanishing residual {rep.vanishing_residual:.0e}, L2/L1 ratio {rep.ratios[2.0]:.3f}")
