"""
Dyadic blocks and Besov norms
=============================

The smooth dyadic partition, block tables, homogeneous Besov norms with a
low/high split, and the paraproduct decomposition of a product.
"""
import numpy as np

from micropolar import littlewood_paley as lp
from micropolar import spectral
from micropolar.littlewood_paley import BesovSpec, DyadicPartition
from micropolar.spectral import Grid3

grid = Grid3(32)
part = DyadicPartition(grid)
print(f"blocks j = {part.j_min} .. {part.j_max}")

# %% The blocks sum to one away from the zero mode
s = part.partition_sum()
s[0, 0, 0] = 1.0
print("partition of unity defect:", np.max(np.abs(s - 1)))

# %% Block table of a rough random field (white noise, mean removed)
rng = np.random.default_rng(1)
f = spectral.random_real_field(grid, rng)
f[0, 0, 0] = 0.0
print(f"{'j':>3} {'||D_j f||_2':>12} {'2^(js)*..':>12}")
for row in lp.block_table(part, f, BesovSpec(-1.5)):
    print(f"{row['j']:>3} {row['block_Lp']:12.5f} {row['weighted']:12.5f}")

# %% Besov norms with a frequency cut at j0 = 1
spec = BesovSpec(0.5, 2, 1, cutoff_j0=1)
print("B^0.5_{2,1}: all", lp.besov_norm(part, f, spec),
      " low", lp.besov_norm(part, f, spec, "low"), " high", lp.besov_norm(part, f, spec, "high"))

# %% Paraproducts: T_a b + R(a, b) + T_b a equals the dealiased product
a = spectral.dealias(grid, f)
b = spectral.dealias(grid, spectral.random_real_field(grid, rng))
b[0, 0, 0] = 0.0
t_ab, rem, t_ba = lp.bony_decompose(part, a, b)
ref = lp.dealiased_product(grid, a, b)
print("Bony identity defect:", np.max(np.abs(t_ab + rem + t_ba - ref)) / np.max(np.abs(ref)))
for name, piece in (("T_a b", t_ab), ("R(a,b)", rem), ("T_b a", t_ba)):
    print(f"  ||{name}||_2 = {spectral.lp_norm(piece, 2):.4f}")

# %% Bernstein: on block j, ||grad f|| is comparable with 2^j ||f||
for j in range(0, 4):
    blk = part.weight(j) * spectral.random_real_field(grid, rng)
    print(f"j={j}: ratio p=2 {lp.bernstein_ratio(part, blk, j, 2):.3f}, p=inf {lp.bernstein_ratio(part, blk, j, np.inf):.3f}")
