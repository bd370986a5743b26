"""
Errors-in-variables regression benchmark
========================================

Y depends on a latent Z. We only see p noisy copies of cZ. We compare
the oracle predictor with PCA regression and treelet regression over a
grid of signal strengths c.
"""

# %%
import math

from treelets import EivSpec, oracle_mse
from treelets.eiv import bayes_dominance, cell_lookup, default_c_grid, sweep_cp

p = 30
grid = default_c_grid(p)
spec = EivSpec(p, gamma=1.0, c=0.0)
for c in grid:
    s = EivSpec(p, 1.0, c)
    print(f"c*sqrt(p)={c * math.sqrt(p):5.2f}  oracle MSE {oracle_mse(s):.4f}")

# %%
# A small sweep. The seeds are shared across the grid so cells are comparable.
rows = sweep_cp(spec, grid, n_train=200, n_test=1000, replicates=8, seed=1)
cells = cell_lookup(rows)
for c in grid:
    line = " ".join(f"{m}{'/' + md if md else ''}={cells[c, m, md].mse_mean:.3f}"
                    for m, md in [("oracle", ""), ("pca", ""),
                                  ("treelet", "single_level"), ("treelet", "union")])
    print(f"{c * math.sqrt(p):5.2f}  {line}")

# %%
# No method should beat the oracle beyond Monte Carlo noise.
print("violations:", bayes_dominance(rows))
