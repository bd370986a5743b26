"""
Growing features hierarchically
===============================

Start from the raw columns, keep the K best, build products (or local
PCA pairs) of the survivors and repeat while held-out risk improves.
"""

# %%
import numpy as np

from treelets import SelectorConfig, run_hierarchical

rng = np.random.default_rng(0)
X = rng.standard_normal((500, 20))
y = X[:, 0] * X[:, 1] + 0.1 * rng.standard_normal(500)

# %%
# With the default capacity K = ceil(sqrt(n)) the interaction shows up in
# the first expansion.
res = run_hierarchical(X, y, "product", SelectorConfig(), seed=0)
for g in res.trace:
    print(g["m"], g["dict_size"], f"{g['holdout_mse']:.4f}")
print("best generation:", res.best_generation)
print([e for e in res.expressions if e.startswith("(")])

# %%
# Local PCA on pairs suits block-correlated inputs.
z = rng.standard_normal(400)
B = np.column_stack([z + 0.3 * rng.standard_normal(400) for _ in range(3)]
                    + [rng.standard_normal(400) for _ in range(3)])
yb = B[:, :3].sum(axis=1) + 0.5 * rng.standard_normal(400)
res = run_hierarchical(B, yb, "pair_pca", SelectorConfig(K=2, selector="forward_stepwise"), seed=0)
print(res.expressions, np.round(res.coef, 3))
