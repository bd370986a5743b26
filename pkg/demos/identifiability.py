"""
Two factor models, one covariance
=================================

A three-factor model and a two-factor model can share the same
population covariance. Any procedure that only looks at second moments,
treelets included, cannot tell them apart.
"""

# %%
import numpy as np

from treelets import FactorSpec, build_treelet, example2_pair, population_covariance, trees_match

p = 8
v1 = np.r_[np.ones(4), np.zeros(4)]
v2 = np.r_[np.zeros(4), np.ones(4)]
a, b = example2_pair(v1, v2, c1=0.7, c2=-0.4, factor_vars=(1.0, 1.5, 0.8), sigma=0.5)
print("factors:", a.K, "vs", b.K)

# %%
Ca, Cb = population_covariance(a), population_covariance(b)
print("max |Ca - Cb| =", np.abs(Ca - Cb).max())
print("trees match:", trees_match(build_treelet(Ca), build_treelet(Cb)))

# %%
# Nudging one loading breaks the equivalence, and the check notices.
loadings = b.loadings.copy()
loadings[0, 0] += 0.05
c = FactorSpec(loadings, b.factor_dists, b.noise_sigma)
print("perturbed max diff =", np.abs(Ca - population_covariance(c)).max())
