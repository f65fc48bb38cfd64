# %% [markdown]
# # Rejection sampling and model screening
#
# Moderated network models are not normalizable for every parameter value,
# so the sampler discards chains that drift too far and restarts them.

# %%
import itertools

import numpy as np

from modnet import MnmModel, SamplerConfig, gibbs_sample, random_mnm, screen_models

# %% [markdown]
# Without interactions every variable is standard normal and almost no
# chain is rejected.

# %%
empty = gibbs_sample(MnmModel.empty(13), 2000, SamplerConfig(seed=1))
print(f"empty model: rejection {empty.rejection_rate:.3f}, sd {empty.data.std(axis=0).mean():.3f}")

# %% [markdown]
# Generated models reject a noticeable share of chains. Screening draws a
# probe sample from each candidate and keeps the best-behaved ones.

# %%
candidates = [random_mnm(s).model for s in range(13)]
kept = screen_models(candidates, n_probe=500, cfg=SamplerConfig(seed=2))
for idx, _, rate in kept:
    print(f"candidate {idx:2d}: rejection {rate:.3f}")

# %% [markdown]
# Strong 3-way interactions make the density improper; every chain then
# diverges and the sampler gives up with a diagnostic.

# %%
bad = MnmModel(5, np.zeros(5), {}, {t: 5.0 for t in itertools.combinations(range(1, 6), 3)}, np.ones(5))
try:
    gibbs_sample(bad, 10, SamplerConfig(max_attempts_per_case=50))
except Exception as exc:
    print(type(exc).__name__, exc)
