# %% [markdown]
# # Factor graphs
#
# Three-way interactions do not fit in an ordinary network picture. A
# factor graph gives each interaction its own node, connected to the
# variables it involves.

# %%
from pathlib import Path

from modnet import SamplerConfig, gibbs_sample, random_mnm, standardize
from modnet.estimator import aggregate, fit_nodewise
from modnet.factorgraph import export_dot, to_factor_graph, to_nodewise_factor_graph

truth = random_mnm(4).model
print(export_dot(to_factor_graph(truth, pairwise_as_edge=True)))

# %% [markdown]
# The aggregated estimate hides disagreement between the regressions. The
# nodewise graph keeps one directed edge per regression estimate, pointing
# at the variable that was the response.

# %%
data = standardize(gibbs_sample(truth, 800, SamplerConfig(seed=4)).data)
fits = fit_nodewise(data, (13,))
nodewise = to_nodewise_factor_graph(fits)
for f in nodewise.factor_nodes:
    print(f.id, [(e.target, round(e.weight, 3)) for e in nodewise.incident(f)])

# %%
out = Path("nodewise.dot")
out.write_text(export_dot(nodewise))
print("wrote", out, "- render with: dot -Tpng nodewise.dot -o nodewise.png")
print(export_dot(to_factor_graph(aggregate(fits, "and")))[:400])
