# # Scaling texts between two reference classes
#
# A text's affinity vector says what share of its words looks like each
# reference class. We build two toy reference texts, estimate the class word
# distributions, and place a few new texts between them.

# %%
import numpy as np

from classaffinity import (
    build_vocabulary,
    count_tokens,
    estimate_affinity,
    estimate_reference,
    tokenize,
)

gov = tokenize(
    "We will protect jobs. Our budget invests in jobs and growth. "
    "Growth brings jobs. The budget is fair and the budget is sound.",
    doc_id="gov",
)
opp = tokenize(
    "This budget cuts services. Cuts hurt families. "
    "Families pay for these cuts. Services are failing and families suffer.",
    doc_id="opp",
)

# %% [markdown]
# The vocabulary keeps words seen at least twice across the references,
# minus stop words. Everything else is ignored when counting.

# %%
vocab = build_vocabulary([gov, opp], min_count=2)
print(vocab.types)

model = estimate_reference({"gov": [count_tokens(gov, vocab)], "opp": [count_tokens(opp, vocab)]}, vocab)
print(np.round(model.probs, 3))

# %% [markdown]
# Each fit returns the affinity vector, a Wald standard error from the
# penalized information, and convergence details.

# %%
texts = {
    "loyal": "Jobs and growth. The budget brings jobs.",
    "critic": "Cuts to services hurt families. Families suffer.",
    "mixed": "The budget cuts services but brings growth and jobs.",
}
for name, raw in texts.items():
    x = count_tokens(tokenize(raw, doc_id=name), vocab)
    fit = estimate_affinity(model, x)
    print(f"{name:7s} theta={np.round(fit.theta, 3)} se={np.round(fit.wald_se_theta, 3)} iterations={fit.iterations}")

# %% [markdown]
# With ``lam=0`` the fit is the unpenalized maximum likelihood estimate and
# can land on the edge of the simplex; the default ``lam=0.5`` keeps every
# share strictly inside.

# %%
x = count_tokens(tokenize(texts["loyal"], doc_id="loyal"), vocab)
print("lam=0  ", np.round(estimate_affinity(model, x, lam=0.0).theta, 4))
print("lam=0.5", np.round(estimate_affinity(model, x, lam=0.5).theta, 4))
