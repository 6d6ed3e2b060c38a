# # Comparator scalers and the length problem
#
# Naive Bayes log-odds grow with text length, so long texts look extreme even
# when their word mix is unremarkable. Affinities and wordscores depend only
# on the word mix. Wordscores turn out to be a first Newton step of the
# affinity fit.

# %%
import numpy as np

from classaffinity import (
    estimate_affinity,
    expected_information,
    naive_bayes_logodds,
    score,
    wordscore_text,
)
from classaffinity.reference import reference_from_counts
from classaffinity.simulate import dirichlet_references, sample_counts

rng = np.random.default_rng(7)
true_P = dirichlet_references(rng, 2, 300)
P = reference_from_counts(np.array([rng.multinomial(40_000, p) for p in true_P], float), 0.5)

# %% [markdown]
# Repeat one text k times. The log-odds scale by k; the affinity does not move.

# %%
x = sample_counts(rng, true_P, [0.55, 0.45], 400)
for k in (1, 2, 5, 10):
    eta = naive_bayes_logodds(P, k * x)
    theta = estimate_affinity(P, k * x, lam=0.0).theta
    print(f"k={k:2d}  log-odds={eta:9.2f}  theta1={theta[0]:.6f}")

# %% [markdown]
# Rescaled wordscores are exactly twice one Fisher scoring step from the
# midpoint, so they track the affinity difference closely for moderate texts.

# %%
raw, rescaled = wordscore_text(P, x)
step = np.linalg.solve(expected_information(P, x.sum(), [0.0]), score(P, x, [0.0], 0.0))[0]
print(f"rescaled wordscore / 2 = {rescaled / 2:.12f}")
print(f"first scoring step     = {step:.12f}")

ws, diff = [], []
for t in rng.uniform(0.35, 0.65, 60):
    xi = sample_counts(rng, true_P, [t, 1 - t], 1500)
    ws.append(wordscore_text(P, xi)[1])
    th = estimate_affinity(P, xi).theta
    diff.append(th[1] - th[0])
print("corr(wordscore, theta2 - theta1) =", round(float(np.corrcoef(ws, diff)[0, 1]), 4))
