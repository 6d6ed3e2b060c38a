"""Exit criteria for the build; each test prints one PASS/FAIL line in the summary."""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

from classaffinity.affinity import (
    contrast_basis,
    estimate_affinity,
    expected_information,
    observed_information,
    score,
)
from classaffinity.baselines import naive_bayes_logodds, wordscore_text, wordscore_vector
from classaffinity.bootstrap import bootstrap_corpus
from classaffinity.corpus import CountVector, Document, Vocabulary
from classaffinity.diagnostics import influence, influence_exact, keyness_g2
from classaffinity.reference import reference_from_counts
from classaffinity.simulate import dirichlet_references, sample_document, synthetic_vocabulary
from oracles import fd_gradient, fd_hessian, g2_by_hand, grid_argmax_k2, objective, random_instance


def _estimated_references(rng, V=200, ref_tokens=50_000):
    true_P = dirichlet_references(rng, 2, V)
    counts = np.array([rng.multinomial(ref_tokens, p) for p in true_P], dtype=float)
    return true_P, reference_from_counts(counts, 0.5)


def test_c1_generative_recovery(report):
    rng = np.random.default_rng(101)
    true_P, P_hat = _estimated_references(rng)
    thetas = np.linspace(0.1, 0.9, 100)
    start = time.perf_counter()
    covered = 0
    for t in thetas:
        x = rng.multinomial(2000, np.array([t, 1 - t]) @ true_P).astype(float)
        fit = estimate_affinity(P_hat, x, lam=0.5)
        covered += abs(fit.theta[0] - t) <= 3 * fit.wald_se_theta[0]
    elapsed = time.perf_counter() - start
    rate = covered / len(thetas)
    report(1, rate >= 0.85 and elapsed < 10, f"generative recovery: {rate:.0%} within 3 Wald SE (need >= 85%), {elapsed:.2f}s (< 10s)")


def test_c2_grid_oracle_equivalence(report):
    rng = np.random.default_rng(102)
    worst, max_it = 0.0, 0
    for i in range(50):
        V = int(rng.integers(2, 11))
        P, x, _ = random_instance(rng, 2, V, int(rng.integers(1, 80)))
        lam = 0.5 if i % 2 == 0 else 0.0
        fit = estimate_affinity(P, x, lam=lam)
        b_grid, _, _ = grid_argmax_k2(P, x, lam)
        worst = max(worst, abs(fit.beta[0] - b_grid))
        max_it = max(max_it, fit.iterations if fit.converged else 10**6)
    report(2, worst <= 1e-4 and max_it <= 20, f"grid oracle: max |beta - grid| = {worst:.1e} (<= 1e-4), max iterations {max_it} (<= 20)")


def test_c3_derivative_checks(report):
    rng = np.random.default_rng(103)
    worst_u = worst_h = 0.0
    for i in range(200):
        K = 2 + i % 3
        lam = 0.5 * ((i // 3) % 2)
        P, x, theta = random_instance(rng, K, int(rng.integers(3, 30)), int(rng.integers(5, 300)))
        beta = np.linalg.lstsq(contrast_basis(K).contrast, 0.8 * theta + 0.2 / K - 1.0 / K, rcond=None)[0]
        f = lambda b: objective(P, x, b, lam)  # noqa: E731
        g = fd_gradient(f, beta)
        Hfd = -fd_hessian(f, beta)
        worst_u = max(worst_u, np.max(np.abs(score(P, x, beta, lam) - g)) / max(1.0, np.max(np.abs(g))))
        worst_h = max(worst_h, np.max(np.abs(observed_information(P, x, beta, lam) - Hfd)) / max(1.0, np.max(np.abs(Hfd))))
    report(3, worst_u <= 1e-6 and worst_h <= 1e-5, f"finite differences: score rel err {worst_u:.1e} (<= 1e-6), information rel err {worst_h:.1e} (<= 1e-5)")


def test_c4_dictionary_limit(report):
    rng = np.random.default_rng(104)
    worst = 0.0
    for i in range(50):
        K = 2 + i % 4
        V = int(rng.integers(2 * K, 40))
        ref_counts = np.zeros((K, V))
        groups = np.array_split(rng.permutation(V), K)
        for k, g in enumerate(groups):
            ref_counts[k, g] = rng.integers(1, 50, len(g))
        P = reference_from_counts(ref_counts, alpha=0.0)
        x = np.zeros(V)
        for g in groups:
            x[g] = rng.integers(0, 6, len(g))
            x[g[0]] += 1
        fit = estimate_affinity(P, x, lam=0.0)
        rates = np.array([x[g].sum() for g in groups]) / x.sum()
        worst = max(worst, np.max(np.abs(fit.theta - rates)))
    report(4, worst <= 1e-10, f"disjoint supports: max |theta - n_k/n| = {worst:.1e} (<= 1e-10)")


def test_c5_wordscores_identity(report):
    rng = np.random.default_rng(105)
    worst_id = worst_anti = 0.0
    for _ in range(500):
        P, x, _ = random_instance(rng, 2, int(rng.integers(2, 100)), int(rng.integers(1, 1000)), ref_tokens=int(rng.integers(50, 5000)))
        _, mv = wordscore_text(P, x)
        step = np.linalg.solve(expected_information(P, x.sum(), [0.0]), score(P, x, [0.0], 0.0))[0]
        worst_id = max(worst_id, abs(mv / 2 - step))
        s = wordscore_vector(P)
        worst_anti = max(worst_anti, abs(s @ P[0] + s @ P[1]))
    true_P, P_hat = _estimated_references(rng)
    mv_scores, diffs = [], []
    for t in rng.uniform(0.35, 0.65, 100):
        x = rng.multinomial(2000, np.array([t, 1 - t]) @ true_P).astype(float)
        fit = estimate_affinity(P_hat, x, lam=0.5)
        mv_scores.append(wordscore_text(P_hat, x)[1])
        diffs.append(fit.theta[1] - fit.theta[0])
    r = np.corrcoef(mv_scores, diffs)[0, 1]
    ok = worst_id <= 1e-12 and worst_anti <= 1e-12 and r > 0.99
    report(5, ok, f"wordscores: identity err {worst_id:.1e}, t1+t2 err {worst_anti:.1e} (<= 1e-12), corr {r:.4f} (> 0.99)")


def test_c6_length_pathology(report):
    rng = np.random.default_rng(106)
    worst_nb = worst_theta = 0.0
    for _ in range(50):
        P, x, _ = random_instance(rng, 2, 40, 300, ref_tokens=2000)
        eta = naive_bayes_logodds(P, x)
        base = estimate_affinity(P, x, lam=0.0)
        for k in (2, 5, 10):
            worst_nb = max(worst_nb, abs(naive_bayes_logodds(P, k * x) - k * eta) / max(1.0, abs(k * eta)))
            worst_theta = max(worst_theta, np.max(np.abs(estimate_affinity(P, k * x, lam=0.0).theta - base.theta)))
    ok = worst_nb <= 1e-13 and worst_theta <= 1e-8
    report(6, ok, f"length: |eta(kx) - k eta(x)| rel {worst_nb:.1e} (rounding only), max |theta(kx) - theta(x)| {worst_theta:.1e} (<= 1e-8)")


def test_c7_influence_fidelity(report):
    rng = np.random.default_rng(107)
    n, V, trials = 500, 50, 500
    good = 0
    worst_sum = 0.0
    disagreements = 0
    for _ in range(trials):
        P = rng.dirichlet(np.ones(V), size=2)
        x = rng.multinomial(n, rng.dirichlet(np.ones(2)) @ P).astype(float)
        fit = estimate_affinity(P, x, lam=0.5)
        entries = influence(P, x, fit)
        worst_sum = max(worst_sum, max(abs(e.delta.sum()) for e in entries))
        eligible = [e for e in entries if e.x_v <= 0.05 * n]
        e = eligible[int(rng.integers(len(eligible)))]
        exact = influence_exact(P, x, int(e.word), 0.5)
        d_exact = 0.5 * np.abs(exact).sum()
        good += abs(e.d - d_exact) <= 0.10 * d_exact
        if np.abs(exact).sum() > 1e-6 and np.argmax(exact) != np.argmax(e.delta):
            disagreements += 1
    rate = good / trials
    ok = rate >= 0.95 and worst_sum <= 1e-12 and disagreements == 0
    report(7, ok, f"influence: {rate:.1%} within 10% of exact refit (>= 95%), sum(delta) {worst_sum:.1e}, direction mismatches {disagreements}")


def _bootstrap_corpus(rng, repeat=1):
    V = 150
    vocab = synthetic_vocabulary(V)
    P = dirichlet_references(rng, 2, V)
    refs = {
        "gov": [sample_document(rng, P, [1, 0], 1000, 25, vocab, "gov")],
        "opp": [sample_document(rng, P, [0, 1], 600, 25, vocab, "opp1"), sample_document(rng, P, [0, 1], 400, 25, vocab, "opp2")],
    }
    docs = [
        sample_document(rng, P, [t, 1 - t], 40, 25 // repeat, vocab, f"d{i}", repeat=repeat)
        for i, t in enumerate(np.linspace(0.2, 0.8, 20))
    ]
    return refs, docs, vocab


def test_c8_bootstrap_sanity(report):
    vocab = Vocabulary(("a", "b", "c"))
    refs = {"g": [Document("g", (("a", "a", "b"),) * 5)], "o": [Document("o", (("c", "b", "c"),) * 8)]}
    flat = bootstrap_corpus(refs, [Document("d", (("a", "c", "b", "c"),) * 9)], vocab, b=30, seed=3)[0]
    zero_se = bool(np.all(flat.se_theta == 0.0))

    rng = np.random.default_rng(108)
    refs, docs, vocab = _bootstrap_corpus(rng)
    start = time.perf_counter()
    serial = bootstrap_corpus(refs, docs, vocab, b=100, seed=42)
    elapsed = time.perf_counter() - start
    threaded = bootstrap_corpus(refs, docs, vocab, b=100, seed=42, n_jobs=4)
    deterministic = all(a.replicates.tobytes() == b.replicates.tobytes() for a, b in zip(serial, threaded))
    again = bootstrap_corpus(refs, docs[:3], vocab, b=100, seed=42)
    deterministic &= all(a.replicates.tobytes() == b.replicates.tobytes() for a, b in zip(serial, again))

    ratios = np.array([r.ratio[0] for r in serial])
    in_band = float(np.mean((ratios >= 0.5) & (ratios <= 2.0)))
    dup_refs, dup_docs, dup_vocab = _bootstrap_corpus(np.random.default_rng(108), repeat=2)
    dup_ratio = float(np.mean([r.ratio[0] for r in bootstrap_corpus(dup_refs, dup_docs, dup_vocab, b=100, seed=42)]))
    ok = zero_se and deterministic and in_band >= 0.9 and dup_ratio > 1 and elapsed < 30
    report(
        8,
        ok,
        f"bootstrap: zero SE {zero_se}, deterministic {deterministic}, iid ratio in [0.5,2] for {in_band:.0%} (>= 90%), "
        f"mean ratio iid {ratios.mean():.2f} vs duplicated {dup_ratio:.2f} (> 1), B=100 x 20 docs {elapsed:.1f}s (< 30s)",
    )


def test_c9_keyness(report):
    rng = np.random.default_rng(109)
    vocab = Vocabulary(("x", "y", "z"))
    a = CountVector("a", {0: 7, 1: 21, 2: 42}, 70)
    b = CountVector("b", {0: 3, 1: 9, 2: 18}, 30)
    zero = max(r.g2 for r in keyness_g2(a, b, vocab))
    worst = 0.0
    for _ in range(20):
        ca, cb = rng.integers(0, 60, 2)
        ra, rb = rng.integers(1, 200, 2)
        A = CountVector("a", {k: int(v) for k, v in ((0, ca), (1, ra)) if v > 0}, int(ca + ra))
        B = CountVector("b", {k: int(v) for k, v in ((0, cb), (1, rb)) if v > 0}, int(cb + rb))
        g2 = keyness_g2(A, B, vocab)[0].g2
        worst = max(worst, abs(g2 - g2_by_hand(ca, cb, ca + ra, cb + rb)))
    report(9, zero <= 1e-10 and worst <= 1e-10, f"keyness: G2 on equal rates {zero:.1e}, max oracle error {worst:.1e} (<= 1e-10)")


DAIL = os.environ.get("CLASSAFFINITY_DAIL_DIR")
DAIL_GOV = os.environ.get("CLASSAFFINITY_DAIL_GOV", "gov")


def _read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _ranking_check(root: Path, workdir: Path, gov: str) -> tuple[int, bool, bool]:
    """Run fit and scale through the CLI; return (n scaled, leaders extreme, medians ordered).

    ``refs.jsonl`` holds the leadership speeches with a ``class`` field and
    ``docs.jsonl`` every speech, also labelled by ``class``.
    """
    from classaffinity.cli import main

    model, out = workdir / "model.json", workdir / "fits.json"
    assert main(["fit", "--refs", str(root / "refs.jsonl"), "--out", str(model)]) == 0
    assert main(["scale", "--model", str(model), "--docs", str(root / "docs.jsonl"), "--out", str(out)]) == 0
    score = {r["doc_id"]: r[f"theta_{gov}"] for r in json.loads(out.read_text())}
    refs, docs = _read_jsonl(root / "refs.jsonl"), _read_jsonl(root / "docs.jsonl")
    extremes = True
    for label in {r["class"] for r in refs}:
        members = [score[d["id"]] for d in docs if d["class"] == label]
        leaders = [score[r["id"]] for r in refs if r["class"] == label]
        extremes &= max(leaders) >= max(members) if label == gov else min(leaders) <= min(members)
    gov_med = np.median([score[d["id"]] for d in docs if d["class"] == gov])
    opp_med = np.median([score[d["id"]] for d in docs if d["class"] != gov])
    return len(score), bool(extremes), bool(gov_med > opp_med)


def test_ranking_harness_on_synthetic_debate(tmp_path):
    rng = np.random.default_rng(110)
    V = 120
    vocab = synthetic_vocabulary(V)
    P = dirichlet_references(rng, 2, V, 0.3)
    rows = [("lead_g", "gov", 0.97), ("lead_o1", "opp", 0.03), ("lead_o2", "opp", 0.05)]
    rows += [(f"g{i}", "gov", t) for i, t in enumerate(rng.uniform(0.55, 0.85, 10))]
    rows += [(f"o{i}", "opp", t) for i, t in enumerate(rng.uniform(0.15, 0.45, 10))]
    records = []
    for doc_id, label, t in rows:
        doc = sample_document(rng, P, [t, 1 - t], 30, 20, vocab, doc_id)
        records.append({"id": doc_id, "class": label, "sentences": [list(s) for s in doc.sentences]})
    lines = lambda recs: "".join(json.dumps(r) + "\n" for r in recs)  # noqa: E731
    (tmp_path / "refs.jsonl").write_text(lines(records[:3]))
    (tmp_path / "docs.jsonl").write_text(lines(records))
    assert _ranking_check(tmp_path, tmp_path, "gov") == (len(rows), True, True)


@pytest.mark.skipif(not DAIL, reason="set CLASSAFFINITY_DAIL_DIR to the 1991 confidence-debate corpus to run")
def test_c10_debate_reproduction(report, tmp_path):
    n, extremes, ordered = _ranking_check(Path(DAIL), tmp_path, DAIL_GOV)
    report(10, n == 58 and extremes and ordered, f"debate corpus: {n} speeches scaled (58), leaders extreme {extremes}, medians ordered {ordered}")
