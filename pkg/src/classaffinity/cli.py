"""Command-line entry point: fit, scale, influence, bootstrap, compare.

Exit status is 0 on success, 2 for bad input, 3 when a fit fails to converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .affinity import DEFAULT_LAMBDA, estimate_affinity
from .baselines import (
    DictionaryScorer,
    dictionary_score,
    maxmargin_score,
    naive_bayes_logodds,
    wordscore_text,
)
from .bootstrap import DEFAULT_B, bootstrap_corpus
from .corpus import build_vocabulary, count_tokens, default_stopwords, load_stopwords, read_jsonl
from .diagnostics import aggregate_influence, influence
from .reference import DEFAULT_ALPHA, estimate_reference, load_model, save_model

EXIT_INPUT = 2
EXIT_NUMERIC = 3

COMPARE_COLUMNS = [
    "doc_id",
    "affinity_theta1",
    "nb_logodds",
    "dict_score",
    "wordscore_raw",
    "wordscore_mv",
    "maxmargin",
]


class InputError(Exception):
    pass


def _fmt(value, digits: int) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "NA"
        return format(float(value), f".{digits}g")
    return str(value)


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return None if math.isnan(value) or math.isinf(value) else value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def write_table(rows: list[dict], columns: list[str], path: str | None, fmt: str, digits: int) -> None:
    if fmt == "json":
        text = json.dumps([{c: _jsonable(r.get(c)) for c in columns} for r in rows], indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c), digits) for c in columns])
        text = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _format_for(args, path: str | None) -> str:
    if getattr(args, "format", None):
        return args.format
    return "json" if path and path.endswith(".json") else "csv"


def _stopwords(args) -> frozenset:
    if args.no_stopwords:
        return frozenset()
    if args.stopwords:
        return load_stopwords(args.stopwords)
    return default_stopwords()


def _load_refs(path: str):
    docs, records = read_jsonl(path)
    groups: dict[str, list] = {}
    for doc, rec in zip(docs, records):
        if "class" not in rec:
            raise InputError(f"reference document {doc.id!r} has no 'class' field")
        groups.setdefault(str(rec["class"]), []).append(doc)
    if len(groups) < 2:
        raise InputError("need reference documents from at least two classes")
    return groups


def _map(fn, items, jobs: int):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def cmd_fit(args) -> int:
    groups = _load_refs(args.refs)
    vocab = build_vocabulary(
        [d for docs in groups.values() for d in docs], args.min_count, _stopwords(args)
    )
    counts = {k: [count_tokens(d, vocab) for d in docs] for k, docs in groups.items()}
    model = estimate_reference(counts, vocab, args.alpha)
    save_model(model, args.out)
    print(f"vocabulary: {len(vocab)} types", file=sys.stderr)
    for label, total in zip(model.class_labels, model.token_totals):
        print(f"class {label}: {total} tokens", file=sys.stderr)
    return 0


def _fit_rows(model, docs, lam: float, jobs: int):
    def one(doc):
        x = count_tokens(doc, model.vocab)
        row = {"doc_id": doc.id, "n_tokens": x.total, "flag": ""}
        if x.total == 0 and lam == 0:
            row["flag"] = "empty"
            return row, None, x
        fit = estimate_affinity(model, x, lam=lam)
        for k, label in enumerate(model.class_labels):
            row[f"theta_{label}"] = fit.theta[k]
            row[f"se_{label}"] = fit.wald_se_theta[k]
        for j, b in enumerate(fit.beta):
            row[f"beta_{j + 1}"] = b
        row.update(
            loglik=fit.loglik,
            penalized_loglik=fit.penalized_loglik,
            iterations=fit.iterations,
            converged=fit.converged,
        )
        if not fit.converged:
            row["flag"] = "not_converged"
        elif fit.active:
            row["flag"] = "boundary"
        return row, fit, x

    return _map(one, docs, jobs)


def cmd_scale(args) -> int:
    model = load_model(args.model)
    docs, _ = read_jsonl(args.docs)
    results = _fit_rows(model, docs, args.lam, args.jobs)
    labels = model.class_labels
    columns = (
        ["doc_id", "n_tokens"]
        + [f"theta_{k}" for k in labels]
        + [f"beta_{j + 1}" for j in range(len(labels) - 1)]
        + ["loglik", "penalized_loglik", "iterations", "converged"]
        + [f"se_{k}" for k in labels]
        + ["flag"]
    )
    write_table([r for r, _, _ in results], columns, args.out, _format_for(args, args.out), args.digits)
    bad = any(fit is not None and not fit.converged for _, fit, _ in results)
    return EXIT_NUMERIC if bad else 0


def cmd_influence(args) -> int:
    model = load_model(args.model)
    docs, _ = read_jsonl(args.docs)
    results = _fit_rows(model, docs, args.lam, args.jobs)
    scale = 100.0 if args.x100 else 1.0
    entries, rows = [], []
    for _, fit, x in results:
        if fit is None or not fit.converged or fit.active:
            continue
        es = influence(model, x, fit, args.lam)
        entries.extend(es)
        for e in es:
            rows.append(
                {"doc_id": e.doc_id, "word": e.word, "count": e.x_v, "d": e.d * scale, "direction": e.direction}
            )
    write_table(rows, ["doc_id", "word", "count", "d", "direction"], args.out_entries, "csv", args.digits)
    summary = [
        {
            "word": s.word,
            "direction": s.direction,
            "n_docs": s.n_docs,
            "median_d": s.median_d * scale,
            "max_d": s.max_d * scale,
        }
        for s in aggregate_influence(entries)
    ]
    write_table(summary, ["word", "direction", "n_docs", "median_d", "max_d"], args.out_summary, "csv", args.digits)
    return 0


def cmd_bootstrap(args) -> int:
    if args.b < 2:
        raise InputError("--b must be at least 2")
    groups = _load_refs(args.refs)
    vocab = build_vocabulary(
        [d for docs in groups.values() for d in docs], args.min_count, _stopwords(args)
    )
    docs, _ = read_jsonl(args.docs)
    results = bootstrap_corpus(groups, docs, vocab, args.alpha, args.lam, args.b, args.seed, args.jobs)
    rows, reps = [], []
    for res in results:
        for k, label in enumerate(res.class_labels):
            rows.append(
                {
                    "doc_id": res.doc_id,
                    "class": label,
                    "theta_hat": res.theta_hat[k],
                    "boot_se": res.se_theta[k],
                    "wald_se": res.wald_se_theta[k],
                    "ratio": res.ratio[k],
                    "b_converged": res.n_converged,
                    "seed": res.seed,
                }
            )
        for r, theta in enumerate(res.replicates):
            rep = {"doc_id": res.doc_id, "replicate": r}
            rep.update({f"theta_{label}": theta[k] for k, label in enumerate(res.class_labels)})
            reps.append(rep)
    cols = ["doc_id", "class", "theta_hat", "boot_se", "wald_se", "ratio", "b_converged", "seed"]
    write_table(rows, cols, args.out, _format_for(args, args.out), args.digits)
    if args.replicates_out:
        rep_cols = ["doc_id", "replicate"] + [f"theta_{k}" for k in results[0].class_labels] if results else []
        write_table(reps, rep_cols, args.replicates_out, "csv", args.digits)
    return EXIT_NUMERIC if any(r.n_converged < 2 for r in results) else 0


def correlation_matrix(rows: list[dict], columns: list[str]) -> dict:
    """Pairwise Pearson correlations; None where a column is constant or incomplete."""
    data = {c: np.array([r[c] for r in rows], dtype=float) for c in columns}
    out: dict = {}
    for a in columns:
        out[a] = {}
        for b in columns:
            xa, xb = data[a], data[b]
            if len(xa) < 2 or np.isnan(xa).any() or np.isnan(xb).any() or np.ptp(xa) == 0 or np.ptp(xb) == 0:
                out[a][b] = None
            else:
                out[a][b] = float(np.corrcoef(xa, xb)[0, 1])
    return out


def cmd_compare(args) -> int:
    model = load_model(args.model)
    if model.n_classes != 2:
        raise InputError("compare needs a two-class model")
    docs, _ = read_jsonl(args.docs)
    scorer = None
    if args.dictionary:
        lists = json.loads(Path(args.dictionary).read_text(encoding="utf-8"))
        scorer = DictionaryScorer.from_lists(lists.get("positive", []), lists.get("negative", []))
    rows = []
    for doc in docs:
        x = count_tokens(doc, model.vocab)
        row = {"doc_id": doc.id}
        if x.total == 0:
            row.update({c: float("nan") for c in COMPARE_COLUMNS[1:]})
            rows.append(row)
            continue
        fit = estimate_affinity(model, x, lam=args.lam)
        raw, mv = wordscore_text(model, x)
        row.update(
            affinity_theta1=fit.theta[0],
            nb_logodds=naive_bayes_logodds(model, x),
            dict_score=dictionary_score(scorer, x, model.vocab) if scorer else float("nan"),
            wordscore_raw=raw,
            wordscore_mv=mv,
            maxmargin=maxmargin_score(model, x),
        )
        rows.append(row)
    write_table(rows, COMPARE_COLUMNS, args.out, _format_for(args, args.out), args.digits)
    corr = correlation_matrix(rows, COMPARE_COLUMNS[1:])
    corr_path = args.out_corr or (str(Path(args.out).with_suffix("")) + ".corr.json" if args.out not in (None, "-") else None)
    if corr_path:
        Path(corr_path).write_text(json.dumps(corr, indent=1) + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="classaffinity", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def output_opts(sp, out_required=True):
        sp.add_argument("--out", required=out_required, help="output path, '-' for stdout")
        sp.add_argument("--format", choices=["csv", "json"], help="default: from the --out extension")
        sp.add_argument("--human", dest="digits", action="store_const", const=4, default=17,
                        help="print 4 significant digits instead of 17")

    def vocab_opts(sp):
        sp.add_argument("--min-count", type=int, default=2)
        sp.add_argument("--stopwords", help="stop list file; default is the bundled Snowball list")
        sp.add_argument("--no-stopwords", action="store_true")
        sp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)

    def lam_opt(sp):
        sp.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
        sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("fit", help="estimate reference distributions")
    sp.add_argument("--refs", required=True)
    vocab_opts(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("scale", help="fit affinities for documents")
    sp.add_argument("--model", required=True)
    sp.add_argument("--docs", required=True)
    lam_opt(sp)
    output_opts(sp)
    sp.set_defaults(func=cmd_scale)

    sp = sub.add_parser("influence", help="word influence tables")
    sp.add_argument("--model", required=True)
    sp.add_argument("--docs", required=True)
    lam_opt(sp)
    sp.add_argument("--out-entries", required=True)
    sp.add_argument("--out-summary", required=True)
    sp.add_argument("--x100", action="store_true", help="report influences multiplied by 100")
    sp.add_argument("--human", dest="digits", action="store_const", const=4, default=17)
    sp.set_defaults(func=cmd_influence)

    sp = sub.add_parser("bootstrap", help="sentence-level bootstrap standard errors")
    sp.add_argument("--refs", required=True)
    sp.add_argument("--docs", required=True)
    vocab_opts(sp)
    lam_opt(sp)
    sp.add_argument("--b", type=int, default=DEFAULT_B)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--replicates-out", help="also write one row per replicate")
    output_opts(sp)
    sp.set_defaults(func=cmd_bootstrap)

    sp = sub.add_parser("compare", help="affinity scaling next to the comparator scalers")
    sp.add_argument("--model", required=True)
    sp.add_argument("--docs", required=True)
    sp.add_argument("--dictionary", help="JSON with 'positive' and 'negative' word lists")
    sp.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    sp.add_argument("--out-corr", help="correlation matrix JSON; default next to --out")
    output_opts(sp)
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("alpha", "lam"):
        if getattr(args, name, 0) < 0:
            print(f"error: --{name.replace('lam', 'lambda')} must be nonnegative", file=sys.stderr)
            return EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
