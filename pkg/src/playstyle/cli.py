"""Command-line front end: every stage reads and writes files, nothing else.

Exit status: 0 success, 1 usage error, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import classify, cluster, evaluate, features, persist, synth
from ._kernels import BACKEND
from .errors import NumericalError, PlaystyleError, ValidationError
from .ingest import (
    Corpus,
    link_corpus,
    load_corpus,
    parse_matches,
    parse_player_stats,
    write_matches,
    write_player_stats,
)
from .preprocess import apply_normalization, build_stat_matrix, min_max_normalize

log = logging.getLogger("playstyle")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3
DEFAULT_SEED = 0
CLASS_TABLE_FORMAT = "playstyle.class-table"
TRUTH_FORMAT = "playstyle.synth-truth"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_grid(text: str, integer: bool):
    """``a:b`` (inclusive, step 1), ``a:b:step`` or a comma-separated list."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) not in (2, 3):
                raise ValueError
            if integer:
                lo, hi = int(parts[0]), int(parts[1])
                step = int(parts[2]) if len(parts) == 3 else 1
                values = list(range(lo, hi + 1, step))
            else:
                lo, hi = float(parts[0]), float(parts[1])
                step = float(parts[2]) if len(parts) == 3 else 1.0
                if step <= 0:
                    raise ValueError
                n = int(np.floor((hi - lo) / step + 1e-9)) + 1
                values = [round(lo + i * step, 10) for i in range(n)]
        else:
            cast = int if integer else float
            values = [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError(f"grid {text!r} is empty")
    return values


def _int_grid(text):
    return parse_grid(text, True)


def _float_grid(text):
    return parse_grid(text, False)


def _seed(args) -> int:
    if args.seed is None:
        log.info("no --seed given, using default seed %d", DEFAULT_SEED)
        return DEFAULT_SEED
    return args.seed


def _need_file(path) -> None:
    if not Path(path).is_file():
        raise ValidationError("no such file", source=str(path))


def _normalized_players(players_path):
    _need_file(players_path)
    with open(players_path, encoding="utf-8") as fh:
        players = parse_player_stats(fh, source=players_path)
    return players, min_max_normalize(build_stat_matrix(players))


def _read_class_table(path) -> dict[str, int]:
    _need_file(path)
    obj = persist.read_json(path)
    if obj.get("format") != CLASS_TABLE_FORMAT:
        raise ValidationError(f"not a {CLASS_TABLE_FORMAT} file", source=str(path))
    table = obj.get("classes")
    if not isinstance(table, dict) or not all(isinstance(v, int) for v in table.values()):
        raise ValidationError("classes must map character ids to integers", source=str(path))
    return table


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> None:
    seed = _seed(args)
    spec = synth.planted_spec(
        n_archetypes=args.archetypes,
        n_players=args.players,
        n_matches=args.matches,
        within_spread=args.spread,
        separation=args.separation,
        target_bayes_rate=args.bayes_rate,
        seed=seed,
    )
    corpus = synth.generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "players.jsonl", "w", encoding="utf-8") as fh:
        write_player_stats(corpus.players, fh)
    with open(out / "matches.jsonl", "w", encoding="utf-8") as fh:
        write_matches(corpus.matches, fh)
    persist.write_json(
        out / "classes.json",
        {"format": CLASS_TABLE_FORMAT, "version": persist.FORMAT_VERSION,
         "classes": dict(sorted(corpus.class_table.items()))},
    )
    rate = synth.bayes_rate(spec, corpus.matches, corpus.label_of)
    persist.write_json(
        out / "truth.json",
        {
            "format": TRUTH_FORMAT,
            "version": persist.FORMAT_VERSION,
            "seed": seed,
            "n_archetypes": spec.n_archetypes,
            "within_spread": spec.within_spread,
            "separation": spec.separation,
            "outcome_weights": spec.weights.tolist(),
            "intercept": spec.intercept,
            "archetype_means": corpus.archetype_means.tolist(),
            "player_labels": {p.player_id: int(l) for p, l in zip(corpus.players, corpus.labels)},
            "win_probability": {
                m.match_id: float(p) for m, p in zip(corpus.matches, corpus.win_probabilities)
            },
            "bayes_rate": rate,
        },
    )
    print(f"wrote {len(corpus.players)} players and {len(corpus.matches)} matches to {out} "
          f"(Bayes rate {rate:.4f})")


def cmd_ingest(args) -> None:
    _need_file(args.players)
    _need_file(args.matches)
    corpus = load_corpus(args.players, args.matches)
    wins = sum(m.winner.value == "team1" for m in corpus.matches)
    summary = {
        "n_players": len(corpus.players),
        "n_matches": len(corpus.matches),
        "team1_wins": wins,
        "with_character_choices": sum(m.character_choices is not None for m in corpus.matches),
    }
    if args.out:
        persist.write_json(args.out, summary)
    print(f"ok: {summary['n_players']} players, {summary['n_matches']} matches")


def cmd_cluster(args) -> None:
    seed = _seed(args)
    players, m = _normalized_players(args.players)
    if args.algorithm == "kmeans":
        if args.k is None:
            raise UsageError("cluster: --k is required for kmeans")
        config = cluster.FitConfig(cluster.Algorithm.KMEANS, args.k, args.max_iter, args.init)
    else:
        if args.lam is None:
            raise UsageError("cluster: --lam is required for dpmeans")
        config = cluster.FitConfig(cluster.Algorithm.DPMEANS, args.lam, args.max_iter)
    model, assignment = cluster.best_of_trials(m, config, args.trials, seed)
    persist.save_cluster_model(args.model, model, m.normalization, m.column_names)
    if args.assignment:
        persist.write_assignment(args.assignment, m.row_ids, assignment.labels)
    print(f"{args.algorithm}: k={model.k} objective={model.final_objective:.6f} (seed {model.seed})")


def cmd_select_k(args) -> None:
    seed = _seed(args)
    _, m = _normalized_players(args.players)
    curve = cluster.cv_select_k(m, args.grid, args.folds, seed, args.trials, args.rtol,
                                args.max_iter)
    persist.write_cv_curve(args.out, curve, "k")
    print(f"chosen k = {curve.chosen}")


def cmd_select_lambda(args) -> None:
    seed = _seed(args)
    _, m = _normalized_players(args.players)
    curve = cluster.cv_select_lambda(m, args.grid, args.folds, seed, args.trials, args.rtol,
                                     args.max_iter)
    persist.write_cv_curve(args.out, curve, "lambda")
    print(f"chosen lambda = {curve.chosen}")


def cmd_pca(args) -> None:
    _need_file(args.model)
    model, ranges, _ = persist.load_cluster_model(args.model)
    players, _ = _normalized_players(args.players)
    m = apply_normalization(build_stat_matrix(players), ranges)
    proj = cluster.pca_fit(m, args.components)
    labels, _ = cluster.assign(m, model.centroids)
    persist.write_pca_scores(args.out, cluster.pca_transform(proj, m), labels)
    ev = ", ".join(f"{v:.4g}" for v in proj.explained_variance)
    print(f"explained variance: {ev}")


def cmd_featurize(args) -> None:
    _need_file(args.matches)
    if args.official:
        if not args.classes:
            raise UsageError("featurize: --official needs --classes")
        with open(args.matches, encoding="utf-8") as fh:
            matches = parse_matches(fh, source=args.matches)
        if args.players:
            players, _ = _normalized_players(args.players)
            link_corpus(players, matches)
        styles = features.official_style_map(matches, _read_class_table(args.classes))
        k = features.N_OFFICIAL_CLASSES
        provenance = {
            "source": features.StyleSource.OFFICIAL.value,
            "class_table_sha256": persist.file_sha256(args.classes),
        }
        samples = features.encode_corpus(matches, styles, k)
    else:
        if not (args.model and args.players):
            raise UsageError("featurize: cluster features need --model and --players")
        _need_file(args.model)
        model, ranges, _ = persist.load_cluster_model(args.model)
        _need_file(args.players)
        corpus: Corpus = load_corpus(args.players, args.matches)
        style = features.build_style_map(model, ranges, corpus.players)
        k = model.k
        provenance = {
            "source": style.source.value,
            "cluster_model_sha256": persist.file_sha256(args.model),
            "normalization_ranges": np.asarray(ranges).tolist(),
        }
        samples = features.encode_corpus(corpus, style)
    persist.write_samples(args.out, samples, k, provenance)
    print(f"wrote {len(samples)} samples with k={k} ({provenance['source']})")


def cmd_train(args) -> None:
    seed = _seed(args)
    _need_file(args.samples)
    X, y, manifest = persist.read_samples(args.samples)
    options = {}
    if args.kind == "svm" and args.C is not None:
        options["C"] = args.C
    if args.kind == "lr":
        options.update(epochs=args.epochs, learning_rate=args.learning_rate)
    model = classify.train(args.kind, X, y, seed=seed, **options)
    provenance = {k: v for k, v in manifest.items() if k not in ("format", "version")}
    provenance["samples_sha256"] = persist.file_sha256(args.samples)
    persist.save_classifier(args.model, model, provenance)
    acc = float(np.mean(classify.predict(model, X) == y))
    print(f"{args.kind}: training accuracy {acc:.4f}")


def cmd_evaluate(args) -> None:
    seed = _seed(args)
    _need_file(args.samples)
    X, y, manifest = persist.read_samples(args.samples)
    source = manifest.get("source", "official")
    summaries = []
    for kind in args.kind:
        s = evaluate.run_trials(X, y, kind, source, args.trials, seed, args.test_fraction)
        summaries.append(s)
        print(f"{kind}/{source}: train {s.mean_train_acc:.4f} test {s.mean_test_acc:.4f} "
              f"over {s.n_trials} trials")
    persist.write_trial_summaries(args.out, summaries)


def cmd_compare(args) -> None:
    for p in (args.ours, args.baseline):
        _need_file(p)
    ours = {s.model_kind.value: s for s in persist.read_trial_summaries(args.ours)}
    base = {s.model_kind.value: s for s in persist.read_trial_summaries(args.baseline)}
    shared = sorted(set(ours) & set(base))
    if not shared:
        raise ValidationError("the two summaries share no model kind")
    reports = {k: evaluate.baseline_compare(ours[k], base[k]) for k in shared}
    meta = {
        "ours_source": sorted({s.feature_source.value for s in ours.values()}),
        "baseline_source": sorted({s.feature_source.value for s in base.values()}),
    }
    if args.out:
        persist.write_comparison(args.out, reports, meta)
    for k in shared:
        r = reports[k]
        print(f"{k}: mean difference {r.mean_difference:+.4f} "
              f"(wins {r.wins}, losses {r.losses}, ties {r.ties})")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="playstyle", description="Play-style clustering and match outcome prediction.")
    p.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def seed_arg(sp):
        sp.add_argument("--seed", type=int, default=None, help=f"random seed (default {DEFAULT_SEED})")

    sp = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--players", type=int, default=2000)
    sp.add_argument("--matches", type=int, default=10000)
    sp.add_argument("--archetypes", type=int, default=8)
    sp.add_argument("--spread", type=float, default=0.1)
    sp.add_argument("--separation", type=float, default=5.0)
    sp.add_argument("--bayes-rate", type=float, default=0.7)
    seed_arg(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("ingest", help="validate and link a players/matches pair")
    sp.add_argument("--players", required=True)
    sp.add_argument("--matches", required=True)
    sp.add_argument("--out", help="optional JSON summary")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("cluster", help="fit k-means or DP-means (best of several trials)")
    sp.add_argument("--players", required=True)
    sp.add_argument("--algorithm", choices=("kmeans", "dpmeans"), default="kmeans")
    sp.add_argument("--k", type=int)
    sp.add_argument("--lam", type=float)
    sp.add_argument("--trials", type=int, default=cluster.DEFAULT_TRIALS)
    sp.add_argument("--max-iter", type=int, default=cluster.DEFAULT_MAX_ITER)
    sp.add_argument("--init", choices=("kmeans++", "random"), default="kmeans++")
    sp.add_argument("--model", required=True, help="output model file (JSON)")
    sp.add_argument("--assignment", help="optional output CSV of player labels")
    seed_arg(sp)
    sp.set_defaults(func=cmd_cluster)

    for name, grid_type, default, rtol, func, label in (
        ("select-k", _int_grid, "5:24", cluster.DEFAULT_K_RTOL, cmd_select_k, "k"),
        ("select-lambda", _float_grid, "2.5:4.4:0.1", 0.0, cmd_select_lambda, "lambda"),
    ):
        sp = sub.add_parser(name, help=f"cross-validate {label} and write the curve CSV")
        sp.add_argument("--players", required=True)
        sp.add_argument("--grid", type=grid_type, default=grid_type(default),
                        help=f"a:b[:step] or comma list (default {default})")
        sp.add_argument("--folds", type=int, default=10)
        sp.add_argument("--trials", type=int, default=cluster.DEFAULT_TRIALS, help="fits per fold, best kept")
        sp.add_argument("--rtol", type=float, default=rtol)
        sp.add_argument("--max-iter", type=int, default=cluster.DEFAULT_MAX_ITER)
        sp.add_argument("--out", required=True)
        seed_arg(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("pca", help="project normalized players and write scores CSV")
    sp.add_argument("--players", required=True)
    sp.add_argument("--model", required=True, help="cluster model supplying ranges and labels")
    sp.add_argument("--components", type=int, default=3)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_pca)

    sp = sub.add_parser("featurize", help="encode matches as team composition counts")
    sp.add_argument("--matches", required=True)
    sp.add_argument("--players")
    sp.add_argument("--model", help="cluster model (cluster-based styles)")
    sp.add_argument("--official", action="store_true", help="use official character classes")
    sp.add_argument("--classes", help="class table JSON for --official")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_featurize)

    sp = sub.add_parser("train", help="train one predictor on a samples CSV")
    sp.add_argument("--samples", required=True)
    sp.add_argument("--kind", choices=("lr", "gda", "svm"), required=True)
    sp.add_argument("--C", type=float, help="SVM penalty; selected by validation if omitted")
    sp.add_argument("--epochs", type=int, default=classify.DEFAULT_EPOCHS)
    sp.add_argument("--learning-rate", type=float, default=classify.DEFAULT_LEARNING_RATE)
    sp.add_argument("--model", required=True)
    seed_arg(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("evaluate", help="repeated hold-out evaluation")
    sp.add_argument("--samples", required=True)
    sp.add_argument("--kind", choices=("lr", "gda", "svm"), nargs="+", default=["lr", "gda", "svm"])
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--test-fraction", type=float, default=0.1)
    sp.add_argument("--out", required=True)
    seed_arg(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("compare", help="paired comparison of two evaluation summaries")
    sp.add_argument("--ours", required=True)
    sp.add_argument("--baseline", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    log.debug("kernel backend: %s", BACKEND)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PlaystyleError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"invalid input: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
