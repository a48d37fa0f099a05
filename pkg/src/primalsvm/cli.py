"""Command line front end.

Subcommands: stats, train, predict, cv, sweep, synth. Exit codes are 0 on
success, 1 for usage errors, 2 for data/file errors and 3 for training
errors; failures print a single diagnostic line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager

import numpy as np

from primalsvm import corpus, evaluation
from primalsvm.corpus import FeatureMode
from primalsvm.numerics import KernelSpec
from primalsvm.optim import GdConfig, NewtonConfig, PegasosConfig
from primalsvm.svm import ModelFormatError, load_model, save_model

DEFAULT_SEED = 0

EXIT_USAGE, EXIT_DATA, EXIT_TRAIN = 1, 2, 3


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, f"usage error: {message}")


@contextmanager
def _phase(code):
    try:
        yield
    except CliError:
        raise
    except (OSError, corpus.ParseError, ModelFormatError) as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc
    except (ValueError, ArithmeticError, RuntimeError, IndexError) as exc:
        raise CliError(code, str(exc)) from exc


def fmt_accuracy(acc: float) -> str:
    s = f"{acc:.4f}"
    return s[1:] if s.startswith("0.") else s


def _add_data(p, required=True):
    p.add_argument("--data", required=required, help="phrase TSV file")


def _add_run(p):
    p.add_argument("--alg", choices=("gd", "newton", "pegasos"), default="pegasos")
    p.add_argument("--mode", choices=("bin", "multi"), default="bin")
    p.add_argument("--features", choices=("bin", "freq"), default="bin")
    p.add_argument("--eta", type=float, default=GdConfig.eta, help="GD learning rate")
    p.add_argument("--iters", type=int, default=GdConfig.max_iters, help="GD iterations")
    p.add_argument("--gd-tol", type=float, default=GdConfig.rel_tol)
    p.add_argument("--gd-reg", type=float, default=0.0,
                   help="optional squared-norm penalty for GD (default 0)")
    p.add_argument("--gd-average", action="store_true",
                   help="GD on the mean rather than the summed loss")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="regularization for pegasos/newton")
    p.add_argument("--k", type=int, default=PegasosConfig.k, help="pegasos subset size")
    p.add_argument("--T", type=int, default=PegasosConfig.T, help="pegasos iterations")
    p.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    p.add_argument("--sigma", type=float, default=1.0, help="rbf width")
    p.add_argument("--base-size", type=int, default=NewtonConfig.base_size)
    p.add_argument("--newton-iters", type=int, default=NewtonConfig.max_newton_iters)
    p.add_argument("--max-n", type=int, default=NewtonConfig.max_n)
    p.add_argument("--force", action="store_true",
                   help="allow newton above its instance cap")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)


def _add_cv(p):
    p.add_argument("--rounds", type=int, default=evaluation.CvConfig.rounds)
    p.add_argument("--holdout", type=float, default=evaluation.CvConfig.holdout_fraction)
    p.add_argument("--json", action="store_true", help="emit JSON with per-round detail")


def build_parser():
    parser = _Parser(prog="primal-svm", description="Primal SVM training and evaluation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stats", help="corpus statistics")
    _add_data(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("train", help="train a model and save it")
    _add_data(p)
    _add_run(p)
    p.add_argument("--out", required=True, help="model file to write")

    p = sub.add_parser("predict", help="apply a saved model to a TSV file")
    p.add_argument("--model", required=True)
    _add_data(p)
    p.add_argument("--out")

    p = sub.add_parser("cv", help="cross validate one configuration")
    _add_data(p)
    _add_run(p)
    _add_cv(p)
    p.add_argument("--subsample", type=int, default=None,
                   help="use a seeded random subset of this many instances")
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="cross validate over a parameter grid")
    _add_data(p)
    _add_run(p)
    _add_cv(p)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--param", required=True)
    p.add_argument("--grid", required=True,
                   help="'default' for the built-in grid or comma separated values")
    p.add_argument("--out")

    p = sub.add_parser("synth", help="write a synthetic corpus")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--pos", type=int, default=20)
    p.add_argument("--neg", type=int, default=20)
    p.add_argument("--neutral", type=int, default=40)
    p.add_argument("--min-len", type=int, default=3)
    p.add_argument("--max-len", type=int, default=10)
    p.add_argument("--out")
    return parser


def optimizer_from_args(args):
    if args.alg == "gd":
        return GdConfig(eta=args.eta, max_iters=args.iters, rel_tol=args.gd_tol,
                        reg=args.gd_reg, average=args.gd_average)
    if args.alg == "pegasos":
        return PegasosConfig(lam=0.01 if args.lam is None else args.lam,
                             k=args.k, T=args.T, seed=args.seed)
    kernel = KernelSpec.rbf(args.sigma) if args.kernel == "rbf" else KernelSpec.linear()
    return NewtonConfig(lam=1.0 if args.lam is None else args.lam, kernel=kernel,
                        base_size=args.base_size, max_newton_iters=args.newton_iters,
                        max_n=args.max_n)


def run_spec_from_args(args):
    with _phase(EXIT_USAGE):
        return evaluation.RunSpec(optimizer_from_args(args), mode=args.mode,
                                  feature_mode=FeatureMode(args.features), force=args.force)


def _load_records(path, require_labels=True, subsample=None, seed=DEFAULT_SEED):
    with _phase(EXIT_DATA):
        records = corpus.read_tsv(path, require_labels=require_labels)
        if not records:
            raise CliError(EXIT_DATA, f"{path}: no data rows")
        if subsample is not None and subsample < len(records):
            rng = np.random.Generator(np.random.PCG64(seed))
            keep = np.sort(rng.choice(len(records), size=subsample, replace=False))
            records = [records[i] for i in keep]
        return records


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with _phase(EXIT_DATA), open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def cmd_stats(args):
    records = _load_records(args.data)
    with _phase(EXIT_DATA):
        vocab = corpus.build_vocabulary(records)
        stats = corpus.corpus_stats(
            corpus.make_instances(records, vocab, FeatureMode.FREQUENCY), vocab)
    with _output(args.out) as out:
        if args.json:
            json.dump(vars(stats), out, indent=2)
            out.write("\n")
            return
        out.write(f"Number of data instances\t{stats.n_instances}\n")
        out.write(f"Number of distinct words\t{stats.n_distinct_words}\n")
        out.write(f"Avg. freq. of words per phrase\t{stats.avg_words_per_phrase:.2f}\n")
        out.write(f"Avg. freq. of phrases per word\t{stats.avg_phrases_per_word:.2f}\n")


def cmd_train(args):
    spec = run_spec_from_args(args)
    records = _load_records(args.data)
    with _phase(EXIT_TRAIN):
        model, vocab, elapsed = evaluation.fit(records, spec)
    with _phase(EXIT_DATA):
        save_model(args.out, model, vocab.words(), spec.feature_mode.value)
    logging.getLogger(__name__).info("trained %s in %.3f s", spec.alg_name, elapsed)


def cmd_predict(args):
    with _phase(EXIT_DATA):
        model, words, features = load_model(args.model)
    records = _load_records(args.data, require_labels=False)
    vocab = corpus.Vocabulary(words)
    data = corpus.make_instances(records, vocab, FeatureMode(features))
    preds = evaluation.predict(model, [d.features for d in data])
    with _output(args.out) as out:
        out.write("PhraseId\tPredictedLabel\n")
        for r, p in zip(records, preds):
            out.write(f"{r.phrase_id}\t{p}\n")
    if records[0].sentiment is not None:
        multi = not hasattr(model, "is_linear")
        truths = [d.sentiment if multi else d.binary_label for d in data]
        print(f"accuracy\t{fmt_accuracy(evaluation.accuracy(preds, truths))}", file=sys.stderr)


def _cv_config(args):
    with _phase(EXIT_USAGE):
        return evaluation.CvConfig(rounds=args.rounds, holdout_fraction=args.holdout,
                                   seed=args.seed)


def cmd_cv(args):
    spec = run_spec_from_args(args)
    cfg = _cv_config(args)
    records = _load_records(args.data, subsample=args.subsample, seed=args.seed)
    with _phase(EXIT_TRAIN):
        report = evaluation.cross_validate(records, spec, cfg)
    with _output(args.out) as out:
        if args.json:
            json.dump(report.to_dict(), out, indent=2)
            out.write("\n")
        else:
            out.write(f"{spec.alg_name}\t{spec.mode}\t{spec.feature_mode.value}\t"
                      f"{fmt_accuracy(report.mean_accuracy)}\t{report.mean_time:.3f}\n")


def parse_grid(text):
    if text == "default":
        return None
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(EXIT_USAGE, f"bad grid {text!r}; expected 'default' or numbers") from None
    if not values:
        raise CliError(EXIT_USAGE, "empty grid")
    return values


def cmd_sweep(args):
    spec = run_spec_from_args(args)
    cfg = _cv_config(args)
    values = parse_grid(args.grid)
    if values is None:
        if args.param not in evaluation.DEFAULT_GRIDS:
            raise CliError(EXIT_USAGE, f"no default grid for {args.param!r}; "
                           f"available: {', '.join(evaluation.DEFAULT_GRIDS)}")
        values = evaluation.DEFAULT_GRIDS[args.param]
    with _phase(EXIT_USAGE):
        evaluation.override(spec.optimizer, args.param, values[0])
    records = _load_records(args.data, subsample=args.subsample, seed=args.seed)
    with _phase(EXIT_TRAIN):
        cells = evaluation.sweep(records, spec, args.param, values, cfg)
    best = evaluation.best_cell(cells)
    with _output(args.out) as out:
        if args.json:
            json.dump({"param": args.param,
                       "cells": [{"value": c.value,
                                  "report": c.report.to_dict() if c.report else None,
                                  "error": c.error} for c in cells],
                       "best": best.value if best else None}, out, indent=2)
            out.write("\n")
            return
        for c in cells:
            if c.report is not None:
                out.write(f"{spec.alg_name}\t{spec.mode}\t{spec.feature_mode.value}\t"
                          f"{args.param}={c.value:g}\t{fmt_accuracy(c.report.mean_accuracy)}\t"
                          f"{c.report.mean_time:.3f}\n")
            else:
                out.write(f"{spec.alg_name}\t{spec.mode}\t{spec.feature_mode.value}\t"
                          f"{args.param}={c.value:g}\terror\t{c.error}\n")
        if best is None:
            out.write("best\tnone\n")
        else:
            out.write(f"best\t{args.param}={best.value:g}\t"
                      f"{fmt_accuracy(best.report.mean_accuracy)}\n")


def cmd_synth(args):
    with _phase(EXIT_USAGE):
        records = corpus.synth_corpus(args.seed, args.n, (args.pos, args.neg, args.neutral),
                                      (args.min_len, args.max_len))
    with _output(args.out) as out:
        out.write(corpus.format_tsv(records))


COMMANDS = {"stats": cmd_stats, "train": cmd_train, "predict": cmd_predict,
            "cv": cmd_cv, "sweep": cmd_sweep, "synth": cmd_synth}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except CliError as exc:
        print(f"primal-svm: {exc}", file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
