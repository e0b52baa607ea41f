"""Command-line pipeline: normalize, align, retrofit, induce, evaluate.

Each stage is independently invokable with file handoffs so intermediate
artifacts stay inspectable; ``pipeline`` chains them in one run. Exit
codes: 0 success, 1 data error, 2 usage error. CLWE_THREADS caps BLAS
parallelism (read at import time).
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dictionary import (
    IndexedDictionary,
    dictionary_words,
    index_dictionary,
    merge_dictionaries,
    parse_dictionary,
    save_dictionary,
)
from .embeddings import (
    EmbeddingMatrix,
    fold_case,
    iterative_normalize,
    load_embeddings,
    save_embeddings,
    unit_normalize,
)
from .errors import ClweError
from .neighbors import (
    build_csls_index,
    evaluate_bli,
    induce_synthetic_dictionary,
    write_bli_report,
)
from .projection import (
    AlignedEmbeddings,
    RcslsConfig,
    apply_projection,
    fit_cca,
    fit_least_squares,
    fit_procrustes,
    fit_rcsls,
    save_linear_map,
)
from .retrofit import RetrofitConfig, retrofit, write_objective_trace

log = logging.getLogger("clwe")

METHODS = ("procrustes", "lsq", "cca", "rcsls")
RETROFIT_MODES = ("none", "train", "train+synthetic")


@dataclass
class PipelineSpec:
    src_emb: str
    tgt_emb: str
    train_dict: str
    test_dict: str
    method: str = "procrustes"
    retrofit_mode: str = "none"
    max_vocab: int = 200_000
    norm_rounds: int = 5
    csls_k: int = 10
    alpha: float = 1.0
    beta_scheme: str = "inverse-degree"
    iterations: int = 10
    seed: int = 0
    out_dir: str = "clwe-out"
    synthetic_weight: float = 1.0
    rcsls: RcslsConfig | None = None
    figures: bool = True


class _Outputs:
    """Tracks files written by one run so an aborted run can remove them."""

    def __init__(self, out_dir: str):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> str:
        p = self.out_dir / name
        self.files.append(p)
        return str(p)

    def discard_all(self) -> None:
        for p in self.files:
            with contextlib.suppress(OSError):
                p.unlink()


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except ClweError as exc:
        raise ClweError(f"stage {name}: {exc}") from exc


def _indexed_with_oov(
    path: str, src_emb: EmbeddingMatrix, tgt_emb: EmbeddingMatrix
) -> tuple[IndexedDictionary, int, int]:
    """Index a dictionary file; also count dropped pairs and OOV source words."""
    raw = parse_dictionary(path)
    indexed, dropped = index_dictionary(raw, src_emb.vocab, tgt_emb.vocab)
    raw_sources = {fold_case(s) for s, _ in raw}
    oov_words = len(raw_sources) - len(set(indexed.source_indices.tolist()))
    return indexed, dropped, oov_words


def _fit_and_apply(
    method: str,
    src_emb: EmbeddingMatrix,
    tgt_emb: EmbeddingMatrix,
    train: IndexedDictionary,
    outputs: _Outputs,
    rcsls: RcslsConfig | None = None,
    seed: int = 0,
) -> AlignedEmbeddings:
    """Fit the requested projection, persist map(s), return the aligned pair."""
    if method == "procrustes":
        linear_map = fit_procrustes(src_emb, tgt_emb, train)
        save_linear_map(linear_map, outputs.path("map.txt"))
        return AlignedEmbeddings(apply_projection(linear_map, src_emb), tgt_emb)
    if method == "lsq":
        linear_map = fit_least_squares(src_emb, tgt_emb, train)
        save_linear_map(linear_map, outputs.path("map.txt"))
        return AlignedEmbeddings(apply_projection(linear_map, src_emb), tgt_emb)
    if method == "cca":
        src_map, tgt_map = fit_cca(src_emb, tgt_emb, train)
        save_linear_map(src_map, outputs.path("src_map.txt"))
        save_linear_map(tgt_map, outputs.path("tgt_map.txt"))
        return AlignedEmbeddings(
            apply_projection(src_map, src_emb), apply_projection(tgt_map, tgt_emb)
        )
    if method == "rcsls":
        # The relaxed loss treats cosine as dot product, so fit on unit rows.
        src_unit, tgt_unit = unit_normalize(src_emb), unit_normalize(tgt_emb)
        cfg = rcsls if rcsls is not None else RcslsConfig(seed=seed)
        init = fit_procrustes(src_unit, tgt_unit, train)
        linear_map = fit_rcsls(src_unit, tgt_unit, train, cfg, init)
        save_linear_map(linear_map, outputs.path("map.txt"))
        return AlignedEmbeddings(apply_projection(linear_map, src_unit), tgt_unit)
    raise ClweError(f"unknown method {method!r}")


def run_pipeline(spec: PipelineSpec) -> dict:
    """Load -> normalize -> index -> fit -> apply -> retrofit -> evaluate.

    Writes aligned (and retrofitted) embeddings, projection maps, indexed
    and induced dictionaries, per-word BLI reports, a one-row summary TSV,
    and figures next to the TSVs. Deterministic given the same spec and
    seed; on a stage error all files written by this run are removed.
    """
    if spec.method not in METHODS:
        raise ClweError(f"method must be one of {METHODS}")
    if spec.retrofit_mode not in RETROFIT_MODES:
        raise ClweError(f"retrofit mode must be one of {RETROFIT_MODES}")
    for path in (spec.src_emb, spec.tgt_emb, spec.train_dict, spec.test_dict):
        if not Path(path).is_file():
            raise ClweError(f"input file not found: {path}")

    outputs = _Outputs(spec.out_dir)
    try:
        report = _run_stages(spec, outputs)
    except Exception:
        outputs.discard_all()
        raise
    return report


def _run_stages(spec: PipelineSpec, outputs: _Outputs) -> dict:
    with _stage("load"):
        src_emb = load_embeddings(spec.src_emb, max_vocab=spec.max_vocab)
        tgt_emb = load_embeddings(spec.tgt_emb, max_vocab=spec.max_vocab)
        log.info("load: src %dx%d, tgt %dx%d", src_emb.n, src_emb.d, tgt_emb.n, tgt_emb.d)

    with _stage("normalize"):
        src_emb = iterative_normalize(src_emb, spec.norm_rounds)
        tgt_emb = iterative_normalize(tgt_emb, spec.norm_rounds)
        log.info(
            "normalize: %d rounds -> src %dx%d, tgt %dx%d",
            spec.norm_rounds, src_emb.n, src_emb.d, tgt_emb.n, tgt_emb.d,
        )

    with _stage("index-dictionaries"):
        train, train_dropped, train_oov = _indexed_with_oov(spec.train_dict, src_emb, tgt_emb)
        test, test_dropped, test_oov = _indexed_with_oov(spec.test_dict, src_emb, tgt_emb)
        if len(train) == 0:
            raise ClweError("no training pairs survive vocabulary indexing")
        save_dictionary(
            dictionary_words(train, src_emb.vocab, tgt_emb.vocab),
            outputs.path("train_dict_indexed.tsv"),
        )
        save_dictionary(
            dictionary_words(test, src_emb.vocab, tgt_emb.vocab),
            outputs.path("test_dict_indexed.tsv"),
        )
        log.info(
            "dictionaries: train %d pairs (%d dropped), test %d pairs (%d dropped)",
            len(train), train_dropped, len(test), test_dropped,
        )

    with _stage(f"fit-{spec.method}"):
        aligned = _fit_and_apply(
            spec.method, src_emb, tgt_emb, train, outputs, rcsls=spec.rcsls, seed=spec.seed
        )
        save_embeddings(aligned.src, outputs.path("src_aligned.vec"))
        save_embeddings(aligned.tgt, outputs.path("tgt_aligned.vec"))
        log.info("fit-%s: aligned src %dx%d", spec.method, aligned.src.n, aligned.src.d)

    with _stage("retrofit"):
        final = aligned
        if spec.retrofit_mode != "none":
            target_dict = train
            multipliers = None
            if spec.retrofit_mode == "train+synthetic":
                csls = build_csls_index(aligned.src, aligned.tgt, spec.csls_k)
                synthetic = induce_synthetic_dictionary(csls, aligned.src, aligned.tgt)
                save_dictionary(
                    dictionary_words(synthetic, aligned.src.vocab, aligned.tgt.vocab),
                    outputs.path("synthetic_dict.tsv"),
                )
                target_dict = merge_dictionaries(train, synthetic)
                multipliers = np.ones(len(target_dict))
                multipliers[len(train):] = spec.synthetic_weight
                log.info(
                    "retrofit: synthetic dictionary %d pairs, combined %d pairs",
                    len(synthetic), len(target_dict),
                )
            cfg = RetrofitConfig(
                alpha=spec.alpha, beta_scheme=spec.beta_scheme, iterations=spec.iterations
            )
            result = retrofit(aligned, target_dict, cfg, pair_multipliers=multipliers)
            final = AlignedEmbeddings(result.src, result.tgt)
            save_embeddings(final.src, outputs.path("src_retrofitted.vec"))
            save_embeddings(final.tgt, outputs.path("tgt_retrofitted.vec"))
            write_objective_trace(result.objective_trace, outputs.path("retrofit_trace.tsv"))
            if spec.figures and result.objective_trace:
                from .plots import plot_objective_trace

                plot_objective_trace(result.objective_trace, outputs.path("retrofit_trace.png"))
            log.info(
                "retrofit: %d sweeps, L %.6g -> %.6g",
                result.sweeps_run,
                result.objective_trace[0][0] if result.objective_trace else float("nan"),
                result.objective_trace[-1][0] if result.objective_trace else float("nan"),
            )
        else:
            log.info("retrofit: skipped (mode=none)")

    with _stage("evaluate"):
        csls = build_csls_index(final.src, final.tgt, spec.csls_k)
        train_report = evaluate_bli(
            csls, final.src, final.tgt, train, final.src.vocab, final.tgt.vocab, train_oov
        )
        test_report = evaluate_bli(
            csls, final.src, final.tgt, test, final.src.vocab, final.tgt.vocab, test_oov
        )
        write_bli_report(train_report, outputs.path("bli_train.tsv"))
        write_bli_report(test_report, outputs.path("bli_test.tsv"))
        log.info(
            "evaluate: train P@1 %.4f (%d words), test P@1 %.4f (%d words)",
            train_report.p_at_1, train_report.evaluated_words,
            test_report.p_at_1, test_report.evaluated_words,
        )

    with _stage("report"):
        with open(outputs.path("summary.tsv"), "w", encoding="utf-8") as fh:
            fh.write("method\tretrofit\ttrain_p1\ttest_p1\tseed\n")
            fh.write(
                f"{spec.method}\t{spec.retrofit_mode}\t{train_report.p_at_1:.6f}\t"
                f"{test_report.p_at_1:.6f}\t{spec.seed}\n"
            )
        if spec.figures:
            from .plots import plot_bli_summary

            plot_bli_summary(
                train_report.p_at_1,
                test_report.p_at_1,
                f"{spec.method} / {spec.retrofit_mode}",
                outputs.path("bli_p1.png"),
            )

    return {
        "method": spec.method,
        "retrofit": spec.retrofit_mode,
        "train_p1": train_report.p_at_1,
        "test_p1": test_report.p_at_1,
        "seed": spec.seed,
        "out_dir": str(outputs.out_dir),
    }


# ---------------------------------------------------------------------------
# subcommands


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out-dir", required=True, help="directory for outputs")
    parser.add_argument("--seed", type=int, default=0)


def _add_rcsls(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rcsls-k", type=int, default=10, help="RCSLS neighborhood size")
    parser.add_argument("--rcsls-epochs", type=int, default=10)
    parser.add_argument("--rcsls-lr", type=float, default=1.0)
    parser.add_argument(
        "--rcsls-cap", type=int, default=None,
        help="cap vocabulary rows used for RCSLS neighborhoods",
    )


def _rcsls_config(args: argparse.Namespace) -> RcslsConfig:
    return RcslsConfig(
        k_neighbors=args.rcsls_k,
        epochs=args.rcsls_epochs,
        learning_rate=args.rcsls_lr,
        seed=args.seed,
        vocab_cap=args.rcsls_cap,
    )


def cmd_normalize(args: argparse.Namespace) -> int:
    if args.src_emb is None and args.tgt_emb is None:
        raise ClweError("give at least one of --src-emb / --tgt-emb")
    outputs = _Outputs(args.out_dir)
    for flag, path, name in (
        ("--src-emb", args.src_emb, "src_normalized.vec"),
        ("--tgt-emb", args.tgt_emb, "tgt_normalized.vec"),
    ):
        if path is None:
            continue
        emb = load_embeddings(path, max_vocab=args.max_vocab)
        emb = iterative_normalize(emb, args.norm_rounds)
        save_embeddings(emb, outputs.path(name))
        log.info("normalize %s: %dx%d -> %s", flag, emb.n, emb.d, name)
    return 0


def cmd_align(args: argparse.Namespace) -> int:
    src_emb = load_embeddings(args.src_emb)
    tgt_emb = load_embeddings(args.tgt_emb)
    train, dropped = index_dictionary(
        parse_dictionary(args.train_dict), src_emb.vocab, tgt_emb.vocab
    )
    if len(train) == 0:
        raise ClweError("no training pairs survive vocabulary indexing")
    log.info("align: %d train pairs (%d dropped)", len(train), dropped)
    outputs = _Outputs(args.out_dir)
    aligned = _fit_and_apply(
        args.method, src_emb, tgt_emb, train, outputs,
        rcsls=_rcsls_config(args), seed=args.seed,
    )
    save_embeddings(aligned.src, outputs.path("src_aligned.vec"))
    save_embeddings(aligned.tgt, outputs.path("tgt_aligned.vec"))
    log.info("align: wrote aligned embeddings to %s", args.out_dir)
    return 0


def cmd_retrofit(args: argparse.Namespace) -> int:
    src_emb = load_embeddings(args.src_emb)
    tgt_emb = load_embeddings(args.tgt_emb)
    dictionary, dropped = index_dictionary(
        parse_dictionary(args.train_dict), src_emb.vocab, tgt_emb.vocab
    )
    log.info("retrofit: %d pairs (%d dropped)", len(dictionary), dropped)
    cfg = RetrofitConfig(alpha=args.alpha, beta_scheme=args.beta, iterations=args.iterations)
    result = retrofit(AlignedEmbeddings(src_emb, tgt_emb), dictionary, cfg)
    outputs = _Outputs(args.out_dir)
    save_embeddings(result.src, outputs.path("src_retrofitted.vec"))
    save_embeddings(result.tgt, outputs.path("tgt_retrofitted.vec"))
    write_objective_trace(result.objective_trace, outputs.path("retrofit_trace.tsv"))
    if result.objective_trace:
        from .plots import plot_objective_trace

        plot_objective_trace(result.objective_trace, outputs.path("retrofit_trace.png"))
    log.info("retrofit: %d sweeps", result.sweeps_run)
    return 0


def cmd_induce(args: argparse.Namespace) -> int:
    src_emb = load_embeddings(args.src_emb)
    tgt_emb = load_embeddings(args.tgt_emb)
    csls = build_csls_index(src_emb, tgt_emb, args.csls_k)
    exclude = None
    if args.exclude_train:
        if args.train_dict is None:
            raise ClweError("--exclude-train needs --train-dict")
        exclude, _ = index_dictionary(
            parse_dictionary(args.train_dict), src_emb.vocab, tgt_emb.vocab
        )
    synthetic = induce_synthetic_dictionary(
        csls, src_emb, tgt_emb, exclude=exclude, max_rank=args.max_rank
    )
    outputs = _Outputs(args.out_dir)
    save_dictionary(
        dictionary_words(synthetic, src_emb.vocab, tgt_emb.vocab),
        outputs.path("synthetic_dict.tsv"),
    )
    log.info("induce: %d mutual-neighbor pairs", len(synthetic))
    print(len(synthetic))
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    src_emb = load_embeddings(args.src_emb)
    tgt_emb = load_embeddings(args.tgt_emb)
    csls = build_csls_index(src_emb, tgt_emb, args.csls_k)
    outputs = _Outputs(args.out_dir)
    ran_any = False
    for label, path in (("train", args.train_dict), ("test", args.test_dict)):
        if path is None:
            continue
        ran_any = True
        indexed, dropped, oov = _indexed_with_oov(path, src_emb, tgt_emb)
        report = evaluate_bli(
            csls, src_emb, tgt_emb, indexed, src_emb.vocab, tgt_emb.vocab, oov
        )
        write_bli_report(report, outputs.path(f"bli_{label}.tsv"))
        log.info(
            "evaluate %s: P@1 %.4f over %d words (%d OOV, %d pairs dropped)",
            label, report.p_at_1, report.evaluated_words, report.oov_words, dropped,
        )
        print(f"{label}\t{report.p_at_1:.6f}")
    if not ran_any:
        raise ClweError("give at least one of --train-dict / --test-dict")
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    spec = PipelineSpec(
        src_emb=args.src_emb,
        tgt_emb=args.tgt_emb,
        train_dict=args.train_dict,
        test_dict=args.test_dict,
        method=args.method,
        retrofit_mode=args.retrofit,
        max_vocab=args.max_vocab,
        norm_rounds=args.norm_rounds,
        csls_k=args.csls_k,
        alpha=args.alpha,
        beta_scheme=args.beta,
        iterations=args.iterations,
        seed=args.seed,
        out_dir=args.out_dir,
        synthetic_weight=args.synthetic_weight,
        rcsls=_rcsls_config(args),
    )
    report = run_pipeline(spec)
    print(
        f"{report['method']}\t{report['retrofit']}\t"
        f"{report['train_p1']:.6f}\t{report['test_p1']:.6f}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clwe",
        description="Cross-lingual word embedding alignment, retrofitting, and BLI evaluation.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_norm = sub.add_parser("normalize", help="lowercase, truncate, iteratively normalize")
    p_norm.add_argument("--src-emb")
    p_norm.add_argument("--tgt-emb")
    p_norm.add_argument("--max-vocab", type=int, default=200_000)
    p_norm.add_argument("--norm-rounds", type=int, default=5)
    _add_common(p_norm)
    p_norm.set_defaults(func=cmd_normalize)

    p_align = sub.add_parser("align", help="fit a projection on preprocessed embeddings")
    p_align.add_argument("--src-emb", required=True)
    p_align.add_argument("--tgt-emb", required=True)
    p_align.add_argument("--train-dict", required=True)
    p_align.add_argument("--method", choices=METHODS, default="procrustes")
    _add_rcsls(p_align)
    _add_common(p_align)
    p_align.set_defaults(func=cmd_align)

    p_retro = sub.add_parser("retrofit", help="retrofit aligned embeddings to a dictionary")
    p_retro.add_argument("--src-emb", required=True)
    p_retro.add_argument("--tgt-emb", required=True)
    p_retro.add_argument("--train-dict", required=True, help="dictionary to retrofit to")
    p_retro.add_argument("--alpha", type=float, default=1.0)
    p_retro.add_argument("--beta", choices=("inverse-degree", "uniform"), default="inverse-degree")
    p_retro.add_argument("--iterations", type=int, default=10)
    _add_common(p_retro)
    p_retro.set_defaults(func=cmd_retrofit)

    p_induce = sub.add_parser("induce", help="induce a mutual-CSLS-neighbor dictionary")
    p_induce.add_argument("--src-emb", required=True)
    p_induce.add_argument("--tgt-emb", required=True)
    p_induce.add_argument("--csls-k", type=int, default=10)
    p_induce.add_argument("--max-rank", type=int, default=None)
    p_induce.add_argument("--train-dict")
    p_induce.add_argument("--exclude-train", action="store_true",
                          help="drop induced pairs already in --train-dict")
    _add_common(p_induce)
    p_induce.set_defaults(func=cmd_induce)

    p_eval = sub.add_parser("evaluate", help="BLI P@1 of aligned embeddings")
    p_eval.add_argument("--src-emb", required=True)
    p_eval.add_argument("--tgt-emb", required=True)
    p_eval.add_argument("--train-dict")
    p_eval.add_argument("--test-dict")
    p_eval.add_argument("--csls-k", type=int, default=10)
    _add_common(p_eval)
    p_eval.set_defaults(func=cmd_evaluate)

    p_pipe = sub.add_parser("pipeline", help="full run: load to evaluation report")
    p_pipe.add_argument("--src-emb", required=True)
    p_pipe.add_argument("--tgt-emb", required=True)
    p_pipe.add_argument("--train-dict", required=True)
    p_pipe.add_argument("--test-dict", required=True)
    p_pipe.add_argument("--method", choices=METHODS, default="procrustes")
    p_pipe.add_argument("--retrofit", choices=RETROFIT_MODES, default="none")
    p_pipe.add_argument("--max-vocab", type=int, default=200_000)
    p_pipe.add_argument("--norm-rounds", type=int, default=5)
    p_pipe.add_argument("--csls-k", type=int, default=10)
    p_pipe.add_argument("--alpha", type=float, default=1.0)
    p_pipe.add_argument("--beta", choices=("inverse-degree", "uniform"), default="inverse-degree")
    p_pipe.add_argument("--iterations", type=int, default=10)
    p_pipe.add_argument("--synthetic-weight", type=float, default=1.0,
                        help="pair-weight multiplier for induced pairs")
    _add_rcsls(p_pipe)
    _add_common(p_pipe)
    p_pipe.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname).1s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ClweError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
