"""Command-line surface binding the modules into pipelines.

Subcommands: ``convert`` (argument-graph XML to canonical JSON),
``agree`` (discourse-variant agreement table), ``train`` (fit one
model), ``parse`` (decode documents with a checkpoint), ``eval``
(cross-validated comparison table with significance marks), and
``export-coeffs`` (learned discourse-coefficient table).

Exit codes: 2 usage, 3 data error, 4 numeric divergence. With
``--json-errors`` failures additionally print one JSON object on
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .agreement import corpus_agreement, summary_tsv
from .argeval import (
    EvalReport,
    cross_validate,
    mark_significance,
    report_table_markdown,
    report_table_tsv,
)
from .corpus import Language, Variant, document_to_dict, load_arggraph_xml, simplify_functions
from .errors import DataError, DivergenceError, SplitError
from .parser import (
    MODES,
    SEGMENTATIONS,
    Hyperparams,
    ModelParams,
    aggregate_coefficients,
    coefficients_tsv,
    decode,
    export_coefficients,
    infer_roles,
    score,
    train,
)
from .pipeline import InstanceBuilder, load_bundle_dir, load_rst_dir, make_provider
from .rst import inventory_for, reduce_to_segmentation, to_dependencies

HYPER_KEYS = tuple(Hyperparams().as_dict())


def parse_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` configuration; flags override these values."""
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        value = value.strip("\"'")
        if value.lower() in ("true", "false"):
            out[key] = value.lower() == "true"
        else:
            try:
                out[key] = int(value)
            except ValueError:
                try:
                    out[key] = float(value)
                except ValueError:
                    out[key] = value
    return out


def hyper_from_args(args: argparse.Namespace) -> Hyperparams:
    values = {key: getattr(args, key) for key in HYPER_KEYS if hasattr(args, key)}
    return Hyperparams(**values)


def _add_hyper_flags(sub: argparse.ArgumentParser):
    defaults = Hyperparams()
    sub.add_argument("--epochs", type=int, default=defaults.epochs)
    sub.add_argument("--batch-size", dest="batch_size", type=int, default=defaults.batch_size)
    sub.add_argument("--dropout", type=float, default=defaults.dropout)
    sub.add_argument("--weight-decay", dest="weight_decay", type=float,
                     default=defaults.weight_decay)
    sub.add_argument("--lr-encoder", dest="lr_encoder", type=float, default=defaults.lr_encoder)
    sub.add_argument("--lr-head", dest="lr_head", type=float, default=defaults.lr_head)
    sub.add_argument("--lr-coeff", dest="lr_coeff", type=float, default=defaults.lr_coeff)
    sub.add_argument("--beta1", type=float, default=defaults.beta1)
    sub.add_argument("--beta2", type=float, default=defaults.beta2)
    sub.add_argument("--arc-dim", dest="arc_dim", type=int, default=defaults.arc_dim)
    sub.add_argument("--tag-dim", dest="tag_dim", type=int, default=defaults.tag_dim)
    sub.add_argument("--patience", type=int, default=defaults.patience)
    sub.add_argument("--dev-fraction", dest="dev_fraction", type=float,
                     default=defaults.dev_fraction)


def _add_data_flags(sub: argparse.ArgumentParser, rst: bool = True):
    sub.add_argument("--bundles", required=True, help="directory of canonical JSON bundles")
    if rst:
        sub.add_argument("--rst-dir", dest="rst_dir", help="directory of RST JSON files")
    sub.add_argument("--embeddings", help="AEMB embedding file (default: hash encoder)")
    sub.add_argument("--hash-dim", dest="hash_dim", type=int, default=64)
    sub.add_argument("--hash-seed", dest="hash_seed", type=int, default=0)


def build_arg_parser(defaults: dict | None = None) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a subcommand from overriding flags given before it
    common.add_argument("--json-errors", dest="json_errors", action="store_true",
                        default=argparse.SUPPRESS,
                        help="emit machine-readable errors on stderr")
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="key = value config file; flags win")

    parser = argparse.ArgumentParser(prog="dbap", parents=[common],
                                     description=__doc__.split("\n\n")[0])
    subs = parser.add_subparsers(dest="command", required=True)

    convert = subs.add_parser("convert", parents=[common],
                              help="argument-graph XML to canonical JSON bundles")
    convert.add_argument("--input", required=True, help="XML file or directory")
    convert.add_argument("--out", required=True, help="output directory")
    convert.add_argument("--language", choices=[l.value for l in Language], default="en")
    convert.add_argument("--variant", choices=[v.value for v in Variant], default="original")
    convert.add_argument("--source-doc-id", dest="source_doc_id")

    agree = subs.add_parser("agree", parents=[common],
                            help="pairwise agreement between discourse variants")
    agree.add_argument("--bundles", required=True)
    agree.add_argument("--rst-dir", dest="rst_dir", required=True)
    agree.add_argument("--out", help="TSV output path (default: stdout)")

    tr = subs.add_parser("train", parents=[common], help="train one parser")
    _add_data_flags(tr)
    tr.add_argument("--mode", choices=MODES, default="bap")
    tr.add_argument("--segmentation", choices=SEGMENTATIONS, default="gold")
    tr.add_argument("--augmented", action="store_true")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--out", required=True, help="checkpoint path")
    tr.add_argument("--history", help="write the epoch history as JSON")
    _add_hyper_flags(tr)

    pa = subs.add_parser("parse", parents=[common], help="parse documents with a checkpoint")
    _add_data_flags(pa)
    pa.add_argument("--model", required=True)
    pa.add_argument("--out", required=True, help="output directory for parse JSON")
    pa.add_argument("--greedy", action="store_true", help="ablation: per-row argmax decoding")
    pa.add_argument("--scores", action="store_true", help="include modulated scores")

    ev = subs.add_parser("eval", parents=[common],
                         help="cross-validated comparison with significance marks")
    _add_data_flags(ev)
    ev.add_argument("--splits", required=True, help="JSON fold definitions")
    ev.add_argument("--modes", default="bap",
                    help=f"comma list from {{{','.join(MODES)}}}")
    ev.add_argument("--mode", choices=MODES, help="shorthand for a single mode")
    ev.add_argument("--segmentation", choices=SEGMENTATIONS, default="gold")
    ev.add_argument("--augmented", choices=["no", "yes", "both"], default="no")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--jobs", type=int, default=1, help="fold-level process parallelism")
    ev.add_argument("--out", help="TSV output path (default: stdout)")
    ev.add_argument("--markdown", action="store_true", help="emit a Markdown table instead")
    _add_hyper_flags(ev)

    ex = subs.add_parser("export-coeffs", parents=[common],
                         help="learned discourse-coefficient table")
    ex.add_argument("--model", required=True, nargs="+",
                    help="one checkpoint per fold or seed")
    ex.add_argument("--dispersion-threshold", dest="dispersion_threshold",
                    type=float, default=0.5)
    ex.add_argument("--out", help="TSV output path (default: stdout)")

    if defaults:
        parser.set_defaults(**defaults)
        for sub in subs.choices.values():
            sub.set_defaults(**defaults)
    return parser


def _write_or_print(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommand bodies -------------------------------------------------------


def cmd_convert(args) -> int:
    source = Path(args.input)
    files = sorted(source.glob("*.xml")) if source.is_dir() else [source]
    if not files:
        raise DataError(f"{source}: no XML files")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for file in files:
        doc, raw = load_arggraph_xml(
            file,
            language=Language(args.language),
            variant=Variant(args.variant),
            source_doc_id=args.source_doc_id,
        )
        tree = simplify_functions(raw)
        payload = json.dumps(document_to_dict(doc, tree), ensure_ascii=False, indent=2)
        (out_dir / f"{doc.id}.json").write_text(payload + "\n", encoding="utf-8")
    print(f"converted {len(files)} document(s) into {out_dir}")
    return 0


def cmd_agree(args) -> int:
    groups = load_bundle_dir(args.bundles)
    trees = load_rst_dir(args.rst_dir)
    eligible = []
    for group in groups:
        variants = []
        for doc in group.documents:
            if doc.id in trees:
                reduced = reduce_to_segmentation(trees[doc.id], doc.units)
                variants.append(to_dependencies(reduced))
        if len(variants) >= 2:
            eligible.append((group.original.language, variants))
    if not eligible:
        raise DataError("no variant groups with at least two discourse analyses")
    summaries = corpus_agreement(eligible)
    _write_or_print(summary_tsv(summaries), args.out)
    return 0


def _builder_for(args, segmentation: str, mode: str) -> InstanceBuilder:
    provider = make_provider(args.embeddings, args.hash_dim, args.hash_seed)
    rst_trees = load_rst_dir(args.rst_dir) if getattr(args, "rst_dir", None) else None
    needs_rst = mode != "bap"
    if (needs_rst or segmentation == "e2e") and rst_trees is None:
        raise DataError("this configuration needs --rst-dir")
    return InstanceBuilder(
        provider=provider,
        segmentation=segmentation,
        rst_trees=rst_trees,
        needs_rst=needs_rst,
    )


def cmd_train(args) -> int:
    groups = load_bundle_dir(args.bundles)
    builder = _builder_for(args, args.segmentation, args.mode)
    hyper = hyper_from_args(args)

    rng = np.random.default_rng(np.random.SeedSequence((args.seed, 11)))
    n_dev = int(round(hyper.dev_fraction * len(groups)))
    dev_ids = set()
    if n_dev:
        dev_ids = set(rng.choice(len(groups), size=n_dev, replace=False).tolist())
    train_instances, dev_instances = [], []
    for gi, group in enumerate(groups):
        docs = group.documents if args.augmented else [group.original]
        for doc in docs:
            inst = builder(doc, group.tree)
            if gi in dev_ids:
                if doc.variant == Variant.ORIGINAL:
                    dev_instances.append(inst)
            else:
                train_instances.append(inst)

    inventory = None if args.mode == "bap" else inventory_for(groups[0].original.language)
    params = ModelParams(
        mode=args.mode,
        segmentation=args.segmentation,
        d_lm=builder.provider.dim,
        inventory=inventory,
        hyper=hyper,
        seed=args.seed,
    )
    result = train(params, train_instances, dev=dev_instances, seed=args.seed)
    params.save(args.out)
    if args.history:
        Path(args.history).write_text(json.dumps(result.history, indent=2), encoding="utf-8")
    last = result.history[-1]
    summary = ", ".join(f"{k}={v:.3f}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in last.items())
    print(f"trained {args.mode}/{args.segmentation} on {len(train_instances)} instance(s); {summary}")
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_parse(args) -> int:
    params = ModelParams.load(args.model)
    groups = load_bundle_dir(args.bundles)
    builder = _builder_for(args, params.segmentation, params.mode)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for group in groups:
        for doc in group.documents:
            inst = builder(doc, group.tree)
            scored = score(params, inst.units, inst.rst, doc_id=doc.id)
            tree = infer_roles(decode(scored, greedy=args.greedy))
            payload = {
                "doc_id": doc.id,
                "heads": {str(d): h for d, h in sorted(tree.heads.items())},
                "functions": {str(d): f.value for d, f in sorted(tree.functions.items())},
                "roles": {str(d): r.value for d, r in sorted(tree.roles.items())},
            }
            if args.scores:
                payload["scores"] = [[round(v, 6) for v in row] for row in scored.scores]
            (out_dir / f"{doc.id}.parse.json").write_text(
                json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
            )
    print(f"parsed {sum(len(g.documents) for g in groups)} document(s) into {out_dir}")
    return 0


def _eval_one_config(args, groups, splits, mode: str, augmented: bool) -> EvalReport:
    builder = _builder_for(args, args.segmentation, mode)
    hyper = hyper_from_args(args)
    inventory = None if mode == "bap" else inventory_for(groups[0].original.language)
    label = f"{mode}{'+aug' if augmented else ''}"
    if args.jobs > 1:
        payloads = [
            {
                "bundles": args.bundles,
                "rst_dir": getattr(args, "rst_dir", None),
                "embeddings": args.embeddings,
                "hash_dim": args.hash_dim,
                "hash_seed": args.hash_seed,
                "segmentation": args.segmentation,
                "mode": mode,
                "augmented": augmented,
                "hyper": hyper.as_dict(),
                "seed": args.seed,
                "fold": fold,
            }
            for fold in splits
        ]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_fold_worker, payloads))
        return EvalReport(label=label, fold_metrics=rows)
    return cross_validate(
        groups,
        splits,
        builder,
        mode=mode,
        segmentation=args.segmentation,
        augmented=augmented,
        hyper=hyper,
        inventory=inventory,
        d_lm=builder.provider.dim,
        seed=args.seed,
        label=label,
    )


def _fold_worker(payload: dict) -> dict:
    """Run one fold in a subprocess; reloads data from paths."""
    ns = argparse.Namespace(
        embeddings=payload["embeddings"],
        hash_dim=payload["hash_dim"],
        hash_seed=payload["hash_seed"],
        rst_dir=payload["rst_dir"],
    )
    groups = load_bundle_dir(payload["bundles"])
    builder = _builder_for(ns, payload["segmentation"], payload["mode"])
    inventory = (
        None if payload["mode"] == "bap" else inventory_for(groups[0].original.language)
    )
    report = cross_validate(
        groups,
        [payload["fold"]],
        builder,
        mode=payload["mode"],
        segmentation=payload["segmentation"],
        augmented=payload["augmented"],
        hyper=Hyperparams.from_dict(payload["hyper"]),
        inventory=inventory,
        d_lm=builder.provider.dim,
        seed=payload["seed"],
    )
    return report.fold_metrics[0]


def cmd_eval(args) -> int:
    groups = load_bundle_dir(args.bundles)
    splits = json.loads(Path(args.splits).read_text(encoding="utf-8"))
    for fold in splits:
        if "train" not in fold or "test" not in fold:
            raise SplitError(f"{args.splits}: folds need 'train' and 'test' lists")
    modes = [args.mode] if args.mode else [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in MODES:
            raise DataError(f"unknown mode {mode!r}")
    aug_options = {"no": [False], "yes": [True], "both": [False, True]}[args.augmented]

    reports = []
    for mode in modes:
        for augmented in aug_options:
            reports.append(_eval_one_config(args, groups, splits, mode, augmented))
    baseline = reports[0]
    for report in reports[1:]:
        mark_significance(report, baseline)
    text = report_table_markdown(reports) if args.markdown else report_table_tsv(reports)
    _write_or_print(text, args.out)
    return 0


def cmd_export_coeffs(args) -> int:
    tables = []
    for path in args.model:
        params = ModelParams.load(path)
        try:
            tables.append(export_coefficients(params))
        except ValueError as err:
            raise DataError(str(err)) from err
    summary = aggregate_coefficients(tables, dispersion_threshold=args.dispersion_threshold)
    _write_or_print(coefficients_tsv(summary), args.out)
    return 0


_COMMANDS = {
    "convert": cmd_convert,
    "agree": cmd_agree,
    "train": cmd_train,
    "parse": cmd_parse,
    "eval": cmd_eval,
    "export-coeffs": cmd_export_coeffs,
}


def main(argv=None) -> int:
    # pre-scan for a config file so its values become flag defaults
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    defaults = parse_config_file(known.config) if known.config else None
    parser = build_arg_parser(defaults)
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DivergenceError as err:
        _report_error(args, err)
        return 4
    except DataError as err:
        _report_error(args, err)
        return 3


def _report_error(args, err: Exception):
    if getattr(args, "json_errors", False):
        sys.stderr.write(
            json.dumps({"error": type(err).__name__, "message": str(err)}) + "\n"
        )
    else:
        sys.stderr.write(f"error: {err}\n")


if __name__ == "__main__":
    sys.exit(main())
