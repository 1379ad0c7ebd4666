"""Command-line entry: bundles in, one AEMB file out."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .exporter import DEFAULT_MODEL, BundleError, EncoderMismatchError, ExportJob, export


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Encode bundle units with a pretrained transformer (CLS pooling) "
        "and write an AEMB embedding file.",
    )
    parser.add_argument("bundles", nargs="+",
                        help="canonical JSON bundle files or directories of them")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="model name or local path (default: %(default)s)")
    parser.add_argument("--max-len", dest="max_len", type=int, default=150,
                        help="token truncation length (default: %(default)s)")
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=16)
    parser.add_argument("--out", required=True, help="output AEMB path")
    return parser


def collect_bundles(inputs: list[str]) -> list[Path]:
    files: list[Path] = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            files.extend(sorted(path.glob("*.json")))
        else:
            files.append(path)
    return files


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    bundles = collect_bundles(args.bundles)
    if not bundles:
        sys.stderr.write("error: no bundle files found\n")
        return 3
    job = ExportJob(
        bundles=bundles,
        out=Path(args.out),
        model=args.model,
        max_len=args.max_len,
        batch_size=args.batch_size,
    )
    try:
        stats = export(job)
    except (BundleError, EncoderMismatchError) as err:
        sys.stderr.write(f"error: {err}\n")
        return 3
    print(
        f"wrote {stats['vectors']} vectors for {stats['documents']} document(s), "
        f"dim {stats['dim']}, {stats['bytes']} bytes -> {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
