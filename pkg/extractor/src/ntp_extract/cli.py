import argparse
import logging
import sys

from .extract import ExtractionJob, JobError, extract


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="asctk-extract",
        description="Record per-token next-token probabilities for a corpus",
    )
    parser.add_argument("--model", required=True, help="checkpoint path or hub id")
    parser.add_argument("--input", required=True,
                        help="JSONL corpus, a .py file, or a directory of .py files")
    parser.add_argument("--output", required=True, help="output JSONL path")
    parser.add_argument("--max-len", type=int, default=1024)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--include-special", action="store_true",
                        help="emit zero-width records for BOS/EOS (output then "
                             "fails strict corpus validation; loss-parity use only)")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        summary = extract(ExtractionJob(
            model_id=args.model,
            input_path=args.input,
            output_path=args.output,
            device=args.device,
            max_len=args.max_len,
            batch_size=args.batch_size,
            include_special=args.include_special,
        ))
    except JobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {summary.written} snippets to {summary.output_path}")
    for snippet_id, reason in summary.skipped:
        print(f"skipped {snippet_id}: {reason}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
