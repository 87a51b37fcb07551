"""refscore command line: score sequences with a reference model, or
tokenize a text corpus, emitting genfrontier's file formats.

Exit codes: 0 success, 1 usage error, 2 data/model error.
"""

from __future__ import annotations

import argparse
import sys

from .corpus import tokenize_corpus
from .scoring import DEFAULT_MODEL_ID, ScoreError, ScoreRequest, score_samples

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="refscore", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="per-token reference NLLs for generated sequences")
    p.add_argument("--input", required=True, help="token JSONL or raw text file")
    p.add_argument("--input-format", choices=["tokens", "text"], default="tokens")
    p.add_argument("--out", required=True, help="sample JSONL to write")
    p.add_argument("--model", default=DEFAULT_MODEL_ID, help="reference model id or path")
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--device", default="cpu")
    p.add_argument("--vocab-size", type=int, default=None,
                   help="expected vocab; mismatch with the model is an error")
    p.add_argument("--method", required=True, help="method id to stamp")
    p.add_argument("--temperature", type=float, required=True)
    p.add_argument("--nfe", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("tokenize", help="tokenize a text corpus (one doc per line)")
    p.add_argument("--input", required=True)
    p.add_argument("--tokenizer", default=DEFAULT_MODEL_ID)
    p.add_argument("--out", required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "score":
            req = ScoreRequest(
                input_path=args.input,
                output_path=args.out,
                method_id=args.method,
                temperature=args.temperature,
                nfe=args.nfe,
                seed=args.seed,
                model_id=args.model,
                input_format=args.input_format,
                batch_size=args.batch_size,
                device=args.device,
                vocab_size=args.vocab_size,
            )
            n = score_samples(req)
            print(f"scored {n} sequence(s) -> {args.out}")
        else:
            result = tokenize_corpus(args.input, args.tokenizer, args.out)
            print(
                f"tokenized {result.n_documents} document(s) -> {args.out} "
                f"({result.n_skipped_empty} empty skipped, {len(result.errors)} failed)"
            )
            for msg in result.errors:
                print(f"  {msg}", file=sys.stderr)
    except ScoreError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, EnvironmentError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
