"""Command-line entry points for batch pipeline use and study analytics.

Outputs are JSON on stdout (or --out); processing failures exit 1 with a
structured JSON error on stderr; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional

from . import generation as generation_mod
from .aspects import RuleAspectBackend
from .bundle import BundleError, parse_bundle, serialize_bundle
from .ingest import IngestError, PlainTextExtractor, build_document
from .mentions import link_paragraphs
from .model import (
    CaptionVariant,
    Document,
    aspect_report_to_json,
    generated_caption_to_json,
    rating_to_json,
)
from .rating import HeuristicRatingBackend, HostedRatingBackend, build_context
from .stats import StatsError, rank1_table, read_rank_csv, read_tlx_csv, tlx_report


class CliError(RuntimeError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError("io_error", f"cannot read {path}: {exc}") from exc


def _load_bundle(path: str) -> Document:
    try:
        return parse_bundle(_read_input(path))
    except BundleError as exc:
        raise CliError("invalid_bundle", str(exc)) from exc


def _emit(payload: Any, out: Optional[str]) -> None:
    text = json.dumps(payload, indent=2, ensure_ascii=False)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _figure_and_mentions(doc: Document, figure_id: str):
    try:
        fig = doc.figure(figure_id)
    except KeyError:
        raise CliError("not_found", f"no figure {figure_id!r} in document") from None
    index = link_paragraphs(doc)
    mention_texts = [doc.paragraphs[i].text for i in index[fig.id]]
    return fig, mention_texts


def cmd_ingest(args: argparse.Namespace) -> Any:
    data = _read_input(args.input)
    if args.format == "bundle":
        doc = _load_bundle(args.input)
    else:
        try:
            result = build_document(
                data, PlainTextExtractor(), doc_id=args.doc_id or Path(args.input).stem
            )
        except IngestError as exc:
            raise CliError("ingest_failed", str(exc)) from exc
        for warning in result.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        doc = result.document
    return json.loads(serialize_bundle(doc))


def cmd_link(args: argparse.Namespace) -> Any:
    doc = _load_bundle(args.bundle)
    return link_paragraphs(doc)


def cmd_analyze(args: argparse.Namespace) -> Any:
    doc = _load_bundle(args.bundle)
    fig, mention_texts = _figure_and_mentions(doc, args.figure)
    caption = args.caption if args.caption is not None else fig.caption
    report = RuleAspectBackend().analyze(caption, fig, mention_texts)
    return aspect_report_to_json(report)


def _rating_backend(args: argparse.Namespace):
    if args.backend == "hosted":
        if not args.endpoint:
            raise CliError("config_error", "--endpoint is required for the hosted backend")
        return HostedRatingBackend(
            endpoint=args.endpoint, model=args.model, api_key=args.api_key or ""
        )
    return HeuristicRatingBackend()


def cmd_rate(args: argparse.Namespace) -> Any:
    doc = _load_bundle(args.bundle)
    fig, mention_texts = _figure_and_mentions(doc, args.figure)
    caption = args.caption if args.caption is not None else fig.caption
    if not caption.strip():
        raise CliError("bad_input", "caption is empty; pass --caption")
    report = RuleAspectBackend().analyze(caption, fig, mention_texts)
    ctx = build_context(mention_texts, caption)
    rating = _rating_backend(args).rate(ctx, report)
    return rating_to_json(rating)


def cmd_gen(args: argparse.Namespace) -> Any:
    doc = _load_bundle(args.bundle)
    fig, mention_texts = _figure_and_mentions(doc, args.figure)
    params = generation_mod.DecodeParams(num_beams=args.num_beams)
    pair = generation_mod.generate_pair_with_ratings(
        fig, mention_texts, params=params
    )
    out: dict[str, Any] = {
        "long": generated_caption_to_json(pair.long) if pair.long else None,
        "short": generated_caption_to_json(pair.short) if pair.short else None,
    }
    errors = {name: message for name, message in pair.errors}
    if errors:
        out["errors"] = errors
    return out


def cmd_serve(args: argparse.Namespace) -> Any:
    import uvicorn

    from .service import ServiceConfig, create_app

    cfg = ServiceConfig.from_env()
    if args.storage:
        cfg.storage_path = args.storage
    if args.static_dir:
        cfg.static_dir = args.static_dir
    if args.evaluation_limit is not None:
        cfg.evaluation_limit = args.evaluation_limit
    app = create_app(cfg)
    uvicorn.run(app, host=args.host, port=args.port)
    return None


def cmd_eval_tlx(args: argparse.Namespace) -> Any:
    text = _read_input(args.csv).decode("utf-8")
    try:
        samples = read_tlx_csv(text)
        compare = [tuple(pair.split(":", 1)) for pair in args.compare] if args.compare else None
        return tlx_report(samples, compare=compare, level=args.level)
    except StatsError as exc:
        raise CliError("stats_error", str(exc)) from exc


def cmd_eval_rank(args: argparse.Namespace) -> Any:
    text = _read_input(args.csv).decode("utf-8")
    try:
        records = read_rank_csv(text)
        return rank1_table(records)
    except StatsError as exc:
        raise CliError("stats_error", str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capsmith",
        description="Figure caption analysis, rating, and drafting toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="pdf text layer or bundle -> bundle JSON")
    p.add_argument("input", help="input file ('-' for stdin)")
    p.add_argument("--format", choices=["pdf", "bundle"], default="pdf")
    p.add_argument("--doc-id", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("link", help="bundle -> mention index JSON")
    p.add_argument("bundle")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("analyze", help="bundle + figure -> aspect report JSON")
    p.add_argument("bundle")
    p.add_argument("--figure", required=True)
    p.add_argument("--caption", default=None, help="override the stored caption")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("rate", help="bundle + figure + caption -> rating JSON")
    p.add_argument("bundle")
    p.add_argument("--figure", required=True)
    p.add_argument("--caption", default=None)
    p.add_argument("--backend", choices=["heuristic", "hosted"], default="heuristic")
    p.add_argument("--endpoint", default=None)
    p.add_argument("--model", default="gpt-3.5-turbo")
    p.add_argument("--api-key", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("gen", help="bundle + figure -> long/short captions JSON")
    p.add_argument("bundle")
    p.add_argument("--figure", required=True)
    p.add_argument("--num-beams", type=int, default=5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--storage", default=None, help="file store directory")
    p.add_argument("--static-dir", default=None, help="frontend assets to serve")
    p.add_argument("--evaluation-limit", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval-tlx", help="workload CSV -> per-condition stats report")
    p.add_argument("csv")
    p.add_argument(
        "--compare",
        action="append",
        metavar="A:B",
        help="condition pair for a paired t-test (repeatable; default all pairs)",
    )
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval_tlx)

    p = sub.add_parser("eval-rank", help="expert ranking CSV -> rank-1 counts")
    p.add_argument("csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval_rank)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = args.func(args)
    except CliError as exc:
        json.dump({"error": {"code": exc.code, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    except generation_mod.GenerationError as exc:
        json.dump(
            {"error": {"code": "generation_error", "message": str(exc)}}, sys.stderr
        )
        sys.stderr.write("\n")
        return 1
    if payload is not None:
        _emit(payload, getattr(args, "out", None))
    return 0


if __name__ == "__main__":
    sys.exit(main())
