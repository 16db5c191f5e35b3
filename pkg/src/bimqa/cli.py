"""Command-line entry point: ``bimqa <command> ...``.

Exit codes: 0 success, 1 validation failure, 2 transport or judge failure,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import export, metrics, report, runner
from .corpus import build_corpus, synthetic_corpus
from .exchange import SchemaError, read_block, read_model, serialize_block
from .inject import InjectionPlan, inject, manifest_to_dict
from .inspection import inspect_components, inspect_model
from .model import DomainError, QaItem
from .partition import PartitionConfig, partition_detailed
from .questions import build_items
from .rules import RuleSet
from .textualize import TextTemplateSet, parse_block_text, textualize

log = logging.getLogger("bimqa")

EXIT_OK, EXIT_VALIDATION, EXIT_TRANSPORT, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(DomainError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


# -- configuration -------------------------------------------------------------


def load_config(path) -> dict:
    """The ``--config`` document: a JSON object with optional sections.

    Sections: ``rules`` (RuleSet fields), ``plan`` (InjectionPlan fields),
    ``partition`` (PartitionConfig fields), ``endpoint`` (candidate endpoint),
    ``metrics`` (MetricConfig fields, with ``judge_endpoint`` and
    ``embedding_endpoint`` as endpoint objects). A document without a
    ``metrics`` section is also read as a bare metric config by ``score``.
    """
    if path is None:
        return {}
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise UsageError("the config file must hold a JSON object")
    return doc


def rules_from(cfg: dict) -> RuleSet:
    d = dict(cfg.get("rules", {}))
    if "plausible_thickness_mm" in d:
        d["plausible_thickness_mm"] = tuple(d["plausible_thickness_mm"])
    return RuleSet(**d)


def plan_from(cfg: dict, seed: int) -> InjectionPlan:
    d = dict(cfg.get("plan", {}))
    for key in ("thickness_defect_pool", "number_corruptions"):
        if key in d:
            d[key] = tuple(d[key])
    d["seed"] = seed
    return InjectionPlan(**d)


def metric_config_from(cfg: dict, offline: bool) -> metrics.MetricConfig:
    """The ``metrics`` section, or the whole document when it is a bare metric config."""
    if "metrics" in cfg:
        d = dict(cfg["metrics"])
    else:
        known = {f.name for f in fields(metrics.MetricConfig)}
        d = {k: v for k, v in cfg.items() if k in known}
    for key in ("judge_endpoint", "embedding_endpoint"):
        if d.get(key) is not None:
            d[key] = None if offline else runner.LlmEndpointConfig.from_dict(d[key])
    return metrics.MetricConfig(**d)


def endpoint_from(path, cfg: dict) -> runner.LlmEndpointConfig:
    if path is not None:
        return runner.LlmEndpointConfig.from_file(path)
    if "endpoint" in cfg:
        return runner.LlmEndpointConfig.from_dict(cfg["endpoint"])
    raise UsageError("no endpoint: pass --endpoint or add an 'endpoint' section to --config")


def read_qa_file(path) -> list[QaItem]:
    return [QaItem.from_dict(json.loads(line)) for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()]


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# -- commands ------------------------------------------------------------------


def cmd_inspect(args, cfg):
    rules = RuleSet.from_file(args.rules) if args.rules else rules_from(cfg)
    rep = inspect_model(read_model(args.model), rules)
    if args.json:
        print(json.dumps(rep.to_dict(), indent=2))
    elif rep.clean:
        print("clean: no violations")
    else:
        for v in rep.violations:
            print(f"{v.component_id}\t{v.rule.value}\t{v.detail}")
    return EXIT_VALIDATION if args.strict and not rep.clean else EXIT_OK


def cmd_partition(args, cfg):
    pc = dict(cfg.get("partition", {}))
    for key, value in (("block_size_mm", args.block_size), ("min_components", args.min),
                       ("max_components", args.max)):
        if value is not None:
            pc[key] = value
    m = read_model(args.model)
    result = partition_detailed(m, PartitionConfig(**pc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for b in result.blocks:
        (out / f"{export.file_stem(b.block_id)}.block.json").write_text(serialize_block(b), encoding="utf-8")
    manifest = {
        "model": m.name,
        "config": pc,
        "blocks": [{"block_id": b.block_id, "components": [c.id for c in b.components]} for b in result.blocks],
        "dropped": [{"cell": cell, "components": ids} for cell, ids in result.dropped],
    }
    (out / "partition.json").write_text(export.dumps_json(manifest), encoding="utf-8")
    print(f"wrote {len(result.blocks)} blocks to {out} ({result.dropped_count} components dropped)")
    return EXIT_OK


def cmd_textualize(args, cfg):
    b = read_block(args.block)
    templates = TextTemplateSet.from_file(args.templates) if args.templates else None
    text = textualize(b, templates)
    if args.check_roundtrip:
        again = textualize(parse_block_text(text, b.block_id, b.source_model, b.block_size_mm, templates))
        if again != text:
            print("round trip changed the text", file=sys.stderr)
            return EXIT_VALIDATION
    _emit(text, args.out)
    return EXIT_OK


def cmd_inject(args, cfg):
    b = read_block(args.block)
    rules = rules_from(cfg)
    rep = inspect_components(b.components, rules)
    if not rep.clean:
        if not args.force:
            raise UsageError(f"block {b.block_id} has {len(rep.violations)} violations; fix them or pass --force")
        log.warning("injecting into block %s despite %d violations", b.block_id, len(rep.violations))
    plan = InjectionPlan.from_file(args.plan, seed=args.seed) if args.plan else plan_from(cfg, args.seed)
    injected, manifest = inject(b, plan)
    ab = export.AnsweredBlock(injected, tuple(manifest), plan.seed, ())
    out = Path(args.out)
    path = export.write_bundle(ab, out)
    stem = export.file_stem(b.block_id)
    (out / f"{stem}_defect.txt").write_text(injected.defect_text, encoding="utf-8")
    (out / f"{stem}.manifest.json").write_text(
        export.dumps_json(manifest_to_dict(b.block_id, plan.seed, manifest)), encoding="utf-8")
    print(path)
    return EXIT_OK


def _bundles(args, cfg, answers: bool):
    out = []
    for ab in export.read_bundles(args.blocks, args.manifest):
        items = build_items(ab.block, ab.manifest, ab.seed, rules_from(cfg), answers=answers,
                            skip_unresolvable=args.skip_unresolvable)
        out.append(replace(ab, items=tuple(items)))
    return out


def _write_items(bundles, out) -> None:
    _emit("".join(json.dumps(qa.to_dict(), ensure_ascii=False) + "\n" for ab in bundles for qa in ab.items), out)


def cmd_questions(args, cfg):
    _write_items(_bundles(args, cfg, answers=False), args.out)
    return EXIT_OK


def cmd_answers(args, cfg):
    bundles = _bundles(args, cfg, answers=True)
    _write_items(bundles, args.out)
    if args.bundles:
        for ab in bundles:
            export.write_bundle(ab, args.bundles)
    print(f"answered {sum(len(ab.items) for ab in bundles)} questions on {len(bundles)} blocks", file=sys.stderr)
    return EXIT_OK


def cmd_generate(args, cfg):
    """Synthetic corpus -> answered blocks, the four text files per block and a QA file."""
    blocks = build_corpus(synthetic_corpus(args.seed), args.seed, plan_from(cfg, args.seed), rules_from(cfg))
    out = Path(args.out)
    for ab in blocks:
        export.write_bundle(ab, out / "blocks")
        export.export_block_files(ab.block, ab.items, out / "corpus")
    export.write_jsonl(out / "qa.jsonl", (qa.to_dict() for ab in blocks for qa in ab.items))
    print(f"{len(blocks)} blocks, {sum(len(ab.items) for ab in blocks)} question-answer pairs in {out}")
    return EXIT_OK


def cmd_run(args, cfg):
    ep = endpoint_from(args.endpoint, cfg)
    blocks = {ab.block.block_id: ab.block for ab in export.read_bundles(args.blocks)}
    if args.sample is not None:
        chosen = runner.sample_blocks(sorted(blocks), args.sample, args.seed)
        blocks = {bid: blocks[bid] for bid in chosen}
    items = []
    for qa in read_qa_file(args.qa):
        if qa.block_id in blocks:
            items.append((qa, blocks[qa.block_id]))
    recs = runner.run_batch(items, ep, args.out)
    errors = sum(1 for r in recs if r.error)
    print(f"{len(recs)} records in {args.out} ({errors} transport errors)")
    return EXIT_OK


def cmd_score(args, cfg):
    mc = metric_config_from(cfg, args.offline)
    if args.beta is not None:
        mc = replace(mc, beta=args.beta)
    recs = runner.read_records(args.records)
    judge = runner.EndpointClient(mc.judge_endpoint) if mc.judge_endpoint else None
    emb = runner.EndpointClient(mc.embedding_endpoint) if mc.embedding_endpoint else None
    try:
        width = mc.judge_endpoint.max_in_flight if mc.judge_endpoint else 1
        scored = metrics.score_records(recs, mc, judge, emb, max_in_flight=width)
    finally:
        for c in (judge, emb):
            if c is not None:
                c.close()
    out = Path(args.out or args.records)
    tmp = out.with_name(out.name + ".tmp")
    export.write_jsonl(tmp, (r.to_dict() for r in scored))
    tmp.replace(out)
    failed = sum(1 for r in scored if "score:judge_error" in r.flags)
    print(f"scored {len(scored)} records into {out}")
    if failed:
        log.error("%d records have no G-Eval score because the judge failed", failed)
        return EXIT_TRANSPORT
    return EXIT_OK


def cmd_export_corpus(args, cfg):
    blocks = export.read_bundles(args.blocks)
    n = 0
    for ab in blocks:
        export.export_block_files(ab.block, ab.items, args.out)
        n += len(ab.items)
    print(f"wrote {4 * len(blocks)} files ({n} question-answer pairs) to {args.out}")
    return EXIT_OK


def cmd_export_finetune(args, cfg):
    recs = runner.read_records(args.records)
    qa_pool, qra_pool = export.screen_for_finetune(recs, args.min_g_eval, args.review_queue)
    spec = export.MixSpec.parse(args.mix, args.size, args.seed)
    mixed = export.mix_finetune(qa_pool, qra_pool, spec, strict=args.strict)
    export.write_finetune(args.out, mixed, spec, aliases=args.aliases)
    n_qra = sum(1 for r in mixed if r.form == "qra")
    print(f"pools: {len(qa_pool)} QA, {len(qra_pool)} QRA; wrote {len(mixed) - n_qra} QA + {n_qra} QRA to {args.out}")
    return EXIT_OK


def cmd_report(args, cfg):
    recs = [r for path in args.records for r in runner.read_records(path)]
    rows = report.aggregate(recs)
    if args.csv:
        report.write_csv(rows, args.csv)
    if args.json:
        betas = sorted({f for r in recs for f in r.flags if f.startswith("score:beta=")})
        report.write_summary(rows, args.json, beta=float(betas[0].split("=")[1]) if len(betas) == 1 else None)
    print(report.format_table(rows))
    if args.diff:
        a, b = args.diff
        print(f"\nper-question differences ({a} - {b}):")
        for qid, deltas in report.diff_models(a, b, rows):
            vals = " ".join(f"{k}={'-' if v is None else format(v, '+.4f')}" for k, v in deltas.items())
            print(f"{qid:<6}{vals}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bimqa", description="BIM question-answer benchmark generation and LLM evaluation.")
    p.add_argument("--config", help="JSON configuration document")
    p.add_argument("--seed", type=int, default=0, help="seed for injection, sampling and mixing")
    p.add_argument("-v", "--verbose", action="store_true")
    # the global options are also accepted after the command name
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)


    s = add("inspect", help="check a model file against the design rules")
    s.add_argument("model")
    s.add_argument("--rules", help="rules file (JSON); overrides the config's rules section")
    s.add_argument("--json", action="store_true", help="print the report as JSON")
    s.add_argument("--strict", action="store_true", help="exit 1 when violations are found")
    s.set_defaults(func=cmd_inspect)

    s = add("partition", help="split a model into block files")
    s.add_argument("model")
    s.add_argument("--block-size", type=int, help="cell size in mm")
    s.add_argument("--min", type=int, help="drop cells with fewer components")
    s.add_argument("--max", type=int, help="warn about cells with more components")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_partition)

    s = add("textualize", help="render a block file as text")
    s.add_argument("block")
    s.add_argument("--templates", help="text template file (JSON)")
    s.add_argument("--check-roundtrip", action="store_true", help="parse the text back and compare")
    s.add_argument("--out")
    s.set_defaults(func=cmd_textualize)

    s = add("inject", help="inject seeded defects into a block file")
    s.add_argument("block")
    s.add_argument("--plan", help="injection plan file (JSON)")
    s.add_argument("--force", action="store_true", help="inject even if the block has violations")
    s.add_argument("--out", required=True, help="directory for the bundle, defect text and manifest")
    s.set_defaults(func=cmd_inject)

    for name, func, helptext in (("questions", cmd_questions, "instantiate the 22 questions"),
                                 ("answers", cmd_answers, "compute ground-truth answers")):
        s = add(name, help=helptext)
        s.add_argument("blocks", help="bundle file or directory; block files when --manifest is given")
        s.add_argument("--manifest", help="manifest file for plain block files")
        s.add_argument("--skip-unresolvable", action="store_true")
        s.add_argument("--out", help="question records (JSON lines); stdout by default")
        if name == "answers":
            s.add_argument("--bundles", help="also write answered bundles to this directory")
        s.set_defaults(func=func)

    s = add("generate", help="build the synthetic corpus end to end")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_generate)

    s = add("run", help="ask a model every question")
    s.add_argument("--qa", required=True)
    s.add_argument("--blocks", required=True)
    s.add_argument("--endpoint", help="endpoint config file (JSON)")
    s.add_argument("--out", required=True, help="records file (JSON lines, appended)")
    s.add_argument("--sample", type=int, help="number of blocks to sample")
    s.set_defaults(func=cmd_run)

    s = add("score", help="score a records file")
    s.add_argument("--records", required=True)
    s.add_argument("--out", help="scored records file; rewrites --records by default")
    s.add_argument("--offline", action="store_true", help="no judge; hashing embedder for cosine similarity")
    s.add_argument("--beta", type=float)
    s.set_defaults(func=cmd_score)

    s = add("export-corpus", help="write the four text files of every answered block")
    s.add_argument("blocks")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export_corpus)

    s = add("export-finetune", help="screen scored records into a QA/QRA fine-tuning mix")
    s.add_argument("--records", required=True)
    s.add_argument("--mix", default="80:20", help="QA:QRA proportions")
    s.add_argument("--size", type=int)
    s.add_argument("--min-g-eval", type=float, default=export.SCREEN_MIN_G_EVAL)
    s.add_argument("--review-queue", help="write the selected records here for manual checking")
    s.add_argument("--aliases", action="store_true", help="emit input/output instead of question/answer")
    s.add_argument("--strict", action="store_true", help="fail instead of scaling down a mix")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export_finetune)

    s = add("report", help="aggregate scored records")
    s.add_argument("records", nargs="+")
    s.add_argument("--csv")
    s.add_argument("--json")
    s.add_argument("--diff", nargs=2, metavar=("MODEL_A", "MODEL_B"))
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, load_config(args.config))
    except (runner.AuthError, runner.TransportError, metrics.JudgeError, metrics.EmbeddingError) as exc:
        print(f"bimqa: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (DomainError, SchemaError, OSError, ValueError, KeyError) as exc:
        print(f"bimqa: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"bimqa: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
