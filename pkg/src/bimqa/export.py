"""Corpus files, fine-tuning screening and QA/QRA dataset mixing."""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .exchange import block_to_dict, parse_block
from .inject import defect_components, manifest_from_dict, manifest_to_dict
from .metrics import MARKER
from .model import QUESTION_IDS, Block, DomainError, EvalRecord, QaItem
from .rng import SplitMix64
from .runner import canonical_system_prompt
from .textualize import textualize, textualize_components

log = logging.getLogger(__name__)

FILE_SUFFIXES = ("clean", "defect", "questions", "answers")
SCREEN_MIN_FORMAT = 1
SCREEN_MIN_G_EVAL = 0.8

# Training hyperparameters of the reference fine-tuning runs; training itself
# happens outside this package, so they are only written as a sidecar.
LORA_PARAMETERS = {
    "finetuning_type": "lora",
    "lora_rank": 8,
    "lora_alpha": 32,
    "lora_dropout": 0,
    "cutoff_len": 3072,
    "learning_rate": 5.0e-5,
    "gradient_accumulation_steps": 8,
    "warmup_steps": 5,
    "plot_loss": True,
}


class PoolTooSmall(DomainError):
    pass


def file_stem(block_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", block_id)


# -- block bundles -------------------------------------------------------------


@dataclass(frozen=True)
class AnsweredBlock:
    """A block with its defect manifest, injection seed and answered questions."""

    block: Block
    manifest: tuple
    seed: int
    items: tuple

    def to_dict(self) -> dict:
        return {
            "block": block_to_dict(self.block),
            "manifest": manifest_to_dict(self.block.block_id, self.seed, self.manifest),
            "items": [qa.to_dict() for qa in self.items],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnsweredBlock":
        _, seed, manifest = manifest_from_dict(d["manifest"])
        items = tuple(QaItem.from_dict(q) for q in d.get("items", ()))
        return cls.assemble(parse_block(d["block"]), manifest, seed, items)

    @classmethod
    def assemble(cls, b: Block, manifest, seed: int, items=()) -> "AnsweredBlock":
        """Bundle a clean block with its manifest, rendering both texts."""
        b = Block(b.block_id, b.source_model, b.block_size_mm, b.components, clean_text=textualize(b),
                  defect_text=textualize_components(defect_components(b, manifest)))
        return cls(b, tuple(manifest), seed, tuple(items))


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=False) + "\n"


def write_bundle(ab: AnsweredBlock, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{file_stem(ab.block.block_id)}.bundle.json"
    path.write_text(dumps_json(ab.to_dict()), encoding="utf-8")
    return path


def read_bundles(path, manifest=None) -> list[AnsweredBlock]:
    """Bundles from one ``*.bundle.json`` file or every such file in a directory, in name order.

    With ``manifest`` set, ``path`` instead names plain block files (one file
    or a directory of ``*.block.json``) and ``manifest`` a manifest file holding
    one manifest object, a list of them, or one per line.
    """
    p = Path(path)
    if manifest is None:
        files = sorted(p.glob("*.bundle.json")) if p.is_dir() else [p]
        return [AnsweredBlock.from_dict(json.loads(f.read_text(encoding="utf-8"))) for f in files]
    manifests = {}
    for d in _manifest_docs(Path(manifest).read_text(encoding="utf-8")):
        block_id, seed, records = manifest_from_dict(d)
        manifests[block_id] = (seed, records)
    out = []
    for f in sorted(p.glob("*.block.json")) if p.is_dir() else [p]:
        b = parse_block(f.read_bytes())
        if b.block_id not in manifests:
            raise DomainError(f"manifest file has no entry for block {b.block_id!r}")
        seed, records = manifests[b.block_id]
        out.append(AnsweredBlock.assemble(b, records, seed))
    return out


def _manifest_docs(text: str) -> list[dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    return doc if isinstance(doc, list) else [doc]


# -- the four corpus files -----------------------------------------------------


def _entries(qas, field_name: str) -> str:
    return "\n".join(f"[{qa.question_id}]\n{getattr(qa, field_name)}\n" for qa in qas)


def export_block_files(b: Block, qas, out_dir) -> list[Path]:
    """Clean text, defect text, questions and answers as ``<stem>_<part>.txt``.

    Questions and answers are tagged with their question id and follow the
    template order, so entry k of both files belongs to the same question.
    """
    order = {qid: i for i, qid in enumerate(QUESTION_IDS)}
    qas = sorted(qas, key=lambda qa: order[qa.question_id])
    if b.defect_text is None:
        raise DomainError(f"block {b.block_id} has no defect text; inject it before export")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = file_stem(b.block_id)
    bodies = {
        "clean": b.clean_text or textualize(b),
        "defect": b.defect_text,
        "questions": _entries(qas, "question_text"),
        "answers": _entries(qas, "ground_truth"),
    }
    paths = []
    for suffix in FILE_SUFFIXES:
        path = out / f"{stem}_{suffix}.txt"
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(bodies[suffix])
        paths.append(path)
    return paths


def read_tagged_entries(path) -> list[tuple[str, str]]:
    """(question id, text) pairs from a questions or answers file."""
    text = Path(path).read_text(encoding="utf-8")
    parts = re.split(r"^\[([A-Z]{1,2}-?\d)\]\n", text, flags=re.M)
    return [(parts[i], parts[i + 1].rstrip("\n")) for i in range(1, len(parts), 2)]


# -- fine-tuning records -------------------------------------------------------


@dataclass(frozen=True)
class FinetuneRecord:
    instruction: str
    question: str
    answer: str
    form: str  # "qa" or "qra"

    def __post_init__(self):
        if self.form not in ("qa", "qra"):
            raise DomainError(f"unknown record form {self.form!r}")
        if self.form == "qra":
            if self.answer.count(MARKER) != 1:
                raise DomainError("a QRA answer holds the marker exactly once")
            if not self.answer.split(MARKER)[0].strip():
                raise DomainError("a QRA answer needs reasoning before the marker")

    def to_dict(self, aliases: bool = False) -> dict:
        if aliases:
            return {"instruction": self.instruction, "input": self.question, "output": self.answer,
                    "form": self.form}
        return {"instruction": self.instruction, "question": self.question, "answer": self.answer,
                "form": self.form}

    @classmethod
    def from_dict(cls, d: dict) -> "FinetuneRecord":
        return cls(d["instruction"], d.get("question", d.get("input")), d.get("answer", d.get("output")), d["form"])


def split_reasoning(raw: str) -> str:
    """Model text before the last marker line, with trailing whitespace removed."""
    lines = raw.splitlines(keepends=True)
    for i in range(len(lines) - 1, -1, -1):
        if lines[i].strip() == MARKER:
            return "".join(lines[:i]).rstrip()
    return ""


def qualifies(rec: EvalRecord, min_g_eval: float = SCREEN_MIN_G_EVAL) -> bool:
    s = rec.scores
    return (rec.error is None and s is not None and s.format >= SCREEN_MIN_FORMAT
            and s.g_eval is not None and s.g_eval >= min_g_eval)


def _question(rec: EvalRecord) -> str:
    if rec.prompt is None:
        raise DomainError(f"record {rec.key} carries no prompt")
    return rec.prompt.user_message()


def _dedupe(records: list[FinetuneRecord]) -> list[FinetuneRecord]:
    seen, out = set(), []
    for r in records:
        if r not in seen:
            seen.add(r)
            out.append(r)
    return out


def screen_for_finetune(records, min_g_eval: float = SCREEN_MIN_G_EVAL, review_queue=None
                        ) -> tuple[list[FinetuneRecord], list[FinetuneRecord]]:
    """QA and QRA pools from records with format 1 and G-Eval of at least ``min_g_eval``.

    Every qualifier yields a QA record (ground truth as answer); those with
    reasoning before the marker also yield a QRA record. Exact duplicates are
    dropped. With ``review_queue`` set, the selected records are also written
    there, one per line, for manual checking.
    """
    instruction = canonical_system_prompt()
    qa_pool, qra_pool, queue = [], [], []
    for rec in records:
        if not qualifies(rec, min_g_eval):
            continue
        question = _question(rec)
        truth = rec.qa.ground_truth
        qa_pool.append(FinetuneRecord(instruction, question, f"{MARKER}\n{truth}", "qa"))
        reasoning = split_reasoning(rec.raw_output)
        has_qra = bool(reasoning.strip()) and MARKER not in reasoning
        if has_qra:
            qra_pool.append(FinetuneRecord(instruction, question, f"{reasoning}\n{MARKER}\n{truth}", "qra"))
        queue.append({"model_name": rec.model_name, "block_id": rec.qa.block_id,
                      "question_id": rec.qa.question_id, "g_eval": rec.scores.g_eval,
                      "forms": ["qa", "qra"] if has_qra else ["qa"], "checked": False})
    if review_queue is not None:
        write_jsonl(review_queue, queue)
    return _dedupe(qa_pool), _dedupe(qra_pool)


@dataclass(frozen=True)
class MixSpec:
    qa_fraction: float
    qra_fraction: float
    target_size: int | None = None
    seed: int = 0

    def __post_init__(self):
        for f in (self.qa_fraction, self.qra_fraction):
            if not 0.0 <= f <= 1.0:
                raise DomainError("fractions must lie in [0, 1]")
        if abs(self.qa_fraction + self.qra_fraction - 1.0) > 1e-9:
            raise DomainError("fractions must sum to 1")
        if self.target_size is not None and self.target_size < 0:
            raise DomainError("target_size must be non-negative")

    @classmethod
    def parse(cls, mix: str, target_size: int | None = None, seed: int = 0) -> "MixSpec":
        """``"80:20"`` means 80% QA and 20% QRA."""
        try:
            a, b = (float(x) for x in mix.split(":"))
        except ValueError as exc:
            raise DomainError(f"mix must look like 80:20, got {mix!r}") from exc
        if a < 0 or b < 0 or a + b <= 0:
            raise DomainError(f"mix must have non-negative parts, got {mix!r}")
        return cls(a / (a + b), b / (a + b), target_size, seed)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def mix_counts(spec: MixSpec, n_qa_pool: int, n_qra_pool: int, strict: bool = False) -> tuple[int, int]:
    """Number of QA and QRA records to draw."""
    if spec.target_size is None:
        limits = []
        if spec.qa_fraction > 0:
            limits.append(n_qa_pool / spec.qa_fraction)
        if spec.qra_fraction > 0:
            limits.append(n_qra_pool / spec.qra_fraction)
        target = int(math.floor(min(limits) + 1e-9))
    else:
        target = spec.target_size
    n_qa = _round_half_up(target * spec.qa_fraction)
    n_qra = target - n_qa
    if n_qa <= n_qa_pool and n_qra <= n_qra_pool:
        return n_qa, n_qra
    msg = f"mix needs {n_qa} QA and {n_qra} QRA records, pools hold {n_qa_pool} and {n_qra_pool}"
    if strict:
        raise PoolTooSmall(msg)
    factor = min(n_qa_pool / n_qa if n_qa else math.inf, n_qra_pool / n_qra if n_qra else math.inf)
    scaled = int(math.floor(target * factor + 1e-9))
    n_qa = min(n_qa_pool, _round_half_up(scaled * spec.qa_fraction))
    n_qra = min(n_qra_pool, scaled - n_qa)
    log.warning("%s; scaled down to %d QA and %d QRA", msg, n_qa, n_qra)
    return n_qa, n_qra


def mix_finetune(qa_pool, qra_pool, spec: MixSpec, strict: bool = False) -> list[FinetuneRecord]:
    """A seeded sample of both pools at the spec's fractions, in seeded random order."""
    qa_pool, qra_pool = list(qa_pool), list(qra_pool)
    n_qa, n_qra = mix_counts(spec, len(qa_pool), len(qra_pool), strict)
    rng = SplitMix64(spec.seed).split("mix")
    out = rng.split("qa").sample(qa_pool, n_qa) + rng.split("qra").sample(qra_pool, n_qra)
    return rng.split("order").shuffle(out)


def lora_sidecar(records, spec: MixSpec) -> dict:
    n_qra = sum(1 for r in records if r.form == "qra")
    meta = dict(LORA_PARAMETERS)
    # a QRA-only mix is the smallest dataset and trains one extra epoch
    meta["num_train_epochs"] = 3 if spec.qa_fraction == 0 else 2
    meta["dataset"] = {"size": len(records), "qa": len(records) - n_qra, "qra": n_qra,
                       "qa_fraction": spec.qa_fraction, "qra_fraction": spec.qra_fraction, "seed": spec.seed}
    return meta


# -- JSON lines ----------------------------------------------------------------


def write_jsonl(path, rows) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def write_finetune(path, records, spec: MixSpec, aliases: bool = False) -> Path:
    """The dataset as JSON lines plus a ``.lora.json`` hyperparameter sidecar."""
    path = Path(path)
    write_jsonl(path, (r.to_dict(aliases) for r in records))
    sidecar = path.with_name(path.name + ".lora.json")
    sidecar.write_text(dumps_json(lora_sidecar(records, spec)), encoding="utf-8")
    return sidecar


__all__ = [
    "AnsweredBlock",
    "FILE_SUFFIXES",
    "FinetuneRecord",
    "LORA_PARAMETERS",
    "MixSpec",
    "PoolTooSmall",
    "export_block_files",
    "file_stem",
    "lora_sidecar",
    "mix_counts",
    "mix_finetune",
    "read_bundles",
    "read_tagged_entries",
    "screen_for_finetune",
    "split_reasoning",
    "write_bundle",
    "write_finetune",
    "write_jsonl",
]
