"""Per-model, per-slice score tables and model-to-model differences."""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .model import GENERAL_IDS, QUESTION_IDS, SCORE_FIELDS, DomainError

SLICES = ("overall", "general_tasks", "domain_tasks") + QUESTION_IDS
PRECISION = 4


class MissingModel(DomainError):
    pass


@dataclass(frozen=True)
class ReportRow:
    model_name: str
    slice: str
    n: int
    means: dict = field(default_factory=dict)  # indicator -> mean over present scores, or None
    absent: dict = field(default_factory=dict)  # indicator -> share of records without that score
    g_eval_std: float | None = None  # sample standard deviation; not part of the reference tables

    def rounded(self, digits: int = PRECISION) -> "ReportRow":
        r = lambda v: None if v is None else round(v, digits)  # noqa: E731
        return ReportRow(self.model_name, self.slice, self.n, {k: r(v) for k, v in self.means.items()},
                         {k: r(v) for k, v in self.absent.items()}, r(self.g_eval_std))


def _slice_of(question_id: str) -> str:
    return "general_tasks" if question_id in GENERAL_IDS else "domain_tasks"


def _row(model: str, name: str, recs: list) -> ReportRow:
    means, absent, g_values = {}, {}, []
    for ind in SCORE_FIELDS:
        vals = [getattr(r.scores, ind) for r in recs if r.scores is not None]
        vals = [float(v) for v in vals if v is not None]
        means[ind] = math.fsum(vals) / len(vals) if vals else None
        absent[ind] = (len(recs) - len(vals)) / len(recs)
        if ind == "g_eval":
            g_values = vals
    std = statistics.stdev(g_values) if len(g_values) >= 2 else None
    return ReportRow(model, name, len(recs), means, absent, std)


def aggregate(records) -> list[ReportRow]:
    """Rows per model: overall, general tasks, domain tasks, then each question id present.

    Absent scores are left out of the means and reported as a share.
    """
    by_model: dict[str, list] = {}
    for r in records:
        by_model.setdefault(r.model_name, []).append(r)
    rows = []
    for model in sorted(by_model):
        recs = by_model[model]
        groups = {"overall": recs}
        for r in recs:
            groups.setdefault(_slice_of(r.qa.question_id), []).append(r)
            groups.setdefault(r.qa.question_id, []).append(r)
        rows.extend(_row(model, name, groups[name]) for name in SLICES if name in groups)
    return rows


# -- differences ---------------------------------------------------------------


def diff_models(a: str, b: str, rows) -> list[tuple[str, dict]]:
    """Per-question deltas ``a - b`` of every indicator mean, in question order."""
    per = {}
    for r in rows:
        if r.slice in QUESTION_IDS:
            per.setdefault(r.model_name, {})[r.slice] = r
    for m in (a, b):
        if m not in per:
            raise MissingModel(f"no per-question rows for model {m!r}")
    wanted = set(per[a]) | set(per[b])
    for m in (a, b):
        missing = [q for q in QUESTION_IDS if q in wanted and q not in per[m]]
        if missing:
            raise MissingModel(f"model {m!r} has no rows for {', '.join(missing)}")
    out = []
    for q in QUESTION_IDS:
        if q not in wanted:
            continue
        ra, rb = per[a][q], per[b][q]
        out.append((q, {ind: None if ra.means[ind] is None or rb.means[ind] is None
                        else ra.means[ind] - rb.means[ind] for ind in SCORE_FIELDS}))
    return out


# -- files ---------------------------------------------------------------------


CSV_COLUMNS = (["model_name", "slice", "n"] + list(SCORE_FIELDS) + ["g_eval_std"]
               + [f"{ind}_absent" for ind in SCORE_FIELDS])


def _fmt(v) -> str:
    return "" if v is None else f"{v:.{PRECISION}f}"


def write_csv(rows, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r.model_name, r.slice, r.n] + [_fmt(r.means[i]) for i in SCORE_FIELDS]
                       + [_fmt(r.g_eval_std)] + [_fmt(r.absent[i]) for i in SCORE_FIELDS])


def read_csv(path) -> list[ReportRow]:
    parse = lambda s: None if s == "" else float(s)  # noqa: E731
    rows = []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for d in csv.DictReader(fh):
            rows.append(ReportRow(
                d["model_name"], d["slice"], int(d["n"]),
                {i: parse(d[i]) for i in SCORE_FIELDS},
                {i: parse(d[f"{i}_absent"]) for i in SCORE_FIELDS},
                parse(d["g_eval_std"]),
            ))
    return rows


def summary(rows, beta: float | None = None) -> dict:
    return {
        "notes": {
            "scored_text": "similarity metrics use the text after the final-answer marker when the format "
                           "score is 1, otherwise the whole output",
            "g_eval_std": "sample standard deviation of G-Eval, added by this tool",
            "beta": beta,
        },
        "rows": [
            {"model_name": r.model_name, "slice": r.slice, "n": r.n, "means": r.means, "absent": r.absent,
             "g_eval_std": r.g_eval_std}
            for r in (row.rounded() for row in rows)
        ],
    }


def write_summary(rows, path, beta: float | None = None) -> None:
    Path(path).write_text(json.dumps(summary(rows, beta), indent=2) + "\n", encoding="utf-8")


def format_table(rows) -> str:
    """Plain-text table of the overall and task-group rows."""
    head = f"{'model':<24}{'slice':<15}{'n':>6}" + "".join(f"{i:>9}" for i in SCORE_FIELDS)
    lines = [head]
    for r in rows:
        if r.slice in ("overall", "general_tasks", "domain_tasks"):
            vals = "".join(f"{'-' if r.means[i] is None else format(r.means[i], '.4f'):>9}" for i in SCORE_FIELDS)
            lines.append(f"{r.model_name:<24}{r.slice:<15}{r.n:>6}{vals}")
    return "\n".join(lines)


__all__ = [
    "CSV_COLUMNS",
    "MissingModel",
    "ReportRow",
    "SLICES",
    "aggregate",
    "diff_models",
    "format_table",
    "read_csv",
    "summary",
    "write_csv",
    "write_summary",
]
