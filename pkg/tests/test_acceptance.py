"""Acceptance criteria for the artifact, one test per criterion.

Each test prints a ``PASS``/``FAIL`` line (also collected into the terminal summary) and then
asserts, so a red criterion shows up both in the summary and as a failing test.
"""
import itertools
import json
import math
import random
import re
import socket
import time
import tracemalloc
from collections import Counter
from dataclasses import replace
from pathlib import Path

from bimqa import oracle
from bimqa.cli import main
from bimqa.corpus import synthetic_corpus
from bimqa.exchange import serialize_model
from bimqa.export import MixSpec, mix_counts, screen_for_finetune
from bimqa.geometry import distance, is_rectangle, rectangle_area, shoelace_area, slab_xy, walls_overlap
from bimqa.inspection import Rule, inspect_components
from bimqa.lcs import lcs_length
from bimqa.metrics import MetricConfig, bleu_n, rouge_l, score_record, score_records
from bimqa.mock_server import MockEndpoint, echo_table
from bimqa.model import Block, DefectKind, EvalRecord, Point3, QaItem
from bimqa.report import aggregate
from bimqa.runner import EndpointClient, LlmEndpointConfig, RetryPolicy, build_prompt, run_batch
from bimqa.textualize import parse_block_text, textualize

from conftest import ACCEPTANCE_LINES, API_KEY, API_KEY_ENV, beam, ref_wall, rect_slab, wall
from test_export import load_screening
from test_oracle import grid_overlap
from test_textualize import REF_SENTENCE

ROUGE_MEMORY_BOUND = 4 * 2 ** 20  # bytes of peak traced allocation for one 50,000-character pair


def verdict(n: int, title: str, failures: list[str], detail: str = "") -> None:
    status = "PASS" if not failures else "FAIL"
    line = f"{status} criterion {n:>2}: {title}" + (f" ({detail})" if detail else "")
    if failures:
        line += " :: " + "; ".join(failures[:5])
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert not failures, line


def check(failures: list[str], ok: bool, message: str) -> None:
    if not ok:
        failures.append(message)


# -- 1 -------------------------------------------------------------------------


def test_criterion_01_corpus_arithmetic(tmp_path, monkeypatch, capsys):
    def no_network(*args, **kwargs):
        raise AssertionError("corpus generation must not touch the network")

    monkeypatch.setattr(socket.socket, "connect", no_network)
    failures = []
    out = tmp_path / "gen"
    started = time.perf_counter()
    code = main(["generate", "--out", str(out)])
    elapsed = time.perf_counter() - started
    check(failures, code == 0, f"generate exited {code}")
    capsys.readouterr()

    per_block = Counter(json.loads(line)["block_id"] for line in (out / "qa.jsonl").read_text().splitlines())
    check(failures, len(per_block) == 150, f"{len(per_block)} blocks")
    check(failures, set(per_block.values()) == {22}, f"items per block {sorted(set(per_block.values()))}")
    check(failures, sum(per_block.values()) == 3300, f"{sum(per_block.values())} pairs")

    files = Counter(p.name.rsplit("_", 1)[0] for p in (out / "corpus").iterdir())
    check(failures, len(files) == 150 and set(files.values()) == {4}, f"files per block {sorted(set(files.values()))}")
    check(failures, elapsed < 30, f"runtime {elapsed:.1f} s")
    verdict(1, "corpus arithmetic", failures,
            f"{len(per_block)} blocks, {sum(per_block.values())} pairs, {elapsed:.1f} s")


# -- 2 -------------------------------------------------------------------------


def test_criterion_02_textualization_fidelity(ref_block, room_block, corpus):
    failures = []
    check(failures, REF_SENTENCE in textualize(ref_block).split("\n"), "reference sentence not rendered")
    texts = [(ref_block, textualize(ref_block)), (room_block, textualize(room_block))]
    for ab in corpus:
        texts += [(ab.block, ab.block.clean_text), (ab.block, ab.block.defect_text)]
    for b, text in texts:
        back = textualize(parse_block_text(text, b.block_id, b.source_model, b.block_size_mm))
        check(failures, back == text, f"round trip differs for {b.block_id}")
    verdict(2, "textualization fidelity", failures, f"{len(texts)} texts round-tripped")


# -- 3 -------------------------------------------------------------------------


def test_criterion_03_oracle_desk_checks():
    failures = []
    w = ref_wall()
    check(failures, distance(w.start, w.end) == 2700, f"wall 342693 length {distance(w.start, w.end)}")
    b = Block("b", "m", 8000, [wall(1, -1897, -3191, 2103, -3191), w])
    text = oracle.answer_calc_l1(b).text
    check(failures, "length of the second wall is 2700 mm" in text and text.endswith("The given data is correct."),
          f"C1 answer {text!r}")

    slab = Block("s", "m", 8000, [rect_slab(7, 17597, 1259, 23597, 4659)])
    ((_, area),) = oracle.slab_areas(slab)
    check(failures, abs(area - 20.40) <= 0.005 and f"{area:.2f}" == "20.40", f"slab area {area}")
    check(failures, "an area of 20.40 square meters" in oracle.answer_calc_l3(slab).text, "C3 print")

    naming = inspect_components([wall(1, 0, 0, 3000, 0, number="Q-43"), wall(2, 0, 500, 3000, 500, number="Q43")])
    flagged = {(v.component_id, v.rule) for v in naming.violations}
    check(failures, flagged == {(1, Rule.NON_COMPLIANT_VALUE)}, f"naming findings {flagged}")

    fire = inspect_components([beam(1, 0, 0, 3000, 0, hours=1), beam(2, 0, 500, 3000, 500, hours=2)])
    flagged = {(v.component_id, v.rule) for v in fire.violations}
    check(failures, flagged == {(1, Rule.NON_COMPLIANT_VALUE)}, f"fire findings {flagged}")
    verdict(3, "oracle desk checks", failures)


# -- 4 -------------------------------------------------------------------------

REVIEW_KINDS = {
    "RI-1": {DefectKind.INTEGRITY_ERASE_NUMBER},
    "RI-2": {DefectKind.INTEGRITY_ERASE_FIRE},
    "RR-1": {DefectKind.RATIONALITY_THICKNESS},
    "RR-2": {DefectKind.RATIONALITY_Z_ONE_END, DefectKind.RATIONALITY_Z_BOTH_ENDS},
    "RC-1": {DefectKind.COMPLIANCE_NUMBER},
    "RC-2": {DefectKind.COMPLIANCE_FIRE},
}
DETAIL_FOR = {
    DefectKind.INTEGRITY_ERASE_NUMBER: "DI-1",
    DefectKind.INTEGRITY_ERASE_FIRE: "DI-2",
    DefectKind.RATIONALITY_THICKNESS: "DR-1",
    DefectKind.RATIONALITY_Z_ONE_END: "DR-2",
    DefectKind.RATIONALITY_Z_BOTH_ENDS: "DR-2",
    DefectKind.COMPLIANCE_NUMBER: "DC-1",
    DefectKind.COMPLIANCE_FIRE: "DC-2",
}
DETAIL_PATTERNS = {
    "DI-1": r"\(ID (\d+)\) should be completed as (\S+)\.",
    "DI-2": r"\(ID (\d+)\) should be completed as ([\d.]+) hours?\.",
    "DR-1": r"\(ID (\d+)\) can be modified to (\d+) mm",
    "DR-2": r"\(ID (\d+)\) can both be modified to (-?\d+)",
    "DC-1": r"component with ID (\d+) can be modified to (\S+?)\.(?:\s|$)",
    "DC-2": r"beam with ID (\d+) can be modified to ([\d.]+) hours?\.",
}


def flagged_ids(question_id: str, text: str) -> set[int]:
    """Read the flagged component ids out of a review answer's text."""
    if question_id.startswith("RR"):
        return {int(x) for x in re.findall(r"its ID is (\d+)", text)}
    if "are:" not in text:
        return set()
    return {int(x) for x in re.findall(r"\d+", text.split("are:", 1)[1])}


def apply_detail(components, question_id: str, text: str) -> list:
    """Apply the repair stated by one detail answer's text."""
    by_id = {c.id: c for c in components}
    for cid, value in re.findall(DETAIL_PATTERNS[question_id], text):
        c = by_id[int(cid)]
        if question_id in ("DI-1", "DC-1"):
            c = replace(c, construction_number=value)
        elif question_id in ("DI-2", "DC-2"):
            c = replace(c, fire_resistance_hours=float(value), fire_resistance_text=None)
        elif question_id == "DR-1":
            c = replace(c, thickness_mm=int(value))
        else:
            z = int(value)
            c = replace(c, start=Point3(c.start.x, c.start.y, z), end=Point3(c.end.x, c.end.y, z))
        by_id[c.id] = c
    return [by_id[c.id] for c in components]


def test_criterion_04_oracle_manifest_consistency(corpus):
    failures = []
    blocks = corpus[:100]
    for ab in blocks:
        truths = {qa.question_id: qa.ground_truth for qa in ab.items}
        for qid, kinds in REVIEW_KINDS.items():
            expected = {d.target_id for d in ab.manifest if d.kind in kinds}
            got = flagged_ids(qid, truths[qid])
            check(failures, got == expected, f"{ab.block.block_id} {qid}: {sorted(got)} != {sorted(expected)}")

        repaired = oracle.defect_view(ab.block, ab.manifest)
        for d in ab.manifest:
            qid = DETAIL_FOR[d.kind]
            target = d.target_id if qid[:2] in ("DI", "DR") else None
            text = oracle.answer(qid, ab.block, ab.manifest, target=target).text
            check(failures, re.search(DETAIL_PATTERNS[qid], text) is not None, f"{qid} text not parsed: {text!r}")
            repaired = apply_detail(repaired, qid, text)
        leftover = [
            oracle.review_missing(repaired, "construction number"), oracle.review_missing(repaired, "fire resistance"),
            oracle.review_thickness(repaired), oracle.review_z(repaired), oracle.review_numbers(repaired),
            oracle.review_fire(repaired),
        ]
        check(failures, not any(leftover), f"{ab.block.block_id}: findings after repair {leftover}")
        check(failures, inspect_components(repaired).clean, f"{ab.block.block_id}: inspection not clean after repair")
    n_targets = sum(len(ab.manifest) for ab in blocks)
    verdict(4, "oracle-manifest consistency", failures, f"{len(blocks)} blocks, {n_targets} defects")


# -- 5 -------------------------------------------------------------------------


def test_criterion_05_geometry_cross_validation(corpus, room_block, ref_block):
    failures = []
    pairs = 0
    for b in [room_block, ref_block] + [ab.block for ab in corpus]:
        for a, c in itertools.combinations(b.walls, 2):
            pairs += 1
            check(failures, walls_overlap(a, c) == grid_overlap(a, c), f"{b.block_id} walls {a.id}/{c.id}")
    slabs = [s for ab in corpus for s in ab.block.slabs] + list(room_block.slabs)
    slabs.append(rect_slab(7, 17597, 1259, 23597, 4659))
    rects = 0
    for s in slabs:
        pts = slab_xy(s)
        if is_rectangle(pts):
            rects += 1
            check(failures, math.isclose(rectangle_area(pts), shoelace_area(pts), rel_tol=1e-9, abs_tol=0),
                  f"slab {s.id} area")
    check(failures, rects > 0, "no rectangular slab checked")
    verdict(5, "geometry cross-validation", failures, f"{pairs} wall pairs, {rects} rectangles")


# -- 6 -------------------------------------------------------------------------


def naive_lcs(a: str, b: str) -> int:
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def naive_rouge_l(truth: str, output: str) -> float:
    lcs = naive_lcs(truth, output)
    if lcs == 0:
        return 0.0
    recall, precision = lcs / len(truth), lcs / len(output)
    return 2 * recall * precision / (recall + precision)


def test_criterion_06_metric_references():
    failures = []
    rng = random.Random(6)
    for i in range(200):
        alphabet = "abcd" if i % 2 else "wall 342693, thickness 200 mm.\n"
        a = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 60)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 60)))
        check(failures, lcs_length(a, b) == naive_lcs(a, b), f"LCS pair {i}")
        expected, got = naive_rouge_l(a, b), rouge_l(a, b)
        check(failures, math.isclose(got, expected, rel_tol=1e-12, abs_tol=1e-15), f"ROUGE-L pair {i}: {got} {expected}")
    check(failures, rouge_l("abcde", "ace") == 0.75, "abcde/ace")
    check(failures, abs(bleu_n("the the the", "the cat", 1) - 1 / 3) <= 1e-12, "BLEU-1 clipping")

    truth = "The ID of the first wall is 342693, and the wall thickness is 200 mm."
    qa = QaItem("E1", "Extraction", "L1", "q", "e", truth, uses_defect_text=False, block_id="b")
    s = score_record(EvalRecord(qa, "m", "[Final Answer]:\n" + truth)).scores
    local = (s.format, s.bleu1, s.bleu2, s.rouge_l, s.cos_sim)
    check(failures, local == (1, 1.0, 1.0, 1.0, 1.0), f"identity scores {local}")
    verdict(6, "metric references", failures, "200 random pairs")


# -- 7 -------------------------------------------------------------------------


def _pipeline(model_file: Path, root: Path) -> None:
    blocks, injected, answered = root / "blocks", root / "injected", root / "answered"
    assert main(["partition", str(model_file), "--out", str(blocks)]) == 0
    for block_file in sorted(blocks.glob("*.block.json")):
        assert main(["--seed", "11", "inject", str(block_file), "--out", str(injected)]) == 0
    assert main(["questions", str(injected), "--out", str(root / "questions.jsonl")]) == 0
    assert main(["answers", str(injected), "--out", str(root / "answers.jsonl"), "--bundles", str(answered)]) == 0
    assert main(["export-corpus", str(answered), "--out", str(root / "corpus")]) == 0


def test_criterion_07_determinism(tmp_path, capsys):
    failures = []
    model_file = tmp_path / "model.json"
    model_file.write_text(serialize_model(synthetic_corpus(0)[0]), encoding="utf-8")
    for run in ("a", "b"):
        _pipeline(model_file, tmp_path / run)
    capsys.readouterr()
    files = {run: {p.relative_to(tmp_path / run): p.read_bytes()
                   for p in sorted((tmp_path / run).rglob("*")) if p.is_file()} for run in ("a", "b")}
    check(failures, files["a"].keys() == files["b"].keys(), "different file sets")
    for rel, data in files["a"].items():
        check(failures, files["b"].get(rel) == data, f"{rel} differs")
    check(failures, len(files["a"]) > 10, "pipeline produced too few files")
    verdict(7, "determinism", failures, f"{len(files['a'])} files compared byte for byte")


# -- 8 -------------------------------------------------------------------------


def _offline_run(pairs, out: Path, strip_marker=None) -> list:
    ep = LlmEndpointConfig("", "echo-model", api_key_env=API_KEY_ENV, max_in_flight=8,
                           retry=RetryPolicy(2, (0.0,)))
    with MockEndpoint(echo_table(pairs), api_key=API_KEY, strip_marker=strip_marker) as mock:
        records = run_batch(pairs, replace(ep, base_url=mock.url), out)
        judge_ep = replace(ep, base_url=mock.url, model_name="judge", temperature=0)
        with EndpointClient(judge_ep) as judge:
            return score_records(records, MetricConfig(judge_endpoint=judge_ep), judge=judge, max_in_flight=8)


def test_criterion_08_offline_end_to_end(corpus, api_key, tmp_path):
    failures = []
    pairs = [(qa, ab.block) for ab in corpus for qa in ab.items]

    scored = _offline_run(pairs, tmp_path / "echo.jsonl")
    overall = next(r for r in aggregate(scored) if r.slice == "overall")
    check(failures, overall.n == len(pairs), f"n={overall.n}")
    check(failures, all(v == 1.0 for v in overall.means.values()), f"means {overall.means}")
    check(failures, overall.means["format"] == 1.0, "format accuracy below 100%")

    stripped = {build_prompt(qa, b).user_message() for qa, b in pairs[::2]}
    check(failures, len(stripped) == len(pairs[::2]), "user messages are not unique")
    half = _offline_run(pairs, tmp_path / "half.jsonl", strip_marker=stripped.__contains__)
    overall = next(r for r in aggregate(half) if r.slice == "overall")
    check(failures, overall.means["format"] == 0.5, f"format accuracy {overall.means['format']}")
    full_text = [r for r in half if "score:scored_on=full_text" in r.flags]
    check(failures, len(full_text) == len(pairs) // 2, f"{len(full_text)} records scored on full text")
    check(failures, all(r.scores.format == 0 for r in full_text), "full-text records with format 1")
    verdict(8, "offline end-to-end", failures, f"{len(pairs)} records, format accuracy 100% then 50%")


# -- 9 -------------------------------------------------------------------------


def test_criterion_09_finetune_export(tmp_path):
    failures = []
    cases = load_screening()
    queue = tmp_path / "queue.jsonl"
    screen_for_finetune([rec for _, _, rec in cases], min_g_eval=0.8, review_queue=queue)
    queued = [(q["model_name"], q["question_id"], q["block_id"]) for q in map(json.loads, queue.read_text().splitlines())]
    expected = [(r.model_name, r.qa.question_id, r.qa.block_id) for _, label, r in cases if label["qualifies"]]
    check(failures, queued == expected, f"selected {queued} expected {expected}")

    n_qa, n_qra = mix_counts(MixSpec.parse("80:20", 2661), 3000, 1000)
    check(failures, abs(n_qa - 2129) <= 1 and abs(n_qra - 532) <= 1, f"mix {n_qa}/{n_qra}")
    verdict(9, "fine-tune export", failures, f"{len(expected)} qualifiers, mix {n_qa}/{n_qra}")


# -- 10 ------------------------------------------------------------------------


def test_criterion_10_rouge_performance():
    failures = []
    rng = random.Random(10)
    alphabet = "abcdefghijklmnopqrstuvwxyz0123456789 ,.()-\n"
    a = "".join(rng.choice(alphabet) for _ in range(50_000))
    b = "".join(rng.choice(alphabet) for _ in range(50_000))
    qa = QaItem("E1", "Extraction", "L1", "q", "e", a, uses_defect_text=False, block_id="b")

    tracemalloc.start()
    try:
        started = time.perf_counter()
        rec = score_record(EvalRecord(qa, "m", "[Final Answer]:\n" + b))
        elapsed = time.perf_counter() - started
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    check(failures, rec.scores is not None and 0 < rec.scores.rouge_l < 1, "pair not scored")
    check(failures, elapsed < 10, f"{elapsed:.2f} s")
    check(failures, peak <= ROUGE_MEMORY_BOUND, f"peak {peak / 2 ** 20:.2f} MiB")
    verdict(10, "ROUGE-L performance", failures, f"{elapsed:.2f} s, peak {peak / 2 ** 20:.2f} MiB")
