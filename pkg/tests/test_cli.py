import json

import pytest

from bimqa.cli import main
from bimqa.corpus import synthetic_corpus
from bimqa.exchange import serialize_model
from bimqa.mock_server import MockEndpoint
from bimqa.model import BimModel
from bimqa.runner import read_records

from conftest import API_KEY, API_KEY_ENV, ref_wall, wall


@pytest.fixture
def model_file(tmp_path):
    p = tmp_path / "model.json"
    p.write_text(serialize_model(synthetic_corpus(0)[0]), encoding="utf-8")
    return p


def _endpoint_file(path, url, **extra):
    doc = {"base_url": url, "model_name": "mock-model", "api_key_env": API_KEY_ENV,
           "retry": {"max_attempts": 2, "backoff_s": [0]}}
    doc.update(extra)
    path.write_text(json.dumps(doc))
    return path


def test_inspect_reports_and_strict_exit(tmp_path, capsys):
    p = tmp_path / "m.json"
    p.write_text(serialize_model(BimModel("m", [wall(1, 0, 0, 3000, 0, number="Q-43")])))
    assert main(["inspect", str(p)]) == 0
    assert "NonCompliantValue" in capsys.readouterr().out
    assert main(["inspect", str(p), "--strict"]) == 1
    capsys.readouterr()
    assert main(["inspect", str(p), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["clean"] is False


def test_missing_file_is_a_validation_failure(tmp_path):
    assert main(["inspect", str(tmp_path / "nope.json")]) == 1


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as info:
        main(["partition"])
    assert info.value.code == 1


def test_global_options_after_subcommand(model_file, tmp_path):
    assert main(["partition", str(model_file), "--out", str(tmp_path / "b"), "--seed", "3"]) == 0


def test_stage_commands(model_file, tmp_path, capsys):
    blocks = tmp_path / "blocks"
    assert main(["partition", str(model_file), "--block-size", "8000", "--out", str(blocks)]) == 0
    block_files = sorted(blocks.glob("*.block.json"))
    manifest = json.loads((blocks / "partition.json").read_text())
    assert len(block_files) == len(manifest["blocks"]) > 0

    first = block_files[0]
    assert main(["textualize", str(first), "--check-roundtrip", "--out", str(tmp_path / "t.txt")]) == 0
    assert (tmp_path / "t.txt").read_text().startswith("This is part of a single-story building model")

    injected = tmp_path / "injected"
    assert main(["--seed", "5", "inject", str(first), "--out", str(injected)]) == 0
    manifests = list(injected.glob("*.manifest.json"))
    assert len(manifests) == 1 and list(injected.glob("*_defect.txt"))

    qfile, afile = tmp_path / "q.jsonl", tmp_path / "a.jsonl"
    assert main(["questions", str(injected), "--out", str(qfile)]) == 0
    questions = [json.loads(line) for line in qfile.read_text().splitlines()]
    assert len(questions) == 22 and all(q["ground_truth"] == "" for q in questions)

    assert main(["answers", str(first), "--manifest", str(manifests[0]), "--out", str(afile),
                 "--bundles", str(tmp_path / "answered")]) == 0
    answers = [json.loads(line) for line in afile.read_text().splitlines()]
    assert [a["question_text"] for a in answers] == [q["question_text"] for q in questions]
    assert all(a["ground_truth"] for a in answers)

    corpus_dir = tmp_path / "corpus"
    assert main(["export-corpus", str(tmp_path / "answered"), "--out", str(corpus_dir)]) == 0
    assert len(list(corpus_dir.iterdir())) == 4


def test_inject_refuses_dirty_block(tmp_path):
    from bimqa.exchange import serialize_block
    from bimqa.model import Block
    p = tmp_path / "b.block.json"
    comps = [wall(i, 0, i * 500, 3000, i * 500, number="Q-1" if i == 1 else f"Q{i}") for i in range(1, 8)]
    p.write_text(serialize_block(Block("b", "m", 8000, comps)))
    assert main(["inject", str(p), "--out", str(tmp_path / "o")]) == 1


def test_answers_with_unknown_block_in_manifest(model_file, tmp_path):
    blocks = tmp_path / "blocks"
    main(["partition", str(model_file), "--out", str(blocks)])
    (tmp_path / "m.json").write_text("[]")
    assert main(["answers", str(blocks), "--manifest", str(tmp_path / "m.json")]) == 1


def test_pipeline_generate_run_score_report(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(API_KEY_ENV, API_KEY)
    out = tmp_path / "gen"
    assert main(["generate", "--out", str(out)]) == 0
    assert "150 blocks, 3300 question-answer pairs" in capsys.readouterr().out
    assert len(list((out / "corpus").iterdir())) == 600

    from bimqa.cli import read_qa_file
    from bimqa.export import read_bundles
    from bimqa.mock_server import echo_table
    bundles = {ab.block.block_id: ab.block for ab in read_bundles(out / "blocks")}
    qas = read_qa_file(out / "qa.jsonl")
    echo = echo_table((qa, bundles[qa.block_id]) for qa in qas)

    records = tmp_path / "records.jsonl"
    with MockEndpoint(echo, api_key=API_KEY) as mock:
        ep = _endpoint_file(tmp_path / "ep.json", mock.url)
        args = ["run", "--qa", str(out / "qa.jsonl"), "--blocks", str(out / "blocks"), "--endpoint", str(ep),
                "--out", str(records), "--sample", "3"]
        assert main(args) == 0
        assert main(args) == 0  # resumed: nothing left to ask
        assert len(mock.chat_requests) == 66
        assert len(read_records(records)) == 66

        cfg = tmp_path / "score.json"
        cfg.write_text(json.dumps({"metrics": {"judge_endpoint": json.loads(ep.read_text())}}))
        assert main(["--config", str(cfg), "score", "--records", str(records)]) == 0

    scored = read_records(records)
    assert all(r.scores.g_eval == 1.0 and r.scores.format == 1 for r in scored)

    csv, summary = tmp_path / "r.csv", tmp_path / "r.json"
    assert main(["report", str(records), "--csv", str(csv), "--json", str(summary),
                 "--diff", "mock-model", "mock-model"]) == 0
    doc = json.loads(summary.read_text())
    overall = doc["rows"][0]
    assert overall["slice"] == "overall" and overall["n"] == 66
    assert all(v == 1.0 for v in overall["means"].values())
    assert doc["notes"]["beta"] == 1.0

    ft = tmp_path / "ft.jsonl"
    assert main(["export-finetune", "--records", str(records), "--mix", "100:0", "--out", str(ft),
                 "--review-queue", str(tmp_path / "queue.jsonl")]) == 0
    assert len(ft.read_text().splitlines()) == 66
    assert (tmp_path / "ft.jsonl.lora.json").exists()


def test_offline_scoring(tmp_path, corpus):
    from bimqa.model import EvalRecord
    qa = corpus[0].items[0]
    records = tmp_path / "r.jsonl"
    records.write_text(json.dumps(EvalRecord(qa, "m", "[Final Answer]:\n" + qa.ground_truth).to_dict()) + "\n")
    assert main(["score", "--records", str(records), "--offline", "--beta", "2"]) == 0
    (rec,) = read_records(records)
    assert rec.scores.rouge_l == 1.0
    assert "score:beta=2" in rec.flags
    assert "score:g_eval_unconfigured" in rec.flags


def test_run_without_api_key_exits_2(tmp_path, monkeypatch, corpus):
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    from bimqa.export import write_bundle, write_jsonl
    write_bundle(corpus[0], tmp_path / "blocks")
    write_jsonl(tmp_path / "qa.jsonl", (qa.to_dict() for qa in corpus[0].items))
    ep = _endpoint_file(tmp_path / "ep.json", "http://127.0.0.1:9")
    assert main(["run", "--qa", str(tmp_path / "qa.jsonl"), "--blocks", str(tmp_path / "blocks"),
                 "--endpoint", str(ep), "--out", str(tmp_path / "r.jsonl")]) == 2


def test_judge_failure_exits_2(tmp_path, monkeypatch, corpus):
    monkeypatch.setenv(API_KEY_ENV, API_KEY)
    from bimqa.model import EvalRecord
    qa = corpus[0].items[0]
    records = tmp_path / "r.jsonl"
    records.write_text(json.dumps(EvalRecord(qa, "m", "[Final Answer]:\nx").to_dict()) + "\n")
    with MockEndpoint(api_key=API_KEY, judge_reply="no score here") as mock:
        ep = _endpoint_file(tmp_path / "ep.json", mock.url)
        cfg = tmp_path / "score.json"
        cfg.write_text(json.dumps({"judge_endpoint": json.loads(ep.read_text())}))
        assert main(["score", "--config", str(cfg), "--records", str(records)]) == 2
    (rec,) = read_records(records)
    assert "score:judge_error" in rec.flags


def test_ref_model_partitions_into_one_block(tmp_path):
    p = tmp_path / "ref.json"
    p.write_text(serialize_model(BimModel("ref", [ref_wall()])))
    assert main(["partition", str(p), "--min", "1", "--out", str(tmp_path / "b")]) == 0
    assert main(["partition", str(p), "--out", str(tmp_path / "c")]) == 1
