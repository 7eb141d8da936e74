import csv
import json
import subprocess
import sys

import pytest

from supportlab.cli import EXIT_INVARIANT, EXIT_OK, EXIT_USAGE, main


def _json_out(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_gen_writes_instance_and_sidecar(tmp_path):
    out = tmp_path / "inst.json"
    assert main(["gen", "--family", "anchor", "--m", "2", "--eps", "1/16", "--n", "64", "--seed", "3",
                 "--verify", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["n"] == 64 and len(doc["atoms"]) == 5
    meta = json.loads((tmp_path / "inst.meta.json").read_text())
    assert meta["family"] == "anchor" and meta["farness"] == "far"


def test_gen_to_stdout(capsys):
    assert main(["gen", "--family", "support_m", "--m", "3", "--eps", "1/8", "--n", "16"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["n"] == 16


def test_usage_errors(capsys, tmp_path):
    assert main(["gen", "--family", "dno", "--m", "2", "--eps", "1/4", "--n", "32"]) == EXIT_USAGE
    assert main(["test", "--m", "2", "--eps", "1/8"]) == EXIT_USAGE
    assert main(["test", str(tmp_path / "missing.json"), "--m", "2", "--eps", "1/8"]) == EXIT_USAGE
    assert main(["test", "--family", "anchor", "--m", "2", "--eps", "1/8"]) == EXIT_USAGE
    assert main(["test", "--family", "anchor", "--n", "32", "--m", "0", "--eps", "1/8"]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--family", "bogus"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE


def test_test_transcript_verify_roundtrip(tmp_path, capsys):
    inst = tmp_path / "far.json"
    main(["gen", "--family", "anchor", "--m", "2", "--eps", "1/16", "--n", "128", "--out", str(inst)])
    capsys.readouterr()
    tr = tmp_path / "log.jsonl"
    assert main(["test", str(inst), "--m", "2", "--eps", "1/16", "--tester", "adaptive", "--seed", "1",
                 "--transcript", str(tr)]) == EXIT_OK
    out = _json_out(capsys)
    assert out["verdict"] == "reject" and out["witness_check"]["valid"]
    clique = ",".join(map(str, out["witness"]["clique"]))
    assert main(["verify-witness", str(tr), "--m", "2", "--clique", clique]) == EXIT_OK
    assert _json_out(capsys)["valid"]
    assert main(["verify-witness", str(tr), "--m", "2"]) == EXIT_OK
    assert _json_out(capsys)["valid"]
    # the same transcript cannot witness a support larger than 3
    assert main(["verify-witness", str(tr), "--m", "3", "--clique", clique]) == EXIT_OK
    assert not _json_out(capsys)["valid"]


def test_test_accepts_in_property(capsys):
    assert main(["test", "--family", "support_m", "--n", "64", "--m", "3", "--eps", "1/16",
                 "--tester", "baseline"]) == EXIT_OK
    out = _json_out(capsys)
    assert out["verdict"] == "accept" and out["witness"] is None


def test_budget_exceeded(capsys):
    assert main(["test", "--family", "support_m", "--n", "64", "--m", "2", "--eps", "1/16",
                 "--max-queries", "10"]) == EXIT_OK
    assert _json_out(capsys)["verdict"] == "budget-exceeded"


def test_verify_witness_bad_transcript(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"ev":"query","i":0,"j":1,"a":0}\n')
    assert main(["verify-witness", str(bad), "--m", "1"]) == EXIT_USAGE
    assert main(["verify-witness", str(tmp_path / "nope.jsonl"), "--m", "1"]) == EXIT_USAGE


def test_campaign_with_table_and_figures(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"families": ["anchor", "support_m"], "m": [2], "eps": ["1/16"], "n": [64],
                               "seeds": 3, "testers": ["nonadaptive", "adaptive"]}))
    out = tmp_path / "rows.csv"
    figs = tmp_path / "figs"
    assert main(["campaign", str(cfg), "--out", str(out), "--figures-dir", str(figs),
                 "--table", "family,tester"]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 12 and rows[0]["schema_version"] == "1"
    assert all(r["verdict"] == "accept" for r in rows if r["family"] == "support_m")
    table = list(csv.DictReader((tmp_path / "rows.table.csv").open()))
    assert len(table) == 4
    for name in ("queries.png", "rejections.png"):
        assert (figs / name).read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_campaign_bad_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"families": ["anchor"], "m": [2], "eps": ["1/16"], "n": [64], "seeds": 0}))
    assert main(["campaign", str(cfg)]) == EXIT_USAGE
    cfg.write_text(json.dumps({"families": ["anchor"], "m": [2], "eps": ["1/16"], "n": [64], "colour": 1}))
    assert main(["campaign", str(cfg)]) == EXIT_USAGE
    cfg.write_text("{not json")
    assert main(["campaign", str(cfg)]) == EXIT_USAGE


def test_validate_bounds_small(tmp_path):
    out = tmp_path / "bounds.csv"
    assert main(["validate-bounds", "--trials", "2000", "--configs", "2", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert rows and all(r["violated"] == "False" for r in rows)


def test_invariant_exit_code(monkeypatch, tmp_path, capsys):
    import supportlab.cli as cli

    class Broken:
        valid = False

        def as_dict(self):
            return {"valid": False}

    monkeypatch.setattr(cli, "verify_witness", lambda *a, **k: Broken())
    assert main(["test", "--family", "anchor", "--n", "128", "--m", "2", "--eps", "1/16"]) == EXIT_INVARIANT


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "supportlab", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "campaign" in r.stdout
