import csv
import json
import os
import subprocess

import pytest

CLI = os.environ.get("IPSIM_CLI")
pytestmark = pytest.mark.skipif(not CLI or not os.path.exists(CLI), reason="ipsim executable not built")


def run(*args, check=True):
    p = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check and p.returncode != 0:
        raise AssertionError(p.stderr)
    return p


def test_dfg_stats(full_adder):
    out = json.loads(run("dfg", full_adder, "--stats").stdout)
    assert out["roots"] == 2 and out["leaves"] == 3


def test_exit_codes(tmp_path, full_adder):
    assert run("dfg", tmp_path / "none.v", check=False).returncode == 2
    assert run("dfg", full_adder, "--no-such-flag", check=False).returncode == 2
    p = run("compare", full_adder, full_adder, check=False)
    assert p.returncode == 2 and "checkpoint" in p.stderr


def test_train_compare_eval(tmp_path, tiny_corpus, full_adder):
    ck1, ck2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    pairs = tmp_path / "pairs.csv"
    common = ["--seed", 7, "--epochs", 3, "--batch-size", 4, "--optimizer", "adam", "--quiet"]
    run("train", tiny_corpus, "--out", ck1, "--pairs-out", pairs, *common)
    run("train", tiny_corpus, "--out", ck2, "--threads", 2, *common)
    assert ck1.read_bytes() == ck2.read_bytes()
    assert len((tmp_path / "a.ckpt.trace.csv").read_text().splitlines()) == 4

    first = json.loads(run("compare", full_adder, full_adder, "--checkpoint", ck1).stdout)
    again = json.loads(run("compare", full_adder, full_adder, "--checkpoint", ck2).stdout)
    assert abs(first["score"] - 1.0) <= 1e-9 and first["verdict"] == "piracy"
    assert first["score"] == again["score"]

    scores = tmp_path / "scores.csv"
    out = json.loads(run("eval", pairs, "--checkpoint", ck1, "--sweep", "--steps", 21,
                         "--scores-out", scores).stdout)
    rows = list(csv.DictReader(scores.open()))
    assert len(rows) == out["pairs"] > 0
    # Brute-force recount of every sweep row from the written scores.
    for point in out["sweep"]:
        d = point["delta"]
        tp = sum(float(r["score"]) > d and r["label"] == "1" for r in rows)
        tn = sum(float(r["score"]) <= d and r["label"] == "-1" for r in rows)
        assert (point["tp"], point["tn"]) == (tp, tn)
    accs = [p["accuracy"] for p in out["sweep"]]
    assert out["best"]["accuracy"] == max(accs)
