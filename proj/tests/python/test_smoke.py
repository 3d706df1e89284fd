import math
import os
import subprocess

import pytest

import dmgnn


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    code, stdout, err = dmgnn.run_cli(["synth", "--out", str(out), "--nodes", "40", "--seed", "3"])
    assert code == 0, err
    return out


def test_load_network(data):
    s = dmgnn.load_network(str(data / "source"))
    assert s["num_nodes"] == 40
    assert s["num_labels"] == 3
    assert 0.0 <= s["homophily_ratio"] <= 1.0


def test_two_node_ppmi(tmp_path):
    net = tmp_path / "pair"
    net.mkdir()
    (net / "meta.json").write_text('{"num_nodes": 2, "num_attrs": 1, "num_labels": 1, "multi_label": false}')
    (net / "edges.tsv").write_text("0\t1\n")
    (net / "attrs.tsv").write_text("")
    a = dmgnn.ppmi(str(net), 1)
    assert a[0][1] == pytest.approx(math.log(2.0), abs=1e-15)
    assert a[0][0] == 0.0


def test_schedules():
    lr, lam = dmgnn.schedules(0.0, 0.02)
    assert lr == 0.02 and lam == 0.0
    lr, lam = dmgnn.schedules(1.0, 0.02)
    assert lr == pytest.approx(0.02 / 11 ** 0.75, rel=1e-12)
    assert lam == pytest.approx(math.tanh(5.0), rel=1e-12)


def test_f1_hand_example():
    micro, macro = dmgnn.f1_scores([[1, 0], [0, 1], [0, 1]], [[1, 0], [1, 0], [0, 1]])
    assert micro == pytest.approx(2 / 3)
    assert macro == pytest.approx(2 / 3)


def test_bad_input_raises():
    with pytest.raises(ValueError):
        dmgnn.load_network("/nonexistent/dmgnn")


def test_train_and_eval(data, tmp_path):
    run = tmp_path / "run"
    code, _, err = dmgnn.run_cli(
        ["train", "--source", str(data / "source"), "--target", str(data / "target"),
         "--out", str(run), "--epochs", "2", "--hidden", "16,8", "--d", "8",
         "--disc-hidden", "8,8", "--batch-size", "20"])
    assert code == 0, err
    code, _, err = dmgnn.run_cli(
        ["eval", "--checkpoint", str(run / "checkpoint.json"), "--source", str(data / "source"),
         "--target", str(data / "target"), "--out", str(tmp_path / "eval")])
    assert code == 0, err
    assert (tmp_path / "eval" / "metrics.json").exists()


def test_standalone_binary_help():
    exe = os.environ.get("DMGNN_CLI")
    if not exe:
        pytest.skip("DMGNN_CLI not set")
    r = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "train" in r.stdout
