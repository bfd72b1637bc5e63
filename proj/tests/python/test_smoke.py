# Copyright 2026 The portir Authors
# SPDX-License-Identifier: Apache-2.0

import json
import os
from pathlib import Path

import numpy as np
import pytest

import portir

SOURCE = Path(os.environ.get("PORTIR_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def model(name):
    return SOURCE / "models" / name / "model.pir.json"


@pytest.fixture(autouse=True)
def isolated_kb(tmp_path, monkeypatch):
    monkeypatch.setenv("PORTIR_KB", str(tmp_path / "kb.json"))


def test_zoo_and_files_agree():
    assert "toy_conv" in portir.zoo_names()
    for name in portir.zoo_names():
        assert portir.load_graph(model(name)).sha256() == portir.zoo_graph(name).sha256()


def test_save_load_round_trip(tmp_path):
    g = portir.zoo_graph("toy_lpr")
    portir.save_graph(g, tmp_path / "m.pir.json")
    back = portir.load_graph(tmp_path / "m.pir.json")
    assert back.sha256() == g.sha256()
    assert back.input_names == g.input_names
    assert back.io_signature() == g.io_signature()


def test_check_reports_mod():
    diags = portir.check(portir.zoo_graph("toy_yolo"), "qnn-like")
    assert [(d["kind"], d["op"]) for d in diags] == [("UnsupportedOp", "Mod")]
    assert portir.check(portir.zoo_graph("toy_conv")) == []


def test_run_reference_and_fp16():
    g = portir.zoo_graph("toy_conv")
    feeds = portir.generate_feeds(g, seed=42, index=0)
    ref = portir.run(g, feeds)
    half = portir.run(g, feeds, backend="fp16")
    assert ref.keys() == half.keys()
    for name in ref:
        assert ref[name].shape == half[name].shape
        np.testing.assert_allclose(half[name], ref[name], atol=1e-2, rtol=1e-2)
        assert all(portir.round_f16(float(v)) == float(v) for v in half[name].ravel()[:64])


def test_missing_feed_raises():
    g = portir.zoo_graph("toy_conv")
    with pytest.raises(portir.PortirError):
        portir.run(g, {})


def test_rewrite_is_equivalent():
    assert portir.passes()[0] == "expand_mod_float"
    g = portir.zoo_graph("toy_einsum")
    diags = portir.check(g)
    post = portir.apply_pass(g, "lower_einsum", diags[0]["node"])
    assert "Einsum" not in post.ops
    report = portir.verify_equivalence(g, post, trials=8)
    assert report["pass"] and report["agreeing"] == 8


def test_project_run_all(tmp_path):
    p = portir.Project.init(tmp_path / "proj", model("toy_lpr"))
    p.set_kb(tmp_path / "kb.json")
    results = p.run_all()
    assert [r["status"] for r in results] == ["Passed", "Passed", "Passed", "Passed", "Skipped", "Passed"]
    assert p.status()[5] == "Passed"
    report = json.loads((tmp_path / "proj" / "report" / "report.json").read_text())
    assert report["pass_sequence"] == ["decompose_maxpool3d"]
    again = portir.Project.open(tmp_path / "proj")
    assert again.status() == p.status()


def test_cli_exit_codes(tmp_path):
    code, out, err = portir.run_cli(["check", "--model", str(model("toy_yolo"))])
    assert code == 1 and "candidate passes" in out
    code, _, err = portir.run_cli(["init", str(tmp_path / "p")])
    assert code == 2 and "--model" in err
    code, _, _ = portir.run_cli(["init", str(tmp_path / "u"), "--model", str(model("toy_unrepairable"))])
    assert code == 0
    code, out, _ = portir.run_cli(["run-all", str(tmp_path / "u")])
    assert code == 3
