import math

import numpy as np
import pytest

import ipsim


def test_full_adder_dfg(full_adder):
    g = ipsim.dfg(full_adder)
    labels = {n["label"]: n["kind"] for n in g["nodes"]}
    assert labels["Sum"] == "Output" and labels["Cout"] == "Output"
    assert {labels[x] for x in ("Num1", "Num2", "Cin")} == {"Input"}
    assert len(g["roots"]) == 2


def test_self_pair_and_symmetry(full_adder):
    model = ipsim.Model.init(seed=4)
    score, piracy = ipsim.compare(full_adder, full_adder, model)
    assert abs(score - 1.0) <= 1e-9 and piracy
    h = ipsim.embed(full_adder, model)
    assert isinstance(h, np.ndarray) and h.shape == (16,)
    assert ipsim.cosine_similarity(h, h) == pytest.approx(1.0, abs=1e-12)


def test_loss_values():
    assert ipsim.cosine_embedding_loss(1.0, 1) == 0.0
    assert ipsim.cosine_embedding_loss(0.3, -1) == 0.0
    assert ipsim.cosine_embedding_loss(0.9, -1) == 0.9 - 0.5
    with pytest.raises(ipsim.IpsimError):
        ipsim.cosine_embedding_loss(0.5, 0)


def test_variants_preserve_dataflow(tmp_path, tiny_corpus):
    base = str(tiny_corpus / "adder" / "ripple_adder4.v")
    out = ipsim.variants(base, count=3, seed=5)
    assert [name for name, _ in out] == ["ripple_adder4_v1", "ripple_adder4_v2", "ripple_adder4_v3"]
    for name, text in out:
        path = tmp_path / f"{name}.v"
        path.write_text(text)
        assert ipsim.dataflow_equivalent(base, str(path))


def test_training_is_deterministic(tmp_path, tiny_corpus):
    kwargs = dict(seed=3, epochs=2, batch_size=4, optimizer="adam", threads=1)
    a, trace = ipsim.train(str(tiny_corpus), **kwargs)
    b, _ = ipsim.train(str(tiny_corpus), **kwargs)
    assert a.to_bytes() == b.to_bytes()
    assert trace["epoch"] == [1, 2]
    assert all(math.isfinite(x) for x in trace["train_loss"])
    path = tmp_path / "m.ckpt"
    a.save(str(path))
    c = ipsim.Model.load(str(path))
    assert c.to_bytes() == a.to_bytes()
    assert [w.shape for w in c.weights] == [(36, 16), (16, 16), (16, 1)]


def test_errors_name_the_file(tmp_path):
    bad = tmp_path / "bad.v"
    bad.write_text("module m(input a, output y); assign y = ; endmodule\n")
    with pytest.raises(ipsim.IpsimError, match="bad.v"):
        ipsim.dfg(str(bad))
    with pytest.raises(ipsim.IpsimError):
        ipsim.Model.load(str(tmp_path / "missing.ckpt"))
