import math

import pytest

import defnet


def test_fusion_closed_form():
    fused = defnet.fuse(defnet.NigParams(0, 1, 2, 1), defnet.NigParams(2, 1, 2, 1))
    assert fused.astuple() == (1.0, 2.0, 4.5, 3.0)
    assert defnet.total_evidence(fused) == 8.5


def test_fuse_n_and_epistemic_contraction():
    p = defnet.NigParams(0.3, 0.8, 1.7, 0.6)
    values = [defnet.epistemic(defnet.fuse_n([p] * k)) for k in (2, 4, 8)]
    assert values[0] > values[1] > values[2]
    with pytest.raises(ValueError):
        defnet.fuse_n([])


def test_constrain_and_uncertainty():
    p = defnet.constrain([0.0, 0.0, 0.0, 0.0])
    assert p.delta == 0.0
    assert p.v == pytest.approx(math.log(2))
    assert defnet.aleatoric(defnet.NigParams(0, 1, 2, 1)) == 1.0
    with pytest.raises(ValueError):
        defnet.epistemic(defnet.NigParams(0, 1, 1, 1))
    lo, hi = defnet.predictive_interval(defnet.NigParams(0, 1, 2, 1))
    assert hi == pytest.approx(2.7764451051977934, rel=1e-10)
    assert lo == pytest.approx(-hi)


def test_losses():
    p = defnet.NigParams(0, 1, 2, 1)
    assert defnet.nll_loss(p, 0.0) == pytest.approx(0.9808292530117262, rel=1e-12)
    assert defnet.reg_loss(p, 1.0) == 4.0
    parts = defnet.evidential_loss(p, 1.0, 0.05)
    assert parts["total"] == pytest.approx(parts["nll"] + 0.05 * parts["reg"], abs=1e-12)
    g = defnet.evidential_grad(p, 0.0, 0.05)
    assert g.delta == 0.0
    assert defnet.fidelity(1.0, 0.5) == pytest.approx(1 - math.sqrt(0.5), abs=1e-12)
    assert defnet.thurstone_prob(2.0, 2.0) == 0.5


def test_joint_head():
    probs = defnet.joint_softmax([0.0] * 45, 5, 3, 3, 0.07)
    assert sum(probs) == pytest.approx(1.0)
    pc, ps, pd = defnet.marginals(probs, 5, 3, 3)
    assert len(pc) == 5 and len(ps) == 3 and len(pd) == 3
    assert defnet.quality_expectation(pc) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        defnet.joint_softmax([0.0] * 45, 5, 3, 3, 0.0)


def test_metrics():
    assert defnet.srcc([1, 2, 3, 4, 5], [1, 3, 2, 4, 5]) == pytest.approx(0.9)
    assert math.isnan(defnet.plcc([1, 2, 3], [2, 2, 2]))
    mos = defnet.generate_mos(200, seed=3)
    assert len(mos) == 200
    assert all(1.0 <= x <= 5.0 for x in mos)
    assert mos == defnet.generate_mos(200, seed=3)


def test_commands(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"n_samples = 60\nepochs = 2\nout_dir = {tmp_path}\n")
    opts = defnet.CommandOptions()
    opts.config = cfg
    rc, out, _ = defnet.datagen(opts)
    assert rc == 0 and (tmp_path / "dataset.csv").exists()
    rc, out, _ = defnet.train(opts)
    assert rc == 0
    opts.model = tmp_path / "model.txt"
    rc, out, _ = defnet.evaluate(opts)
    assert rc == 0 and "srcc=" in out

    demo = defnet.CommandOptions()
    demo.nig = ["0,1,2,1", "2,1,2,1"]
    rc, out, _ = defnet.fusedemo(demo)
    assert rc == 0 and "fused = (1, 2, 4.5, 3)" in out
    demo.nig = ["0,1,0.5,1"]
    assert defnet.fusedemo(demo)[0] == 2
