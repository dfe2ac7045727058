import json

import numpy as np

from tmpc import models, ring
from tmpc.athos import compile_to_llil, quantize
from tmpc.ir import load_tensor
from tmpc.net.dealer import deal_shares, load_bundle, write_bundles
from tmpc.net.party import PartyConfig


def _program():
    rng = np.random.default_rng(0)
    return compile_to_llil(models.logistic_regression(rng.uniform(-1, 1, (12, 3)), rng.uniform(-1, 1, 3)), 15)


def _x():
    return quantize(np.random.default_rng(1).uniform(-1, 1, (1, 12)), 15)


def test_dealt_shares_reconstruct():
    p = _program()
    b0, b1, b2 = deal_shares(p, _x(), seed=4)
    for k, w in p.weights.items():
        np.testing.assert_array_equal(b0.shares[k] + b1.shares[k], ring.ring(w))
    np.testing.assert_array_equal(b0.shares["x"] + b1.shares["x"], _x())
    assert b2.shares == {}


def test_same_seed_same_files(tmp_path):
    p = _program()
    for run in ("a", "b"):
        write_bundles(p, deal_shares(p, _x(), seed=9), tmp_path / run, seed=9)
    for party in range(3):
        for f in sorted((tmp_path / "a" / f"p{party}").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f"p{party}" / f.name).read_bytes(), f.name
    write_bundles(p, deal_shares(p, _x(), seed=10), tmp_path / "c", seed=10)
    assert (tmp_path / "a/p0/w_W.tmpt").read_bytes() != (tmp_path / "c/p0/w_W.tmpt").read_bytes()


def test_helper_bundle_has_keys_only(tmp_path):
    p = _program()
    write_bundles(p, deal_shares(p, _x(), seed=2), tmp_path, seed=2)
    d2 = tmp_path / "p2"
    assert sorted(f.name for f in d2.iterdir()) == ["config.json", "program.llil", "shares.json"]
    assert json.loads((d2 / "shares.json").read_text()) == {}
    cfg = PartyConfig.load(d2 / "config.json")
    assert sorted(cfg.keys) == ["02", "12"]
    prog, shares = load_bundle(d2)
    assert prog.weights == {} and shares == {}


def test_share_files_are_i64_tensors(tmp_path):
    p = _program()
    write_bundles(p, deal_shares(p, _x(), seed=3), tmp_path, seed=3)
    raw = (tmp_path / "p0" / "w_W.tmpt").read_bytes()
    assert raw[:4] == b"TMPT" and raw[4] == 1
    accessed = []
    _, shares = load_bundle(tmp_path / "p1", accessed)
    np.testing.assert_array_equal(shares["W"], load_tensor(tmp_path / "p1" / "w_W.tmpt"))
    assert all("p1" in a for a in accessed)
