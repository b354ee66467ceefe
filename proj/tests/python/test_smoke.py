import json
import math

import numpy as np
import pytest

fhtc = pytest.importorskip("fhtc")


def test_basis_orthonormality():
    b = fhtc.legendre_basis(6, -2.0, 2.0)
    xs, ws = np.polynomial.legendre.leggauss(24)
    xs = 2.0 * xs
    ws = 2.0 * ws
    vals = np.array([b.eval(x) for x in xs])  # (24, 7)
    gram = (vals * ws[:, None]).T @ vals
    assert np.abs(gram - np.eye(7)).max() < 1e-10


def test_sobolev_gram_values():
    b = fhtc.legendre_basis(1, -1.0, 1.0)
    K = b.sobolev_gram()
    assert K[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert K[1, 1] == pytest.approx(4.0, abs=1e-12)
    assert K[0, 1] == pytest.approx(math.sqrt(3.0), abs=1e-12)


def test_fht_eval_against_dense():
    basis = fhtc.legendre_basis(2, -1.0, 1.0)
    tree = fhtc.DyadicTree.build(4, 2, 3)
    f = fhtc.Fht.random(tree, basis, seed=5)
    dense = f.contract_dense()
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.uniform(-1, 1, size=4)
        vecs = [np.asarray(basis.eval(v)) for v in x]
        want = dense.reshape(3, 3, 3, 3)
        for v in vecs:
            want = np.tensordot(v, want, axes=(0, 0))
        assert f.evaluate(x) == pytest.approx(float(want), rel=1e-12)


def test_interpolate_recovers_separable():
    basis = fhtc.legendre_basis(3, -1.0, 1.0)
    tree = fhtc.DyadicTree.build(4, 1, 4)

    def g(x):
        return float(np.prod(1.0 + 0.5 * np.asarray(x)))

    f = fhtc.interpolate(g, tree, basis, margin=2, seed=3)
    rng = np.random.default_rng(1)
    for _ in range(25):
        x = rng.uniform(-1, 1, size=4)
        assert f.evaluate(x) == pytest.approx(g(x), rel=1e-9, abs=1e-10)


def test_gl_dynamics():
    model = fhtc.GLModel.chain(16)
    x0 = np.zeros(16)
    assert fhtc.potential(model, x0) == pytest.approx(16.0 / (4 * 17.0), abs=1e-12)
    b = fhtc.drift(model, x0, 0.5)
    assert np.allclose(b, 10.0 * np.asarray(model.omega))
    x1, cost = fhtc.simulate(model, x0, 0.3, 0.1, 10, seed=4)
    x2, cost2 = fhtc.simulate(model, x0, 0.3, 0.1, 10, seed=4)
    assert np.array_equal(x1, x2) and cost == cost2


def test_tiny_solve_and_rollout(tmp_path):
    cfg = json.loads(fhtc.preset_json("gl1d-desk"))
    cfg["model"]["m"] = 4
    cfg["horizon"]["K"] = 2
    cfg["horizon"]["T"] = 0.2
    cfg["basis"]["degree"] = 4
    cfg["basis"]["action_degree"] = 4
    cfg["samples"]["n_regression"] = 2000
    cfg["samples"]["n_operator"] = 20000
    cfg["solver"].update(rank_q=4, rank_v=4, rank_p=4, als_rounds=3, substeps=10)
    out = tmp_path / "stack"
    stack = fhtc.solve(json.dumps(cfg), str(out))
    assert (out / "qk_0.fht").exists() and (out / "meta.json").exists()

    x = np.full(4, 0.5)
    v0 = stack.value_at(x, 0.0)
    assert math.isfinite(v0) and v0 > 0
    a = stack.policy_action(x, 0)
    assert -1.0 <= a <= 1.0
    xf, cost, actions = stack.rollout(x, seed=9)
    assert cost > 0 and len(actions) == 2

    again = fhtc.load_stack(str(out))
    assert again.value_k(x, 0) == pytest.approx(stack.value_k(x, 0), rel=1e-12)
