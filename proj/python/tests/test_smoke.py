import json
from pathlib import Path

import numpy as np
import pytest

import spectral_pomdp as sp

ROOT = Path(__file__).resolve().parents[2]


def shipped():
    return sp.Model.load(str(ROOT / "configs" / "paper_model.json"))


def test_generate_is_valid_and_deterministic():
    a = sp.generate(2, 4, 2, 4, seed=3)
    b = sp.generate(2, 4, 2, 4, seed=3)
    assert a.to_json() == b.to_json()
    assert a.O.shape == (4, 2)
    assert a.T.shape == (2, 2, 2)
    np.testing.assert_allclose(a.O.sum(axis=0), 1.0)
    np.testing.assert_allclose(a.T.sum(axis=1), 1.0)
    assert np.linalg.svd(a.O, compute_uv=False)[-1] >= 0.1


def test_model_json_round_trip():
    m = shipped()
    back = sp.Model.from_json(m.to_json())
    np.testing.assert_array_equal(back.O, m.O)
    assert json.loads(m.to_json())["X"] == 2


def test_invalid_model_raises():
    bad = json.loads(shipped().to_json())
    bad["O"][0][0] = 0.9
    with pytest.raises(sp.SpomdpError):
        sp.Model.from_json(json.dumps(bad))


def test_simulate_matches_stationary_observation_frequencies():
    m = shipped()
    tr = sp.simulate(m, 200_000, seed=1)
    assert tr.shape == (200_000, 3)
    freq = np.bincount(tr[:, 0], minlength=4) / len(tr)
    # Stationary state distribution from the uniform-policy chain.
    P = m.T.mean(axis=2)
    w = np.linalg.matrix_power(P, 200)[0]
    np.testing.assert_allclose(freq, m.O @ w, atol=0.01)


def test_exact_estimate_recovers_parameters():
    m = sp.generate(3, 5, 2, 2, seed=4)
    est = sp.estimate_exact(m)
    assert est["error"]["O_max"] < 1e-6
    assert est["error"]["T_max"] < 1e-6


def test_sampled_estimate_is_close():
    est = sp.estimate(shipped(), 200_000, seed=2)
    assert est["error"]["O_l1"] < 0.1
    assert len(est["bounds"]) == 2


def test_plan_and_run():
    m = shipped()
    p = sp.plan(m)
    assert p["eta_plus"] >= p["eta_grid"]
    assert p["policy"].shape == (4, 2)
    out = sp.run(m, "smucrl", 20_000, seed=0)
    assert out["rewards"].shape == (20_000,)
    assert out["audit"] == []
    rnd = sp.run(m, "random", 20_000, seed=0)
    assert abs(rnd["average_reward"] - m.average_reward()) < 0.05
    with pytest.raises(sp.SpomdpError):
        sp.run(m, "sarsa", 10)
