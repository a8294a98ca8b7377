import math

import pytest

import passforge as pf


@pytest.fixture(scope="module")
def backend():
    return pf.synthetic_backend("heavyhex", 12, noise_seed=7)


def test_fixed_pipelines_preserve_semantics(backend):
    c = pf.random_circuit(4, 10, 3)
    fo = pf.fixed_pipeline("fidelity", c, backend)
    to = pf.fixed_pipeline("time", c, backend)
    assert 0.0 < fo["esp"] <= 1.0
    assert 0.0 < to["esp"] <= 1.0
    ideal = c.ideal_distribution()
    compiled = fo["circuit"].ideal_distribution()
    keys = set(ideal) | set(compiled)
    assert 0.5 * sum(abs(ideal.get(k, 0.0) - compiled.get(k, 0.0)) for k in keys) < 1e-9


def test_env_episode_completes(backend):
    env = pf.Env()
    env.reset(pf.benchmark_circuit("QFT", 4), backend)
    steps = 0
    while not env.done:
        mask = env.action_mask()
        assert mask
        env.step(mask[-1] if pf.SKIP in mask else mask[0])
        steps += 1
    assert env.final_report()["esp"] > 0.0
    assert steps <= 64


def test_masked_action_rejected(backend):
    env = pf.Env()
    env.reset(pf.random_circuit(3, 6, 1), backend)
    invalid = [a for a in range(pf.SKIP + 1) if a not in env.action_mask()]
    with pytest.raises(RuntimeError):
        env.step(invalid[0])


def test_brute_force_superset(backend):
    c = pf.random_circuit(5, 12, 2)
    bf = pf.brute_force(c, backend)
    assert len(bf["esp"]) == 32
    assert max(bf["esp"]) == bf["esp"][bf["best_mask"]]
    assert bf["esp"][bf["best_mask"]] >= pf.fixed_pipeline("fidelity", c, backend)["esp"]


def test_noisy_tvd_and_gae(backend):
    c = pf.benchmark_circuit("GHZ", 3)
    r = pf.fixed_pipeline("fidelity", c, backend)
    t = pf.noisy_tvd(c, r["circuit"], r["layout"], backend, shots=1024, seed=1)
    assert 0.0 <= t <= 1.0
    adv, ret = pf.compute_gae([1.0, 0.0], [0.0, 0.0], [False, True], gamma=0.5, lam=1.0)
    assert adv == pytest.approx([1.0, 0.0])
    assert all(abs(pf.soft_normalize(x)) < 1 for x in (-1e6, 0.0, 1e6))


def test_validation_errors(backend):
    with pytest.raises(ValueError):
        pf.parse_qasm("qreg q[2]; foo q[0];")
    with pytest.raises(ValueError):
        pf.synthetic_backend("torus", 4)
    assert "layout_vf2" in pf.pass_names()
    assert not math.isnan(pf.greedy_select(pf.random_circuit(3, 6, 4), backend)["esp"])
