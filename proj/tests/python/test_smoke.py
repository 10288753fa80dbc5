import math

import pytest

import fedgs


def test_counts_variance():
    assert fedgs.counts_variance([3, 3, 3]) == 0.0
    assert fedgs.counts_variance([1, 2, 3]) == pytest.approx(1.0)


def test_z_vector():
    assert fedgs.z_vector([0, 0, 0, 0], 2) == pytest.approx([0.0] * 4)
    # mean 2, m/n = 1: 2*(4-2-1)+1 and 2*(0-2-1)+1
    assert fedgs.z_vector([4, 0], 2) == pytest.approx([3.0, -5.0])


def test_floyd_warshall_caps_unreachable():
    inf = math.inf
    dist, cap = fedgs.floyd_warshall(
        [
            [0.0, 1.0, inf],
            [1.0, 0.0, inf],
            [inf, inf, 0.0],
        ]
    )
    assert dist[0][1] == pytest.approx(1.0)
    assert cap == pytest.approx(2.0)
    assert dist[0][2] == pytest.approx(cap)
    assert dist[2][2] == 0.0


def test_scalar_product_matches_dot():
    a = [1.0, 2.0, -3.0]
    b = [4.0, 0.5, 2.0]
    want = sum(x * y for x, y in zip(a, b))
    assert fedgs.scalar_product(a, b, seed=7) == pytest.approx(want, rel=1e-9)


def test_select_clients_exact():
    ones = [[0.0 if i == j else 1.0 for j in range(4)] for i in range(4)]
    z = [2.0, -1.0, -1.0, 0.5]
    out = fedgs.select_clients([0, 1, 2, 3], ones, z, alpha=1.0, m=2, exact=True)
    assert out["selected"] == [1, 2]
    assert out["objective"] == pytest.approx(2.5)
    assert out["solver"] == "exact"

    heur = fedgs.select_clients([0, 1, 2, 3], ones, z, alpha=1.0, m=2)
    assert heur["objective"] == pytest.approx(out["objective"])


def test_select_clients_rejects_bad_ids():
    with pytest.raises(fedgs.FedgsError):
        fedgs.select_clients([0, 5], [[0.0, 1.0], [1.0, 0.0]], [0.0, 0.0], m=1)


def _small_config():
    return {
        "dataset": {"scheme": "synthetic", "n_clients": 5},
        "rounds": 2,
        "max_selected": 2,
        "trainer": {"steps": 1, "batch_size": 8},
    }


def test_run_experiment_summary():
    out = fedgs.run_experiment(_small_config())
    summary = out["summary"]
    assert summary["completed_rounds"] == 2
    assert len(summary["counts"]) == 5
    assert sum(summary["counts"]) == 4
    assert 0.0 < summary["min_test_loss"] < 3.0
    assert out["config"]["sampler"]["name"] == "fedgs"


def test_run_experiment_deterministic():
    assert fedgs.run_experiment(_small_config()) == fedgs.run_experiment(
        _small_config()
    )


def test_run_experiment_accepts_json_text():
    out = fedgs.run_experiment('{"rounds": 1, "max_selected": 2}')
    assert out["summary"]["completed_rounds"] == 1


def test_unknown_key_rejected():
    with pytest.raises(fedgs.FedgsError):
        fedgs.run_experiment({"bogus": 1})
