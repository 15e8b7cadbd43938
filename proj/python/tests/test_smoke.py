import os

import numpy as np
import pytest

import cellcheck

DATA = os.environ.get("CELLCHECK_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


@pytest.fixture(scope="module")
def net():
    return cellcheck.load_network(os.path.join(DATA, "continuum_world.nnet"))


def test_network(net):
    assert net.input_dim == 2
    assert net.action_labels == ["up", "down", "left", "right"]
    assert len(net.evaluate([1.0, 2.0])) == 4
    assert 0 <= net.best_action([1.0, 2.0]) < 4


def test_possible_actions_contain_sampled_choices(net):
    rng = np.random.default_rng(3)
    low, high = [4.0, 6.0], [5.5, 7.0]
    possible = cellcheck.possible_actions(net, low, high)
    for x in rng.uniform(low, high, size=(200, 2)):
        assert net.action_labels[net.best_action(list(x))] in possible


def test_adaptive_call_ordering(net):
    counts = {
        s: cellcheck.adaptive_verify(net, [0, 0], [20, 20], [0.3125, 0.3125], strategy=s)["stats"]["verifier_calls"]
        for s in ("informed", "all", "uniform")
    }
    assert counts["informed"] <= counts["all"] <= counts["uniform"]


def test_check_and_monte_carlo(net):
    world = cellcheck.ContinuumWorld()
    pf = cellcheck.check([net], world, [1.25, 1.25], transition_threshold=0.05)
    assert pf.stats["converged"]
    cells = pf.cells(0)
    assert cells["low"].shape == (pf.leaf_count, 2)
    assert np.all((cells["prob"] >= 0) & (cells["prob"] <= 1))
    assert pf.prob_at(0, [10.0, 10.0]) == 1.0
    est, se, n, hits = cellcheck.monte_carlo([net], world, [7.5, 10.5], n=500, seed=1)
    assert n == 500
    assert pf.prob_at(0, [7.5, 10.5]) >= est - 3 * se


def test_vcas_slice_layers():
    nets = [cellcheck.load_network(os.path.join(DATA, f"vcas_{a}.nnet")) for a in ("COC", "DES1500", "CL1500")]
    model = cellcheck.VcasModel(advisories=nets[0].action_labels, intruder_rate=-30.0, tau_max=3)
    assert model.state_dim == 2
    pf = cellcheck.check(nets, model, [1000.0, 50.0])
    assert len(pf.layer_max) == 4
    assert pf.layer_max[0] == 1.0


def test_errors(net):
    with pytest.raises(cellcheck.IoError):
        cellcheck.load_network("/nonexistent.nnet")
    with pytest.raises(cellcheck.Error):
        cellcheck.check([net], cellcheck.ContinuumWorld(), [1.0])
    with pytest.raises(cellcheck.ValidationError):
        cellcheck.ContinuumWorld(boundary="wrap")


def test_run_cli():
    code, out, err = cellcheck.run_cli(["--help"])
    assert code == 0
    assert "partition" in out
    code, _, err = cellcheck.run_cli(["frobnicate"])
    assert code == 2
