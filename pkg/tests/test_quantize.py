import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mramsim.ann.evaluate import circuit_forward, evaluate, predict
from mramsim.ann.mlp import Mlp, softmax
from mramsim.ann.quantize import QuantizedNetwork, WeightLevelSet, build_level_set, quantize
from mramsim.data import LabeledData
from mramsim.errors import DomainError
from mramsim.neuron import NeuronConfig


@pytest.fixture(scope="module")
def nominal_sets():
    return {k: build_level_set(k) for k in (1, 4, 7)}


def test_dyadic_ties_go_to_smaller_magnitude():
    ls = WeightLevelSet.from_conductances([0.0, 0.25, 0.5])
    np.testing.assert_array_equal(ls.values, [-0.5, -0.25, 0.0, 0.25, 0.5])
    picked = ls.values[ls.nearest([0.125, -0.375, 0.375, -0.125, 10.0])]
    np.testing.assert_array_equal(picked, [0.0, -0.25, 0.25, 0.0, 0.5])


def test_zero_realized_by_lowest_conductance_pair():
    ls = WeightLevelSet.from_conductances([3.0, 1.0, 2.0])
    zero = int(np.flatnonzero(ls.values == 0.0)[0])
    assert tuple(ls.pairs[zero]) == (1, 1)


def test_k1_nominal_weight(nominal_sets):
    ls = nominal_sets[1]
    w1 = 1000.0 * (1 / 358.5 - 1 / 649.5)
    assert len(ls.values) == 3
    assert ls.max_value == pytest.approx(w1, rel=5e-3)


def test_level_set_properties(nominal_sets):
    for k, ls in nominal_sets.items():
        assert len(ls.conductances) == k + 1
        np.testing.assert_allclose(ls.values, -ls.values[::-1], atol=1e-15)
        assert 0.0 in ls.values
        assert np.all(np.diff(ls.conductances) < 0)
    assert len(nominal_sets[7].values) >= 15


def test_build_level_set_validation():
    with pytest.raises(DomainError):
        build_level_set(0)
    with pytest.raises(DomainError):
        build_level_set(8)
    with pytest.raises(DomainError):
        build_level_set(2, mode="other")


def _net(seed, sizes=(6, 5, 5, 3)):
    rng = np.random.default_rng(seed)
    w = [rng.normal(0, 1, (a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    b = [rng.normal(0, 0.5, n) for n in sizes[1:]]
    return Mlp(sizes, w, b)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_quantization_error_bound_and_max_norm(nominal_sets, seed):
    net = _net(seed)
    ls = nominal_sets[4]
    q = quantize(net, ls)
    bf = q.bias_factor
    for w, b, qw, qb, alpha in zip(net.weights, net.biases, q.weights(), q.biases(), q.alpha):
        peak = max(np.abs(w).max(), np.abs(b / bf).max())
        assert max(np.abs(qw).max(), np.abs(qb / bf).max()) == pytest.approx(peak, rel=1e-12)
        half_gap = 0.5 * alpha * ls.largest_gap()
        assert np.all(np.abs(qw - w) <= half_gap * (1 + 1e-12))
        assert np.all(np.abs(qb / bf - b / bf) <= half_gap * (1 + 1e-12))


def test_quantizing_level_values_is_identity(nominal_sets):
    ls = nominal_sets[4]
    rng = np.random.default_rng(0)
    sizes = (4, 3, 3, 2)
    alpha = 0.7
    bf = NeuronConfig().v_bias / NeuronConfig().sigmoid.v_amp
    w = [alpha * rng.choice(ls.values, (a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    for m in w:
        m.flat[0] = alpha * ls.max_value
    b = [alpha * bf * rng.choice(ls.values, n) for n in sizes[1:]]
    q = quantize(Mlp(sizes, w, b), ls)
    for a, qa in zip(w + b, q.weights() + q.biases()):
        np.testing.assert_allclose(qa, a, rtol=1e-12, atol=1e-15)


def test_circuit_path_matches_network_units(nominal_sets):
    net = _net(3)
    q = quantize(net, nominal_sets[7])
    x = np.random.default_rng(1).uniform(-1, 1, (50, 6))
    hidden = q.to_mlp().activations(x)[-2]
    logits = hidden @ q.weights()[-1] + q.biases()[-1]
    circuit = circuit_forward(q, x)
    assert np.all(np.argmax(circuit, axis=1) == np.argmax(softmax(logits), axis=1))
    np.testing.assert_array_equal(predict(q, x, hardware_transfer=True), predict(q, x))


def test_argmax_invariant_under_positive_output_scaling():
    net = _net(8)
    scaled = Mlp(net.sizes, net.weights[:-1] + [3.0 * net.weights[-1]],
                 net.biases[:-1] + [3.0 * net.biases[-1]])
    x = np.random.default_rng(2).uniform(-1, 1, (40, 6))
    np.testing.assert_array_equal(net.predict(x), scaled.predict(x))


def test_evaluate_counts_errors():
    net = _net(5)
    x = np.random.default_rng(0).uniform(-1, 1, (10, 6))
    labels = net.predict(x)
    assert evaluate(net, LabeledData(x, labels)) == 0.0
    assert evaluate(net, LabeledData(x, (labels + 1) % 3)) == 1.0
    with pytest.raises(DomainError):
        evaluate(net, LabeledData(np.zeros((0, 6)), np.zeros(0, dtype=np.int64)))


def test_qnet_serialization(nominal_sets):
    q = quantize(_net(1), nominal_sets[4])
    again = QuantizedNetwork.from_dict(q.to_dict())
    for a, b in zip(q.weights() + q.biases(), again.weights() + again.biases()):
        np.testing.assert_array_equal(a, b)
    doc = q.to_dict()
    doc["bias_level_pairs"][0][0][0] = 9
    with pytest.raises(DomainError):
        QuantizedNetwork.from_dict(doc)
