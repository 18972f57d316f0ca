import numpy as np
import pytest

from dbgnn import TemporalEdge, TemporalGraph
from dbgnn.numerics import softmax_cross_entropy


def random_temporal_graph(rng, max_nodes=8, max_events=40, t_max=20, directed=True):
    """Small random temporal graph for oracle comparisons."""
    n = int(rng.integers(2, max_nodes + 1))
    n_events = int(rng.integers(1, max_events + 1))
    events = []
    for _ in range(n_events):
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n - 1))
        if v >= u:
            v += 1
        events.append(TemporalEdge(u, v, int(rng.integers(0, t_max))))
    return TemporalGraph([f"n{i}" for i in range(n)], events, directed=directed)


def model_loss(model, labels, mask):
    fp = model.forward(keep_cache=True)
    loss, dlogits = softmax_cross_entropy(fp.logits, labels, mask)
    return loss, dlogits, fp


def finite_difference_grads(model, labels, mask, h=1e-5):
    """Central-difference gradients of the masked cross-entropy loss with
    respect to every parameter matrix of the model."""
    numeric = {}
    for name, param in model.params.items():
        grad = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = param[idx]
            param[idx] = orig + h
            loss_plus, _, _ = model_loss(model, labels, mask)
            param[idx] = orig - h
            loss_minus, _, _ = model_loss(model, labels, mask)
            param[idx] = orig
            grad[idx] = (loss_plus - loss_minus) / (2.0 * h)
        numeric[name] = grad
    return numeric


def assert_gradients_match(analytic, numeric, rtol=1e-4, atol=1e-7):
    for name in numeric:
        np.testing.assert_allclose(
            analytic[name], numeric[name], rtol=rtol, atol=atol,
            err_msg=f"gradient mismatch for parameter {name}",
        )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
