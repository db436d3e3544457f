import numpy as np
import pytest

from rnnclust import rnn
from rnnclust.exceptions import ShapeMismatch


def numeric_grad_check(arch, num_layers, per_prefix, seed=0, hidden=5, eps=1e-5):
    """Largest relative error between BPTT and central differences, per tensor."""
    rng = np.random.default_rng(seed)
    model = rnn.init_model(arch, num_layers, hidden, 3, 3, seed)
    # push weights away from zero so ReLU kinks are rare
    for _, p in model.parameters():
        p += rng.normal(0, 0.3, p.shape)
    words = rng.integers(0, 3, size=(4, 4))
    labels = rng.integers(0, 3, size=4)
    prefix = rng.integers(0, 3, size=(4, 4)) if per_prefix else None
    h0 = rng.normal(0, 0.3, model.state_size)
    _, grads = rnn.loss_and_grads(model, words, labels, h0, prefix)
    worst = {}
    for (name, p), g in zip(model.parameters(), grads):
        num = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = p[i]
            p[i] = old + eps
            lp = rnn.loss_and_grads(model, words, labels, h0, prefix)[0]
            p[i] = old - eps
            lm = rnn.loss_and_grads(model, words, labels, h0, prefix)[0]
            p[i] = old
            num[i] = (lp - lm) / (2 * eps)
        worst[name] = np.linalg.norm(num - g) / max(np.linalg.norm(num) + np.linalg.norm(g), 1e-12)
    return worst


@pytest.mark.parametrize("arch", rnn.ARCHITECTURES)
@pytest.mark.parametrize("num_layers", [1, 2])
@pytest.mark.parametrize("per_prefix", [False, True])
def test_gradients(arch, num_layers, per_prefix):
    worst = numeric_grad_check(arch, num_layers, per_prefix)
    assert max(worst.values()) < 1e-4, worst


@pytest.mark.parametrize("arch", rnn.ARCHITECTURES)
def test_batch_matches_single(arch):
    model = rnn.init_model(arch, 2, 4, 2, 2, seed=1)
    words = np.array([[0, 1, 1], [1, 0, 0]])
    batch = rnn.forward_batch(model, words)
    for b, w in enumerate(words):
        trace, probs = rnn.forward(model, w)
        np.testing.assert_allclose(batch[b], trace, atol=1e-12)
        np.testing.assert_allclose(rnn.output_probs(model, trace[-1:])[0], probs, atol=1e-12)


def test_state_sizes():
    assert rnn.init_model("lstm", 2, 3, 2, 2).state_size == 12
    assert rnn.init_model("gru", 2, 3, 2, 2).state_size == 6
    assert rnn.init_model("elman_relu", 1, 3, 2, 2).state_size == 3


def test_output_reads_top_hidden_only():
    model = rnn.init_model("lstm", 1, 3, 2, 2, seed=0)
    s = np.arange(6.0) / 10
    t = s.copy()
    t[3:] = 5.0  # cell state does not feed the head
    np.testing.assert_allclose(rnn.output_probs(model, s[None]), rnn.output_probs(model, t[None]))


def test_elman_step_formula():
    model = rnn.init_model("elman_tanh", 1, 3, 2, 2, seed=2)
    p = model.layers[0]
    h = np.array([0.1, -0.2, 0.3])
    x = np.array([0.0, 1.0])
    want = np.tanh(p["weight_ih"] @ x + p["bias_ih"] + p["weight_hh"] @ h + p["bias_hh"])
    np.testing.assert_allclose(rnn.step(model, h, x), want)


def test_predict_words_mixed_lengths():
    model = rnn.init_model("gru", 1, 4, 2, 2, seed=3)
    words = [(0,), (1, 0, 1), (1, 1), (0, 0, 0, 1)]
    pred = rnn.predict_words(model, words)
    want = [int(np.argmax(rnn.forward(model, w)[1])) for w in words]
    assert pred.tolist() == want


def test_shape_checks():
    model = rnn.init_model("gru", 1, 4, 2, 2)
    with pytest.raises(ShapeMismatch):
        rnn.forward(model, (0, 1), h0=np.zeros(3))
    with pytest.raises(ValueError):
        rnn.init_model("transformer", 1, 4, 2, 2)


def test_save_load(tmp_path):
    model = rnn.init_model("lstm", 2, 3, 2, 3, seed=4)
    model.meta["note"] = "x"
    rnn.save_model(model, tmp_path / "m.npz")
    back = rnn.load_model(tmp_path / "m.npz")
    assert back.meta == model.meta and back.arch == "lstm"
    for (n1, a), (n2, b) in zip(model.parameters(), back.parameters()):
        assert n1 == n2
        np.testing.assert_array_equal(a, b)
