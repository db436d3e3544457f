import math

import numpy as np
import pytest
from sklearn.base import clone

from rnnclust import automata, data, rnn, train
from rnnclust.exceptions import Diverged, EmptySet


def test_adam_matches_reference():
    p = np.array([1.0, -2.0])
    opt = train.Adam([p], lr=0.1)
    m = v = np.zeros(2)
    ref = np.array([1.0, -2.0])
    for t in range(1, 4):
        g = 2 * ref
        opt.step([2 * p])
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 0.1 * (m / (1 - 0.9 ** t)) / (np.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    np.testing.assert_allclose(p, ref)


def test_loss_clamped():
    assert train.loss(np.array([0.0, 1.0]), 0) == pytest.approx(-math.log(1e-12))
    assert train.loss(np.array([0.25, 0.75]), 1) == pytest.approx(-math.log(0.75))


def test_tomita5_gru_converges():
    t5 = automata.tomita(5)
    ds = data.sample_dataset(t5, 3000, (1, 10), val_fraction=0.2, seed=0)
    model = rnn.init_model("gru", 1, 8, 2, 2, seed=0)
    trained, hist = train.train(model, ds, train.TrainConfig(learning_rate=0.01, max_epochs=40), t5)
    assert hist.records[0].epoch == 0
    assert hist.records[-1].val_acc == 1.0
    assert hist.stopped_early
    assert train.validate_accuracy(trained, t5, ds.val_words) == 1.0
    # the input model is left untouched
    assert not np.allclose(trained.weight_ho, model.weight_ho)


def test_deterministic():
    t3 = automata.tomita(3)
    ds = data.sample_dataset(t3, 400, seed=1, val_fraction=0.25)
    cfg = train.TrainConfig(max_epochs=2, seed=5)
    a, ha = train.train(rnn.init_model("elman_tanh", 1, 6, 2, 2, 0), ds, cfg, t3)
    b, hb = train.train(rnn.init_model("elman_tanh", 1, 6, 2, 2, 0), ds, cfg, t3)
    np.testing.assert_array_equal(a.weight_ho, b.weight_ho)
    assert ha.to_tsv() == hb.to_tsv()


def test_checkpoints_and_callback():
    t5 = automata.tomita(5)
    ds = data.sample_dataset(t5, 300, seed=1, val_fraction=0.3)
    seen = []
    _, hist = train.train(rnn.init_model("gru", 1, 4, 2, 2), ds,
                          train.TrainConfig(max_epochs=2, keep_checkpoints=True), t5,
                          on_epoch=lambda rec, m: seen.append(rec.epoch))
    assert seen == [0, 1, 2]
    assert all(r.checkpoint is not None for r in hist.records)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_diverged():
    t5 = automata.tomita(5)
    ds = data.sample_dataset(t5, 200, seed=1, val_fraction=0.2)
    model = rnn.init_model("elman_relu", 1, 4, 2, 2)
    model.layers[0]["weight_hh"][:] = np.inf
    with pytest.raises(Diverged):
        train.train(model, ds, train.TrainConfig(max_epochs=1), t5)


def test_empty_accuracy_set():
    with pytest.raises(EmptySet):
        train.validate_accuracy(rnn.init_model("gru", 1, 4, 2, 2), automata.tomita(5), [])


def test_final_step_mode_needs_no_machine():
    t5 = automata.tomita(5)
    ds = data.sample_dataset(t5, 200, seed=1, val_fraction=0.2)
    with pytest.raises(ValueError):
        train.train(rnn.init_model("gru", 1, 4, 2, 2), ds, train.TrainConfig(max_epochs=1))
    train.train(rnn.init_model("gru", 1, 4, 2, 2), ds,
                train.TrainConfig(max_epochs=1, per_prefix_loss=False))


def test_classifier_estimator_api():
    t7 = automata.tomita(7)
    ds = data.sample_dataset(t7, 600, (1, 6), seed=0)
    clf = train.RNNClassifier(hidden_size=6, learning_rate=0.01, max_epochs=3)
    assert clone(clf).get_params()["hidden_size"] == 6
    clf.fit(ds.words, ds.labels)
    assert set(clf.predict(ds.words[:20])) <= {0, 1}
    assert clf.predict_proba(ds.words[:5]).shape == (5, 2)
    assert clf.transform(ds.words[:1])[0].shape == (len(ds.words[0]) + 1, 6)
