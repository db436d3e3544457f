import numpy as np
import pytest
from sklearn.base import clone

from rnnclust import automata, construct, data, metrics, probe, separability as sep
from rnnclust.exceptions import DegenerateLabels
from rnnclust.probe import HQSample


def make_hq(X, y, num_states=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    z = np.zeros(len(y), dtype=int)
    return HQSample(X, y, z, z, z - 1, num_states or int(y.max()) + 1)


@pytest.fixture(scope="module")
def constructed_hq():
    d = automata.tomita(7)
    model = construct.encode_dfa(d)
    h0 = construct.initial_hidden(model, d)
    ds = data.sample_dataset(d, 1000, seed=0)
    return probe.collect_hq(d, model, h0, ds.words)


@pytest.mark.parametrize("method", ["lda", "logreg"])
def test_constructed_is_separable(constructed_hq, method):
    clf = sep.fit_classifier(constructed_hq, method)
    rec = sep.classifier_ambiguity(clf, constructed_hq)
    assert rec.wamb == 0.0 and rec.amb == 0.0


@pytest.mark.parametrize("method", ["lda", "logreg"])
def test_symmetric_1d(method):
    X = np.array([[-1.0]] * 5 + [[1.0]] * 5)
    clf = sep.METHODS[method]().fit(X, [0] * 5 + [1] * 5)
    assert clf.predict([[-0.05], [0.05]]).tolist() == [0, 1]


@pytest.mark.parametrize("method", ["lda", "logreg"])
def test_separated_blobs(method):
    rng = np.random.default_rng(0)
    centers = rng.normal(0, 5, size=(5, 4))
    X = np.vstack([rng.normal(c, 0.2, size=(30, 4)) for c in centers])
    y = np.repeat(np.arange(5), 30)
    assert (sep.METHODS[method]().fit(X, y).predict(X) == y).all()


def test_constant_classifier_wamb_one():
    hq = make_hq(np.zeros((6, 1)), [0, 1] * 3)

    class Constant:
        def predict(self, X):
            return np.zeros(len(X), dtype=int)

    assert sep.classifier_ambiguity(Constant(), hq).wamb == pytest.approx(1.0)


def test_classifier_ambiguity_is_metrics_ambiguity():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(60, 3))
    y = (X[:, 0] > 0).astype(int) + (X[:, 1] > 0)
    hq = make_hq(X, y, 3)
    clf = sep.fit_classifier(hq, "lda")
    a = sep.classifier_ambiguity(clf, hq)
    b = metrics.ambiguity(y, clf.predict(X), 3)
    assert (a.amb, a.wamb) == (b.amb, b.wamb)


def test_one_mislabelled_point():
    X = np.array([[0.0], [0.1], [0.2], [5.0], [5.1]])
    y = np.array([0, 0, 1, 1, 1])
    hq = make_hq(X, y)
    clf = sep.fit_classifier(hq, "logreg")
    pred = clf.predict(X)
    assert metrics.ambiguity(y, pred, 2).wamb == sep.classifier_ambiguity(clf, hq).wamb


def test_logreg_argmax_invariant_to_shift():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 2))
    clf = sep.LogisticRegression().fit(X, (X[:, 0] > 0).astype(int))
    scores = clf.decision_function(X)
    np.testing.assert_array_equal(np.argmax(scores + 7.0, axis=1), clf.predict(X))
    assert clf.converged_


def test_degenerate_labels():
    with pytest.raises(DegenerateLabels):
        sep.LogisticRegression().fit(np.zeros((4, 2)), [1, 1, 1, 1])
    with pytest.raises(DegenerateLabels):
        sep.LinearDiscriminantAnalysis().fit(np.arange(6.0).reshape(3, 2), [0, 0, 1])


def test_estimator_params():
    assert clone(sep.LogisticRegression(C=0.5)).get_params()["C"] == 0.5
    assert clone(sep.LinearDiscriminantAnalysis(ridge=1e-3)).ridge == 1e-3


def test_projection_groups(constructed_hq):
    hq = constructed_hq
    rows = sep.project_2d(hq)
    Z = np.array([(x, y) for x, y, _ in rows])
    # group by exact hidden vector: one group per transition plus h0
    _, groups = np.unique(np.round(hq.hidden, 9), axis=0, return_inverse=True)
    groups = groups.reshape(-1)
    centers = np.array([Z[groups == g].mean(0) for g in range(groups.max() + 1)])
    within = np.mean([np.linalg.norm(Z[i] - centers[groups[i]]) for i in range(len(Z))])
    between = np.mean([np.linalg.norm(a - b) for i, a in enumerate(centers) for b in centers[i + 1:]])
    assert within < 0.1 * between


def test_projection_two_states_and_centering():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] > 0).astype(int)
    rows = sep.project_2d(make_hq(X, y))
    assert all(r[1] == 0.0 for r in rows)
    shifted = sep.project_2d(make_hq(X + 4.0, y))
    np.testing.assert_allclose([r[0] for r in rows], [r[0] for r in shifted], atol=1e-8)
    assert sep.projection_tsv(rows[:1]).startswith("x\ty\tstate\n")
