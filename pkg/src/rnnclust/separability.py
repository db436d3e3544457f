"""Linear probes for the piecewise-linear separability of hidden states.

Both probes are trained and evaluated on the same sample: the question is
whether the sample itself is separable, not how a probe generalises.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg, optimize
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import metrics
from .exceptions import DegenerateLabels, SingularCovariance


def _check_labels(y, min_per_class=1):
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise DegenerateLabels("need at least two distinct state labels")
    if counts.min() < min_per_class:
        raise DegenerateLabels(f"every state needs at least {min_per_class} samples")
    return classes


class LinearDiscriminantAnalysis(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Gaussian discriminant with a shared, ridge-regularised covariance.

    ``transform`` projects centred data onto the leading discriminant
    directions, the generalised eigenvectors of the between-class against
    the within-class covariance.

    Parameters
    ----------
    ridge : float
        Added to the diagonal of the within-class covariance.
    n_components : int or None
        Number of directions kept by ``transform``; at most ``n_classes - 1``.
    """

    def __init__(self, ridge=1e-6, n_components=None):
        self.ridge = ridge
        self.n_components = n_components

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_ = _check_labels(y, min_per_class=2)
        n, d = X.shape
        idx = np.searchsorted(self.classes_, y)
        counts = np.bincount(idx, minlength=len(self.classes_))
        self.means_ = np.zeros((len(self.classes_), d))
        np.add.at(self.means_, idx, X)
        self.means_ /= counts[:, None]
        self.priors_ = counts / n
        self.xbar_ = self.priors_ @ self.means_

        centred = X - self.means_[idx]
        cov = centred.T @ centred / max(n - len(self.classes_), 1) + self.ridge * np.eye(d)
        diff = self.means_ - self.xbar_
        between = (diff * self.priors_[:, None]).T @ diff
        try:
            self.covariance_inv_ = linalg.inv(cov)
            evals, evecs = linalg.eigh(between, cov)
        except (linalg.LinAlgError, ValueError) as exc:
            raise SingularCovariance("within-class covariance is singular despite the ridge") from exc
        order = np.argsort(evals)[::-1]
        self.explained_variance_ = evals[order]
        self.scalings_ = evecs[:, order]
        self.coef_ = self.means_ @ self.covariance_inv_
        self.intercept_ = -0.5 * np.einsum("kd,kd->k", self.coef_, self.means_) + np.log(self.priors_)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return check_array(X, dtype=np.float64) @ self.coef_.T + self.intercept_

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def transform(self, X):
        check_is_fitted(self, "scalings_")
        k = len(self.classes_) - 1
        if self.n_components is not None:
            k = min(k, self.n_components)
        return (check_array(X, dtype=np.float64) - self.xbar_) @ self.scalings_[:, :k]


class LogisticRegression(ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression with an L2 penalty on the weights.

    Minimises ``sum_i CE_i + ||W||^2 / (2 C)`` (intercepts unpenalised) with
    L-BFGS until the gradient norm drops below ``tol`` or ``max_iter``
    iterations pass.
    """

    def __init__(self, C=1.0, tol=1e-6, max_iter=1000):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def _objective(self, theta, X, Y):
        k, d = Y.shape[1], X.shape[1]
        W = theta[:k * d].reshape(k, d)
        b = theta[k * d:]
        z = X @ W.T + b
        z -= z.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        value = -(Y * logp).sum() + 0.5 * (W * W).sum() / self.C
        resid = np.exp(logp) - Y
        gW = resid.T @ X + W / self.C
        return value, np.concatenate([gW.ravel(), resid.sum(axis=0)])

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_ = _check_labels(y)
        Y = (y[:, None] == self.classes_[None, :]).astype(float)
        k, d = len(self.classes_), X.shape[1]
        res = optimize.minimize(self._objective, np.zeros(k * (d + 1)), args=(X, Y), jac=True,
                                method="L-BFGS-B",
                                options={"maxiter": self.max_iter, "gtol": self.tol})
        self.coef_ = res.x[:k * d].reshape(k, d)
        self.intercept_ = res.x[k * d:]
        self.n_iter_ = res.nit
        self.converged_ = bool(res.success)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return check_array(X, dtype=np.float64) @ self.coef_.T + self.intercept_

    def predict_proba(self, X):
        z = self.decision_function(X)
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


METHODS = {"lda": LinearDiscriminantAnalysis, "logreg": LogisticRegression}


def fit_classifier(hq, method: str = "logreg", **params):
    """Fit ``method`` ('lda' or 'logreg') on every (hidden, state) record of ``hq``."""
    if method not in METHODS:
        raise ValueError(f"unknown classifier {method!r}; choose from {sorted(METHODS)}")
    clf = METHODS[method](**params).fit(hq.hidden, hq.states)
    clf.method = method
    return clf


def classifier_ambiguity(classifier, hq) -> metrics.MetricsRecord:
    """Ambiguity of the partition induced by the classifier's predictions."""
    return metrics.ambiguity(hq, classifier.predict(hq.hidden), hq.num_states)


def project_2d(hq):
    """LDA projection to two dimensions as ``(x, y, state)`` rows.

    With only two states the second coordinate is zero.
    """
    lda = LinearDiscriminantAnalysis(n_components=2).fit(hq.hidden, hq.states)
    Z = lda.transform(hq.hidden)
    if Z.shape[1] < 2:
        Z = np.hstack([Z, np.zeros((len(Z), 2 - Z.shape[1]))])
    return [(float(x), float(y), int(q)) for (x, y), q in zip(Z, hq.states)]


def projection_tsv(rows) -> str:
    return "x\ty\tstate\n" + "".join(f"{x!r}\t{y!r}\t{q}\n" for x, y, q in rows)
