"""scikit-learn style wrappers for batch evaluation at a constant background.

Nothing is learned; ``fit`` only validates parameters and fixes the
background, so the objects drop into pipelines and grid searches.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .background import BackgroundEval
from .classify import Regime, classify_point
from .spectra import wave_speeds
from .symbols import PhasePoint


class _ConstantBackground(BaseEstimator):
    def __init__(self, rho=1.0, p=1.0, H=(1.0, 0.0, 0.0), gamma=5.0 / 3.0):
        self.rho = rho
        self.p = p
        self.H = H
        self.gamma = gamma

    def _fit_background(self, X):
        X = check_array(X, dtype=float)
        self.background_ = BackgroundEval.constant(self.rho, self.p, self.H, self.gamma)
        self.n_features_in_ = X.shape[1]
        return X

    def _check(self, X):
        check_is_fitted(self, "background_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return X


class WaveSpeedTransformer(TransformerMixin, _ConstantBackground):
    """Map frequencies ``xi`` (n, 3) to ``(c_s, c_A, c_f)`` per row.

    Speeds are per unit ``|xi|`` unless ``absolute=True``, in which case they
    are multiplied by ``|xi|`` (the characteristic ``tau`` values).

    Examples
    --------
    >>> WaveSpeedTransformer(H=(0, 0, 0)).fit_transform([[1.0, 0, 0]]).round(6)
    array([[0.      , 0.      , 1.290994]])
    """

    def __init__(self, rho=1.0, p=1.0, H=(1.0, 0.0, 0.0), gamma=5.0 / 3.0, absolute=False):
        super().__init__(rho, p, H, gamma)
        self.absolute = absolute

    def fit(self, X, y=None):
        X = self._fit_background(X)
        if X.shape[1] != 3:
            raise ValueError("X must have three columns (xi1, xi2, xi3)")
        return self

    def transform(self, X):
        X = self._check(X)
        out = np.empty((X.shape[0], 3))
        for i, xi in enumerate(X):
            ws = wave_speeds(self.background_, xi)
            out[i] = (ws.cs, ws.ca, ws.cf)
        if self.absolute:
            out *= np.linalg.norm(X, axis=1)[:, None]
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["c_s", "c_A", "c_f"], dtype=object)


class RegimeClassifier(_ConstantBackground):
    """Label rows ``(tau, xi1, xi2, xi3)`` with their propagation regime."""

    def fit(self, X, y=None):
        X = self._fit_background(X)
        if X.shape[1] != 4:
            raise ValueError("X must have four columns (tau, xi1, xi2, xi3)")
        self.classes_ = np.array([r.value for r in Regime], dtype=object)
        return self

    def predict(self, X):
        X = self._check(X)
        zero = np.zeros(3)
        return np.array([classify_point(PhasePoint(0.0, zero, row[0], row[1:]), self.background_).regime.value
                         for row in X], dtype=object)
