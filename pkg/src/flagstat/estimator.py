"""Scikit-learn style estimator for the flag of principal subspaces."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_alpha, check_data, check_denominator, check_flag_type
from .flag import flag_of_eigenspaces
from .inference import (
    _critical_value,
    confidence_region_statistic,
    flag_hypothesis_test,
    khat_scaling,
    pivotal_statistic,
    sample_covariance,
    sample_spectrum,
)

__all__ = ["PrincipalFlagEstimator"]


class PrincipalFlagEstimator(TransformerMixin, BaseEstimator):
    """Estimate the flag of eigenspaces of a covariance matrix.

    Parameters
    ----------
    flag_type : str or sequence of int
        Multiplicities of the eigenvalues, largest first, e.g. ``"1,1,2"``.
    denominator : {"n", "n-1"}
        Normalization of the sample covariance.
    alpha : float
        Level used by :meth:`contains` and :meth:`test`.

    Attributes
    ----------
    mean_ : (d,) ndarray
    covariance_ : (d, d) ndarray
    n_samples_ : int
    eigenvalues_ : (d,) ndarray
        Sample eigenvalues in decreasing order.
    components_ : (d, d) ndarray
        Sample eigenvectors as columns.
    flag_ : Flag
        Flag of sample eigenspaces.
    block_means_ : (r,) ndarray
        Average sample eigenvalue of each block.
    scaling_ : BlockScaling
        Estimated per-component scalings used by the statistic.
    """

    def __init__(self, flag_type=None, denominator="n", alpha=0.05):
        self.flag_type = flag_type
        self.denominator = denominator
        self.alpha = alpha

    def fit(self, X, y=None):
        X = check_data(X)
        ft = check_flag_type(self.flag_type, X.shape[1])
        check_denominator(self.denominator)
        check_alpha(self.alpha)

        S = sample_covariance(X, self.denominator)
        spectrum = sample_spectrum(S, X.shape[0], ft)
        self.flag_type_ = ft
        self.mean_ = X.mean(axis=0)
        self.covariance_ = S
        self.n_samples_ = X.shape[0]
        self.n_features_in_ = X.shape[1]
        self.eigenvalues_ = spectrum.eigvals
        self.components_ = spectrum.eigvecs
        self.block_means_ = spectrum.block_means
        self.flag_ = flag_of_eigenspaces(S, ft)
        self.scaling_ = khat_scaling(spectrum, ft)
        return self

    def transform(self, X):
        """Coordinates of centred data in the sample eigenbasis."""
        check_is_fitted(self)
        X = check_data(X, min_samples=1)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return (X - self.mean_) @ self.components_

    def pivotal_statistic(self, reference):
        """Pivotal statistic of a hypothesized eigenvector matrix or flag."""
        check_is_fitted(self)
        return pivotal_statistic(reference, self.covariance_, self.flag_type_, self.n_samples_)

    def region_statistic(self, candidate):
        """Scaled squared discrepancy of ``candidate`` to the sample flag (None in the cut locus)."""
        check_is_fitted(self)
        stat, _ = confidence_region_statistic(candidate, self.covariance_, self.flag_type_,
                                              self.n_samples_)
        return stat

    def contains(self, candidate):
        """Whether ``candidate`` lies in the (1 - alpha) confidence region."""
        stat = self.region_statistic(candidate)
        return stat is not None and stat <= _critical_value(self.flag_type_, check_alpha(self.alpha))

    def test(self, q0, X):
        """Level-alpha test that ``q0`` spans the eigenflag of the law of ``X``."""
        X = check_data(X, self.flag_type)
        return flag_hypothesis_test(q0, X, check_flag_type(self.flag_type), check_alpha(self.alpha),
                                    check_denominator(self.denominator))
