import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from flagstat import PrincipalFlagEstimator
from flagstat.exceptions import DomainError
from flagstat.flag import flag_from_orthogonal
from flagstat.montecarlo import replicate_rng, sample_gaussian, seeded_model


@pytest.fixture
def data():
    m = seeded_model("1,1,2", (5.0, 3.0, 1.0), 3)
    return m, sample_gaussian(m, 3000, replicate_rng(3, 0))


def test_params_round_trip():
    est = PrincipalFlagEstimator(flag_type="1,2", denominator="n-1", alpha=0.1)
    assert est.get_params() == {"flag_type": "1,2", "denominator": "n-1", "alpha": 0.1}
    est.set_params(alpha=0.01)
    assert clone(est).alpha == 0.01


def test_fit_attributes(data):
    m, X = data
    est = PrincipalFlagEstimator("1,1,2").fit(X)
    assert est.n_samples_ == 3000 and est.n_features_in_ == 4
    assert np.all(np.diff(est.eigenvalues_) <= 0)
    np.testing.assert_allclose(est.block_means_, [est.eigenvalues_[0], est.eigenvalues_[1],
                                                  est.eigenvalues_[2:].mean()])
    np.testing.assert_allclose(est.covariance_, np.cov(X.T, bias=True), atol=1e-12)
    assert len(est.flag_) == 3


def test_transform_decorrelates(data):
    _, X = data
    Z = PrincipalFlagEstimator("1,1,2").fit_transform(X)
    C = np.cov(Z.T, bias=True)
    np.testing.assert_allclose(C, np.diag(np.diag(C)), atol=1e-10)


def test_statistics_and_region(data):
    m, X = data
    est = PrincipalFlagEstimator("1,1,2").fit(X)
    rep = est.pivotal_statistic(m.gamma)
    assert rep.dof == 5
    assert est.contains(est.flag_)
    assert est.region_statistic(m.flag) == pytest.approx(rep.statistic, rel=1e-10)
    decision, _ = est.test(m.gamma, X)
    assert decision in ("accept", "reject")
    swapped = flag_from_orthogonal(m.gamma[:, [1, 0, 2, 3]], "1,1,2")
    assert not est.contains(swapped)


def test_validation(data):
    _, X = data
    with pytest.raises(DomainError):
        PrincipalFlagEstimator("1,1").fit(X)
    with pytest.raises(DomainError):
        PrincipalFlagEstimator("1,1,2", denominator="x").fit(X)
    with pytest.raises(DomainError):
        PrincipalFlagEstimator(None).fit(X)
    with pytest.raises(DomainError):
        PrincipalFlagEstimator("1,1,2").fit(X[:1])
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(DomainError):
        PrincipalFlagEstimator("1,1,2").fit(bad)
    with pytest.raises(NotFittedError):
        PrincipalFlagEstimator("1,1,2").transform(X)


def test_pipeline(data):
    _, X = data
    pipe = make_pipeline(FunctionTransformer(lambda A: 2 * A), PrincipalFlagEstimator("1,1,2"))
    assert pipe.fit_transform(X).shape == X.shape
