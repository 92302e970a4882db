import numpy as np
import pytest

from bandsure.estimators import (
    PopulationModel,
    as_data,
    banding_estimator,
    membership_constant,
    offband_mass,
    power_law_sigma,
    sample_cov,
    taper_weights,
    tapering_estimator,
)
from bandsure.matcore import NotPositiveDefiniteError, band


def test_sample_cov_examples():
    assert np.array_equal(np.asarray(sample_cov([[1.0, 2.0], [1.0, 2.0]])), np.zeros((2, 2)))
    assert np.asarray(sample_cov([[0.0], [2.0]]))[0, 0] == 2.0


def test_sample_cov_matches_numpy(rng):
    x = rng.standard_normal((40, 7))
    np.testing.assert_allclose(np.asarray(sample_cov(x)), np.cov(x, rowvar=False), rtol=1e-12)


def test_sample_cov_is_psd_on_probes(rng):
    s = np.asarray(sample_cov(rng.standard_normal((5, 12))))  # rank deficient
    probes = rng.standard_normal((1000, 12))
    assert np.min(np.einsum("ki,ij,kj->k", probes, s, probes)) >= -1e-10


def test_sample_cov_unbiased_monte_carlo():
    model = PopulationModel(20, alpha=0.5)
    sigma = np.asarray(model.sigma())
    L = np.linalg.cholesky(sigma)
    rng = np.random.default_rng(11)
    reps, n = 2000, 30
    z = rng.standard_normal((reps, n, 20)) @ L.T
    zc = z - z.mean(axis=1, keepdims=True)
    covs = np.einsum("rki,rkj->rij", zc, zc) / (n - 1)
    se = covs.std(axis=0, ddof=1) / np.sqrt(reps)
    iu = np.triu_indices(20)
    assert np.all(np.abs(covs.mean(axis=0) - sigma)[iu] <= 3 * se[iu])


def test_as_data_validation():
    for bad in ([[1.0]], [1.0, 2.0], [[np.inf, 1.0], [1.0, 1.0]]):
        with pytest.raises(ValueError):
            as_data(bad)


def test_banding_estimator_matches_band_of_sample_cov(rng):
    x = rng.standard_normal((20, 9))
    s = sample_cov(x)
    assert banding_estimator(x, 3) == band(s, 3)
    assert banding_estimator(x, 9) == s
    assert banding_estimator(x, 1) == SymMatrixDiag(s)
    b = np.asarray(banding_estimator(x, 3))
    i, j = np.indices(b.shape)
    assert np.all(b[np.abs(i - j) >= 3] == 0.0)


def SymMatrixDiag(s):
    from bandsure.matcore import SymMatrix

    return SymMatrix(np.diag(np.diag(np.asarray(s))))


def test_taper_weights():
    w = taper_weights(4, 6)
    assert w[0] == 1.0
    assert w[3] == 0.5
    np.testing.assert_array_equal(w, [1.0, 1.0, 1.0, 0.5, 0.0, 0.0])
    for k in (0, 3, -2, 2.5):
        with pytest.raises(ValueError):
            taper_weights(k, 5)


def test_tapering_with_full_weights_is_sample_cov(rng):
    x = rng.standard_normal((15, 6))
    assert tapering_estimator(x, 10) == sample_cov(x)
    assert tapering_estimator(x, 12) == sample_cov(x)


def test_power_law_examples():
    s = np.asarray(power_law_sigma(PopulationModel(3, rho=0.6, alpha=0.5)))
    assert s[0, 1] == pytest.approx(0.6, rel=1e-15)
    assert s[0, 2] == pytest.approx(0.212132034, rel=1e-8)
    assert np.array_equal(np.asarray(PopulationModel(5, rho=0.0).sigma()), np.eye(5))
    PopulationModel(250, alpha=0.1).sigma()  # positive definite


def test_power_law_properties():
    s = np.asarray(PopulationModel(30, alpha=0.3).sigma())
    assert np.array_equal(s, s.T)
    assert np.all(np.diag(s) == 1.0)
    first_row = s[0, 1:]
    assert np.all(np.diff(first_row) < 0)


def test_power_law_not_pd_raises():
    with pytest.raises(NotPositiveDefiniteError):
        PopulationModel(50, rho=5.0, alpha=0.1).sigma()


def test_population_model_validation():
    for kwargs in ({"p": 0}, {"p": 3, "alpha": 0.0}, {"p": 3, "diagonal": -1.0}):
        with pytest.raises(ValueError):
            PopulationModel(**kwargs)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
def test_membership_constant_is_finite_and_bounds_mass(alpha):
    s = PopulationModel(200, alpha=alpha).sigma()
    m1 = membership_constant(s, alpha)
    mass = offband_mass(s)
    k = np.arange(1, mass.size + 1)
    assert np.isfinite(m1)
    assert np.all(mass <= m1 * k**-alpha * (1 + 1e-12))


def test_offband_mass_brute_force():
    s = np.asarray(PopulationModel(6, alpha=0.5).sigma())
    for k in range(1, 6):
        ref = max(sum(abs(s[i, j]) for i in range(6) if abs(i - j) >= k) for j in range(6))
        assert offband_mass(s)[k - 1] == pytest.approx(ref, rel=1e-14)
