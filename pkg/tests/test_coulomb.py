import numpy as np
import pytest
from scipy import integrate, stats

from crystal_sff.coulomb import (
    circular_spacings,
    coulomb_energy,
    mcmc_coulomb_chains,
    mcmc_coulomb_sample,
    wrap_phase,
)
from crystal_sff.errors import ParameterError
from crystal_sff.rng import derive_stream


def test_energy_oracle():
    E = np.array([0.1, 1.3, -2.0])
    ref = -sum(np.log(abs(np.exp(1j * E[i]) - np.exp(1j * E[j]))) for i in range(3) for j in range(i + 1, 3))
    assert abs(coulomb_energy(E) - ref) < 1e-13
    # equally spaced is the minimum: -(d/2) log d
    d = 7
    assert abs(coulomb_energy(2 * np.pi * np.arange(d) / d) + 0.5 * d * np.log(d)) < 1e-12


def test_wrap_and_spacings():
    assert wrap_phase(np.pi) == pytest.approx(np.pi)
    assert wrap_phase(-np.pi) == pytest.approx(np.pi)
    assert wrap_phase(3 * np.pi / 2) == pytest.approx(-np.pi / 2)
    s = circular_spacings(np.array([[0.5, -1.0, 2.0]]))
    np.testing.assert_allclose(s.sum(), 2 * np.pi)
    np.testing.assert_allclose(s[0], [1.5, 1.5, 2 * np.pi - 3.0])


def test_beta_zero_is_uniform():
    res = mcmc_coulomb_chains(4, 0.0, derive_stream(70, 0), n_chains=2000, burn_in=50, thin=5)
    assert stats.kstest(res.phases.ravel(), stats.uniform(-np.pi, 2 * np.pi).cdf).pvalue > 1e-3
    assert res.acceptance == 1.0 and res.warning is not None  # always accepted: flagged


@pytest.mark.parametrize("beta", [1.0, 4.0])
def test_two_particle_spacing_density(beta):
    norm = integrate.quad(lambda x: np.sin(x / 2) ** beta, 0, 2 * np.pi)[0]

    def cdf(x):
        return np.array([integrate.quad(lambda y: np.sin(y / 2) ** beta, 0, v)[0] for v in np.atleast_1d(x)]) / norm

    res = mcmc_coulomb_chains(2, beta, derive_stream(71, int(beta)), n_chains=5000, burn_in=300)
    # the gap after the lowest phase is biased by the branch cut; a fair coin between
    # the two circular gaps gives the rotation-invariant law
    both = circular_spacings(res.phases)
    pick = derive_stream(71, 99).integers(0, 2, len(both))
    gaps = both[np.arange(len(both)), pick]
    assert stats.kstest(gaps, cdf).statistic < 0.025
    assert res.warning is None


def test_energy_finite_and_acceptance():
    res = mcmc_coulomb_chains(16, 8.0, derive_stream(72, 0), n_chains=50, samples_per_chain=4)
    assert np.all(np.isfinite(coulomb_energy(res.phases)))
    assert 0.1 < res.acceptance < 0.9 and res.warning is None


def test_lag_one_autocorrelation():
    # thinning 10 sweeps decorrelates a smallest-gap observable at d = 16
    for beta in (2.0, 8.0):
        res = mcmc_coulomb_chains(16, beta, derive_stream(73, int(beta)), n_chains=400, samples_per_chain=20)
        x = circular_spacings(res.phases)[:, 0].reshape(400, 20)
        x = x - x.mean()
        r1 = np.sum(x[:, 1:] * x[:, :-1]) / np.sum(x * x)
        assert abs(r1) < 0.05


def test_single_sample_and_errors():
    res = mcmc_coulomb_sample(6, 2.0, derive_stream(74, 0), sweeps=200)
    assert res.phases.shape == (1, 6)
    with pytest.raises(ParameterError):
        mcmc_coulomb_chains(1, 1.0, derive_stream(0, 0), 1)
    with pytest.raises(ParameterError):
        mcmc_coulomb_chains(4, -1.0, derive_stream(0, 0), 1)
