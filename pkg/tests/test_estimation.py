import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mimorate.channel import FadingProfile, SystemGeometry, draw_fast_fading
from mimorate.estimation import PilotScheme, error_variance, eta, mmse_estimate
from mimorate.experiments.validate import error_variance_check
from mimorate.streams import substream


@pytest.mark.parametrize(
    "beta,K,expected",
    [(1.0, 0.0, 1 / 11), (1.0, 1.0, 1 / 22), (2.0, 0.0, 2 / 21)],
)
def test_error_variance_values(beta, K, expected):
    assert error_variance(beta, K, 10.0) == pytest.approx(expected, rel=1e-12)


def test_eta_values_and_limits():
    assert eta(1.0, 10.0) == pytest.approx(10 / 11)
    assert eta(1.0, 1e12) == pytest.approx(1.0, abs=1e-11)
    assert eta(1.0, 1e-12) == pytest.approx(0.0, abs=1e-11)


def test_pilot_power_coupling():
    s = PilotScheme(tau=10, p_u=2.5)
    assert s.p_p == 25.0
    assert s.with_power(0.5).p_p == 5.0
    assert PilotScheme(tau=10, p_u=2.5, p_p_override=7.0).p_p == 7.0


def test_pilot_length_must_cover_users():
    with pytest.raises(ValueError):
        PilotScheme(tau=3, p_u=1.0).check_users(4)


def test_nonpositive_pilot_power_rejected():
    with pytest.raises(ValueError):
        eta(1.0, 0.0)
    with pytest.raises(ValueError):
        error_variance(1.0, 0.0, -1.0)


def _setup(p_p, K=(1.0, 0.0), beta=(1.0, 0.2), M=16, batch=None, seed=0):
    prof = FadingProfile(K=np.asarray(K), beta=np.asarray(beta))
    geo = SystemGeometry(M=M, N=2, theta=[0.3, -0.5])
    rng = substream(seed)
    d = draw_fast_fading(geo, prof, rng, batch=batch)
    return prof, d, mmse_estimate(d, prof, PilotScheme(tau=2, p_u=1.0, p_p_override=p_p), rng)


def test_huge_pilot_power_recovers_channel():
    _, d, e = _setup(1e12)
    assert np.max(np.abs(e.G_hat - d.G)) < 1e-4


def test_tiny_pilot_power_leaves_los_only():
    prof, d, e = _setup(1e-12)
    assert np.max(np.abs(e.G_hat - d.G_bar * prof.los_weight)) < 1e-4


def test_error_variance_monte_carlo():
    rel, _ = error_variance_check((0.1, 1.0), 3.98, 10.0, 100_000, substream(7))
    assert np.all(rel < 0.03)


def test_estimate_error_orthogonal():
    _, d, e = _setup(3.0, batch=100_000, M=4, seed=8)
    prod = e.G_hat * np.conj(e.G_hat - d.G)
    for part in (prod.real, prod.imag):
        se = part.std(axis=0, ddof=1) / np.sqrt(part.shape[0])
        assert np.all(np.abs(part.mean(axis=0)) < 4 * se)


def test_estimate_statistics_fields():
    prof, _, e = _setup(10.0)
    assert np.array_equal(e.D_tilde, e.eta)
    assert np.allclose(e.error_var, prof.beta / ((1 + 10 * prof.beta) * (prof.K + 1)))


@given(beta=st.floats(1e-6, 1e3), K=st.floats(0, 1e6), p_p=st.floats(1e-3, 1e6))
def test_error_plus_estimate_variance_is_scatter_variance(beta, K, p_p):
    # MMSE splits the scatter power beta/(K+1) into estimate and error parts
    est_var = beta * eta(beta, p_p) / (K + 1)
    assert est_var + error_variance(beta, K, p_p) == pytest.approx(beta / (K + 1), rel=1e-9)
