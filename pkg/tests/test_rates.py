import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimorate import analytic
from mimorate.channel import FadingProfile, Scenario, SystemGeometry, draw_fast_fading
from mimorate.estimation import PilotScheme, error_variance, mmse_estimate
from mimorate.rates import (
    CSI,
    ReceiverKind,
    SingularGram,
    TooManyDiscards,
    TrialPlan,
    estimate_rate,
    gram_inverse_diag,
    mrc_sinr,
    noise_inflation,
    simulate,
    sinr_explicit,
    sinr_imperfect,
    sinr_perfect,
    sum_rate,
    zf_sinr,
)
from mimorate.streams import substream


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.mark.parametrize("kind", ["mrc", "zf"])
def test_identity_channel_gives_unit_sinr(kind):
    G = np.eye(2, dtype=complex)
    if kind == "zf":
        G = np.vstack([G, np.zeros((1, 2))])  # ZF needs M >= N + 1
    assert sinr_perfect(G, 0, 1.0, kind) == pytest.approx(1.0)
    assert sinr_perfect(G, 1, 1.0, kind) == pytest.approx(1.0)


def test_single_user_mrc_is_snr():
    g = _crandn(np.random.default_rng(1), 6, 1)
    assert sinr_perfect(g, 0, 3.0, "mrc") == pytest.approx(3.0 * np.sum(np.abs(g) ** 2), rel=1e-13)


def test_sinr_matches_explicit_receiver():
    G = _crandn(np.random.default_rng(2), 8, 3)
    A_zf = G @ np.linalg.inv(G.conj().T @ G)
    for n in range(3):
        assert sinr_perfect(G, n, 2.0, "mrc") == pytest.approx(sinr_explicit(G, G, n, 2.0), rel=1e-12)
        assert sinr_perfect(G, n, 2.0, "zf") == pytest.approx(sinr_explicit(A_zf, G, n, 2.0), rel=1e-10)


def _estimate(M, N, p_p, seed, K=1.0):
    rng = substream(seed)
    prof = FadingProfile(K=np.full(N, K), beta=rng.uniform(0.2, 1.0, N))
    geo = SystemGeometry(M=M, N=N, theta=rng.uniform(-1.4, 1.4, N))
    d = draw_fast_fading(geo, prof, rng)
    scheme = PilotScheme(tau=N, p_u=2.0, p_p_override=p_p)
    return prof, scheme, d, mmse_estimate(d, prof, scheme, rng)


def test_imperfect_sinr_matches_explicit_receiver():
    prof, scheme, _, est = _estimate(16, 4, 5.0, 3)
    Gh = est.G_hat
    err_power = float(np.sum(scheme.p_u * error_variance(prof.beta, prof.K, scheme.p_p)))
    A_zf = Gh @ np.linalg.inv(Gh.conj().T @ Gh)
    for n in range(4):
        assert sinr_imperfect(est, prof, scheme, n, "mrc") == pytest.approx(
            sinr_explicit(Gh, Gh, n, scheme.p_u, err_power), rel=1e-12
        )
        assert sinr_imperfect(est, prof, scheme, n, "zf") == pytest.approx(
            sinr_explicit(A_zf, Gh, n, scheme.p_u, err_power), rel=1e-10
        )


def test_imperfect_single_user_mrc():
    prof, scheme, _, est = _estimate(10, 1, 4.0, 4)
    g2 = np.sum(np.abs(est.G_hat) ** 2)
    ev = error_variance(prof.beta[0], prof.K[0], 4.0)
    expected = scheme.p_u * g2**2 / (scheme.p_u * ev * g2 + g2)
    assert sinr_imperfect(est, prof, scheme, 0, "mrc") == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("kind", ["mrc", "zf"])
def test_perfect_pilots_recover_perfect_sinr(kind):
    prof, scheme, d, est = _estimate(12, 3, 1e12, 5)
    for n in range(3):
        assert sinr_imperfect(est, prof, scheme, n, kind) == pytest.approx(
            sinr_perfect(d.G, n, scheme.p_u, kind), rel=1e-3
        )


def test_zf_rejects_too_few_antennas():
    with pytest.raises(ValueError):
        sinr_perfect(np.eye(3, dtype=complex), 0, 1.0, "zf")


def test_zf_singular_gram_raises():
    G = np.ones((5, 2), dtype=complex)
    with pytest.raises(SingularGram):
        sinr_perfect(G, 0, 1.0, "zf")


def test_gram_inverse_diag_flags_singular_batch_entries():
    A = _crandn(np.random.default_rng(6), 3, 6, 2)
    A[1, :, 1] = A[1, :, 0]
    Gm = A.conj().swapaxes(-1, -2) @ A
    d, ok = gram_inverse_diag(Gm)
    assert ok.tolist() == [True, False, True]
    assert np.isnan(d[1]).all()
    assert np.allclose(d[0], np.real(np.diag(np.linalg.inv(Gm[0]))))


def test_mrc_sinr_monotone_in_power():
    G = _crandn(np.random.default_rng(7), 1000, 8, 4)
    assert np.all(mrc_sinr(G, 2.0) >= mrc_sinr(G, 1.0))


def test_zf_orthogonal_los_limit():
    M, N = 32, 4
    theta = np.arcsin(2 * np.arange(N) / M)
    beta = np.array([1.0, 0.5, 0.2, 0.8])
    prof = FadingProfile(K=np.full(N, 1e8), beta=beta)
    d = draw_fast_fading(SystemGeometry(M=M, N=N, theta=theta), prof, substream(8))
    s, ok = zf_sinr(d.G, 3.0)
    assert ok
    np.testing.assert_allclose(s, 3.0 * M * beta, rtol=0.01)


def test_wishart_first_negative_moment():
    from mimorate.experiments.validate import wishart_check

    assert wishart_check(16, 4, 100_000, substream(9)) <= 4.0


def _scenario(M=16, N=3, K=1.0, seed=10):
    rng = substream(seed)
    prof = FadingProfile(K=np.full(N, K), beta=rng.uniform(0.05, 1.0, N))
    return Scenario(SystemGeometry(M=M, N=N, theta=rng.uniform(-1.4, 1.4, N)), prof)


def test_deterministic_channel_has_zero_stderr():
    sc = _scenario(K=1e12)
    est = estimate_rate(sc, PilotScheme(tau=3, p_u=10.0), "zf", "perfect", TrialPlan(trials=400))
    assert np.all(est.stderr <= 1e-6 * est.per_user)


def test_stderr_scales_as_inverse_root_trials():
    sc = _scenario(K=0.5)
    scheme = PilotScheme(tau=3, p_u=10.0)
    se = {}
    for t in (1000, 2000, 4000):
        se[t] = estimate_rate(sc, scheme, "mrc", "perfect", TrialPlan(trials=t)).stderr
    # doubling trials divides the error by sqrt(2); quadrupling halves it
    assert np.mean(se[1000] / se[2000]) == pytest.approx(np.sqrt(2), rel=0.3)
    assert np.mean(se[1000] / se[4000]) == pytest.approx(2.0, rel=0.3)


def test_rate_estimate_invariants():
    sc = _scenario()
    scheme = PilotScheme(tau=5, p_u=3.0)
    res = simulate(sc, scheme, TrialPlan(trials=600), T=50)
    for (kind, csi), est in res.items():
        assert np.all(est.per_user >= 0) and np.all(est.stderr >= 0)
        pref = 1.0 if csi is CSI.PERFECT else 45 / 50
        assert est.sum_rate == pytest.approx(pref * est.per_user.sum(), rel=1e-14)
        assert est.discarded == 0


def test_estimate_rate_matches_simulate_entry():
    sc = _scenario()
    scheme = PilotScheme(tau=3, p_u=3.0)
    plan = TrialPlan(trials=400, master_seed=4)
    a = estimate_rate(sc, scheme, "zf", "imperfect", plan)
    b = simulate(sc, scheme, plan)[(ReceiverKind.ZF, CSI.IMPERFECT)]
    assert np.array_equal(a.per_user, b.per_user)


def test_results_independent_of_worker_count():
    sc = _scenario(M=12, N=3)
    scheme = PilotScheme(tau=3, p_u=3.0)
    ref = None
    for w in (1, 4, 16):
        res = simulate(sc, scheme, TrialPlan(trials=3200, master_seed=11, workers=w))
        vals = {k: (v.per_user.tobytes(), v.stderr.tobytes(), v.sum_rate) for k, v in res.items()}
        if ref is None:
            ref = vals
        assert vals == ref


def test_too_many_discards():
    # two users on the same angle at huge K: Gram is singular on every trial
    prof = FadingProfile(K=np.full(2, 1e12), beta=np.ones(2))
    sc = Scenario(SystemGeometry(M=8, N=2, theta=[0.3, 0.3]), prof)
    with pytest.raises(TooManyDiscards):
        estimate_rate(sc, PilotScheme(tau=2, p_u=1.0), "zf", "perfect", TrialPlan(trials=200))


def test_plan_requires_hundred_trials():
    with pytest.raises(ValueError):
        TrialPlan(trials=99)


def test_sum_rate_prefactor():
    assert sum_rate([4.0, 6.0], "imperfect", T=196, tau=10) == pytest.approx(10 * 186 / 196)
    assert sum_rate([4.0, 6.0], "perfect", T=196, tau=10) == 10.0
    assert sum_rate([4.0, 6.0], "imperfect", T=20, tau=20) == 0.0
    with pytest.raises(ValueError):
        sum_rate([1.0], "imperfect", T=10, tau=11)


def test_noise_inflation_formula():
    prof = FadingProfile(K=[0.0, 1.0], beta=[1.0, 0.5])
    s = PilotScheme(tau=2, p_u=2.0)
    expected = 1 + 2 * 1 / (1 + 4 * 1) / 1 + 2 * 0.5 / (1 + 4 * 0.5) / 2
    assert noise_inflation(prof, s) == pytest.approx(expected)


def test_mrc_monte_carlo_tracks_approximation():
    from mimorate.experiments.config import ExperimentConfig
    from mimorate.experiments.sweep import scenario_drop

    drop = scenario_drop(ExperimentConfig())
    prof = FadingProfile(K=np.full(10, 10**0.6), beta=drop.beta)
    sc = Scenario(SystemGeometry(M=100, N=10, theta=drop.theta), prof)
    est = estimate_rate(sc, PilotScheme(tau=10, p_u=10.0), "mrc", "perfect", TrialPlan(trials=10_000))
    approx = analytic.approx_mrc_perfect(100, prof, drop.theta, 10.0).sum()
    assert abs(approx - est.sum_rate) / est.sum_rate <= 0.03


@settings(max_examples=30)
@given(seed=st.integers(0, 2**31), M=st.integers(4, 20), N=st.integers(1, 3))
def test_zf_sinr_matches_explicit_on_random_draws(seed, M, N):
    G = _crandn(np.random.default_rng(seed), M, N)
    A = G @ np.linalg.inv(G.conj().T @ G)
    s, ok = zf_sinr(G, 1.5)
    assert ok
    for n in range(N):
        assert s[n] == pytest.approx(sinr_explicit(A, G, n, 1.5), rel=1e-8)
