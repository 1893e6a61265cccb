"""Closed-form rate approximations, deterministic equivalents and moments.

Everything here is deterministic.  Formulas that involve the steering
inner products ``phi`` assume half-wavelength spacing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FadingProfile, SystemGeometry, phi_matrix, steering_matrix
from .errors import NumericalGuardError
from .estimation import eta as _eta
from .rates import CSI, ReceiverKind, gram_inverse_diag

__all__ = [
    "ScalingLaw",
    "MomentSet",
    "SingularSigma",
    "SingularSteering",
    "lemma2_moments",
    "lemma4_moments",
    "approx_mrc_perfect",
    "approx_zf_perfect",
    "approx_mrc_imperfect",
    "approx_zf_imperfect",
    "approx_rate",
    "rayleigh_mrc_perfect",
    "rayleigh_mrc_perfect_bound",
    "rayleigh_mrc_imperfect",
    "rayleigh_mrc_imperfect_bound",
    "det_equiv_rate",
    "k_infinity_approx",
    "scaled_power_limit",
    "lemma0_offset",
    "SIGMA_COND_LIMIT",
]

SIGMA_COND_LIMIT = 1e12


class SingularSigma(NumericalGuardError):
    pass


class SingularSteering(NumericalGuardError):
    pass


@dataclass(frozen=True)
class ScalingLaw:
    """Transmit power ``p_u = E_u / M**alpha`` for a fixed budget ``E_u``."""

    alpha: float
    E_u: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if not self.E_u > 0:
            raise ValueError("E_u must be positive")

    def power(self, M) -> float:
        return self.E_u / np.asarray(M, dtype=float) ** self.alpha

    def power_db(self, M) -> float:
        return 10.0 * np.log10(self.E_u) - 10.0 * self.alpha * np.log10(M)


@dataclass
class MomentSet:
    """First and second moments of column inner products.

    ``norm2[n] = E||g_n||^2``, ``norm4[n] = E||g_n||^4`` and
    ``cross2[n, i] = E|g_n^H g_i|^2`` (its diagonal repeats ``norm4``).
    """

    norm2: np.ndarray
    norm4: np.ndarray
    cross2: np.ndarray


def _half_wavelength(spacing_ratio: float) -> None:
    if spacing_ratio != 0.5:
        raise ValueError("closed forms involving phi hold only for half-wavelength spacing")


def _phi2(theta, M, offset=0.0, spacing_ratio=0.5):
    _half_wavelength(spacing_ratio)
    return (phi_matrix(theta, M) + offset) ** 2


def lemma2_moments(M: int, profile: FadingProfile, theta, phi_offset: float = 0.0) -> MomentSet:
    """Moments of the unit-gain fast-fading columns ``h_n``.

    ``phi_offset`` perturbs every phi value; it exists for mutation tests of
    the validation suite and must stay 0 otherwise.
    """
    K = profile.K
    Kn, Ki = K[:, None], K[None, :]
    p2 = _phi2(theta, M, phi_offset)
    norm2 = np.full(K.shape, float(M))
    norm4 = (2 * M * K + M) / (K + 1) ** 2 + M**2
    cross2 = (Kn * Ki * p2 + M * (Kn + Ki) + M) / ((Kn + 1) * (Ki + 1))
    np.fill_diagonal(cross2, norm4)
    return MomentSet(norm2, norm4, cross2)


def lemma4_moments(M: int, profile: FadingProfile, theta, p_p: float, phi_offset: float = 0.0) -> MomentSet:
    """Moments of the estimated channel columns ``g_hat_n`` (gains included)."""
    K, b = profile.K, profile.beta
    e = _eta(b, p_p)
    Kn, Ki = K[:, None], K[None, :]
    en, ei = e[:, None], e[None, :]
    p2 = _phi2(theta, M, phi_offset)
    norm2 = b * M * (K + e) / (K + 1)
    norm4 = b**2 / (K + 1) ** 2 * (M**2 * K**2 + (2 * M * K + 2 * M**2 * K) * e + (M**2 + M) * e**2)
    cross2 = (
        b[:, None] * b[None, :] / ((Kn + 1) * (Ki + 1))
        * (Kn * Ki * p2 + M * Ki * en + M * Kn * ei + M * en * ei)
    )
    np.fill_diagonal(cross2, norm4)
    return MomentSet(norm2, norm4, cross2)


def _offdiag_sum(mat: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``sum_{i != n} weights[i] * mat[n, i]`` for every n."""
    off = mat * weights[None, :]
    return off.sum(axis=1) - np.diag(off)


def approx_mrc_perfect(M: int, profile: FadingProfile, theta, p_u: float) -> np.ndarray:
    K, b = profile.K, profile.beta
    Kn, Ki = K[:, None], K[None, :]
    delta1 = (Kn * Ki * _phi2(theta, M) + M * (Kn + Ki) + M) / (Ki + 1)
    num = p_u * b * (2 * M * K + M + M**2 * (K + 1) ** 2)
    den = p_u * (K + 1) * _offdiag_sum(delta1, b) + M * (K + 1) ** 2
    return np.log2(1 + num / den)


def approx_mrc_imperfect(
    M: int, profile: FadingProfile, theta, p_u: float, tau: int, p_p: float | None = None
) -> np.ndarray:
    """``p_p`` defaults to ``tau * p_u``."""
    K, b = profile.K, profile.beta
    p_p = tau * p_u if p_p is None else p_p
    e = _eta(b, p_p)
    Kn, Ki = K[:, None], K[None, :]
    delta2 = (Kn * Ki * _phi2(theta, M) + M * e[:, None] * (Ki + 1) + M * Kn) / (Ki + 1)
    num = p_u * b * (M**2 * K**2 + (2 * M * K + 2 * M**2 * K) * e + (M + M**2) * e**2)
    den = (
        p_u * (K + 1) * _offdiag_sum(delta2, b)
        + M * p_u * b * (K + e) / (1 + b * p_p)
        + M * (K + 1) * (K + e)
    )
    return np.log2(1 + num / den)


def _los_gram(M: int, theta) -> np.ndarray:
    Hb = steering_matrix(SystemGeometry(M=M, N=len(theta), theta=theta))
    return np.conj(Hb.T) @ Hb


def _sigma_inverse_diag(M: int, K: np.ndarray, theta, diag_part: np.ndarray) -> np.ndarray:
    s = np.sqrt(K / (K + 1))
    sigma = np.diag(diag_part).astype(complex) + (s[:, None] * _los_gram(M, theta) * s[None, :]) / M
    inv, ok = gram_inverse_diag(sigma, SIGMA_COND_LIMIT)
    if not ok:
        raise SingularSigma("covariance of the central-Wishart approximation is singular")
    return inv


def approx_zf_perfect(M: int, profile: FadingProfile, theta, p_u: float) -> np.ndarray:
    N = profile.N
    if M <= N:
        raise ValueError(f"ZF approximation needs M >= N + 1 (M={M}, N={N})")
    K, b = profile.K, profile.beta
    inv = _sigma_inverse_diag(M, K, theta, 1.0 / (K + 1))
    return np.log2(1 + p_u * b * (M - N) / inv)


def approx_zf_imperfect(
    M: int, profile: FadingProfile, theta, p_u: float, tau: int, p_p: float | None = None
) -> np.ndarray:
    N = profile.N
    if M <= N:
        raise ValueError(f"ZF approximation needs M >= N + 1 (M={M}, N={N})")
    K, b = profile.K, profile.beta
    p_p = tau * p_u if p_p is None else p_p
    e = _eta(b, p_p)
    inv = _sigma_inverse_diag(M, K, theta, e / (K + 1))
    inflation = 1.0 + np.sum(p_u * b / ((1 + p_p * b) * (K + 1)))
    return np.log2(1 + p_u * b * (M - N) / (inflation * inv))


def approx_rate(kind, csi, M: int, profile: FadingProfile, theta, p_u: float, tau: int) -> np.ndarray:
    """Dispatch to the per-user approximation for one receiver and CSI model."""
    kind, csi = ReceiverKind(kind), CSI(csi)
    if csi is CSI.PERFECT:
        fn = approx_mrc_perfect if kind is ReceiverKind.MRC else approx_zf_perfect
        return fn(M, profile, theta, p_u)
    fn = approx_mrc_imperfect if kind is ReceiverKind.MRC else approx_zf_imperfect
    return fn(M, profile, theta, p_u, tau)


# Rayleigh (K = 0) special cases and the older lower bounds they improve on.


def _others(beta):
    beta = np.asarray(beta, dtype=float)
    return beta.sum() - beta


def rayleigh_mrc_perfect(M: int, beta, p_u: float) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    return np.log2(1 + p_u * beta * (M + 1) / (p_u * _others(beta) + 1))


def rayleigh_mrc_perfect_bound(M: int, beta, p_u: float) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    return np.log2(1 + p_u * beta * (M - 1) / (p_u * _others(beta) + 1))


def _rayleigh_imperfect(M_factor, beta, p_u, tau):
    beta = np.asarray(beta, dtype=float)
    num = tau * p_u**2 * beta**2 * M_factor
    den = p_u * (tau * p_u * beta + 1) * _others(beta) + (tau + 1) * p_u * beta + 1
    return np.log2(1 + num / den)


def rayleigh_mrc_imperfect(M: int, beta, p_u: float, tau: int) -> np.ndarray:
    return _rayleigh_imperfect(M + 1, beta, p_u, tau)


def rayleigh_mrc_imperfect_bound(M: int, beta, p_u: float, tau: int) -> np.ndarray:
    return _rayleigh_imperfect(M - 1, beta, p_u, tau)


def det_equiv_rate(law: ScalingLaw, M, beta_n, K_n, tau: int, csi, kind=ReceiverKind.MRC):
    """Large-M deterministic equivalent under ``p_u = E_u / M**alpha``.

    MRC and ZF share the same equivalent, so ``kind`` is only validated.
    """
    ReceiverKind(kind)
    csi = CSI(csi)
    M = np.asarray(M, dtype=float)
    beta_n = np.asarray(beta_n, dtype=float)
    E, a = law.E_u, law.alpha
    if csi is CSI.PERFECT:
        snr = E * beta_n / M ** (a - 1)
    else:
        K_n = np.asarray(K_n, dtype=float)
        snr = E * beta_n * K_n / (M ** (a - 1) * (K_n + 1)) + tau * E**2 * beta_n**2 / (
            M ** (2 * a - 1) * (K_n + 1)
        )
    out = np.log2(1 + snr)
    return out if np.ndim(out) else float(out)


def k_infinity_approx(M: int, N: int, beta, theta, p_u: float, kind) -> np.ndarray:
    """Limit of the rate approximations as every K-factor grows without bound.

    The same value holds for perfect and estimated CSI.
    """
    kind = ReceiverKind(kind)
    beta = np.asarray(beta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if beta.shape != (N,) or theta.shape != (N,):
        raise ValueError("beta and theta must have length N")
    if kind is ReceiverKind.MRC:
        interference = _offdiag_sum(_phi2(theta, M), beta)
        return np.log2(1 + p_u * beta * M**2 / (p_u * interference + M))
    if M <= N:
        raise ValueError(f"ZF needs M >= N + 1 (M={M}, N={N})")
    inv, ok = gram_inverse_diag(_los_gram(M, theta) / M, SIGMA_COND_LIMIT)
    if not ok:
        raise SingularSteering("LOS steering matrix is rank deficient")
    return np.log2(1 + p_u * beta * (M - N) / inv)


def scaled_power_limit(K_n, E_u: float, beta_n, tau: int, csi):
    """Rate reached as M grows when power is cut as aggressively as allowed.

    Perfect CSI (any K, ``alpha = 1``): ``log2(1 + E_u beta)``.  Estimated
    CSI: ``log2(1 + K E_u beta / (K + 1))`` for ``K > 0`` (``alpha = 1``)
    and ``log2(1 + tau E_u^2 beta^2)`` for ``K = 0`` (``alpha = 1/2``).
    """
    if not E_u > 0:
        raise ValueError("E_u must be positive")
    csi = CSI(csi)
    K_n = np.asarray(K_n, dtype=float)
    beta_n = np.asarray(beta_n, dtype=float)
    if csi is CSI.PERFECT:
        out = np.log2(1 + E_u * beta_n) + 0 * K_n
    else:
        out = np.where(
            K_n > 0,
            np.log2(1 + K_n * E_u * beta_n / (K_n + 1)),
            np.log2(1 + tau * E_u**2 * beta_n**2),
        )
    return out if np.ndim(out) else float(out)


def lemma0_offset(samples_X, samples_Y, exact: bool = False) -> float:
    """Gap between the bounds that bracket ``E log2(1 + X/Y)``.

    By default the second-order form built from sample means and variances
    of ``X + Y`` and ``Y``; with ``exact=True`` the sample version of
    ``log2(E[S] E[1/S] E[Y] E[1/Y])`` with ``S = X + Y``.
    """
    X = np.asarray(samples_X, dtype=float)
    Y = np.asarray(samples_Y, dtype=float)
    S = X + Y
    mS, mY = S.mean(), Y.mean()
    if not (mS > 0 and mY > 0) or X.mean() < 0:
        raise ValueError("sample means must be positive")
    if exact:
        return float(np.log2(mS * np.mean(1 / S) * mY * np.mean(1 / Y)))
    return float(np.log2((1 + S.var() / mS**2) * (1 + Y.var() / mY**2)))
