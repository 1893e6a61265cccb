"""MMSE estimation of the scattered channel from orthogonal uplink pilots.

The LOS part and the K-factors are taken as known at the base station, so
only ``G_w = H_w D^{1/2}`` is estimated.  Because the pilots are
orthonormal after the ``(Omega + I)^{-1/2}`` scaling, the projected pilot
noise is itself i.i.d. CN(0, 1); the estimator is therefore simulated as

    G_w_hat = (G_w + W / sqrt(p_p)) diag(eta),   eta_n = p_p b_n / (1 + p_p b_n)

without ever forming the pilot matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelDraw, FadingProfile, complex_normal

__all__ = ["PilotScheme", "EstimateDraw", "mmse_estimate", "error_variance", "eta"]


@dataclass(frozen=True)
class PilotScheme:
    """Pilot length ``tau`` and per-user data power ``p_u`` (linear).

    The pilot power is ``tau * p_u`` unless overridden with ``p_p``; the
    override exists for limit studies (``p_p -> 0`` or ``p_p -> inf``).
    """

    tau: int
    p_u: float
    p_p_override: float | None = None

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("pilot length must be positive")
        if not self.p_u > 0:
            raise ValueError("data power must be positive")
        if self.p_p_override is not None and not self.p_p_override > 0:
            raise ValueError("pilot power must be positive")

    @property
    def p_p(self) -> float:
        if self.p_p_override is not None:
            return float(self.p_p_override)
        return self.tau * self.p_u

    def check_users(self, N: int) -> None:
        if self.tau < N:
            raise ValueError(f"orthogonal pilots need tau >= N (tau={self.tau}, N={N})")

    def with_power(self, p_u: float) -> "PilotScheme":
        return PilotScheme(self.tau, p_u, self.p_p_override)


@dataclass
class EstimateDraw:
    """Channel estimate and the per-user estimation statistics.

    ``D_tilde`` holds the diagonal MMSE gains, which coincide with ``eta``.
    """

    G_hat: np.ndarray
    D_tilde: np.ndarray
    eta: np.ndarray
    error_var: np.ndarray


def eta(beta, p_p: float):
    beta = np.asarray(beta, dtype=float)
    if not p_p > 0:
        raise ValueError("pilot power must be positive")
    return p_p * beta / (1.0 + p_p * beta)


def error_variance(beta_i, K_i, p_p: float):
    """Per-entry variance of the estimation error ``G_hat - G``."""
    if not p_p > 0:
        raise ValueError("pilot power must be positive")
    beta_i = np.asarray(beta_i, dtype=float)
    K_i = np.asarray(K_i, dtype=float)
    out = beta_i / ((1.0 + p_p * beta_i) * (K_i + 1.0))
    return out if out.ndim else float(out)


def mmse_estimate(
    draw: ChannelDraw,
    profile: FadingProfile,
    scheme: PilotScheme,
    rng: np.random.Generator,
) -> EstimateDraw:
    """Estimate ``G`` from one pilot phase; batched draws get one noise matrix each."""
    p_p = scheme.p_p
    gains = eta(profile.beta, p_p)
    W = complex_normal(rng, draw.H_w.shape)
    G_w_hat = (draw.G_w + W / np.sqrt(p_p)) * gains
    G_hat = draw.G_bar * profile.los_weight + G_w_hat * profile.scatter_weight
    return EstimateDraw(
        G_hat=G_hat,
        D_tilde=gains,
        eta=gains,
        error_var=error_variance(profile.beta, profile.K, p_p),
    )
