"""Ricean channel generation for a uniform linear array.

The channel of user ``n`` is ``g_n = sqrt(beta_n) * h_n`` with

    h_n = sqrt(K_n / (K_n + 1)) * hbar_n + sqrt(1 / (K_n + 1)) * w_n

where ``hbar_n`` is the deterministic steering vector of the user's
arrival angle and ``w_n`` is i.i.d. CN(0, 1) scatter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SystemGeometry",
    "FadingProfile",
    "ChannelDraw",
    "ScenarioDrop",
    "Scenario",
    "steering_matrix",
    "phi",
    "phi_matrix",
    "complex_normal",
    "draw_fast_fading",
    "drop_users",
    "db_to_linear",
    "linear_to_db",
    "K_INF",
]

# Stand-in for K -> infinity wherever a finite number is required.
K_INF = 1e12

_PHI_EPS = 1e-12


def db_to_linear(x_db):
    """``10**(x/10)``; ``-inf`` maps to 0 and ``+inf`` to :data:`K_INF`."""
    x = np.asarray(x_db, dtype=float)
    out = np.where(np.isposinf(x), K_INF, 10.0 ** (np.where(np.isinf(x), 0.0, x) / 10.0))
    out = np.where(np.isneginf(x), 0.0, out)
    return out if out.ndim else float(out)


def linear_to_db(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(x)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SystemGeometry:
    """Array size, user count and arrival angles (radians)."""

    M: int
    N: int
    theta: np.ndarray
    spacing_ratio: float = 0.5

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "theta", theta)
        if self.M < 1 or self.N < 1:
            raise ValueError(f"need M >= 1 and N >= 1, got M={self.M}, N={self.N}")
        if theta.shape != (self.N,):
            raise ValueError(f"theta must have length N={self.N}, got shape {theta.shape}")
        if np.any(np.abs(theta) > np.pi / 2 + 1e-12):
            raise ValueError("arrival angles must lie in [-pi/2, pi/2]")

    def with_M(self, M: int) -> "SystemGeometry":
        return SystemGeometry(M=M, N=self.N, theta=self.theta, spacing_ratio=self.spacing_ratio)


@dataclass(frozen=True)
class FadingProfile:
    """Per-user Ricean K-factors and large-scale gains, both linear."""

    K: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        K = np.atleast_1d(np.asarray(self.K, dtype=float))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if K.shape != beta.shape or K.ndim != 1:
            raise ValueError("K and beta must be 1-d vectors of equal length")
        if np.any(K < 0) or not np.all(np.isfinite(K)):
            raise ValueError("K-factors must be finite and nonnegative")
        if np.any(beta <= 0):
            raise ValueError("large-scale gains must be positive")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "beta", beta)

    @property
    def N(self) -> int:
        return self.K.shape[0]

    @property
    def los_weight(self) -> np.ndarray:
        """sqrt(K / (K + 1))"""
        return np.sqrt(self.K / (self.K + 1.0))

    @property
    def scatter_weight(self) -> np.ndarray:
        """sqrt(1 / (K + 1))"""
        return np.sqrt(1.0 / (self.K + 1.0))

    @classmethod
    def uniform(cls, N: int, K: float, beta=1.0) -> "FadingProfile":
        return cls(K=np.full(N, float(K)), beta=np.broadcast_to(np.asarray(beta, float), (N,)).copy())


@dataclass
class ChannelDraw:
    """One (or a batch of) channel realizations.

    ``H_bar`` is M x N; ``H_w``, ``H`` and ``G`` are ``(..., M, N)``.
    """

    H_bar: np.ndarray
    H_w: np.ndarray
    H: np.ndarray
    G: np.ndarray
    beta: np.ndarray = field(repr=False)

    @property
    def G_w(self) -> np.ndarray:
        """Scatter part scaled by the large-scale gains."""
        return self.H_w * np.sqrt(self.beta)

    @property
    def G_bar(self) -> np.ndarray:
        return self.H_bar * np.sqrt(self.beta)


@dataclass(frozen=True)
class ScenarioDrop:
    radii: np.ndarray
    shadow: np.ndarray
    theta: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class Scenario:
    """Geometry plus fading profile, held fixed across Monte Carlo trials."""

    geometry: SystemGeometry
    profile: FadingProfile
    scenario_id: int = 0

    def __post_init__(self):
        if self.geometry.N != self.profile.N:
            raise ValueError("geometry and profile disagree on the number of users")

    @property
    def M(self) -> int:
        return self.geometry.M

    @property
    def N(self) -> int:
        return self.geometry.N

    def with_M(self, M: int) -> "Scenario":
        return Scenario(self.geometry.with_M(M), self.profile, self.scenario_id)

    def with_K(self, K) -> "Scenario":
        K = np.broadcast_to(np.asarray(K, dtype=float), (self.N,)).copy()
        return Scenario(self.geometry, FadingProfile(K, self.profile.beta), self.scenario_id)


def steering_matrix(geometry: SystemGeometry) -> np.ndarray:
    """LOS matrix with entries ``exp(-j (m-1) 2 pi (d/lambda) sin(theta_n))``."""
    m = np.arange(geometry.M)[:, None]
    phase = 2.0 * np.pi * geometry.spacing_ratio * np.sin(geometry.theta)[None, :]
    return np.exp(-1j * m * phase)


def phi(theta_n, theta_i, M: int):
    """Dirichlet-kernel magnitude of two half-wavelength steering vectors.

    ``sin(M pi D / 2) / sin(pi D / 2)`` with ``D = sin(theta_n) - sin(theta_i)``.
    Where the denominator vanishes (D in {-2, 0, 2}) the L'Hopital limit
    ``M cos(M pi D / 2) / cos(pi D / 2)`` is returned.
    """
    delta = np.sin(np.asarray(theta_n, dtype=float)) - np.sin(np.asarray(theta_i, dtype=float))
    half = 0.5 * np.pi * delta
    den = np.sin(half)
    singular = np.abs(den) < _PHI_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        regular = np.sin(M * half) / den
    limit = M * np.cos(M * half) / np.cos(half)
    out = np.where(singular, limit, regular)
    return out if out.ndim else float(out)


def phi_matrix(theta, M: int) -> np.ndarray:
    """All pairwise ``phi(theta_n, theta_i, M)``; the diagonal equals M."""
    theta = np.asarray(theta, dtype=float)
    return np.asarray(phi(theta[:, None], theta[None, :], M))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1): real and imaginary parts each N(0, 1/2)."""
    shape = tuple(np.atleast_1d(shape)) if not isinstance(shape, tuple) else shape
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def draw_fast_fading(
    geometry: SystemGeometry,
    profile: FadingProfile,
    rng: np.random.Generator,
    batch: int | None = None,
) -> ChannelDraw:
    """Draw ``H_w`` and assemble ``H`` and ``G``.

    With ``batch`` set, the random matrices gain a leading axis of that length.
    """
    if geometry.N != profile.N:
        raise ValueError("geometry and profile disagree on the number of users")
    H_bar = steering_matrix(geometry)
    shape = (geometry.M, geometry.N) if batch is None else (batch, geometry.M, geometry.N)
    H_w = complex_normal(rng, shape)
    H = H_bar * profile.los_weight + H_w * profile.scatter_weight
    G = H * np.sqrt(profile.beta)
    return ChannelDraw(H_bar=H_bar, H_w=H_w, H=H, G=G, beta=profile.beta)


def drop_users(
    cell_radius: float,
    r_h: float,
    v: float,
    sigma_dB: float,
    N: int,
    rng: np.random.Generator,
) -> ScenarioDrop:
    """Drop N users uniformly (in area) over the annulus ``r_h <= r <= cell_radius``.

    ``beta_n = z_n / (r_n / r_h)**v`` with log-normal shadowing ``z_n`` whose
    standard deviation is ``sigma_dB`` in dB.  Arrival angles are uniform on
    ``[-pi/2, pi/2)``, independent of the radius.
    """
    if not r_h < cell_radius:
        raise ValueError(f"exclusion radius {r_h} must be smaller than the cell radius {cell_radius}")
    if r_h <= 0:
        raise ValueError("exclusion radius must be positive")
    u = rng.uniform(size=N)
    radii = np.sqrt(r_h**2 + u * (cell_radius**2 - r_h**2))
    shadow = 10.0 ** (sigma_dB * rng.standard_normal(N) / 10.0)
    theta = rng.uniform(-np.pi / 2, np.pi / 2, size=N)
    beta = shadow / (radii / r_h) ** v
    return ScenarioDrop(radii=radii, shadow=shadow, theta=theta, beta=beta)
