"""Per-realization SINR and Monte Carlo achievable rates for MRC and ZF.

Trials are grouped into fixed-size blocks.  Block ``b`` of a point keyed
``key`` always draws from ``substream(master_seed, *key, b)`` and blocks are
reassembled in index order before any reduction, so an estimate is
bit-identical whatever the number of workers.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel import FadingProfile, Scenario, draw_fast_fading
from .errors import NumericalGuardError
from .estimation import EstimateDraw, PilotScheme, mmse_estimate
from .streams import substream

__all__ = [
    "ReceiverKind",
    "CSI",
    "SingularGram",
    "TooManyDiscards",
    "RateEstimate",
    "TrialPlan",
    "noise_inflation",
    "gram",
    "gram_inverse_diag",
    "mrc_sinr",
    "zf_sinr",
    "sinr_perfect",
    "sinr_imperfect",
    "sinr_explicit",
    "simulate",
    "estimate_rate",
    "sum_rate",
    "csi_prefactor",
    "GRAM_COND_LIMIT",
    "BLOCK_TRIALS",
]

GRAM_COND_LIMIT = 1e12
MAX_DISCARD_FRACTION = 1e-3
BLOCK_TRIALS = 200
DEFAULT_TRIALS = 10_000


class ReceiverKind(str, enum.Enum):
    MRC = "mrc"
    ZF = "zf"


class CSI(str, enum.Enum):
    PERFECT = "perfect"
    IMPERFECT = "imperfect"


class SingularGram(NumericalGuardError):
    """The Gram matrix of the (estimated) channel is numerically singular."""


class TooManyDiscards(NumericalGuardError):
    """More than a fraction 1e-3 of the trials hit a singular Gram matrix."""


@dataclass(frozen=True)
class TrialPlan:
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 100:
            raise ValueError("at least 100 trials are required")
        if self.workers < 1:
            raise ValueError("workers must be positive")


@dataclass
class RateEstimate:
    """Monte Carlo mean rates in bits/s/Hz.

    ``per_user`` and ``stderr`` are the ergodic rate of each user and its
    standard error; ``sum_rate`` and ``sum_stderr`` already carry the
    ``(T - tau) / T`` factor for imperfect CSI.
    """

    per_user: np.ndarray
    sum_rate: float
    stderr: np.ndarray
    trials: int
    discarded: int
    sum_stderr: float = 0.0


def csi_prefactor(csi, T: int, tau: int) -> float:
    csi = CSI(csi)
    if tau > T:
        raise ValueError(f"pilot length {tau} exceeds the coherence interval {T}")
    return 1.0 if csi is CSI.PERFECT else (T - tau) / T


def sum_rate(per_user, csi, T: int = 196, tau: int = 0) -> float:
    """Sum of per-user rates with the pilot-overhead factor for imperfect CSI."""
    return csi_prefactor(csi, T, tau) * float(np.sum(per_user))


def noise_inflation(profile: FadingProfile, scheme: PilotScheme) -> float:
    """``1 + sum_i p_u beta_i / ((1 + p_p beta_i)(K_i + 1))``: noise plus estimation error."""
    p_u, p_p = scheme.p_u, scheme.p_p
    b, K = profile.beta, profile.K
    return 1.0 + float(np.sum(p_u * b / ((1.0 + p_p * b) * (K + 1.0))))


def gram(A: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(A, -1, -2)) @ A


def gram_inverse_diag(Gm: np.ndarray, cond_limit: float = GRAM_COND_LIMIT):
    """Diagonal of ``Gm^{-1}`` for a (batch of) Hermitian PD matrices.

    Returns ``(diag, ok)``; entries with condition number above
    ``cond_limit`` are flagged in ``ok`` and their diagonal is NaN.
    """
    Gm = 0.5 * (Gm + np.conj(np.swapaxes(Gm, -1, -2)))
    ev = np.linalg.eigvalsh(Gm)
    lo, hi = ev[..., 0], ev[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = (lo > 0) & (hi / np.where(lo > 0, lo, 1.0) < cond_limit)
    n = Gm.shape[-1]
    safe = np.where(ok[..., None, None], Gm, np.eye(n))
    L = np.linalg.cholesky(safe)
    Linv = np.linalg.inv(L)
    # A = L L^H  =>  [A^{-1}]_nn = sum_k |[L^{-1}]_kn|^2
    diag = np.sum(np.abs(Linv) ** 2, axis=-2)
    diag = np.where(ok[..., None], diag, np.nan)
    return diag, ok


def mrc_sinr(G: np.ndarray, p_u: float, noise: float = 1.0) -> np.ndarray:
    """MRC SINR of every user; ``noise`` scales the ``||g_n||^2`` term."""
    Gm = gram(G)
    norm2 = np.real(np.diagonal(Gm, axis1=-2, axis2=-1))
    off = 1.0 - np.eye(Gm.shape[-1])
    cross = np.sum(np.abs(Gm) ** 2 * off, axis=-1)
    return p_u * norm2**2 / (p_u * cross + noise * norm2)


def zf_sinr(G: np.ndarray, p_u: float, noise: float = 1.0, cond_limit: float = GRAM_COND_LIMIT):
    """ZF SINR ``p_u / (noise [(G^H G)^{-1}]_nn)``; NaN where the Gram is singular."""
    diag, ok = gram_inverse_diag(gram(G), cond_limit)
    return p_u / (noise * diag), ok


def _single(G, p_u, noise, n, kind):
    kind = ReceiverKind(kind)
    if kind is ReceiverKind.MRC:
        return float(mrc_sinr(G, p_u, noise)[n])
    M, N = G.shape
    if M < N + 1:
        raise ValueError(f"ZF needs M >= N + 1 (M={M}, N={N})")
    s, ok = zf_sinr(G, p_u, noise)
    if not ok:
        raise SingularGram("Gram matrix condition number exceeds 1e12")
    return float(s[n])


def sinr_perfect(G: np.ndarray, n: int, p_u: float, kind) -> float:
    return _single(np.asarray(G), p_u, 1.0, n, kind)


def sinr_imperfect(est: EstimateDraw, profile: FadingProfile, scheme: PilotScheme, n: int, kind) -> float:
    return _single(np.asarray(est.G_hat), scheme.p_u, noise_inflation(profile, scheme), n, kind)


def sinr_explicit(A: np.ndarray, G: np.ndarray, n: int, p_u: float, error_power: float = 0.0) -> float:
    """SINR of user n for an explicit receiver matrix A.

    ``error_power`` is ``sum_i p_u * error_var_i``; zero gives the
    perfect-CSI expression.  Used only to cross-check the Gram-based paths.
    """
    a = A[:, n]
    num = p_u * abs(np.vdot(a, G[:, n])) ** 2
    interf = sum(abs(np.vdot(a, G[:, i])) ** 2 for i in range(G.shape[1]) if i != n)
    a2 = np.vdot(a, a).real
    return float(num / (p_u * interf + error_power * a2 + a2))


def _combos(receivers, csis):
    return [(ReceiverKind(r), CSI(c)) for r in receivers for c in csis]


def _run_block(args):
    scenario, scheme, master_seed, key, block, count, combos = args
    rng = substream(master_seed, *key, block)
    geometry, profile = scenario.geometry, scenario.profile
    draw = draw_fast_fading(geometry, profile, rng, batch=count)
    channels = {CSI.PERFECT: (draw.G, 1.0)}
    if any(c is CSI.IMPERFECT for _, c in combos):
        est = mmse_estimate(draw, profile, scheme, rng)
        channels[CSI.IMPERFECT] = (est.G_hat, noise_inflation(profile, scheme))
    out = {}
    for kind, csi in combos:
        G, noise = channels[csi]
        if kind is ReceiverKind.MRC:
            s = mrc_sinr(G, scheme.p_u, noise)
        else:
            s, _ = zf_sinr(G, scheme.p_u, noise)
        out[(kind, csi)] = np.log2(1.0 + s)
    return out


def simulate(
    scenario: Scenario,
    scheme: PilotScheme,
    plan: TrialPlan,
    receivers: Iterable = (ReceiverKind.MRC, ReceiverKind.ZF),
    csis: Iterable = (CSI.PERFECT, CSI.IMPERFECT),
    T: int = 196,
    key: Sequence[int] = (),
    check_discards: bool = True,
    executor=None,
) -> dict:
    """Monte Carlo rates for several receiver/CSI combinations on shared draws.

    All combinations see the same fast-fading (and pilot-noise) samples.
    Blocks run on ``executor`` when given, else on a private process pool
    when ``plan.workers > 1``.  Returns ``{(ReceiverKind, CSI): RateEstimate}``.
    """
    combos = _combos(receivers, csis)
    M, N = scenario.M, scenario.N
    if any(k is ReceiverKind.ZF for k, _ in combos) and M < N + 1:
        raise ValueError(f"ZF needs M >= N + 1 (M={M}, N={N})")
    if any(c is CSI.IMPERFECT for _, c in combos):
        scheme.check_users(N)
    key = (scenario.scenario_id, *key)
    nblocks = -(-plan.trials // BLOCK_TRIALS)
    jobs = [
        (scenario, scheme, plan.master_seed, key, b, min(BLOCK_TRIALS, plan.trials - b * BLOCK_TRIALS), combos)
        for b in range(nblocks)
    ]
    if executor is not None and nblocks > 1:
        blocks = list(executor.map(_run_block, jobs))
    elif plan.workers > 1 and nblocks > 1:
        with ProcessPoolExecutor(max_workers=min(plan.workers, nblocks)) as pool:
            blocks = list(pool.map(_run_block, jobs))
    else:
        blocks = [_run_block(j) for j in jobs]

    results = {}
    for combo in combos:
        vals = np.concatenate([blk[combo] for blk in blocks], axis=0)
        results[combo] = _reduce(vals, combo[1], T, scheme.tau, plan.trials, check_discards)
    return results


def _reduce(vals: np.ndarray, csi: CSI, T: int, tau: int, trials: int, check_discards: bool) -> RateEstimate:
    good = np.all(np.isfinite(vals), axis=1)
    discarded = int(trials - np.count_nonzero(good))
    if check_discards and discarded > MAX_DISCARD_FRACTION * trials:
        raise TooManyDiscards(f"{discarded} of {trials} trials had a singular Gram matrix")
    kept = vals[good]
    count = kept.shape[0]
    if count < 2:
        raise TooManyDiscards("fewer than two usable trials")
    per_user = kept.mean(axis=0)
    stderr = kept.std(axis=0, ddof=1) / np.sqrt(count)
    pref = csi_prefactor(csi, T, tau)
    totals = kept.sum(axis=1)
    return RateEstimate(
        per_user=per_user,
        sum_rate=pref * float(per_user.sum()),
        stderr=stderr,
        trials=trials,
        discarded=discarded,
        sum_stderr=pref * float(totals.std(ddof=1) / np.sqrt(count)),
    )


def estimate_rate(
    scenario: Scenario,
    scheme: PilotScheme,
    kind,
    csi,
    plan: TrialPlan,
    T: int = 196,
    key: Sequence[int] = (),
) -> RateEstimate:
    """Ergodic per-user and sum rate of one receiver under one CSI model."""
    return simulate(scenario, scheme, plan, [kind], [csi], T=T, key=key)[(ReceiverKind(kind), CSI(csi))]
