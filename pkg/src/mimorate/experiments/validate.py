"""Built-in validation suite: Monte Carlo oracles against the closed forms.

Every stochastic check scales its threshold with the measured standard
error, so smaller trial counts widen the tolerance instead of failing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import analytic
from ..channel import FadingProfile, SystemGeometry, draw_fast_fading
from ..estimation import PilotScheme, error_variance, eta, mmse_estimate
from ..rates import CSI, ReceiverKind, gram, gram_inverse_diag
from ..streams import substream

Z_LIMIT = 4.0
DEFAULT_TRIALS = 20_000
_BLOCK = 5_000

MOMENT_M = (8, 32)
MOMENT_K = (0.0, 1.0, 10.0)
MOMENT_PP = (1.0, 10.0)
# one well-separated pair and one close pair with a large |phi|
MOMENT_THETAS = ((0.4, -0.1), (0.1, 0.05))
MOMENT_BETA = (1.0, 0.3)


@dataclass
class CheckResult:
    name: str
    passed: bool
    deviation: float
    limit: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{tag}  {self.name}: deviation {self.deviation:.4g} (limit {self.limit:.4g}){extra}"


@dataclass
class ValidationReport:
    seed: int
    trials: int
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def format(self) -> str:
        lines = [c.line() for c in self.checks]
        n_fail = len(self.failures())
        lines.append(f"{len(self.checks) - n_fail}/{len(self.checks)} checks passed (seed {self.seed}, trials {self.trials})")
        return "\n".join(lines)


@dataclass
class MomentEstimate:
    """Sample means and standard errors of the same quantities as ``MomentSet``."""

    norm2: np.ndarray
    norm4: np.ndarray
    cross2: np.ndarray
    norm2_se: np.ndarray
    norm4_se: np.ndarray
    cross2_se: np.ndarray


def sample_moments(M, profile, theta, trials, rng, p_p=None, block=_BLOCK) -> MomentEstimate:
    """Monte Carlo moments of the columns of ``H`` (``p_p=None``) or of the estimate ``G_hat``."""
    geometry = SystemGeometry(M=M, N=profile.N, theta=np.asarray(theta, dtype=float))
    scheme = None if p_p is None else PilotScheme(tau=profile.N, p_u=1.0, p_p_override=p_p)
    N = profile.N
    s1 = np.zeros((3, N, N))
    s2 = np.zeros((3, N, N))
    done = 0
    while done < trials:
        b = min(block, trials - done)
        draw = draw_fast_fading(geometry, profile, rng, batch=b)
        X = draw.H if scheme is None else mmse_estimate(draw, profile, scheme, rng).G_hat
        Gm = gram(X)
        c2 = np.abs(Gm) ** 2
        n2 = np.real(np.diagonal(Gm, axis1=-2, axis2=-1))
        stats = (np.broadcast_to(n2[:, :, None], c2.shape), np.broadcast_to((n2**2)[:, :, None], c2.shape), c2)
        for k, x in enumerate(stats):
            s1[k] += x.sum(axis=0)
            s2[k] += (x * x).sum(axis=0)
        done += b
    mean = s1 / trials
    var = np.maximum(s2 / trials - mean**2, 0.0) * trials / (trials - 1)
    se = np.sqrt(var / trials)
    return MomentEstimate(mean[0, :, 0], mean[1, :, 0], mean[2], se[0, :, 0], se[1, :, 0], se[2])


def moment_zscores(closed: analytic.MomentSet, est: MomentEstimate) -> dict:
    """Largest |z| for each moment family; the cross family uses off-diagonal pairs."""
    N = closed.norm2.shape[0]
    off = ~np.eye(N, dtype=bool)

    def z(c, m, s):
        c, m, s = np.asarray(c), np.asarray(m), np.asarray(s)
        return float(np.max(np.abs(m - c) / np.where(s > 0, s, np.inf))) if c.size else 0.0

    return {
        "norm2": z(closed.norm2, est.norm2, est.norm2_se),
        "norm4": z(closed.norm4, est.norm4, est.norm4_se),
        "cross2": z(closed.cross2[off], est.cross2[off], est.cross2_se[off]),
    }


def _profile(K, beta=(1.0, 1.0)):
    beta = np.asarray(beta, dtype=float)
    return FadingProfile(K=np.full(beta.shape, float(K)), beta=beta)


def check_moments(seed, trials, phi_offset, Ms=MOMENT_M, Ks=MOMENT_K, pps=MOMENT_PP, thetas=MOMENT_THETAS):
    out = []
    for M in Ms:
        for t_idx, theta in enumerate(thetas):
            for K in Ks:
                rng = substream(seed, 1, M, t_idx, int(K * 1000))
                prof = _profile(K)
                z = moment_zscores(analytic.lemma2_moments(M, prof, theta, phi_offset), sample_moments(M, prof, theta, trials, rng))
                for fam, val in z.items():
                    out.append(CheckResult(f"channel {fam} M={M} K={K:g} theta={theta}", val <= Z_LIMIT, val, Z_LIMIT, "max |z|"))
                prof4 = _profile(K, MOMENT_BETA)
                for p_p in pps:
                    rng = substream(seed, 2, M, t_idx, int(K * 1000), int(p_p * 1000))
                    closed = analytic.lemma4_moments(M, prof4, theta, p_p, phi_offset)
                    z = moment_zscores(closed, sample_moments(M, prof4, theta, trials, rng, p_p=p_p))
                    for fam, val in z.items():
                        out.append(
                            CheckResult(
                                f"estimate {fam} M={M} K={K:g} p_p={p_p:g} theta={theta}", val <= Z_LIMIT, val, Z_LIMIT, "max |z|"
                            )
                        )
    return out


def _decreasing(name, values, detail):
    vals = np.asarray(values)
    worst = float(np.max(np.diff(vals) / vals[:-1]))
    return CheckResult(name, bool(np.all(np.diff(vals) < 0)), worst, 0.0, detail + ": " + ", ".join(f"{v:.4g}" for v in vals))


def _check_gram_concentration(seed, draws=100):
    errs = []
    prof = FadingProfile(K=np.array([1.0, 3.0, 0.0]), beta=np.ones(3))
    theta = np.array([0.4, -0.1, 1.0])
    for M in (64, 128, 256):
        rng = substream(seed, 3, M)
        H = draw_fast_fading(SystemGeometry(M=M, N=3, theta=theta), prof, rng, batch=draws).H
        dev = np.abs(gram(H) / M - np.eye(3)).max(axis=(-2, -1))
        errs.append(dev.mean())
    return _decreasing("gram concentration (1/M) H^H H -> I as M doubles", errs, "mean max-entry error at M=64,128,256")


def _check_estimate_concentration(seed, draws=100):
    errs = []
    prof = FadingProfile(K=np.array([1.0, 0.0]), beta=np.array([1.0, 0.3]))
    theta = np.array([0.4, -0.1])
    p_p = 10.0
    scheme = PilotScheme(tau=2, p_u=1.0, p_p_override=p_p)
    target = prof.beta * (prof.K + eta(prof.beta, p_p)) / (prof.K + 1)
    for M in (64, 128, 256):
        rng = substream(seed, 4, M)
        draw = draw_fast_fading(SystemGeometry(M=M, N=2, theta=theta), prof, rng, batch=draws)
        Gh = mmse_estimate(draw, prof, scheme, rng).G_hat
        n2 = np.real(np.diagonal(gram(Gh), axis1=-2, axis2=-1)) / M
        errs.append(np.abs(n2 - target).max(axis=-1).mean())
    return _decreasing("estimate concentration (1/M)||g_hat_n||^2 limit as M doubles", errs, "mean error at M=64,128,256")


def error_variance_check(beta, K, p_p, trials, rng, M=16):
    """Relative deviation of the empirical estimation-error variance and its standard error."""
    beta = np.asarray(beta, dtype=float)
    prof = FadingProfile(K=np.full(beta.shape, float(K)), beta=beta)
    theta = np.linspace(-0.5, 0.5, beta.size)
    scheme = PilotScheme(tau=beta.size, p_u=1.0, p_p_override=p_p)
    draw = draw_fast_fading(SystemGeometry(M=M, N=beta.size, theta=theta), prof, rng, batch=trials)
    err = mmse_estimate(draw, prof, scheme, rng).G_hat - draw.G
    a = np.abs(err) ** 2  # zero-mean, so E|err|^2 is the variance
    emp = a.mean(axis=(0, 1))
    se = a.std(axis=(0, 1), ddof=1) / np.sqrt(a.shape[0] * a.shape[1])
    theory = error_variance(beta, prof.K, p_p)
    return np.abs(emp - theory) / theory, se / theory


def _check_error_variance(seed, trials):
    out = []
    for K in (0.0, 3.98):
        rng = substream(seed, 5, int(K * 100))
        rel, rel_se = error_variance_check((0.1, 1.0), K, 10.0, trials, rng)
        limit = float(max(0.03, Z_LIMIT * rel_se.max()))
        out.append(CheckResult(f"estimation error variance K={K:g} p_p=10", bool(rel.max() <= limit), float(rel.max()), limit, "relative"))
    return out


def _check_orthogonality(seed, trials):
    rng = substream(seed, 6)
    prof = FadingProfile(K=np.array([1.0, 0.0]), beta=np.array([1.0, 0.3]))
    scheme = PilotScheme(tau=2, p_u=1.0, p_p_override=3.0)
    draw = draw_fast_fading(SystemGeometry(M=8, N=2, theta=np.array([0.4, -0.1])), prof, rng, batch=trials)
    Gh = mmse_estimate(draw, prof, scheme, rng).G_hat
    prod = Gh * np.conj(Gh - draw.G)
    z = 0.0
    for part in (prod.real, prod.imag):
        m = part.mean(axis=0)
        se = part.std(axis=0, ddof=1) / np.sqrt(trials)
        z = max(z, float(np.max(np.abs(m) / se)))
    return CheckResult("estimate/error orthogonality", z <= Z_LIMIT, z, Z_LIMIT, "max |z| over entries")


def wishart_check(M, N, trials, rng):
    """z-score of the sample mean of ``[(H^H H)^{-1}]_nn`` against ``1/(M-N)``."""
    prof = FadingProfile(K=np.zeros(N), beta=np.ones(N))
    H = draw_fast_fading(SystemGeometry(M=M, N=N, theta=np.zeros(N)), prof, rng, batch=trials).H
    d, ok = gram_inverse_diag(gram(H))
    d = d[ok]
    m = d.mean(axis=0)
    se = d.std(axis=0, ddof=1) / np.sqrt(d.shape[0])
    return float(np.max(np.abs(m - 1.0 / (M - N)) / se))


def _check_wishart(seed, trials):
    z = wishart_check(16, 4, trials, substream(seed, 7))
    return CheckResult("Wishart first negative moment M=16 N=4", z <= Z_LIMIT, z, Z_LIMIT, "max |z|")


def _check_reductions():
    out = []
    rng = np.random.default_rng(12345)  # parameters only; the identities are exact
    M, N, p_u, tau = 64, 4, 10.0, 4
    beta = rng.uniform(0.05, 1.0, N)
    theta = rng.uniform(-1.2, 1.2, N)
    ray = FadingProfile(K=np.zeros(N), beta=beta)

    def ex(name, a, b, tol):
        dev = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
        out.append(CheckResult(name, dev <= tol, dev, tol))

    ex("MRC perfect at K=0 equals Rayleigh form", analytic.approx_mrc_perfect(M, ray, theta, p_u), analytic.rayleigh_mrc_perfect(M, beta, p_u), 1e-12)
    ex(
        "MRC imperfect at K=0 equals Rayleigh form",
        analytic.approx_mrc_imperfect(M, ray, theta, p_u, tau),
        analytic.rayleigh_mrc_imperfect(M, beta, p_u, tau),
        1e-12,
    )
    ric = FadingProfile(K=rng.uniform(0.5, 5.0, N), beta=beta)
    ex(
        "MRC imperfect at p_p=1e12 equals perfect",
        analytic.approx_mrc_imperfect(M, ric, theta, p_u, tau, p_p=1e12),
        analytic.approx_mrc_perfect(M, ric, theta, p_u),
        1e-6,
    )
    ex(
        "ZF imperfect at p_p=1e12 equals perfect",
        analytic.approx_zf_imperfect(M, ric, theta, p_u, tau, p_p=1e12),
        analytic.approx_zf_perfect(M, ric, theta, p_u),
        1e-6,
    )
    same = True
    for csi in CSI:
        for alpha in (0.0, 0.5, 1.0, 2.0):
            law = analytic.ScalingLaw(alpha=alpha, E_u=100.0)
            a = analytic.det_equiv_rate(law, M, beta, ric.K, tau, csi, ReceiverKind.MRC)
            b = analytic.det_equiv_rate(law, M, beta, ric.K, tau, csi, ReceiverKind.ZF)
            same &= bool(np.array_equal(a, b))
    out.append(CheckResult("deterministic equivalents MRC == ZF bit-for-bit", same, 0.0 if same else 1.0, 0.0))
    return out


def validate(seed: int = 0, trials: int | None = None, phi_offset: float = 0.0) -> ValidationReport:
    """Run every check; ``phi_offset`` corrupts phi in the closed forms (mutation testing)."""
    trials = DEFAULT_TRIALS if trials is None else int(trials)
    if trials < 10:
        raise ValueError("validation needs at least 10 trials")
    report = ValidationReport(seed=seed, trials=trials)
    report.checks += check_moments(seed, trials, phi_offset)
    report.checks.append(_check_gram_concentration(seed))
    report.checks.append(_check_estimate_concentration(seed))
    report.checks += _check_error_variance(seed, trials)
    report.checks.append(_check_orthogonality(seed, trials))
    report.checks.append(_check_wishart(seed, trials))
    report.checks += _check_reductions()
    return report
