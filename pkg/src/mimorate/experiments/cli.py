"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 validation failure,
4 numerical guard (singular Gram/Sigma, too many discarded trials).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .. import analytic
from ..channel import FadingProfile, Scenario, SystemGeometry, db_to_linear
from ..errors import NumericalGuardError
from ..estimation import PilotScheme
from ..rates import CSI, ReceiverKind, TrialPlan, simulate
from ..streams import substream
from .config import ConfigError, ExperimentConfig, load_config, with_overrides
from .output import emit_csv, emit_plot_script
from .sweep import run_sweep, scenario_drop
from .validate import MOMENT_BETA, moment_zscores, sample_moments, validate

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3, 4


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig().validate()
    return with_overrides(cfg, seed=args.seed, trials=args.trials, workers=args.workers, redrop=args.redrop_per_point)


def _common(p, redrop=True):
    p.add_argument("--config", type=Path, help="YAML experiment configuration")
    p.add_argument("--seed", type=int, help="master seed for the Monte Carlo substreams")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    p.add_argument("--workers", type=int, help="worker processes")
    if redrop:
        p.add_argument("--redrop-per-point", action="store_true", help="draw a fresh user drop at every grid point")


def cmd_single(args) -> int:
    cfg = _load(args)
    N = cfg.scenario.N
    M = args.M if args.M is not None else cfg.M_values[0]
    K_dB = args.K_dB if args.K_dB is not None else cfg.K_values_dB[0]
    p_u_dB = args.p_u_dB if args.p_u_dB is not None else cfg.power_db(M)
    tau = args.tau if args.tau is not None else cfg.tau
    drop = scenario_drop(cfg, 0)
    profile = FadingProfile(K=np.full(N, float(db_to_linear(K_dB))), beta=drop.beta)
    scenario = Scenario(SystemGeometry(M=M, N=N, theta=drop.theta), profile)
    p_u = 10.0 ** (p_u_dB / 10.0)
    scheme = PilotScheme(tau=tau, p_u=p_u)
    plan = TrialPlan(trials=cfg.mc.trials, master_seed=cfg.mc.master_seed, workers=cfg.mc.workers)
    kind, csi = ReceiverKind(args.receiver), CSI(args.csi)
    if kind is ReceiverKind.ZF and M <= N:
        raise ConfigError(f"ZF needs M > N (M={M}, N={N})")
    est = simulate(scenario, scheme, plan, [kind], [csi], T=cfg.sweep.T)[(kind, csi)]
    approx = analytic.approx_rate(kind, csi, M, profile, drop.theta, p_u, tau)
    print(f"# M={M} N={N} K_dB={K_dB:g} p_u_dB={p_u_dB:g} tau={tau} receiver={kind.value} csi={csi.value}")
    print("user,beta,theta,rate_sim,stderr,rate_approx")
    for n in range(N):
        print(f"{n},{drop.beta[n]:.6g},{drop.theta[n]:.6g},{est.per_user[n]:.6g},{est.stderr[n]:.3g},{approx[n]:.6g}")
    pref = est.sum_rate / est.per_user.sum() if est.per_user.sum() else 1.0
    print(f"sum_rate_sim={est.sum_rate:.6g} stderr={est.sum_stderr:.3g} sum_rate_approx={pref * approx.sum():.6g}")
    print(f"trials={est.trials} discarded={est.discarded}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.config:
        raise ConfigError("sweep needs --config")
    cfg = _load(args)
    rows = run_sweep(cfg)
    out = Path(args.out or Path(args.config).with_suffix(".csv").name)
    emit_csv(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    if args.plot_script:
        script = out.with_name(out.stem + "_plot.py")
        emit_plot_script(rows, script, out)
        print(f"wrote plot script {script}")
    return EXIT_OK


def cmd_moments(args) -> int:
    theta = np.asarray(args.theta, dtype=float)
    N = theta.size
    K = np.full(N, float(args.K))
    trials = args.trials or 200_000
    rng = substream(args.seed or 0, 99)
    if args.p_p is None:
        profile = FadingProfile(K=K, beta=np.ones(N))
        closed = analytic.lemma2_moments(args.M, profile, theta)
        est = sample_moments(args.M, profile, theta, trials, rng)
        title = "columns of H"
    else:
        beta = np.resize(np.asarray(MOMENT_BETA), N)
        profile = FadingProfile(K=K, beta=beta)
        closed = analytic.lemma4_moments(args.M, profile, theta, args.p_p)
        est = sample_moments(args.M, profile, theta, trials, rng, p_p=args.p_p)
        title = f"columns of the MMSE estimate (p_p={args.p_p:g}, beta={beta.tolist()})"
    print(f"# {title}; M={args.M} K={args.K:g} theta={theta.tolist()} trials={trials}")
    print("moment,n,i,closed_form,monte_carlo,stderr")
    for n in range(N):
        print(f"norm2,{n},{n},{closed.norm2[n]:.6g},{est.norm2[n]:.6g},{est.norm2_se[n]:.3g}")
        print(f"norm4,{n},{n},{closed.norm4[n]:.6g},{est.norm4[n]:.6g},{est.norm4_se[n]:.3g}")
    for n in range(N):
        for i in range(N):
            if i != n:
                print(f"cross2,{n},{i},{closed.cross2[n, i]:.6g},{est.cross2[n, i]:.6g},{est.cross2_se[n, i]:.3g}")
    z = moment_zscores(closed, est)
    print("max |z|: " + ", ".join(f"{k}={v:.3g}" for k, v in z.items()))
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validate(seed=args.seed or 0, trials=args.trials)
    print(report.format())
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_plan(args) -> int:
    E_u = 10.0 ** (args.E_u_dB / 10.0)
    law = analytic.ScalingLaw(alpha=args.alpha, E_u=E_u)
    K = float(db_to_linear(args.K_dB))
    csi = CSI(args.csi)
    print(f"# E_u_dB={args.E_u_dB:g} alpha={args.alpha:g} beta={args.beta:g} K_dB={args.K_dB:g} tau={args.tau} csi={csi.value}")
    print("M,p_u_dB,rate_det_equiv")
    for M in args.M:
        r = analytic.det_equiv_rate(law, M, args.beta, K, args.tau, csi)
        print(f"{M},{float(law.power_db(M)):.6g},{r:.6g}")
    print(f"limit={analytic.scaled_power_limit(K, E_u, args.beta, args.tau, csi):.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimorate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("single", help="one operating point: per-user and sum rates")
    _common(p, redrop=False)
    p.add_argument("--M", type=int)
    p.add_argument("--K-dB", type=float, help="Ricean K in dB; write --K-dB=-inf for Rayleigh")
    p.add_argument("--p-u-dB", type=float)
    p.add_argument("--tau", type=int)
    p.add_argument("--receiver", choices=[k.value for k in ReceiverKind], default="mrc")
    p.add_argument("--csi", choices=[c.value for c in CSI], default="perfect")
    p.set_defaults(func=cmd_single, redrop_per_point=None)

    p = sub.add_parser("sweep", help="run a configured sweep and write CSV")
    _common(p)
    p.add_argument("--out", type=Path, help="CSV output path")
    p.add_argument("--plot-script", action="store_true", help="also write a matplotlib script next to the CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("moments", help="closed-form column moments against Monte Carlo")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--M", type=int, default=32)
    p.add_argument("--K", type=float, default=1.0, help="linear K-factor shared by all users")
    p.add_argument("--p-p", type=float, help="pilot power; omit for the unestimated channel")
    p.add_argument("--theta", type=float, nargs="+", default=[0.4, -0.1])
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("validate", help="run the built-in validation suite")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plan", help="deterministic equivalents along a power-scaling law")
    p.add_argument("--E-u-dB", type=float, default=20.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--K-dB", type=float, default=float("-inf"))
    p.add_argument("--tau", type=int, default=10)
    p.add_argument("--csi", choices=[c.value for c in CSI], default="perfect")
    p.add_argument("--M", type=int, nargs="+", default=[64, 128, 256, 512, 1024])
    p.set_defaults(func=cmd_plan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
