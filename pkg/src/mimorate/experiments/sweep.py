"""Sweep engine: Monte Carlo, closed-form approximation and deterministic
equivalent side by side for every grid point."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import analytic
from ..channel import FadingProfile, Scenario, SystemGeometry, db_to_linear, drop_users
from ..estimation import PilotScheme
from ..rates import CSI, ReceiverKind, TrialPlan, csi_prefactor, simulate
from ..streams import substream
from .config import ExperimentConfig

CSV_FIELDS = (
    "scenario_id",
    "M",
    "N",
    "K_dB",
    "p_u_dB",
    "alpha",
    "receiver",
    "csi",
    "rate_sim",
    "rate_approx",
    "rate_det_equiv",
    "stderr",
    "trials",
    "discarded",
    "seed",
)


@dataclass
class SweepRow:
    scenario_id: int
    M: int
    N: int
    K_dB: float
    p_u_dB: float
    alpha: float
    receiver: str
    csi: str
    rate_sim: float
    rate_approx: float
    rate_det_equiv: float
    stderr: float
    trials: int
    discarded: int
    seed: int

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f) for f in CSV_FIELDS)


def scenario_drop(cfg: ExperimentConfig, scenario_id: int = 0):
    sc = cfg.scenario
    rng = substream(sc.drop_seed, scenario_id)
    return drop_users(sc.cell_radius_m, sc.r_h_m, sc.v, sc.sigma_dB, sc.N, rng)


def run_sweep(cfg: ExperimentConfig, executor=None) -> list[SweepRow]:
    """Evaluate every (grid point, K, receiver, CSI) combination.

    Rows come back ordered by grid index, then K, receiver and CSI model,
    whatever order the work finished in.
    """
    cfg = cfg.validate()
    sw, mc = cfg.sweep, cfg.mc
    N, tau, T = cfg.scenario.N, cfg.tau, sw.T
    receivers = [ReceiverKind(r) for r in sw.receivers]
    csis = [CSI(c) for c in sw.csi]
    plan = TrialPlan(trials=mc.trials, master_seed=mc.master_seed, workers=mc.workers)
    alpha = sw.alpha if sw.kind == "alpha_sweep" else 0.0

    own_pool = executor is None and mc.workers > 1
    if own_pool:
        executor = ProcessPoolExecutor(max_workers=mc.workers)
    try:
        rows = []
        fixed = scenario_drop(cfg, 0)
        points = [(M, K_dB) for M in cfg.M_values for K_dB in cfg.K_values_dB]
        for idx, (M, K_dB) in enumerate(points):
            grid_idx = idx // len(cfg.K_values_dB) if sw.kind != "k_sweep" else idx
            sid = grid_idx + 1 if cfg.redrop_per_point else 0
            drop = scenario_drop(cfg, sid) if cfg.redrop_per_point else fixed
            K = float(db_to_linear(K_dB))
            geometry = SystemGeometry(M=M, N=N, theta=drop.theta)
            profile = FadingProfile(K=np.full(N, K), beta=drop.beta)
            scenario = Scenario(geometry, profile, scenario_id=sid)
            p_u_dB = cfg.power_db(M)
            p_u = 10.0 ** (p_u_dB / 10.0)
            scheme = PilotScheme(tau=tau, p_u=p_u)
            sims = simulate(scenario, scheme, plan, receivers, csis, T=T, key=(idx,), executor=executor)
            E_u = p_u * M**alpha
            law = analytic.ScalingLaw(alpha=alpha, E_u=E_u)
            for kind in receivers:
                for csi in csis:
                    est = sims[(kind, csi)]
                    pref = csi_prefactor(csi, T, tau)
                    approx = analytic.approx_rate(kind, csi, M, profile, drop.theta, p_u, tau)
                    det = analytic.det_equiv_rate(law, M, drop.beta, profile.K, tau, csi, kind)
                    rows.append(
                        SweepRow(
                            scenario_id=sid,
                            M=int(M),
                            N=N,
                            K_dB=float(K_dB),
                            p_u_dB=float(p_u_dB),
                            alpha=float(alpha),
                            receiver=kind.value,
                            csi=csi.value,
                            rate_sim=est.sum_rate,
                            rate_approx=pref * float(np.sum(approx)),
                            rate_det_equiv=pref * float(np.sum(det)),
                            stderr=est.sum_stderr,
                            trials=est.trials,
                            discarded=est.discarded,
                            seed=mc.master_seed,
                        )
                    )
        return rows
    finally:
        if own_pool:
            executor.shutdown()


def k_db_label(K_dB: float) -> str:
    """K in dB exactly as it appears in the CSV."""
    return format(float(K_dB), ".9g")
