"""Sum rate against the Ricean K-factor at M = 100, plus the K -> infinity values."""

import numpy as np
from _runner import run

from mimorate import analytic
from mimorate.experiments.sweep import scenario_drop


def limits(cfg, rows):
    drop = scenario_drop(cfg)
    M, N = cfg.sweep.M, cfg.scenario.N
    p_u = 10 ** (cfg.sweep.p_u_dB / 10)
    pref = (cfg.sweep.T - cfg.tau) / cfg.sweep.T
    for kind in ("mrc", "zf"):
        lim = float(np.sum(analytic.k_infinity_approx(M, N, drop.beta, drop.theta, p_u, kind)))
        print(f"K -> inf, {kind.upper()}: perfect CSI {lim:.4f}, imperfect CSI {pref * lim:.4f}")


if __name__ == "__main__":
    run("k_factor", x="K_dB", after=limits)
