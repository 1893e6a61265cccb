"""Sum rate against M with p_u = E_u / sqrt(M), Rayleigh fading."""

import numpy as np
from _runner import run

from mimorate import analytic
from mimorate.experiments.sweep import scenario_drop


def limits(cfg, rows):
    drop = scenario_drop(cfg)
    E_u = 10 ** (cfg.sweep.E_u_dB / 10)
    lim = analytic.scaled_power_limit(0.0, E_u, drop.beta, cfg.tau, "imperfect")
    pref = (cfg.sweep.T - cfg.tau) / cfg.sweep.T
    print(f"imperfect-CSI limit (with overhead factor) = {pref * np.sum(lim):.4f}; convergence is slow")


if __name__ == "__main__":
    run("sqrt_scaling", after=limits)
