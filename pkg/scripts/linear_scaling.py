"""Sum rate against M with p_u = E_u / M; perfect-CSI curves meet at sum log2(1 + E_u beta)."""

import numpy as np
from _runner import run

from mimorate.experiments.sweep import scenario_drop


def limits(cfg, rows):
    drop = scenario_drop(cfg)
    E_u = 10 ** (cfg.sweep.E_u_dB / 10)
    print(f"perfect-CSI limit sum log2(1 + E_u beta) = {np.sum(np.log2(1 + E_u * drop.beta)):.4f}")


if __name__ == "__main__":
    run("linear_scaling", after=limits)
