"""Sum rate against M at p_u = 10 dB, K in {0, 6 dB}."""

from _runner import run

if __name__ == "__main__":
    run("fixed_power")
