"""Experiment configuration: three YAML sections, strict keys, dB at the boundary."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from ..channel import db_to_linear
from ..rates import CSI, ReceiverKind

SWEEP_KINDS = ("m_sweep", "alpha_sweep", "k_sweep")


class ConfigError(ValueError):
    pass


def _parse_db(x) -> float:
    if isinstance(x, str):
        try:
            return float(x.strip())
        except ValueError:
            raise ConfigError(f"cannot parse dB value {x!r}") from None
    return float(x)


@dataclass(frozen=True)
class ScenarioConfig:
    cell_radius_m: float = 1000.0
    r_h_m: float = 100.0
    v: float = 3.8
    sigma_dB: float = 8.0
    N: int = 10
    drop_seed: int = 1


@dataclass(frozen=True)
class SweepConfig:
    kind: str = "m_sweep"
    grid: tuple = (50, 100, 200)
    p_u_dB: float = 10.0
    E_u_dB: float = 20.0
    alpha: float = 0.0
    K_dB: tuple = (-math.inf,)
    M: int = 100
    tau: int | None = None
    T: int = 196
    receivers: tuple = ("mrc", "zf")
    csi: tuple = ("perfect", "imperfect")


@dataclass(frozen=True)
class MCConfig:
    trials: int = 10_000
    master_seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    mc: MCConfig = field(default_factory=MCConfig)
    redrop_per_point: bool = False

    @property
    def tau(self) -> int:
        return self.scenario.N if self.sweep.tau is None else int(self.sweep.tau)

    @property
    def K_values_dB(self) -> tuple:
        return self.sweep.grid if self.sweep.kind == "k_sweep" else self.sweep.K_dB

    @property
    def M_values(self) -> tuple:
        return (self.sweep.M,) if self.sweep.kind == "k_sweep" else tuple(int(m) for m in self.sweep.grid)

    def power_db(self, M: int) -> float:
        """Per-user transmit power in dB at array size M."""
        if self.sweep.kind == "alpha_sweep":
            return self.sweep.E_u_dB - 10.0 * self.sweep.alpha * math.log10(M)
        return self.sweep.p_u_dB

    def validate(self) -> "ExperimentConfig":
        sc, sw, mc = self.scenario, self.sweep, self.mc
        if not 0 < sc.r_h_m < sc.cell_radius_m:
            raise ConfigError("need 0 < r_h_m < cell_radius_m")
        if sc.N < 1:
            raise ConfigError("N must be positive")
        if sw.kind not in SWEEP_KINDS:
            raise ConfigError(f"sweep.kind must be one of {SWEEP_KINDS}, got {sw.kind!r}")
        grid = np.asarray(sw.grid, dtype=float)
        if grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ConfigError("sweep.grid must be nonempty and strictly increasing")
        if sw.kind != "k_sweep" and (np.any(grid < 1) or np.any(grid != np.round(grid))):
            raise ConfigError("antenna grid must hold positive integers")
        if sw.kind != "k_sweep":
            K = np.asarray(sw.K_dB, dtype=float)
            if K.size == 0 or np.any(np.diff(K) <= 0):
                raise ConfigError("sweep.K_dB must be nonempty and strictly increasing")
        if sw.alpha < 0:
            raise ConfigError("alpha must be nonnegative")
        try:
            receivers = [ReceiverKind(r) for r in sw.receivers]
            [CSI(c) for c in sw.csi]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not receivers or not sw.csi:
            raise ConfigError("need at least one receiver and one CSI model")
        if ReceiverKind.ZF in receivers and min(self.M_values) <= sc.N:
            raise ConfigError(f"ZF rows need M > N; grid reaches M={min(self.M_values)} with N={sc.N}")
        if self.tau < sc.N:
            raise ConfigError(f"pilot length tau={self.tau} is shorter than N={sc.N}")
        if self.tau > sw.T:
            raise ConfigError(f"pilot length tau={self.tau} exceeds T={sw.T}")
        if mc.trials < 100:
            raise ConfigError("mc.trials must be at least 100")
        if mc.workers < 1:
            raise ConfigError("mc.workers must be positive")
        return self

    def K_linear(self, K_dB: float) -> float:
        return float(db_to_linear(K_dB))


_SECTIONS = {"scenario": ScenarioConfig, "sweep": SweepConfig, "mc": MCConfig}
_TUPLE_KEYS = {"grid", "K_dB", "receivers", "csi"}


def _build(cls, data, section):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section [{section}] must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    kwargs = {}
    for k, v in data.items():
        if k in _TUPLE_KEYS:
            v = tuple(v) if isinstance(v, (list, tuple)) else (v,)
            if k == "K_dB" or (k == "grid" and data.get("kind") == "k_sweep"):
                v = tuple(_parse_db(x) for x in v)
        elif k.endswith("_dB"):
            v = _parse_db(v)
        kwargs[k] = v
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping with sections scenario, sweep, mc")
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    parts = {name: _build(cls, data.get(name), name) for name, cls in _SECTIONS.items()}
    return ExperimentConfig(**parts).validate()


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return config_from_dict(data)


def with_overrides(cfg: ExperimentConfig, seed=None, trials=None, workers=None, redrop=None) -> ExperimentConfig:
    mc = cfg.mc
    if seed is not None:
        mc = replace(mc, master_seed=int(seed))
    if trials is not None:
        mc = replace(mc, trials=int(trials))
    if workers is not None:
        mc = replace(mc, workers=int(workers))
    out = replace(cfg, mc=mc)
    if redrop:
        out = replace(out, redrop_per_point=True)
    return out.validate()
