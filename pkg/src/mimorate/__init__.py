"""Uplink massive-MIMO rates over Ricean channels with arbitrary-rank LOS means."""

from .channel import (
    K_INF,
    ChannelDraw,
    FadingProfile,
    Scenario,
    ScenarioDrop,
    SystemGeometry,
    db_to_linear,
    draw_fast_fading,
    drop_users,
    linear_to_db,
    phi,
    steering_matrix,
)
from .estimation import EstimateDraw, PilotScheme, error_variance, eta, mmse_estimate
from .rates import (
    CSI,
    RateEstimate,
    ReceiverKind,
    SingularGram,
    TooManyDiscards,
    TrialPlan,
    estimate_rate,
    simulate,
    sinr_imperfect,
    sinr_perfect,
    sum_rate,
)
from .streams import substream

__version__ = "0.1.0"
