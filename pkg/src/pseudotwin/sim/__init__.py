"""Discrete-event scenario simulation and the headline experiments."""

from .config import (  # noqa: F401
    ASYNCHRONOUS,
    EQUAL,
    ON_DEMAND,
    SYNCHRONOUS,
    AttackerSpec,
    ConfigError,
    ScenarioConfig,
    VmuSpec,
    validate,
)
from .engine import SimulationEngine, run  # noqa: F401
from .experiments import (  # noqa: F401
    DEFAULT_BETA_GRID,
    FIG5A_FREQUENCIES,
    FIG5B_GROUP_FREQUENCIES,
    GroupUtilitySweep,
    SchemeComparison,
    experiment_fig5a,
    experiment_fig5b,
    fig5b_vmus,
)
from .report import AttackerResult, SimReport, VmuResult, report_from_dict  # noqa: F401
