"""Wedge-and-mirrors interferometer lab.

Two converging Gaussian packets cross at an empty region J and exit as two
outgoing channels.  This package computes, for that arrangement:

* pilot-wave (guidance-equation) trajectory ensembles, single-particle and
  electron + detector-pointer, with exit-channel and trigger statistics;
* consistent-histories chain weights, decoherence functionals, consistency
  checks, and conditional probabilities on the matching labeled bases;
* a bridge validating the continuum packet dynamics against the ideal
  discrete unitaries, interval by interval.

The two analyses disagree about what happens at J; the point of the package
is to make both sides of that disagreement computable.
"""

from .bohm import (
    Channel,
    EnsembleResult,
    Trajectory,
    classify_exit,
    integrate_trajectory,
    run_ensemble,
    sample_initial,
    velocity,
)
from .config import ScenarioConfig, from_dict, load
from .detector import (
    BranchState,
    DetectorRunRecord,
    PathLabel,
    PointerPacket,
    apply_coupling,
    nonlocal_influence_report,
    run_detector_scenario,
    velocity_config,
)
from .errors import (
    BasisNotOrthogonal,
    BranchesNotSeparated,
    ConfigError,
    InconsistentFamily,
    NodeProximity,
    QwedgeError,
    StepUnderflow,
    ZeroConditioningEvent,
)
from .histories import (
    History,
    HistoryFamily,
    LabeledBasis,
    TimeGrid,
    chain_vector,
    check_consistency,
    conditional,
    decoherence_functional,
    enumerate_and_assign,
    weight,
)
from .packets import GaussianPacket, Superposition, evaluate, evolve_packet, gradient, overlap

__version__ = "0.1.0"
