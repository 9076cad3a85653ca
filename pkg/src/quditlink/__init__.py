"""Simulator for time-bin-qudit entanglement distribution between spin registers.

A single photonic qudit of dimension 2^m distributes m Bell pairs between two
m-qubit registers via cavity-reflection gates, binary-routed switches and a
generalized X-basis heralding measurement.  The package provides a Monte
Carlo trajectory engine with full hardware noise models, an exact small-m
oracle, two comparative qubit baselines, and a campaign CLI.
"""

from .cavity import GateParams, ReflectionPair, ideal_reflections, reflection_coefficients
from .channels import ChannelParams, RoundsRecord, WaitTimes, assign_wait_times, memory_channel
from .kernel import BACKEND as KERNEL_BACKEND
from .optics import DetectionParams, MeasurementOutcome, SwitchParams
from .oracle import OracleResult, exact_run, expected_max_geometric
from .protocol import (
    EstimationFailureError,
    PairMetrics,
    ProtocolConfig,
    RateMetrics,
    correction_phases,
    default_gate,
    default_source,
    estimate_metrics,
    ideal_config,
    run_qubit_strategy,
    run_qudit_attempt,
)
from .qstate import DensityOperator, HilbertLayout, PureState, fidelity_to_bell, partial_trace
from .source import QuditAmplitudes, SourceParams, precompensated_amplitudes

__version__ = "1.0.0"

__all__ = [
    "ChannelParams",
    "DensityOperator",
    "DetectionParams",
    "EstimationFailureError",
    "GateParams",
    "HilbertLayout",
    "KERNEL_BACKEND",
    "MeasurementOutcome",
    "OracleResult",
    "PairMetrics",
    "ProtocolConfig",
    "PureState",
    "QuditAmplitudes",
    "RateMetrics",
    "ReflectionPair",
    "RoundsRecord",
    "SourceParams",
    "SwitchParams",
    "WaitTimes",
    "assign_wait_times",
    "correction_phases",
    "default_gate",
    "default_source",
    "estimate_metrics",
    "exact_run",
    "expected_max_geometric",
    "fidelity_to_bell",
    "ideal_config",
    "ideal_reflections",
    "memory_channel",
    "partial_trace",
    "precompensated_amplitudes",
    "reflection_coefficients",
    "run_qubit_strategy",
    "run_qudit_attempt",
]
