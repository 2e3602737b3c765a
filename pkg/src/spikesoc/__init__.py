"""Functional and timing simulator of an event-driven smart vision sensor
SoC: sensor event pre-processing, star-routed spiking convolution cores
with integrate-and-fire dynamics, a classification readout, and a
calibrated latency/throughput model."""

from .config import (
    ChipProfile,
    ConfigError,
    CoreProfile,
    Destination,
    LayerConfig,
    NetworkConfig,
    PreprocConfig,
    ReadoutConfig,
    compute_output_dims,
    default_profile,
    load_network,
    network_from_topology,
    parse_network_description,
    serialize_network,
)
from .convcore import CoreState
from .engine import SimResult, SimTrace, TickSchedule, run
from .events import FeatureEvent, PixelEvent
from .events_io import read_events, write_events
from .kernels import COMPILED_AVAILABLE
from .readout import ReadoutCore, ReadoutOutput
from .router import RouteTable, build_route_table, check_feedforward, route
from .timing import TimingModel, account_throughput, estimate_latency
from .validate import ValidationReport, validate_network

__version__ = "0.1.0"

__all__ = [
    "ChipProfile", "COMPILED_AVAILABLE", "ConfigError", "CoreProfile",
    "CoreState", "Destination", "FeatureEvent", "LayerConfig",
    "NetworkConfig", "PixelEvent", "PreprocConfig", "ReadoutConfig",
    "ReadoutCore", "ReadoutOutput", "RouteTable", "SimResult", "SimTrace",
    "TickSchedule", "TimingModel", "ValidationReport", "account_throughput",
    "build_route_table", "check_feedforward", "compute_output_dims",
    "default_profile", "estimate_latency", "load_network",
    "network_from_topology", "parse_network_description", "read_events",
    "route", "run", "serialize_network", "validate_network", "write_events",
]
