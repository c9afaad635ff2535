"""Bounded Boolean functional synthesis with gated continuous logic networks."""

from .cegis import DEFAULT_SCHEDULE, ScheduleEntry, SynthesisReport, exhaustive_verify, run_schedule, verify
from .extract import SkolemVector, fextract, metrics, simplify
from .formula import BfsSpec, parse_formula, parse_spec, print_formula
from .gcln import Arch, TrainConfig

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_SCHEDULE", "ScheduleEntry", "SynthesisReport", "exhaustive_verify", "run_schedule", "verify",
    "SkolemVector", "fextract", "metrics", "simplify", "BfsSpec", "parse_formula", "parse_spec",
    "print_formula", "Arch", "TrainConfig",
]
