"""Recurrent-event simulation: scenarios, engines and statistical checks."""

from ._core import (
    ConfigError,
    DomainError,
    Error,
    EventHistory,
    ExplosionError,
    IoError,
    MissingDataError,
    Scenario,
    StepSizeError,
    UnsupportedCheckError,
    ValidationReport,
    dataset_csv,
    kolmogorov_survival,
    ks_test,
    ks_two_sample,
    load_scenario,
    parse_scenario,
    render_summary,
    simulate,
    taxonomy,
    validate,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "EventHistory",
    "ExplosionError",
    "IoError",
    "MissingDataError",
    "Scenario",
    "StepSizeError",
    "UnsupportedCheckError",
    "ValidationReport",
    "dataset_csv",
    "kolmogorov_survival",
    "ks_test",
    "ks_two_sample",
    "load_scenario",
    "parse_scenario",
    "render_summary",
    "simulate",
    "taxonomy",
    "validate",
]
