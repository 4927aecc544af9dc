"""Approximation scheme for optimal power flow with on/off demands."""

import json

from ._core import (
    ORACLE_MAX_USERS,
    Case,
    FlowState,
    InputError,
    Instance,
    OracleResult,
    PtasReport,
    brute_force,
    check_assumptions,
    dump_case,
    generate_instance,
    load_case,
    objective,
    parse_case,
    rbts13,
    rotation_angle,
    solve,
    verify,
)

__all__ = [
    "ORACLE_MAX_USERS",
    "Case",
    "FlowState",
    "InputError",
    "Instance",
    "OracleResult",
    "PtasReport",
    "brute_force",
    "check_assumptions",
    "dump_case",
    "generate_instance",
    "load_case",
    "objective",
    "parse_case",
    "rbts13",
    "report_dict",
    "rotation_angle",
    "solve",
    "verify",
]


def report_dict(report, timings=False):
    """The JSON report of a solve as a dict."""
    return json.loads(report.to_json(timings))
