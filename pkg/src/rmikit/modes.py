"""Attacker-observation semantics for the modeled defense modes.

Each mode maps a (program, initial state) pair to the set of observation
traces an attacker can obtain:

    insecure   shared-memory addresses, all speculative paths live
    mi6        nothing (no shared memory at all)
    safe       the non-speculative shared-memory trace, exactly
    burst      straight-line speculation, but only inside burst regions
    burst_sta  burst if the static analyzer accepted the program,
               otherwise the program is refused and nothing is observed
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .contracts import (DEFAULT_ENUM_CAP, SEQ, SHM, SPEC, STL,
                        SelfContainmentViolation, contract_trace,
                        contract_trace_set, simulate_committed)
from .machine import DEFAULT_FUEL

MODE_KINDS = ("insecure", "mi6", "safe", "burst", "burst_sta")


class ModeError(Exception):
    pass


class ReportProgramMismatch(ModeError):
    pass


@dataclass(frozen=True)
class HwMode:
    kind: str

    def __post_init__(self):
        if self.kind not in MODE_KINDS:
            raise ValueError(f"unknown hardware mode {self.kind!r}")


INSECURE = HwMode("insecure")
MI6 = HwMode("mi6")
SAFE = HwMode("safe")
BURST = HwMode("burst")
BURST_STA = HwMode("burst_sta")

EMPTY_TRACE_SET = frozenset({()})


def _check_runtime_containment(program, state0, layout, fuel):
    """Warn if execution with the burst flag on ever leaves every static
    burst region; traces are still returned."""
    run = simulate_committed(program, state0, layout, fuel)
    for rec in run.records:
        if rec.burst_active and not any(
                on <= rec.index <= off for on, off in program.burst_regions):
            warnings.warn(
                f"instruction {rec.index} executed with burst mode on "
                f"outside every static burst region",
                SelfContainmentViolation, stacklevel=3)
            return


def sta_gate(program, report):
    """Resolve the analyzer-gated mode: burst when the report passed,
    refusal otherwise."""
    if report is None or report.program != program:
        raise ReportProgramMismatch(
            "analysis report does not correspond to this program")
    return BURST if report.verdict == "pass" else None


def hw_trace_set(program, state0, layout, mode, fuel=DEFAULT_FUEL,
                 enum_cap=DEFAULT_ENUM_CAP, sta_report=None):
    """Attacker-observable trace set of `program` from `state0` under `mode`."""
    kind = mode.kind
    if kind == "mi6":
        return EMPTY_TRACE_SET
    if kind == "insecure":
        return contract_trace_set(program, state0, layout, SHM, SPEC,
                                  fuel=fuel, enum_cap=enum_cap)
    if kind == "safe":
        return frozenset({contract_trace(program, state0, layout, SHM, SEQ,
                                         fuel=fuel)})
    if kind == "burst_sta":
        resolved = sta_gate(program, sta_report)
        if resolved is None:
            return EMPTY_TRACE_SET
        kind = "burst"
    # burst: straight-line speculation gated by the dynamic CSR flag,
    # sequential semantics everywhere else
    _check_runtime_containment(program, state0, layout, fuel)
    return contract_trace_set(program, state0, layout, SHM, STL,
                              fuel=fuel, enum_cap=enum_cap, burst_gated=True)
