"""Contract trace generation: leakage models x execution models.

A contract pairs a leakage model (which architectural events an observer
sees) with an execution model (which speculative control flows exist).
Traces are tuples of tagged event tuples:

    ("pc", index)              program-counter observation
    ("addr", address, domain)  memory-access address observation
    ("val", value)             loaded-value observation
    ("rollback",)              end of a mispredicted wrong-path window

Speculation never changes architectural results here, so a program's trace
under any predictor choice is the committed trace with self-contained
wrong-path windows spliced in after each mispredicted control transfer.
That lets the full trace set be enumerated as a product of per-branch
options instead of re-simulating every combination.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .asm import BRANCHES, BURST_ON, STORE_SIZES
from .machine import DEFAULT_FUEL, MachineError, step

DEFAULT_SPEC_DEPTH = 8
DEFAULT_ENUM_CAP = 1 << 16

LEAK_KINDS = ("ct", "arch", "mem", "shm")
EXEC_KINDS = ("seq", "stl", "spec")


class ContractError(Exception):
    pass


class InconsistentChoice(ContractError):
    pass


class EnumerationCapExceeded(ContractError):
    def __init__(self, cap, needed=None):
        detail = f" (needed {needed})" if needed else ""
        super().__init__(f"trace enumeration exceeds cap {cap}{detail}")
        self.cap = cap
        self.needed = needed


class SelfContainmentViolation(UserWarning):
    """A burst-region execution escaped its static region at runtime."""


@dataclass(frozen=True)
class LeakageModel:
    kind: str

    def __post_init__(self):
        if self.kind not in LEAK_KINDS:
            raise ValueError(f"unknown leakage model {self.kind!r}")


@dataclass(frozen=True)
class ExecModel:
    kind: str
    spec_depth: int = DEFAULT_SPEC_DEPTH

    def __post_init__(self):
        if self.kind not in EXEC_KINDS:
            raise ValueError(f"unknown execution model {self.kind!r}")
        if self.spec_depth < 1:
            raise ValueError("spec_depth must be positive")


CT = LeakageModel("ct")
ARCH = LeakageModel("arch")
MEM = LeakageModel("mem")
SHM = LeakageModel("shm")

SEQ = ExecModel("seq")
STL = ExecModel("stl")
SPEC = ExecModel("spec")

CORRECT = "correct"


def mispredict(target):
    return ("mispredict", target)


def _events_for(index, ins, effect, leak):
    """Events one executed instruction (at program index) contributes."""
    events = []
    kind = leak.kind
    if kind in ("ct", "arch"):
        events.append(("pc", index))
    ev = effect.mem_event
    if ev is not None:
        if kind in ("ct", "arch", "mem") or ev.domain == "shared":
            events.append(("addr", ev.address, ev.domain))
        if kind == "arch" and ev.kind == "load":
            events.append(("val", ev.value))
    return tuple(events)


@dataclass(frozen=True)
class StepRecord:
    index: int                 # program index of the executed instruction
    state_before: object
    state_after: object
    effect: object
    burst_active: bool         # flag value while this instruction executed


@dataclass(frozen=True)
class DecisionPoint:
    step: int                  # position in the committed step sequence
    index: int                 # program index of the control instruction
    targets: tuple             # admissible mispredict targets
    resume_state: object       # committed state after the instruction
    burst_active: bool


@dataclass(frozen=True)
class CommittedRun:
    records: tuple
    fuel_exhausted: bool

    def decision_points(self, program, exec_model):
        points = []
        for pos, rec in enumerate(self.records):
            targets = _mispredict_targets(program, rec, exec_model)
            if targets:
                points.append(DecisionPoint(
                    step=pos, index=rec.index, targets=targets,
                    resume_state=rec.state_after,
                    burst_active=rec.burst_active))
        return points


def _mispredict_targets(program, rec, exec_model):
    ins = program.instructions[rec.index]
    if exec_model.kind == "seq" or not ins.is_control:
        return ()
    actual = rec.effect.next_pc
    fall_through = rec.index + 1
    if ins.opcode in BRANCHES:
        if exec_model.kind == "stl":
            # branches predicted not-taken: a wrong path exists only when
            # the branch is actually taken
            return (fall_through,) if actual != fall_through else ()
        wrong_arm = fall_through if actual != fall_through else ins.target
        return (wrong_arm,)
    if exec_model.kind != "spec":
        return ()
    if ins.opcode == "jalr":
        # target predicted from a poisoned BTB/RSB: any program index
        return tuple(t for t in range(len(program)) if t != actual)
    return ()  # jal: direct target, known at decode


def simulate_committed(program, state0, layout, fuel=DEFAULT_FUEL):
    """Run the non-speculative path, recording per-step state snapshots
    and the dynamic burst-region flag."""
    records = []
    state = state0
    burst_active = False
    exhausted = False
    if len(program) == 0:
        return CommittedRun((), False)
    for _ in range(fuel):
        if state.halted:
            break
        index = state.pc
        ins = program.instructions[index]
        new_state, effect = step(program, state, layout)
        records.append(StepRecord(index=index, state_before=state,
                                  state_after=new_state, effect=effect,
                                  burst_active=burst_active))
        if ins.opcode == "csrwi":
            burst_active = ins.csr_value == BURST_ON
        state = new_state
    else:
        exhausted = not state.halted
    return CommittedRun(tuple(records), exhausted)


def wrong_path_events(program, resume_state, target, layout, leak, exec_model):
    """Observation window for one mispredicted control transfer.

    Executes up to spec_depth instructions starting at `target` from the
    committed post-instruction state, with stores buffered in an overlay
    and never committed. Faults and out-of-range fetches squash silently.
    Writing the speculation CSR acts as a barrier in every execution
    model, so a window never crosses it. Always ends with a rollback.
    """
    events = []
    overlay = {}
    state = replace(resume_state, pc=target, halted=False)
    for _ in range(exec_model.spec_depth):
        if not 0 <= state.pc < len(program):
            break
        ins = program.instructions[state.pc]
        if ins.opcode == "csrwi":
            break
        index = state.pc
        try:
            new_state, effect = step(program, state, layout, mem_overlay=overlay)
        except MachineError:
            break
        events.extend(_events_for(index, ins, effect, leak))
        ev = effect.mem_event
        if ev is not None and ev.kind == "store":
            # buffer the store; forward it to younger loads, never commit
            size = STORE_SIZES[ins.opcode]
            for i, b in enumerate(int(ev.value).to_bytes(8, "little")[:size]):
                overlay[(ev.domain, ev.address + i)] = b
            new_state = replace(state, pc=effect.next_pc,
                                halted=effect.next_pc == len(program))
        state = new_state
        if state.halted:
            break
    events.append(("rollback",))
    return tuple(events)


def _committed_events(program, run, leak):
    return [
        _events_for(rec.index, program.instructions[rec.index], rec.effect, leak)
        for rec in run.records
    ]


def contract_trace(program, state0, layout, leak, exec_model, choice=(),
                   fuel=DEFAULT_FUEL):
    """Trace for one concrete predictor choice.

    `choice` lists one decision per dynamic control-flow instruction with
    an admissible wrong path, in execution order: either "correct" or
    ("mispredict", target). Missing trailing entries default to correct.
    """
    run = simulate_committed(program, state0, layout, fuel)
    points = run.decision_points(program, exec_model)
    choice = tuple(choice)
    if len(choice) > len(points):
        raise InconsistentChoice(
            f"{len(choice)} decisions given but only {len(points)} "
            f"speculation points exist under {exec_model.kind}")
    committed = _committed_events(program, run, leak)
    windows = {}
    for point, decision in zip(points, choice):
        if decision == CORRECT:
            continue
        if not (isinstance(decision, tuple) and len(decision) == 2
                and decision[0] == "mispredict"):
            raise InconsistentChoice(f"bad decision {decision!r}")
        target = decision[1]
        if target not in point.targets:
            raise InconsistentChoice(
                f"target {target} not admissible at instruction {point.index} "
                f"under {exec_model.kind}")
        windows[point.step] = wrong_path_events(
            program, point.resume_state, target, layout, leak, exec_model)
    events = []
    for pos, step_events in enumerate(committed):
        events.extend(step_events)
        if pos in windows:
            events.extend(windows[pos])
    return tuple(events)


def contract_trace_set(program, state0, layout, leak, exec_model,
                       fuel=DEFAULT_FUEL, enum_cap=DEFAULT_ENUM_CAP,
                       burst_gated=False):
    """Set of traces over every admissible predictor choice.

    With `burst_gated`, speculation points are live only while the burst
    CSR flag is on, which is how the burst hardware mode reuses this
    machinery.
    """
    run = simulate_committed(program, state0, layout, fuel)
    points = run.decision_points(program, exec_model)
    if burst_gated:
        points = [p for p in points if p.burst_active]
    committed = _committed_events(program, run, leak)

    total = 1
    for point in points:
        total *= 1 + len(point.targets)
        if total > enum_cap:
            raise EnumerationCapExceeded(enum_cap, needed=total)

    window_cache = {}
    options_per_point = []
    for point in points:
        options = [None]
        for target in point.targets:
            key = (point.step, target)
            window_cache[key] = wrong_path_events(
                program, point.resume_state, target, layout, leak, exec_model)
            options.append(key)
        options_per_point.append(options)

    traces = set()
    for combo in itertools.product(*options_per_point):
        events = []
        splice = {key[0]: window_cache[key] for key in combo if key is not None}
        for pos, step_events in enumerate(committed):
            events.extend(step_events)
            if pos in splice:
                events.extend(splice[pos])
        traces.add(tuple(events))
    return frozenset(traces)


def trace_to_json(trace):
    return [list(event) for event in trace]


def trace_set_to_json(traces):
    return sorted(trace_to_json(t) for t in traces)
