"""Brute-force non-interference oracles over small enumerable state spaces.

Three checks, all exhaustive over a finite state space:

    direct NI     equal public state implies equal contract traces
    relative NI   equal traces under contract A implies equal under B
    satisfaction  equal contract traces implies equal hardware traces

States are grouped by the left-hand-side key (public projection or
A-trace set), so only pairs that can possibly violate are compared.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .contracts import (DEFAULT_ENUM_CAP, EnumerationCapExceeded,
                        contract_trace_set, trace_set_to_json)
from .machine import DEFAULT_FUEL, MASK64
from .modes import hw_trace_set

REGISTER_DOMAIN = (0, 1, 2, 0x8000)
CELL_DOMAIN = (0, 1)
DEFAULT_PAIR_CAP = 1 << 20


@dataclass(frozen=True)
class Policy:
    """What the attacker is assumed to already know.

    Shared memory and the pc are always public; everything not listed
    here is secret.
    """
    public_regs: frozenset = frozenset()
    public_private_cells: frozenset = frozenset()


@dataclass(frozen=True)
class StateSpace:
    """Finite instantiation of "for all initial states": a base state plus
    a value domain for each varying register and memory cell."""
    base_state: object
    varying_registers: tuple = ()   # ((reg number, (values...)), ...)
    varying_cells: tuple = ()       # ((address, (values...)), ...)

    def size(self):
        n = 1
        for _, domain in tuple(self.varying_registers) + tuple(self.varying_cells):
            n *= len(domain)
        return n


def enumerate_states(space, layout):
    """All states of the space, in a deterministic order."""
    regs = [(r, tuple(d)) for r, d in space.varying_registers]
    cells = [(a, tuple(d)) for a, d in space.varying_cells]
    domains = [d for _, d in regs] + [d for _, d in cells]
    states = []
    for combo in itertools.product(*domains):
        state = space.base_state
        reg_writes = {}
        for (r, _), value in zip(regs, combo[:len(regs)]):
            reg_writes[r] = value & MASK64
        if reg_writes:
            state = state.with_regs(reg_writes, pc=state.pc)
        for (addr, _), value in zip(cells, combo[len(regs):]):
            domain = layout.classify(addr)
            if domain is None:
                raise ValueError(f"varying cell {addr:#x} is in no mapped range")
            state = state.with_store(domain, addr, value & 0xFF, 1, pc=state.pc)
        states.append(state)
    return states


def pi_key(state, policy):
    """Public projection of a state: equality of keys is pi-equivalence."""
    return (
        state.pc,
        tuple((r, state.reg(r)) for r in sorted(policy.public_regs)),
        tuple((a, state.private_mem.get(a, 0))
              for a in sorted(policy.public_private_cells)),
        tuple(sorted((a, b) for a, b in state.shared_mem.items() if b)),
    )


@dataclass
class NiVerdict:
    holds: bool
    witness: tuple | None = None     # (state, state') when violated
    witness_detail: dict = field(default_factory=dict)
    pairs_checked: int = 0

    def to_json(self):
        out = {"verdict": "holds" if self.holds else "violated",
               "pairs_checked": self.pairs_checked}
        if self.witness is not None:
            a, b = self.witness
            out["witness"] = {"state_a": a.to_json(), "state_b": b.to_json()}
            out.update(self.witness_detail)
        return out


def _check_pair_cap(states, pair_cap):
    if len(states) * len(states) > pair_cap:
        raise EnumerationCapExceeded(pair_cap, needed=len(states) ** 2)


def _component_resets(space, layout):
    """One state-transformer per varying component, restoring its base value."""
    base = space.base_state
    resets = []
    for r, _ in space.varying_registers:
        value = base.reg(r)
        resets.append(lambda s, r=r, v=value: s.with_regs({r: v}, pc=s.pc))
    for addr, _ in space.varying_cells:
        domain = layout.classify(addr)
        value = base.mem(domain).get(addr, 0) if domain else 0
        resets.append(lambda s, a=addr, d=domain, v=value:
                      s.with_store(d, a, v, 1, pc=s.pc))
    return resets


def _shrink(a, b, space, layout, still_violates):
    """Greedy witness minimization: reset varying components to their base
    values, one at a time in both states, while the violation persists."""
    resets = _component_resets(space, layout)
    changed = True
    while changed:
        changed = False
        for reset in resets:
            na, nb = reset(a), reset(b)
            if (na, nb) != (a, b) and still_violates(na, nb):
                a, b = na, nb
                changed = True
    return a, b


def _check_grouped(states, key_fn, value_fn, space, layout, detail_fn):
    """Shared engine: within each group of states with equal keys, all
    values must be equal; the first mismatching pair is the witness."""
    groups = {}
    pairs = 0
    for state in states:
        key = key_fn(state)
        if key not in groups:
            groups[key] = (state, value_fn(state))
            continue
        ref_state, ref_value = groups[key]
        value = value_fn(state)
        pairs += 1
        if value != ref_value:
            def still_violates(a, b):
                return key_fn(a) == key_fn(b) and value_fn(a) != value_fn(b)
            a, b = _shrink(ref_state, state, space, layout, still_violates)
            return NiVerdict(
                holds=False, witness=(a, b),
                witness_detail=detail_fn(a, b), pairs_checked=pairs)
    return NiVerdict(holds=True, pairs_checked=pairs)


def check_direct_ni(program, contract, policy, space, layout,
                    fuel=DEFAULT_FUEL, enum_cap=DEFAULT_ENUM_CAP,
                    pair_cap=DEFAULT_PAIR_CAP):
    """Exhaustive direct non-interference for one (leak, exec) contract."""
    leak, exec_model = contract
    states = enumerate_states(space, layout)
    _check_pair_cap(states, pair_cap)

    def traces(state):
        return contract_trace_set(program, state, layout, leak, exec_model,
                                  fuel=fuel, enum_cap=enum_cap)

    def detail(a, b):
        return {"traces_a": trace_set_to_json(traces(a)),
                "traces_b": trace_set_to_json(traces(b))}

    return _check_grouped(states, lambda s: pi_key(s, policy), traces,
                          space, layout, detail)


def check_relative_ni(program, contract_a, contract_b, space, layout,
                      fuel=DEFAULT_FUEL, enum_cap=DEFAULT_ENUM_CAP,
                      pair_cap=DEFAULT_PAIR_CAP):
    """Equal trace sets under contract A must imply equal sets under B,
    over every pair of states in the space (no public/secret split)."""
    states = enumerate_states(space, layout)
    _check_pair_cap(states, pair_cap)

    def traces_under(contract):
        leak, exec_model = contract

        def traces(state):
            return contract_trace_set(program, state, layout, leak, exec_model,
                                      fuel=fuel, enum_cap=enum_cap)
        return traces

    key_fn = traces_under(contract_a)
    value_fn = traces_under(contract_b)

    def detail(a, b):
        return {"traces_b_a": trace_set_to_json(value_fn(a)),
                "traces_b_b": trace_set_to_json(value_fn(b))}

    return _check_grouped(states, key_fn, value_fn, space, layout, detail)


def check_hw_satisfies_one(program, mode, contract, space, layout,
                           fuel=DEFAULT_FUEL, enum_cap=DEFAULT_ENUM_CAP,
                           pair_cap=DEFAULT_PAIR_CAP, sta_report=None):
    """One program: equal contract traces must imply equal attacker
    observations under the hardware mode."""
    leak, exec_model = contract
    states = enumerate_states(space, layout)
    _check_pair_cap(states, pair_cap)

    def key_fn(state):
        return contract_trace_set(program, state, layout, leak, exec_model,
                                  fuel=fuel, enum_cap=enum_cap)

    def value_fn(state):
        return hw_trace_set(program, state, layout, mode, fuel=fuel,
                            enum_cap=enum_cap, sta_report=sta_report)

    def detail(a, b):
        return {"hw_traces_a": trace_set_to_json(value_fn(a)),
                "hw_traces_b": trace_set_to_json(value_fn(b))}

    return _check_grouped(states, key_fn, value_fn, space, layout, detail)


@dataclass
class SatisfactionVerdict:
    per_program: dict      # name -> NiVerdict
    holds: bool

    def to_json(self):
        return {"verdict": "holds" if self.holds else "violated",
                "programs": {name: v.to_json()
                             for name, v in sorted(self.per_program.items())}}


def check_hw_satisfies(mode, contract, entries, fuel=DEFAULT_FUEL,
                       enum_cap=DEFAULT_ENUM_CAP, pair_cap=DEFAULT_PAIR_CAP):
    """Run the satisfaction check across a corpus of entries, each exposing
    name, program, space, layout, and (for the analyzer-gated mode) an
    sta_report attribute."""
    per_program = {}
    for entry in entries:
        report = getattr(entry, "sta_report", None)
        per_program[entry.name] = check_hw_satisfies_one(
            entry.program, mode, contract, entry.space, entry.layout,
            fuel=fuel, enum_cap=enum_cap, pair_cap=pair_cap,
            sta_report=report)
    return SatisfactionVerdict(
        per_program=per_program,
        holds=all(v.holds for v in per_program.values()))
