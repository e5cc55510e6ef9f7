"""Static analyzer tests: containment, backward leakage pass, narratives."""

import pytest

from rmikit.analyzer import (PathExplosion, Violation, analyze,
                             check_self_contained, explain)
from rmikit.asm import parse_program, reg_num
from rmikit.machine import MemoryLayout
from rmikit.ni import Policy

LAYOUT = MemoryLayout()
ALL_SECRET = Policy()
A0, A1, A2 = reg_num("a0"), reg_num("a1"), reg_num("a2")

MEMCPY_LEFT = parse_program("""\
csrwi MSPEC, BURST_ON
add a2, a0, a2
bgeu a0, a2, .end
.loop:
lbu a4, 0(a1)
add a1, a1, 1
add a0, a0, 1
sb a4, -1(a0)
bne a0, a2, .loop
.end:
csrwi MSPEC, BURST_OFF
""")

MEMCPY_RIGHT = parse_program("""\
add a2, a0, a2
bgeu a0, a2, .end
csrwi MSPEC, BURST_ON
.loop:
lbu a4, 0(a1)
add a1, a1, 1
add a0, a0, 1
sb a4, -1(a0)
bne a0, a2, .loop
csrwi MSPEC, BURST_OFF
.end:
""")


def test_memcpy_left_region_is_self_contained():
    assert check_self_contained(MEMCPY_LEFT, (0, 10)) == []


def test_jal_outside_region_rejected():
    program = parse_program(
        "csrwi MSPEC, BURST_ON\njal ra, out\ncsrwi MSPEC, BURST_OFF\nout:\nli a0, 1")
    violations = check_self_contained(program, program.burst_regions[0])
    assert [v.reason for v in violations] == ["target outside snippet"]


def test_ret_inside_region_rejected():
    program = parse_program("csrwi MSPEC, BURST_ON\nret\ncsrwi MSPEC, BURST_OFF")
    violations = check_self_contained(program, program.burst_regions[0])
    assert [v.reason for v in violations] == ["indirect branch"]


def test_bogus_region_reports_unmatched():
    violations = check_self_contained(MEMCPY_LEFT, (1, 5))
    assert [v.reason for v in violations] == ["unmatched markers"]


def test_memcpy_left_fails_with_expected_leaks():
    report = analyze(MEMCPY_LEFT, ALL_SECRET, LAYOUT)
    assert report.verdict == "fail"
    leaked = {reg for reg, _ in report.leaked_initial_registers}
    assert {A0, A1, A2} <= leaked
    # every leak cites the guard branch as the divergence
    divergence_line = MEMCPY_LEFT.instructions[2].source_line
    assert all(f"line {divergence_line}" in cond
               for _, cond in report.leaked_initial_registers)


def test_memcpy_left_violations_cite_transmitters():
    report = analyze(MEMCPY_LEFT, ALL_SECRET, LAYOUT)
    transmitters = {v.transmitter for v in report.violations
                    if v.kind == "SecretLeak"}
    assert 4 in transmitters        # the byte load leaks src
    assert 8 in transmitters        # the loop-exit compare leaks len


def test_memcpy_right_passes():
    report = analyze(MEMCPY_RIGHT, ALL_SECRET, LAYOUT)
    assert report.verdict == "pass"
    assert report.violations == []
    assert report.leaked_initial_registers == set()


def test_no_transmitters_passes():
    program = parse_program(
        "csrwi MSPEC, BURST_ON\nli t0, 3\nadd t1, a0, t0\ncsrwi MSPEC, BURST_OFF")
    report = analyze(program, ALL_SECRET, LAYOUT)
    assert report.verdict == "pass" and report.leaked_initial_registers == set()


def test_memory_dependent_leak_on_double_dereference():
    program = parse_program(
        "csrwi MSPEC, BURST_ON\nld t1, 0(t0)\nlbu t2, 0(t1)\ncsrwi MSPEC, BURST_OFF")
    report = analyze(program, ALL_SECRET, LAYOUT)
    assert report.verdict == "fail"
    assert any(v.kind == "MemoryDependentLeak" for v in report.violations)


def test_declassification_through_nonspeculative_load():
    # the prefix load of 0(a1) already reveals a1 before the divergence,
    # so the speculative load of the same base is not a new leak
    program = parse_program("""\
csrwi MSPEC, BURST_ON
lbu t0, 0(a1)
beq a0, a0, done
lbu t1, 1(a1)
done:
csrwi MSPEC, BURST_OFF
""")
    report = analyze(program, ALL_SECRET, LAYOUT)
    leaked = {reg for reg, _ in report.leaked_initial_registers}
    assert A1 not in leaked
    # the divergence branch itself runs architecturally, so nothing else
    # is speculative-only here and the region is accepted
    assert report.verdict == "pass"


def test_li_overwrite_clears_dependency():
    program = parse_program("""\
csrwi MSPEC, BURST_ON
li a1, 0x8000
beq a0, a0, done
lbu t1, 0(a1)
done:
csrwi MSPEC, BURST_OFF
""")
    report = analyze(program, ALL_SECRET, LAYOUT)
    leaked = {reg for reg, _ in report.leaked_initial_registers}
    assert A1 not in leaked


def test_public_policy_suppresses_violation():
    program = parse_program("""\
csrwi MSPEC, BURST_ON
beq a0, a0, done
lbu t1, 0(a1)
done:
csrwi MSPEC, BURST_OFF
""")
    secret = analyze(program, ALL_SECRET, LAYOUT)
    public = analyze(program, Policy(public_regs=frozenset({A0, A1})), LAYOUT)
    assert secret.verdict == "fail"
    assert public.verdict == "pass"


def test_architectural_only_paths_do_not_fail():
    # transmitter reachable only non-speculatively: no divergence, no leak
    program = parse_program(
        "csrwi MSPEC, BURST_ON\nlbu t0, 0(a1)\ncsrwi MSPEC, BURST_OFF")
    report = analyze(program, ALL_SECRET, LAYOUT)
    assert report.verdict == "pass"


def test_window_bound_prunes_far_transmitters():
    filler = "\n".join(["add t1, t1, t0"] * 8)
    program = parse_program(f"""\
csrwi MSPEC, BURST_ON
beq a0, a0, done
{filler}
lbu t2, 0(a1)
done:
csrwi MSPEC, BURST_OFF
""")
    report = analyze(program, ALL_SECRET, LAYOUT, spec_depth=8)
    leaked = {reg for reg, _ in report.leaked_initial_registers}
    assert A1 not in leaked     # nine window slots needed, only eight fit
    deeper = analyze(program, ALL_SECRET, LAYOUT, spec_depth=16)
    assert A1 in {reg for reg, _ in deeper.leaked_initial_registers}


def test_x0_comparison_gets_value_reading():
    program = parse_program("""\
csrwi MSPEC, BURST_ON
beq a2, x0, done
lbu t1, 0(a1)
done:
csrwi MSPEC, BURST_OFF
""")
    report = analyze(program, ALL_SECRET, LAYOUT)
    # branch taken means a2 == 0; speculation runs the load anyway
    conds = {cond for _, cond in report.leaked_initial_registers}
    assert any("a2 == 0" in c for c in conds)


def test_path_explosion_cap():
    lines = ["csrwi MSPEC, BURST_ON"]
    for i in range(10):
        lines += [f"bne a0, a1, l{i}", f"add a0, a0, a1", f"l{i}:"]
    lines += ["lbu t0, 0(a0)", "csrwi MSPEC, BURST_OFF"]
    program = parse_program("\n".join(lines))
    with pytest.raises(PathExplosion):
        analyze(program, ALL_SECRET, LAYOUT, node_cap=50)


def test_explain_narratives():
    report = analyze(MEMCPY_LEFT, ALL_SECRET, LAYOUT)
    text = explain(report)
    assert "can be leaked" in text and "taken" in text
    ok = analyze(MEMCPY_RIGHT, ALL_SECRET, LAYOUT)
    assert explain(ok) == "no violations\n"
    mdl = analyze(parse_program(
        "csrwi MSPEC, BURST_ON\nld t1, 0(t0)\nlbu t2, 0(t1)\ncsrwi MSPEC, BURST_OFF"),
        ALL_SECRET, LAYOUT)
    assert "depends on another memory value" in explain(mdl)


def test_report_json_is_serializable():
    import json
    report = analyze(MEMCPY_LEFT, ALL_SECRET, LAYOUT)
    payload = json.dumps(report.to_json(), sort_keys=True)
    assert '"fail"' in payload
