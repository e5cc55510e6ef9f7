"""Parser and pretty-printer tests."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmikit.asm import (AsmError, MalformedOperand, Program, UnknownMnemonic,
                        UnmatchedBurstMarker, UnresolvedLabel, format_program,
                        parse_program, reg_name, reg_num)

MEMCPY_LEFT = """\
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
"""


def test_memcpy_left_shape():
    program = parse_program(MEMCPY_LEFT)
    assert len(program) == 11
    assert program.labels == {".loop": 3, ".end": 9}
    assert program.burst_regions == ((0, 10),)


def test_empty_program():
    program = parse_program("")
    assert len(program) == 0
    assert program.labels == {}
    assert program.burst_regions == ()


def test_unknown_mnemonic():
    with pytest.raises(UnknownMnemonic) as err:
        parse_program("vadd.vv v0, v1, v2")
    assert err.value.line == 1


def test_add_immediate_shorthand():
    program = parse_program("add a1, a1, 1")
    ins = program.instructions[0]
    assert ins.opcode == "addi" and ins.imm == 1


def test_ret_canonicalized():
    ins = parse_program("ret").instructions[0]
    assert ins.opcode == "jalr"
    assert ins.rd == 0 and ins.rs1 == reg_num("ra") and ins.imm == 0


def test_symbol_extension():
    program = parse_program(".symbol buf = 0x8000\nli t0, buf\n")
    assert program.symbols == {"buf": 0x8000}
    assert program.instructions[0].imm == 0x8000


def test_unresolved_label():
    with pytest.raises(UnresolvedLabel):
        parse_program("jal ra, nowhere")


def test_unmatched_burst_marker():
    with pytest.raises(UnmatchedBurstMarker):
        parse_program("csrwi MSPEC, BURST_ON")
    with pytest.raises(UnmatchedBurstMarker):
        parse_program("csrwi MSPEC, BURST_OFF")


def test_csrwi_rejects_other_csrs():
    with pytest.raises(MalformedOperand):
        parse_program("csrwi MCAUSE, BURST_ON")
    with pytest.raises(MalformedOperand):
        parse_program("csrwi MSPEC, 7")


def test_directive_skipped_with_warning():
    with pytest.warns(UserWarning):
        program = parse_program(".text\nli a0, 1\n")
    assert len(program) == 1


def test_comments_and_blank_lines():
    program = parse_program("# header\n\nli a0, 1  # trailing\n")
    assert len(program) == 1


def test_branch_targets_in_range():
    program = parse_program(MEMCPY_LEFT)
    for ins in program.instructions:
        if ins.target is not None:
            assert 0 <= ins.target < len(program)


def test_abi_alias_round_trip():
    for name in ["zero", "ra", "sp", "a0", "a7", "t0", "t6", "s0", "s11"]:
        assert reg_name(reg_num(name)) == name
    assert reg_num("x13") == reg_num("a3")


def test_roundtrip_fixpoint_on_corpus_style_source():
    program = parse_program(MEMCPY_LEFT)
    printed = format_program(program)
    again = parse_program(printed)
    assert format_program(again) == printed
    assert [i.opcode for i in again.instructions] == \
        [i.opcode for i in program.instructions]


_SNIPPET_LINES = st.lists(
    st.sampled_from([
        "li a0, 7",
        "add a1, a0, a0",
        "addi a2, a1, -3",
        "lbu a4, 0(a1)",
        "sb a4, 4(a2)",
        "mv t0, a0",
        "beq a0, a1, 0",
        "jal x0, 0",
        "x:",
        "jalr ra, 8(t0)",
        "slli a3, a0, 2",
    ]),
    min_size=0, max_size=8)


@settings(max_examples=200)
@given(_SNIPPET_LINES)
def test_roundtrip_fixpoint_property(lines):
    source = "\n".join(dict.fromkeys(lines))  # dedupe to keep labels unique
    program = parse_program(source)
    printed = format_program(program)
    assert format_program(parse_program(printed)) == printed


@settings(max_examples=300)
@given(st.binary(max_size=200))
def test_never_panics_on_arbitrary_bytes(data):
    try:
        result = parse_program(data)
    except AsmError:
        return
    assert isinstance(result, Program)


@settings(max_examples=200)
@given(st.text(max_size=200))
def test_never_panics_on_arbitrary_text(text):
    try:
        result = parse_program(text)
    except AsmError:
        return
    assert isinstance(result, Program)
