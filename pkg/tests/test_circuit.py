import pytest
from hypothesis import given, settings, strategies as st

from gatqnn.circuit import SlotId, build, draw, param_count, resource_count, slot_set
from gatqnn.errors import WidthExceedsQubits

# rows of the final-generation inference table, with their resource strings
FINAL_GENERATION_ROWS = {
    (3, 2, 2, 1, 2): (5, 3),
    (4, 4, 1, 1, 2): (5, 5),
    (4, 4, 1, 2, 2): (5, 6),
    (3, 1, 2, 1, 2): (5, 2),
    (3, 2, 3, 1, 2): (6, 3),
    (4, 4, 2, 1, 2): (6, 5),
    (4, 4, 2, 2, 2): (6, 6),
    (4, 4, 3, 1, 2): (7, 5),
    (4, 4, 3, 2, 2): (7, 6),
    (3, 2, 4, 4, 2): (7, 6),
}


@pytest.mark.parametrize("ch,expected", sorted(FINAL_GENERATION_ROWS.items()))
def test_final_generation_resources(ch, expected):
    assert tuple(resource_count(ch)) == expected
    assert param_count(ch) == expected[0]


def test_full_macro_layout():
    spec = build((4, 4, 4, 4, 2), 4)
    assert spec.resources == (8, 8)
    cnots = [g.wires for g in spec.gates if g.kind == "CNOT"]
    assert cnots == [(0, 1), (1, 2), (2, 3), (3, 0)] * 2
    assert param_count((4, 4, 4, 4, 2)) == 8


def test_inactive_layer_ignored():
    spec = build((1, 1, 4, 1, 1), 4)
    assert [(g.kind, g.wires, g.slot) for g in spec.gates] == [("RX", (0,), SlotId(1, 0)), ("CNOT", (0, 1), None)]
    assert param_count((1, 1, 4, 1, 1)) == 1


def test_gate_order_example():
    spec = build((3, 2, 2, 1, 2), 4)
    got = [(g.kind, g.wires) for g in spec.gates]
    assert got == [
        ("RX", (0,)), ("RX", (1,)), ("RX", (2,)), ("CNOT", (0, 1)), ("CNOT", (1, 2)),
        ("RX", (0,)), ("RX", (1,)), ("CNOT", (0, 1)),
    ]
    assert str(spec.resources) == "5 RX, 3 CNOT"
    assert spec.slots == (SlotId(1, 0), SlotId(1, 1), SlotId(1, 2), SlotId(2, 0), SlotId(2, 1))


def test_simple_resources():
    assert tuple(resource_count((1, 1, 1, 1, 1))) == (1, 1)


def test_width_exceeds_qubits():
    with pytest.raises(WidthExceedsQubits):
        build((4, 1, 1, 1, 1), 3)


def test_draw_has_one_line_per_wire():
    text = draw(build((4, 4, 4, 4, 2), 4))
    assert len(text.splitlines()) == 4


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.integers(1, 4)] * 4, st.integers(1, 2)))
def test_slot_gate_consistency(ch):
    spec = build(ch, 4)
    rx = [g for g in spec.gates if g.kind == "RX"]
    assert len(rx) == param_count(ch) == len(spec.slots) == resource_count(ch).rx
    assert sum(g.kind == "CNOT" for g in spec.gates) == resource_count(ch).cnot
    assert [g.slot for g in rx] == list(spec.slots) == slot_set(ch)
    assert len(set(spec.slots)) == len(spec.slots)
    assert build(ch, 4) == spec
