"""MPS reader/writer tests: semantics, diagnostics, round trips."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structprop.model import INF, Integrality, LinearRow, MipModel, Variable, models_equal
from structprop.mps import MpsParseError, MpsWriteError, parse_mps, write_mps

SAMPLE = """\
NAME test1
ROWS
 N  COST
 L  cap
 G  need
 E  bal
COLUMNS
    x  COST  3  cap  2
    x  need  1
    MARK1  'MARKER'  'INTORG'
    y  cap  1  bal  1
    MARK2  'MARKER'  'INTEND'
    z  bal  -1  need  2
RHS
    RHS  cap  10  need  2
    RHS  bal  0
BOUNDS
 UP BND x 4
ENDATA
"""


def test_parse_sections_and_senses():
    m = parse_mps(SAMPLE)
    assert m.name == "test1"
    assert [v.name for v in m.variables] == ["x", "y", "z"]
    x, y, z = m.variables
    assert (x.lower, x.upper, x.integrality) == (0.0, 4.0, Integrality.CONTINUOUS)
    assert (y.lower, y.upper, y.integrality) == (0.0, 1.0, Integrality.BINARY)
    assert z.integrality is Integrality.CONTINUOUS
    cap = m.row_by_name("cap")
    assert (cap.lhs, cap.rhs) == (-INF, 10.0)
    need = m.row_by_name("need")
    assert (need.lhs, need.rhs) == (2.0, INF)
    bal = m.row_by_name("bal")
    assert (bal.lhs, bal.rhs) == (0.0, 0.0)
    assert dict(m.objective) == {0: 3.0}


def test_parse_ranges_semantics():
    text = """\
NAME rng
ROWS
 N obj
 L lrow
 G grow
 E erow
 E erow2
COLUMNS
    x lrow 1 grow 1
    x erow 1 erow2 1
RHS
    RHS lrow 8 grow 2 erow 5 erow2 5
RANGES
    RNG lrow 3 grow 4 erow 2 erow2 -2
ENDATA
"""
    m = parse_mps(text)
    assert (m.row_by_name("lrow").lhs, m.row_by_name("lrow").rhs) == (5.0, 8.0)
    assert (m.row_by_name("grow").lhs, m.row_by_name("grow").rhs) == (2.0, 6.0)
    assert (m.row_by_name("erow").lhs, m.row_by_name("erow").rhs) == (5.0, 7.0)
    assert (m.row_by_name("erow2").lhs, m.row_by_name("erow2").rhs) == (3.0, 5.0)


def test_parse_bound_types():
    text = """\
NAME bnd
ROWS
 N obj
 L r
COLUMNS
    a r 1
    b r 1
    c r 1
    d r 1
    MARK 'MARKER' 'INTORG'
    e r 1
    f r 1
    MARK 'MARKER' 'INTEND'
BOUNDS
 FX BND a 2.5
 FR BND b
 MI BND c
 UP BND d 7
 UI BND e 8
 BV BND f
ENDATA
"""
    m = parse_mps(text)
    a, b, c, d, e, f = m.variables
    assert (a.lower, a.upper) == (2.5, 2.5)
    assert (b.lower, b.upper) == (-INF, INF)
    assert (c.lower, c.upper) == (-INF, INF) or c.lower == -INF
    assert (d.lower, d.upper) == (0.0, 7.0)
    assert (e.lower, e.upper, e.integrality) == (0.0, 8.0, Integrality.INTEGER)
    assert (f.lower, f.upper, f.integrality) == (0.0, 1.0, Integrality.BINARY)


def test_integer_default_bounds_and_flag():
    text = """\
NAME intdef
ROWS
 N obj
 L r
COLUMNS
    MARK 'MARKER' 'INTORG'
    k r 1
    MARK 'MARKER' 'INTEND'
ENDATA
"""
    k = parse_mps(text).variables[0]
    assert (k.lower, k.upper, k.integrality) == (0.0, 1.0, Integrality.BINARY)
    k2 = parse_mps(text, int_default_unbounded=True).variables[0]
    assert (k2.lower, k2.upper, k2.integrality) == (0.0, INF, Integrality.INTEGER)


def test_objsense_max_normalized():
    text = """\
NAME mx
OBJSENSE
    MAX
ROWS
 N obj
 L r
COLUMNS
    x obj 5 r 1
RHS
    RHS r 3
ENDATA
"""
    m = parse_mps(text)
    assert m.objective_sense == "max"
    assert dict(m.objective) == {0: -5.0}
    again = parse_mps(write_mps(m))
    assert models_equal(m, again)


@pytest.mark.parametrize(
    "snippet,fragment",
    [
        ("NAME x\nROWS\n Z r\n", "row sense"),
        ("NAME x\nROWS\n N obj\nCOLUMNS\n    c nosuch 1\n", "unknown row"),
        ("NAME x\nROWS\n N obj\n L r\nCOLUMNS\n    c r\n", "row/value pairs"),
        ("NAME x\nROWS\n N obj\n L r\nCOLUMNS\n    c r one\n", "number"),
        ("NAME x\nSOS\n S1 s 1\n", "unsupported section"),
        ("NAME x\nROWS\n N obj\n L r\nCOLUMNS\n    c r 1\nBOUNDS\n SC BND c 1\n", "semicontinuous"),
        ("NAME x\nROWS\n N obj\n L r\n L r\n", "duplicate row"),
        ("NAME x\nGARBAGE\n", "unknown section"),
        ("random text\n", "unknown section"),
        ("NAME x\nROWS\n N obj\n", "missing COLUMNS"),
    ],
)
def test_parse_errors_carry_line_numbers(snippet, fragment):
    with pytest.raises(MpsParseError) as excinfo:
        parse_mps(snippet)
    assert fragment in str(excinfo.value)
    assert excinfo.value.line >= 1


def test_parser_is_total_on_garbage():
    junk = [
        "", "\x00\x01", "ENDATA", "ROWS\n N obj\n L r\nCOLUMNS\n x r 1 2",
        "NAME\nROWS\nCOLUMNS\nBOUNDS\nENDATA",
    ]
    for text in junk:
        try:
            parse_mps(text)
        except MpsParseError:
            pass


def _sample_model():
    variables = [
        Variable(0, "b0", 0.0, 1.0, Integrality.BINARY),
        Variable(1, "i1", -2.0, 5.0, Integrality.INTEGER),
        Variable(2, "c2", 0.0, INF),
        Variable(3, "free3", -INF, INF),
        Variable(4, "iso4", 1.0, 1.0, Integrality.INTEGER),
    ]
    rows = [
        LinearRow(0, "r_le", ((0, 2.0), (2, 1.0)), -INF, 9.0),
        LinearRow(1, "r_ge", ((1, 1.0), (3, -1.5)), 2.0, INF),
        LinearRow(2, "r_eq", ((0, 1.0), (1, 1.0)), 3.0, 3.0),
        LinearRow(3, "r_rng", ((2, 1.0), (3, 1.0)), 1.0, 4.0),
    ]
    return MipModel(variables, rows, [(0, 1.0), (1, -2.0)], "min", name="sample")


def test_round_trip_structural_equality():
    m = _sample_model()
    text = write_mps(m)
    again = parse_mps(text)
    assert models_equal(m, again)
    assert write_mps(again) == text


def test_pinned_binary_keeps_bounds_through_write():
    # BV would silently widen a binary tightened to [0, 0]
    variables = [
        Variable(0, "free", 0.0, 1.0, Integrality.BINARY),
        Variable(1, "off", 0.0, 0.0, Integrality.BINARY),
        Variable(2, "on", 1.0, 1.0, Integrality.BINARY),
    ]
    rows = [LinearRow(0, "r", ((0, 1.0), (1, 1.0), (2, 1.0)), -INF, 2.0)]
    again = parse_mps(write_mps(MipModel(variables, rows)))
    assert (again.variables[0].lower, again.variables[0].upper) == (0.0, 1.0)
    assert again.variables[0].integrality is Integrality.BINARY
    for vid, value in ((1, 0.0), (2, 1.0)):
        var = again.variables[vid]
        assert (var.lower, var.upper) == (value, value)
        assert var.is_integer


def test_writer_rejects_bad_names():
    v = [Variable(0, "with space", 0.0, 1.0)]
    r = [LinearRow(0, "r", ((0, 1.0),), 0.0, 1.0)]
    with pytest.raises(MpsWriteError):
        write_mps(MipModel(v, r))
    v = [Variable(0, "x" * 300, 0.0, 1.0)]
    with pytest.raises(MpsWriteError):
        write_mps(MipModel(v, r))


def test_writer_rejects_double_free_row():
    v = [Variable(0, "x", 0.0, 1.0)]
    r = [LinearRow(0, "r", ((0, 1.0),), -INF, INF)]
    with pytest.raises(MpsWriteError):
        write_mps(MipModel(v, r))


def test_writer_autonames_blank():
    v = [Variable(0, "", 0.0, 2.0)]
    r = [LinearRow(0, "", ((0, 1.0),), -INF, 1.0)]
    text = write_mps(MipModel(v, r))
    m = parse_mps(text)
    assert m.variables[0].name == "C0001"
    assert m.rows[0].name == "R0001"


name_st = st.from_regex(r"[a-z][a-z0-9_]{0,8}", fullmatch=True)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_round_trip_random_models(data):
    n_vars = data.draw(st.integers(1, 6))
    variables = []
    for i in range(n_vars):
        kind = data.draw(st.sampled_from(list(Integrality)))
        if kind is Integrality.BINARY:
            lo, up = 0.0, 1.0
        else:
            lo = float(data.draw(st.integers(-5, 3)))
            up = lo + float(data.draw(st.integers(0, 6)))
            if data.draw(st.booleans()):
                up = INF
        variables.append(Variable(i, f"v{i}", lo, up, kind))
    n_rows = data.draw(st.integers(0, 5))
    rows = []
    for j in range(n_rows):
        support = data.draw(
            st.lists(st.integers(0, n_vars - 1), min_size=1, max_size=n_vars, unique=True)
        )
        terms = tuple(
            (v, float(data.draw(st.integers(-4, 4).filter(lambda c: c != 0))))
            for v in support
        )
        lo = float(data.draw(st.integers(-8, 8)))
        width = data.draw(st.sampled_from([0.0, 2.0, INF, -1.0]))
        if width == -1.0:
            lhs, rhs = -INF, lo
        elif width == INF:
            lhs, rhs = lo, INF
        else:
            lhs, rhs = lo, lo + width
        rows.append(LinearRow(j, f"r{j}", terms, lhs, rhs))
    objective = [
        (i, float(data.draw(st.integers(-3, 3))))
        for i in range(n_vars)
        if data.draw(st.booleans())
    ]
    sense = data.draw(st.sampled_from(["min", "max"]))
    model = MipModel(variables, rows, objective, sense, name="rt")
    again = parse_mps(write_mps(model))
    assert models_equal(model, again)
