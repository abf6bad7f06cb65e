import cmath
import json

import numpy as np
import pytest

from pmuplan.network import (
    Branch,
    Bus,
    CaseFormatError,
    NetworkCase,
    branch_end_admittances,
    incidence_matrix,
    metered_admittances,
    neighbors,
    parse_case,
    serialize_case,
)

MINI_CASE = """\
function mpc = mini
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1  3  0  0  0   0  1  1.06  0  230  1  1.1  0.9;
    2  1  0  0  0  19  1  1.00  0  230  1  1.1  0.9;  % shunt on bus 2
    3  1  0  0  5   0  1  1.00  0  230  1  1.1  0.9;
];
mpc.branch = [
    1  2  0.01  0.05  0.02  9900  0  0  0      0  1  -360  360;
    2  3  0.02  0.10  0.00  9900  0  0  0.98  30  1  -360  360;
    1  3  0.03  0.15  0.00  9900  0  0  0      0  0  -360  360;  % out of service
];
"""


def test_matpower_subset_parsing():
    case = parse_case(MINI_CASE, name="mini")
    assert case.bus_ids == (1, 2, 3)
    # shunts are rescaled onto the MVA base
    assert case.buses[1].shunt_b == pytest.approx(0.19)
    assert case.buses[2].shunt_g == pytest.approx(0.05)
    # status-0 branch dropped, tap 0 means nominal, shift arrives in radians
    assert len(case.branches) == 2
    assert case.branches[0].tap == 1.0
    assert case.branches[1].tap == pytest.approx(0.98)
    assert case.branches[1].shift == pytest.approx(np.deg2rad(30.0))


def test_matpower_errors_carry_line_positions():
    with pytest.raises(CaseFormatError, match="missing 'mpc.bus'"):
        parse_case("mpc.baseMVA = 100;", name="broken")
    bad = MINI_CASE.replace("2  3  0.02", "2  oops  0.02")
    with pytest.raises(CaseFormatError, match=r"mini:\d+: bad numeric row"):
        parse_case(bad, name="mini")


def test_duplicate_and_dangling_validation():
    with pytest.raises(CaseFormatError, match="duplicate bus"):
        NetworkCase(name="d", buses=(Bus(1), Bus(1)), branches=())
    with pytest.raises(CaseFormatError, match="unknown bus 9"):
        NetworkCase(
            name="d",
            buses=(Bus(1), Bus(2)),
            branches=(Branch(1, 9, 0.0, 1.0),),
        )


def test_branch_invariants():
    with pytest.raises(ValueError, match="coincide"):
        Branch(4, 4, 0.0, 1.0)
    with pytest.raises(ValueError, match="zero series impedance"):
        Branch(1, 2, 0.0, 0.0)
    with pytest.raises(ValueError, match="tap"):
        Branch(1, 2, 0.0, 1.0, tap=-1.0)


def test_json_round_trip():
    case = parse_case(MINI_CASE, name="mini")
    doc = serialize_case(case)
    assert doc["schema"] == "network-case/1"
    again = parse_case(json.dumps(doc), format="json", name="ignored")
    assert again == case


def test_json_errors():
    with pytest.raises(CaseFormatError, match="invalid JSON at line"):
        parse_case("{not json", format="json", name="x")
    with pytest.raises(CaseFormatError, match="needs 'buses' and 'branches'"):
        parse_case('{"buses": []}', format="json", name="x")
    with pytest.raises(CaseFormatError, match="unknown case format"):
        parse_case("", format="yaml", name="x")


def test_incidence_matrix_orientation():
    case = parse_case(MINI_CASE, name="mini")
    mat = incidence_matrix(case)
    assert mat.tolist() == [[1, -1, 0], [0, 1, -1]]
    # every branch row sums to zero
    assert not mat.sum(axis=1).any()


def test_line_admittances_match_series_formula():
    br = Branch(1, 2, 0.01, 0.05, b_charging=0.02)
    y_s = 1.0 / complex(0.01, 0.05)
    y_ff, y_ft = branch_end_admittances(br)
    assert y_ff == pytest.approx(y_s + 0.01j)
    assert y_ft == pytest.approx(-y_s)
    # a plain line is symmetric: the to-end sees the same pair
    y_tt, y_tf = metered_admittances(br, 2)
    assert y_tt == pytest.approx(y_ff)
    assert y_tf == pytest.approx(y_ft)


def test_transformer_admittances_are_asymmetric():
    br = Branch(1, 2, 0.0, 0.2, tap=0.95, shift=np.deg2rad(10.0))
    y_s = 1.0 / 0.2j
    t = 0.95 * cmath.exp(1j * br.shift)
    y_ff, y_ft = metered_admittances(br, 1)
    y_tt, y_tf = metered_admittances(br, 2)
    assert y_ff == pytest.approx(y_s / (0.95**2))
    assert y_ft == pytest.approx(-y_s / t.conjugate())
    # tap lives wholly on the from side
    assert y_tt == pytest.approx(y_s)
    assert y_tf == pytest.approx(-y_s / t)
    with pytest.raises(ValueError, match="not an endpoint"):
        metered_admittances(br, 7)


def test_flat_model_strips_shunts_taps_and_shifts():
    br = Branch(1, 2, 0.0, 0.5, b_charging=0.3, tap=0.9, shift=0.2)
    y_s = 1.0 / 0.5j
    assert branch_end_admittances(br, flat=True) == (y_s, -y_s)
    assert metered_admittances(br, 2, flat=True) == (y_s, -y_s)


def test_topology_helpers():
    case = parse_case(MINI_CASE, name="mini")
    assert neighbors(case, 2) == {1, 3}
    assert case.incident_branches(2) == (0, 1)
    assert case.is_connected()
    island = NetworkCase(name="i", buses=(Bus(1), Bus(2)), branches=())
    assert not island.is_connected()
    with pytest.raises(KeyError):
        case.bus_index(99)
    with pytest.raises(KeyError):
        neighbors(case, 99)


def test_bundled_fixture_shapes(ieee14, ieee118):
    assert len(ieee14.buses) == 14
    assert len(ieee14.branches) == 20
    assert ieee14.is_connected()
    assert len(ieee118.buses) == 118
    assert len(ieee118.branches) == 186
    assert ieee118.is_connected()


def test_bundled_fixture_details(ieee14, ieee118):
    # three transformers off nominal tap on the 14-bus case
    taps14 = [br for br in ieee14.branches if br.tap != 1.0]
    assert len(taps14) == 3
    # the 118-bus case keeps its heavy hub and parallel circuits
    assert len(ieee118.incident_branches(49)) == 12
    pairs = {}
    for br in ieee118.branches:
        key = tuple(sorted((br.from_bus, br.to_bus)))
        pairs[key] = pairs.get(key, 0) + 1
    assert sum(1 for n in pairs.values() if n == 2) == 7
