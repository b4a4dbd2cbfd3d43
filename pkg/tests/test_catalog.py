import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthcorr import catalog
from synthcorr.catalog import (
    CATALOG, LABELS, J, bloch_rotation_matrix, kraus, parse_label, polarization_generator_expansion,
    rotation, rotation_superop, superop, transfer_matrix, unitary_generator_expansion_check,
)
from synthcorr.liouville import SX, SY, SZ, vectorize
from synthcorr.synthesis import cptp_check


def test_catalog_has_sixteen_operations_in_order():
    assert LABELS == ("R0", "Rx+90", "Ry+90", "Rz+90", "Rx-90", "Ry-90", "Rz-90",
                      "Rxy180", "Ryz180", "Rzx180", "Mx", "My", "Mz", "Px", "Py", "Pz")


def test_transfer_matrix_is_full_rank():
    assert np.linalg.matrix_rank(transfer_matrix()) == 16


def test_ry_quarter_turn_maps_z_to_x():
    up = np.diag([1.0, 0.0]).astype(complex)
    out = superop(parse_label("Ry+90")).apply(up)
    assert np.allclose(vectorize(out), [0.5, 0.5, 0, 0])


def test_polarization_targets():
    rho = np.array([[0.6, 0.1 + 0.2j], [0.1 - 0.2j, 0.4]])
    for axis, s in (("x", SX), ("y", SY), ("z", SZ)):
        out = superop(parse_label(f"P{axis}")).apply(rho)
        assert np.allclose(out, (np.eye(2) - s) / 2)


def test_measurement_is_signed_projection_difference():
    rho = np.array([[0.6, 0.1 + 0.2j], [0.1 - 0.2j, 0.4]])
    for axis, s in (("x", SX), ("y", SY), ("z", SZ)):
        pp, pm = (np.eye(2) + s) / 2, (np.eye(2) - s) / 2
        out = superop(parse_label(f"M{axis}")).apply(rho)
        assert np.allclose(out, pp @ rho @ pp - pm @ rho @ pm)
        assert parse_label(f"M{axis}").physical == catalog.SIGNED


@pytest.mark.parametrize("label", [l for l in LABELS if not l.startswith("M")])
def test_physical_entries_are_cptp(label):
    rep = cptp_check(superop(parse_label(label)))
    assert rep.is_cptp, rep


@pytest.mark.parametrize("label", ["Mx", "My", "Mz"])
def test_measurement_entries_fail_trace_preservation(label):
    rep = cptp_check(superop(parse_label(label)))
    assert not rep.is_cptp
    assert rep.tp_defect > 0.5


def test_diagonal_axis_operations_are_half_turns():
    m = superop(parse_label("Rxy180")).matrix
    assert np.allclose(m, np.diag([1, 0, 0, -1]) + np.array([[0, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 0]]))


@given(st.floats(-2 * np.pi, 2 * np.pi), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.1, 1))
def test_rotation_closed_form_matches_kraus(angle, a, b, c):
    axis = np.array([a, b, c]) / np.linalg.norm([a, b, c])
    op = rotation(angle, tuple(axis))
    assert np.allclose(superop(op).matrix, rotation_superop(angle, tuple(axis)).matrix, atol=1e-12)


@given(st.floats(-2 * np.pi, 2 * np.pi), st.sampled_from(["x", "y", "z", (0.6, 0.8, 0.0), (0.0, 0.6, 0.8)]))
def test_unitary_generator_expansion_residual(angle, axis):
    assert unitary_generator_expansion_check(angle, axis) < 1e-12


@pytest.mark.parametrize("axis", "xyz")
def test_polarization_generator_expansion(axis):
    exp = polarization_generator_expansion(axis)
    assert np.max(np.abs(exp - superop(parse_label(f"P{axis}")).matrix)) < 1e-12


def test_generator_symmetries():
    assert np.allclose(J("x", "y", sign="+"), J("y", "x", sign="+"))
    assert np.allclose(J("x", "y", sign="-"), -J("y", "x", sign="-"))
    assert np.allclose(J(), np.eye(4))


def test_bloch_rotation_is_orthogonal():
    R = bloch_rotation_matrix(0.7, (0, 0.6, 0.8))
    assert np.allclose(R @ R.T, np.eye(3))
    assert np.isclose(np.linalg.det(R), 1.0)


def test_kraus_pieces_have_signs():
    pieces = kraus(parse_label("Mz"))
    assert [s for s, _ in pieces] == [1.0, -1.0]
    assert all(s == 1.0 for s, _ in kraus(parse_label("Px")))


def test_parse_label_generic_rotation():
    op = parse_label("Rx:0.5")
    assert np.isclose(op.angle, 0.5) and op.axis == (1.0, 0.0, 0.0)
    op = parse_label("R0,0,1:1.0")
    assert op.axis == (0.0, 0.0, 1.0)
    for bad in ("Q", "Rx:abc", "R1,1:0.2"):
        with pytest.raises(ValueError):
            parse_label(bad)


def test_catalog_entries_are_frozen():
    with pytest.raises(Exception):
        CATALOG[0].label = "x"
