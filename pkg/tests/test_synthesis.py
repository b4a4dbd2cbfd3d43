import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthcorr.catalog import CATALOG, LABELS, SIGNED, CPTP
from synthcorr.synthesis import (
    SPARSE_NAMES, SynthesizedChannel, channel, choi_matrix, cptp_check, decompose, format_channels,
    fourth_order_channels, identity_channel, parse_channel, parse_channels, reconstruct,
    robust_repeat, robust_repeat_closed_form, second_order_channels, sparse_element,
)

from reference_values import MATRIX_UNIT_QUARTERS


@pytest.mark.parametrize("name", SPARSE_NAMES)
def test_matrix_unit_expansion_matches_reference(name):
    sol = decompose(sparse_element(name))
    expected = np.array(MATRIX_UNIT_QUARTERS[name]) / 4
    assert np.max(np.abs(sol.vector - expected)) < 1e-10
    assert sol.residual < 1e-12


def test_first_matrix_unit_row():
    w = decompose(sparse_element("P00")).vector
    assert np.allclose(w[:7], [-0.5] + [0.25] * 6) and np.allclose(w[7:], 0)


def test_identity_decomposes_to_r0_only():
    w = decompose(np.eye(4)).vector
    assert np.isclose(w[0], 1.0) and np.allclose(w[1:], 0, atol=1e-12)


@given(st.lists(st.floats(-3, 3), min_size=16, max_size=16))
def test_decompose_reconstruct_round_trip(vals):
    m = np.array(vals).reshape(4, 4)
    sol = decompose(m)
    assert np.allclose(reconstruct(sol), m, atol=1e-9)


def test_sparse_element_validation():
    with pytest.raises(ValueError):
        sparse_element("Pqq")
    with pytest.raises(ValueError):
        decompose(np.eye(3))


def test_second_order_channels():
    p1, p2 = second_order_channels()
    assert np.allclose(p1.matrix, np.diag([1, 0, 1, 0]))
    assert p1.physical == CPTP and p2.physical == CPTP


def test_fourth_order_channels_are_signed():
    p1, p2, p3, p4 = fourth_order_channels()
    assert p1.physical == SIGNED
    assert np.allclose(p3.matrix, np.diag([1, 1, 0, 0]))


def test_affine_combination_of_cptp_maps_is_cptp():
    ch = channel((0.3, "Rx+90"), (0.7, "Pz"))
    assert ch.physical == CPTP


def test_choi_of_identity_is_maximally_entangled_projector():
    C = choi_matrix(np.eye(4))
    v = np.array([1, 0, 0, 1])
    assert np.allclose(C, np.outer(v, v))


def test_cptp_check_detects_non_positive_map():
    transpose = np.diag([1.0, 1.0, -1.0, 1.0])
    rep = cptp_check(transpose)
    assert rep.trace_preserving and not rep.positive_C


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("dth", [0.0, 0.04, -0.1])
def test_robust_repeat_closed_form(n, dth):
    ch = robust_repeat(dth, n)
    assert len(ch.terms) == 2 ** n
    assert np.allclose(ch.matrix, robust_repeat_closed_form(dth, n), atol=1e-12)


def test_robust_repeat_leakage_ratio_per_step():
    dth = 0.04
    lk = [robust_repeat(dth, n).matrix[2, 2] for n in (1, 2, 3, 4)]
    ratios = np.array(lk[1:]) / np.array(lk[:-1])
    assert np.allclose(ratios, -np.sin(dth), atol=1e-12)


def test_robust_repeat_limits():
    with pytest.raises(ValueError):
        robust_repeat(0.0, 0)
    with pytest.raises(ValueError):
        robust_repeat(0.0, 13)


def test_channel_text_round_trip():
    chans = list(second_order_channels()) + list(fourth_order_channels())
    back = parse_channels(format_channels(chans))
    assert len(back) == len(chans)
    for a, b in zip(chans, back):
        assert np.allclose(a.matrix, b.matrix)


def test_channel_text_comments_and_sequences():
    ch = parse_channel("# comment\n0.5 Ry+90 Rx-90  # inline\n\n0.5 R0\n")
    assert len(ch.terms) == 2 and len(ch.terms[0][1]) == 2


@pytest.mark.parametrize("text", ["", "abc Rx+90", "0.5", "0.5 Qz", "1 R0\n---\n1 R0"])
def test_channel_text_errors(text):
    with pytest.raises(ValueError):
        parse_channel(text)


def test_then_composes_in_time_order():
    a = channel((1.0, "Ry+90"))
    b = channel((1.0, "Rx+90"))
    assert np.allclose(a.then(b).matrix, b.matrix @ a.matrix)


def test_to_channel_reproduces_target():
    target = sparse_element("Pxy")
    ch = decompose(target).to_channel(tol=1e-14)
    assert isinstance(ch, SynthesizedChannel)
    assert np.allclose(ch.matrix, target, atol=1e-12)
    assert identity_channel().matrix.shape == (4, 4)


def test_catalog_weights_order():
    sol = decompose(np.eye(4))
    assert list(sol.weights) == list(LABELS) and len(CATALOG) == 16
