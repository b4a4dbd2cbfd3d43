import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synthcorr.liouville import is_hermitian
from synthcorr.model import ExperimentParams, build
from synthcorr.oracle import (
    analytic_C_p00p, analytic_C_plus_minus, analytic_C_pmmp, coefficient_A, correlation, exact_S2,
    exact_S4, leakage_signal, next_order_coefficient, predicted_signal,
)
from synthcorr.ordering import OrderingSequence, vanishing_correlation_filter
from synthcorr.synthesis import fourth_order_channels, second_order_channels

times_st = st.floats(0, 100e-6)


# ------------------------------------------------------------------ model

def test_model_operators(model, params):
    assert model.bath_dim == 8 and model.joint_dim == 16
    for m in (model.H_B, model.B, model.V, model.rho_S, model.rho_B):
        assert is_hermitian(m)
    assert np.isclose(np.trace(model.rho0), 1.0)
    assert np.allclose(model.bath_operator_at(0.0), model.B)
    U = model.bath_propagator(3e-6)
    assert np.allclose(U @ U.conj().T, np.eye(8))


def test_bath_operator_period(model, params):
    period = 1 / params.nu
    assert np.allclose(model.bath_operator_at(period), model.B, atol=1e-9 * np.abs(model.B).max())


@pytest.mark.parametrize("kw", [dict(J_CH=0), dict(nu=-1), dict(delta_t=0), dict(n_repeat=0), dict(bath_spins=9)])
def test_invalid_parameters(kw):
    with pytest.raises(ValueError):
        ExperimentParams(**kw)


def test_negative_time_rejected(model):
    with pytest.raises(ValueError):
        model.bath_operator_at(-1e-6)


# --------------------------------------------------------------- ordering

def test_ordering_notation_is_latest_first():
    seq = OrderingSequence.from_string("+-0")
    assert seq.entries == ("0", "-", "+")
    assert seq.notation == "+-0" and seq.theta == 2
    assert seq.sensor_side().notation == "-+0"


def test_vanishing_filter():
    assert vanishing_correlation_filter("-+")
    assert vanishing_correlation_filter("0-+")
    assert not vanishing_correlation_filter("+-")
    assert not vanishing_correlation_filter("00")


def test_ordering_rejects_bad_characters():
    with pytest.raises(ValueError):
        OrderingSequence.from_string("+x")


# ------------------------------------------------------------ correlations

@given(times_st)
def test_second_order_correlation_closed_form(model, params, tau):
    assert np.isclose(correlation("+-", (0.0, tau), model), analytic_C_plus_minus(tau, params),
                      atol=1e-9 * params.J ** 2)


@given(times_st, times_st, times_st)
def test_fourth_order_correlation_closed_form(model, params, a, b, c):
    ts = np.cumsum([0.0, a, b, c])
    assert np.isclose(correlation("+--+", ts, model), analytic_C_pmmp(a, c, params),
                      atol=1e-9 * params.J ** 4)


@given(times_st, times_st, times_st)
def test_population_correlation_closed_form(model, params, a, b, c):
    ts = np.cumsum([0.0, a, b, c])
    assert np.isclose(correlation("+00+", ts, model), analytic_C_p00p(ts[3], params),
                      atol=1e-9 * params.J ** 2)


@given(times_st, times_st)
def test_leading_commutator_vanishes(model, a, b):
    assert abs(correlation("-+", (0.0, a), model)) < 1e-6
    assert abs(correlation("-0+", (0.0, a, a + b), model)) < 1e-6


def test_polarization_scaling(params):
    half = build(replace(params, p_H=0.5))
    assert np.isclose(correlation("+-", (0, 5e-6), half), 0.5 * analytic_C_plus_minus(5e-6, params))


def test_correlation_input_validation(model):
    with pytest.raises(ValueError):
        correlation("+-", (0.0,), model)
    with pytest.raises(ValueError):
        correlation("+-", (2e-6, 1e-6), model)


def test_closed_forms_need_three_spins(params):
    with pytest.raises(ValueError):
        analytic_C_plus_minus(1e-6, replace(params, bath_spins=2))


# ---------------------------------------------------------- coefficients

def _all_orderings(n):
    return ["".join(e) for e in itertools.product("+-0", repeat=n)]


def test_second_order_coefficients():
    chans = second_order_channels()
    for eta in _all_orderings(2):
        expected = 1.0 if eta == "+-" else 0.0
        assert abs(coefficient_A(chans, eta) - expected) < 1e-12, eta


@pytest.mark.parametrize("p", [1.0, 0.5])
def test_fourth_order_coefficients(p):
    chans = fourth_order_channels()
    rho = np.diag([(1 + p) / 2, (1 - p) / 2])
    for eta in _all_orderings(4):
        expected = p if eta == "+--+" else 0.0
        assert abs(coefficient_A(chans, eta, rho_S=rho) - expected) < 1e-12, eta


def test_coefficient_length_mismatch():
    with pytest.raises(ValueError):
        coefficient_A(second_order_channels(), "+--+")


# ---------------------------------------------------------- exact signals

def test_exact_second_order_tends_to_target(model, params):
    tau = 10e-6
    target = analytic_C_plus_minus(tau, params)
    for dt in (1e-5, 2e-5):
        assert np.isclose(exact_S2(dt, 0.0, tau, model) / dt ** 2, target, rtol=(params.J * dt) ** 2)


def test_next_order_coefficients_match_exact_signals(model, params):
    dt = 2e-5
    ts2 = (0.0, 10e-6)
    c2 = (exact_S2(dt, *ts2, model) - dt ** 2 * correlation("+-", ts2, model)) / dt ** 4
    assert np.isclose(c2, next_order_coefficient(2, ts2, model), rtol=1e-3)
    ts4 = (0.0, 10e-6, 20e-6, 30e-6)
    c4 = (exact_S4(dt, *ts4, model) - dt ** 4 * correlation("+--+", ts4, model)) / dt ** 6
    assert np.isclose(c4, next_order_coefficient(4, ts4, model), rtol=1e-3)


def test_predicted_signal_matches_exact_at_small_window(model):
    dt, ts = 1e-5, (0.0, 12e-6)
    pred = predicted_signal(second_order_channels(), model, ts, dt, 2)
    assert np.isclose(pred, exact_S2(dt, *ts, model), rtol=1e-3)


def test_leakage_terms_scale_per_repeat(params):
    ts = (0.0, 10e-6, 20e-6, 30e-6)
    dth = 0.04
    leaks = [leakage_signal(dth, n, 0.5e-3, ts, params, exact_angles=True)[1] for n in (1, 2, 3)]
    assert np.allclose(np.array(leaks[1:]) / leaks[:-1], -np.sin(dth), atol=1e-12)
    with pytest.raises(ValueError):
        leakage_signal(dth, 0, 0.5e-3, ts, params)


def test_leading_order_fourth_signal_ignores_tau32(model):
    chans = fourth_order_channels()
    vals = [predicted_signal(chans, model, (0.0, 6e-6, 6e-6 + t32, 20e-6 + t32), 0.5e-3, 4)
            for t32 in (0.0, 7e-6, 31e-6)]
    assert np.ptp(vals) < 1e-10 * abs(vals[0])
