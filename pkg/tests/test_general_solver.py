import numpy as np
import pytest

from synthcorr.synthesis import (
    GeneralWeightProblem, InfeasibleError, excluded_coefficient_count, fourth_order_channels,
    general_weight_solver, induced_coefficients, product_weights, second_order_channels,
    slot_weights_to_catalog,
)


def _check(sol, tol=1e-8):
    assert np.isclose(sol.coefficients[sol.target_index], 1.0, atol=tol)
    assert sol.max_off_target < tol


def test_second_order_single_coupling():
    sol = general_weight_solver(GeneralWeightProblem(2, 1, "+-", (0, 0)))
    assert len(sol.rows) == 5
    _check(sol)


def test_second_order_three_couplings():
    sol = general_weight_solver(GeneralWeightProblem(2, 3, "+-", (2, 1)))
    assert len(sol.rows) == 25
    assert sol.excluded == 24
    _check(sol)


@pytest.mark.slow
def test_fourth_order_three_couplings():
    sol = general_weight_solver(GeneralWeightProblem(4, 3, "+--+", (2, 2, 2, 2)))
    _check(sol)
    assert sol.weights.shape == (16,) * 4


def test_solution_reproduced_by_independent_contraction():
    prob = GeneralWeightProblem(2, 1, "+-", (0, 0))
    sol = general_weight_solver(prob)
    rows, coeffs = induced_coefficients(prob, sol.weights)
    assert np.allclose(coeffs, sol.coefficients)


def test_fixed_second_order_channels_induce_unit_target():
    prob = GeneralWeightProblem(2, 1, "+-", (0, 0))
    p1, p2 = second_order_channels()
    rows, coeffs = induced_coefficients(prob, product_weights([p1, p2]))
    values = dict(zip(rows, coeffs))
    assert np.isclose(values[("+-", (0, 0))], 1.0)


def test_fixed_fourth_order_channels_induce_unit_target():
    prob = GeneralWeightProblem(4, 1, "+--+", (0, 0, 0, 0))
    rows, coeffs = induced_coefficients(prob, product_weights(fourth_order_channels()))
    values = dict(zip(rows, coeffs))
    assert np.isclose(values[("+--+", (0, 0, 0, 0))], 1.0)


def test_slot_weights_map_to_catalog_weights():
    sol = general_weight_solver(GeneralWeightProblem(2, 1, "+-", (0, 0)))
    q = slot_weights_to_catalog(sol.weights)
    assert q.shape == (16, 16)


def test_excluded_count_geometric_sum():
    assert excluded_coefficient_count(1, 2) == 3
    assert excluded_coefficient_count(3, 2) == 21


def test_target_with_leading_commutator_is_infeasible():
    with pytest.raises(InfeasibleError):
        general_weight_solver(GeneralWeightProblem(2, 1, "-+", (0, 0)))


def test_oversized_coupling_set_is_infeasible():
    with pytest.raises(InfeasibleError):
        general_weight_solver(GeneralWeightProblem(2, 8, "+-", (0, 0)))


def test_target_length_must_match():
    with pytest.raises(ValueError):
        general_weight_solver(GeneralWeightProblem(2, 1, "+--", (0, 0, 0)))
