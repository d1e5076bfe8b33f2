"""Reverse-mode gradients through the unrolled solver, checked against
central finite differences and hand-derived small cases."""

import numpy as np
import pytest

from matchkit.autodiff import (
    finite_diff_grad,
    gradcheck,
    solve_with_grad,
)
from matchkit.matcher import SolverConfig, make_rng, preset, solve

FAST = preset("paper-fast")


def test_one_by_one_gradient_is_exactly_zero():
    report, result = solve_with_grad(
        np.array([[5.0]]), FAST, loss_weights=np.array([[1.0]])
    )
    np.testing.assert_array_equal(report.assignment, [[1.0]])
    np.testing.assert_array_equal(result.grad, [[0.0]])
    assert result.loss == 1.0
    np.testing.assert_array_equal(
        finite_diff_grad(np.array([[5.0]]), FAST), [[0.0]]
    )


def test_single_step_gradient_matches_hand_derivation():
    # One outer step, one cycle, 1x2: only the row projection acts, so
    # X1 = X0 - a*C + (a/2) * sum(C), and d(w . X1)/dC_j = -a*w_j + (a/2)*sum(w).
    cfg = SolverConfig(n_grad=1, n_proj=1, learning_rate=0.1)
    C = np.array([[0.3, 0.1]])

    _, result = solve_with_grad(C, cfg, loss_weights=np.array([[1.0, 0.0]]))
    np.testing.assert_allclose(result.grad, [[-0.05, 0.05]], rtol=0, atol=1e-15)

    _, result = solve_with_grad(C, cfg, loss_weights=np.array([[2.0, 5.0]]))
    np.testing.assert_allclose(result.grad, [[0.15, -0.15]], rtol=0, atol=1e-15)


def test_row_constraint_forces_zero_row_sums_in_the_gradient():
    C = np.array([[0.0, 1.0], [1.0, 0.0]])
    report, result = solve_with_grad(C, FAST, loss_weights=np.ones((2, 2)))
    # loss = sum(assignment) = number of rows on the feasible set, so the
    # gradient can only point along directions that leave row sums fixed
    # (the truncated inner loop leaves the row sums ~1e-3 off exactly 1,
    # hence the loose loss check; the gradient structure is what matters)
    assert result.loss == pytest.approx(2.0, abs=0.01)
    np.testing.assert_allclose(
        result.grad.sum(axis=1), [0.0, 0.0], rtol=0, atol=1e-12
    )


def test_gradient_matches_finite_differences_on_random_instances():
    rng = make_rng(0)
    for _ in range(3):
        C = rng.random((3, 6))
        weights = rng.normal(size=(3, 6))
        report = gradcheck(C, FAST, loss_weights=weights)
        assert report.max_rel_error <= 1e-4
        assert report.n_checked + report.n_excluded == 18
        assert report.base_min_slack > 0


def test_direct_finite_difference_agreement_without_exclusions():
    rng = make_rng(3)
    C = rng.random((3, 6))
    weights = rng.normal(size=(3, 6))
    _, result = solve_with_grad(C, FAST, loss_weights=weights)
    numeric = finite_diff_grad(C, FAST, loss_weights=weights)
    denom = np.maximum(np.maximum(np.abs(result.grad), np.abs(numeric)), 1e-6)
    assert (np.abs(result.grad - numeric) / denom).max() <= 1e-4


def test_forward_pass_is_the_solver_verbatim():
    C = make_rng(1).random((3, 7))
    report, _ = solve_with_grad(C, FAST)
    direct = solve(C, FAST)
    np.testing.assert_array_equal(report.assignment, direct.assignment)
    assert report.objective_trace == direct.objective_trace


def test_gradient_is_linear_in_the_loss_weights():
    rng = make_rng(2)
    C = rng.random((3, 6))
    w1 = rng.normal(size=(3, 6))
    w2 = rng.normal(size=(3, 6))
    _, g1 = solve_with_grad(C, FAST, loss_weights=w1)
    _, g2 = solve_with_grad(C, FAST, loss_weights=w2)
    _, g12 = solve_with_grad(C, FAST, loss_weights=w1 + w2)
    np.testing.assert_allclose(g12.grad, g1.grad + g2.grad, rtol=0, atol=1e-12)
    assert g12.loss == pytest.approx(g1.loss + g2.loss, abs=1e-12)


def test_first_order_prediction_holds_under_tiny_perturbations():
    from matchkit.autodiff import tape_signature

    rng = make_rng(4)
    C = rng.random((3, 6))
    weights = rng.normal(size=(3, 6))
    _, result = solve_with_grad(C, FAST, loss_weights=weights)

    delta = 1e-7 * rng.normal(size=(3, 6))
    tape_a, tape_b = [], []
    solve(C, FAST, tape=tape_a)
    report_b = solve(C + delta, FAST, tape=tape_b)
    # the perturbation is far below every branch slack, so the map is affine
    # on the segment and the first-order prediction is exact
    assert tape_signature(tape_a) == tape_signature(tape_b)
    loss_b = float((weights * report_b.assignment).sum())
    predicted = result.loss + float((result.grad * delta).sum())
    assert loss_b == pytest.approx(predicted, abs=1e-12)


def test_gradients_are_deterministic_and_finite():
    C = make_rng(5).random((3, 6))
    _, a = solve_with_grad(C, FAST)
    _, b = solve_with_grad(C, FAST)
    np.testing.assert_array_equal(a.grad, b.grad)
    assert a.loss == b.loss
    assert np.isfinite(a.grad).all()
    assert a.grad.shape == C.shape


def test_masked_probe_reads_the_masked_output():
    rng = make_rng(6)
    C = rng.random((3, 6))
    weights = rng.normal(size=(3, 6))
    report, result = solve_with_grad(
        C, FAST, loss_weights=weights, probe_masked=True
    )
    assert result.loss == pytest.approx(
        float((weights * report.masked_assignment).sum()), abs=1e-12
    )
    check = gradcheck(C, FAST, loss_weights=weights, probe_masked=True)
    assert check.max_rel_error <= 1e-4


def test_include_init_window_differentiates_correctly():
    cfg = SolverConfig(n_grad=5, n_proj=3, average_mode="include-init")
    C = make_rng(7).random((2, 5))
    report = gradcheck(C, cfg)
    assert report.max_rel_error <= 1e-4


def test_smallest_unroll_matches_finite_differences():
    cfg = SolverConfig(n_grad=1, n_proj=1, learning_rate=0.1)
    C = make_rng(8).random((2, 4))
    report = gradcheck(C, cfg)
    assert report.max_rel_error <= 1e-4


def test_weight_shape_mismatch_is_rejected():
    C = np.array([[1.0, 2.0]])
    with pytest.raises(ValueError):
        solve_with_grad(C, FAST, loss_weights=np.ones((2, 2)))


def test_nonpositive_difference_step_is_rejected():
    C = np.array([[1.0, 2.0]])
    with pytest.raises(ValueError):
        finite_diff_grad(C, FAST, step=0.0)
    with pytest.raises(ValueError):
        gradcheck(C, FAST, step=-1e-5)
