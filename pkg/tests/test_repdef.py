import numpy as np
import pytest

from qhm.algebra import AlgebraElement, ModelParams, norm_111
from qhm.errors import PreconditionError, SupportViolation, WindowOverflow
from qhm.repdef import (GridState, WeaverOp, adjoint_residual, check_homomorphism,
                        gaussian_state, operator_norm_estimate, pi_apply, smooth_state,
                        weaver_commutator_norm, young_bound_gap, zero_state)

P = ModelParams(c=1, hbar=0.13, mu=0.37, nu=0.21, alpha=2.0)


@pytest.fixture
def xi():
    return smooth_state(6, 96, 16, 4, np.random.default_rng(0), p_range=1, width=0.4)


A = AlgebraElement({(1, 0, 1): 0.6, (0, 1, 0): 0.3j, (-1, 1, -1): 0.2})
B = AlgebraElement({(0, -1, 1): 1.0, (2, 0, 0): -0.4})


def test_homomorphism(xi):
    assert check_homomorphism(A, B, xi, P) < 1e-12


def test_adjoint(xi):
    assert adjoint_residual(A, xi, P) < 1e-12


def test_window_overflow(xi):
    big = AlgebraElement.basis(0, 0, 4)
    with pytest.raises(WindowOverflow):
        pi_apply(big, xi, P)
    pi_apply(big, xi, P, strict=False)


def test_unit_acts_as_identity(xi):
    out = pi_apply(AlgebraElement.one(), xi, P)
    assert np.abs(out.samples - xi.samples).max() == 0


@pytest.mark.parametrize("op", [WeaverOp.W(1), WeaverOp.W(-2), WeaverOp.X(1), WeaverOp.X(-1),
                                WeaverOp.V(lambda x, y: np.cos(2 * np.pi * y) + x ** 2)])
def test_weaver_commutation(xi, op):
    assert weaver_commutator_norm(A, op, xi, P) < 1e-12


def test_weaver_support_guard():
    st = gaussian_state(2, 32, 8, 2, np.random.default_rng(1))
    with pytest.raises(SupportViolation):
        weaver_commutator_norm(A, WeaverOp.W(1), st, P)


def test_young_bound(xi):
    assert operator_norm_estimate(A, xi, P) <= norm_111(A, P) + 1e-9
    assert young_bound_gap(A, xi, P) >= -1e-9


def test_state_roundtrip(tmp_path, xi):
    path = tmp_path / "state.bin"
    xi.save(path)
    back = GridState.load(path)
    assert back.L == xi.L and np.array_equal(back.samples, xi.samples)


def test_zero_state_norm():
    assert zero_state(1, 8, 4, 1).norm() == 0
