import numpy as np
import pytest

from qhm import ktheory as K
from qhm.algebra import ModelParams, Window
from qhm.dirac import build
from qhm.errors import KappaViolation, PreconditionError, SingularBase, UnresolvedCrossing

P = ModelParams()


@pytest.fixture(scope="module")
def base():
    return build(P, Window(4, 4, 4), 0.0)


def test_interpolation_bound_symmetry(base):
    for kind in K.PATH_KINDS:
        a0 = K.interpolation_bound(base, kind, 0.0)
        a1 = K.interpolation_bound(base, kind, 1.0)
        assert a0 == pytest.approx(a1, rel=1e-10)
        assert K.interpolation_bound(base, kind, 0.5) <= a0 + 1e-8
    assert K.interpolation_bound(base, "alpha", 0.0) == pytest.approx(1 / P.alpha)


def test_interpolation_errors(base):
    with pytest.raises(PreconditionError):
        K.interpolation_bound(base, "s", 1.5)
    with pytest.raises(PreconditionError):
        K.interpolation_bound(base, "nope", 0.5)
    # shifting by the negative of an eigenvalue makes a charged block singular
    lam = 2 * np.pi * P.c * P.alpha
    with pytest.raises(SingularBase):
        K.interpolation_bound(base, "alpha", 0.5, kappa=lam)


def test_choose_kappa(base):
    kc = K.choose_kappa(base, 0.5)
    assert kc["n"] == 3 and kc["b"] == pytest.approx(0.75)
    assert 0 < kc["kappa"] < kc["smallest_positive"]
    K.check_kappa(base, kc["kappa"])
    with pytest.raises(KappaViolation):
        K.check_kappa(base, kc["smallest_positive"])
    with pytest.raises(PreconditionError):
        K.choose_kappa(base, 1.0)


@pytest.mark.parametrize("kind", K.PATH_KINDS)
def test_homotopy_continuity(base, kind):
    a = K.interpolation_bound(base, kind, 0.0)
    kappa = K.choose_kappa(base, a)["kappa"]
    path = K.HomotopyPath(base, kind, np.linspace(0, 1, 11), kappa)
    out = K.homotopy_continuity(path, a, workers=2)
    assert out["ok"]
    assert path.endpoint_defect() < 1e-12


def test_arctan_spectrum_in_unit_interval(base):
    f = K._arctan_calculus(base.blocks[(1, 1)], 0.3)
    w = np.linalg.eigvalsh(f)
    assert np.all(np.abs(w) < 1)


def test_path_validation(base):
    with pytest.raises(PreconditionError):
        K.HomotopyPath(base, "s", np.array([0.0, 0.5, 0.4]))
    with pytest.raises(PreconditionError):
        K.HomotopyPath(build(P, Window(1, 1, 1), 1.0), "s", np.linspace(0, 1, 3))


def test_projection_properties(base):
    E = K.spectral_projection(base)
    for key, Pm in E.items():
        assert np.abs(Pm @ Pm - Pm).max() < 1e-12
        assert np.abs(Pm - Pm.conj().T).max() < 1e-12
    assert K.u2_commutator(base, E) == 0.0
    nu = ModelParams(nu=0.21)
    b2 = build(nu, Window(2, 3, 2), 1.0)
    assert K.u2_commutator(b2, K.spectral_projection(b2)) < 1e-14


def test_conjugation_identity():
    assert K.conjugation_defect(build(P, Window(2, 6, 2), 1.0)) < 1e-12


def test_flow_additivity_and_endpoints():
    N = 6
    d = build(P, Window(1, N, 1), 1.0)
    B = K.index_perturbation(N)
    for key in d.keys():
        A = d.blocks[key]
        total, _ = K.block_flow(A, B, 0.0, 1.0, 8, key)
        left, _ = K.block_flow(A, B, 0.0, 0.5, 4, key)
        right, _ = K.block_flow(A, B, 0.5, 1.0, 4, key)
        assert total == left + right


def test_gapped_blocks_have_no_flow():
    d = build(P, Window(2, 8, 2), 1.0)
    for key, flow, log, gap in K.flow_all_blocks(d, steps=8):
        if gap > 2 * np.pi:
            assert flow == 0 and not log


def test_unresolved_crossing():
    A = np.zeros((2, 2))
    with pytest.raises(UnresolvedCrossing):
        K.block_flow(A, np.zeros((2, 2)), steps=2)


def test_simple_flow_count():
    A = np.diag([-1.0, 2.0])
    B = np.diag([2.0, 0.0])
    flow, log = K.block_flow(A, B, steps=4)
    assert flow == 1 and log[0].direction == 1 and log[0].t == pytest.approx(0.5)


def test_index_small_windows():
    res = K.index_pairing(P, Window(1, 8, 1), alphas=(1.5, 2.0), steps=8)
    assert res.stable
    assert res.value == sum(res.per_block.values())
    assert res.kernel_check["0,0"] == res.per_block[(0, 0)]
    doc = res.to_dict()
    assert doc["expected_nonzero"] is True
    assert doc["agreement"] in ("agree", "discrepancy")


def test_compression_index_block00():
    d = build(P, Window(0, 10, 1), 0.0)
    assert K.compression_index(d, (0, 0)) == 0
