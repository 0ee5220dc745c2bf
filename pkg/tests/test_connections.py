import numpy as np
import pytest

from qhm.algebra import AlgebraElement, ModelParams, Window, derivation, star
from qhm.connections import (Connection, curvature, fg_closed_forms, fg_connection,
                             incompatibility_check, is_torsionless, is_unitary, left_sigma,
                             left_sigma_adjoint, perturb, pointwise_scalar_check,
                             random_torsionless, random_unitary, right_sigma_adjoint, torsion,
                             torsion_on_generator, torsion_vanishes, trig_element,
                             unitarity_defect)
from qhm.errors import SupportViolation
from qhm.algebra import gns_inner
from qhm.forms import CliffordForm, form_inner
from qhm.spin import LABELS

P = ModelParams()
ONE = AlgebraElement.one()


def pattern_witness():
    con = Connection.zero()
    con.gamma[2][0][1] = -1.0 * ONE
    return con


def test_zero_connection():
    z = Connection.zero()
    assert not is_torsionless(z)
    assert torsion_on_generator(z, 3, P)["s3"].distance(1j * ONE) == 0
    assert is_unitary(z)
    cd = curvature(z, P)
    assert cd.scalar.max_abs() == 0
    assert all(f.is_zero() for row in cd.R for f in row)


def test_torsionless_witness():
    con = pattern_witness()
    assert is_torsionless(con)
    assert torsion_vanishes(con, P)


def test_pattern_agrees_with_definition():
    rng = np.random.default_rng(7)
    for _ in range(10):
        c = random_torsionless(rng)
        assert bool(is_torsionless(c)) == torsion_vanishes(c, P) == True  # noqa: E712
        q = perturb(c, rng)
        assert bool(is_torsionless(q)) == torsion_vanishes(q, P) == False  # noqa: E712
        u = random_unitary(rng)
        assert is_unitary(u) and unitarity_defect(u) < 1e-12
        v = perturb(u, rng)
        assert not is_unitary(v) and unitarity_defect(v) > 1e-3


def test_torsion_is_tensorial():
    rng = np.random.default_rng(1)
    con = random_torsionless(rng)
    con = perturb(con, rng)
    a = {j: AlgebraElement({(int(rng.integers(-2, 3)), int(rng.integers(-2, 3)), 0): 1.0 + j})
         for j in (1, 2, 3)}
    omega = CliffordForm(1, {LABELS[j]: a[j] for j in (1, 2, 3)})
    lhs = torsion(con, omega, P)
    rhs = CliffordForm.zero(2)
    for j in (1, 2, 3):
        rhs = rhs + torsion_on_generator(con, j, P).left(a[j], P)
    assert (lhs - rhs).max_abs() < 1e-12


def test_incompatibility():
    proof = incompatibility_check()
    assert not proof.feasible
    assert proof.v_equals_p and proof.v_minus_p == -1.0
    assert proof.drop_torsion_feasible and proof.drop_unitary_feasible


def test_fg_connection_checks():
    f = trig_element([(1, 1.0, 0.0)], 0)
    g = trig_element([(2, 0.0, 1.0)], 1)
    with pytest.raises(SupportViolation):
        fg_connection(g, g, P)
    with pytest.raises(SupportViolation):
        fg_connection(AlgebraElement.basis(1, 0, 0, 1j), g, P)
    zero = fg_connection(AlgebraElement(), AlgebraElement(), P)
    assert curvature(zero, P).scalar.max_abs() == 0
    # the fg-family satisfies the cyclic unitarity rule
    assert is_unitary(fg_connection(f, g, P))


def test_cos_derivative():
    f = trig_element([(1, 1.0, 0.0)], 0)
    fp = derivation(1, f, P)
    assert fp[(1, 0, 0)] == pytest.approx(np.pi * 1j)
    assert fp[(-1, 0, 0)] == pytest.approx(-np.pi * 1j)
    x = np.linspace(0, 1, 11)
    from qhm.algebra import evaluate
    assert np.abs(evaluate(fp, x, 0 * x, 0, P) + 2 * np.pi * np.sin(2 * np.pi * x)).max() < 1e-12


def test_fg_curvature_entries():
    f = trig_element([(1, 1.0, 0.3), (2, 0.2, 0.0)], 0)
    g = trig_element([(1, 0.0, 1.0), (3, 0.5, 0.1)], 1)
    cd = curvature(fg_connection(f, g, P), P)
    cf = fg_closed_forms(f, g, P)
    f1, f2, g1, g2 = cf["f1"], cf["f2"], cf["g1"], cf["g2"]
    sq = lambda a: star(a, a, P)  # noqa: E731
    prod = star(sq(f1), sq(g1), P)
    f1g2 = star(f1, g2, P)
    assert cd.R[0][0]["s3"].distance(1j * star(f2, g1, P)) < 1e-9
    assert cd.R[0][1]["s3"].distance(1j * (prod - f1g2)) < 1e-9
    assert cd.R[1][0]["s3"].distance(-1j * (f1g2 + prod)) < 1e-9
    for i, j in [(0, 2), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)]:
        assert cd.R[i][j].is_zero(1e-9)
    for row in cd.R:
        for r in row:
            assert not r["I"]
    assert cd.Ric[0]["s2"].distance(-1.0 * star(f2, g1, P)) < 1e-9
    assert cd.Ric[0]["s1"].distance(-1.0 * (f1g2 + prod)) < 1e-9
    assert cd.Ric[1]["s2"].distance(f1g2 - prod) < 1e-9
    assert cd.scalar.distance(cf["scalar"]) < 1e-10


def test_scalar_alpha_independent():
    f = trig_element([(1, 0.4, 0.9)], 0)
    g = trig_element([(2, 1.0, 0.0)], 1)
    ref = curvature(fg_connection(f, g, P), P).scalar.to_json()
    for alpha in (1.5, 4.0):
        p = P.with_alpha(alpha)
        assert curvature(fg_connection(f, g, p), p).scalar.to_json() == ref


def test_pointwise_table():
    f = trig_element([(1, 1.0, 0.0)], 0)
    g = trig_element([(1, 0.0, 1.0)], 1)
    cd = curvature(fg_connection(f, g, P), P)
    rng = np.random.default_rng(0)
    tab = pointwise_scalar_check(cd.scalar, f, g, P, rng.random(20), rng.random(20))
    assert tab.shape == (20, 5) and tab[:, 4].max() < 1e-9


def _rand_form(rng, degree, labels):
    comps = {}
    for l in labels:
        comps[l] = AlgebraElement({(int(rng.integers(-2, 3)), int(rng.integers(-2, 3)), 0):
                                   complex(rng.normal(), rng.normal())})
    return CliffordForm(degree, comps)


def test_multiplication_adjoints():
    rng = np.random.default_rng(9)
    for i in (1, 2, 3):
        x = _rand_form(rng, 1, LABELS[1:])
        y = _rand_form(rng, 2, LABELS[1:])
        lhs = form_inner(left_sigma(i, x, P), y)
        rhs = form_inner(x, left_sigma_adjoint(i, y, P))
        assert abs(lhs - rhs) < 1e-12
        a = AlgebraElement({(1, 1, 0): complex(rng.normal(), rng.normal())})
        z = _rand_form(rng, 1, LABELS[1:])
        from qhm.forms import sigma_form
        lhs = form_inner(sigma_form(i, a), z)
        rhs = gns_inner(a, right_sigma_adjoint(i, z, P))
        assert abs(lhs - rhs) < 1e-12


def test_connection_json_roundtrip():
    con = pattern_witness()
    back = Connection.from_json(con.to_json())
    assert back.entry(3, 1, 2).distance(-1.0 * ONE) == 0
