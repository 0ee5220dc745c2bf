import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhm.algebra import AlgebraElement, ModelParams, Window, derivation, star, trace
from qhm.errors import DegreeMismatch, PreconditionError
from qhm.forms import (QUOTIENT_RANK, CliffordForm, UniversalForm, comm_D, differential,
                       form_inner, j1_witness, j2_witnesses, j3_witnesses, junk_project,
                       random_j1_witness, represent, sigma_form, valued_inner)
from qhm.spin import LABELS, PRODUCT

P = ModelParams()
W = Window(6, 12, 4)
TWO_PI_I = 2j * math.pi


def phi(m, n, k=0):
    return AlgebraElement.basis(m, n, k)


def test_pinned_spin_products():
    assert PRODUCT[1, 2] == (3, -1j)
    assert PRODUCT[2, 3] == (1, -1j)
    assert PRODUCT[3, 1] == (2, -1j)
    for j in (1, 2, 3):
        assert PRODUCT[j, j] == (0, 1)


def test_comm_D_examples():
    f = comm_D(phi(0, 1), P)
    assert f["s2"].distance(TWO_PI_I * phi(0, 1)) == 0
    assert not f["s1"] and not f["s3"] and not f["I"]
    assert comm_D(AlgebraElement.one(), P).is_zero()
    g = comm_D(phi(1, 0), P)
    assert g["s1"].distance(TWO_PI_I * phi(1, 0)) == 0


def test_shape_invariants():
    with pytest.raises(PreconditionError):
        CliffordForm(0, {"s1": phi(0, 0)})
    with pytest.raises(PreconditionError):
        CliffordForm(1, {"I": phi(0, 0)})
    with pytest.raises(KeyError):
        CliffordForm(2, {"x": phi(0, 0)})


def test_represent_degree_zero():
    f = represent(UniversalForm.term(phi(1, 1)), P)
    assert f.degree == 0 and f["I"].distance(phi(1, 1)) == 0


def test_sigma_reduction_cross_terms():
    w = UniversalForm.exact(phi(1, 0), phi(0, 1))
    f = represent(w, P)
    # (2 pi i)^2 phi_{1,1} sigma_1 sigma_2 = (2 pi i)^2 (-i) phi_{1,1} sigma_3
    assert f["s3"][(1, 1, 0)] == pytest.approx(TWO_PI_I ** 2 * -1j)
    assert not f["I"]


def test_j1_witness():
    w = j1_witness()
    assert represent(w, P).is_zero()
    dw = represent(differential(w), P)
    assert dw["I"].distance(TWO_PI_I ** 2 * 2 * phi(0, 3)) < 1e-10
    assert dw.sigma_max_abs() == 0


def test_j2_witnesses():
    ws = j2_witnesses()
    for w in ws.values():
        assert represent(w, P, W).max_abs() < 1e-10
    d1 = represent(differential(ws["w1"]), P, W)
    assert d1["s2"].distance(TWO_PI_I ** 3 * 2 * phi(0, 4)) < 1e-9
    d2 = represent(differential(ws["w2"]), P, W)
    assert d2["s1"].distance(TWO_PI_I ** 3 * 2 * phi(4, 0)) < 1e-9
    d3 = represent(differential(ws["w3"]), P, W)
    ph = phi(0, 0, 1)
    dphi = comm_D(ph, P, W)
    for lab in ("s1", "s2", "s3"):
        want = TWO_PI_I ** 2 * 2 * star(phi(0, 3), dphi[lab], P)
        assert d3[lab].distance(want) < 1e-9
    assert d3["s3"]  # delta_3 direction hit
    assert junk_project(d3).nonzero_labels() == []  # degree-3 quotient keeps I only


def test_j3_witnesses_land_in_degree_four():
    for w in j3_witnesses().values():
        assert represent(w, P, W).max_abs() < 1e-9
        f = represent(differential(w), P, W)
        assert f.degree == 4
        assert junk_project(f).is_zero()
    f1 = represent(differential(j3_witnesses()["w1"]), P, W)
    assert f1["I"].distance(TWO_PI_I ** 4 * 2 * phi(0, 5)) < 1e-8


def test_random_j1_junk():
    rng = np.random.default_rng(0)
    for _ in range(5):
        w = random_j1_witness(rng, P)
        assert represent(w, P).max_abs() < 1e-10
        assert represent(differential(w), P).sigma_max_abs() < 1e-10


def test_differential_squares_to_zero():
    w = UniversalForm.term(phi(1, 2), phi(0, 1))
    assert represent(differential(differential(w)), P).is_zero()
    d = differential(UniversalForm.term(phi(1, 0), phi(0, 1)))
    assert d.degree == 2 and len(d.terms) == 1


def test_multiplicativity_charge_zero():
    a, b, c = phi(1, 0) + 2j * phi(0, 1), phi(1, 1), phi(0, -1) + 0.5 * phi(2, 0)
    w1, w2 = UniversalForm.term(a, b), UniversalForm.term(c, a, b)
    lhs = represent(w1.mul(w2, P), P)
    rhs = represent(w1, P).mul(represent(w2, P), P)
    assert (lhs - rhs).max_abs() < 1e-10


def test_multiplicativity_charged_interior():
    a, b = phi(1, 0, 1), phi(0, 1, 0)
    w1, w2 = UniversalForm.term(b, a), UniversalForm.term(a, b)
    big = Window(4, 80, 3)
    lhs = represent(w1.mul(w2, P), P, big)
    rhs = represent(w1, P, big).mul(represent(w2, P, big), P)
    inner = Window(4, 20, 3)
    assert max((lhs[l] - rhs[l]).restrict(inner).max_abs() for l in LABELS) < 1e-10


def test_junk_project_ladder():
    full = {l: phi(0, 0) for l in LABELS}
    for d in range(6):
        f = CliffordForm(d, full if d >= 2 else ({"I": phi(0, 0)} if d == 0 else
                                                 {l: phi(0, 0) for l in LABELS[1:]}))
        assert len(junk_project(f).nonzero_labels()) == QUOTIENT_RANK.get(d, 0)
    f = CliffordForm(2, {"I": phi(1, 0), "s1": phi(0, 1)})
    g = junk_project(f)
    assert not g["I"] and g["s1"].distance(phi(0, 1)) == 0
    with pytest.raises(PreconditionError):
        junk_project(CliffordForm(6, {}))


def test_form_inner_examples():
    s1, s2 = sigma_form(1), sigma_form(2)
    assert form_inner(s1, s1) == 1
    assert form_inner(s1, s2) == 0
    a = sigma_form(3, phi(1, 2, 1))
    b = sigma_form(3, phi(1, 2, 1))
    c = sigma_form(3, phi(0, 2, 1))
    assert form_inner(a, b) == 1 and form_inner(a, c) == 0
    with pytest.raises(DegreeMismatch):
        form_inner(s1, CliffordForm.zero(2))


def test_valued_inner():
    assert valued_inner(sigma_form(1), sigma_form(1), P).distance(AlgebraElement.one()) == 0
    a, b = phi(1, 0, 1) + phi(0, 1), phi(0, 1, -1)
    f, g = sigma_form(1, a), sigma_form(1, b)
    from qhm.algebra import involution
    assert valued_inner(f, g, P).distance(star(a, involution(b), P)) == 0


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(-2, 2), st.integers(-2, 2),
                          st.integers(-1, 1), st.floats(-2, 2), st.floats(-2, 2)),
                min_size=1, max_size=6))
@settings(max_examples=40, deadline=None)
def test_inner_product_positivity(terms):
    comps = {l: AlgebraElement() for l in LABELS}
    for lab, m, n, k, re, im in terms:
        comps[LABELS[lab]] = comps[LABELS[lab]] + AlgebraElement.basis(m, n, k, complex(re, im))
    f = CliffordForm(2, comps)
    val = form_inner(f, f)
    assert val.real >= -1e-12 and abs(val.imag) < 1e-12
    assert (val.real <= 1e-24) == f.is_zero(1e-12)
    assert abs(trace(valued_inner(f, f, P)) - val) < 1e-10


def test_form_json_roundtrip():
    f = CliffordForm(2, {"I": phi(1, 0), "s3": phi(0, 1, 1, )})
    doc = f.to_json()
    assert set(doc["components"]) == set(LABELS)
    assert (CliffordForm.from_json(doc) - f).is_zero()


def test_universal_degree_check():
    with pytest.raises(DegreeMismatch):
        UniversalForm(((phi(0, 0), (phi(1, 0),)), (phi(0, 0), ())))
    with pytest.raises(PreconditionError):
        represent(UniversalForm.exact(*[phi(0, 1)] * 6), P)
