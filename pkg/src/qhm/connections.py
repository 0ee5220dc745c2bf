"""Connections on the free module of one-forms spanned by sigma_1, sigma_2, sigma_3.

A connection is fixed by its values on the generators,

    nabla(sigma_i) = sum_{k,l} Gamma^i_{kl} sigma_k (x) sigma_l,

with k the form slot and l the module slot.  ``gamma[i-1][k-1][l-1]`` holds
Gamma^i_{kl}.  All results are computed on coefficient maps; for charge-zero
entries every operation is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import (AlgebraElement, ModelParams, Window, derivation, evaluate,
                      involution, star)
from .errors import SupportViolation
from .forms import CliffordForm, comm_D, junk_project, sigma_form, _raw_form
from .spin import LABELS

Matrix = List[List[AlgebraElement]]
GENERATORS = (1, 2, 3)
# normalisation of d(sigma_3) = -bracket * sigma_1 sigma_2 in the pattern checks
DEFAULT_BRACKET = 1.0


def _zero_matrix() -> Matrix:
    return [[AlgebraElement() for _ in range(3)] for _ in range(3)]


@dataclass(frozen=True)
class Connection:
    gamma: Tuple[Matrix, Matrix, Matrix]

    @classmethod
    def zero(cls) -> "Connection":
        return cls((_zero_matrix(), _zero_matrix(), _zero_matrix()))

    @classmethod
    def from_scalars(cls, arr) -> "Connection":
        """Connection whose entries are scalar multiples of the unit, arr[i-1, k-1, l-1]."""
        arr = np.asarray(arr, dtype=complex)
        one = AlgebraElement.one()
        return cls(tuple([[complex(arr[i, k, l]) * one for l in range(3)] for k in range(3)]
                         for i in range(3)))

    def entry(self, i: int, k: int, l: int) -> AlgebraElement:
        """Gamma^i_{kl} with 1-based indices."""
        return self.gamma[i - 1][k - 1][l - 1]

    def connection_form(self, i: int, l: int) -> CliffordForm:
        """omega^i_l = sum_k Gamma^i_{kl} sigma_k, so nabla(e_i) = sum_l omega^i_l (x) e_l."""
        return CliffordForm(1, {LABELS[k]: self.entry(i, k, l) for k in GENERATORS})

    def map_entries(self, fn: Callable[[AlgebraElement], AlgebraElement]) -> "Connection":
        return Connection(tuple([[fn(x) for x in row] for row in g] for g in self.gamma))

    def to_json(self) -> dict:
        return {"gamma": [[[x.to_json() for x in row] for row in g] for g in self.gamma]}

    @classmethod
    def from_json(cls, doc) -> "Connection":
        return cls(tuple([[AlgebraElement.from_json(x) for x in row] for row in g]
                         for g in doc["gamma"]))


def generator_differential(j: int, bracket: float = DEFAULT_BRACKET) -> CliffordForm:
    """d(sigma_j) in degree 2: zero for j = 1, 2 and -bracket * sigma_1 sigma_2 for j = 3."""
    if j == 3:
        # sigma_1 sigma_2 = -i sigma_3
        return sigma_form(3, (1j * bracket) * AlgebraElement.one(), degree=2)
    return CliffordForm.zero(2)


def multiply_out(nabla: Connection, i: int, params: ModelParams) -> CliffordForm:
    """m(nabla(sigma_i)) = sum Gamma^i_{kl} sigma_k sigma_l."""
    out = _raw_form(2, {})
    for k in GENERATORS:
        for l in GENERATORS:
            a = nabla.entry(i, k, l)
            if a:
                out = out + sigma_form(k, a).mul(sigma_form(l), params)
    return out


def torsion_on_generator(nabla: Connection, i: int, params: ModelParams,
                         bracket: float = DEFAULT_BRACKET) -> CliffordForm:
    return junk_project(generator_differential(i, bracket) - multiply_out(nabla, i, params))


def torsion(nabla: Connection, omega: CliffordForm, params: ModelParams,
            window: Optional[Window] = None, bracket: float = DEFAULT_BRACKET) -> CliffordForm:
    """T(omega) = d(omega) - m(nabla omega) for omega = sum_j a_j sigma_j.

    Both sides are expanded with the Leibniz rule, including the da_j terms
    that cancel between them.
    """
    total = _raw_form(2, {})
    for j in GENERATORS:
        a = omega[LABELS[j]]
        if not a:
            continue
        da = comm_D(a, params, window)
        d_omega = da.mul(sigma_form(j), params) + generator_differential(j, bracket).left(a, params)
        # nabla(a sigma_j) = da (x) sigma_j + a nabla(sigma_j)
        m_nabla = da.mul(sigma_form(j), params) + multiply_out(nabla, j, params).left(a, params)
        total = total + (d_omega - m_nabla)
    return junk_project(total)


def _close(a: AlgebraElement, b: AlgebraElement, tol: float) -> bool:
    return (a - b).max_abs() <= tol


@dataclass
class PatternResult:
    ok: bool
    violations: List[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


def is_torsionless(nabla: Connection, bracket: float = DEFAULT_BRACKET,
                   tol: float = 1e-12) -> PatternResult:
    """Pattern check: Gamma^1, Gamma^2 symmetric; Gamma^3 symmetric except
    Gamma^3_{12} - Gamma^3_{21} = -bracket."""
    bad = []
    one = AlgebraElement.one()
    for i in GENERATORS:
        for k, l in ((1, 2), (1, 3), (2, 3)):
            offset = -bracket * one if (i, k, l) == (3, 1, 2) else AlgebraElement()
            diff = nabla.entry(i, k, l) - nabla.entry(i, l, k)
            if not _close(diff, offset, tol):
                bad.append(f"Gamma^{i}_{k}{l} - Gamma^{i}_{l}{k} = {diff!r}, expected {offset!r}")
    return PatternResult(not bad, bad)


def torsion_vanishes(nabla: Connection, params: ModelParams, bracket: float = DEFAULT_BRACKET,
                     tol: float = 1e-12) -> bool:
    """Direct check: T(sigma_i) = 0 for every generator."""
    return all(torsion_on_generator(nabla, i, params, bracket).max_abs() <= tol for i in GENERATORS)


def is_unitary(nabla: Connection, tol: float = 1e-12) -> PatternResult:
    """Pattern check: row j of Gamma^i is the entrywise star of column i of Gamma^j,
    i.e. Gamma^i_{jl} = (Gamma^j_{li})^*."""
    bad = []
    for i in GENERATORS:
        for j in GENERATORS:
            for l in GENERATORS:
                lhs = nabla.entry(i, j, l)
                rhs = involution(nabla.entry(j, l, i))
                if not _close(lhs, rhs, tol):
                    bad.append(f"Gamma^{i}_{j}{l} != (Gamma^{j}_{l}{i})^*")
    return PatternResult(not bad, bad)


def _pair_left(nabla: Connection, i: int, j: int) -> CliffordForm:
    # <nabla sigma_i, sigma_j>: the form slot is paired with sigma_j
    return CliffordForm(1, {LABELS[l]: nabla.entry(i, j, l) for l in GENERATORS})


def _pair_right(nabla: Connection, i: int, j: int) -> CliffordForm:
    # <sigma_i, nabla sigma_j>: the module slot is paired with sigma_i, result starred
    return CliffordForm(1, {LABELS[k]: involution(nabla.entry(j, k, i)) for k in GENERATORS})


def unitarity_defect(nabla: Connection) -> float:
    """max over generator pairs of |d<e_i, e_j> - <nabla e_i, e_j> + <e_i, nabla e_j>|.

    The generators are orthonormal, so d<e_i, e_j> = 0.
    """
    worst = 0.0
    for i in GENERATORS:
        for j in GENERATORS:
            worst = max(worst, (_pair_left(nabla, i, j) - _pair_right(nabla, i, j)).max_abs())
    return worst


# ---------------------------------------------------------------------------
# incompatibility of the two conditions
# ---------------------------------------------------------------------------

def _flat(i: int, k: int, l: int) -> int:
    return 9 * (i - 1) + 3 * (k - 1) + (l - 1)


def _constraints(unitary: bool, torsionless: bool, bracket: float):
    """Real affine constraints A x = b on x = (Re Gamma, Im Gamma) in R^54."""
    rows, rhs = [], []

    def row(pairs, value=0.0, imag=False):
        r = np.zeros(54)
        for idx, coeff in pairs:
            r[idx + (27 if imag else 0)] += coeff
        rows.append(r)
        rhs.append(value)

    if unitary:
        for i in GENERATORS:
            for j in GENERATORS:
                for l in GENERATORS:
                    a, b = _flat(i, j, l), _flat(j, l, i)
                    row([(a, 1.0), (b, -1.0)])
                    row([(a, 1.0), (b, 1.0)], imag=True)
    if torsionless:
        for i in GENERATORS:
            for k, l in ((1, 2), (1, 3), (2, 3)):
                off = -bracket if (i, k, l) == (3, 1, 2) else 0.0
                row([(_flat(i, k, l), 1.0), (_flat(i, l, k), -1.0)], off)
                row([(_flat(i, k, l), 1.0), (_flat(i, l, k), -1.0)], imag=True)
    return np.array(rows), np.array(rhs)


@dataclass
class IncompatibilityProof:
    feasible: bool
    residual: float
    v_equals_p: bool
    v_minus_p: float
    chain: List[str]
    drop_torsion_feasible: bool
    drop_unitary_feasible: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _residual(A, b) -> float:
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return float(np.linalg.norm(A @ x - b))


def incompatibility_check(bracket: float = DEFAULT_BRACKET, tol: float = 1e-10) -> IncompatibilityProof:
    """Show that no connection with scalar entries is both torsionless and unitary.

    p = Gamma^3_{21} and v = Gamma^3_{12}.  The certificate is a combination of
    the homogeneous constraints (unitarity plus the symmetric part of
    torsionlessness) that equals v - p, proving v = p, while the torsion
    offset demands v - p = -bracket.  Since the constraints are linear with
    constant offsets, infeasibility for scalar entries is infeasibility in
    general (each Fourier coefficient satisfies the same system).
    """
    A, b = _constraints(True, True, bracket)
    res = _residual(A, b)
    v, p = _flat(3, 1, 2), _flat(3, 2, 1)
    target = np.zeros(54)
    target[v], target[p] = 1.0, -1.0
    Au, _ = _constraints(True, False, bracket)
    At, bt = _constraints(False, True, bracket)
    hom = np.vstack([Au, At[np.abs(bt) == 0]])
    y, *_ = np.linalg.lstsq(hom.T, target, rcond=None)
    implied = float(np.linalg.norm(hom.T @ y - target)) < tol
    chain = ["Gamma^3_12 = (Gamma^1_23)^*  (unitarity)",
             "Gamma^1_23 = Gamma^1_32      (torsionless, symmetric part)",
             "(Gamma^1_32)^* = Gamma^3_21  (unitarity)",
             "hence v = p, but torsionlessness requires v - p = -bracket"]
    return IncompatibilityProof(
        feasible=res <= tol, residual=res, v_equals_p=implied, v_minus_p=-bracket, chain=chain,
        drop_torsion_feasible=_residual(*_constraints(True, False, bracket)) <= tol,
        drop_unitary_feasible=_residual(*_constraints(False, True, bracket)) <= tol)


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------

def _rand_scalar_tensor(rng) -> np.ndarray:
    return rng.normal(size=(3, 3, 3)) + 1j * rng.normal(size=(3, 3, 3))


def random_torsionless(rng, bracket: float = DEFAULT_BRACKET) -> Connection:
    g = _rand_scalar_tensor(rng)
    g = 0.5 * (g + g.transpose(0, 2, 1))
    g[2, 0, 1] = g[2, 1, 0] - bracket
    return Connection.from_scalars(g)


def random_unitary(rng) -> Connection:
    """Cyclic orbits (i,j,l) -> (j,l,i) share one selfadjoint (here real) letter."""
    g = np.zeros((3, 3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            for l in range(3):
                if g[i, j, l] == 0:
                    v = rng.normal()
                    g[i, j, l] = g[j, l, i] = g[l, i, j] = v if v != 0 else 1.0
    return Connection.from_scalars(g)


def perturb(nabla: Connection, rng, size: float = 0.25) -> Connection:
    """Add a random non-real value to one random off-diagonal entry.

    Off-diagonal bumps break both the symmetry behind torsionlessness and
    the cyclic selfadjointness behind unitarity.
    """
    i = int(rng.integers(0, 3))
    k, l = (int(x) for x in rng.permutation(3)[:2])
    g = [[[x for x in row] for row in m] for m in nabla.gamma]
    bump = size * complex(1.0 + rng.random(), 1.0 + rng.random())
    g[i][k][l] = g[i][k][l] + bump * AlgebraElement.one()
    return Connection(tuple(g))


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

@dataclass
class CurvatureData:
    R: List[List[CliffordForm]]
    Ric: List[CliffordForm]
    scalar: AlgebraElement

    def to_json(self) -> dict:
        return {"R": [[f.to_json() for f in row] for row in self.R],
                "Ric": [f.to_json() for f in self.Ric],
                "scalar": self.scalar.to_json()}


def left_sigma_adjoint(i: int, form2: CliffordForm, params: ModelParams) -> CliffordForm:
    """Adjoint of x -> [sigma_i x] from one-forms to two-forms: sigma-part of sigma_i y."""
    prod = sigma_form(i).mul(form2, params)
    return CliffordForm(1, {l: prod[l] for l in LABELS[1:]})


def left_sigma(i: int, form1: CliffordForm, params: ModelParams) -> CliffordForm:
    """x -> [sigma_i x] in the degree-2 quotient."""
    return junk_project(sigma_form(i).mul(form1, params))


def right_sigma_adjoint(i: int, form1: CliffordForm, params: ModelParams) -> AlgebraElement:
    """Adjoint of a -> a sigma_i (algebra to one-forms): I-part of y sigma_i."""
    return form1.mul(sigma_form(i), params)["I"]


def _d_form(w: CliffordForm, params: ModelParams, window: Optional[Window],
            bracket: float) -> CliffordForm:
    """d(sum_k a_k sigma_k) = sum_k [D, a_k] sigma_k + a_k d(sigma_k)."""
    out = _raw_form(2, {})
    for k in GENERATORS:
        a = w[LABELS[k]]
        if a:
            out = out + comm_D(a, params, window).mul(sigma_form(k), params)
            out = out + generator_differential(k, bracket).left(a, params)
    return out


def curvature(nabla: Connection, params: ModelParams, window: Optional[Window] = None,
              bracket: float = DEFAULT_BRACKET) -> CurvatureData:
    """R = -nabla^2 on the generators, its Ricci contraction and scalar curvature.

    nabla^2(e_i) = sum_r (d omega^i_r - sum_l omega^i_l omega^l_r) (x) e_r.
    """
    omega = [[nabla.connection_form(i, l) for l in GENERATORS] for i in GENERATORS]
    R = []
    for i in range(3):
        row = []
        for r in range(3):
            sq = _d_form(omega[i][r], params, window, bracket)
            for l in range(3):
                sq = sq - omega[i][l].mul(omega[l][r], params)
            row.append(junk_project(sq.scale(-1.0)))
        R.append(row)
    Ric = []
    for j in range(3):
        acc = CliffordForm.zero(1)
        for i in range(3):
            acc = acc + left_sigma_adjoint(i + 1, R[i][j], params)
        Ric.append(acc)
    scalar = AlgebraElement()
    for i in range(3):
        scalar = scalar + right_sigma_adjoint(i + 1, Ric[i], params)
    return CurvatureData(R, Ric, scalar)


def _check_axis(a: AlgebraElement, axis: int, name: str) -> None:
    for idx in a.support():
        if any(idx[t] for t in range(3) if t != axis):
            raise SupportViolation(f"{name} has coefficient at {tuple(idx)} off its axis")
    if not a.is_selfadjoint(1e-12):
        raise SupportViolation(f"{name} must be selfadjoint")


def fg_connection(f: AlgebraElement, g: AlgebraElement, params: ModelParams) -> Connection:
    """nabla(s1) = f' dg s1 + g' df s2, nabla(s2) = g' df s1, nabla(s3) = 0.

    f depends on x only, g on y only; f' = delta_1 f and g' = delta_2 g.
    """
    _check_axis(f, 0, "f")
    _check_axis(g, 1, "g")
    h = star(derivation(1, f, params), derivation(2, g, params), params)
    con = Connection.zero()
    con.gamma[0][0][1] = h
    con.gamma[0][1][0] = h
    con.gamma[1][0][0] = h
    return con


def fg_closed_forms(f: AlgebraElement, g: AlgebraElement, params: ModelParams) -> Dict[str, AlgebraElement]:
    """Coefficient maps of f', f'', g', g'' and of the expected scalar -2 f'^2 g'^2."""
    f1 = derivation(1, f, params)
    f2 = derivation(1, f1, params)
    g1 = derivation(2, g, params)
    g2 = derivation(2, g1, params)
    sq = lambda a: star(a, a, params)  # noqa: E731
    return {"f1": f1, "f2": f2, "g1": g1, "g2": g2,
            "scalar": -2.0 * star(sq(f1), sq(g1), params)}


def pointwise_scalar_check(scalar: AlgebraElement, f: AlgebraElement, g: AlgebraElement,
                           params: ModelParams, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Rows (x, y, r_computed, -2 f'(x)^2 g'(y)^2)."""
    fx = evaluate(derivation(1, f, params), x, y, 0, params)
    gy = evaluate(derivation(2, g, params), x, y, 0, params)
    r = evaluate(scalar, x, y, 0, params)
    expect = -2.0 * fx ** 2 * gy ** 2
    return np.column_stack([x, y, r.real, expect.real, np.abs(r - expect)])


def trig_element(coeffs: Sequence[Tuple[int, float, float]], axis: int) -> AlgebraElement:
    """Real trig polynomial sum a_d cos(2 pi d t) + b_d sin(2 pi d t) on one axis."""
    d = {}
    for deg, a, b in coeffs:
        key = [0, 0, 0]
        for s, c in ((deg, 0.5 * a - 0.5j * b), (-deg, 0.5 * a + 0.5j * b)):
            key[axis] = s
            d[tuple(key)] = d.get(tuple(key), 0j) + c
        if deg == 0:
            key[axis] = 0
            d[tuple(key)] = complex(a)
    return AlgebraElement(d)
