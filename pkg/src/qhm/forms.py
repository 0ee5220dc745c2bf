"""Represented differential forms A (x) M_2 and their junk quotients.

A represented form is stored as four algebra elements, the coefficients of
I, sigma_1, sigma_2, sigma_3.  Universal forms are kept as lists of terms
a_0 da_1 ... da_d and are only turned into matrices by ``represent``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .algebra import (AlgebraElement, ModelParams, Window, derivation, gns_inner,
                      involution, star)
from .errors import DegreeMismatch, PreconditionError
from .spin import LABELS, PRODUCT

MAX_DEGREE = 5
# number of free Clifford components of the quotient in each degree
QUOTIENT_RANK = {0: 1, 1: 3, 2: 3, 3: 1}


def _zero_components() -> Dict[str, AlgebraElement]:
    return {lab: AlgebraElement() for lab in LABELS}


@dataclass(frozen=True)
class CliffordForm:
    degree: int
    components: Mapping[str, AlgebraElement]

    def __post_init__(self):
        if self.degree < 0:
            raise PreconditionError("degree must be nonnegative")
        comps = _zero_components()
        for lab, val in self.components.items():
            if lab not in comps:
                raise KeyError(f"unknown Clifford label {lab!r}")
            comps[lab] = val
        if self.degree == 0 and any(comps[l] for l in LABELS[1:]):
            raise PreconditionError("a degree-0 form has only an I-component")
        if self.degree == 1 and comps["I"]:
            raise PreconditionError("a degree-1 form has no I-component")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls, degree: int) -> "CliffordForm":
        return cls(degree, {})

    @classmethod
    def scalar(cls, a: AlgebraElement, degree: int = 0) -> "CliffordForm":
        return cls(degree, {"I": a})

    def __getitem__(self, label: str) -> AlgebraElement:
        return self.components[label]

    def _check(self, other: "CliffordForm"):
        if self.degree != other.degree:
            raise DegreeMismatch(f"degrees {self.degree} and {other.degree} differ")

    def __add__(self, other: "CliffordForm") -> "CliffordForm":
        self._check(other)
        return CliffordForm(self.degree, {l: self[l] + other[l] for l in LABELS})

    def __sub__(self, other: "CliffordForm") -> "CliffordForm":
        self._check(other)
        return CliffordForm(self.degree, {l: self[l] - other[l] for l in LABELS})

    def scale(self, s: complex) -> "CliffordForm":
        return CliffordForm(self.degree, {l: s * self[l] for l in LABELS})

    def left(self, a: AlgebraElement, params: ModelParams) -> "CliffordForm":
        """a * form (a acts as a scalar on the spin factor)."""
        return CliffordForm(self.degree, {l: star(a, self[l], params) for l in LABELS})

    def right(self, a: AlgebraElement, params: ModelParams) -> "CliffordForm":
        return CliffordForm(self.degree, {l: star(self[l], a, params) for l in LABELS})

    def mul(self, other: "CliffordForm", params: ModelParams) -> "CliffordForm":
        """Product in A (x) M_2, with sigma products reduced to the basis."""
        out = {l: AlgebraElement() for l in LABELS}
        for i, li in enumerate(LABELS):
            fi = self[li]
            if not fi:
                continue
            for j, lj in enumerate(LABELS):
                gj = other[lj]
                if not gj:
                    continue
                l, phase = PRODUCT[i, j]
                out[LABELS[l]] = out[LABELS[l]] + phase * star(fi, gj, params)
        return _raw_form(self.degree + other.degree, out)

    def max_abs(self) -> float:
        return max(self[l].max_abs() for l in LABELS)

    def sigma_max_abs(self) -> float:
        return max(self[l].max_abs() for l in LABELS[1:])

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.max_abs() <= tol

    def chop(self, tol: float = 1e-14) -> "CliffordForm":
        return _raw_form(self.degree, {l: self[l].chop(tol) for l in LABELS})

    def nonzero_labels(self) -> List[str]:
        return [l for l in LABELS if self[l]]

    def to_json(self) -> dict:
        return {"degree": self.degree,
                "components": {l: self[l].to_json() for l in LABELS}}

    @classmethod
    def from_json(cls, doc: Mapping) -> "CliffordForm":
        return cls(int(doc["degree"]),
                   {l: AlgebraElement.from_json(v) for l, v in doc["components"].items()})


def _raw_form(degree: int, comps: Mapping[str, AlgebraElement]) -> CliffordForm:
    # bypasses the degree-0/1 shape check; products of 1-forms carry I-parts
    f = object.__new__(CliffordForm)
    full = _zero_components()
    full.update(comps)
    object.__setattr__(f, "degree", degree)
    object.__setattr__(f, "components", full)
    return f


def sigma_form(j: int, a: Optional[AlgebraElement] = None, degree: int = 1) -> CliffordForm:
    """a (x) sigma_j as a form of the given degree (a defaults to 1)."""
    a = AlgebraElement.one() if a is None else a
    return _raw_form(degree, {LABELS[j]: a})


def comm_D(a: AlgebraElement, params: ModelParams, window: Optional[Window] = None) -> CliffordForm:
    """[D, a] = sum_j delta_j(a) (x) sigma_j."""
    return CliffordForm(1, {LABELS[j]: derivation(j, a, params, window) for j in (1, 2, 3)})


# ---------------------------------------------------------------------------
# universal forms
# ---------------------------------------------------------------------------

Term = Tuple[AlgebraElement, Tuple[AlgebraElement, ...]]


@dataclass(frozen=True)
class UniversalForm:
    """Finite sum of a_0 da_1 ... da_d, all terms of the same degree d."""

    terms: Tuple[Term, ...]

    def __post_init__(self):
        terms = tuple((a0, tuple(rest)) for a0, rest in self.terms)
        degrees = {len(rest) for _, rest in terms}
        if len(degrees) > 1:
            raise DegreeMismatch(f"mixed degrees {sorted(degrees)} in one universal form")
        object.__setattr__(self, "terms", terms)

    @property
    def degree(self) -> int:
        return len(self.terms[0][1]) if self.terms else 0

    @classmethod
    def term(cls, a0: AlgebraElement, *rest: AlgebraElement) -> "UniversalForm":
        return cls(((a0, tuple(rest)),))

    @classmethod
    def exact(cls, *rest: AlgebraElement) -> "UniversalForm":
        """d a_1 ... d a_d (a_0 = 1)."""
        return cls.term(AlgebraElement.one(), *rest)

    def __add__(self, other: "UniversalForm") -> "UniversalForm":
        return UniversalForm(self.terms + other.terms)

    def scale(self, s: complex) -> "UniversalForm":
        return UniversalForm(tuple((s * a0, rest) for a0, rest in self.terms))

    def __sub__(self, other: "UniversalForm") -> "UniversalForm":
        return self + other.scale(-1.0)

    def right_mul(self, b: AlgebraElement, params: ModelParams) -> "UniversalForm":
        """omega * b, moved into normal form with da * b = d(ab) - a db."""
        out: List[Term] = []
        for a0, rest in self.terms:
            out.extend(_right_mul_term(a0, rest, b, params))
        return UniversalForm(tuple(out))

    def mul(self, other: "UniversalForm", params: ModelParams) -> "UniversalForm":
        out: List[Term] = []
        for b0, brest in other.terms:
            for a0, arest in self.right_mul(b0, params).terms:
                out.append((a0, arest + brest))
        return UniversalForm(tuple(out))


def _right_mul_term(a0, rest, b, params) -> List[Term]:
    if not rest:
        return [(star(a0, b, params), ())]
    head, last = rest[:-1], rest[-1]
    # a0 da_1..da_{d-1} (d(last b) - last db)
    out = [(a0, head + (star(last, b, params),))]
    for c0, crest in _right_mul_term(a0, head, last, params):
        out.append((-1.0 * c0, crest + (b,)))
    return out


def differential(w: UniversalForm) -> UniversalForm:
    """d(a_0 da_1 ... da_d) = da_0 da_1 ... da_d."""
    one = AlgebraElement.one()
    return UniversalForm(tuple((one, (a0,) + rest) for a0, rest in w.terms))


def represent(w: UniversalForm, params: ModelParams, window: Optional[Window] = None) -> CliffordForm:
    """pi(a_0 da_1 ... da_d) = a_0 [D, a_1] ... [D, a_d]."""
    d = w.degree
    if d > MAX_DEGREE:
        raise PreconditionError(f"represent supports degree <= {MAX_DEGREE}, got {d}")
    total = _raw_form(d, {})
    for a0, rest in w.terms:
        f = CliffordForm.scalar(a0)
        for a in rest:
            f = f.mul(comm_D(a, params, window), params)
        total = _raw_form(d, {l: total[l] + f[l] for l in LABELS})
    return total


# ---------------------------------------------------------------------------
# quotients and inner products
# ---------------------------------------------------------------------------

def junk_project(f: CliffordForm) -> CliffordForm:
    """Canonical representative of f in the quotient by the junk forms."""
    if f.degree > MAX_DEGREE:
        raise PreconditionError(f"junk_project supports degree <= {MAX_DEGREE}")
    if f.degree <= 1:
        return f
    if f.degree == 2:
        return _raw_form(2, {l: f[l] for l in LABELS[1:]})
    if f.degree == 3:
        return _raw_form(3, {"I": f["I"]})
    return _raw_form(f.degree, {})


def form_inner(f: CliffordForm, g: CliffordForm) -> complex:
    """tau of the half trace of f g^*, i.e. sum_b <f_b, g_b>."""
    f._check(g)
    return sum((gns_inner(f[l], g[l]) for l in LABELS), 0j)


def valued_inner(f: CliffordForm, g: CliffordForm, params: ModelParams) -> AlgebraElement:
    """Algebra-valued inner product sum_b f_b * (g_b)^*."""
    f._check(g)
    out = AlgebraElement()
    for l in LABELS:
        if f[l] and g[l]:
            out = out + star(f[l], involution(g[l]), params)
    return out


# ---------------------------------------------------------------------------
# explicit junk witnesses
# ---------------------------------------------------------------------------

def _phi(m: int, n: int, k: int = 0) -> AlgebraElement:
    return AlgebraElement.basis(m, n, k)


def _doubling_witness(small: AlgebraElement, big: AlgebraElement,
                      tail: Sequence[AlgebraElement] = ()) -> UniversalForm:
    """2 big d(small) d(tail) - small d(big) d(tail) with big = small^2."""
    tail = tuple(tail)
    return UniversalForm(((2.0 * big, (small,) + tail), (-1.0 * small, (big,) + tail)))


def j1_witness() -> UniversalForm:
    """Degree-1 junk whose differential represents to a multiple of phi_{0,3} (x) I."""
    return _doubling_witness(_phi(0, 1), _phi(0, 2))


def j2_witnesses(phi: Optional[AlgebraElement] = None) -> Dict[str, UniversalForm]:
    """Degree-2 junk whose differentials hit sigma_2, sigma_1 and sum_j delta_j(phi) sigma_j."""
    phi = _phi(0, 0, 1) if phi is None else phi
    return {
        "w1": _doubling_witness(_phi(0, 1), _phi(0, 2), [_phi(0, 1)]),
        "w2": _doubling_witness(_phi(1, 0), _phi(2, 0), [_phi(1, 0)]),
        "w3": _doubling_witness(_phi(0, 1), _phi(0, 2), [phi]),
    }


def j3_witnesses(phi: Optional[AlgebraElement] = None) -> Dict[str, UniversalForm]:
    phi = _phi(0, 0, 1) if phi is None else phi
    s, b = _phi(0, 1), _phi(0, 2)
    return {
        "w1": _doubling_witness(s, b, [s, s]),
        "w2": _doubling_witness(s, b, [s, _phi(1, 0)]),
        "w3": _doubling_witness(s, b, [s, phi]),
        "w4": _doubling_witness(s, b, [_phi(1, 0), phi]),
    }


def random_j1_witness(rng, params: ModelParams, radius: int = 2) -> UniversalForm:
    """A random element of J_1 built from charge-zero elements u, b, c.

    Uses u (2 b db - d(b^2)) + u' (b dc + c db - d(bc)); both brackets
    represent to zero by the Leibniz rule.
    """
    def rand_elem():
        d = {}
        for m in range(-radius, radius + 1):
            for n in range(-radius, radius + 1):
                if rng.random() < 0.4:
                    d[(m, n, 0)] = complex(rng.normal(), rng.normal())
        return AlgebraElement(d) if d else _phi(0, 1)

    u, u2, b, c = rand_elem(), rand_elem(), rand_elem(), rand_elem()
    bb, bc = star(b, b, params), star(b, c, params)
    terms = (
        (2.0 * star(u, b, params), (b,)),
        (-1.0 * u, (bb,)),
        (star(u2, b, params), (c,)),
        (star(u2, c, params), (b,)),
        (-1.0 * u2, (bc,)),
    )
    return UniversalForm(terms)
