"""Exact coefficient-space arithmetic for the quantum Heisenberg algebra.

Elements are finite complex combinations of the basis functions

    phi_{m,n,k}(x, y, p) = e(c x y p) e(m x + n y) delta_{k p},   e(t) = exp(2 pi i t).

On this basis the twisted convolution closes with a scalar phase,
phi_a * phi_b = e(lambda(a, b)) phi_{a+b}, so the star product, the
involution, the trace and the GNS inner product are all exact.

Derivation convention (used by every module)::

    delta_1 phi_{m,n,k} = 2 pi i m phi_{m,n,k} + 2 pi i c k (y . phi_{m,n,k})
    delta_2 phi_{m,n,k} = 2 pi i n phi_{m,n,k}
    delta_3 phi_{m,n,k} = 2 pi i c alpha k phi_{m,n,k}

so that delta_1 = d/dx and delta_2 = d/dy on the k = 0 sector.  The
multiplication by y is the sawtooth Toeplitz operator on the n index.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Mapping, NamedTuple, Optional, Tuple

import numpy as np

from .errors import MissingWindow, PreconditionError

TWO_PI = 2.0 * math.pi
# coefficients with modulus below this are dropped from the support
ZERO_TOL = 0.0


def e(t: float) -> complex:
    return cmath.exp(1j * TWO_PI * t)


@dataclass(frozen=True)
class ModelParams:
    c: int = 1
    hbar: float = 0.1
    mu: float = 0.3
    nu: float = 0.0
    alpha: float = 2.0

    def __post_init__(self):
        if not isinstance(self.c, (int, np.integer)) or self.c < 1:
            raise PreconditionError(f"c must be a positive integer, got {self.c!r}")
        if self.mu == 0 and self.nu == 0:
            raise PreconditionError("mu^2 + nu^2 must be nonzero")
        if not self.alpha > 1:
            raise PreconditionError(f"alpha must exceed 1, got {self.alpha}")

    def with_alpha(self, alpha: float) -> "ModelParams":
        return ModelParams(self.c, self.hbar, self.mu, self.nu, alpha)

    def to_dict(self) -> dict:
        return {"c": int(self.c), "hbar": self.hbar, "mu": self.mu,
                "nu": self.nu, "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelParams":
        return cls(int(d.get("c", 1)), float(d.get("hbar", 0.1)), float(d.get("mu", 0.3)),
                   float(d.get("nu", 0.0)), float(d.get("alpha", 2.0)))


class BasisIndex(NamedTuple):
    m: int
    n: int
    k: int

    def __add__(self, other):  # type: ignore[override]
        return BasisIndex(self.m + other[0], self.n + other[1], self.k + other[2])

    def __neg__(self):
        return BasisIndex(-self.m, -self.n, -self.k)


@dataclass(frozen=True)
class Window:
    M: int
    N: int
    K: int

    def __post_init__(self):
        if min(self.M, self.N, self.K) < 0:
            raise PreconditionError(f"window bounds must be nonnegative: {self}")

    def contains(self, idx) -> bool:
        m, n, k = idx
        return abs(m) <= self.M and abs(n) <= self.N and abs(k) <= self.K

    @classmethod
    def parse(cls, text: str) -> "Window":
        parts = [int(p) for p in str(text).split(",")]
        if len(parts) == 1:
            parts = parts * 3
        if len(parts) != 3:
            raise ValueError(f"window must be M,N,K: {text!r}")
        return cls(*parts)


class AlgebraElement:
    """Finite coefficient map over the basis phi_{m,n,k}.

    Instances are immutable; arithmetic returns new elements.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Optional[Mapping] = None):
        c: Dict[BasisIndex, complex] = {}
        if coeffs:
            for idx, v in coeffs.items():
                v = complex(v)
                if abs(v) > ZERO_TOL:
                    c[BasisIndex(*idx)] = v
        self._c = c

    @classmethod
    def basis(cls, m: int, n: int, k: int = 0, coeff: complex = 1.0) -> "AlgebraElement":
        return cls({(m, n, k): coeff})

    @classmethod
    def one(cls) -> "AlgebraElement":
        return cls.basis(0, 0, 0)

    @classmethod
    def zero(cls) -> "AlgebraElement":
        return cls()

    @classmethod
    def _raw(cls, d: Dict[BasisIndex, complex]) -> "AlgebraElement":
        out = cls.__new__(cls)
        out._c = {k: v for k, v in d.items() if abs(v) > ZERO_TOL}
        return out

    # -- mapping protocol -------------------------------------------------
    @property
    def coeffs(self) -> Dict[BasisIndex, complex]:
        return dict(self._c)

    def __getitem__(self, idx) -> complex:
        return self._c.get(BasisIndex(*idx), 0j)

    def items(self) -> Iterator[Tuple[BasisIndex, complex]]:
        return iter(self._c.items())

    def support(self):
        return set(self._c)

    def __len__(self):
        return len(self._c)

    def __bool__(self):
        return bool(self._c)

    def __repr__(self):
        terms = ", ".join(f"{tuple(k)}: {v:.6g}" for k, v in sorted(self._c.items()))
        return f"AlgebraElement({{{terms}}})"

    # -- linear structure -------------------------------------------------
    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        d = dict(self._c)
        for k, v in other._c.items():
            d[k] = d.get(k, 0j) + v
        return AlgebraElement._raw(d)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, s: complex) -> "AlgebraElement":
        s = complex(s)
        return AlgebraElement._raw({k: s * v for k, v in self._c.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        raise TypeError("use star(a, b, params) for the algebra product")

    def norm(self) -> float:
        """l2 norm of the coefficient vector (the GNS norm)."""
        return math.sqrt(sum(abs(v) ** 2 for v in self._c.values()))

    def max_abs(self) -> float:
        return max((abs(v) for v in self._c.values()), default=0.0)

    def is_selfadjoint(self, tol: float = 1e-12) -> bool:
        keys = set(self._c) | {-k for k in self._c}
        return all(abs(self[-k] - self[k].conjugate()) <= tol for k in keys)

    def restrict(self, window: Window) -> "AlgebraElement":
        return AlgebraElement._raw({k: v for k, v in self._c.items() if window.contains(k)})

    def chop(self, tol: float = 1e-14) -> "AlgebraElement":
        return AlgebraElement._raw({k: v for k, v in self._c.items() if abs(v) > tol})

    def k_sector(self) -> set:
        return {k.k for k in self._c}

    def radius(self) -> Tuple[int, int, int]:
        if not self._c:
            return (0, 0, 0)
        return tuple(max(abs(idx[i]) for idx in self._c) for i in range(3))  # type: ignore

    def distance(self, other: "AlgebraElement") -> float:
        return (self - other).max_abs()

    # -- serialization ----------------------------------------------------
    def to_json(self, params: Optional[ModelParams] = None) -> dict:
        rows = [[k.m, k.n, k.k, v.real, v.imag] for k, v in sorted(self._c.items())]
        doc = {"coeffs": rows}
        if params is not None:
            doc = {"params": params.to_dict(), "coeffs": rows}
        return doc

    @classmethod
    def from_json(cls, doc) -> "AlgebraElement":
        if isinstance(doc, str):
            doc = json.loads(doc)
        return cls({(int(m), int(n), int(k)): complex(re, im) for m, n, k, re, im in doc["coeffs"]})


def from_terms(terms: Iterable[Tuple[Tuple[int, int, int], complex]]) -> AlgebraElement:
    d: Dict[BasisIndex, complex] = {}
    for idx, v in terms:
        idx = BasisIndex(*idx)
        d[idx] = d.get(idx, 0j) + complex(v)
    return AlgebraElement._raw(d)


# ---------------------------------------------------------------------------
# product structure
# ---------------------------------------------------------------------------

def structure_phase(a, b, params: ModelParams) -> float:
    """Phase exponent lambda(a, b) with phi_a * phi_b = e(lambda) phi_{a+b}."""
    ma, na, ka = a
    mb, nb, kb = b
    h, mu, nu, c = params.hbar, params.mu, params.nu, params.c
    return (h * mu * (ma * kb - mb * ka) + h * nu * (na * kb - nb * ka)
            + c * h * h * mu * nu * ka * kb * (ka + kb))


def star(a: AlgebraElement, b: AlgebraElement, params: ModelParams) -> AlgebraElement:
    out: Dict[BasisIndex, complex] = {}
    for ia, va in a._c.items():
        for ib, vb in b._c.items():
            idx = BasisIndex(ia.m + ib.m, ia.n + ib.n, ia.k + ib.k)
            ph = va * vb
            if ia.k or ib.k:
                ph *= e(structure_phase(ia, ib, params))
            out[idx] = out.get(idx, 0j) + ph
    return AlgebraElement._raw(out)


def star_many(params: ModelParams, *elems: AlgebraElement) -> AlgebraElement:
    out = elems[0]
    for x in elems[1:]:
        out = star(out, x, params)
    return out


def commutator(a: AlgebraElement, b: AlgebraElement, params: ModelParams) -> AlgebraElement:
    return star(a, b, params) - star(b, a, params)


def involution(a: AlgebraElement) -> AlgebraElement:
    return AlgebraElement._raw({-k: v.conjugate() for k, v in a._c.items()})


def trace(a: AlgebraElement) -> complex:
    return a[(0, 0, 0)]


def gns_inner(a: AlgebraElement, b: AlgebraElement) -> complex:
    """<a, b> = tau(b^* * a), linear in the first slot."""
    return sum((v * b[k].conjugate() for k, v in a._c.items()), 0j)


# ---------------------------------------------------------------------------
# pointwise evaluation
# ---------------------------------------------------------------------------

def evaluate(a: AlgebraElement, x, y, p: int, params: ModelParams):
    """Evaluate the element at (x, y, p); array arguments broadcast.

    The closed-form expression of the basis functions is used for every real
    (x, y): quasi-periodicity in x then holds identically, and the shifted
    arguments produced by the product or the representation need no wrapping.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
    for idx, v in a._c.items():
        if idx.k == p:
            out = out + v * np.exp(1j * TWO_PI * (idx.m * x + idx.n * y))
    if p != 0:
        out = out * np.exp(1j * TWO_PI * params.c * x * y * p)
    return out


def norm_111(a: AlgebraElement, params: ModelParams, grid: int = 0) -> float:
    """Grid estimate of sum_k sup_{x,y} |a(x, y, k)|."""
    M, N, _ = a.radius()
    need = 2 * (M + N + 1)
    grid = grid or max(need, 16)
    if grid < need:
        raise PreconditionError(f"grid {grid} below required {need}")
    g = np.arange(grid) / grid
    X, Y = np.meshgrid(g, g, indexing="ij")
    total = 0.0
    for k in sorted(a.k_sector()):
        total += float(np.abs(evaluate(a, X, Y, k, params)).max())
    return total


def heisenberg_action(r: float, s: float, t: float, a: AlgebraElement, x, y, p: int,
                      params: ModelParams):
    """Pointwise value of (L_{(r,s,t)} a)(x, y, p)."""
    x = np.asarray(x, dtype=float)
    phase = np.exp(1j * TWO_PI * p * (t + params.c * s * (x - r)))
    return phase * evaluate(a, x - r, np.asarray(y, dtype=float) - s, p, params)


# ---------------------------------------------------------------------------
# derivations
# ---------------------------------------------------------------------------

def sawtooth_coefficient(l: int) -> complex:
    """Fourier coefficient int_0^1 y e(-l y) dy."""
    if l == 0:
        return 0.5 + 0j
    return -1.0 / (2j * math.pi * l)


def y_multiply(a: AlgebraElement, window: Window) -> AlgebraElement:
    """Multiplication by the coordinate y in [0, 1), truncated to |n| <= window.N."""
    out: Dict[BasisIndex, complex] = {}
    N = window.N
    for idx, v in a._c.items():
        for n2 in range(-N, N + 1):
            key = BasisIndex(idx.m, n2, idx.k)
            out[key] = out.get(key, 0j) + v * sawtooth_coefficient(n2 - idx.n)
    return AlgebraElement._raw(out)


def derivation(j: int, a: AlgebraElement, params: ModelParams,
               window: Optional[Window] = None) -> AlgebraElement:
    if j == 2:
        return AlgebraElement._raw({k: 2j * math.pi * k.n * v for k, v in a._c.items()})
    if j == 3:
        f = 2j * math.pi * params.c * params.alpha
        return AlgebraElement._raw({k: f * k.k * v for k, v in a._c.items()})
    if j != 1:
        raise ValueError(f"derivation index must be 1, 2 or 3, got {j}")
    diag = AlgebraElement._raw({k: 2j * math.pi * k.m * v for k, v in a._c.items()})
    charged = AlgebraElement._raw({k: k.k * v for k, v in a._c.items() if k.k})
    if not charged:
        return diag
    if window is None:
        raise MissingWindow("delta_1 of a k != 0 element needs a truncation window")
    return diag + (2j * math.pi * params.c) * y_multiply(charged, window)


def bracket_constant(params: ModelParams) -> float:
    """gamma with [delta_1, delta_2] = gamma * delta_3 on smooth vectors."""
    return -1.0 / params.alpha


# ---------------------------------------------------------------------------
# pointwise product oracle
# ---------------------------------------------------------------------------

def grid_star(a: AlgebraElement, b: AlgebraElement, x, y, p: int, params: ModelParams):
    """(a * b)(x, y, p) from the twisted-convolution formula, evaluated pointwise.

    sum_q a(x - h(q - p) mu, y - h(q - p) nu, q) b(x - h q mu, y - h q nu, p - q)
    """
    h, mu, nu = params.hbar, params.mu, params.nu
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
    kb = b.k_sector()
    for q in sorted(a.k_sector()):
        if p - q not in kb:
            continue
        out = out + (evaluate(a, x - h * (q - p) * mu, y - h * (q - p) * nu, q, params)
                     * evaluate(b, x - h * q * mu, y - h * q * nu, p - q, params))
    return out


def structure_constant_residual(ia, ib, params: ModelParams, grid: int = 64) -> float:
    """max |grid product of phi_a, phi_b minus e(lambda(a, b)) phi_{a+b}| on a grid."""
    g = np.arange(grid) / grid
    X, Y = np.meshgrid(g, g, indexing="ij")
    a, b = AlgebraElement.basis(*ia), AlgebraElement.basis(*ib)
    p = ia[2] + ib[2]
    lhs = grid_star(a, b, X, Y, p, params)
    rhs = evaluate(star(a, b, params), X, Y, p, params)
    return float(np.abs(lhs - rhs).max())
