"""The defining representation on sampled wavefunctions, and Weaver's operators.

States xi(x, y, p) live on a uniform grid over [-L, L) x [0, 1) x {-P..P}.
The representation only ever evaluates the *element* at shifted points
(exactly, via the closed-form basis functions); the state is read on-grid.
The one place a state has to be read off-grid is the X_r shift, which uses
trigonometric interpolation and is therefore exact for band-limited states.

This module is an oracle for :mod:`qhm.algebra`; it favours clarity over speed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .algebra import AlgebraElement, ModelParams, evaluate, involution, norm_111, star
from .errors import PreconditionError, SupportViolation, WindowOverflow


@dataclass(frozen=True)
class GridState:
    samples: np.ndarray  # shape (Gx, Gy, 2P+1), p index offset by P
    L: int

    def __post_init__(self):
        gx, gy, _ = self.samples.shape
        if gx < 4 or gy < 4:
            raise PreconditionError("grid sizes must be at least 4")
        if self.L < 1:
            raise PreconditionError("L must be a positive integer")

    @property
    def Gx(self) -> int:
        return self.samples.shape[0]

    @property
    def Gy(self) -> int:
        return self.samples.shape[1]

    @property
    def P(self) -> int:
        return (self.samples.shape[2] - 1) // 2

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.Gx

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        x = -self.L + self.dx * np.arange(self.Gx)
        y = np.arange(self.Gy) / self.Gy
        return x, y

    def mesh(self):
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="ij")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.dx / self.Gy))

    def with_samples(self, samples: np.ndarray) -> "GridState":
        return GridState(samples, self.L)

    def p_support(self) -> Tuple[int, int]:
        mass = np.abs(self.samples).reshape(-1, self.samples.shape[2]).max(axis=0)
        nz = np.nonzero(mass > 0)[0]
        if nz.size == 0:
            return (0, 0)
        return int(nz[0]) - self.P, int(nz[-1]) - self.P

    # -- serialization: raw row-major complex128 plus a JSON sidecar ----------
    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        np.ascontiguousarray(self.samples, dtype=np.complex128).tofile(path)
        sidecar = {"L": self.L, "G_x": self.Gx, "G_y": self.Gy, "P": self.P,
                   "dtype": "complex128", "order": "C", "axes": ["x", "y", "p"]}
        Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GridState":
        meta = json.loads(Path(str(path) + ".json").read_text())
        data = np.fromfile(path, dtype=np.complex128)
        shape = (meta["G_x"], meta["G_y"], 2 * meta["P"] + 1)
        return cls(data.reshape(shape), int(meta["L"]))


def zero_state(L: int, Gx: int, Gy: int, P: int) -> GridState:
    return GridState(np.zeros((Gx, Gy, 2 * P + 1), dtype=complex), L)


def gaussian_state(L: int, Gx: int, Gy: int, P: int, rng: np.random.Generator,
                   p_range: int = 1) -> GridState:
    """Random complex Gaussian samples on |p| <= p_range (not band-limited)."""
    s = np.zeros((Gx, Gy, 2 * P + 1), dtype=complex)
    sl = slice(P - p_range, P + p_range + 1)
    shape = s[:, :, sl].shape
    s[:, :, sl] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return GridState(s, L)


def smooth_state(L: int, Gx: int, Gy: int, P: int, rng: np.random.Generator,
                 p_range: int = 1, width: float = 0.35, center: float = 0.0,
                 y_modes: int = 2) -> GridState:
    """Gaussian envelope in x times a random trigonometric polynomial in y.

    With width well inside L the state is band-limited to rounding on the
    periodic x-grid, which is what the X_r interpolation needs.
    """
    st = zero_state(L, Gx, Gy, P)
    X, Y = st.mesh()
    env = np.exp(-((X - center) / width) ** 2)
    env[env < 1e-20] = 0.0  # compact support for the W_k checks
    s = st.samples.copy()
    for p in range(-p_range, p_range + 1):
        f = np.zeros_like(Y, dtype=complex)
        for n in range(-y_modes, y_modes + 1):
            f = f + (rng.standard_normal() + 1j * rng.standard_normal()) * np.exp(2j * np.pi * n * Y)
        s[:, :, p + P] = env * f * np.exp(2j * np.pi * rng.uniform() * X)
    return st.with_samples(s)


# ---------------------------------------------------------------------------
# the representation
# ---------------------------------------------------------------------------

def _check_overflow(a: AlgebraElement, xi: GridState) -> None:
    if not a:
        return
    lo, hi = xi.p_support()
    ks = a.k_sector()
    if hi + max(ks) > xi.P or lo + min(ks) < -xi.P:
        raise WindowOverflow(f"p-range {lo + min(ks)}..{hi + max(ks)} leaves [-{xi.P}, {xi.P}]")


def pi_apply(a: AlgebraElement, xi: GridState, params: ModelParams,
             shift: Tuple[float, float] = (0.0, 0.0),
             reader: Optional[Callable[[int], np.ndarray]] = None,
             strict: bool = True) -> GridState:
    """(pi(a) xi)(x - sx, y - sy, p) sampled on the grid of xi.

    ``reader(p)`` returns the samples of xi(. - sx, . - sy, p); by default the
    state is read on-grid (only valid for a zero shift).  With ``strict=False``
    the result is silently compressed to |p| <= P.
    """
    if strict:
        _check_overflow(a, xi)
    sx, sy = shift
    if reader is None:
        if sx or sy:
            raise ValueError("a shifted evaluation needs an interpolating reader")
        reader = lambda p: xi.samples[:, :, p + xi.P]  # noqa: E731
    X, Y = xi.mesh()
    X = X - sx
    Y = Y - sy
    h, mu, nu = params.hbar, params.mu, params.nu
    P = xi.P
    out = np.zeros_like(xi.samples)
    ks = sorted(a.k_sector())
    for p in range(-P, P + 1):
        acc = out[:, :, p + P]
        for q in ks:
            src = p - q
            if abs(src) > P:
                continue
            d = q - 2 * p
            acc += evaluate(a, X - h * d * mu, Y - h * d * nu, q, params) * reader(src)
    return xi.with_samples(out)


def pi_adjoint_apply(a: AlgebraElement, xi: GridState, params: ModelParams) -> GridState:
    """Hilbert adjoint of pi(a), applied through the conjugated kernel."""
    X, Y = xi.mesh()
    h, mu, nu = params.hbar, params.mu, params.nu
    P = xi.P
    out = np.zeros_like(xi.samples)
    for p in range(-P, P + 1):
        for q in sorted(a.k_sector()):
            src = p + q
            if abs(src) > P:
                continue
            d = q + 2 * p
            out[:, :, p + P] += np.conj(evaluate(a, X + h * d * mu, Y + h * d * nu, q, params)) \
                * xi.samples[:, :, src + P]
    return xi.with_samples(out)


def check_homomorphism(a: AlgebraElement, b: AlgebraElement, xi: GridState,
                       params: ModelParams) -> float:
    """||pi(a*b) xi - pi(a) pi(b) xi|| / ||xi||."""
    lhs = pi_apply(star(a, b, params), xi, params)
    rhs = pi_apply(a, pi_apply(b, xi, params), params)
    return float(lhs.with_samples(lhs.samples - rhs.samples).norm() / xi.norm())


def adjoint_residual(a: AlgebraElement, xi: GridState, params: ModelParams) -> float:
    """||pi(a^*) xi - pi(a)^adj xi|| / ||xi||."""
    lhs = pi_apply(involution(a), xi, params)
    rhs = pi_adjoint_apply(a, xi, params)
    return float(lhs.with_samples(lhs.samples - rhs.samples).norm() / xi.norm())


def operator_norm_estimate(a: AlgebraElement, xi: GridState, params: ModelParams,
                           iters: int = 60) -> float:
    """Power iteration on the p-compression of pi(a)^adj pi(a), started from xi."""
    v = xi
    lam = 0.0
    for _ in range(iters):
        w = pi_adjoint_apply(a, pi_apply(a, v, params, strict=False), params)
        nv = w.norm()
        if nv == 0:
            return 0.0
        lam = nv / v.norm()
        v = w.with_samples(w.samples / nv)
    return float(np.sqrt(lam))


def young_bound_gap(a: AlgebraElement, xi: GridState, params: ModelParams) -> float:
    """norm_111(a) minus the operator-norm estimate (nonnegative by Young)."""
    return norm_111(a, params) - operator_norm_estimate(a, xi, params)


# ---------------------------------------------------------------------------
# Weaver operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeaverOp:
    kind: str  # "V", "W" or "X"
    f: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    shift: int = 0

    @classmethod
    def V(cls, f) -> "WeaverOp":
        return cls("V", f=f)

    @classmethod
    def W(cls, k: int) -> "WeaverOp":
        return cls("W", shift=k)

    @classmethod
    def X(cls, r: int) -> "WeaverOp":
        return cls("X", shift=r)


def _fourier_shift(samples: np.ndarray, L: int, sx: float, sy: float) -> np.ndarray:
    """Samples of g(x - sx, y - sy) for a band-limited g periodic on [-L, L) x [0, 1)."""
    gx, gy = samples.shape
    kx = np.fft.fftfreq(gx, d=1.0 / gx) / (2.0 * L)
    ky = np.fft.fftfreq(gy, d=1.0 / gy)
    ramp = np.exp(-2j * np.pi * (kx[:, None] * sx + ky[None, :] * sy))
    return np.fft.ifft2(np.fft.fft2(samples) * ramp)


def _x_support_ok(xi: GridState, k: int) -> bool:
    x, _ = xi.axes()
    mass = np.abs(xi.samples).max(axis=(1, 2))
    inside = (x >= -xi.L + abs(k)) & (x < xi.L - abs(k))
    return not np.any(mass[~inside] > 0)


def _grid_x_shift(samples: np.ndarray, xi: GridState, k: int) -> np.ndarray:
    """Samples of g(x + k) for integer k; requires dx to divide 1."""
    per_unit = xi.Gx / (2 * xi.L)
    if abs(per_unit - round(per_unit)) > 1e-12:
        raise PreconditionError("W_k needs G_x / (2L) integral for a grid-exact shift")
    steps = int(round(per_unit)) * k
    out = np.zeros_like(samples)
    if steps >= 0:
        out[: xi.Gx - steps] = samples[steps:]
    else:
        out[-steps:] = samples[: xi.Gx + steps]
    return out


def weaver_apply(w: WeaverOp, xi: GridState, params: ModelParams) -> GridState:
    X, Y = xi.mesh()
    P = xi.P
    if w.kind == "V":
        fx = np.asarray(w.f(X, Y))
        return xi.with_samples(xi.samples * fx[:, :, None])
    if w.kind == "W":
        k = w.shift
        if not _x_support_ok(xi, k):
            raise SupportViolation(f"state support reaches within {abs(k)} of the x-grid edge")
        shifted = _grid_x_shift(xi.samples, xi, k)
        p = np.arange(-P, P + 1)
        phase = np.exp(-2j * np.pi * params.c * k
                       * (p[None, None, :] ** 2 * params.hbar * params.nu + p[None, None, :] * Y[:, :, None]))
        return xi.with_samples(phase * shifted)
    if w.kind == "X":
        r = w.shift
        sx, sy = 2 * params.hbar * r * params.mu, 2 * params.hbar * r * params.nu
        out = np.zeros_like(xi.samples)
        for p in range(-P, P + 1):
            if abs(p + r) <= P:
                out[:, :, p + P] = _fourier_shift(xi.samples[:, :, p + r + P], xi.L, sx, sy)
        return xi.with_samples(out)
    raise ValueError(f"unknown Weaver operator kind {w.kind!r}")


def weaver_commutator_norm(a: AlgebraElement, w: WeaverOp, xi: GridState,
                           params: ModelParams) -> float:
    """||[pi(a), w] xi|| / ||xi||."""
    left = pi_apply(a, weaver_apply(w, xi, params), params)
    if w.kind == "X":
        r = w.shift
        sx, sy = 2 * params.hbar * r * params.mu, 2 * params.hbar * r * params.nu
        P = xi.P

        def reader(p):
            if abs(p) > P:
                return np.zeros(xi.samples.shape[:2], dtype=complex)
            return _fourier_shift(xi.samples[:, :, p + P], xi.L, sx, sy)

        moved = pi_apply(a, xi, params, shift=(sx, sy), reader=reader)
        out = np.zeros_like(xi.samples)
        for p in range(-P, P + 1):
            if abs(p + r) <= P:
                out[:, :, p + P] = moved.samples[:, :, p + r + P]
        right = xi.with_samples(out)
    else:
        right = weaver_apply(w, pi_apply(a, xi, params), params)
    return float(xi.with_samples(left.samples - right.samples).norm() / xi.norm())
