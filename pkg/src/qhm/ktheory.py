"""Index pairing and homotopy checks for the Dirac operator.

Everything is blockwise in (m, k).  The unitary U_1 (multiplication by e(y))
shifts n -> n + 1; since every block is Toeplitz in n, U_1 A U_1^{-1} equals
A - 2 pi (I (x) sigma_2) exactly on a truncation, so the index path is
A - 2 pi t (I (x) sigma_2), t in [0, 1].
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .algebra import ModelParams, Window, e
from .dirac import (DiracBlocks, TWO_PI, alpha_part_block, build, s_part_block)
from .errors import KappaViolation, PreconditionError, SingularBase, UnresolvedCrossing
from .spin import SIGMA

BlockKey = Tuple[int, int]
PATH_KINDS = ("s", "alpha")
ZERO_TOL = 1e-12
STUCK_TOL = 1e-10
MAX_REFINE = 3


def perturbation_block(kind: str, params: ModelParams, N: int, k: int) -> np.ndarray:
    if kind == "s":
        return s_part_block(params, N, k)
    if kind == "alpha":
        return alpha_part_block(params, N, k)
    raise PreconditionError(f"unknown path kind {kind!r}; expected one of {PATH_KINDS}")


def _abs_power(mat: np.ndarray, p: float, shift: float, key) -> np.ndarray:
    w, v = np.linalg.eigh(mat + shift * np.eye(mat.shape[0]))
    if np.abs(w).min() < ZERO_TOL:
        raise SingularBase(f"block {key} is singular after the kappa shift")
    return (v * np.abs(w) ** (-p)) @ v.conj().T


def interpolation_bound(base: DiracBlocks, kind: str, p: float, kappa: float = 0.0) -> float:
    """max over blocks of || |A|^{-p} B |A|^{-(1-p)} || (A shifted by kappa).

    Blocks where B vanishes (k = 0) contribute nothing and are skipped, so the
    zero modes of the k = 0 sector never need inverting.
    """
    if not 0.0 <= p <= 1.0:
        raise PreconditionError("p must lie in [0, 1]")
    worst = 0.0
    N = base.window.N
    for key in base.keys():
        B = perturbation_block(kind, base.params, N, key[1])
        if not np.any(B):
            continue
        A = base.blocks[key]
        left = _abs_power(A, p, kappa, key)
        right = _abs_power(A, 1.0 - p, kappa, key)
        worst = max(worst, float(np.linalg.norm(left @ B @ right, 2)))
    return worst


def choose_kappa(base: DiracBlocks, a: float) -> Dict[str, float]:
    """kappa per the relative-bound recipe.

    n is the smallest integer >= 2 with b = a n / (n - 1) < 1, and
    kappa = min(smallest positive eigenvalue, |largest negative| / n) / 2.
    """
    if not 0.0 <= a < 1.0:
        raise PreconditionError(f"relative bound {a} must lie in [0, 1)")
    n = 2
    while a * n / (n - 1) >= 1.0:
        n += 1
    b = a * n / (n - 1)
    pos, neg = math.inf, math.inf
    for blk in base.blocks.values():
        w = np.linalg.eigvalsh(blk)
        wp, wn = w[w > ZERO_TOL], w[w < -ZERO_TOL]
        if wp.size:
            pos = min(pos, float(wp.min()))
        if wn.size:
            neg = min(neg, float(-wn.max()))
    kappa = 0.5 * min(pos, neg / n)
    return {"kappa": kappa, "n": n, "b": b, "smallest_positive": pos, "largest_negative": -neg}


def check_kappa(base: DiracBlocks, kappa: float) -> None:
    for key, blk in base.blocks.items():
        w = np.linalg.eigvalsh(blk)
        wp = w[w > ZERO_TOL]
        if wp.size and kappa >= wp.min():
            raise KappaViolation(f"kappa {kappa} not below the smallest positive eigenvalue in block {key}")
        if np.any(np.abs(w + kappa) < ZERO_TOL) and kappa > 0:
            raise KappaViolation(f"-kappa is an eigenvalue of block {key}")


@dataclass
class HomotopyPath:
    base: DiracBlocks
    kind: str
    t_grid: np.ndarray
    kappa: float = 0.0

    def __post_init__(self):
        if self.base.t_weight != 0:
            raise PreconditionError("the homotopy base must be the unperturbed operator")
        if self.kind not in PATH_KINDS:
            raise PreconditionError(f"unknown path kind {self.kind!r}")
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] > 1:
            raise PreconditionError("t-grid must be increasing inside [0, 1]")
        self.t_grid = t

    def block(self, key: BlockKey, t: float) -> np.ndarray:
        B = perturbation_block(self.kind, self.base.params, self.base.window.N, key[1])
        return self.base.blocks[key] + t * B

    def endpoint_defect(self) -> float:
        """Distance of A_1 from the directly built endpoint operator."""
        p = self.base.params
        if self.kind == "s":
            other = build(p, self.base.window, 1.0)
        else:
            other = build(p.with_alpha(p.alpha + 1.0), self.base.window, 0.0)
        return max(float(np.abs(self.block(k, 1.0) - other.blocks[k]).max()) for k in self.base.keys())


def _arctan_calculus(mat: np.ndarray, kappa: float) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    return (v * ((2.0 / math.pi) * np.arctan(w + kappa))) @ v.conj().T


def continuity_constant(a: float) -> float:
    """a / (1 - a)^2 * pi / 2."""
    return a / (1.0 - a) ** 2 * math.pi / 2.0


def homotopy_continuity(path: HomotopyPath, a: float, workers: int = 1) -> Dict[str, object]:
    """Deviations ||f(A_t) - f(A_s)|| for adjacent grid points, f = (2/pi) arctan(. + kappa).

    The bound uses a itself when kappa = 0 and b = a n / (n - 1) otherwise.
    """
    if path.kappa > 0:
        check_kappa(path.base, path.kappa)
        const_a = choose_kappa(path.base, a)["b"]
    else:
        const_a = a
    const = continuity_constant(const_a)
    t = path.t_grid
    keys = list(path.base.keys())

    def per_block(key):
        f = [_arctan_calculus(path.block(key, ti), path.kappa) for ti in t]
        return [float(np.linalg.norm(f[i + 1] - f[i], 2)) for i in range(len(t) - 1)]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            devs = list(pool.map(per_block, keys))
    else:
        devs = [per_block(k) for k in keys]
    dev = np.max(np.array(devs), axis=0)
    rows = [(float(t[i]), float(t[i + 1]), float(dev[i]), float((t[i + 1] - t[i]) * const))
            for i in range(len(t) - 1)]
    return {"rows": rows, "constant": const, "a_used": const_a,
            "ok": all(d <= bound for _, _, d, bound in rows)}


# ---------------------------------------------------------------------------
# spectral projection and the unitaries
# ---------------------------------------------------------------------------

def spectral_projection(base: DiracBlocks, kappa: float = 0.0) -> Dict[BlockKey, np.ndarray]:
    """E = I(A >= 0) per block; zero modes count as nonnegative."""
    thr = -kappa if kappa > 0 else -ZERO_TOL
    out = {}
    for key, blk in base.blocks.items():
        w, v = np.linalg.eigh(blk)
        vv = v[:, w >= thr]
        out[key] = vv @ vv.conj().T
    return out


def u2_block(params: ModelParams, size: int, k: int) -> np.ndarray:
    """U_2 acts on charge k as the scalar e(k nu hbar)."""
    return e(k * params.nu * params.hbar) * np.eye(size)


def u2_commutator(base: DiracBlocks, E: Dict[BlockKey, np.ndarray]) -> float:
    worst = 0.0
    for (m, k), P in E.items():
        U = u2_block(base.params, P.shape[0], k)
        worst = max(worst, float(np.abs(U @ P - P @ U).max()))
    return worst


def u1_matrix(N: int) -> np.ndarray:
    """Shift e_n -> e_{n+1} on the n-index, tensored with the spinor identity."""
    return np.kron(np.eye(2 * N + 1, k=-1), np.eye(2))


def index_perturbation(N: int) -> np.ndarray:
    """U_1 A U_1^{-1} - A = -2 pi (I (x) sigma_2)."""
    return -TWO_PI * np.kron(np.eye(2 * N + 1), SIGMA[1])


def conjugation_defect(base: DiracBlocks) -> float:
    """Interior check of U_1 A U_1^* = A - 2 pi sigma_2 (edge row/column excluded)."""
    N = base.window.N
    U = u1_matrix(N)
    D = index_perturbation(N)
    inner = slice(2, 2 * (2 * N + 1))
    worst = 0.0
    for blk in base.blocks.values():
        diff = (U @ blk @ U.conj().T - (blk + D))[inner, inner]
        worst = max(worst, float(np.abs(diff).max()))
    return worst


# ---------------------------------------------------------------------------
# spectral flow
# ---------------------------------------------------------------------------

@dataclass
class Crossing:
    block: BlockKey
    t: float
    eigen_id: int
    direction: int

    def to_dict(self):
        return {"block": list(self.block), "t": self.t, "eigen_id": self.eigen_id,
                "direction": self.direction}


def _neg_count(w: np.ndarray) -> int:
    return int(np.count_nonzero(w < -ZERO_TOL))


def block_flow(A: np.ndarray, B: np.ndarray, t0: float = 0.0, t1: float = 1.0, steps: int = 16,
               key: BlockKey = (0, 0)) -> Tuple[int, List[Crossing]]:
    """Spectral flow of t -> A + t B on [t0, t1] with zero counted nonnegative.

    Returns the net number of eigenvalues crossing from negative to
    nonnegative, and a log of located crossings.
    """
    eig = lambda t: np.linalg.eigvalsh(A + t * B)  # noqa: E731
    grid = np.linspace(t0, t1, steps + 1)
    vals = [eig(t) for t in grid]
    flow, log = 0, []
    for i in range(steps):
        flow += _scan_step(eig, grid[i], grid[i + 1], vals[i], vals[i + 1], key, log, 0)
    return flow, log


def _scan_step(eig, ta, tb, wa, wb, key, log, depth) -> int:
    stuck = (np.abs(wa) < STUCK_TOL) & (np.abs(wb) < STUCK_TOL)
    if np.any(stuck):
        if depth >= MAX_REFINE:
            raise UnresolvedCrossing(f"eigenvalue of block {key} stays at zero on [{ta}, {tb}]")
        sub = np.linspace(ta, tb, 5)
        ws = [wa] + [eig(t) for t in sub[1:-1]] + [wb]
        return sum(_scan_step(eig, sub[j], sub[j + 1], ws[j], ws[j + 1], key, log, depth + 1)
                   for j in range(4))
    na, nb = _neg_count(wa), _neg_count(wb)
    if na == nb:
        return 0
    direction = 1 if nb < na else -1
    for j in range(min(na, nb), max(na, nb)):
        fa, fb = wa[j], wb[j]
        if fa * fb <= 0 and fa != fb:
            t = brentq(lambda s: eig(s)[j], ta, tb, xtol=1e-13)
        else:
            t = 0.5 * (ta + tb)
        log.append(Crossing(key, float(t), j, direction))
    return na - nb


def flow_all_blocks(base: DiracBlocks, steps: int = 16, workers: int = 1):
    """Per-block spectral flow of the index path.

    Blocks whose spectral gap at t = 0 exceeds 2 pi (the norm of the path
    perturbation) cannot cross zero; they are still scanned so the gap
    argument is confirmed numerically.
    """
    N = base.window.N
    B = index_perturbation(N)
    keys = list(base.keys())

    def one(key):
        A = base.blocks[key]
        gap = float(np.abs(np.linalg.eigvalsh(A)).min())
        flow, log = block_flow(A, B, steps=steps, key=key)
        return key, flow, log, gap

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, keys))
    else:
        results = [one(k) for k in keys]
    return results


def compression_index(base: DiracBlocks, key: BlockKey, margin: int = 4, tol: float = 1e-8) -> int:
    """Index of E U_1 E on one block from near-kernel dimensions.

    Kernel vectors supported within ``margin`` of the truncation edge are
    artefacts of cutting the shift and are discarded.
    """
    A = base.blocks[key]
    N = base.window.N
    w, v = np.linalg.eigh(A)
    R = v[:, w >= -ZERO_TOL]  # orthonormal basis of the range of E
    U = u1_matrix(N)
    C = R.conj().T @ U @ R

    edge = np.zeros(2 * (2 * N + 1), dtype=bool)
    edge[: 2 * margin] = True
    edge[-2 * margin:] = True

    def interior_kernel(M):
        _, s, vh = np.linalg.svd(M)
        s_full = np.zeros(M.shape[1])
        s_full[: s.size] = s
        count = 0
        for j in np.flatnonzero(s_full < tol):
            vec = R @ vh[j].conj()
            if np.linalg.norm(vec[edge]) < 0.5:
                count += 1
        return count

    return interior_kernel(C) - interior_kernel(C.conj().T)


@dataclass
class IndexResult:
    value: int
    per_block: Dict[BlockKey, int]
    windows: List[List[int]]
    alpha_values: List[float]
    values: Dict[str, int]
    crossing_log: List[Crossing] = field(default_factory=list)
    kernel_check: Dict[str, int] = field(default_factory=dict)
    stable: bool = True
    u2_commutator: float = 0.0
    expected_nonzero: bool = True

    @property
    def agrees_with_claim(self) -> bool:
        return (self.value != 0) == self.expected_nonzero

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "per_block": {f"{m},{k}": v for (m, k), v in sorted(self.per_block.items())},
            "windows": self.windows,
            "alpha_values": self.alpha_values,
            "values": self.values,
            "stable": self.stable,
            "u2_commutator": self.u2_commutator,
            "kernel_check": self.kernel_check,
            "crossings": [c.to_dict() for c in self.crossing_log],
            "expected_nonzero": self.expected_nonzero,
            "agreement": "agree" if self.agrees_with_claim else "discrepancy",
        }


def index_pairing(params: ModelParams, window: Window, alphas: Sequence[float] = (1.5, 2.0),
                  t_weight: float = 1.0, steps: int = 16, workers: int = 1) -> IndexResult:
    """Spectral flow of A -> U_1 A U_1^{-1} at n-windows N and 2N for each alpha."""
    windows = [Window(window.M, window.N, window.K), Window(window.M, 2 * window.N, window.K)]
    values: Dict[str, int] = {}
    per_block: Dict[BlockKey, int] = {}
    log: List[Crossing] = []
    kernel: Dict[str, int] = {}
    u2 = 0.0
    for alpha in alphas:
        p = params.with_alpha(alpha)
        for w in windows:
            base = build(p, w, t_weight)
            results = flow_all_blocks(base, steps, workers)
            total = sum(r[1] for r in results)
            values[f"alpha={alpha},N={w.N}"] = total
            if alpha == alphas[0] and w is windows[0]:
                per_block = {r[0]: r[1] for r in results}
                log = [c for r in results for c in r[2]]
                kernel = {f"{m},{k}": compression_index(base, (m, k))
                          for m, k in [(0, 0), (1, 0), (0, 1)]
                          if abs(m) <= w.M and abs(k) <= w.K}
                u2 = u2_commutator(base, spectral_projection(base))
    distinct = set(values.values())
    value = next(iter(values.values()))
    return IndexResult(value=value, per_block=per_block,
                       windows=[[w.M, w.N, w.K] for w in windows],
                       alpha_values=[float(a) for a in alphas], values=values,
                       crossing_log=log, kernel_check=kernel, stable=len(distinct) == 1,
                       u2_commutator=u2)
