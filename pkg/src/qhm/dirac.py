"""Truncated Dirac operators and their spectral analysis.

On the Fourier basis e_{m,n,k} of the GNS space the operator

    A_t = 2 pi (m + t c k Y) (x) sigma_1 + 2 pi n (x) sigma_2 - 2 pi c alpha k (x) sigma_3

never mixes different (m, k): Y (multiplication by y) only couples the n
index.  Each (m, k) block is a dense Hermitian matrix of size 2(2N+1),
indexed by (n, spinor) with the spinor index fastest.  t = 0 gives T (the
flat Dirac operator on the 3-torus), t = 1 gives D'.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from .algebra import AlgebraElement, ModelParams, Window, e, structure_phase
from .errors import EigenFailure, MarginViolation, PreconditionError
from .spin import I2, SIGMA

TWO_PI = 2.0 * math.pi
BlockKey = Tuple[int, int]


@lru_cache(maxsize=32)
def _sawtooth_matrix(N: int) -> np.ndarray:
    n = np.arange(-N, N + 1)
    diff = n[None, :] - n[:, None]  # column index minus row index
    with np.errstate(divide="ignore"):
        Y = np.where(diff == 0, 0.5, 1.0 / (2j * math.pi * np.where(diff == 0, 1, diff)))
    Y.setflags(write=False)
    return Y


def sawtooth_matrix(N: int) -> np.ndarray:
    """Y[n', n] = int_0^1 y e((n - n') y) dy on |n|, |n'| <= N."""
    return _sawtooth_matrix(N).copy()


def s_part_block(params: ModelParams, N: int, k: int) -> np.ndarray:
    """The block of S = 2 pi c M_{yp} (x) sigma_1 at charge k."""
    return TWO_PI * params.c * k * np.kron(_sawtooth_matrix(N), SIGMA[0])


def alpha_part_block(params: ModelParams, N: int, k: int) -> np.ndarray:
    """The block of -2 pi c M_p (x) sigma_3 (the derivative of A in alpha)."""
    return -TWO_PI * params.c * k * np.kron(np.eye(2 * N + 1), SIGMA[2])


def dirac_block(params: ModelParams, N: int, m: int, k: int, t_weight: float) -> np.ndarray:
    n = np.arange(-N, N + 1)
    eye = np.eye(2 * N + 1)
    blk = (TWO_PI * np.kron(m * eye, SIGMA[0])
           + TWO_PI * np.kron(np.diag(n).astype(complex), SIGMA[1])
           - TWO_PI * params.c * params.alpha * k * np.kron(eye, SIGMA[2]))
    if t_weight and k:
        blk = blk + t_weight * s_part_block(params, N, k)
    return blk


@dataclass(frozen=True)
class DiracBlocks:
    params: ModelParams
    window: Window
    t_weight: float
    blocks: Dict[BlockKey, np.ndarray] = field(repr=False)

    @property
    def size(self) -> int:
        return 2 * (2 * self.window.N + 1)

    def keys(self) -> Iterable[BlockKey]:
        return sorted(self.blocks)

    def dimension(self) -> int:
        return self.size * len(self.blocks)

    def assemble(self) -> np.ndarray:
        """Dense matrix of the whole truncated operator (small windows only)."""
        from scipy.linalg import block_diag
        return block_diag(*[self.blocks[key] for key in self.keys()])


def build(params: ModelParams, window: Window, t_weight: float = 1.0) -> DiracBlocks:
    if window.K < 1:
        raise PreconditionError("the Dirac window needs K >= 1")
    if not 0.0 <= t_weight <= 1.0:
        raise PreconditionError("t_weight must lie in [0, 1]")
    blocks = {(m, k): dirac_block(params, window.N, m, k, t_weight)
              for m in range(-window.M, window.M + 1)
              for k in range(-window.K, window.K + 1)}
    return DiracBlocks(params, window, float(t_weight), blocks)


def assemble_kron(params: ModelParams, window: Window, t_weight: float) -> np.ndarray:
    """Independent dense construction from Kronecker factors, ordered (m, k, n, s).

    Used to check that the block factorisation loses nothing.
    """
    M, N, K = window.M, window.N, window.K
    Im, In, Ik = np.eye(2 * M + 1), np.eye(2 * N + 1), np.eye(2 * K + 1)
    Dm = np.diag(np.arange(-M, M + 1)).astype(complex)
    Dn = np.diag(np.arange(-N, N + 1)).astype(complex)
    Dk = np.diag(np.arange(-K, K + 1)).astype(complex)
    Y = sawtooth_matrix(N)
    x_part = np.kron(np.kron(np.kron(Dm, Ik), In), SIGMA[0]) \
        + t_weight * params.c * np.kron(np.kron(np.kron(Im, Dk), Y), SIGMA[0])
    y_part = np.kron(np.kron(np.kron(Im, Ik), Dn), SIGMA[1])
    p_part = -params.c * params.alpha * np.kron(np.kron(np.kron(Im, Dk), In), SIGMA[2])
    return TWO_PI * (x_part + y_part + p_part)


def hermiticity_defect(d: DiracBlocks) -> float:
    return max(float(np.abs(b - b.conj().T).max()) for b in d.blocks.values())


# ---------------------------------------------------------------------------
# eigensolve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: np.ndarray  # sorted ascending
    m: np.ndarray
    k: np.ndarray
    slot: np.ndarray
    vectors: Optional[Dict[BlockKey, np.ndarray]] = field(default=None, repr=False)

    def __len__(self):
        return len(self.eigenvalues)

    def counting(self, lam) -> np.ndarray:
        """N(Lambda) = #{j : |lambda_j| <= Lambda}."""
        mags = np.sort(np.abs(self.eigenvalues))
        return np.searchsorted(mags, np.asarray(lam, dtype=float), side="right")

    def nonzero_by_modulus(self, tol: float = 1e-9) -> np.ndarray:
        """Indices of nonzero eigenvalues, ascending in |lambda| (stable)."""
        mags = np.abs(self.eigenvalues)
        order = np.argsort(mags, kind="stable")
        return order[mags[order] > tol]

    def cesaro(self, weights: Optional[np.ndarray] = None, tol: float = 1e-9) -> np.ndarray:
        """Partial sums sum_{n<=N} w_n |lambda_n|^{-3} over the nonzero spectrum."""
        idx = self.nonzero_by_modulus(tol)
        w = np.ones(len(idx)) if weights is None else np.asarray(weights)[idx]
        return np.cumsum(w * np.abs(self.eigenvalues[idx]) ** -3.0)

    def to_rows(self):
        return zip(self.eigenvalues.tolist(), self.m.tolist(), self.k.tolist(), self.slot.tolist())


def _solve_block(item):
    key, mat = item
    try:
        return key, np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise EigenFailure(key, exc) from exc


def eigensolve(d: DiracBlocks, keep_vectors: bool = False, workers: int = 1) -> SpectralReport:
    items = [(key, d.blocks[key]) for key in d.keys()]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(_solve_block, items))
    else:
        solved = [_solve_block(it) for it in items]
    vals, ms, ks, slots, vecs = [], [], [], [], {}
    for (m, k), (w, v) in solved:
        if not np.all(np.isfinite(w)):
            raise EigenFailure((m, k), "non-finite eigenvalue")
        vals.append(w)
        ms.append(np.full(w.size, m))
        ks.append(np.full(w.size, k))
        slots.append(np.arange(w.size))
        if keep_vectors:
            vecs[(m, k)] = v
    lam = np.concatenate(vals)
    m_arr, k_arr, s_arr = np.concatenate(ms), np.concatenate(ks), np.concatenate(slots)
    order = np.lexsort((s_arr, k_arr, m_arr, lam))
    return SpectralReport(lam[order], m_arr[order], k_arr[order], s_arr[order],
                          vecs if keep_vectors else None)


def closed_form_spectrum(params: ModelParams, window: Window) -> np.ndarray:
    """Sorted {+-2 pi sqrt(m^2 + n^2 + c^2 alpha^2 k^2)} over the window (t = 0)."""
    m = np.arange(-window.M, window.M + 1)[:, None, None]
    n = np.arange(-window.N, window.N + 1)[None, :, None]
    k = np.arange(-window.K, window.K + 1)[None, None, :]
    r = TWO_PI * np.sqrt(m ** 2 + n ** 2 + (params.c * params.alpha * k) ** 2).ravel()
    return np.sort(np.concatenate([r, -r]))


# ---------------------------------------------------------------------------
# spectral-dimension estimate
# ---------------------------------------------------------------------------

def resolved_cutoff(params: ModelParams, window: Window) -> float:
    """Largest Lambda whose ellipsoid {|lambda| <= Lambda} fits inside the window."""
    return TWO_PI * min(window.M, window.N, params.c * params.alpha * window.K)


def weyl_fit(report: SpectralReport, params: ModelParams, window: Window,
             samples: int = 40) -> dict:
    """Least-squares slope of log N(Lambda) against log Lambda over the middle decade.

    The resolved range runs from the smallest nonzero |lambda| to the window
    cutoff; the fit uses the decade centred (geometrically) in that range.
    """
    lo = float(np.abs(report.eigenvalues[report.nonzero_by_modulus()][0]))
    hi = resolved_cutoff(params, window)
    centre = math.sqrt(lo * hi)
    a, b = centre / math.sqrt(10.0), centre * math.sqrt(10.0)
    lam = np.geomspace(a, b, samples)
    counts = report.counting(lam)
    slope, intercept = np.polyfit(np.log(lam), np.log(counts), 1)
    return {"slope": float(slope), "intercept": float(intercept), "range": [a, b],
            "Lambda": lam.tolist(), "N": counts.tolist()}


# ---------------------------------------------------------------------------
# relative bound and symmetries
# ---------------------------------------------------------------------------

def relative_bound(d_T: DiracBlocks,
                   perturbation: Optional[Callable[[ModelParams, int, int], np.ndarray]] = None) -> float:
    """max over blocks of ||S_block (T_block + i)^{-1}||."""
    if d_T.t_weight != 0:
        raise PreconditionError("relative_bound needs the unperturbed operator (t_weight = 0)")
    pert = perturbation or s_part_block
    worst = 0.0
    N = d_T.window.N
    eye = np.eye(d_T.size)
    for (m, k), T in d_T.blocks.items():
        S = pert(d_T.params, N, k)
        if not np.any(S):
            continue
        R = np.linalg.solve((T + 1j * eye).T, S.T).T  # S (T + i)^{-1}
        worst = max(worst, float(np.linalg.norm(R, 2)))
    return worst


def ut_symmetry(d: DiracBlocks, t: float) -> float:
    """max over blocks of ||[U_t, block]|| with U_t = e(k t) on charge k."""
    worst = 0.0
    for (m, k), blk in d.blocks.items():
        U = e(k * t) * np.eye(blk.shape[0])
        worst = max(worst, float(np.abs(U @ blk - blk @ U).max()))
    return worst


def weyl_perturbation_gap(params: ModelParams, window: Window) -> float:
    """max_j |lambda_j(t=1) - lambda_j(t=0)| - 2 pi c |k| ||Y||, maximised over blocks."""
    ynorm = float(np.linalg.norm(_sawtooth_matrix(window.N), 2))
    worst = -np.inf
    for m in range(-window.M, window.M + 1):
        for k in range(-window.K, window.K + 1):
            w1 = np.linalg.eigvalsh(dirac_block(params, window.N, m, k, 1.0))
            w0 = np.linalg.eigvalsh(dirac_block(params, window.N, m, k, 0.0))
            worst = max(worst, float(np.abs(w1 - w0).max()) - TWO_PI * params.c * abs(k) * ynorm)
    return worst


# ---------------------------------------------------------------------------
# derivations as commutators on the truncated GNS space
# ---------------------------------------------------------------------------

def _gns_indices(window: Window):
    return [(m, n, k) for m in range(-window.M, window.M + 1)
            for n in range(-window.N, window.N + 1)
            for k in range(-window.K, window.K + 1)]


def left_multiplication(a: AlgebraElement, window: Window, params: ModelParams) -> np.ndarray:
    """Matrix of b -> a * b on the truncated GNS space (compressed to the window)."""
    idx = _gns_indices(window)
    pos = {t: i for i, t in enumerate(idx)}
    L = np.zeros((len(idx), len(idx)), dtype=complex)
    for col, b in enumerate(idx):
        for ia, va in a.items():
            tgt = (ia[0] + b[0], ia[1] + b[1], ia[2] + b[2])
            row = pos.get(tgt)
            if row is not None:
                L[row, col] += va * e(structure_phase(ia, b, params))
    return L


def dirac_component(j: int, window: Window, params: ModelParams, t_weight: float = 1.0) -> np.ndarray:
    """Scalar coefficient operator of sigma_j in A_t on the truncated GNS space."""
    idx = _gns_indices(window)
    pos = {t: i for i, t in enumerate(idx)}
    D = np.zeros((len(idx), len(idx)), dtype=complex)
    Y = _sawtooth_matrix(window.N)
    for col, (m, n, k) in enumerate(idx):
        if j == 1:
            D[col, col] += TWO_PI * m
            if k and t_weight:
                for n2 in range(-window.N, window.N + 1):
                    D[pos[(m, n2, k)], col] += TWO_PI * params.c * k * t_weight * Y[n2 + window.N, n + window.N]
        elif j == 2:
            D[col, col] = TWO_PI * n
        elif j == 3:
            D[col, col] = -TWO_PI * params.c * params.alpha * k
        else:
            raise ValueError(f"component index must be 1, 2 or 3, got {j}")
    return D


# delta_j = SIGN_j * i [D_j, L_a]; delta_3 flips sign so that delta_3 = 2 pi i c alpha k
DERIVATION_SIGN = {1: 1.0, 2: 1.0, 3: -1.0}


def derivation_matrix(j: int, window: Window, params: ModelParams) -> np.ndarray:
    """The derivation delta_j realised as an operator on the truncated GNS space."""
    return DERIVATION_SIGN[j] * 1j * dirac_component(j, window, params)


def derivation_commutator_oracle(j: int, a: AlgebraElement, window: Window,
                                 params: ModelParams) -> AlgebraElement:
    """delta_j(a) read off from the matrix commutator with left multiplication.

    The column of the unit phi_{0,0,0} of SIGN_j * i [D_j, L_a] carries the
    coefficients of delta_j(a) (truncated to the window).
    """
    rm, rn, rk = a.radius()
    if 2 * rm > window.M or 2 * rn > window.N or 2 * rk > window.K:
        raise MarginViolation(f"support radius {(rm, rn, rk)} too large for window {window}")
    idx = _gns_indices(window)
    D = dirac_component(j, window, params)
    L = left_multiplication(a, window, params)
    C = DERIVATION_SIGN[j] * 1j * (D @ L - L @ D)
    col = C[:, idx.index((0, 0, 0))]
    return AlgebraElement({t: v for t, v in zip(idx, col) if abs(v) > 1e-15})


def commutator_left_defect(j: int, a: AlgebraElement, window: Window, params: ModelParams,
                           margin: Optional[Tuple[int, int, int]] = None) -> float:
    """max |(i[D_j, L_a] - L_{delta_j a}) restricted to interior rows and columns|."""
    from .algebra import derivation
    rm, rn, rk = a.radius()
    D = dirac_component(j, window, params)
    L = left_multiplication(a, window, params)
    C = DERIVATION_SIGN[j] * 1j * (D @ L - L @ D)
    La = left_multiplication(derivation(j, a, params, Window(window.M, 4 * window.N, window.K)),
                             window, params)
    mm, mn, mk = margin or (rm, rn + window.N // 2, rk)
    inner = [i for i, (m, n, k) in enumerate(_gns_indices(window))
             if abs(m) <= window.M - mm and abs(n) <= window.N - mn and abs(k) <= window.K - mk]
    sub = np.ix_(inner, inner)
    return float(np.abs((C - La)[sub]).max())


def smooth_bracket_residual(params: ModelParams, N: int, k: int, m: int = 0,
                            width: float = 3.0) -> float:
    """||([delta_1, delta_2] - gamma delta_3) v|| / ||v|| on one (m, k) fibre.

    v has Gaussian-decaying, odd n-coefficients, so its position-space value at
    the sawtooth jump y = 0 vanishes exactly.
    """
    from .algebra import bracket_constant
    n = np.arange(-N, N + 1)
    v = n * np.exp(-(n / width) ** 2)
    eye = np.eye(2 * N + 1)
    d1 = 1j * TWO_PI * (m * eye + params.c * k * _sawtooth_matrix(N))
    d2 = 1j * TWO_PI * np.diag(n).astype(complex)
    d3 = 1j * TWO_PI * params.c * params.alpha * k * eye
    lhs = (d1 @ d2 - d2 @ d1 - bracket_constant(params) * d3) @ v
    return float(np.linalg.norm(lhs) / np.linalg.norm(v))


# ---------------------------------------------------------------------------
# Dixmier-trace surrogate
# ---------------------------------------------------------------------------

def _shift_matrix(N: int, s: int) -> np.ndarray:
    return np.eye(2 * N + 1, k=-s)  # e_n -> e_{n+s}


def block_observable(a: AlgebraElement, mat2: np.ndarray, params: ModelParams,
                     N: int, k: int) -> np.ndarray:
    """Diagonal (m, k) block of L_a (x) mat2; only m = k = 0 components survive."""
    out = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
    for (ma, na, ka), v in a.items():
        if ma == 0 and ka == 0:
            out = out + v * e(structure_phase((0, na, 0), (0, 0, k), params)) * _shift_matrix(N, na)
    return np.kron(out, np.asarray(mat2, dtype=complex))


def expectation_weights(a: AlgebraElement, mat2: np.ndarray, d: DiracBlocks,
                        report: SpectralReport) -> np.ndarray:
    """<psi_j, (a (x) mat2) psi_j> aligned with report.eigenvalues."""
    w = np.zeros(len(report), dtype=complex)
    pos = {}
    for i, (m, k, s) in enumerate(zip(report.m, report.k, report.slot)):
        pos[(int(m), int(k), int(s))] = i
    N = d.window.N
    obs_cache: Dict[int, np.ndarray] = {}
    for key in d.keys():
        m, k = key
        if report.vectors is not None:
            vecs = report.vectors[key]
        else:
            vecs = np.linalg.eigh(d.blocks[key])[1]
        if k not in obs_cache:
            obs_cache[k] = block_observable(a, mat2, d.params, N, k)
        vals = np.sum(vecs.conj() * (obs_cache[k] @ vecs), axis=0)
        for s, val in enumerate(vals):
            w[pos[(m, k, s)]] = val
    return w


def dixmier_ratio(a: AlgebraElement, mat2: np.ndarray, report: SpectralReport,
                  d: DiracBlocks, trend: bool = False):
    """sigma_N(a) / sigma_N(1) with sigma_N the log-Cesaro mean of <psi, a psi> |lambda|^{-3}.

    With ``trend`` the ratios at N/4, N/2 and N are returned as well.
    """
    w = expectation_weights(a, mat2, d, report)
    num = report.cesaro(w)
    den = report.cesaro()
    n_tot = len(den)
    ratio = complex(num[-1] / den[-1])
    if not trend:
        return ratio
    pts = [max(n_tot // 4, 1), max(n_tot // 2, 1), n_tot]
    return ratio, {int(p): complex(num[p - 1] / den[p - 1]) for p in pts}


def dixmier_sigma(report: SpectralReport, weights: Optional[np.ndarray] = None) -> float:
    """sigma_N = (1/log N) sum_{n <= N} w_n |lambda_n|^{-3} at the full N."""
    cs = report.cesaro(weights)
    return float(np.real(cs[-1]) / math.log(len(cs)))
