"""Non-autodiff numerical kernels: FFT (with a differentiable wrapper),
dense Cholesky, and a sparse finite-difference Helmholtz solver.

The FFT forward/inverse pair wraps pocketfft (via numpy.fft), which handles
arbitrary lengths without zero-padding; what this module adds is the
ComplexPair/Spectrum surface and the adjoint backward rule that makes the
transform usable inside a gradient tape. The Helmholtz operator is assembled
locally as CSR (so residuals can be checked independently) and factored by a
direct sparse LU; at the wavenumbers used here the operator is indefinite,
which is why no iterative solver is offered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .autodiff import ContractError, Tensor, _maybe_record

__all__ = [
    "ComplexPair",
    "Spectrum",
    "SparseMatrix",
    "FactorizationError",
    "SolverError",
    "fft_forward",
    "fft_inverse",
    "cholesky",
    "helmholtz_operator",
    "helmholtz_solve",
]


class FactorizationError(RuntimeError):
    """Cholesky failed to produce a positive pivot (after one jitter retry)."""


class SolverError(RuntimeError):
    """The discrete Helmholtz system is (numerically) singular or the
    solve did not meet the residual contract."""


@dataclass
class ComplexPair:
    """A complex array carried as two equal-shape real Tensors."""

    re: Tensor
    im: Tensor

    def __post_init__(self):
        if self.re.shape != self.im.shape:
            raise ContractError(
                f"ComplexPair parts must share a shape, got {self.re.shape} "
                f"vs {self.im.shape}")

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "ComplexPair":
        z = np.asarray(z, dtype=np.complex128)
        return cls(Tensor(z.real.copy()), Tensor(z.imag.copy()))

    @classmethod
    def from_real(cls, x) -> "ComplexPair":
        x = np.asarray(x, dtype=np.float64)
        return cls(Tensor(x), Tensor(np.zeros_like(x)))

    def to_complex(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data


@dataclass
class Spectrum:
    """DFT coefficients, bin k of an unnormalized forward transform."""

    coeffs: ComplexPair
    length: int


def _fft_pair(pair: ComplexPair, fn, adj_fn, op: str):
    """Shared machinery for the forward/inverse transforms; both are linear,
    so the backward rule is the (conjugate) adjoint applied to the output
    gradient, recorded as one two-output tape node."""
    z = pair.re.data + 1j * pair.im.data
    if z.shape[0] == 0:
        raise ContractError(f"{op}: empty transform (length 0)")
    out = fn(z)
    re, im = Tensor(np.ascontiguousarray(out.real)), Tensor(np.ascontiguousarray(out.imag))

    def bwd(gs):
        g_re, g_im = gs
        g = (0.0 if g_re is None else g_re) + 1j * (0.0 if g_im is None else g_im)
        a = adj_fn(np.asarray(g, dtype=np.complex128))
        ga = np.ascontiguousarray(a.real)
        gb = np.ascontiguousarray(a.imag)
        return ga, gb

    _maybe_record(op, (pair.re, pair.im), (re, im), bwd)
    return ComplexPair(re, im)


def fft_forward(signal: ComplexPair) -> Spectrum:
    """Unnormalized forward DFT along axis 0: coeff[k] = sum_n x[n] e^{-2pi i kn/N}.

    Works for arbitrary N. The backward rule is the adjoint transform
    (conjugate DFT), so the op composes with the gradient tape.
    """
    n = signal.re.data.shape[0]
    coeffs = _fft_pair(
        signal,
        lambda z: np.fft.fft(z, axis=0),
        lambda g: np.conj(np.fft.fft(np.conj(g), axis=0)),
        "fft_forward",
    )
    return Spectrum(coeffs=coeffs, length=n)


def fft_inverse(spec: Spectrum) -> ComplexPair:
    """Inverse of fft_forward, with the 1/N normalization."""
    return _fft_pair(
        spec.coeffs,
        lambda z: np.fft.ifft(z, axis=0),
        lambda g: np.conj(np.fft.ifft(np.conj(g), axis=0)),
        "fft_inverse",
    )


def dft_direct(x: np.ndarray) -> np.ndarray:
    """O(N^2) reference DFT (test oracle; axis 0)."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[0]
    k = np.arange(n)
    w = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return w @ x


# ---------------------------------------------------------------------------
# dense Cholesky

_CHOL_JITTER = 1e-10


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L L^T = a for symmetric positive definite a.

    If a pivot stalls (<= 0), a jitter of 1e-10 * I is added once and the
    factorization restarted; Matern covariance matrices at small correlation
    lengths sit near the float64 SPD boundary. A second failure raises
    FactorizationError naming the failing pivot.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"cholesky expects a square matrix, got {a.shape}")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ContractError("cholesky expects a symmetric matrix")

    def factor(m: np.ndarray) -> tuple[np.ndarray | None, int]:
        n = m.shape[0]
        l = np.zeros_like(m)
        for j in range(n):
            d = m[j, j] - l[j, :j] @ l[j, :j]
            if d <= 0.0 or not np.isfinite(d):
                return None, j
            l[j, j] = np.sqrt(d)
            if j + 1 < n:
                l[j + 1:, j] = (m[j + 1:, j] - l[j + 1:, :j] @ l[j, :j]) / l[j, j]
        return l, -1

    l, pivot = factor(a)
    if l is None:
        l, pivot = factor(a + _CHOL_JITTER * np.eye(a.shape[0]))
        if l is None:
            raise FactorizationError(
                f"matrix is not positive definite: pivot {pivot} non-positive "
                f"even after {_CHOL_JITTER:.0e} jitter")
    return l


# ---------------------------------------------------------------------------
# sparse Helmholtz

@dataclass
class SparseMatrix:
    """CSR storage for the interior Helmholtz operator."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = np.zeros(self.n)
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            y[i] = self.values[lo:hi] @ x[self.indices[lo:hi]]
        return y

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.indices, self.indptr),
                             shape=(self.n, self.n))


def helmholtz_operator(m: int, k: float, h: float) -> SparseMatrix:
    """5-point discretization of u_xx + u_yy + k^2 u on the (m-2)^2 interior
    of an m x m grid with spacing h, homogeneous Dirichlet boundary.

    Rows follow interior raster order (x fastest); column indices are stored
    strictly increasing within each row and the stencil is structurally
    symmetric.
    """
    if m < 3:
        raise ContractError(f"grid must have an interior, got m={m}")
    ni = m - 2
    n = ni * ni
    inv_h2 = 1.0 / (h * h)
    diag = -4.0 * inv_h2 + k * k

    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = np.empty(5 * n, dtype=np.int64)
    values = np.empty(5 * n)
    pos = 0
    for j in range(ni):          # y index, slow
        for i in range(ni):      # x index, fast
            row = j * ni + i
            if j > 0:
                indices[pos] = row - ni
                values[pos] = inv_h2
                pos += 1
            if i > 0:
                indices[pos] = row - 1
                values[pos] = inv_h2
                pos += 1
            indices[pos] = row
            values[pos] = diag
            pos += 1
            if i < ni - 1:
                indices[pos] = row + 1
                values[pos] = inv_h2
                pos += 1
            if j < ni - 1:
                indices[pos] = row + ni
                values[pos] = inv_h2
                pos += 1
            indptr[row + 1] = pos
    return SparseMatrix(n=n, indptr=indptr, indices=indices[:pos].copy(),
                        values=values[:pos].copy())


_RESIDUAL_TOL = 1e-8
_PIVOT_RATIO_TOL = 1e-12

# (m, k, h) -> (csr operator, LU factors); one entry per benchmark setting
_solver_cache: dict[tuple[int, float, float], tuple[sp.csr_matrix, spla.SuperLU]] = {}


def helmholtz_solve(f_grid: np.ndarray, k: float, h: float) -> np.ndarray:
    """Solve u_xx + u_yy + k^2 u = f with u = 0 on the boundary of an m x m
    grid (boundary nodes included in the arrays, eliminated from the system).

    Returns u on the full grid with exact zero boundary. Raises SolverError
    if the system is numerically singular (k^2 at a discrete Laplacian
    eigenvalue) or the residual contract |A u - f|_inf / |f|_inf < 1e-8
    fails; both cases call for a different grid. Factorizations are cached
    per (m, k, h), so repeated solves (GRF sampling) cost one triangular
    solve each.
    """
    f_grid = np.asarray(f_grid, dtype=np.float64)
    if f_grid.ndim != 2 or f_grid.shape[0] != f_grid.shape[1]:
        raise ContractError(f"f must be a square grid, got {f_grid.shape}")
    m = f_grid.shape[0]

    key = (m, float(k), float(h))
    cached = _solver_cache.get(key)
    if cached is None:
        a_csr = helmholtz_operator(m, k, h).to_scipy()
        try:
            lu = spla.splu(a_csr.tocsc())
        except RuntimeError as exc:  # exactly singular
            raise SolverError(
                f"Helmholtz system singular at k={k} on an m={m} grid "
                f"(k^2 hits a discrete Laplacian eigenvalue); change the grid"
            ) from exc
        udiag = np.abs(lu.U.diagonal())
        if udiag.min() < _PIVOT_RATIO_TOL * udiag.max():
            raise SolverError(
                f"Helmholtz system numerically singular at k={k} on an m={m} "
                f"grid; change the grid")
        cached = (a_csr, lu)
        _solver_cache[key] = cached
    a_csr, lu = cached

    f_int = f_grid[1:-1, 1:-1].ravel()
    u_int = lu.solve(f_int)

    f_norm = np.abs(f_int).max()
    if f_norm > 0.0:
        residual = np.abs(a_csr @ u_int - f_int).max() / f_norm
        if residual >= _RESIDUAL_TOL:
            raise SolverError(
                f"Helmholtz residual {residual:.2e} exceeds {_RESIDUAL_TOL:.0e} "
                f"at k={k}, m={m}; the system is ill-conditioned, change the grid")

    u = np.zeros_like(f_grid)
    u[1:-1, 1:-1] = u_int.reshape(m - 2, m - 2)
    return u
