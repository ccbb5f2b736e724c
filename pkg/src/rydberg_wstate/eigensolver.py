"""Lanczos extremal eigensolver with full reorthogonalisation, plus a dense oracle."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

DEFAULT_TOL = 1e-10
DEFAULT_KRYLOV = 160
DENSE_LIMIT = 4000
_EPS = np.finfo(float).eps


class NoConvergenceError(RuntimeError):
    """Lanczos exhausted its iteration budget; `best` holds the diagnostics so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DimensionExceededError(ValueError):
    pass


@dataclass
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    residuals: np.ndarray
    iterations: int
    converged: bool
    ritz_history: list[float] = field(default_factory=list, repr=False)


def _as_matvec(op):
    if hasattr(op, "apply") and hasattr(op, "dim"):
        return op.apply, op.dim
    if callable(op) and hasattr(op, "shape"):
        return op, op.shape[0]
    a = op
    return (lambda v: a @ v), a.shape[0]


def _orthogonalize(w, basis):
    # two passes of classical Gram-Schmidt ("twice is enough")
    for _ in range(2):
        if basis.shape[1]:
            w = w - basis @ (basis.conj().T @ w)
    return w


def _lanczos_run(matvec, q0, locked, m, tol, history):
    """One Lanczos cycle from q0; returns (theta, x, residual, matvecs)."""
    dim = q0.shape[0]
    m = min(m, dim - locked.shape[1])
    Q = np.empty((dim, m), dtype=complex)
    alphas, betas = [], []
    Q[:, 0] = q0
    theta, s = None, None
    k = 0
    for k in range(m):
        w = matvec(Q[:, k])
        alphas.append(float(np.real(np.vdot(Q[:, k], w))))
        w = _orthogonalize(w, np.hstack([locked, Q[:, : k + 1]]))
        beta = float(np.linalg.norm(w))
        vals, vecs = eigh_tridiagonal(np.array(alphas), np.array(betas), select="i", select_range=(0, 0))
        theta, s = float(vals[0]), vecs[:, 0]
        history.append(theta)
        spread = max(abs(alphas[0]), np.max(np.abs(alphas)) + 2 * max(betas, default=0.0))
        est = beta * abs(s[-1])
        if est <= _target(tol, theta, spread) or beta <= 1e3 * _EPS * spread or k == m - 1:
            break
        betas.append(beta)
        Q[:, k + 1] = w / beta
    x = Q[:, : k + 1] @ s
    x = _orthogonalize(x, locked)
    x /= np.linalg.norm(x)
    residual = float(np.linalg.norm(matvec(x) - theta * x))
    return theta, x, residual, k + 2, spread


def _target(tol, theta, spread):
    # relative criterion, floored at what double-precision matvecs can resolve
    return max(tol * max(1.0, abs(theta)), 1e3 * _EPS * spread)


def lowest_eigenpairs(op, count: int = 1, tol: float = DEFAULT_TOL, max_iter: int = 20000,
                      seed: int = 0, krylov_dim: int = DEFAULT_KRYLOV) -> EigResult:
    """`count` lowest eigenpairs of a Hermitian operator.

    Degenerate levels are resolved one vector at a time by deflating against the
    already converged vectors; an unconverged cycle restarts from its best Ritz
    vector.  Converged means ``residual <= tol * max(1, |E|)``.
    """
    matvec, dim = _as_matvec(op)
    if count < 1 or count > dim:
        raise ValueError(f"count must lie in [1, {dim}]")
    rng = np.random.default_rng(seed)
    locked = np.zeros((dim, 0), dtype=complex)
    values, residuals, history = [], [], []
    used = 0
    for _ in range(count):
        q = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        while True:
            q = _orthogonalize(q, locked)
            q /= np.linalg.norm(q)
            theta, x, res, nit, spread = _lanczos_run(matvec, q, locked, krylov_dim, tol, history)
            used += nit
            if res <= _target(tol, theta, spread):
                break
            if used >= max_iter:
                best = EigResult(np.array(values + [theta]), np.column_stack([locked, x]),
                                 np.array(residuals + [res]), used, False, history)
                raise NoConvergenceError(
                    f"Lanczos did not converge in {used} matvecs (residual {res:.3e}, E={theta:.12g})", best)
            q = x
        values.append(theta)
        residuals.append(res)
        locked = np.column_stack([locked, x])
    order = np.argsort(values, kind="stable")
    return EigResult(np.array(values)[order], locked[:, order], np.array(residuals)[order], used, True, history)


def dense_matrix(op) -> np.ndarray:
    if hasattr(op, "to_dense"):
        return op.to_dense()
    return np.asarray(op)


def dense_spectrum(op, limit: int = DENSE_LIMIT) -> EigResult:
    """Full spectrum by dense Hermitian diagonalisation of the assembled matrix."""
    _, dim = _as_matvec(op)
    if dim > limit:
        raise DimensionExceededError(f"dimension {dim} exceeds dense limit {limit}")
    h = dense_matrix(op)
    vals, vecs = np.linalg.eigh(h)
    res = np.linalg.norm(h @ vecs - vecs * vals, axis=0)
    return EigResult(vals, vecs, res, 0, True)
