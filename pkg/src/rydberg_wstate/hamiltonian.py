"""Matrix-free excitation-boson Hamiltonian.

    H = eps0 sum_n c+_n c_n - t_e sum_n (c+_{n+1} c_n + h.c.) + omega_b sum_n b+_n b_n
      + g_B omega_b sum_n c+_n c_n (x_{n+1} - x_{n-1})
      + g_P omega_b sum_n (c+_{n+1} c_n + h.c.)(x_{n+1} - x_n),      x_n = b_n + b+_n

All energies are over hbar (rad/s).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator

from .hilbert import RealSpaceBasis, SectorBasis
from .params import DerivedParams, PhysicalParams, derive


class DimensionMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HamiltonianOperator:
    """Hermitian action of H on a :class:`RealSpaceBasis` or :class:`SectorBasis`.

    The operator stores no matrix; `apply` composes per-site displacement maps
    of the boson space with the coupling constants.  Instances are immutable
    and `apply` is reentrant.
    """

    basis: RealSpaceBasis | SectorBasis
    derived: DerivedParams
    include_b: bool = True
    include_p: bool = True
    include_eps0: bool = True

    @property
    def dim(self) -> int:
        return self.basis.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dim, self.dim)

    @property
    def dtype(self):
        return np.complex128 if isinstance(self.basis, SectorBasis) else np.float64

    @property
    def eps0(self) -> float:
        return self.derived.eps0 if self.include_eps0 else 0.0

    @property
    def _cb(self) -> float:
        return self.derived.g_b * self.derived.omega_b if self.include_b else 0.0

    @property
    def _cp(self) -> float:
        return self.derived.g_p * self.derived.omega_b if self.include_p else 0.0

    def diagonal(self) -> np.ndarray:
        bos = self.derived.omega_b * self.basis.bosons.totals
        if isinstance(self.basis, RealSpaceBasis):
            if self.basis.sector == 0:
                return bos.astype(float)
            return np.tile(self.eps0 + bos, self.basis.n_sites)
        return self.eps0 + bos

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(f"vector of shape {v.shape} for operator of dimension {self.dim}")
        if isinstance(self.basis, SectorBasis):
            return self._apply_sector(v)
        if self.basis.sector == 0:
            return self.derived.omega_b * self.basis.bosons.totals * v
        return self._apply_realspace(v)

    __call__ = apply

    def __matmul__(self, v):
        return self.apply(v)

    def _apply_realspace(self, v: np.ndarray) -> np.ndarray:
        n_sites = self.basis.n_sites
        bs = self.basis.bosons
        t_e, cb, cp = self.derived.t_e, self._cb, self._cp
        vv = v.reshape(n_sites, bs.dim)
        out = (self.eps0 + self.derived.omega_b * bs.totals)[None, :] * vv
        if t_e != 0:
            out -= t_e * (np.roll(vv, 1, axis=0) + np.roll(vv, -1, axis=0))
        if cb == 0 and cp == 0:
            return out.reshape(-1)
        # x_j enters the breathing term of sites j -+ 1 and the Peierls terms
        # of bonds (j-1, j) with + sign and (j, j+1) with - sign
        for j in range(n_sites):
            left, right = (j - 1) % n_sites, (j + 1) % n_sites
            y = (bs.displacement(j) @ vv[[left, j, right]].T).T
            out[left] += cb * y[0] + cp * y[1]
            out[right] -= cb * y[2] + cp * y[1]
            out[j] += cp * (y[0] - y[2])
        return out.reshape(-1)

    def _apply_sector(self, v: np.ndarray) -> np.ndarray:
        basis = self.basis
        bs = basis.bosons
        last = basis.n_sites - 1
        t_e, cb, cp = self.derived.t_e, self._cb, self._cp
        v = v.astype(np.complex128, copy=False)
        out = (self.eps0 + self.derived.omega_b * bs.totals) * v
        if cb != 0:
            bs.displace(1 % basis.n_sites, v, cb, out)
            bs.displace(last, v, -cb, out)
        # hop to site +1 over bond (0, 1), then re-pin the excitation at 0
        fwd = -t_e * v
        # hop to site -1 over bond (N-1, 0)
        bwd = -t_e * v
        if cp != 0:
            bs.displace(1 % basis.n_sites, v, cp, fwd)
            bs.displace(0, v, -cp, fwd)
            bs.displace(0, v, cp, bwd)
            bs.displace(last, v, -cp, bwd)
        phase = np.exp(-1j * basis.k)
        out[bs.shift_perm(-1)] += phase * fwd
        out[bs.shift_perm(1)] += np.conj(phase) * bwd
        return out

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def _sector_sparse(self) -> sparse.csr_matrix:
        # same terms as _apply_sector, assembled once
        basis = self.basis
        bs = basis.bosons
        last = basis.n_sites - 1
        t_e, cb, cp = self.derived.t_e, self._cb, self._cp
        x = bs.displacement
        eye_d = sparse.identity(bs.dim, format="csr")
        rows = np.arange(bs.dim)

        def perm(steps):
            return sparse.csr_matrix((np.ones(bs.dim), (bs.shift_perm(steps), rows)), shape=(bs.dim, bs.dim))

        h = sparse.diags(self.eps0 + self.derived.omega_b * bs.totals).astype(np.complex128)
        fwd = -t_e * eye_d
        bwd = -t_e * eye_d
        if cb != 0:
            h = h + cb * (x(1 % basis.n_sites) - x(last))
        if cp != 0:
            fwd = fwd + cp * (x(1 % basis.n_sites) - x(0))
            bwd = bwd + cp * (x(0) - x(last))
        phase = np.exp(-1j * basis.k)
        h = h + phase * (perm(-1) @ fwd) + np.conj(phase) * (perm(1) @ bwd)
        return sparse.csr_matrix(h)

    def to_sparse(self) -> sparse.csr_matrix:
        """Assembled CSR matrix (time stepping and dense oracles)."""
        if isinstance(self.basis, SectorBasis):
            return self._sector_sparse()
        bs = self.basis.bosons
        if self.basis.sector == 0:
            return sparse.diags(self.derived.omega_b * bs.totals.astype(float)).tocsr()
        n_sites = self.basis.n_sites
        cb, cp = self._cb, self._cp
        eye_d = sparse.identity(bs.dim, format="csr")
        shift = sparse.csr_matrix(np.roll(np.eye(n_sites), 1, axis=0))
        h = sparse.kron(sparse.identity(n_sites), sparse.diags(self.eps0 + self.derived.omega_b * bs.totals))
        h = h - self.derived.t_e * sparse.kron(shift + shift.T, eye_d)
        if cb or cp:
            for j in range(n_sites):
                left, right = (j - 1) % n_sites, (j + 1) % n_sites
                site = np.zeros((n_sites, n_sites))
                site[left, left] += cb
                site[right, right] -= cb
                site[left, j] += cp
                site[j, left] += cp
                site[right, j] -= cp
                site[j, right] -= cp
                h = h + sparse.kron(sparse.csr_matrix(site), bs.displacement(j))
        return sparse.csr_matrix(h)

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.apply, rmatvec=self.apply, dtype=np.complex128)

    def boson_number(self, v: np.ndarray) -> float:
        """<v| sum_n b+_n b_n |v> / <v|v>."""
        w = np.abs(np.asarray(v)) ** 2
        totals = self.basis.bosons.totals
        if isinstance(self.basis, RealSpaceBasis) and self.basis.sector == 1:
            totals = np.tile(totals, self.basis.n_sites)
        return float(w @ totals / w.sum())


def vertex_ss(g, omega_b, k, q):
    """Sweet-spot vertex 2 i g omega_b (sin k - sin q - sin(k+q)); vanishes at k = pi."""
    k = np.asarray(k, dtype=float)
    q = np.asarray(q, dtype=float)
    return 2j * g * omega_b * (np.sin(k) - np.sin(q) - np.sin(k + q))


def realspace_operator(p: PhysicalParams, sector: int = 1, **switches) -> HamiltonianOperator:
    return HamiltonianOperator(RealSpaceBasis(p.n_sites, p.max_bosons, sector), derive(p), **switches)


def sector_operator(p: PhysicalParams, k: float, **switches) -> HamiltonianOperator:
    """H restricted to the total-quasimomentum-`k` sector."""
    return HamiltonianOperator(SectorBasis(p.n_sites, p.max_bosons, k), derive(p), **switches)


def bloch_state(basis: RealSpaceBasis, k: float) -> np.ndarray:
    """Zero-boson Bloch state N^{-1/2} sum_n e^{ikn} |exc n; 0_b>: the twisted W state."""
    if basis.sector != 1:
        raise ValueError("Bloch states live in the one-excitation sector")
    n = np.arange(basis.n_sites)
    psi = np.zeros(basis.size, dtype=complex)
    psi[n * basis.bosons.dim] = np.exp(1j * k * n) / np.sqrt(basis.n_sites)
    return psi
