"""One-excitation x truncated-boson Hilbert spaces and momentum sectors.

Boson configurations are rows of an integer array ``(dim, N)``, ordered
lexicographically by occupation vector, truncated by total boson number
``sum(m) <= M``.  Sites are labelled ``0 .. N-1`` with periodic wrap-around.
The one-site translation ``T`` maps site ``n`` to ``n + 1``.
"""
from __future__ import annotations

import math
import warnings
from functools import cached_property, lru_cache

import numpy as np
from scipy import sparse

BosonConfig = tuple[int, ...]

DEFAULT_MAX_DIM = 2_000_000
MOMENTUM_ATOL = 1e-9


class CapacityError(RuntimeError):
    """Requested basis exceeds the configured maximum dimension."""


class InvalidMomentumError(ValueError):
    """Quasimomentum is not of the form 2 pi j / N."""


class NotTranslationEigenstateWarning(UserWarning):
    pass


def boson_space_dim(n_sites: int, max_bosons: int) -> int:
    return math.comb(n_sites + max_bosons, max_bosons)


def enumerate_boson_configs(n_sites: int, max_bosons: int, max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """All occupation vectors with total <= max_bosons, lexicographically ordered."""
    if n_sites < 1 or max_bosons < 0:
        raise ValueError(f"need N >= 1 and M >= 0, got N={n_sites}, M={max_bosons}")
    dim = boson_space_dim(n_sites, max_bosons)
    if dim > max_dim:
        raise CapacityError(f"C(N+M, M) = {dim} exceeds max_dim = {max_dim}")
    return _configs(n_sites, max_bosons).copy()


@lru_cache(maxsize=64)
def _configs(n: int, m: int) -> np.ndarray:
    if n == 1:
        return np.arange(m + 1, dtype=np.int64)[:, None]
    blocks = []
    for first in range(m + 1):
        rest = _configs(n - 1, m - first)
        blocks.append(np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def commensurate_index(k: float, n_sites: int) -> int:
    """Return j in (-N/2, N/2] with k = 2 pi j / N (mod 2 pi)."""
    x = k * n_sites / (2 * np.pi)
    j = int(round(x))
    if abs(x - j) > MOMENTUM_ATOL * max(1.0, abs(x)):
        raise InvalidMomentumError(f"K={k!r} is not a multiple of 2*pi/{n_sites}")
    j %= n_sites
    if j > n_sites // 2:
        j -= n_sites
    return j


def sector_momenta(n_sites: int) -> list[float]:
    """First-Brillouin-zone momenta 2 pi j / N, j in (-N/2, N/2], ascending."""
    return [2 * np.pi * j / n_sites for j in range(-((n_sites - 1) // 2), n_sites // 2 + 1)]


class BosonSpace:
    """Truncated boson Fock space with lookup, raising tables and cyclic shifts.

    Shared by every basis built on the same ``(N, M)``; obtain instances via
    :func:`boson_space` so the tables are computed once.
    """

    def __init__(self, n_sites: int, max_bosons: int, max_dim: int = DEFAULT_MAX_DIM):
        self.n_sites = n_sites
        self.max_bosons = max_bosons
        self.configs = enumerate_boson_configs(n_sites, max_bosons, max_dim)
        self.configs.setflags(write=False)
        self.dim = len(self.configs)
        self.totals = self.configs.sum(axis=1)
        self._weights = (max_bosons + 1) ** np.arange(n_sites - 1, -1, -1, dtype=np.int64)
        self._codes = self.configs @ self._weights  # ascending by construction

    def lookup(self, configs) -> np.ndarray:
        """Indices of the given occupation rows; -1 for rows outside the space."""
        configs = np.atleast_2d(np.asarray(configs, dtype=np.int64))
        valid = (configs >= 0).all(axis=1) & (configs.sum(axis=1) <= self.max_bosons)
        codes = np.where(valid, np.clip(configs, 0, self.max_bosons) @ self._weights, -1)
        idx = np.searchsorted(self._codes, codes)
        idx = np.clip(idx, 0, self.dim - 1)
        return np.where(valid & (self._codes[idx] == codes), idx, -1)

    def index(self, config: BosonConfig) -> int:
        i = int(self.lookup([config])[0])
        if i < 0:
            raise KeyError(f"{config} not in truncated space N={self.n_sites}, M={self.max_bosons}")
        return i

    @lru_cache(maxsize=None)
    def raise_table(self, site: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(src, dst, amp) with b^dag_site |src> = amp |dst>; raises beyond M are dropped.

        The map is injective, so both ``out[dst] += amp*v[src]`` (raising) and
        ``out[src] += amp*v[dst]`` (its exact adjoint) are safe with fancy indexing.
        """
        src = np.flatnonzero(self.totals < self.max_bosons)
        raised = self.configs[src].copy()
        raised[:, site] += 1
        dst = self.lookup(raised)
        amp = np.sqrt(self.configs[src, site] + 1.0)
        return src, dst, amp

    @lru_cache(maxsize=None)
    def shift_perm(self, steps: int) -> np.ndarray:
        """perm[i] = index of config i with occupations moved `steps` sites to the right."""
        return self.lookup(np.roll(self.configs, steps % self.n_sites, axis=1))

    @lru_cache(maxsize=None)
    def displacement(self, site: int) -> sparse.csr_matrix:
        """x_site = b_site + b^dag_site on the truncated space (real symmetric)."""
        src, dst, amp = self.raise_table(site)
        raising = sparse.csr_matrix((amp, (dst, src)), shape=(self.dim, self.dim))
        return (raising + raising.T).tocsr()

    def displace(self, site: int, v: np.ndarray, coef=1.0, out: np.ndarray | None = None) -> np.ndarray:
        """out += coef * x_site v for a single vector `v`."""
        w = self.displacement(site) @ v
        if out is None:
            return coef * w
        out += coef * w
        return out


@lru_cache(maxsize=32)
def boson_space(n_sites: int, max_bosons: int, max_dim: int = DEFAULT_MAX_DIM) -> BosonSpace:
    return BosonSpace(n_sites, max_bosons, max_dim)


class RealSpaceBasis:
    """Excitation-number sector 0 or 1 without symmetry reduction.

    Sector 1 index = ``site * D + config_index`` with ``D = C(N+M, M)``.
    """

    def __init__(self, n_sites: int, max_bosons: int, sector: int = 1, max_dim: int = DEFAULT_MAX_DIM):
        if sector not in (0, 1):
            raise ValueError("only the 0- and 1-excitation sectors are supported")
        self.n_sites = n_sites
        self.max_bosons = max_bosons
        self.sector = sector
        self.bosons = boson_space(n_sites, max_bosons)
        self.size = self.bosons.dim * (n_sites if sector == 1 else 1)
        if self.size > max_dim:
            raise CapacityError(f"basis size {self.size} exceeds max_dim = {max_dim}")

    def __len__(self):
        return self.size

    def index(self, site: int | None, config: BosonConfig) -> int:
        c = self.bosons.index(config)
        if self.sector == 0:
            if site is not None:
                raise KeyError("zero-excitation states carry no excitation site")
            return c
        return (site % self.n_sites) * self.bosons.dim + c

    def state(self, i: int) -> tuple[int | None, BosonConfig]:
        if not 0 <= i < self.size:
            raise IndexError(i)
        site, c = divmod(i, self.bosons.dim)
        config = tuple(int(x) for x in self.bosons.configs[c])
        return (site if self.sector == 1 else None), config

    @cached_property
    def _translation_perm(self) -> np.ndarray:
        shift = self.bosons.shift_perm(1)
        if self.sector == 0:
            return shift
        d = self.bosons.dim
        sites = (np.arange(self.n_sites)[:, None] + 1) % self.n_sites
        return (sites * d + shift[None, :]).ravel()

    def translate(self, v: np.ndarray) -> np.ndarray:
        """Apply the one-site translation T."""
        out = np.empty_like(v)
        out[self._translation_perm] = v
        return out


class SectorBasis:
    """Total-quasimomentum-K sector of the one-excitation space.

    Representatives are boson configurations measured relative to the
    excitation, which is pinned at site 0; the basis state for representative
    ``r`` is ``N^{-1/2} sum_n e^{iKn} T^n |exc at 0; r>``.
    """

    def __init__(self, n_sites: int, max_bosons: int, k: float, max_dim: int = DEFAULT_MAX_DIM):
        self.n_sites = n_sites
        self.max_bosons = max_bosons
        self.j = commensurate_index(k, n_sites)
        self.k = 2 * np.pi * self.j / n_sites
        self.bosons = boson_space(n_sites, max_bosons, max_dim)
        self.size = self.bosons.dim
        self.normalization = 1 / math.sqrt(n_sites)

    def __len__(self):
        return self.size

    @property
    def representatives(self) -> np.ndarray:
        return self.bosons.configs

    zero_boson_index = 0

    @cached_property
    def realspace(self) -> RealSpaceBasis:
        return RealSpaceBasis(self.n_sites, self.max_bosons, 1)

    @cached_property
    def _embed_tables(self) -> tuple[np.ndarray, np.ndarray]:
        # row n: real-space index of T^n |0; r> for each representative r
        d = self.bosons.dim
        rows = np.stack([n * d + self.bosons.shift_perm(n) for n in range(self.n_sites)])
        phases = np.exp(1j * self.k * np.arange(self.n_sites)) * self.normalization
        return rows, phases

    def embed(self, v: np.ndarray) -> np.ndarray:
        """Sector coefficients -> one-excitation real-space vector."""
        rows, phases = self._embed_tables
        out = np.zeros(self.realspace.size, dtype=complex)
        for n in range(self.n_sites):
            out[rows[n]] = phases[n] * v
        return out

    def project(self, psi: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`embed`: overlaps of `psi` with the sector basis states."""
        rows, phases = self._embed_tables
        return sum(np.conj(phases[n]) * psi[rows[n]] for n in range(self.n_sites))


def momentum_sector_basis(n_sites: int, max_bosons: int, k: float) -> SectorBasis:
    return SectorBasis(n_sites, max_bosons, k)


def translation_eigenvalue(psi: np.ndarray, basis: RealSpaceBasis, atol: float = 1e-6) -> complex:
    """<psi|T|psi>/<psi|psi>; the momentum is minus its argument.

    Warns when the modulus falls below ``1 - atol`` (not a translation eigenstate).
    """
    val = np.vdot(psi, basis.translate(psi)) / np.vdot(psi, psi)
    if abs(val) < 1 - atol:
        warnings.warn(
            f"|<T>| = {abs(val):.3g} < 1: vector is not a translation eigenstate",
            NotTranslationEigenstateWarning,
            stacklevel=2,
        )
    return complex(val)
