"""Coupling-strength sweeps at the sweet spot: ground-state energy and momentum,
the lowest K = pi level, level-crossing location and the K = pi gap.

Energies are reported without eps0, in units of |t_e|.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from .eigensolver import DEFAULT_TOL, NoConvergenceError, lowest_eigenpairs
from .hamiltonian import sector_operator, vertex_ss
from .hilbert import sector_momenta
from .params import PhysicalParams, SweetSpotRequiredError, alpha_for_lambda, derive

log = logging.getLogger(__name__)

DEGENERACY_RTOL = 1e-10
BISECT_RTOL = 1e-3


class ScanError(RuntimeError):
    """A solver failure at a specific grid point."""

    def __init__(self, message, point_index=None, partial=None):
        super().__init__(message)
        self.point_index = point_index
        self.partial = partial or []


@dataclass
class ScanPoint:
    lambda_eb: float
    alpha: float
    omega_rabi: float  # rad/s
    e_gs_over_te: float
    k_gs: float
    boson_number: float
    w_overlap: float
    gap_pi_over_omega_b: float
    e_pi_over_te: float
    sector_energies: dict[float, float] = field(default_factory=dict, repr=False)


@dataclass
class ScanResult:
    points: list[ScanPoint]
    lambda_critical: float | None
    critical_bracket: tuple[float, float] | None = None
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(pt, name) for pt in self.points])


@dataclass
class _Sector:
    k: float
    energies: np.ndarray
    vector: np.ndarray
    boson_number: float


def _solve_sector(p, k, count, tol, seed):
    op = sector_operator(p, k, include_eps0=False)
    res = lowest_eigenpairs(op, count=count, tol=tol, seed=seed)
    v = res.eigenvectors[:, 0]
    return _Sector(k, res.eigenvalues, v, op.boson_number(v))


def solve_sectors(p: PhysicalParams, tol: float = DEFAULT_TOL, seed: int = 0, workers: int = 1,
                  gap: bool = True) -> dict[float, _Sector]:
    """Lowest level of every K sector (two lowest for K = pi when `gap`)."""
    ks = sector_momenta(p.n_sites)
    counts = [2 if gap and math.isclose(k, math.pi) else 1 for k in ks]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            sols = list(pool.map(lambda kc: _solve_sector(p, kc[0], kc[1], tol, seed), zip(ks, counts)))
    else:
        sols = [_solve_sector(p, k, c, tol, seed) for k, c in zip(ks, counts)]
    return {s.k: s for s in sols}


def _require_scan_params(p: PhysicalParams):
    if p.n_sites % 2:
        raise ValueError("K = pi requires an even number of sites")
    if not p.is_sweet_spot():
        raise SweetSpotRequiredError("scans run at the sweet-spot detuning; pass delta=None")


def scan_point(p: PhysicalParams, tol: float = DEFAULT_TOL, seed: int = 0, workers: int = 1) -> ScanPoint:
    _require_scan_params(p)
    d = derive(p)
    te = d.abs_te
    sectors = solve_sectors(p, tol, seed, workers)
    lowest = {k: s.energies[0] for k, s in sectors.items()}
    e_min = min(lowest.values())
    ties = [k for k, e in lowest.items() if e - e_min <= DEGENERACY_RTOL * te]
    # a degenerate +-K pair is reported by its non-negative member
    k_gs = max(abs(k) for k in ties)
    gs = sectors[min(ties, key=lambda k: (abs(abs(k) - k_gs), -k))]
    pi = sectors[math.pi]
    w_overlap = float(abs(gs.vector[0]) ** 2) if math.isclose(abs(gs.k), math.pi) else 0.0
    return ScanPoint(
        lambda_eb=d.lambda_eb,
        alpha=p.alpha,
        omega_rabi=p.omega_rabi,
        e_gs_over_te=e_min / te,
        k_gs=k_gs,
        boson_number=gs.boson_number,
        w_overlap=w_overlap,
        gap_pi_over_omega_b=float((pi.energies[1] - pi.energies[0]) / p.omega_b) if len(pi.energies) > 1 else math.nan,
        e_pi_over_te=pi.energies[0] / te,
        sector_energies={k: e / te for k, e in lowest.items()},
    )


def _alpha_grid(base, alphas, omegas, lambdas):
    given = [g for g in (alphas, omegas, lambdas) if g is not None]
    if len(given) != 1:
        raise ValueError("give exactly one of alphas, omegas, lambdas")
    grid = np.asarray(given[0], dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("scan grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("scan grid must be strictly increasing")
    if omegas is not None:
        return grid / base.delta
    if lambdas is not None:
        return np.array([alpha_for_lambda(x, base) for x in grid])
    return grid


def ground_state_scan(base: PhysicalParams, alphas=None, *, omegas=None, lambdas=None,
                      tol: float = DEFAULT_TOL, seed: int = 0, workers: int = 1,
                      locate_critical: bool = True, on_point=None) -> ScanResult:
    """Sweep the dressing strength at the sweet spot (lambda ~ alpha^4).

    Exactly one grid is given: dressing parameters, Rabi frequencies
    Omega = delta_ss * alpha (rad/s), or target couplings lambda.
    ``on_point(point)`` is called as each grid point completes.
    """
    _require_scan_params(base)
    started = datetime.now(timezone.utc).isoformat()
    grid = _alpha_grid(base, alphas, omegas, lambdas)
    points = []
    for i, alpha in enumerate(grid):
        try:
            points.append(scan_point(base.with_(alpha=float(alpha)), tol, seed, workers))
        except NoConvergenceError as exc:
            raise ScanError(f"grid point {i} (alpha={alpha:.6g}): {exc}", i, points) from exc
        if on_point is not None:
            on_point(points[-1])
        log.info("alpha=%.5g lambda=%.5g E/|t_e|=%.10f K=%.4f", alpha, points[-1].lambda_eb,
                 points[-1].e_gs_over_te, points[-1].k_gs)

    lam_c, bracket = None, None
    jump = next((i for i in range(1, len(points)) if not math.isclose(points[i].k_gs, points[i - 1].k_gs)), None)
    if jump is not None:
        lo, hi = points[jump - 1].alpha, points[jump].alpha
        if locate_critical:
            lo, hi = _bisect_crossing(base, lo, hi, points[jump - 1].k_gs, tol, seed, workers)
        lam_lo = derive(base.with_(alpha=lo)).lambda_eb
        lam_hi = derive(base.with_(alpha=hi)).lambda_eb
        bracket = (lam_lo, lam_hi)
        lam_c = 0.5 * (lam_lo + lam_hi)

    meta = {
        "a_um": base.a, "omega_b": base.omega_b, "delta": base.delta, "c3_over_hbar": base.c3_over_hbar,
        "n_sites": base.n_sites, "max_bosons": base.max_bosons, "seed": seed, "tol": tol,
        "started": started, "finished": datetime.now(timezone.utc).isoformat(),
    }
    return ScanResult(points, lam_c, bracket, meta)


def _bisect_crossing(base, lo, hi, k_left, tol, seed, workers):
    """Shrink [lo, hi] in alpha until lambda ~ alpha^4 is bracketed to BISECT_RTOL."""
    while (hi**4 - lo**4) / hi**4 > BISECT_RTOL:
        mid = 0.5 * (lo + hi)
        if math.isclose(scan_point(base.with_(alpha=mid), tol, seed, workers).k_gs, k_left):
            lo = mid
        else:
            hi = mid
    return lo, hi


def pi_sector_curve(base: PhysicalParams, omegas, tol: float = DEFAULT_TOL,
                    seed: int = 0) -> list[tuple[float, float]]:
    """(Omega, lowest K = pi level / |t_e|) along a Rabi-frequency grid."""
    _require_scan_params(base)
    grid = _alpha_grid(base, None, omegas, None)
    out = []
    for omega, alpha in zip(omegas, grid):
        p = base.with_(alpha=float(alpha))
        te = derive(p).abs_te
        if te == 0:
            out.append((float(omega), -2.0))  # free limit: bare band minimum
            continue
        e = _solve_sector(p, math.pi, 1, tol, seed).energies[0]
        out.append((float(omega), e / te))
    return out


def spectral_gap_pi(p: PhysicalParams, tol: float = DEFAULT_TOL, seed: int = 0) -> float:
    """(E_1 - E_0) / omega_b in the K = pi sector."""
    _require_scan_params(p)
    return float(np.diff(_solve_sector(p, math.pi, 2, tol, seed).energies[:2])[0] / p.omega_b)


def truncation_shift(p: PhysicalParams, m_high: int, tol: float = DEFAULT_TOL, seed: int = 0) -> float:
    """Change of E_gs / |t_e| when the boson cutoff is raised from p.max_bosons to m_high."""
    low = scan_point(p, tol, seed).e_gs_over_te
    high = scan_point(p.with_(max_bosons=m_high), tol, seed).e_gs_over_te
    return high - low


def point_dict(pt: ScanPoint) -> dict:
    d = asdict(pt)
    d.pop("sector_energies")
    return d


@dataclass
class CheckOutcome:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.value <= self.threshold


def pi_state_residual(p: PhysicalParams) -> float:
    """||(H - (eps0 - 2|t_e|)) W(pi)|| / |t_e| in the K = pi sector."""
    _require_scan_params(p)
    d = derive(p)
    op = sector_operator(p, math.pi)
    v = np.zeros(op.dim, dtype=complex)
    v[op.basis.zero_boson_index] = 1.0
    return float(np.linalg.norm(op.apply(v) - (d.eps0 - 2 * d.abs_te) * v) / d.abs_te)


def vertex_zero_max(g: float, omega_b: float, samples: int = 10_000, seed: int = 0) -> float:
    """max |gamma(pi, q)| / (g omega_b) over uniformly random q."""
    q = np.random.default_rng(seed).uniform(-math.pi, math.pi, samples)
    return float(np.max(np.abs(vertex_ss(g, omega_b, math.pi, q))) / (abs(g) * omega_b))


def sweetspot_checks(base: PhysicalParams, lambdas, samples: int = 10_000, seed: int = 0,
                     residual_rtol: float = 1e-10, vertex_rtol: float = 1e-14) -> list[CheckOutcome]:
    """W(pi) eigenstate residuals along a coupling grid and the k = pi vertex zero."""
    out = []
    for lam in lambdas:
        p = base.with_(alpha=alpha_for_lambda(lam, base))
        out.append(CheckOutcome(f"residual lambda={lam:g}", pi_state_residual(p), residual_rtol))
    d = derive(base)
    g = d.g_b if d.g_b else 1.0
    out.append(CheckOutcome(f"vertex zero ({samples} q)", vertex_zero_max(g, base.omega_b, samples, seed), vertex_rtol))
    return out


def pi_level_departure(base: PhysicalParams, lam_lo: float, lam_hi: float, atol: float = 1e-8,
                       tol: float = DEFAULT_TOL, seed: int = 0) -> tuple[float, float]:
    """Bracket (in lambda, to BISECT_RTOL) where the lowest K = pi level leaves -2|t_e|.

    The level must be flat at `lam_lo` and below -2 - atol at `lam_hi`.
    """
    _require_scan_params(base)

    def flat(lam):
        p = base.with_(alpha=alpha_for_lambda(lam, base))
        return _solve_sector(p, math.pi, 1, tol, seed).energies[0] / derive(p).abs_te >= -2 - atol

    if not flat(lam_lo) or flat(lam_hi):
        raise ValueError("the K = pi level must be flat at lam_lo and depart by lam_hi")
    while (lam_hi - lam_lo) / lam_hi > BISECT_RTOL:
        mid = 0.5 * (lam_lo + lam_hi)
        if flat(mid):
            lam_lo = mid
        else:
            lam_hi = mid
    return lam_lo, lam_hi
