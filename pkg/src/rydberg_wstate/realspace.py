"""Nonlinear displacement-dependent on-site energy and hopping, and their
linear-response slopes.

For a classical displacement field ``u`` (um) on a periodic chain,

    eps_n(u) / hbar   = (alpha^4 Delta / 2) [B(a + u_{n+1} - u_n) + B(a + u_n - u_{n-1})]
    t_{n,n+1}(u)/hbar = alpha^4 (C3/hbar) / (a + u_{n+1} - u_n)^3 * B(a + u_{n+1} - u_n)

with ``B(r) = 1 / (1 - zeta^2 (a / r)^6)``.  Slopes at ``u = 0`` are obtained by
central differences and, independently, in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ParameterError, PhysicalParams, derive

EPS_SING = 1e-6
MAX_DISPLACEMENT_FRACTION = 0.5
FD_STEP_FRACTION = 1e-6


class SingularityError(ParameterError):
    """A bracket denominator 1 - zeta^2 (a/r)^6 came within eps_sing of zero."""


class DisplacementRangeError(ParameterError):
    """A displacement left the small-displacement validity region."""


@dataclass(frozen=True, eq=False)
class DisplacementField:
    """Classical site displacements (um), indexed periodically."""

    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.ndim != 1 or u.size < 2:
            raise ValueError("displacement field needs a 1-d array of at least two sites")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @classmethod
    def zeros(cls, n_sites: int) -> "DisplacementField":
        return cls(np.zeros(n_sites))

    def __len__(self):
        return self.u.size

    def __getitem__(self, n: int) -> float:
        return float(self.u[n % self.u.size])

    def roll(self, steps: int = 1) -> "DisplacementField":
        """Field moved `steps` sites to the right (site n -> n + steps)."""
        return DisplacementField(np.roll(self.u, steps))

    def replace(self, n: int, value: float) -> "DisplacementField":
        u = self.u.copy()
        u[n % u.size] = value
        return DisplacementField(u)

    def check(self, a: float, max_fraction: float = MAX_DISPLACEMENT_FRACTION):
        bound = max_fraction * a
        if np.any(np.abs(self.u) >= bound):
            raise DisplacementRangeError(f"|u| must stay below {bound:g} um, got max {np.abs(self.u).max():g}")


def _bracket(zeta: float, a: float, r: float, eps_sing: float) -> float:
    den = 1.0 - zeta**2 * (a / r) ** 6
    if abs(den) < eps_sing:
        raise SingularityError(f"bracket denominator {den:.3e} below guard {eps_sing:g} (zeta={zeta:.12g})")
    return 1.0 / den


def onsite_energy(field: DisplacementField, n: int, p: PhysicalParams, eps_sing: float = EPS_SING,
                  max_fraction: float = MAX_DISPLACEMENT_FRACTION) -> float:
    """eps_n(u) / hbar in rad/s."""
    field.check(p.a, max_fraction)
    right = p.a + field[n + 1] - field[n]
    left = p.a + field[n] - field[n - 1]
    zeta = p.zeta
    return 0.5 * p.alpha**4 * p.delta * (_bracket(zeta, p.a, right, eps_sing) + _bracket(zeta, p.a, left, eps_sing))


def hopping_amplitude(field: DisplacementField, n: int, p: PhysicalParams, eps_sing: float = EPS_SING,
                      max_fraction: float = MAX_DISPLACEMENT_FRACTION) -> float:
    """t_{n,n+1}(u) / hbar in rad/s."""
    field.check(p.a, max_fraction)
    r = p.a + field[n + 1] - field[n]
    return p.alpha**4 * p.c3_over_hbar / r**3 * _bracket(p.zeta, p.a, r, eps_sing)


@dataclass(frozen=True)
class Slopes:
    """Derivatives at u = 0 in rad/s per um."""

    onsite_next: float  # d eps_n / d u_{n+1}
    onsite_prev: float  # d eps_n / d u_{n-1}
    hopping_next: float  # d t_{n,n+1} / d u_{n+1}
    hopping_self: float  # d t_{n,n+1} / d u_n


def finite_difference_slopes(p: PhysicalParams, step_fraction: float = FD_STEP_FRACTION,
                             eps_sing: float = EPS_SING) -> Slopes:
    """Central differences of the nonlinear expressions at u = 0, step ``step_fraction * a``."""
    h = step_fraction * p.a
    zero = DisplacementField.zeros(p.n_sites)
    n = 0

    def central(fn, site):
        up = fn(zero.replace(site, h), n, p, eps_sing)
        down = fn(zero.replace(site, -h), n, p, eps_sing)
        return (up - down) / (2 * h)

    return Slopes(
        onsite_next=central(onsite_energy, n + 1),
        onsite_prev=central(onsite_energy, n - 1),
        hopping_next=central(hopping_amplitude, n + 1),
        hopping_self=central(hopping_amplitude, n),
    )


def exact_slopes(p: PhysicalParams) -> Slopes:
    """Closed-form derivatives of the nonlinear expressions at u = 0.

    With s = 1 - zeta^2, d B / d r = -6 zeta^2 / (a s^2) at r = a.
    """
    zeta = p.zeta
    s = 1 - zeta**2
    a4 = p.alpha**4
    db = -6 * zeta**2 / (p.a * s**2)
    onsite = 0.5 * a4 * p.delta * db
    hop = a4 * p.c3_over_hbar * (-3 / (p.a**4 * s) + db / p.a**3)
    return Slopes(onsite_next=onsite, onsite_prev=-onsite, hopping_next=hop, hopping_self=-hop)


def linearized_onsite(field: DisplacementField, n: int, p: PhysicalParams) -> float:
    """eps0 + xi_B (u_{n+1} - u_{n-1}) with the closed-form slope used by the Hamiltonian."""
    d = derive(p)
    return d.eps0 + d.xi_b * (field[n + 1] - field[n - 1])


def linearized_hopping(field: DisplacementField, n: int, p: PhysicalParams) -> float:
    """-t_e + xi_P (u_{n+1} - u_n) with the closed-form slope used by the Hamiltonian."""
    d = derive(p)
    return -d.t_e + d.xi_p * (field[n + 1] - field[n])


def taylor_onsite(field: DisplacementField, n: int, p: PhysicalParams) -> float:
    """First-order Taylor expansion of the nonlinear on-site energy."""
    s = exact_slopes(p)
    return onsite_energy(DisplacementField.zeros(len(field)), n, p) + s.onsite_next * (field[n + 1] - field[n - 1])


def taylor_hopping(field: DisplacementField, n: int, p: PhysicalParams) -> float:
    """First-order Taylor expansion of the nonlinear hopping amplitude."""
    s = exact_slopes(p)
    return hopping_amplitude(DisplacementField.zeros(len(field)), n, p) + s.hopping_next * (field[n + 1] - field[n])


def relative_slope_errors(p: PhysicalParams, step_fraction: float = FD_STEP_FRACTION) -> dict[str, float]:
    """Relative deviation of the finite-difference slopes from xi_B, -xi_B and xi_P."""
    d = derive(p)
    fd = finite_difference_slopes(p, step_fraction)
    return {
        "onsite_next": abs(fd.onsite_next - d.xi_b) / abs(d.xi_b),
        "onsite_prev": abs(fd.onsite_prev + d.xi_b) / abs(d.xi_b),
        "hopping_next": abs(fd.hopping_next - d.xi_p) / abs(d.xi_p),
    }
