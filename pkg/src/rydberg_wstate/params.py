"""Physical inputs and closed-form effective-model quantities.

Conventions: every energy is stored as an angular frequency (E/hbar, rad/s),
lengths are in micrometres.  SI units appear only inside the conversion of the
linear coupling slopes into dimensionless coupling strengths.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Literal

from scipy.constants import hbar as HBAR

Units = Literal["angular", "cyclic"]

#: 87Rb atomic mass (kg), CODATA value.
RB87_MASS = 1.44316060e-25

#: C3/hbar for 87Rb at principal quantum number 80 (rad/s um^3).
C3_NQ80 = 2 * math.pi * 40e9
#: C3/hbar for n_q = 50; one order of magnitude below n_q = 80 (approximate).
C3_NQ50 = 2 * math.pi * 4e9
C3_PRESETS = {"nq80": C3_NQ80, "nq50": C3_NQ50}
APPROXIMATE_PRESETS = frozenset({"nq50"})

UM = 1e-6
SINGULAR_RTOL = 1e-12
ALPHA_WARN = 0.2


class ParameterError(ValueError):
    """Physical parameters outside the model's domain."""


class SingularParameterError(ParameterError):
    """|zeta| = 1: the dressed interaction is resonant and the model diverges."""


class SweetSpotRequiredError(ParameterError):
    """A sweet-spot-only formula was evaluated away from the sweet spot."""


def to_angular(value: float, units: Units = "angular") -> float:
    """Convert a frequency given in `units` to rad/s."""
    if units == "angular":
        return float(value)
    if units == "cyclic":
        return 2 * math.pi * float(value)
    raise ParameterError(f"unknown units flag {units!r}; use 'angular' or 'cyclic'")


def sweet_spot_zeta() -> float:
    """Positive root of 3 z^2 - z - 1 = 0, where the two coupling slopes coincide."""
    return (1 + math.sqrt(13)) / 6


def sweet_spot_detuning(c3_over_hbar: float, a: float) -> float:
    """Detuning (rad/s) that puts a lattice of period `a` (um) at the sweet spot."""
    if a <= 0:
        raise ParameterError("lattice period must be positive")
    return c3_over_hbar / (sweet_spot_zeta() * a**3)


@dataclass(frozen=True)
class PhysicalParams:
    """Experimentally settable inputs.

    ``delta=None`` selects the sweet-spot detuning for the given ``a`` and
    ``c3_over_hbar``.  The Rabi frequency is not stored; it is ``delta*alpha``.
    """

    a: float
    omega_b: float
    alpha: float
    delta: float | None = None
    c3_over_hbar: float = C3_NQ80
    mass: float = RB87_MASS
    n_sites: int = 8
    max_bosons: int = 6

    def __post_init__(self):
        if not self.a > 0:
            raise ParameterError(f"lattice period a must be positive, got {self.a}")
        if not self.omega_b > 0:
            raise ParameterError(f"trap frequency omega_b must be positive, got {self.omega_b}")
        if not self.mass > 0:
            raise ParameterError(f"mass must be positive, got {self.mass}")
        if self.alpha < 0:
            raise ParameterError(f"dressing parameter alpha must be non-negative, got {self.alpha}")
        if self.alpha > ALPHA_WARN:
            warnings.warn(
                f"alpha={self.alpha} lies outside the perturbative dressing regime (<= {ALPHA_WARN})",
                stacklevel=3,
            )
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ParameterError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        if int(self.max_bosons) != self.max_bosons or self.max_bosons < 0:
            raise ParameterError(f"max_bosons must be an integer >= 0, got {self.max_bosons}")
        if self.delta is None:
            object.__setattr__(self, "delta", sweet_spot_detuning(self.c3_over_hbar, self.a))
        if self.delta == 0:
            raise SingularParameterError("zero detuning")

    @property
    def zeta(self) -> float:
        return self.c3_over_hbar / (self.delta * self.a**3)

    @property
    def omega_rabi(self) -> float:
        return self.delta * self.alpha

    def is_sweet_spot(self, rtol: float = 1e-9) -> bool:
        dss = sweet_spot_detuning(self.c3_over_hbar, self.a)
        return abs(self.delta - dss) <= rtol * abs(dss)

    def with_(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    @classmethod
    def from_frequencies(cls, *, a, omega_b, alpha, delta=None, c3_over_hbar=C3_NQ80,
                         units: Units = "angular", **kw) -> "PhysicalParams":
        """Build from frequencies quoted either as omega (rad/s) or nu (Hz)."""
        return cls(
            a=a,
            omega_b=to_angular(omega_b, units),
            alpha=alpha,
            delta=None if delta is None else to_angular(delta, units),
            c3_over_hbar=to_angular(c3_over_hbar, units),
            **kw,
        )


@dataclass(frozen=True)
class DerivedParams:
    """Effective model quantities; energies over hbar (rad/s)."""

    zeta: float
    eps0: float
    t_e: float
    xi_b: float  # rad/s per um
    xi_p: float  # rad/s per um
    g_b: float
    g_p: float
    lambda_eb: float
    omega_d: float
    omega_b: float

    @property
    def abs_te(self) -> float:
        return abs(self.t_e)


def zero_point_length(mass: float, omega_b: float) -> float:
    """Oscillator length sqrt(hbar / (2 m omega_b)) in um."""
    return math.sqrt(HBAR / (2 * mass * omega_b)) / UM


def derive(p: PhysicalParams) -> DerivedParams:
    """Linearised couplings, bare band parameters and coupling strengths."""
    zeta = p.zeta
    one_m = 1.0 - zeta**2
    if abs(one_m) <= SINGULAR_RTOL * max(1.0, zeta**2):
        raise SingularParameterError(f"|zeta| = 1 (zeta={zeta!r}); denominators 1 - zeta^2 vanish")
    a4 = p.alpha**4
    eps0 = a4 * p.delta / one_m
    t_e = -a4 * p.c3_over_hbar / (p.a**3 * one_m)
    xi_b = 3 * a4 * p.delta / p.a * zeta**2 / one_m**2
    xi_p = 3 * a4 * p.c3_over_hbar / p.a**4 * (3 * zeta**2 - 1) / one_m**2
    x0 = zero_point_length(p.mass, p.omega_b)
    g_b = xi_b * x0 / p.omega_b
    g_p = xi_p * x0 / p.omega_b
    # Brillouin-zone average of the squared vertex over 2|t_e| omega_b;
    # reduces to 3 g^2 omega_b / |t_e| when g_b == g_p.
    lam = 0.0 if t_e == 0 else p.omega_b * (g_b**2 + 2 * g_p**2) / abs(t_e)
    return DerivedParams(
        zeta=zeta, eps0=eps0, t_e=t_e, xi_b=xi_b, xi_p=xi_p, g_b=g_b, g_p=g_p,
        lambda_eb=lam, omega_d=eps0 - 2 * abs(t_e), omega_b=p.omega_b,
    )


def lambda_eb_ss(p: PhysicalParams) -> float:
    """Effective coupling from the closed sweet-spot formula (SI evaluation)."""
    if not p.is_sweet_spot():
        raise SweetSpotRequiredError(
            f"delta={p.delta:.6g} rad/s differs from the sweet-spot value "
            f"{sweet_spot_detuning(p.c3_over_hbar, p.a):.6g} rad/s"
        )
    return p.alpha**4 * _lambda_ss_per_alpha4(p)


def _lambda_ss_per_alpha4(p: PhysicalParams) -> float:
    z = sweet_spot_zeta()
    c3 = HBAR * p.c3_over_hbar * UM**3  # J m^3
    a = p.a * UM
    return (27 / 2) * c3 / (p.mass * p.omega_b**2 * a**5) * (3 * z**2 - 1) ** 2 / (1 - z**2) ** 3


def alpha_for_lambda(lam: float, p: PhysicalParams) -> float:
    """Dressing parameter that produces sweet-spot coupling `lam` (lambda ~ alpha^4)."""
    if lam < 0:
        raise ParameterError("lambda must be non-negative")
    return (lam / _lambda_ss_per_alpha4(p)) ** 0.25


def coupling_ratio_detuning(ratio: float, c3_over_hbar: float, a: float) -> float:
    """Detuning (rad/s) at which g_b / g_p equals `ratio`.

    Uses the branch zeta > 1/sqrt(3); zeta < 1 for ratio > 1/2, and ratio = 1/2
    is the singular point zeta = 1.
    """
    if ratio <= 0:
        raise ParameterError("ratio must be positive")
    # g_b/g_p = zeta / (3 zeta^2 - 1)
    zeta = (1 + math.sqrt(1 + 12 * ratio**2)) / (6 * ratio)
    return c3_over_hbar / (zeta * a**3)
