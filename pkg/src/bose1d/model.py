"""Trap potentials and unit conventions.

Harmonic trap: lengths in units of the longitudinal oscillator length,
energies in units of its quantum, ``V(x) = x**2/2``.

Lattice trap: lengths in units of the lattice constant, energies in recoil
units, ``V(x) = V0 sin**2(pi x/2 + phi)`` inside a hard-wall box
``|x| <= half_width``.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, OutOfBoxError, ResonanceError

#: |zeta(1/2)|
ZETA_HALF = 1.4603545088095868


@dataclass(frozen=True)
class HarmonicTrap:
    kind = "harmonic"

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * x * x

    def inside(self, x):
        return np.ones(np.shape(x), dtype=bool)


@dataclass(frozen=True)
class LatticeTrap:
    v0: float = 40.0
    phi: float = 0.5 * math.pi
    half_width: float = 2.5
    kind = "lattice"

    def __post_init__(self):
        if not self.v0 > 0:
            raise DomainError(f"lattice depth V0={self.v0} must be > 0")
        if not self.half_width > 0:
            raise DomainError(f"half_width={self.half_width} must be > 0")

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return self.v0 * np.sin(0.5 * math.pi * x + self.phi) ** 2

    def inside(self, x):
        return np.abs(x) <= self.half_width


PRESETS = {
    "harmonic": HarmonicTrap(),
    "double-well": LatticeTrap(v0=40.0, phi=0.5 * math.pi, half_width=2.5),
    "triple-well": LatticeTrap(v0=40.0, phi=0.0, half_width=3.5),
}


def preset(name, **overrides):
    """Trap from a preset name, optionally overriding lattice fields."""
    try:
        trap = PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown trap preset {name!r}; "
                          f"choose from {sorted(PRESETS)}") from None
    if overrides:
        if trap.kind != "lattice":
            raise DomainError("the harmonic trap takes no overrides")
        fields = {"v0": trap.v0, "phi": trap.phi, "half_width": trap.half_width}
        fields.update(overrides)
        trap = LatticeTrap(**fields)
    return trap


def potential_eval(trap, x):
    """Potential at ``x`` (scalar or array); hard walls raise :class:`OutOfBoxError`."""
    if not np.all(trap.inside(x)):
        raise OutOfBoxError(f"position outside the box |x| <= {trap.half_width}")
    v = trap.potential(x)
    return float(v) if np.ndim(v) == 0 else v


def well_centers(trap):
    """Minima of the lattice potential strictly inside the box.

    The zeros of ``sin(pi x/2 + phi)`` are ``x = 2m - 2 phi/pi``.
    """
    if trap.kind != "lattice":
        raise DomainError("well_centers is defined for lattice traps only")
    shift = 2.0 * trap.phi / math.pi
    lo = math.ceil((-trap.half_width + shift) / 2.0)
    hi = math.floor((trap.half_width + shift) / 2.0)
    centers = [2.0 * m - shift for m in range(lo, hi + 1)]
    # snap -0.0 and rounding noise on exact integers
    centers = [float(round(c)) if abs(c - round(c)) < 1e-12 else c for c in centers]
    return [c for c in centers if abs(c) < trap.half_width]


def e_tg(n):
    """Tonks-Girardeau energy ``N**2/2`` of ``N`` bosons in the harmonic trap."""
    if n < 1:
        raise DomainError(f"N={n} must be >= 1")
    return 0.5 * n * n


def g1d_from_3d(a0, a_perp=1.0):
    """Effective 1D coupling for 3D scattering length ``a0``.

    Transverse oscillator units (hbar = M = omega_perp = 1), so
    ``g1D = 2 a0 / a_perp**2 / (1 - |zeta(1/2)| a0 / (sqrt(2) a_perp))``.
    """
    if not a_perp > 0:
        raise DomainError(f"a_perp={a_perp} must be > 0")
    denom = 1.0 - ZETA_HALF * a0 / (math.sqrt(2.0) * a_perp)
    if abs(denom) < 1e-12:
        raise ResonanceError(
            f"confinement-induced resonance at a0/a_perp={a0 / a_perp}")
    return 2.0 * a0 / (a_perp * a_perp) / denom
