"""Alternative coordinates for the coherent-state manifold: the Gaussian
z-chart and the spinor a-chart, with their invariant measure densities and
chart-local kinetic terms.

Both charts are linked to Euler angles by

    z_plus = -tan(t/2) e^{-i phi},  z_minus = tan(t/2) e^{-i psi},
    a1 = cos(t/2) e^{-i(phi+psi)/2}, a2 = sin(t/2) e^{i(phi-psi)/2},

and the chart-local kinetic terms reproduce kinetic_term(fv, Omega,
Omega_dot) exactly under the induced velocity maps.
"""

from dataclasses import dataclass
import cmath
import math

import numpy as np

from .coherent import FiducialVector, structure_pair
from .errors import (DecompositionPole, NotUnitary, SubsidiaryViolation,
                     ZOriginSingular)
from .spin_core import EulerAngles, Spin, euler_from_su2, gaussian_decompose

__all__ = [
    "ZCoords",
    "ACoords",
    "omega_to_z",
    "z_to_omega",
    "z3_of",
    "omega_to_a",
    "a_to_omega",
    "z_measure_weight",
    "a_measure_weight",
    "kinetic_term_z",
    "kinetic_term_a",
]


@dataclass(frozen=True)
class ZCoords:
    """Gaussian-decomposition coordinates restricted to the coherent-state
    constraint surface |z_plus| = |z_minus| (enforced to 1e-10).  The third
    coordinate z3 is derived, see :func:`z3_of`."""

    z_plus: complex
    z_minus: complex

    def __post_init__(self):
        if abs(abs(self.z_plus) - abs(self.z_minus)) > 1e-10:
            raise SubsidiaryViolation(
                f"| |z+| - |z-| | = {abs(abs(self.z_plus) - abs(self.z_minus)):.3e} > 1e-10")
        object.__setattr__(self, "z_plus", complex(self.z_plus))
        object.__setattr__(self, "z_minus", complex(self.z_minus))


@dataclass(frozen=True)
class ACoords:
    """Spinor coordinates (a1, a2) on the unit 3-sphere |a1|^2 + |a2|^2 = 1
    (enforced to 1e-12).  They fill the first column of the spin-1/2
    rotation matrix [[a1, -a2*], [a2, a1*]]."""

    a1: complex
    a2: complex

    def __post_init__(self):
        dev = abs(abs(self.a1) ** 2 + abs(self.a2) ** 2 - 1.0)
        if dev > 1e-12:
            raise NotUnitary(f"|a|^2 deviates from 1 by {dev:.3e}")
        object.__setattr__(self, "a1", complex(self.a1))
        object.__setattr__(self, "a2", complex(self.a2))


def omega_to_z(omega: EulerAngles) -> ZCoords:
    """(z_plus, z_minus) of the Gaussian decomposition at omega.  Raises
    DecompositionPole within 1e-9 of theta = pi."""
    z_plus, _, z_minus = gaussian_decompose(omega)
    return ZCoords(z_plus, z_minus)


def z_to_omega(z: ZCoords) -> EulerAngles:
    """Euler angles with theta = 2 atan(|z_plus|), phi = -arg(-z_plus),
    psi = -arg(z_minus).  Inverse of omega_to_z for theta in (0, pi); the
    chart is degenerate at the origin, which maps to (0, 0, 0)."""
    u = abs(z.z_plus)
    if u == 0.0:
        return EulerAngles(0.0, 0.0, 0.0)
    theta = 2.0 * math.atan(u)
    phi = -cmath.phase(-z.z_plus)
    psi = -cmath.phase(z.z_minus)
    return EulerAngles(phi, theta, psi)


def z3_of(z: ZCoords) -> complex:
    """The derived third Gaussian coordinate, from

        exp(-z3/2) = i sqrt( z+* z-* / (|z+|^2 (1 + |z+|^2)) ),

    principal square root and log.  The square root leaves a sign ambiguity,
    so the value is defined modulo 2 pi i; exp(-z3) is unambiguous and
    matches the gaussian_decompose value exactly.
    """
    u2 = abs(z.z_plus) ** 2
    if u2 == 0.0:
        raise ZOriginSingular("z3 is undefined at z_plus = 0")
    w = (z.z_plus.conjugate() * z.z_minus.conjugate()) / (u2 * (1.0 + u2))
    return -2.0 * cmath.log(1j * cmath.sqrt(w))


def omega_to_a(omega: EulerAngles) -> ACoords:
    """a1 = cos(t/2) e^{-i(phi+psi)/2}, a2 = sin(t/2) e^{i(phi-psi)/2}."""
    ch = math.cos(0.5 * omega.theta)
    sh = math.sin(0.5 * omega.theta)
    return ACoords(ch * cmath.exp(-0.5j * (omega.phi + omega.psi)),
                   sh * cmath.exp(0.5j * (omega.phi - omega.psi)))


def a_to_omega(a: ACoords) -> tuple:
    """Euler angles of the spinor pair, with the double-cover sign flag:
    returns (omega, sign) with [[a1,-a2*],[a2,a1*]] = sign * R^(1/2)(omega).
    """
    u = np.array([[a.a1, -np.conj(a.a2)], [a.a2, np.conj(a.a1)]])
    return euler_from_su2(u)


def z_measure_weight(z: ZCoords, spin: Spin) -> float:
    """Invariant-measure density on the constraint surface in the chart
    (u, arg z_plus, arg z_minus) with u = |z_plus|:

        w(u) = (2s+1)/(2 pi^2) * u / (1 + u^2)^2.

    This is the delta-resolved surface density of
    (2s+1)/(2 pi^2) delta(|z+|-|z-|) / (|z+| (1+|z+|^2)^2) d^2z+ d^2z-,
    and equals the pushforward of dmu(Omega) under omega_to_z exactly.
    """
    u = abs(z.z_plus)
    return (spin.dim / (2.0 * math.pi ** 2)) * u / (1.0 + u * u) ** 2


def a_measure_weight(a: ACoords, spin: Spin) -> float:
    """Invariant-measure density with respect to the round surface measure
    on the unit 3-sphere (total area 2 pi^2): the constant (2s+1)/(2 pi^2).

    Equivalently the delta form (2s+1)/pi^2 delta(|a|^2 - 1) d^2a1 d^2a2;
    the full sphere double-covers the states, |{-a}> = +-|{a}>, so each
    projector is counted twice and the resolution of unity still sums to
    one.
    """
    return spin.dim / (2.0 * math.pi ** 2)


def kinetic_term_z(fv: FiducialVector, z: ZCoords, z_dot) -> float:
    """Chart-local form of <Omega| i d/dt |Omega> on the constraint surface:

        i { a0/(2|z+|^2) [ (1-|z+|^2)/(1+|z+|^2) (z+* dz+ - dz+* z+)
                           + (z-* dz- - dz-* z-) ]
            + 1/(|z+|^2 (1+|z+|^2)) sum_m f(s,m)
              (c_m c_{m-1}* z+ dz+* z- - c.c.) }

    with z_dot = (dz_plus/dt, dz_minus/dt).  Agrees exactly with
    kinetic_term under the induced velocity map.

    Raises ZOriginSingular when |z_plus| < 1e-9 and the fiducial vector has
    nonzero neighboring-coefficient products (the 1/|z+|^2 prefactors are
    then genuinely singular at the chart origin).
    """
    zp, zm = z.z_plus, z.z_minus
    zp_dot, zm_dot = (complex(v) for v in z_dot)
    u2 = abs(zp) ** 2
    a0, b0 = structure_pair(fv)
    if u2 < 1e-18:
        if abs(b0) > 0.0:
            raise ZOriginSingular(
                "kinetic term is singular at z_plus = 0 for fiducial vectors "
                "with coupled neighboring components")
        # single-ladder-free fiducial vector: only the a0 bracket survives,
        # and it vanishes with |z+|^2 -> 0 along constraint paths
        return 0.0
    bracket = ((1.0 - u2) / (1.0 + u2) * (zp.conjugate() * zp_dot - zp_dot.conjugate() * zp)
               + (zm.conjugate() * zm_dot - zm_dot.conjugate() * zm))
    cross = b0.conjugate() * zp * zp_dot.conjugate() * zm
    term = a0 / (2.0 * u2) * bracket \
        + (cross - cross.conjugate()) / (u2 * (1.0 + u2))
    return float((1j * term).real)


def kinetic_term_a(fv: FiducialVector, a: ACoords, a_dot) -> float:
    """Chart-local kinetic term in spinor coordinates:

        i { a0 [ (a1* da1 - da1* a1) + (a2* da2 - da2* a2) ]
            + sum_m f(s,m) (c_m c_{m-1}* (a1 da2 - da1 a2) - c.c.) }

    with a_dot = (da1/dt, da2/dt).  Globally regular on the sphere and
    exactly equal to kinetic_term under the induced velocity map.
    """
    a1, a2 = a.a1, a.a2
    a1_dot, a2_dot = (complex(v) for v in a_dot)
    a0, b0 = structure_pair(fv)
    diag = (a1.conjugate() * a1_dot - a1_dot.conjugate() * a1
            + a2.conjugate() * a2_dot - a2_dot.conjugate() * a2)
    wedge = b0.conjugate() * (a1 * a2_dot - a1_dot * a2)
    return float((1j * (a0 * diag + wedge - wedge.conjugate())).real)
