"""Spin coherent states built from an arbitrary fiducial vector.

A fiducial vector |Psi0> = sum_m c_m |m> (any normalized superposition, not
just the lowest-weight state) is carried over the group: |Omega> =
R(Omega) |Psi0>.  This module provides the state construction, overlaps,
matrix elements of the generators, and the product quadrature grid that
makes the resolution of unity

    integral |Omega> dmu <Omega| = 1,
    dmu = (2s+1)/(8 pi^2) sin(theta) dtheta dphi dpsi

exact (to roundoff) for band-limited integrands, independent of the
fiducial vector.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.linalg import expm

from .errors import GridCoarseWarning, LengthMismatch, NotNormalized, ZeroVector
from .spin_core import (EulerAngles, Spin, big_r, compose_euler, invert_euler,
                        ladder_factor, little_d, spin_operators, su2_matrix,
                        euler_from_su2, _angles_of, _little_d_exact,
                        _little_d_log_columns, _EXACT_TWO_S_MAX)

__all__ = [
    "FiducialVector",
    "CoherentState",
    "MatrixElementSet",
    "QuadratureGrid",
    "make_fiducial",
    "random_fiducial",
    "coherent_state",
    "overlap",
    "matrix_elements",
    "structure_pair",
    "generating_function",
    "build_grid",
    "resolution_residual",
    "grid_amplitudes",
]


@dataclass(frozen=True)
class FiducialVector:
    """Normalized fiducial coefficients c_m in descending-m order, with the
    global phase fixed so the first nonzero coefficient is real positive."""

    spin: Spin
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.spin.dim,):
            raise LengthMismatch(f"expected {self.spin.dim} coefficients, got shape {c.shape}")
        norm_dev = abs(np.vdot(c, c).real - 1.0)
        if norm_dev > 1e-12:
            raise NotNormalized(f"coefficients are not normalized (defect {norm_dev:.3e})")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class CoherentState:
    """A rotated fiducial vector |Omega> = R(Omega) |Psi0>, with the basis
    amplitudes sum_m' R_{m'm} c_m cached in descending-m order."""

    fv: FiducialVector
    omega: EulerAngles
    amplitudes: np.ndarray


@dataclass(frozen=True)
class MatrixElementSet:
    """Structure functions of a fiducial vector at a point Omega:

        a0       = sum_m m |c_m|^2
        a1(psi)  = Re sum_m f(s,m) c_m^* c_{m-1} e^{i psi}
        a4(psi)  = Im sum_m f(s,m) c_m^* c_{m-1} e^{i psi}
        a2(Omega)= (1/2) e^{i phi} [(1+cos t) B - (1-cos t) conj(B)],
                   B = e^{i psi} sum_m f(s,m) c_m^* c_{m-1}

    a0 is bounded by |a0| <= s.
    """

    a0: float
    a1: float
    a2: complex
    a4: float


def make_fiducial(spin: Spin, raw) -> FiducialVector:
    """Normalize raw coefficients (descending-m order) into a FiducialVector.

    Raises LengthMismatch for a wrong-sized array and ZeroVector for an
    all-zero input.  The global phase is chosen so the first (highest-m)
    nonzero coefficient is real positive.
    """
    c = np.asarray(raw, dtype=complex).ravel()
    if c.shape != (spin.dim,):
        raise LengthMismatch(f"expected {spin.dim} coefficients, got {c.shape[0]}")
    norm = np.linalg.norm(c)
    if norm == 0.0:
        raise ZeroVector("fiducial coefficients are all zero")
    c = c / norm
    lead = np.flatnonzero(np.abs(c) > 0)[0]
    c = c * np.exp(-1j * np.angle(c[lead]))
    return FiducialVector(spin, c)


def random_fiducial(spin: Spin, rng: np.random.Generator) -> FiducialVector:
    """A Haar-ish random fiducial vector: iid complex normal coefficients,
    normalized and phase-fixed.  Deterministic given the generator state."""
    raw = rng.standard_normal(spin.dim) + 1j * rng.standard_normal(spin.dim)
    return make_fiducial(spin, raw)


def coherent_state(fv: FiducialVector, omega: EulerAngles) -> CoherentState:
    """|Omega> = R(Omega)|Psi0>, amplitudes R(Omega) @ c."""
    amps = big_r(fv.spin, omega).entries @ fv.coeffs
    return CoherentState(fv, omega, amps)


def overlap(fv: FiducialVector, omega2: EulerAngles, omega1: EulerAngles) -> complex:
    """<Omega2|Omega1> for a shared fiducial vector.

    Computed two ways and cross-checked to 1e-10 before returning:

    * amplitude form: conj(amplitudes(Omega2)) . amplitudes(Omega1);
    * composed form: c^dag R(Omega3) c with Omega3 the Euler angles of
      R(Omega2)^dag R(Omega1), extracted from the 2x2 product together with
      its double-cover sign (entering as sign**two_s).
    """
    a2 = coherent_state(fv, omega2).amplitudes
    a1 = coherent_state(fv, omega1).amplitudes
    direct = complex(np.vdot(a2, a1))

    u = su2_matrix((-omega2.psi, -omega2.theta, -omega2.phi)) @ su2_matrix(omega1)
    omega3, sign = euler_from_su2(u)
    composed = (sign ** fv.spin.two_s) * complex(
        fv.coeffs.conj() @ (big_r(fv.spin, omega3).entries @ fv.coeffs))
    if abs(direct - composed) > 1e-10:
        raise RuntimeError(
            f"overlap routes disagree by {abs(direct - composed):.3e}; "
            "this indicates an internal rotation-algebra inconsistency")
    return direct


def structure_pair(fv: FiducialVector) -> tuple:
    """(a0, b0) with a0 = sum_m m |c_m|^2 and b0 = sum_m f(s,m) c_m^* c_{m-1}.

    Every angle-dependent structure function is built from these two numbers:
    a1 = Re(e^{i psi} b0), a4 = Im(e^{i psi} b0).
    """
    c = fv.coeffs
    m = fv.spin.m_values()
    a0 = float(np.sum(m * np.abs(c) ** 2))
    two_m = fv.spin.two_m_values()
    f = np.array([ladder_factor(fv.spin, int(t)) for t in two_m[:-1]])
    # c is descending in m: index i holds m_i, index i+1 holds m_i - 1
    b0 = complex(np.sum(f * np.conj(c[:-1]) * c[1:]))
    return a0, b0


def matrix_elements(fv: FiducialVector, omega) -> tuple:
    """Expectation values (<S3>, <S+>) in |Omega> and the structure set.

        <S3> = a0 cos(t) - a1(psi) sin(t)
        <S+> = a0 sin(t) e^{i phi} + a2(Omega),  <S-> = conj(<S+>)

    ``omega`` may be an EulerAngles or a raw (phi, theta, psi) triple; the
    values are 2pi-periodic and fold-invariant, so raw angles are safe.
    """
    phi, theta, psi = _angles_of(omega)
    a0, b0 = structure_pair(fv)
    b = np.exp(1j * psi) * b0
    a1 = b.real
    a4 = b.imag
    ct, st = math.cos(theta), math.sin(theta)
    a2 = 0.5 * np.exp(1j * phi) * ((1.0 + ct) * b - (1.0 - ct) * np.conj(b))
    s3 = a0 * ct - a1 * st
    s_plus = a0 * st * np.exp(1j * phi) + a2
    return float(s3), complex(s_plus), MatrixElementSet(a0, a1, complex(a2), a4)


def generating_function(fv: FiducialVector, omega2: EulerAngles, omega1: EulerAngles,
                        z_plus: complex, z3: complex, z_minus: complex) -> complex:
    """<Omega2| exp(z+ S+) exp(z3 S3) exp(z- S-) |Omega1>, evaluated by dense
    matrix exponentials.  Differentiating at z = 0 generates matrix elements
    of arbitrary generator monomials between coherent states."""
    ops = spin_operators(fv.spin)
    middle = expm(z_plus * ops.s_plus) @ expm(z3 * ops.s3) @ expm(z_minus * ops.s_minus)
    a2 = coherent_state(fv, omega2).amplitudes
    a1 = coherent_state(fv, omega1).amplitudes
    return complex(np.vdot(a2, middle @ a1))


@dataclass(frozen=True)
class QuadratureGrid:
    """Product quadrature for the group measure sin(theta) dtheta dphi dpsi:
    Gauss-Legendre in cos(theta), uniform (trapezoidal) in phi and psi.

    Total weight is 8 pi^2.  The grid integrates products of two rotation
    matrices of spin <= s_max exactly when n_theta >= 2 s_max + 1 and
    n_phi, n_psi >= 4 s_max + 1; ``exact_two_s`` records the largest doubled
    spin for which that holds.
    """

    n_theta: int
    n_phi: int
    n_psi: int
    theta: np.ndarray
    theta_weights: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    @property
    def exact_two_s(self) -> int:
        return min(self.n_theta - 1, (self.n_phi - 1) // 2, (self.n_psi - 1) // 2)

    @property
    def n_points(self) -> int:
        return self.n_theta * self.n_phi * self.n_psi

    def weights(self) -> np.ndarray:
        """Flattened quadrature weights for sin(t) dt dphi dpsi, in
        (theta, phi, psi)-major order.  They sum to 8 pi^2."""
        cell = (2.0 * math.pi / self.n_phi) * (2.0 * math.pi / self.n_psi)
        w = np.broadcast_to((self.theta_weights * cell)[:, None, None],
                            (self.n_theta, self.n_phi, self.n_psi))
        return w.ravel()

    def measure_weights(self, spin: Spin) -> np.ndarray:
        """Weights for the normalized measure dmu = (2s+1)/(8 pi^2) sin(t)
        dt dphi dpsi; they sum to 2s + 1."""
        return (spin.dim / (8.0 * math.pi ** 2)) * self.weights()


def build_grid(spin_max: Spin, oversample: float = 1.2) -> QuadratureGrid:
    """Product grid sized for exact integration at spin <= spin_max:
    n_theta = ceil(ov (2 s_max + 2)), n_phi = n_psi = ceil(ov (4 s_max + 3)).
    """
    if oversample < 1.0:
        raise ValueError("oversample must be >= 1")
    two_s = spin_max.two_s
    n_theta = math.ceil(oversample * (two_s + 2))
    n_ang = math.ceil(oversample * (2 * two_s + 3))
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)
    phi = 2.0 * math.pi * np.arange(n_ang) / n_ang
    return QuadratureGrid(n_theta, n_ang, n_ang, theta, w, phi, phi.copy())


def grid_amplitudes(fv: FiducialVector, grid: QuadratureGrid) -> np.ndarray:
    """Coherent-state amplitudes at every grid node, shape (n_points, dim),
    in the same flattened order as ``grid.weights()``.

    Built factorized: per theta node one r(theta) matrix, then diagonal
    psi/phi phases, so the cost is n_theta matrix builds rather than
    n_points.
    """
    spin = fv.spin
    dim = spin.dim
    m = 0.5 * spin.two_m_values()
    psi_phase = np.exp(-1j * np.outer(grid.psi, m)) * fv.coeffs[None, :]   # (n_psi, dim)
    phi_phase = np.exp(-1j * np.outer(grid.phi, m))                        # (n_phi, dim)
    out = np.empty((grid.n_theta, grid.n_phi, grid.n_psi, dim), dtype=complex)
    for i, th in enumerate(grid.theta):
        r = _r_matrix_cached(spin.two_s, float(th))
        rot = psi_phase @ r.T                                              # (n_psi, dim)
        out[i] = phi_phase[:, None, :] * rot[None, :, :]
    return out.reshape(grid.n_points, dim)


def _r_matrix_cached(two_s: int, theta: float, _cache={}) -> np.ndarray:
    key = (two_s, theta)
    r = _cache.get(key)
    if r is None:
        if two_s <= _EXACT_TWO_S_MAX:
            r = _little_d_exact(two_s, theta)
        else:
            r = _little_d_log_columns(two_s, theta, np.arange(two_s + 1))
        if len(_cache) > 4096:
            _cache.clear()
        _cache[key] = r
    return r


def resolution_residual(fv: FiducialVector, grid: QuadratureGrid) -> float:
    """Operator-norm defect || sum_g w_g dmu_g |Omega_g><Omega_g| - 1 ||.

    For a grid exact at the fiducial spin this is roundoff-level regardless
    of the fiducial vector.  If the grid is too coarse a GridCoarseWarning
    is emitted and the (large) residual is still returned.
    """
    if grid.exact_two_s < fv.spin.two_s:
        warnings.warn(
            f"grid exact to two_s={grid.exact_two_s} but fiducial spin has "
            f"two_s={fv.spin.two_s}; residual will not be at roundoff level",
            GridCoarseWarning, stacklevel=2)
    amps = grid_amplitudes(fv, grid)
    wmu = grid.measure_weights(fv.spin)
    p = (amps.conj() * wmu[:, None]).T @ amps
    return float(np.linalg.norm(p - np.eye(fv.spin.dim), 2))
