"""SU(2) representation machinery: Wigner rotation matrices, Euler-angle
algebra, spin ladder operators, and the Gaussian decomposition.

Conventions used throughout the package:

* A rotation is parametrized by Euler angles ``(phi, theta, psi)`` in the
  z-y-z convention, ``R = exp(-i phi S3) exp(-i theta S2) exp(-i psi S3)``.
* Basis states are ordered by descending magnetic number, ``m = s, s-1, ...,
  -s``, so row 0 of every matrix is the highest-weight state.
* Spins and magnetic numbers are carried as doubled integers (``two_s``,
  ``two_m``) so half-integer bookkeeping stays exact; floats appear only in
  actual matrix entries.
* Canonical Euler ranges ``phi in [0, 2pi)``, ``theta in [0, pi]``,
  ``psi in [0, 2pi)`` label rotations (SO(3) elements).  They cover half of
  SU(2), so functions that extract angles from a 2x2 special-unitary matrix
  also return a sign flag: ``u = sign * R^(1/2)(angles)``.  At spin s the
  flag enters as ``sign**two_s``.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import DecompositionPole, NotUnitary

__all__ = [
    "Spin",
    "EulerAngles",
    "RotationMatrix",
    "SpinOperators",
    "little_d",
    "big_r",
    "su2_matrix",
    "euler_from_su2",
    "compose_euler",
    "invert_euler",
    "gaussian_decompose",
    "spin_operators",
    "conjugate_spin_ops",
    "ladder_factor",
]

TWO_PI = 2.0 * math.pi

# Largest doubled spin for which the factorial sum uses exact integer
# arithmetic.  Above this the factorials overflow comfortable integer sizes
# and the sum switches to log-space with explicit sign tracking.
_EXACT_TWO_S_MAX = 30


@dataclass(frozen=True)
class Spin:
    """Total spin, stored as the doubled integer ``two_s = 2s >= 0``."""

    two_s: int

    def __post_init__(self):
        if not isinstance(self.two_s, (int, np.integer)) or self.two_s < 0:
            raise ValueError(f"two_s must be a non-negative integer, got {self.two_s!r}")
        object.__setattr__(self, "two_s", int(self.two_s))

    @property
    def s(self) -> float:
        return 0.5 * self.two_s

    @property
    def dim(self) -> int:
        """Dimension of the spin-s representation, 2s + 1."""
        return self.two_s + 1

    def two_m_values(self) -> np.ndarray:
        """Doubled magnetic numbers in descending order, 2m = 2s, 2s-2, ..., -2s."""
        return np.arange(self.two_s, -self.two_s - 2, -2)

    def m_values(self) -> np.ndarray:
        return 0.5 * self.two_m_values()


@dataclass(frozen=True)
class EulerAngles:
    """Euler angles (phi, theta, psi), normalized on construction to the
    canonical ranges phi in [0, 2pi), theta in [0, pi], psi in [0, 2pi).

    Out-of-range input angles are folded with the identity
    ``(phi, -theta, psi) ~ (phi + pi, theta, psi + pi)`` and 2pi shifts,
    which preserve the rotation (the SO(3) element).  At half-integer spin
    the folded representative may differ from the raw one by an overall
    sign of the representation matrix; callers that need SU(2)-exact
    arithmetic should track signs via :func:`euler_from_su2`.
    """

    phi: float
    theta: float
    psi: float

    def __post_init__(self):
        phi, theta, psi = float(self.phi), float(self.theta), float(self.psi)
        theta = theta % TWO_PI
        if theta > math.pi:
            theta = TWO_PI - theta
            phi += math.pi
            psi += math.pi
        object.__setattr__(self, "phi", phi % TWO_PI)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "psi", psi % TWO_PI)

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.theta, self.psi])


@dataclass(frozen=True)
class RotationMatrix:
    """Dense spin-s rotation matrix with rows/columns in descending-m order.

    ``entries[i, j] = <m_i| R |m_j> = exp(-i phi m_i) r_{m_i m_j}(theta)
    exp(-i psi m_j)``.
    """

    spin: Spin
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (self.spin.dim, self.spin.dim):
            raise ValueError(f"entries must be {self.spin.dim}x{self.spin.dim}, got {e.shape}")
        dev = np.linalg.norm(e.conj().T @ e - np.eye(self.spin.dim))
        if dev > 1e-12 * self.spin.dim:
            raise NotUnitary(f"rotation matrix unitarity defect {dev:.3e}")
        object.__setattr__(self, "entries", e)


@dataclass(frozen=True)
class SpinOperators:
    """Matrices of S3, S+ and S- in the descending-m basis."""

    spin: Spin
    s3: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray

    @property
    def s1(self) -> np.ndarray:
        return 0.5 * (self.s_plus + self.s_minus)

    @property
    def s2(self) -> np.ndarray:
        return -0.5j * (self.s_plus - self.s_minus)


def ladder_factor(spin: Spin, two_m: int) -> float:
    """f(s, m) = sqrt((s + m)(s - m + 1)), the S+ matrix element
    <m| S+ |m-1>, with m given as the doubled integer ``two_m``."""
    a = (spin.two_s + two_m) // 2
    b = (spin.two_s - two_m + 2) // 2
    return math.sqrt(a * b)


@lru_cache(maxsize=None)
def _d_term_table(two_s: int):
    """Precomputed terms of the factorial sum for r(theta) at small spin.

    Returns index arrays (rows, cols), exact combinatorial coefficients
    (float of an exact sqrt(integer)/integer), and the cos/sin half-angle
    exponents, so a single vectorized pass evaluates the full matrix.
    """
    two_ms = range(two_s, -two_s - 2, -2)
    rows, cols, coeffs, pcs, pss = [], [], [], [], []
    for i, tm in enumerate(two_ms):
        a = (two_s + tm) // 2   # s + m
        b = (two_s - tm) // 2   # s - m
        for j, tmp in enumerate(two_ms):
            ap = (two_s + tmp) // 2  # s + m'
            bp = (two_s - tmp) // 2  # s - m'
            k = (tm - tmp) // 2      # m - m'
            num = math.factorial(a) * math.factorial(b) * math.factorial(ap) * math.factorial(bp)
            root = math.sqrt(num)
            for t in range(max(0, k), min(a, bp) + 1):
                den = (math.factorial(a - t) * math.factorial(bp - t)
                       * math.factorial(t) * math.factorial(t - k))
                rows.append(i)
                cols.append(j)
                coeffs.append((-1.0) ** t * root / den)
                pcs.append(two_s + k - 2 * t)
                pss.append(2 * t - k)
    return (np.array(rows), np.array(cols), np.array(coeffs),
            np.array(pcs), np.array(pss))


def _little_d_exact(two_s: int, theta: float) -> np.ndarray:
    rows, cols, coeffs, pcs, pss = _d_term_table(two_s)
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    terms = coeffs * np.power(c, pcs) * np.power(s, pss)
    r = np.zeros((two_s + 1, two_s + 1))
    np.add.at(r, (rows, cols), terms)
    return r


def _little_d_log_columns(two_s: int, theta: float, col_idx: np.ndarray) -> np.ndarray:
    """Selected columns of r(theta) for large spin, via log-space factorials.

    Column ``j`` holds m' = s - j.  Individual t-terms can be astronomically
    larger than the final entry at mid angles (the sum is then catastrophically
    cancelling in any fixed precision); accuracy is retained when the t-range
    per entry is short or theta is near 0 or pi, which covers the large-spin
    uses in this package.
    """
    col_idx = np.atleast_1d(col_idx)
    dim = two_s + 1
    two_m = np.arange(two_s, -two_s - 2, -2)
    a = (two_s + two_m) // 2          # s + m, per row
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    log_abs_c = math.log(abs(c)) if c != 0.0 else -math.inf
    log_abs_s = math.log(abs(s)) if s != 0.0 else -math.inf
    sign_c = 1.0 if c >= 0.0 else -1.0
    sign_s = 1.0 if s >= 0.0 else -1.0

    def lg(n):
        return gammaln(np.asarray(n) + 1.0)

    out = np.zeros((dim, len(col_idx)))
    with np.errstate(invalid="ignore", over="ignore"):
        for out_j, j in enumerate(col_idx):
            tmp = two_s - 2 * int(j)      # 2m'
            ap = (two_s + tmp) // 2
            bp = (two_s - tmp) // 2
            k = a - ap                    # m - m', per row
            log_root = 0.5 * (lg(a) + lg(two_s - a) + lg(ap) + lg(bp))
            col = np.zeros(dim)
            for t in range(max(0, int(k.min())), min(int(a.max()), bp) + 1):
                valid = (t >= k) & (t <= a)
                if not np.any(valid):
                    continue
                pc = two_s + k - 2 * t
                ps = 2 * t - k
                log_den = lg(a - t) + lg(bp - t) + lg(t) + lg(t - k)
                log_pow = (np.where(pc == 0, 0.0, pc * log_abs_c)
                           + np.where(ps == 0, 0.0, ps * log_abs_s))
                sign = ((-1.0) ** t) * np.where(pc % 2 == 0, 1.0, sign_c) \
                    * np.where(ps % 2 == 0, 1.0, sign_s)
                term = np.where(valid, sign * np.exp(log_root - log_den + log_pow), 0.0)
                # a zero base with positive exponent kills the term outright
                if c == 0.0:
                    term = np.where(pc > 0, 0.0, term)
                if s == 0.0:
                    term = np.where(ps > 0, 0.0, term)
                col += np.nan_to_num(term, nan=0.0)
            out[:, out_j] = col
    return out


def _little_d_dense_large(two_s: int, theta: float) -> np.ndarray:
    """Full r(theta) at large spin via the eigendecomposition of S2.

    A diagonal phase similarity turns S2 into a real symmetric tridiagonal
    matrix, whose eigensystem is backward stable, so the result stays
    orthogonal to machine precision at any angle (the factorial sum
    cancels catastrophically at mid angles once two_s is large).
    """
    n = np.arange(two_s)
    off = 0.5 * np.sqrt((two_s - n) * (n + 1.0))
    lam, v = eigh_tridiagonal(np.zeros(two_s + 1), off)
    p = 1j ** np.arange(two_s + 1)
    u = (p[:, None] * v) @ (np.exp(-1j * theta * lam)[:, None]
                            * (v.T * p.conj()[None, :]))
    return u.real


def little_d(spin: Spin, theta: float) -> np.ndarray:
    """Real rotation matrix r(theta) = exp(-i theta S2) in the descending-m
    basis.

    Exact integer combinatorics of the factorial sum are used for
    two_s <= 30; larger spins switch to a stable spectral evaluation.
    theta may be any real number.
    """
    theta = float(theta)
    if spin.two_s <= _EXACT_TWO_S_MAX:
        return _little_d_exact(spin.two_s, theta)
    return _little_d_dense_large(spin.two_s, theta)


def big_r(spin: Spin, omega: EulerAngles) -> RotationMatrix:
    """Full rotation matrix R(phi, theta, psi) = exp(-i phi S3) r(theta)
    exp(-i psi S3)."""
    m = 0.5 * spin.two_m_values()
    r = little_d(spin, omega.theta)
    entries = np.exp(-1j * omega.phi * m)[:, None] * r * np.exp(-1j * omega.psi * m)[None, :]
    return RotationMatrix(spin, entries)


def _big_r_columns(spin: Spin, omega, col_idx: np.ndarray) -> np.ndarray:
    """Selected columns of R(omega) without the unitarity-validated wrapper.

    Used where only a few columns of a large-spin matrix are needed.
    ``omega`` may be an EulerAngles or a raw (phi, theta, psi) triple.
    """
    phi, theta, psi = _angles_of(omega)
    m = 0.5 * spin.two_m_values()
    if spin.two_s <= _EXACT_TWO_S_MAX:
        r_cols = _little_d_exact(spin.two_s, theta)[:, col_idx]
    else:
        r_cols = _little_d_log_columns(spin.two_s, theta, col_idx)
    return np.exp(-1j * phi * m)[:, None] * r_cols * np.exp(-1j * psi * m[col_idx])[None, :]


def _angles_of(omega) -> tuple:
    """Accept an EulerAngles or any (phi, theta, psi) sequence."""
    if isinstance(omega, EulerAngles):
        return omega.phi, omega.theta, omega.psi
    phi, theta, psi = (float(x) for x in omega)
    return phi, theta, psi


def su2_matrix(omega) -> np.ndarray:
    """The 2x2 special-unitary matrix of the spin-1/2 representation,

        [[cos(t/2) e^{-i(phi+psi)/2}, -sin(t/2) e^{-i(phi-psi)/2}],
         [sin(t/2) e^{+i(phi-psi)/2},  cos(t/2) e^{+i(phi+psi)/2}]]

    evaluated at raw (unnormalized) angles, so it is usable as the exact
    double-cover lift in compositions.
    """
    phi, theta, psi = _angles_of(omega)
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    ep = np.exp(-0.5j * (phi + psi))
    em = np.exp(-0.5j * (phi - psi))
    return np.array([[c * ep, -s * em], [s * em.conjugate(), c * ep.conjugate()]])


_DEGENERATE_CUTOFF = 1e-9


def euler_from_su2(u: np.ndarray) -> tuple:
    """Extract canonical Euler angles from a 2x2 special-unitary matrix.

    Returns ``(omega, sign)`` with ``u = sign * su2_matrix(omega)`` and
    ``sign in {+1, -1}``; canonical angle ranges cover only half of SU(2),
    so the sign flag carries the sheet.  At spin s the representation of
    ``u`` is ``sign**two_s * big_r(spin, omega).entries``.

    Raises NotUnitary unless ``||u^dag u - 1|| <= 1e-10`` and
    ``|det u - 1| <= 1e-10``.

    When sin(theta) is degenerate (theta within 1e-9 of 0 or pi) only one
    angle combination survives; the convention here puts it entirely in psi
    (theta ~ 0) or phi (theta ~ pi), zeroing the other angle.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u.shape}")
    if np.linalg.norm(u.conj().T @ u - np.eye(2)) > 1e-10:
        raise NotUnitary("matrix is not unitary to 1e-10")
    if abs(np.linalg.det(u) - 1.0) > 1e-10:
        raise NotUnitary("matrix determinant differs from 1 by more than 1e-10")

    a, c = u[0, 0], u[1, 0]
    theta = 2.0 * math.atan2(abs(c), abs(a))
    if abs(c) < _DEGENERATE_CUTOFF:
        # diagonal: only phi + psi defined; store it in psi
        omega = EulerAngles(0.0, 0.0, -2.0 * np.angle(a))
    elif abs(a) < _DEGENERATE_CUTOFF:
        # anti-diagonal: only phi - psi defined; store it in phi
        omega = EulerAngles(2.0 * np.angle(c), math.pi, 0.0)
    else:
        half_sum = -np.angle(a)   # (phi + psi)/2 mod 2pi
        half_dif = np.angle(c)    # (phi - psi)/2 mod 2pi
        omega = EulerAngles(half_sum + half_dif, theta, half_sum - half_dif)

    ref = su2_matrix(omega)
    k = np.unravel_index(np.argmax(np.abs(ref)), ref.shape)
    sign = 1 if (u[k] / ref[k]).real > 0.0 else -1
    return omega, sign


def compose_euler(omega2: EulerAngles, omega1: EulerAngles) -> tuple:
    """Euler angles of the composed rotation R(omega2) R(omega1).

    Returns ``(omega, sign)`` such that at any spin

        big_r(spin, omega2) @ big_r(spin, omega1)
            == sign**two_s * big_r(spin, omega).

    The composition is done by multiplying the two spin-1/2 matrices and
    extracting angles, which reduces repeated composition to 2x2 products.
    """
    return euler_from_su2(su2_matrix(omega2) @ su2_matrix(omega1))


def invert_euler(omega: EulerAngles) -> EulerAngles:
    """Euler angles of the inverse rotation, normalize(-psi, -theta, -phi).

    Exact at the SO(3) level; at half-integer spin the representation of the
    result may differ from R(omega)^dag by an overall sign (the canonical
    ranges cover half of SU(2)).
    """
    return EulerAngles(-omega.psi, -omega.theta, -omega.phi)


def gaussian_decompose(omega: EulerAngles) -> tuple:
    """Coordinates (z_plus, z3, z_minus) of the Gaussian decomposition

        R(omega) = exp(z_plus S+) exp(z3 S3) exp(z_minus S-)

    with z_plus = -tan(theta/2) e^{-i phi}, z3 = -2 Log(cos(theta/2)
    e^{i(phi+psi)/2}) (principal branch), z_minus = tan(theta/2) e^{-i psi}.

    Any 2pi i ambiguity in the log branch drops out of exp(z3 S3) for both
    integer and half-integer spin, so the product identity is exact.

    Raises DecompositionPole within 1e-9 of theta = pi, where tan(theta/2)
    diverges.
    """
    if abs(omega.theta - math.pi) < _DEGENERATE_CUTOFF:
        raise DecompositionPole(f"theta = {omega.theta} is within 1e-9 of the pole at pi")
    t = math.tan(0.5 * omega.theta)
    z_plus = -t * np.exp(-1j * omega.phi)
    z3 = -2.0 * np.log(math.cos(0.5 * omega.theta) * np.exp(0.5j * (omega.phi + omega.psi)))
    z_minus = t * np.exp(-1j * omega.psi)
    return complex(z_plus), complex(z3), complex(z_minus)


def spin_operators(spin: Spin) -> SpinOperators:
    """S3, S+, S- in the descending-m basis: S3 = diag(s, s-1, ..., -s) and
    S+ |m-1> = f(s, m) |m> with f(s, m) = sqrt((s+m)(s-m+1))."""
    dim = spin.dim
    two_m = spin.two_m_values()
    s3 = np.diag(0.5 * two_m).astype(complex)
    s_plus = np.zeros((dim, dim), dtype=complex)
    for i in range(dim - 1):
        # row i holds m_i; the entry couples |m_i - 1> (column i + 1) up to |m_i>
        s_plus[i, i + 1] = ladder_factor(spin, int(two_m[i]))
    return SpinOperators(spin, s3, s_plus, s_plus.conj().T)


def conjugate_spin_ops(spin: Spin, omega: EulerAngles) -> SpinOperators:
    """Rotated generators R^dag S R in closed form:

        R^dag S3 R  = cos(t) S3 - (1/2) sin(t) [e^{i psi} S+ + e^{-i psi} S-]
        R^dag S+- R = e^{+-i phi} { sin(t) S3
                        + (1/2) [(cos(t) +- 1) e^{i psi} S+
                                 + (cos(t) -+ 1) e^{-i psi} S-] }

    with t = theta.  Matches the explicit triple product to 1e-12.
    """
    ops = spin_operators(spin)
    ct, st = math.cos(omega.theta), math.sin(omega.theta)
    ep, em = np.exp(1j * omega.psi), np.exp(-1j * omega.psi)
    s3 = ct * ops.s3 - 0.5 * st * (ep * ops.s_plus + em * ops.s_minus)
    s_plus = np.exp(1j * omega.phi) * (
        st * ops.s3 + 0.5 * ((ct + 1.0) * ep * ops.s_plus + (ct - 1.0) * em * ops.s_minus))
    s_minus = np.exp(-1j * omega.phi) * (
        st * ops.s3 + 0.5 * ((ct - 1.0) * ep * ops.s_plus + (ct + 1.0) * em * ops.s_minus))
    return SpinOperators(spin, s3, s_plus, s_minus)
