"""Bloch-Floquet fiber matrices and the spectral determinant.

Edge slots at a vertex are ordered (horizontal left, horizontal right,
vertical lower, vertical upper).  A momentum ``k`` (real for positive
energies, ``i*kappa`` for negative ones) lies in the fiber spectrum at
quasimomentum ``(theta1, theta2)`` iff ``det(A M + i k B N) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .coupling import ABCoupling, STCoupling, st_to_ab
from .trigform import wrap_angle

__all__ = [
    "FiberPoint",
    "RealnessViolation",
    "REALNESS_TOL",
    "as_ab",
    "det_array",
    "dft_coefficients",
    "dispersion_phase",
    "dispersion_real",
    "fiber_matrices",
    "fourier_coefficients",
    "matrix_D",
    "matrix_M",
    "matrix_N",
    "nullspace_vector",
    "realness_defect",
    "spectral_det",
]

REALNESS_TOL = 1e-8
NULL_TOL = 1e-8

# 3x3 quasimomentum grid that determines a degree-one trig polynomial exactly
DFT_ANGLES = 2.0 * np.pi * np.arange(3) / 3.0

CouplingLike = Union[STCoupling, ABCoupling]


class RealnessViolation(ArithmeticError):
    """The determinant is not real (after phase normalisation) at a point."""

    def __init__(self, value: complex, defect: float):
        super().__init__(f"realness defect {defect:.3e} exceeds {REALNESS_TOL:g}")
        self.value = value
        self.defect = defect


@dataclass(frozen=True)
class FiberPoint:
    """Momentum and quasimomentum pair, angles reduced into (-pi, pi]."""

    k: complex
    theta1: float = 0.0
    theta2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "k", complex(self.k))
        object.__setattr__(self, "theta1", float(wrap_angle(self.theta1)))
        object.__setattr__(self, "theta2", float(wrap_angle(self.theta2)))

    @classmethod
    def negative(cls, kappa: float, theta1: float = 0.0, theta2: float = 0.0) -> "FiberPoint":
        """Point on the imaginary axis, energy ``-kappa**2``."""
        return cls(1j * kappa, theta1, theta2)

    @property
    def energy(self) -> float:
        return float((self.k * self.k).real)


def as_ab(c: CouplingLike, a: float | None = None) -> tuple[ABCoupling, float]:
    """Return the (A, B) pair and edge length for either coupling form."""
    if isinstance(c, STCoupling):
        return st_to_ab(c), float(c.a if a is None else a)
    if isinstance(c, ABCoupling):
        if a is None:
            raise ValueError("edge length a is required for an ABCoupling")
        return c, float(a)
    raise TypeError(f"unsupported coupling type {type(c).__name__}")


def fiber_matrices(k, theta1, theta2, a: float):
    """Broadcast M and N over arrays of ``k``, ``theta1``, ``theta2``.

    Returns two arrays of shape ``broadcast_shape + (4, 4)``.
    """
    k = np.asarray(k, dtype=complex)
    theta1 = np.asarray(theta1, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    shape = np.broadcast_shapes(k.shape, theta1.shape, theta2.shape)
    M = np.zeros(shape + (4, 4), dtype=complex)
    N = np.zeros(shape + (4, 4), dtype=complex)
    ak = a * k
    for b, th in ((0, theta1), (2, theta2)):
        p = np.exp(-0.5j * (th - ak))
        q = np.exp(-0.5j * (th + ak))
        M[..., b, b] = p
        M[..., b, b + 1] = q
        M[..., b + 1, b] = 1.0 / p
        M[..., b + 1, b + 1] = 1.0 / q
        N[..., b, b] = -p
        N[..., b, b + 1] = q
        N[..., b + 1, b] = 1.0 / p
        N[..., b + 1, b + 1] = -1.0 / q
    return M, N


def matrix_M(k, theta1: float, theta2: float, a: float) -> np.ndarray:
    """Boundary-value matrix (block diagonal, one 2x2 block per direction)."""
    return fiber_matrices(k, theta1, theta2, a)[0]


def matrix_N(k, theta1: float, theta2: float, a: float) -> np.ndarray:
    """Boundary-derivative matrix (divided by ``i k``)."""
    return fiber_matrices(k, theta1, theta2, a)[1]


def matrix_D(k, theta1: float, theta2: float, a: float) -> np.ndarray:
    """Diagonal phase matrix that rescales the wavefunction coefficients."""
    ak = a * complex(k)
    return np.diag(np.exp(0.5j * np.array([theta1 - ak, theta1 + ak, theta2 - ak, theta2 + ak])))


def _system(ab: ABCoupling, k, theta1, theta2, a):
    M, N = fiber_matrices(k, theta1, theta2, a)
    k = np.asarray(k, dtype=complex)[..., None, None]
    return ab.A @ M + 1j * k * (ab.B @ N)


def det_array(c: CouplingLike, k, theta1, theta2, a: float | None = None) -> np.ndarray:
    """Vectorised ``det(A M + i k B N)`` over broadcast arrays."""
    ab, a = as_ab(c, a)
    return np.linalg.det(_system(ab, k, theta1, theta2, a))


def spectral_det(c: CouplingLike, p: FiberPoint, a: float | None = None) -> complex:
    """Spectral determinant at one fiber point."""
    return complex(det_array(c, p.k, p.theta1, p.theta2, a))


def dft_coefficients(values) -> np.ndarray:
    """Fourier coefficients from samples on the 3x3 grid ``DFT_ANGLES``.

    ``values[..., p, q]`` is the function at ``(DFT_ANGLES[p], DFT_ANGLES[q])``.
    The result is indexed ``[j + 1, l + 1]`` for harmonics ``j, l in {-1, 0, 1}``.
    """
    c = np.fft.fft2(np.asarray(values, dtype=complex), axes=(-2, -1)) / 9.0
    order = [2, 0, 1]
    return c[..., order, :][..., :, order]


def fourier_coefficients(c: CouplingLike, k, a: float | None = None) -> np.ndarray:
    """Exact quasimomentum Fourier coefficients of the determinant.

    The determinant has degree at most one in each of ``e^{i theta1}`` and
    ``e^{i theta2}``, so nine samples determine it.  Shape ``k.shape + (3, 3)``.
    """
    k = np.asarray(k, dtype=complex)
    t = DFT_ANGLES
    vals = det_array(c, k[..., None, None], t[:, None], t[None, :], a)
    return dft_coefficients(vals)


def dispersion_phase(c: CouplingLike, a: float | None = None) -> float:
    """Constant phase ``phi`` such that ``exp(-i phi) det`` is real.

    ST-form couplings give a real determinant, so the phase is 0.  For a raw
    (A, B) pair the phase is estimated from ``det**2`` over fixed samples.
    """
    if isinstance(c, STCoupling):
        return 0.0
    ab, a = as_ab(c, a)
    ks = np.array([0.37, 1.13, 2.71, 4.05]) / a
    F = fourier_coefficients(ab, ks, a)
    z = np.sum(F * F[..., ::-1, ::-1])  # sum of c[j,l] c[-j,-l] ~ e^{2 i phi} * positive
    if abs(z) == 0.0:
        return 0.0
    phi = 0.5 * float(np.angle(z))
    return phi


def realness_defect(value: complex) -> float:
    """``|Im| / (1 + |det|)``."""
    return abs(value.imag) / (1.0 + abs(value))


def dispersion_real(c: CouplingLike, p: FiberPoint, a: float | None = None,
                    phase: float | None = None, strict: bool = True) -> float:
    """Real part of the phase-normalised spectral determinant.

    Raises :class:`RealnessViolation` when ``strict`` and the imaginary part is
    not negligible.
    """
    if phase is None:
        phase = dispersion_phase(c, a)
    val = spectral_det(c, p, a) * np.exp(-1j * phase)
    defect = realness_defect(val)
    if strict and defect > REALNESS_TOL:
        raise RealnessViolation(val, defect)
    return float(val.real)


def nullspace_vector(c: CouplingLike, p: FiberPoint, a: float | None = None,
                     tol: float = NULL_TOL) -> np.ndarray | None:
    """Coefficient vector of a fiber eigenfunction, or ``None``.

    Returned when the smallest singular value of ``(A M + i k B N) D`` is below
    ``tol`` times the largest.
    """
    ab, a = as_ab(c, a)
    mat = _system(ab, p.k, p.theta1, p.theta2, a) @ matrix_D(p.k, p.theta1, p.theta2, a)
    _, sv, vh = np.linalg.svd(mat)
    if sv[0] == 0.0 or sv[-1] < tol * sv[0]:
        return vh[-1].conj()
    return None
