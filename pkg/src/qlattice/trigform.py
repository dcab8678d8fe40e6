"""Extrema of real trigonometric polynomials of degree one in each angle.

Every function of the quasimomentum that shows up here has the form

    f(t1, t2) = sum_{j,l in {-1,0,1}} F[j, l] exp(i (j t1 + l t2))

with ``F[-j, -l] = conj(F[j, l])``.  Coefficient arrays are stored with shape
``(..., 3, 3)`` and index ``F[j + 1, l + 1]``.  Writing
``f = b0(t2) + 2 Re(b1(t2) exp(i t1))`` the extremum over ``t1`` is explicit,
``b0 -+ 2|b1|``, which leaves a one-dimensional search in ``t2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TrigForm",
    "TorusExtrema",
    "evaluate_coeffs",
    "m1_amplitude_equality",
    "reduced_range_m1",
    "torus_minmax",
    "trig_form_range",
    "wrap_angle",
]



def wrap_angle(t):
    """Reduce angles into ``(-pi, pi]``."""
    t = np.asarray(t, dtype=float)
    w = np.mod(t + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    return w if w.ndim else float(w)


def evaluate_coeffs(F, t1, t2):
    """Evaluate the real trig polynomial with coefficients ``F`` at ``(t1, t2)``."""
    F = np.asarray(F)
    j = np.arange(-1, 2)
    e1 = np.exp(1j * np.multiply.outer(np.asarray(t1, dtype=float), j))
    e2 = np.exp(1j * np.multiply.outer(np.asarray(t2, dtype=float), j))
    val = np.einsum("...jl,...j,...l->...", F, e1, e2)
    return val.real


@dataclass(frozen=True)
class TorusExtrema:
    fmin: np.ndarray
    fmax: np.ndarray
    argmin: np.ndarray  # (..., 2)
    argmax: np.ndarray


def _reduce(F, t2):
    """b0 and b1 at angles ``t2`` (shape (..., n))."""
    e = np.exp(1j * np.multiply.outer(t2, np.arange(-1, 2)))  # (..., n, 3)
    b0 = np.einsum("...l,...nl->...n", F[..., 1, :], e).real
    b1 = np.einsum("...l,...nl->...n", F[..., 2, :], e)
    return b0, b1


def _phi(F, t2, sign):
    b0, b1 = _reduce(F, t2)
    return b0 + sign * 2.0 * np.abs(b1)


def _conv(x, y):
    """Product of Laurent polynomials stored as coefficient arrays on the last axis."""
    out = np.zeros(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]) + (x.shape[-1] + y.shape[-1] - 1,),
                   dtype=complex)
    for i in range(x.shape[-1]):
        out[..., i:i + y.shape[-1]] += x[..., i:i + 1] * y
    return out


def _critical_angles(F):
    """Angles that contain every smooth critical point of ``b0 -+ 2|b1|``.

    Where ``|b1| > 0`` a critical point solves ``b0'^2 |b1|^2 = ((|b1|^2)')^2``,
    a trig polynomial of degree four; its roots come from companion
    eigenvalue problems batched by effective degree.  Critical points of ``b0`` alone are added for the
    case ``b1 = 0``.
    """
    a = F[..., 1, :]
    b = F[..., 2, :]
    pw1 = np.arange(-1, 2)
    P = _conv(b, np.conj(b[..., ::-1]))  # powers -2..2
    dP = 1j * np.arange(-2, 3) * P
    db0 = 1j * pw1 * a
    Q = _conv(_conv(db0, db0), P) - _conv(dP, dP)  # powers -4..4
    lead_shape = Q.shape[:-1]
    Q = Q.reshape(-1, 9)
    scale = np.max(np.abs(Q), axis=-1, keepdims=True)
    Q = Q / np.where(scale > 0, scale, 1.0)
    # effective half-degree: Q is Hermitian-symmetric, so trim coefficient pairs
    big = np.abs(Q) > 1e-13
    half = np.zeros(Q.shape[0], dtype=int)
    for d in range(1, 5):
        half = np.where(big[:, 4 + d] | big[:, 4 - d], d, half)
    ang = np.zeros((Q.shape[0], 8))
    for d in range(1, 5):
        rows = np.flatnonzero(half == d)
        if rows.size == 0:
            continue
        c = Q[rows, 4 - d:5 + d]  # ascending powers, degree 2d
        comp = np.zeros((rows.size, 2 * d, 2 * d), dtype=complex)
        top = c[:, -1:]
        comp[:, 0, :] = -c[:, -2::-1] / np.where(top == 0, 1e-300, top)
        comp[:, np.arange(1, 2 * d), np.arange(2 * d - 1)] = 1.0
        with np.errstate(all="ignore"):
            r = np.angle(np.linalg.eigvals(comp))
        ang[rows, :2 * d] = np.where(np.isfinite(r), r, 0.0)
    ang = ang.reshape(lead_shape + (8,))
    with np.errstate(all="ignore"):
        # b0' = 0: a_1 z^2 = a_{-1}
        r0 = np.sqrt(a[..., 0] / np.where(a[..., 2] == 0, 1.0, a[..., 2]))
        ang0 = np.angle(np.stack([r0, -r0], axis=-1))
    return np.concatenate([ang, ang0], axis=-1)


def torus_minmax(F, grid_n: int = 32, refine: bool = True) -> TorusExtrema:
    """Minimum and maximum over the torus of the trig polynomial(s) ``F``.

    ``grid_n`` points in the second angle are scanned (the first angle is
    eliminated exactly); with ``refine`` the critical points of the reduced
    one-dimensional problem are added as candidates, so refinement can only
    lower the minimum and raise the maximum.
    """
    F = np.asarray(F, dtype=complex)
    if grid_n < 3:
        raise ValueError("grid_n must be at least 3")
    # extrema scale linearly; normalising keeps the quartic helper finite
    norm = np.max(np.abs(F), axis=(-2, -1))
    norm = np.where(norm > 0, norm, 1.0)
    F = F / norm[..., None, None]
    lead = F.shape[:-2]
    t2 = -np.pi + 2.0 * np.pi * (np.arange(grid_n) + 1) / grid_n
    t2 = np.broadcast_to(t2, lead + (grid_n,))
    out = {}
    crit = None
    for sign in (-1, +1):
        vals = _phi(F, t2, sign)
        key = vals if sign < 0 else -vals
        idx = np.argmin(key, axis=-1)[..., None]
        best_t = np.take_along_axis(t2, idx, axis=-1)[..., 0]
        best_v = np.take_along_axis(vals, idx, axis=-1)[..., 0]
        if refine:
            tc = crit if crit is not None else _critical_angles(F)
            crit = tc
            vr = _phi(F, tc, sign)
            kr = vr if sign < 0 else -vr
            j = np.argmin(kr, axis=-1)[..., None]
            rt = np.take_along_axis(tc, j, axis=-1)[..., 0]
            rv = np.take_along_axis(vr, j, axis=-1)[..., 0]
            better = rv < best_v if sign < 0 else rv > best_v
            best_t = np.where(better, rt, best_t)
            best_v = np.where(better, rv, best_v)
        _, b1 = _reduce(F, best_t[..., None])
        b1 = b1[..., 0]
        t1 = np.pi - np.angle(b1) if sign < 0 else -np.angle(b1)
        arg = np.stack([wrap_angle(t1), wrap_angle(best_t)], axis=-1)
        out[sign] = (best_v, arg)
    return TorusExtrema(out[-1][0] * norm, out[1][0] * norm, out[-1][1], out[1][1])


@dataclass(frozen=True)
class TrigForm:
    """``c0 + Re(A1 e^{i t1}) + Re(A2 e^{i t2}) + Re(A3 e^{i(t1-t2)}) + Re(A4 e^{i(t1+t2)})``."""

    A1: complex = 0j
    A2: complex = 0j
    A3: complex = 0j
    A4: complex = 0j
    c0: float = 0.0

    def coeffs(self) -> np.ndarray:
        F = np.zeros((3, 3), dtype=complex)
        F[1, 1] = self.c0
        for (j, l), A in (((1, 0), self.A1), ((0, 1), self.A2), ((1, -1), self.A3), ((1, 1), self.A4)):
            F[j + 1, l + 1] += A / 2.0
            F[-j + 1, -l + 1] += np.conj(A) / 2.0
        return F

    def __call__(self, t1, t2):
        return evaluate_coeffs(self.coeffs(), t1, t2)

    @property
    def degenerate(self) -> bool:
        return self.A1 == 0 and self.A2 == 0 and self.A3 == 0 and self.A4 == 0


def trig_form_range(f: TrigForm, grid_n: int = 64) -> tuple[float, float, bool]:
    """Range ``[min, max]`` of a :class:`TrigForm` and its degeneracy flag.

    The flag is decided on the coefficients: the range is a single point
    exactly when all four amplitudes vanish.
    """
    if grid_n < 8:
        raise ValueError("grid_n must be at least 8")
    ext = torus_minmax(f.coeffs(), grid_n)
    if f.degenerate:
        return float(f.c0), float(f.c0), True
    return float(ext.fmin), float(ext.fmax), False


def reduced_range_m1(t1: complex, t2: complex, t3: complex) -> float:
    """Amplitude ``|t1| + |t2||t3|`` of ``Re(t1 e^{i th1} + conj(t2) t3 e^{i th2})``."""
    return abs(t1) + abs(t2) * abs(t3)


def m1_amplitude_equality(t1: complex, t2: complex, t3: complex, tol: float = 1e-12):
    """Both sides of ``2(|t1| + |t2||t3|) <= 1 + |t1|^2 + |t2|^2 + |t3|^2``.

    Returns ``(lhs, rhs, equal)``; equality holds iff ``|t1| = 1`` and
    ``|t2| = |t3|``.
    """
    lhs = 2.0 * reduced_range_m1(t1, t2, t3)
    rhs = 1.0 + abs(t1) ** 2 + abs(t2) ** 2 + abs(t3) ** 2
    return lhs, rhs, abs(rhs - lhs) <= tol * max(1.0, rhs)
