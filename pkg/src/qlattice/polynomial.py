"""Closed-form coefficients of the spectral condition in powers of ``k``.

For rank ``m`` between 1 and 4 the determinant expands as
``sum_j V_j(ak, theta1, theta2) k**j`` with ``j <= m``.  Each ``V_j`` is a real
trigonometric expression in ``ak`` and the quasimomenta, coded here term by
term.  Two printed variants are kept for terms where transcription is
ambiguous; :func:`oracle_match` compares them against the direct determinant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .coupling import STCoupling
from .fiber import FiberPoint, det_array

__all__ = [
    "DEFAULT_VARIANT",
    "VARIANTS",
    "DispersionCoefficients",
    "NoPolynomialForm",
    "OracleMismatch",
    "OracleReport",
    "assemble_polynomial",
    "dispersion_coeffs",
    "oracle_match",
    "polynomial_array",
]

# ``printed``: as typeset; the alternatives fix a conjugation (m=2) or pick the
# s33 reading of the theta1 coefficient (m=3).
VARIANTS = {1: ("printed",), 2: ("corrected", "printed"), 3: ("s33", "s23"), 4: ("printed",)}
DEFAULT_VARIANT = {1: "printed", 2: "corrected", 3: "s33", 4: "printed"}


class NoPolynomialForm(ValueError):
    """Rank 0 has no polynomial form; the determinant is ``-4 sin^2 ak``."""


class OracleMismatch(AssertionError):
    """Closed-form coefficients disagree with the determinant."""

    def __init__(self, message: str, point: FiberPoint | None = None, report=None):
        super().__init__(message)
        self.point = point
        self.report = report


Re = np.real
cj = np.conj


def _m1(c: STCoupling, variant: str):
    s = c.S[0, 0].real
    t1, t2, t3 = c.T[0]
    nt = 1.0 + abs(t1) ** 2 + abs(t2) ** 2 + abs(t3) ** 2

    def V1(x, e1, e2):
        return -4.0 * np.sin(x) * (nt * np.cos(x) - 2.0 * Re(t1 * e1 + cj(t2) * t3 * e2))

    def V0(x, e1, e2):
        return -4.0 * s * np.sin(x) ** 2 + 0.0 * Re(e1 * e2)

    return {1: V1, 0: V0}


def _m2(c: STCoupling, variant: str):
    S, T = c.S, c.T
    s11, s22, s12 = S[0, 0].real, S[1, 1].real, S[0, 1]
    (t11, t12), (t21, t22) = T
    detS = float(np.linalg.det(S).real)
    tsum = abs(t11) ** 2 + abs(t12) ** 2 + abs(t21) ** 2 + abs(t22) ** 2
    detT2 = abs(t11 * t22 - t12 * t21) ** 2
    # e^{i theta2} term of V1: the printed version has the conjugations swapped
    if variant == "printed":
        last = s12 * cj(t12) * t21
    else:
        last = cj(s12) * t12 * cj(t21)

    def V2(x, e1, e2):
        cs, sn = np.cos(x), np.sin(x)
        return (-4.0 * cs ** 2 * tsum + 4.0 * sn ** 2 * (1.0 + detT2)
                + 8.0 * cs * (-Re((t11 * cj(t21) + t12 * cj(t22)) * e1)
                              + Re((t22 * cj(t21) + cj(t11) * t12) * e2))
                + 8.0 * Re(t11 * cj(t22) * e1 / e2) + 8.0 * Re(t12 * cj(t21) * e1 * e2))

    def V1(x, e1, e2):
        cs, sn = np.cos(x), np.sin(x)
        diag = (s11 * (1.0 + abs(t21) ** 2 + abs(t22) ** 2) + s22 * (1.0 + abs(t11) ** 2 + abs(t12) ** 2)
                - 2.0 * Re(s12 * (cj(t11) * t21 + cj(t12) * t22)))
        return 4.0 * sn * (-cs * diag - 2.0 * Re(s12 * e1)
                           + 2.0 * Re((s11 * cj(t21) * t22 + s22 * cj(t11) * t12
                                       - s12 * cj(t11) * t22 - last) * e2))

    def V0(x, e1, e2):
        return -4.0 * detS * np.sin(x) ** 2 + 0.0 * Re(e1 * e2)

    return {2: V2, 1: V1, 0: V0}


def _m3(c: STCoupling, variant: str):
    S = c.S
    s11, s22, s33 = (S[i, i].real for i in range(3))
    s12, s13, s23 = S[0, 1], S[0, 2], S[1, 2]
    t1, t2, t3 = c.T[:, 0]
    detS = float(np.linalg.det(S).real)
    nt = 1.0 + abs(t1) ** 2 + abs(t2) ** 2 + abs(t3) ** 2
    sv = s33 if variant == "s33" else s23

    def V3(x, e1, e2):
        return 4.0 * np.sin(x) * (nt * np.cos(x) + 2.0 * Re(t1 * cj(t2) * e1) - 2.0 * Re(t3 * e2))

    def V2(x, e1, e2):
        cs, sn = np.cos(x), np.sin(x)
        return (4.0 * cs ** 2 * (-(s11 + s22) * (1.0 + abs(t3) ** 2) - s33 * (abs(t1) ** 2 + abs(t2) ** 2)
                                 + 2.0 * Re((s13 * cj(t1) + s23 * cj(t2)) * t3))
                + 4.0 * sn ** 2 * (s11 * abs(t2) ** 2 + s22 * abs(t1) ** 2 + s33 - 2.0 * Re(s12 * cj(t1) * t2))
                + 8.0 * cs * (Re((-s12 + cj(s23) * t1 * cj(t3) + s13 * cj(t2) * t3 - s12 * abs(t3) ** 2
                                  - sv * t1 * cj(t2)) * e1)
                              + Re(((s11 + s22) * t3 - cj(s13) * t1 - cj(s23) * t2) * e2))
                + 8.0 * Re((s12 * t3 - cj(s23) * t1) * e1 * e2)
                + 8.0 * Re((s12 * cj(t3) - s13 * cj(t2)) * e1 / e2))

    def V1(x, e1, e2):
        cs, sn = np.cos(x), np.sin(x)
        mix = ((abs(s12) ** 2 - s11 * s22) * (1.0 + abs(t3) ** 2)
               + (abs(s13) ** 2 - s11 * s33) * (1.0 + abs(t2) ** 2)
               + (abs(s23) ** 2 - s22 * s33) * (1.0 + abs(t1) ** 2)
               + 2.0 * Re((s12 * s33 - s13 * cj(s23)) * cj(t1) * t2)
               + 2.0 * Re((s23 * s11 - s13 * cj(s12)) * cj(t2) * t3)
               + 2.0 * Re((s13 * s22 - s12 * s23) * cj(t1) * t3))
        w2 = ((cj(s12) * cj(s23) - s22 * cj(s13)) * t1 + (s12 * cj(s13) - s11 * cj(s23)) * t2
              + (s11 * s22 - abs(s12) ** 2) * t3)
        return (4.0 * sn * cs * mix + 8.0 * sn * Re((s13 * cj(s23) - s33 * s12) * e1)
                + 8.0 * sn * Re(w2 * e2))

    def V0(x, e1, e2):
        return -4.0 * detS * np.sin(x) ** 2 + 0.0 * Re(e1 * e2)

    return {3: V3, 2: V2, 1: V1, 0: V0}


def _m4(c: STCoupling, variant: str):
    S = c.S

    def s(i, j):
        return S[i - 1, j - 1]

    d11, d22, d33, d44 = (S[i, i].real for i in range(4))
    detS = float(np.linalg.det(S).real)
    q_cos = (abs(s(1, 3)) ** 2 - d11 * d33 + abs(s(1, 4)) ** 2 - d11 * d44
             + abs(s(2, 3)) ** 2 - d22 * d33 + abs(s(2, 4)) ** 2 - d22 * d44)
    q_sin = d11 * d22 - abs(s(1, 2)) ** 2 + d33 * d44 - abs(s(3, 4)) ** 2

    def V4(x, e1, e2):
        return -4.0 * np.sin(x) ** 2 + 0.0 * Re(e1 * e2)

    def V3(x, e1, e2):
        return 4.0 * np.sin(x) * ((d11 + d22 + d33 + d44) * np.cos(x)
                                  + 2.0 * Re(s(1, 2) * e1) + 2.0 * Re(s(3, 4) * e2))

    def V2(x, e1, e2):
        cs, sn = np.cos(x), np.sin(x)
        return (4.0 * cs ** 2 * q_cos + 4.0 * sn ** 2 * q_sin
                + 8.0 * cs * (-(d33 + d44) * Re(s(1, 2) * e1)
                              + Re((s(1, 3) * cj(s(2, 3)) + s(1, 4) * cj(s(2, 4))) * e1)
                              - (d11 + d22) * Re(s(3, 4) * e2)
                              + Re((cj(s(1, 3)) * s(1, 4) + cj(s(2, 3)) * s(2, 4)) * e2))
                + 8.0 * Re((s(1, 4) * cj(s(2, 3)) - s(1, 2) * s(3, 4)) * e1 * e2)
                + 8.0 * Re((s(1, 3) * cj(s(2, 4)) - s(1, 2) * cj(s(3, 4))) * e1 / e2))

    def V0(x, e1, e2):
        return -4.0 * detS * np.sin(x) ** 2 + 0.0 * Re(e1 * e2)

    return {4: V4, 3: V3, 2: V2, 0: V0}


_BUILDERS = {1: _m1, 2: _m2, 3: _m3, 4: _m4}


@dataclass(frozen=True)
class DispersionCoefficients:
    """Coefficient evaluators ``V_j(ak, theta1, theta2)`` of one coupling.

    ``terms`` maps the power ``j`` to a vectorised callable of
    ``(x, e^{i theta1}, e^{i theta2})``; ``missing`` lists powers with no
    closed form (``V_1`` for ``m = 4``).
    """

    coupling: STCoupling
    variant: str
    terms: dict = field(repr=False)
    missing: tuple = ()

    @property
    def m(self) -> int:
        return self.coupling.m

    def V(self, j: int, x, theta1, theta2):
        """Evaluate ``V_j`` at ``x = ak``."""
        if j in self.missing:
            raise KeyError(f"V_{j} has no closed form for m={self.m}")
        f: Callable = self.terms[j]
        x = np.asarray(x)
        return f(x, np.exp(1j * np.asarray(theta1, dtype=float)), np.exp(1j * np.asarray(theta2, dtype=float)))


def dispersion_coeffs(c: STCoupling, variant: str | None = None) -> DispersionCoefficients:
    """Closed-form coefficients for ``1 <= m <= 4``.

    Raises :class:`NoPolynomialForm` for ``m = 0``.
    """
    if c.m == 0:
        raise NoPolynomialForm("m=0: the determinant is -4 sin^2(ak), no polynomial form")
    variant = DEFAULT_VARIANT[c.m] if variant is None else variant
    if variant not in VARIANTS[c.m]:
        raise ValueError(f"variant {variant!r} not available for m={c.m}; options {VARIANTS[c.m]}")
    terms = _BUILDERS[c.m](c, variant)
    missing = (1,) if c.m == 4 else ()
    return DispersionCoefficients(c, variant, terms, missing)


def polynomial_array(dc: DispersionCoefficients, k, theta1, theta2):
    """Vectorised ``sum_j V_j(ak, theta) k**j`` over the available ``j``."""
    k = np.asarray(k, dtype=float)
    x = dc.coupling.a * k
    total = 0.0
    for j in dc.terms:
        total = total + dc.V(j, x, theta1, theta2) * k ** j
    return np.asarray(total, dtype=float)


def assemble_polynomial(dc: DispersionCoefficients, p: FiberPoint) -> float:
    """Truncated polynomial at a fiber point (real ``k``)."""
    if p.k.imag != 0.0:
        raise ValueError("assemble_polynomial needs real k")
    return float(polynomial_array(dc, p.k.real, p.theta1, p.theta2))


@dataclass(frozen=True)
class OracleReport:
    m: int
    variant: str
    samples: int
    k: float
    ratio_mean: float
    ratio_spread: float
    max_root_diff: float
    roots_checked: int
    sign_agreement: float | None
    residual_bound_ok: bool | None
    passed: bool
    worst_point: FiberPoint | None = None
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "m": self.m, "variant": self.variant, "samples": self.samples, "k": self.k,
            "ratio_mean": self.ratio_mean, "ratio_spread": self.ratio_spread,
            "max_root_diff": self.max_root_diff, "roots_checked": self.roots_checked,
            "sign_agreement": self.sign_agreement, "residual_bound_ok": self.residual_bound_ok,
            "passed": self.passed, "message": self.message,
        }


def _roots(f, lo, hi, n=257, xtol=1e-14):
    ks = np.linspace(lo, hi, n)
    v = f(ks)
    out = []
    for i in range(n - 1):
        if v[i] == 0.0:
            out.append(ks[i])
        elif v[i] * v[i + 1] < 0:
            out.append(brentq(f, ks[i], ks[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
    return np.array(out)


def _real_det(c, k, t1, t2):
    return det_array(c, k, t1, t2).real


def oracle_match(c: STCoupling, samples: int = 64, k: float | None = None,
                 variant: str | None = None, seed: int = 0, raise_on_fail: bool = True,
                 ratio_tol: float = 1e-8, root_tol: float = 1e-9) -> OracleReport:
    """Check the closed-form coefficients against the direct determinant.

    For ``m <= 3`` the ratio ``det / polynomial`` must be constant (equal to
    one) at ``samples`` random quasimomenta where the polynomial exceeds
    ``1e-6``, and real zeros in ``k`` must agree to ``root_tol`` along a few
    quasimomentum lines.  For ``m = 4`` the ``V_1`` term is missing, so the
    check runs at ``k > 50/a``: the residual must stay within a crude bound on
    ``|V_1 k|`` and the signs of ``Re det`` and the truncated polynomial must
    agree wherever the polynomial dominates that bound.
    """
    dc = dispersion_coeffs(c, variant)
    a = c.a
    rng = np.random.default_rng(seed)
    th = rng.uniform(-np.pi, np.pi, size=(samples, 2))
    if c.m == 4:
        ks = (50.0 + 50.0 * rng.uniform(size=samples)) / a if k is None else np.full(samples, float(k))
    else:
        k = 17.3 / a if k is None else float(k)
        ks = np.full(samples, k)
    det = det_array(c, ks, th[:, 0], th[:, 1])
    poly = polynomial_array(dc, ks, th[:, 0], th[:, 1])

    if c.m == 4:
        # |V_1| is cubic in S with at most 4*8 unit-modulus products per entry triple
        bound = 32.0 * (np.sum(np.abs(c.S)) ** 3 + 1.0) * ks
        resid = np.abs(det.real - poly)
        bound_ok = bool(np.all(resid <= bound))
        dominant = np.abs(poly) > 2.0 * bound
        agree = np.sign(det.real[dominant]) == np.sign(poly[dominant])
        frac = float(np.mean(agree)) if agree.size else 1.0
        passed = bound_ok and frac == 1.0
        worst = None
        if not passed:
            i = int(np.argmax(resid / bound)) if not bound_ok else int(np.flatnonzero(dominant)[~agree][0])
            worst = FiberPoint(ks[i], th[i, 0], th[i, 1])
        rep = OracleReport(4, dc.variant, samples, float(np.min(ks)), float("nan"), float("nan"),
                           float("nan"), 0, frac, bound_ok, passed, worst,
                           "" if passed else "truncated polynomial disagrees with determinant")
    else:
        use = np.abs(poly) > 1e-6
        ratio = det[use] / poly[use]
        mean = complex(np.mean(ratio)) if ratio.size else complex("nan")
        spread = float(np.max(np.abs(ratio - mean)) / abs(mean)) if ratio.size else float("inf")
        worst = None
        msg = ""
        passed = spread < ratio_tol and abs(mean - 1.0) < ratio_tol
        if not passed and ratio.size:
            i = int(np.flatnonzero(use)[np.argmax(np.abs(ratio - 1.0))])
            worst = FiberPoint(ks[i], th[i, 0], th[i, 1])
            msg = f"det/polynomial ratio not constant (spread {spread:.3e}, mean {mean:.6g})"
        max_diff = 0.0
        n_roots = 0
        for t1, t2 in th[: min(4, samples)]:
            lo, hi = k, k + 2.0 * np.pi / a
            r_det = _roots(lambda x: _real_det(c, x, t1, t2), lo, hi)
            r_pol = _roots(lambda x: polynomial_array(dc, x, t1, t2), lo, hi)
            if r_det.size != r_pol.size:
                passed = False
                worst = worst or FiberPoint(k, t1, t2)
                msg = msg or f"zero counts differ ({r_det.size} vs {r_pol.size})"
                max_diff = float("inf")
                continue
            n_roots += r_det.size
            if r_det.size:
                d = float(np.max(np.abs(r_det - r_pol)))
                if d > max_diff:
                    max_diff = d
                    if d > root_tol:
                        passed = False
                        worst = worst or FiberPoint(k, t1, t2)
                        msg = msg or f"zeros differ by {d:.3e}"
        rep = OracleReport(c.m, dc.variant, samples, float(k), float(mean.real), spread, max_diff,
                           n_roots, None, None, passed, worst, msg)
    if raise_on_fail and not rep.passed:
        raise OracleMismatch(rep.message or "oracle mismatch", rep.worst_point, rep)
    return rep
