"""High-energy asymptotics of bands and gaps.

:func:`classify` routes a coupling through the case analysis for its rank and
returns one :class:`Regime` per family of bands (or gaps) with the growth law
of the family and the constants in its leading term.  Widths are energy
widths; anchors are ``(n pi / a)**2`` (``even``), ``((n + 1/2) pi / a)**2``
(``odd``) or a shifted ladder of flat bands (``shifted-flat``).

:func:`compare_asymptotics` scans a window of band indices and sets the
numeric widths against the predicted law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .coupling import STCoupling, classify_coupling
from .trigform import TrigForm, torus_minmax

__all__ = [
    "AsymptoticReport",
    "AsymptoticsError",
    "Comparison",
    "Regime",
    "ZERO_TOL",
    "classify",
    "compare_asymptotics",
    "d_intervals_m4",
    "m2_constants",
    "m3_even_interval",
    "pq_m4",
    "predicted_band_width",
    "robin_eigenvalues_m4",
    "robin_offsets_m4",
    "v2_pm",
]

ZERO_TOL = 1e-12
BORDERLINE = 1e-8
POINT_TOL = 1e-10

BAND_LAWS = ("flat", "O(n)", "O(1)", "O(n^-1)", "O(n^-2)", "O(n^-3)", "collapsed-point",
             "full-line", "unclassified")
GAP_LAWS = ("O(n)", "O(1)", "none", "unknown")


class AsymptoticsError(ValueError):
    pass


@dataclass(frozen=True)
class Regime:
    """One family of bands or gaps and its leading-order law.

    ``measure`` says whether the width law refers to the bands or the gaps of
    the family.  The predicted width at index ``n`` is
    ``coefficient * (n + shift)**exponent``.
    """

    anchor: str
    band_law: str
    gap_law: str
    case: str
    constants: dict = field(default_factory=dict)
    measure: str = "band"
    coefficient: float | None = None
    exponent: int | None = None
    shift: float = 0.0
    notes: tuple = ()

    def __post_init__(self):
        if self.band_law not in BAND_LAWS:
            raise AsymptoticsError(f"unknown band law {self.band_law!r}")
        if self.gap_law not in GAP_LAWS:
            raise AsymptoticsError(f"unknown gap law {self.gap_law!r}")
        consts = {k: float(v) for k, v in self.constants.items()}
        if not all(math.isfinite(v) for v in consts.values()):
            raise AsymptoticsError(f"non-finite constant in regime {self.case!r}")
        object.__setattr__(self, "constants", consts)

    def width(self, n) -> float:
        """Leading-order width at index ``n``."""
        if self.band_law in ("flat", "collapsed-point") and self.measure == "band":
            return 0.0
        if self.band_law == "full-line":
            return math.inf if self.measure == "band" else 0.0
        if self.coefficient is None or self.exponent is None:
            raise AsymptoticsError(f"regime {self.case!r} has no width constant")
        return float(self.coefficient * (n + self.shift) ** self.exponent)

    def anchor_k(self, n, a: float) -> float:
        """Momentum of the anchor point of index ``n``."""
        return (n + (0.5 if self.anchor == "odd" else 0.0)) * math.pi / a

    def as_dict(self) -> dict:
        return {
            "anchor": self.anchor, "band_law": self.band_law, "gap_law": self.gap_law,
            "case": self.case, "constants": dict(self.constants), "measure": self.measure,
            "coefficient": self.coefficient, "exponent": self.exponent, "shift": self.shift,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class AsymptoticReport:
    m: int
    a: float
    regimes: tuple
    coupling_class: str = "Generic"
    warnings: tuple = ()

    def as_dict(self) -> dict:
        return {
            "m": self.m, "a": self.a, "coupling_class": self.coupling_class,
            "regimes": [r.as_dict() for r in self.regimes], "warnings": list(self.warnings),
        }


class _Zero:
    """Exact-zero predicates that remember near misses."""

    def __init__(self):
        self.warnings = []

    def __call__(self, x, name: str) -> bool:
        v = abs(x)
        if v <= ZERO_TOL:
            return True
        if v < BORDERLINE:
            self.warnings.append(f"borderline: {name} = {v:.3g} is close to zero; "
                                 "the asymptotic class is discontinuous here")
        return False


# --- m = 2 ------------------------------------------------------------------

def _m2_parts(c: STCoupling):
    (t11, t12), (t21, t22) = c.T
    Kc = 4.0 * (abs(t11) ** 2 + abs(t22) ** 2 + abs(t12) ** 2 + abs(t21) ** 2)
    Ks = 4.0 * (1.0 + abs(t11 * t22 - t12 * t21) ** 2)
    alpha = t11 * np.conj(t21) + t12 * np.conj(t22)
    beta = t22 * np.conj(t21) + np.conj(t11) * t12
    A3 = 8.0 * t11 * np.conj(t22)
    A4 = 8.0 * t12 * np.conj(t21)
    return Kc, Ks, alpha, beta, A3, A4


def _v2_coeffs(c: STCoupling, x):
    Kc, Ks, alpha, beta, A3, A4 = _m2_parts(c)
    x = np.asarray(x, dtype=float)
    cs, sn = np.cos(x), np.sin(x)
    F = np.zeros(x.shape + (3, 3), dtype=complex)
    F[..., 1, 1] = -Kc * cs ** 2 + Ks * sn ** 2
    for (j, l), A in (((1, 0), -8.0 * alpha * cs), ((0, 1), 8.0 * beta * cs),
                      ((1, -1), A3 * np.ones_like(cs)), ((1, 1), A4 * np.ones_like(cs))):
        F[..., j + 1, l + 1] += A / 2.0
        F[..., 1 - j, 1 - l] += np.conj(A) / 2.0
    return F


def v2_pm(c: STCoupling, x, grid_n: int = 64):
    """``(V2^-(x), V2^+(x))``: min and max of the leading m=2 coefficient over the torus."""
    if c.m != 2:
        raise AsymptoticsError("v2_pm needs m = 2")
    ext = torus_minmax(_v2_coeffs(c, x), grid_n)
    lo, hi = ext.fmin, ext.fmax
    if np.ndim(lo) == 0:
        return float(lo), float(hi)
    return lo, hi


def m2_constants(c: STCoupling) -> dict:
    """``K_c``, ``K_s``, ``L_0^+`` and ``L_{pi/2}^-`` of an m=2 coupling.

    ``L_0^+`` is the torus maximum of ``L_c + L``, the theta-dependent part of
    the leading coefficient at ``x = 0``, so that ``V2^+(0) = -K_c + L_0^+``.
    """
    Kc, Ks, _, _, A3, A4 = _m2_parts(c)
    L0 = float(v2_pm(c, 0.0)[1] + Kc)
    Lpi2 = -abs(A3) - abs(A4)
    return {"K_c": Kc, "K_s": Ks, "L0_plus": L0, "Lpi2_minus": Lpi2}


# --- m = 3 ------------------------------------------------------------------

def _w_forms(c: STCoupling):
    S = c.S
    s11, s22, s33 = (S[i, i].real for i in range(3))
    s12, s13, s23 = S[0, 1], S[0, 2], S[1, 2]
    t1, t2, t3 = c.T[:, 0]
    cj = np.conj
    W3 = TrigForm(A1=2.0 * t1 * cj(t2), A2=-2.0 * t3,
                  c0=1.0 + abs(t1) ** 2 + abs(t2) ** 2 + abs(t3) ** 2)
    W2 = TrigForm(
        A1=2.0 * (-s12 + cj(s23) * t1 * cj(t3) + s13 * cj(t2) * t3 - s12 * abs(t3) ** 2 - s33 * t1 * cj(t2)),
        A2=2.0 * ((s11 + s22) * t3 - cj(s13) * t1 - cj(s23) * t2),
        A3=2.0 * (s12 * cj(t3) - s13 * cj(t2)),
        A4=2.0 * (s12 * t3 - cj(s23) * t1),
        c0=float((-(s11 + s22) * (1.0 + abs(t3) ** 2) - s33 * (abs(t1) ** 2 + abs(t2) ** 2)
                  + 2.0 * ((s13 * cj(t1) + s23 * cj(t2)) * t3).real)))
    return W2, W3


def m3_even_interval(c: STCoupling, grid_n: int = 64) -> tuple[float, float]:
    """Range of ``-W2 / W3`` over the torus (the even-band offset set).

    ``W3`` is positive away from ``|t1| = |t2|, |t3| = 1``, so ``d`` is in the
    range iff ``W2 + d W3`` changes sign on the torus; both ends are roots of
    a monotone function of ``d``.
    """
    W2, W3 = _w_forms(c)
    F2, F3 = W2.coeffs(), W3.coeffs()
    w3min = float(torus_minmax(F3, grid_n).fmin)
    if w3min <= 0.0:
        raise AsymptoticsError("W3 vanishes on the torus; the even-band set is unbounded")

    def ext(d):
        e = torus_minmax(F2 + d * F3, grid_n)
        return float(e.fmin), float(e.fmax)

    bound = float(np.sum(np.abs(F2))) / w3min + 1.0
    lo = brentq(lambda d: ext(d)[1], -bound, bound, xtol=1e-14, rtol=1e-15)
    hi = brentq(lambda d: ext(d)[0], -bound, bound, xtol=1e-14, rtol=1e-15)
    return lo, max(lo, hi)


# --- m = 4 ------------------------------------------------------------------

def pq_m4(S, theta1, theta2, parity: int = 1):
    """Coefficients of ``d**2 + 2 p d + q`` for the m=4 band offsets.

    Vectorised over ``theta1``, ``theta2``; ``parity`` is ``(-1)**n``.
    """
    S = np.asarray(S, dtype=complex)
    if S.shape != (4, 4):
        raise AsymptoticsError("pq_m4 needs a 4x4 matrix")
    if parity not in (1, -1):
        raise AsymptoticsError("parity must be +1 or -1")

    def s(i, j):
        return S[i - 1, j - 1]

    cj = np.conj
    e1 = np.exp(1j * np.asarray(theta1, dtype=float))
    e2 = np.exp(1j * np.asarray(theta2, dtype=float))
    d = [S[i, i].real for i in range(4)]
    r12 = np.real(s(1, 2) * e1)
    r34 = np.real(s(3, 4) * e2)
    p = -0.5 * (sum(d) + 2.0 * parity * r12 + 2.0 * parity * r34)
    qc = (abs(s(1, 3)) ** 2 - d[0] * d[2] + abs(s(1, 4)) ** 2 - d[0] * d[3]
          + abs(s(2, 3)) ** 2 - d[1] * d[2] + abs(s(2, 4)) ** 2 - d[1] * d[3])
    lin = (-(d[2] + d[3]) * r12 + np.real((s(1, 3) * cj(s(2, 3)) + s(1, 4) * cj(s(2, 4))) * e1)
           - (d[0] + d[1]) * r34 + np.real((cj(s(1, 3)) * s(1, 4) + cj(s(2, 3)) * s(2, 4)) * e2))
    q = (-qc - 2.0 * parity * lin
         - 2.0 * np.real((s(1, 4) * cj(s(2, 3)) - s(1, 2) * s(3, 4)) * e1 * e2)
         - 2.0 * np.real((s(1, 3) * cj(s(2, 4)) - s(1, 2) * cj(s(3, 4))) * e1 / e2))
    if np.ndim(p) == 0:
        return float(p), float(q)
    return p, q


def _d_branch(S, sign):
    def f(t):
        p, q = pq_m4(S, t[0], t[1])
        disc = p * p - q
        return -p + sign * np.sqrt(np.maximum(disc, 0.0)), disc
    return f


def d_intervals_m4(S, grid_n: int = 64):
    """Ranges of ``-p + sqrt(p^2 - q)`` (first) and ``-p - sqrt(p^2 - q)`` (second).

    Each range is a ``(min, max)`` pair collected from the real values on a
    ``grid_n``-square torus grid, then polished by a local search that stays
    where the discriminant is non-negative.
    """
    t = -np.pi + 2.0 * np.pi * (np.arange(grid_n) + 1) / grid_n
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    out = []
    for sign in (1, -1):
        f = _d_branch(S, sign)
        val, disc = f((T1, T2))
        ok = disc >= -1e-14
        if not np.any(ok):
            raise AsymptoticsError("no real offsets on the torus; contradicts the discriminant bound")
        ends = []
        for direction in (1, -1):
            masked = np.where(ok, direction * val, np.inf)
            i = np.unravel_index(np.argmin(masked), masked.shape)
            best = float(val[i])
            x0 = np.array([T1[i], T2[i]])

            def obj(x, direction=direction):
                v, dsc = f(x)
                return direction * float(v) + 1e6 * max(0.0, -float(dsc))

            res = minimize(obj, x0, method="Nelder-Mead",
                           options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
            v, dsc = f(res.x)
            if dsc >= -1e-14 and direction * float(v) < direction * best:
                best = float(v)
            ends.append(best)
        out.append((ends[0], ends[1]))
    return out[0], out[1]


def robin_offsets_m4(c: STCoupling) -> tuple[float, float]:
    """Large-``n`` offsets ``d`` of the two decoupled edge types (diagonal S)."""
    d = np.diag(c.S).real
    return float(d[0] + d[1]), float(d[2] + d[3])


def _robin(k, s0, s1, a):
    return (k * k - s0 * s1) * np.sin(k * a) - k * (s0 + s1) * np.cos(k * a)


def robin_eigenvalues_m4(c: STCoupling, k_max: float, per_period: int = 256) -> list:
    """Positive flat-band energies of a decoupled (diagonal) m=4 lattice.

    Each edge carries Robin conditions ``psi'(0) = s0 psi(0)`` and
    ``-psi'(a) = s1 psi(a)``; its eigenvalues solve
    ``(k^2 - s0 s1) sin ka = k (s0 + s1) cos ka``.  Horizontal edges use
    ``(s11, s22)`` and vertical ones ``(s33, s44)``.  Energies shared by both
    edge types are listed once.
    """
    if c.m != 4:
        raise AsymptoticsError("robin_eigenvalues_m4 needs m = 4")
    a = c.a
    d = np.diag(c.S).real
    n = max(8, int(per_period * k_max * a / np.pi) + 1)
    ks = np.linspace(1e-9 / a, k_max, n)
    found = []
    for s0, s1 in ((d[0], d[1]), (d[2], d[3])):
        v = _robin(ks, s0, s1, a)
        for i in np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0):
            found.append(brentq(_robin, ks[i], ks[i + 1], args=(s0, s1, a), xtol=1e-15, rtol=1e-15))
        found += [float(k) for k in ks[np.flatnonzero(v == 0.0)]]
    energies = sorted(k * k for k in found)
    uniq = []
    for e in energies:
        if not uniq or e - uniq[-1] > 1e-9 * max(1.0, e):
            uniq.append(e)
    return uniq


# --- the case tree ----------------------------------------------------------

def _flat(case, anchor="even", constants=None, notes=()):
    return Regime(anchor, "flat", "O(n)", case, constants or {"width": 0.0}, "band", 0.0, 0, 0.0, notes)


def _m0(c, z):
    return [_flat("decoupled edges, Dirichlet: eigenvalues (n pi / a)^2")]


def _m1(c, z):
    a = c.a
    s = float(c.S[0, 0].real)
    t1, t2, t3 = c.T[0]
    amp = abs(t1) + abs(t2) * abs(t3)
    nt = 1.0 + abs(t1) ** 2 + abs(t2) ** 2 + abs(t3) ** 2
    regimes = []
    if z(t1, "t1") and (z(t2, "t2") or z(t3, "t3")):
        tt = abs(t2) ** 2 + abs(t3) ** 2
        # each cell holds two edges joined by a delta of strength s with
        # Dirichlet far ends: tan(ak) = -k (1 + |t|^2) / s
        offset = 2.0 * s / (a * (1.0 + tt))
        regimes.append(_flat("point spectrum: two-edge pieces, flat bands near ((n - 1/2) pi / a)^2",
                             "shifted-flat",
                             {"energy_offset": offset, "printed_energy_offset": -offset, "width": 0.0},
                             ("anchor ((n - 1/2) pi / a)^2 + energy_offset",
                              "printed_energy_offset has the opposite sign and disagrees with the scan")))
        regimes.append(_flat("point spectrum: sin(ak) factor, flat bands at (n pi / a)^2"))
        return regimes
    equal = z(abs(t1) - 1.0, "|t1| - 1") and z(abs(t2) - abs(t3), "|t2| - |t3|")
    if equal:
        if z(s, "s"):
            return [Regime("none", "full-line", "none", "no gaps: spectrum is [0, inf)",
                           {"width": 0.0}, "gap", 0.0, 0, 0.0)]
        gap = 2.0 * s / (a * (1.0 + abs(t2) ** 2))
        return [Regime("even", "O(n)", "O(1)",
                       "constant gaps next to (n pi / a)^2, linearly growing bands",
                       {"gap_width": abs(gap), "gap_offset_lo": min(0.0, gap), "gap_offset_hi": max(0.0, gap)},
                       "gap", abs(gap), 0, 0.0,
                       ("gap lies above (n pi / a)^2 for s > 0, below for s < 0",))]
    delta = math.asin(min(1.0, 2.0 * amp / nt))
    return [
        Regime("odd", "O(n)", "O(n)", "linearly growing bands around ((n + 1/2) pi / a)^2",
               {"Delta": delta, "band_half_width_k": delta / a}, "band",
               4.0 * math.pi * delta / a ** 2, 1, 0.5),
        Regime("even", "O(n)", "O(n)", "linearly growing gaps around (n pi / a)^2",
               {"Delta": delta}, "gap", 2.0 * math.pi * (math.pi - 2.0 * delta) / a ** 2, 1, 0.0),
    ]


def _m2(c, z):
    a = c.a
    S, T = c.S, c.T
    s12 = S[0, 1]
    nz = sum(not z(t, f"t{i // 2 + 1}{i % 2 + 1}") for i, t in enumerate(T.ravel()))
    if nz >= 2:
        k = m2_constants(c)
        Kc, Ks, L0, Lpi2 = k["K_c"], k["K_s"], k["L0_plus"], k["Lpi2_minus"]
        scale = max(1.0, Kc, Ks)
        even_eq = abs(L0 - Kc) <= 1e-9 * scale
        odd_eq = abs(Lpi2 + Ks) <= 1e-9 * scale
        scale_inv = bool(np.all(np.abs(S) <= ZERO_TOL))
        regimes = []
        if L0 > Kc and Lpi2 < -Ks and not (even_eq or odd_eq):
            return [Regime("none", "full-line", "none", "no gaps above some energy: half-line tail",
                           k, "gap", 0.0, 0, 0.0)]
        if even_eq:
            if scale_inv:
                regimes.append(Regime("even", "O(n)", "none", "no gaps around (n pi / a)^2 (S = 0, L0+ = Kc)",
                                      k, "gap", 0.0, 0, 0.0))
            else:
                regimes.append(Regime("even", "unclassified", "unknown",
                                      "unclassified: L0+ = Kc with S != 0", k, "gap"))
        elif L0 < Kc:
            b = brentq(lambda x: v2_pm(c, x)[1], 0.0, 0.5 * np.pi, xtol=1e-14)
            regimes.append(Regime("even", "O(n)", "O(n)", "linearly growing gaps around (n pi / a)^2",
                                  {**k, "b": b}, "gap", 4.0 * math.pi * b / a ** 2, 1, 0.0))
        if odd_eq:
            if scale_inv:
                regimes.append(Regime("odd", "O(n)", "none",
                                      "no gaps around ((n + 1/2) pi / a)^2 (S = 0, Lpi2- = -Ks)",
                                      k, "gap", 0.0, 0, 0.0))
            else:
                regimes.append(Regime("odd", "unclassified", "unknown",
                                      "unclassified: Lpi2- = -Ks with S != 0", k, "gap"))
        elif Lpi2 > -Ks:
            xs = brentq(lambda x: v2_pm(c, x)[0], 0.0, 0.5 * np.pi, xtol=1e-14)
            cc = 0.5 * np.pi - xs
            regimes.append(Regime("odd", "O(n)", "O(n)", "linearly growing gaps around ((n + 1/2) pi / a)^2",
                                  {**k, "c": cc}, "gap", 4.0 * math.pi * cc / a ** 2, 1, 0.5))
        if not regimes:
            regimes.append(Regime("none", "full-line", "none", "no gaps above some energy: half-line tail",
                                  k, "gap", 0.0, 0, 0.0))
        return regimes
    if z(s12, "s12"):
        return [_flat("pure point: edges or edge pairs decouple", "shifted-flat")]
    if nz == 0:
        s11, s22 = S[0, 0].real, S[1, 1].real
        return [
            Regime("even", "O(1)", "O(n)", "constant-width bands around (n pi / a)^2 (T = 0)",
                   {"band_width": 8.0 * abs(s12) / a, "centre_offset": 2.0 * (s11 + s22) / a},
                   "band", 8.0 * abs(s12) / a, 0, 0.0,
                   ("the points (n pi / a)^2 are flat bands that may lie outside the band",)),
            _flat("flat bands at (n pi / a)^2 from the sin(ak) factor"),
        ]
    t = T.ravel()[np.argmax(np.abs(T.ravel()))]
    shift = 0.5 * math.acos((1.0 - abs(t) ** 2) / (1.0 + abs(t) ** 2))
    return [Regime("shifted-flat", "O(1)", "O(n)",
                   "constant-width bands around (n pi / a + shift / a)^2 (one nonzero t)",
                   {"shift": shift}, "band", None, 0, 0.0,
                   ("the width constant is not available in closed form",))]


def _m3_odd_T0(c, z):
    """Odd bands for T = 0: the n^-1 law, then the n^-3 law."""
    a = c.a
    S = c.S
    s11, s22, s33 = (S[i, i].real for i in range(3))
    s12, s13, s23 = S[0, 1], S[0, 2], S[1, 2]
    if not z(s13, "s13") and not z(s23, "s23"):
        w = 8.0 * abs(s13 * s23) / math.pi
        return Regime("odd", "O(n^-1)", "O(n)", "odd bands shrinking as n^-1 (T = 0)",
                      {"width_coefficient": w}, "band", w, -1, 0.5)
    if z(s13, "s13") and z(s23, "s23"):
        return _flat("odd points: the vertical edge decouples (T = 0, s13 = s23 = 0)", "odd")
    # by the mirror swapping the two horizontal edges, s23 = 0 is the generic form
    sx, sdiag = (s13, s22) if z(s23, "s23") else (s23, s11)
    C = abs(s12) * abs(sx) ** 2 * abs(s33 - sdiag)
    printed = {}
    if abs(s33) > ZERO_TOL:
        printed["printed_n2_coefficient"] = 4.0 * abs(s33 * s12) / math.pi
    else:
        printed["printed_n3_coefficient"] = 4.0 * a * a * abs(sx) ** 2 * abs(sdiag) * abs(s12) / math.pi ** 3
    if z(s12, "s12"):
        return _flat("odd points: quasimomentum-independent condition (T = 0, one of s13, s23 and s12 vanish)",
                     "odd", notes=("pure point near ((n + 1/2) pi / a)^2",))
    if C <= ZERO_TOL:
        return Regime("odd", "collapsed-point", "O(n)", "odd band collapses to a point (T = 0)",
                      {"width": 0.0, **printed}, "band", 0.0, 0, 0.5)
    w = 8.0 * a * a * C / math.pi ** 3
    return Regime("odd", "O(n^-3)", "O(n)", "odd bands shrinking as n^-3 (T = 0, one of s13, s23 zero)",
                  {"width_coefficient": w, **printed}, "band", w, -3, 0.5,
                  ("leading order cancels through n^-2; width 8 a^2 |s12| |s13|^2 |s33 - s22| / (pi (n+1/2))^3",))


def _m3(c, z):
    a = c.a
    S = c.S
    t1, t2, t3 = c.T[:, 0]
    s12, s13, s23 = S[0, 1], S[0, 2], S[1, 2]
    s11, s22 = S[0, 0].real, S[1, 1].real
    diag_S = z(s12, "s12") and z(s13, "s13") and z(s23, "s23")
    if z(abs(t1) - abs(t2), "|t1| - |t2|") and z(abs(t3) - 1.0, "|t3| - 1"):
        if bool(np.all(np.abs(S) <= ZERO_TOL)):
            return [Regime("none", "full-line", "none", "positive half-line in the spectrum (S = 0)",
                           {"width": 0.0}, "gap", 0.0, 0, 0.0)]
        return [Regime("none", "unclassified", "unknown",
                       "unclassified: |t1| = |t2|, |t3| = 1 with S != 0", {"width": 0.0})]
    T0 = bool(np.all(np.abs(c.T) <= ZERO_TOL))
    if z(t1 * t2, "t1 t2") and z(t3, "t3") and diag_S:
        return [_flat("pure point: edges or edge pairs decouple", "shifted-flat")]

    regimes = []
    # even bands
    lo, hi = m3_even_interval(c)
    if hi - lo > POINT_TOL * max(1.0, abs(lo), abs(hi)):
        regimes.append(Regime("even", "O(1)", "O(n)", "constant-width bands around (n pi / a)^2",
                              {"d_min": lo, "d_max": hi, "band_width": 2.0 * (hi - lo) / a},
                              "band", 2.0 * (hi - lo) / a, 0, 0.0))
    elif T0 and z(s12, "s12"):
        if z(s13 * s23, "s13 s23"):
            regimes.append(_flat("even points: condition independent of quasimomentum (s13 s23 = 0)", "even"))
        elif z(s11 + s22, "s11 + s22"):
            regimes.append(Regime("even", "collapsed-point", "O(n)",
                                  "no true band around (n pi / a)^2 (s11 + s22 = 0)", {"width": 0.0},
                                  "band", 0.0, 0, 0.0))
        else:
            w = 8.0 * a * abs(s11 + s22) * abs(s13 * s23) / math.pi ** 2
            regimes.append(Regime("even", "O(n^-2)", "O(n)", "even bands shrinking as n^-2 (T = 0, s12 = 0)",
                                  {"width_coefficient": w, "d": float(s11 + s22)}, "band", w, -2, 0.0))
    else:
        regimes.append(Regime("even", "unclassified", "unknown",
                              "unclassified: even offset set is a point", {"d": lo}))

    # odd bands
    amp = abs(t1 * t2) + abs(t3)
    nt = 1.0 + abs(t1) ** 2 + abs(t2) ** 2 + abs(t3) ** 2
    if not z(amp, "|t1 t2| + |t3|"):
        delta = math.asin(min(1.0, 2.0 * amp / nt))
        regimes.append(Regime("odd", "O(n)", "O(n)", "linearly growing bands around ((n + 1/2) pi / a)^2",
                              {"Delta": delta}, "band", 4.0 * math.pi * delta / a ** 2, 1, 0.5))
    elif not T0:
        tt, sp = (t1, s23) if abs(t1) >= abs(t2) else (t2, s13)
        if z(sp, "partner coupling"):
            regimes.append(Regime("odd", "unclassified", "O(n)",
                                  "unclassified: constant-width odd band collapses (s23 t1 = 0, t != 0)",
                                  {"width": 0.0}))
        else:
            w = 8.0 * abs(tt * sp) / (a * (1.0 + abs(tt) ** 2))
            regimes.append(Regime("odd", "O(1)", "O(n)",
                                  "constant-width bands around ((n + 1/2) pi / a)^2 (t1 t2 = t3 = 0)",
                                  {"band_width": w}, "band", w, 0, 0.5))
    else:
        regimes.append(_m3_odd_T0(c, z))
    return regimes


def _m4(c, z):
    a = c.a
    S = c.S
    off = {(i, j): S[i - 1, j - 1] for i in range(1, 5) for j in range(i + 1, 5)}
    nonzero = [ij for ij, v in off.items() if not z(v, f"s{ij[0]}{ij[1]}")]
    if not nonzero:
        dh, dv = robin_offsets_m4(c)
        return [_flat("decoupled edges: Robin eigenvalues on each edge", "shifted-flat",
                      {"d_horizontal": dh, "d_vertical": dv, "energy_offset_horizontal": 2.0 * dh / a,
                       "energy_offset_vertical": 2.0 * dv / a, "width": 0.0})]
    if len(nonzero) == 1 and nonzero[0] not in ((1, 2), (3, 4)):
        (d1, _), (d2, _) = d_intervals_m4(S)
        return [_flat("pure point: L-shaped edge pairs decouple", "shifted-flat",
                      {"d1": d1, "d2": d2, "width": 0.0})]
    (d1lo, d1hi), (d2lo, d2hi) = d_intervals_m4(S)
    tag = classify_coupling(c).tag
    named = (f"named coupling {tag}",) if tag in ("DeltaPrimeS", "DeltaPrime") else ()
    shared = {"d1_down": d1lo, "d1_up": d1hi, "d2_down": d2lo, "d2_up": d2hi}

    def family(name, lo, hi, notes):
        consts = {**shared, "d_min": lo, "d_max": hi, "band_width": 2.0 * (hi - lo) / a}
        if hi - lo <= 1e-9 * max(1.0, abs(lo)):
            return Regime("even", "collapsed-point", "O(n)",
                          f"{name}: flat band at (n pi / a)^2 + 2 d / a", consts, "band", 0.0, 0, 0.0, notes)
        return Regime("even", "O(1)", "O(n)", f"{name}: constant-width bands around (n pi / a)^2",
                      consts, "band", 2.0 * (hi - lo) / a, 0, 0.0, notes)

    if d2hi < d1lo - 1e-9:
        notes = ("offset sets disjoint: pattern G b g b G (G linear gaps, b bands and g gaps of constant width)",
                 *named)
        return [family("second offset set", d2lo, d2hi, notes), family("first offset set", d1lo, d1hi, notes)]
    if abs(d2hi - d1lo) <= 1e-9:
        note = "offset sets touch: whether a gap separates the two bands needs a finer analysis"
    else:
        note = "offset sets overlap: the two bands merge"
    return [family("union of both offset sets", min(d1lo, d2lo), max(d1hi, d2hi), (note, *named))]


_TREE = {0: _m0, 1: _m1, 2: _m2, 3: _m3, 4: _m4}


def classify(c: STCoupling) -> AsymptoticReport:
    """Asymptotic regimes of the spectrum of ``c``."""
    z = _Zero()
    regimes = _TREE[c.m](c, z)
    if not regimes:
        raise AsymptoticsError("classification produced no regime")
    warnings = tuple(dict.fromkeys(z.warnings))
    return AsymptoticReport(c.m, c.a, tuple(regimes), classify_coupling(c).tag, warnings)


def predicted_band_width(report: AsymptoticReport, n: int) -> list:
    """Leading-order width of every regime at index ``n``.

    Flat regimes give 0, full-line regimes ``inf``; a regime without a width
    constant raises :class:`AsymptoticsError`.
    """
    if n < 1:
        raise AsymptoticsError("band index must be at least 1")
    return [r.width(n) for r in report.regimes]


# --- numeric comparison -----------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    regime: Regime
    rows: tuple
    fitted_exponent: float | None
    predicted_exponent: int | None
    missing: tuple = ()

    def as_dict(self) -> dict:
        return {
            "regime": self.regime.as_dict(), "rows": [dict(r) for r in self.rows],
            "fitted_exponent": self.fitted_exponent, "predicted_exponent": self.predicted_exponent,
            "missing": list(self.missing),
        }


def _pick_regime(report, regime):
    if isinstance(regime, int):
        return report.regimes[regime]
    if isinstance(regime, Regime):
        return regime
    for r in report.regimes:
        if r.coefficient is not None:
            return r
    return report.regimes[0]


def _nearest(intervals, e0, window):
    best, dist = None, window
    for lo, hi in intervals:
        d = 0.0 if lo <= e0 <= hi else min(abs(lo - e0), abs(hi - e0))
        if d < dist:
            best, dist = (lo, hi), d
    return best


def _centre_offset(r: Regime, a: float) -> float:
    """Energy offset of the band centre from the anchor, where known."""
    k = r.constants
    if "centre_offset" in k:
        return k["centre_offset"]
    if "d_min" in k and "d_max" in k:
        return (k["d_min"] + k["d_max"]) / a
    if r.measure == "gap" and "gap_offset_lo" in k:
        return 0.5 * (k["gap_offset_lo"] + k["gap_offset_hi"])
    return 0.0


def _flat_tol_for(r: Regime, n: int, a: float, default: float = 1e-8) -> float:
    """Flatness threshold fine enough to keep the predicted bands at index ``n``.

    Shrinking bands get narrow relative to their energy (about 1e-11 for an
    n^-3 law at n = 40), below the default threshold of the scan.
    """
    if r.measure != "band" or r.coefficient is None or not r.coefficient > 0 or r.exponent is None:
        return default
    e = r.anchor_k(n, a) ** 2
    rel = r.width(n) / e
    return float(min(default, max(1e-13, 1e-2 * rel)))


def compare_asymptotics(c: STCoupling, cfg=None, n_range=(20, 30), regime=None) -> Comparison:
    """Numeric widths against the predicted law over ``n_range`` (inclusive).

    The scan covers just the window unless ``cfg`` is given.  Bands (or gaps)
    are matched to the anchor energy of each index; the fitted exponent is the
    least-squares slope of ``log width`` against ``log(n + shift)``.
    """
    from .spectrum import ScanConfig, scan_bands

    report = classify(c)
    r = _pick_regime(report, regime)
    a = c.a
    n0, n1 = int(n_range[0]), int(n_range[1])
    if n0 < 1 or n1 < n0:
        raise AsymptoticsError("n_range must satisfy 1 <= n0 <= n1")
    if cfg is None:
        cfg = ScanConfig(k_min=max(0.05 / a, (n0 - 1.0) * np.pi / a), k_max=(n1 + 1.5) * np.pi / a,
                         flat_tol=_flat_tol_for(r, n1, a))
    rep = scan_bands(c, cfg, include_negative=False)
    e_max = rep.e_max
    k_lo = cfg.k_min
    regular = [b for b in rep.bands if b.kind != "flat"]
    if r.measure == "gap":
        # gaps of the band union without isolated flat points; the pieces
        # touching the ends of the window are artificial
        from .spectrum import _gaps
        intervals = [g for g in _gaps(regular, e_max) if g[0] > k_lo ** 2 + 1e-12 and g[1] < e_max]
    elif r.band_law in ("flat", "collapsed-point"):
        intervals = [(b.e_lo, b.e_hi) for b in rep.bands]
    else:
        intervals = [(b.e_lo, b.e_hi) for b in regular if b.width > 0.0]
    offset = _centre_offset(r, a)
    rows, missing = [], []
    for n in range(n0, n1 + 1):
        k0 = r.anchor_k(n, a)
        e0 = k0 * k0 + offset
        window = 0.5 * np.pi * k0 / a  # a quarter of the anchor spacing in energy
        hit = _nearest(intervals, e0, window)
        pred = r.width(n) if (r.coefficient is not None or r.band_law in ("flat", "full-line")) else None
        if hit is None:
            missing.append(n)
            num = 0.0 if r.measure == "gap" else None
        else:
            num = hit[1] - hit[0]
        ratio = (num / pred) if (num is not None and pred not in (None, 0.0) and math.isfinite(pred)) else None
        rows.append({"n": n, "numeric": num, "predicted": pred, "ratio": ratio})
    use = [(row["n"] + r.shift, row["numeric"]) for row in rows if row["numeric"] and row["numeric"] > 0]
    fitted = None
    if len(use) >= 2:
        x = np.log([u[0] for u in use])
        y = np.log([u[1] for u in use])
        fitted = float(np.polyfit(x, y, 1)[0])
    return Comparison(r, tuple(rows), fitted, r.exponent, tuple(missing))
