"""Band structure along the energy axis.

For each momentum ``k`` the real dispersion function ``f(k, theta)`` is
reduced to its extrema over the quasimomentum torus, ``g(k) = min f`` and
``h(k) = max f``; ``k**2`` is in the spectrum iff ``g <= 0 <= h``.  Band edges
are the zeros of ``g`` and ``h`` between grid points.  Flat bands are
momenta where the determinant vanishes for every quasimomentum.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize.elementwise import find_minimum, find_root

from .coupling import STCoupling, st_to_ab
from .fiber import DFT_ANGLES, REALNESS_TOL, as_ab, dispersion_phase, fiber_matrices
from .trigform import torus_minmax

__all__ = [
    "Band",
    "FlatRoot",
    "ScanConfig",
    "ScanError",
    "SpectrumReport",
    "flat_band_eigenvalues",
    "flat_indicator",
    "negative_spectrum",
    "scan_bands",
    "thread_count",
    "torus_extrema",
    "zero_limit_member",
]

EPS = np.finfo(float).eps
NOISE_FACTOR = 64.0
ZERO_LIMIT_TOL = 1e-6
MAX_NEGATIVE_BANDS = 4
LOG_CAP = 50.0
ABS_MODE_TOL = 1e-7


class ScanError(ValueError):
    """Invalid scan configuration."""


def thread_count() -> int:
    """Worker threads allowed by ``QLATTICE_THREADS`` (default 1)."""
    raw = os.environ.get("QLATTICE_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


@dataclass(frozen=True)
class ScanConfig:
    """Parameters of an energy scan.

    ``k_max``, ``k_steps`` and ``negative_kappa_max`` default to values derived
    from the edge length when left as ``None`` (see :meth:`resolved`).
    """

    k_min: float = 0.05
    k_max: float | None = None
    k_steps: int | None = None
    theta_grid: int = 32
    edge_tol: float = 1e-12
    flat_tol: float = 1e-8
    negative_kappa_max: float | None = None
    adaptive_theta: bool = True
    max_theta_grid: int = 256
    negative_steps: int = 600
    mode: str = "auto"  # auto | real-part | abs-squared

    def __post_init__(self):
        if not np.isfinite(self.k_min) or self.k_min < 0:
            raise ScanError("k_min must be >= 0")
        if self.k_max is not None and not self.k_max > self.k_min:
            raise ScanError("k_max must exceed k_min")
        if self.k_steps is not None and self.k_steps < 2:
            raise ScanError("k_steps must be >= 2")
        if self.theta_grid < 8:
            raise ScanError("theta_grid must be >= 8")
        if not self.edge_tol > 0:
            raise ScanError("edge_tol must be > 0")
        if not self.flat_tol > 0:
            raise ScanError("flat_tol must be > 0")
        if self.negative_kappa_max is not None and not self.negative_kappa_max > 0:
            raise ScanError("negative_kappa_max must be > 0")
        if self.mode not in ("auto", "real-part", "abs-squared"):
            raise ScanError(f"unknown mode {self.mode!r}")

    def resolved(self, c: STCoupling) -> "ScanConfig":
        a = c.a
        k_max = 40.0 * np.pi / a if self.k_max is None else float(self.k_max)
        if k_max <= self.k_min:
            raise ScanError("k_max must exceed k_min")
        steps = self.k_steps
        if steps is None:
            steps = max(64, int(np.ceil(64 * (k_max - self.k_min) * a / np.pi)) + 1)
        kap = self.negative_kappa_max
        if kap is None:
            norm_s = float(np.linalg.norm(c.S, 2)) if c.m else 0.0
            norm_t = float(np.linalg.norm(c.T, 2)) if c.T.size else 0.0
            kap = max(10.0 / a, 4.0 * (norm_s + 1.0) * (1.0 + norm_t ** 2))
        kap = min(kap, 150.0 / a)
        return replace(self, k_max=k_max, k_steps=int(steps), negative_kappa_max=float(kap))


@dataclass(frozen=True)
class Band:
    """Spectral interval in energy, with its momentum edges."""

    e_lo: float
    e_hi: float
    kind: str = "unclassified"  # even | odd | flat | negative | unclassified
    index_hint: int | None = None
    k_lo: float = float("nan")
    k_hi: float = float("nan")

    def __post_init__(self):
        if self.e_lo > self.e_hi:
            raise ValueError("e_lo must not exceed e_hi")

    @property
    def width(self) -> float:
        return self.e_hi - self.e_lo

    def as_dict(self) -> dict:
        return {"e_lo": self.e_lo, "e_hi": self.e_hi, "kind": self.kind,
                "index_hint": self.index_hint, "k_lo": self.k_lo, "k_hi": self.k_hi}


@dataclass(frozen=True)
class FlatRoot:
    """Momentum at which the determinant vanishes for all quasimomenta."""

    k: float
    indicator: float
    placement: str  # isolated | embedded | edge

    @property
    def energy(self) -> float:
        return self.k * self.k


@dataclass(frozen=True)
class SpectrumReport:
    bands: tuple
    gaps: tuple
    realness_mode: str
    diagnostics: dict = field(default_factory=dict)
    raw_bands: tuple = ()
    flat_roots: tuple = ()
    negative_bands: tuple = ()
    e_max: float = float("nan")

    def as_dict(self) -> dict:
        return {
            "bands": [b.as_dict() for b in self.bands],
            "gaps": [list(g) for g in self.gaps],
            "realness_mode": self.realness_mode,
            "negative_bands": [b.as_dict() for b in self.negative_bands],
            "flat_roots": [{"k": r.k, "energy": r.energy, "placement": r.placement,
                            "indicator": r.indicator} for r in self.flat_roots],
            "e_max": self.e_max,
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------- line engine


class _Line:
    """Dispersion extrema along ``k = unit * u`` for real ``u > 0``."""

    def __init__(self, c, a, unit, grid_n, mode="real-part", phase=0.0):
        self.ab, self.a = as_ab(c, a)
        self.unit = complex(unit)
        self.grid_n = grid_n
        self.mode = mode
        self.phase = phase
        self.evals = 0

    def _det(self, u, t1, t2):
        k = self.unit * np.asarray(u, dtype=float)
        M, N = fiber_matrices(k, t1, t2, self.a)
        mat = self.ab.A @ M + 1j * k[..., None, None] * (self.ab.B @ N)
        return mat, np.linalg.det(mat)

    def coeffs(self, u):
        """Real/imaginary Fourier parts, realness defect and noise floor."""
        u = np.asarray(u, dtype=float)
        t = DFT_ANGLES
        _, d = self._det(u[..., None, None], t[:, None], t[None, :])
        self.evals += u.size
        d = d * np.exp(-1j * self.phase)
        c = np.fft.fft2(d, axes=(-2, -1)) / 9.0
        order = [2, 0, 1]
        C = c[..., order, :][..., :, order]
        flip = np.conj(C[..., ::-1, ::-1])
        Fr = 0.5 * (C + flip)
        Fi = -0.5j * (C - flip)
        size_r = np.sum(np.abs(Fr), axis=(-2, -1))
        defect = np.sum(np.abs(Fi), axis=(-2, -1)) / (1.0 + size_r)
        return Fr, defect, self.noise(u)

    def noise(self, u):
        """Rounding floor: eps times a theta-free Hadamard-type bound of the determinant."""
        u = np.asarray(u, dtype=float)
        na = np.linalg.norm(self.ab.A, axis=-1)
        nb = np.linalg.norm(self.ab.B, axis=-1)
        grow = 2.0 * np.exp(0.5 * self.a * abs(self.unit.imag) * u)
        rows = np.prod(na + np.multiply.outer(u, nb), axis=-1) * grow ** 4
        return NOISE_FACTOR * EPS * rows

    def gh(self, u):
        """``g = min f`` and ``h = max f`` over the torus, with noise floor."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.mode == "abs-squared":
            return self._gh_abs(u)
        Fr, _, noise = self.coeffs(u)
        ext = torus_minmax(Fr, self.grid_n)
        return ext.fmin, ext.fmax, noise

    def _gh_abs(self, u):
        """Membership test that does not need a real determinant.

        For fixed ``theta2`` the determinant is ``b_-1/z + b_0 + b_1 z`` in
        ``z = exp(i theta1)``, so ``k`` is in the spectrum iff a root has
        ``|z| = 1`` for some ``theta2``.  ``g`` is the smallest ``|log|z||``
        over both roots and all ``theta2``, minus ``ABS_MODE_TOL``; ``h`` is a
        constant ``1``.  Outside a band ``|log|z||`` grows linearly for a
        complex determinant and like a square root for a real one, so edges
        are good to about ``ABS_MODE_TOL`` and its square respectively.
        """
        u = np.asarray(u, dtype=float)
        t = DFT_ANGLES
        _, d = self._det(u[..., None, None], t[:, None], t[None, :])
        self.evals += u.size
        c = np.fft.fft2(d, axes=(-2, -1)) / 9.0
        order = [2, 0, 1]
        C = c[..., order, :][..., :, order]
        C = C / np.maximum(np.max(np.abs(C), axis=(-2, -1), keepdims=True), np.finfo(float).tiny)

        def dist(t2):
            e = np.exp(1j * np.multiply.outer(t2, np.arange(-1, 2)))  # (U, n, 3)
            bm, b0, b1 = (np.einsum("ul,unl->un", C[:, j, :], e) for j in range(3))
            disc = np.sqrt(b0 * b0 - 4.0 * b1 * bm)
            disc = np.where((np.conj(b0) * disc).real < 0, -disc, disc)
            q = -0.5 * (b0 + disc)
            with np.errstate(all="ignore"):
                l_a = np.abs(np.log(np.abs(q)) - np.log(np.abs(b1)))
                l_b = np.abs(np.log(np.abs(bm)) - np.log(np.abs(q)))
            l_a = np.nan_to_num(l_a, nan=LOG_CAP, posinf=LOG_CAP)
            l_b = np.nan_to_num(l_b, nan=LOG_CAP, posinf=LOG_CAP)
            out = np.minimum(np.minimum(l_a, l_b), LOG_CAP)
            # all coefficients zero: every theta1 is a zero
            return np.where(np.abs(q) == 0.0, 0.0, out)

        n = self.grid_n
        grid = -np.pi + 2.0 * np.pi * (np.arange(n) + 1) / n
        vals = dist(np.broadcast_to(grid, (u.size, n)))
        i = np.argmin(vals, axis=1)
        best = vals[np.arange(u.size), i]
        step = 2.0 * np.pi / n
        lo, hi = grid[i] - step, grid[i] + step
        # golden-section polish of the bracketed minimum
        r = 0.5 * (np.sqrt(5.0) - 1.0)
        x1, x2 = hi - r * (hi - lo), lo + r * (hi - lo)
        f1, f2 = dist(x1[:, None])[:, 0], dist(x2[:, None])[:, 0]
        for _ in range(60):
            left = f1 < f2
            hi = np.where(left, x2, hi)
            lo = np.where(left, lo, x1)
            x2n = np.where(left, x1, lo + r * (hi - lo))
            x1n = np.where(left, hi - r * (hi - lo), x2)
            f_new = dist(np.where(left, x1n, x2n)[:, None])[:, 0]
            f1, f2 = np.where(left, f_new, f2), np.where(left, f1, f_new)
            x1, x2 = x1n, x2n
        best = np.minimum(best, np.minimum(f1, f2))
        g = best - ABS_MODE_TOL
        return g, np.ones_like(g), np.zeros_like(g)

    def g(self, u):
        return self.gh(u)[0]

    def h(self, u):
        return self.gh(u)[1]


def _batch_roots(fun, lo, hi, xtol):
    """Bracketed roots of a vectorised function on each ``[lo_i, hi_i]``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.size == 0:
        return lo.copy()
    flo, fhi = fun(lo), fun(hi)
    out = np.where(np.abs(flo) <= np.abs(fhi), lo, hi)
    ok = np.sign(flo) * np.sign(fhi) < 0
    if np.any(ok):
        res = find_root(fun, (lo[ok], hi[ok]), tolerances=dict(xatol=xtol, xrtol=4 * EPS))
        out[ok] = res.x
    return out


def _batch_extremum(fun, lo, mid, hi, sign, xtol):
    """Polish a bracketed minimum (sign=-1) or maximum (sign=+1) of ``fun``."""
    if lo.size == 0:
        return lo.copy(), lo.copy()

    def obj(x):
        v = fun(x)
        return -v if sign > 0 else v

    fl, fm, fh = obj(lo), obj(mid), obj(hi)
    valid = (fm <= fl) & (fm <= fh)
    x = mid.copy()
    if np.any(valid):
        res = find_minimum(obj, (lo[valid], mid[valid], hi[valid]),
                           tolerances=dict(xatol=xtol, xrtol=4 * EPS))
        x[valid] = res.x
    v = fun(x)
    return x, v


def _hidden_extrema(vals, noise, kind):
    """Interior grid extrema that might cross zero between samples.

    ``kind='max'`` looks for non-positive local maxima, ``'min'`` for
    non-negative local minima.
    """
    v = vals
    if v.size < 3:
        return np.zeros(0, dtype=int)
    left, mid, right = v[:-2], v[1:-1], v[2:]
    if kind == "max":
        ext = (mid >= left) & (mid >= right) & (mid <= 0)
    else:
        ext = (mid <= left) & (mid <= right) & (mid >= 0)
    reach = 2.0 * (np.abs(mid - left) + np.abs(mid - right)) + noise[1:-1]
    ext &= np.abs(mid) <= reach
    return np.flatnonzero(ext) + 1


def _member_intervals(line, u, g, h, noise, xtol, threads):
    """Maximal parameter intervals on which ``g <= 0 <= h``.

    Returns the merged intervals and the per-chunk intervals before merging.
    """
    n = u.size
    # values inside the rounding floor count as zero
    mem = (g <= noise) & (h >= -noise)
    # zero crossings visible on the grid
    gpos = g > noise
    hpos = h >= -noise
    ig = np.flatnonzero(gpos[:-1] != gpos[1:])
    ih = np.flatnonzero(hpos[:-1] != hpos[1:])
    roots = [(i, r) for i, r in zip(ig, _batch_roots(line.g, u[ig], u[ig + 1], xtol))]
    roots += [(i, r) for i, r in zip(ih, _batch_roots(line.h, u[ih], u[ih + 1], xtol))]

    # crossings hidden between samples: local extrema of g and h close to zero
    for fun, vals, kind, sign in ((line.g, g, "max", +1), (line.g, g, "min", -1),
                                  (line.h, h, "max", +1), (line.h, h, "min", -1)):
        idx = _hidden_extrema(vals, noise, kind)
        if idx.size == 0:
            continue
        x, v = _batch_extremum(fun, u[idx - 1], u[idx], u[idx + 1], sign, xtol)
        nz = line.gh(x)[2]
        cross = v > nz if sign > 0 else v < -nz
        if not np.any(cross):
            continue
        idx, x = idx[cross], x[cross]
        lo_r = _batch_roots(fun, u[idx - 1], x, xtol)
        hi_r = _batch_roots(fun, x, u[idx + 1], xtol)
        for i, xl, xm, xh in zip(idx, lo_r, x, hi_r):
            roots.append((i - 1 if xl < u[i] else i, xl))
            roots.append((i - 1 if xh < u[i] else i, xh))

    # sub-segments between grid points and roots; probe membership at midpoints
    by_cell: dict[int, list] = {}
    for i, r in roots:
        by_cell.setdefault(int(i), []).append(float(r))
    probes, where = [], []
    for i, rs in sorted(by_cell.items()):
        pts = sorted(set([u[i], u[i + 1]] + [min(max(r, u[i]), u[i + 1]) for r in rs]))
        by_cell[i] = pts
        for a_, b_ in zip(pts[:-1], pts[1:]):
            probes.append(0.5 * (a_ + b_))
            where.append((i, a_, b_))
    seg_mem = []
    if probes:
        pg, ph, pn = line.gh(np.array(probes))
        seg_mem = list((pg <= pn) & (ph >= -pn))

    pieces = []  # (lo, hi) member pieces in increasing order
    cells_with_events = {w[0] for w in where}
    j = 0
    for i in range(n - 1):
        if i in cells_with_events:
            while j < len(where) and where[j][0] == i:
                if seg_mem[j] and where[j][2] > where[j][1]:
                    pieces.append((where[j][1], where[j][2]))
                j += 1
        elif mem[i] and mem[i + 1]:
            pieces.append((u[i], u[i + 1]))
    # isolated member grid points (touching zeros) are left to flat detection

    chunks = max(1, threads)
    bounds = np.linspace(u[0], u[-1], chunks + 1)
    raw = []
    for c0, c1 in zip(bounds[:-1], bounds[1:]):
        raw += _merge([(max(p, c0), min(q, c1)) for p, q in pieces if q > c0 and p < c1])
    return _merge(pieces), raw


def _merge(pieces, gap=0.0):
    out = []
    for lo, hi in sorted(pieces):
        if out and lo <= out[-1][1] + gap:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _chunked(fun, u, threads):
    """Evaluate ``fun`` on ordered chunks of ``u``, possibly in parallel."""
    if threads <= 1 or u.size < 256:
        return fun(u)
    parts = np.array_split(u, threads)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        res = list(ex.map(fun, parts))
    return tuple(np.concatenate([r[i] for r in res]) for i in range(len(res[0])))


# ---------------------------------------------------------------- public API


def torus_extrema(c, k: float, a: float | None = None, theta_grid: int = 32):
    """Min and max of the real dispersion function over the torus at ``k``.

    Returns ``(f_min, f_max, argmin, argmax)`` with the arguments as
    ``(theta1, theta2)`` pairs.
    """
    ab, a = as_ab(c, a)
    phase = dispersion_phase(c, a)
    line = _Line(ab, a, 1.0 if np.isreal(k) else 1j, theta_grid, phase=phase)
    u = np.atleast_1d(abs(complex(k)))
    Fr, _, _ = line.coeffs(u)
    ext = torus_minmax(Fr, theta_grid)
    return float(ext.fmin[0]), float(ext.fmax[0]), tuple(ext.argmin[0]), tuple(ext.argmax[0])


def flat_indicator(c, k, a: float | None = None):
    """Relative smallest singular value, maximised over the 3x3 DFT grid.

    Vanishes exactly when the determinant is zero for every quasimomentum.
    Accepts real ``k`` or, with complex input, points on the imaginary axis.
    """
    ab, a = as_ab(c, a)
    k = np.asarray(k, dtype=complex)
    t = DFT_ANGLES
    M, N = fiber_matrices(k[..., None, None], t[:, None], t[None, :], a)
    mat = ab.A @ M + 1j * k[..., None, None, None, None] * (ab.B @ N)
    # row scales from (A_i, |k| B_i): fixed in theta and never zero, so a row
    # that vanishes at some k still shows up as a small singular value
    kk = np.abs(k)[..., None, None, None]
    na = np.linalg.norm(ab.A, axis=-1) ** 2
    nb = np.linalg.norm(ab.B, axis=-1) ** 2
    grow = np.exp(0.5 * a * np.abs(k.imag))[..., None, None, None]
    rs = np.sqrt(na + kk ** 2 * nb) * grow
    mat = mat / rs[..., None]
    sv = np.linalg.svd(mat, compute_uv=False)
    rel = sv[..., -1] / sv[..., 0]
    return np.max(rel, axis=(-2, -1))


def _flat_roots(c, a, u, unit, flat_tol, xtol):
    """Flat-band momenta (parameter values) inside the grid ``u``."""
    phi = flat_indicator(c, unit * u, a)
    if u.size < 3:
        return []
    mid = phi[1:-1]
    loc = np.flatnonzero((mid <= phi[:-2]) & (mid <= phi[2:]) & (mid < 0.25)) + 1
    if loc.size == 0:
        return []
    fun = lambda x: flat_indicator(c, unit * x, a)  # noqa: E731
    x, v = _batch_extremum(fun, u[loc - 1], u[loc], u[loc + 1], -1, xtol)
    keep = v < flat_tol
    return sorted(zip(x[keep].tolist(), v[keep].tolist()))


def _detect_mode(line, u, requested):
    if requested != "auto":
        return requested, 0.0
    sample = u[:: max(1, u.size // 64)]
    _, defect, _ = line.coeffs(sample)
    worst = float(np.max(defect))
    return ("real-part" if worst <= REALNESS_TOL else "abs-squared"), worst


def _classify_band(k_lo, k_hi, a):
    """Kind and index from where the band sits relative to ``n pi / a``."""
    if k_hi - k_lo > 0.5 * np.pi / a:
        return "unclassified", None
    mid = 0.5 * (k_lo + k_hi) * a / np.pi
    n_even = int(np.round(mid))
    n_odd = int(np.floor(mid))
    if abs(mid - n_even) <= abs(mid - (n_odd + 0.5)):
        return "even", n_even
    return "odd", n_odd


def zero_limit_member(c, a: float | None = None, theta_grid: int = 32,
                      eps: float | None = None, tol: float = ZERO_LIMIT_TOL):
    """One-sided membership of ``E = 0`` from above and below.

    Evaluates the torus extrema at ``k = eps`` and ``k = i eps`` and accepts a
    side when ``g <= tol * scale`` and ``h >= -tol * scale``.
    """
    ab, a = as_ab(c, a)
    eps = 1e-3 / a if eps is None else eps
    phase = dispersion_phase(c, a)
    out = {}
    for side, unit in (("positive", 1.0), ("negative", 1j)):
        line = _Line(ab, a, unit, theta_grid, phase=phase)
        Fr, _, noise = line.coeffs(np.array([eps]))
        ext = torus_minmax(Fr, theta_grid)
        scale = float(np.sum(np.abs(Fr))) + float(noise[0])
        out[side] = bool(ext.fmin[0] <= tol * scale and ext.fmax[0] >= -tol * scale)
    return out["positive"], out["negative"]


def _scan_positive(c, cfg, grid_n, threads, mode, phase):
    ab, a = as_ab(c)
    u = np.linspace(cfg.k_min, cfg.k_max, cfg.k_steps)
    line = _Line(ab, a, 1.0, grid_n, mode=mode, phase=phase)
    g, h, noise = _chunked(line.gh, u, threads)
    merged, raw = _member_intervals(line, u, g, h, noise, cfg.edge_tol, threads)
    return merged, raw, (u, g, h, noise), line.evals


def _bands_from_pieces(pieces, a, kind=None, energy=lambda k: k * k):
    bands = []
    for lo, hi in pieces:
        e1, e2 = energy(lo), energy(hi)
        e_lo, e_hi = min(e1, e2), max(e1, e2)
        if kind is None:
            kd, n = _classify_band(lo, hi, a)
        else:
            kd, n = kind, None
        bands.append(Band(float(e_lo), float(e_hi), kd, n, float(min(lo, hi)), float(max(lo, hi))))
    return bands


def _same_pieces(p, q, tol):
    if len(p) != len(q):
        return False
    return all(abs(a0 - b0) <= tol * max(1.0, abs(a0)) and abs(a1 - b1) <= tol * max(1.0, abs(a1))
               for (a0, a1), (b0, b1) in zip(p, q))


def _settle_on_flat(pieces, froots, tol_k):
    """Reconcile membership pieces with the flat roots found separately.

    A zero-width piece sitting on a flat root is that flat band and is
    dropped.  An edge on a flat root is a double zero of the extremum, so
    bisection only resolves it to about ``sqrt(eps)``; it is moved onto the
    (sharper) flat root.
    """
    def near(k0):
        return max(tol_k, 1e-7 * k0)

    def on_flat(lo, hi):
        return (hi - lo <= max(tol_k, NOISE_FACTOR * EPS * hi)
                and any(abs(k0 - 0.5 * (lo + hi)) <= near(k0) for k0, _ in froots))

    def snap(x):
        for k0, _ in froots:
            if abs(x - k0) <= near(k0):
                return float(k0)
        return x

    return [(snap(lo), snap(hi)) for lo, hi in pieces if not on_flat(lo, hi)]


def scan_bands(c: STCoupling, cfg: ScanConfig | None = None, include_negative: bool = True,
               keep_traces: bool = False) -> SpectrumReport:
    """Bands, gaps and flat bands of ``c`` over ``[k_min, k_max]``.

    Energies are ``k**2``.  The quasimomentum grid is doubled until two
    consecutive band sets agree within ``edge_tol``.
    """
    if not isinstance(c, STCoupling):
        raise ScanError("scan_bands expects an STCoupling")
    cfg = (cfg or ScanConfig()).resolved(c)
    a = c.a
    threads = thread_count()
    ab = st_to_ab(c)
    phase = dispersion_phase(c)
    probe = _Line(ab, a, 1.0, cfg.theta_grid, phase=phase)
    u_probe = np.linspace(cfg.k_min, cfg.k_max, cfg.k_steps)
    mode, worst_defect = _detect_mode(probe, u_probe, cfg.mode)

    diagnostics = {"realness_defect_max": worst_defect, "threads": threads}
    grid_n = cfg.theta_grid
    merged, raw, traces, evals = _scan_positive(c, cfg, grid_n, threads, mode, phase)
    refinements = 0
    if cfg.adaptive_theta and mode == "real-part":
        while 2 * grid_n <= cfg.max_theta_grid:
            m2, r2, t2, e2 = _scan_positive(c, cfg, 2 * grid_n, threads, mode, phase)
            evals += e2
            refinements += 1
            stable = _same_pieces(merged, m2, cfg.edge_tol)
            grid_n *= 2
            merged, raw, traces = m2, r2, t2
            if stable:
                break
    diagnostics.update(theta_grid=grid_n, theta_refinements=refinements, k_evaluations=int(evals),
                       k_steps=cfg.k_steps)

    # E = 0 by one-sided limits
    pos0, neg0 = zero_limit_member(c, theta_grid=grid_n)
    diagnostics.update(zero_limit_positive=pos0, zero_limit_negative=neg0)
    if pos0 and merged and merged[0][0] <= cfg.k_min * (1 + 1e-12):
        lead = np.linspace(1e-3 / a, cfg.k_min, 17)
        lg, lh, _ = _Line(ab, a, 1.0, grid_n, phase=phase).gh(lead)
        if np.all((lg <= 0) & (lh >= 0)):
            merged[0] = (0.0, merged[0][1])
            if raw:
                raw[0] = (0.0, raw[0][1])

    # flat bands
    u = traces[0]
    froots = _flat_roots(c, a, u, 1.0, cfg.flat_tol, min(cfg.edge_tol, 1e-13))
    tol_k = 10.0 * cfg.edge_tol
    merged = _settle_on_flat(merged, froots, tol_k)
    raw = _settle_on_flat(raw, froots, tol_k)
    regular = _bands_from_pieces(merged, a)
    raw_bands = _bands_from_pieces(raw, a)

    flat_roots = []
    for k0, ind in froots:
        place = "isolated"
        near = max(tol_k, 1e-7 * k0)
        for lo, hi in merged:
            if abs(k0 - lo) <= near or abs(k0 - hi) <= near:
                place = "edge"
                break
            if lo < k0 < hi:
                place = "embedded"
                break
        flat_roots.append(FlatRoot(float(k0), float(ind), place))
    flat_bands = [Band(r.energy, r.energy, "flat", int(np.round(r.k * a / np.pi)), r.k, r.k)
                  for r in flat_roots]
    isolated = [b for b, r in zip(flat_bands, flat_roots) if r.placement == "isolated"]
    bands = sorted(regular + isolated, key=lambda b: (b.e_lo, b.e_hi))
    raw_all = tuple(sorted(raw_bands + flat_bands, key=lambda b: (b.e_lo, b.e_hi)))

    e_max = cfg.k_max ** 2
    negative = ()
    if include_negative:
        negative = tuple(negative_spectrum(c, cfg, _diagnostics=diagnostics, _zero=neg0))
    gaps = _gaps(bands, e_max)
    diagnostics["flat_count"] = len(flat_roots)
    diagnostics["realness_mode"] = mode
    if keep_traces:
        diagnostics["traces"] = {"k": traces[0], "f_min": traces[1], "f_max": traces[2]}
    return SpectrumReport(tuple(bands), tuple(gaps), mode, diagnostics, raw_all,
                          tuple(flat_roots), negative, e_max)


def _gaps(bands, e_max):
    """Complement of the band union inside ``[0, e_max]``."""
    gaps = []
    cur = 0.0
    for b in sorted(bands, key=lambda b: b.e_lo):
        if b.e_hi < 0:
            continue
        lo = max(b.e_lo, 0.0)
        if lo > cur:
            gaps.append((cur, min(lo, e_max)))
        cur = max(cur, b.e_hi)
        if cur >= e_max:
            break
    if cur < e_max:
        gaps.append((cur, e_max))
    return [g for g in gaps if g[1] > g[0]]


def negative_spectrum(c: STCoupling, cfg: ScanConfig | None = None, _diagnostics=None,
                      _zero=None) -> list:
    """Negative-energy bands from the scan along ``k = i kappa``.

    More than four bands would contradict the theory; that case is recorded
    in the diagnostics (``negative_band_excess``) instead of raising.
    """
    cfg = (cfg or ScanConfig()).resolved(c)
    a = c.a
    ab = st_to_ab(c)
    phase = dispersion_phase(c)
    kap_min = 1e-3 / a
    u = np.linspace(kap_min, cfg.negative_kappa_max, cfg.negative_steps)
    line = _Line(ab, a, 1j, cfg.theta_grid, phase=phase)
    mode, _ = _detect_mode(line, u, cfg.mode)
    line.mode = mode
    g, h, noise = line.gh(u)
    pieces, _ = _member_intervals(line, u, g, h, noise, cfg.edge_tol, 1)
    if _zero is None:
        _zero = zero_limit_member(c)[1]
    if _zero and pieces and pieces[0][0] <= kap_min * (1 + 1e-12):
        pieces[0] = (0.0, pieces[0][1])
    froots = _flat_roots(c, a, u, 1j, cfg.flat_tol, 1e-13)
    pieces = _settle_on_flat(pieces, froots, 10.0 * cfg.edge_tol)
    bands = _bands_from_pieces(pieces, a, kind="negative", energy=lambda x: 0.0 - x * x)
    # flat negative eigenvalues
    for k0, ind in froots:
        if not any(lo <= k0 <= hi for lo, hi in pieces):
            bands.append(Band(-k0 * k0, -k0 * k0, "negative", None, k0, k0))
    bands.sort(key=lambda b: b.e_lo)
    if _diagnostics is not None:
        _diagnostics["negative_band_count"] = len(bands)
        _diagnostics["negative_band_excess"] = len(bands) > MAX_NEGATIVE_BANDS
        _diagnostics["negative_kappa_max"] = cfg.negative_kappa_max
    return bands


def flat_band_eigenvalues(c: STCoupling, cfg: ScanConfig | None = None,
                          with_placement: bool = False):
    """Energies of flat bands (quasimomentum-independent roots).

    With ``with_placement`` returns ``(energy, placement)`` pairs where the
    placement is ``isolated``, ``embedded`` (inside a band) or ``edge``.
    """
    rep = scan_bands(c, cfg, include_negative=False)
    if with_placement:
        return [(r.energy, r.placement) for r in rep.flat_roots]
    return [r.energy for r in rep.flat_roots]
