import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import random_coupling
from qlattice.coupling import STCoupling, preset
from qlattice.fiber import FiberPoint, dispersion_real
from qlattice.spectrum import (ScanConfig, ScanError, flat_band_eigenvalues, flat_indicator,
                               negative_spectrum, scan_bands, thread_count, torus_extrema,
                               zero_limit_member)


def crossings(f, lo, hi, levels=(-1.0, 1.0), n=40001):
    """Roots of ``f = level`` on ``[lo, hi]`` by sign change and brentq."""
    x = np.linspace(lo, hi, n)
    out = []
    for lev in levels:
        g = f(x) - lev
        for i in np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0):
            out.append(brentq(lambda t: f(t) - lev, x[i], x[i + 1], xtol=1e-15))
    return np.sort(out)


def delta_condition(alpha, a):
    """Square lattice with a delta vertex: ``k**2`` is in the spectrum iff |F(k)| <= 1."""
    return lambda k: np.cos(k * a) + alpha * np.sin(k * a) / (4 * k)


def delta_condition_negative(alpha, a):
    return lambda kap: np.cosh(kap * a) + alpha * np.sinh(kap * a) / (4 * kap)


def edges_k(rep):
    return np.sort([x for b in rep.bands if b.kind != "flat" for x in (b.k_lo, b.k_hi)])


# --- configuration --------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [dict(k_min=-1), dict(k_min=2, k_max=1), dict(k_steps=1),
                                    dict(theta_grid=4), dict(edge_tol=0), dict(flat_tol=-1),
                                    dict(negative_kappa_max=0), dict(mode="magic")])
def test_scan_config_validation(kwargs):
    with pytest.raises(ScanError):
        ScanConfig(**kwargs)


def test_scan_config_defaults():
    cfg = ScanConfig().resolved(preset("delta", 2.0, [1.0]))
    assert cfg.k_min == 0.05 and cfg.theta_grid == 32
    assert cfg.k_max == pytest.approx(40 * np.pi / 2.0)
    assert cfg.k_steps >= 64 and cfg.negative_kappa_max > 0


def test_scan_rejects_raw_pairs():
    from qlattice.coupling import st_to_ab
    with pytest.raises(ScanError):
        scan_bands(st_to_ab(preset("dirichlet")))


def test_thread_count(monkeypatch):
    monkeypatch.delenv("QLATTICE_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("QLATTICE_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("QLATTICE_THREADS", "zero")
    assert thread_count() == 1


# --- torus extrema -------------------------------------------------------------

def test_dirichlet_extrema_are_theta_free():
    for k in (0.3, 1.7, 4.4):
        lo, hi, _, _ = torus_extrema(preset("dirichlet"), k)
        assert lo == pytest.approx(hi, abs=1e-12)
        assert lo == pytest.approx(-4 * np.sin(k) ** 2, abs=1e-12)


def test_kirchhoff_extrema_straddle_zero():
    lo, hi, _, _ = torus_extrema(preset("kirchhoff"), np.pi / 2)
    assert lo <= 0 <= hi


def test_extrema_bound_values(rng):
    for m in range(1, 5):
        c = random_coupling(rng, m)
        for k in rng.uniform(0.2, 15, 4):
            lo, hi, amin, amax = torus_extrema(c, k)
            for t in [(0.0, 0.0)] + [tuple(rng.uniform(-np.pi, np.pi, 2)) for _ in range(5)]:
                v = dispersion_real(c, FiberPoint(k, *t))
                assert lo - 1e-9 * (1 + abs(v)) <= v <= hi + 1e-9 * (1 + abs(v))
            assert dispersion_real(c, FiberPoint(k, *amin)) == pytest.approx(lo, rel=1e-8, abs=1e-9)
            assert dispersion_real(c, FiberPoint(k, *amax)) == pytest.approx(hi, rel=1e-8, abs=1e-9)


def test_flat_indicator():
    d = preset("dirichlet")
    assert flat_indicator(d, np.pi) < 1e-12
    assert flat_indicator(d, np.pi / 2) > 1e-3
    assert flat_indicator(preset("delta", 1.0, [2.0]), 2.0) > 1e-3


# --- spectra with exact answers -------------------------------------------------

def test_dirichlet_exact():
    rep = scan_bands(preset("dirichlet"), ScanConfig(k_min=0.1, k_max=10.0))
    assert [b.kind for b in rep.bands] == ["flat"] * 3
    got = [b.e_lo for b in rep.bands]
    assert got == pytest.approx([np.pi ** 2, 4 * np.pi ** 2, 9 * np.pi ** 2], rel=1e-12)
    assert all(b.e_lo == b.e_hi for b in rep.bands)
    assert rep.negative_bands == ()


def test_kirchhoff_full_half_line():
    rep = scan_bands(preset("kirchhoff"), ScanConfig(k_min=0.05, k_max=20.0))
    assert len(rep.bands) == 1
    assert rep.bands[0].e_lo == 0.0 and rep.bands[0].e_hi == pytest.approx(400.0)
    assert rep.gaps == ()
    assert rep.negative_bands == ()
    places = {r.placement for r in rep.flat_roots}
    assert places == {"embedded"}
    assert [r.k for r in rep.flat_roots] == pytest.approx(np.pi * np.arange(1, 7), rel=1e-12)


@pytest.mark.parametrize("alpha, a", [(2.0, 1.0), (-3.0, 1.0), (5.0, 0.7), (0.5, 2.0)])
def test_delta_lattice_matches_closed_condition(alpha, a):
    k_max = 12.0 / a
    rep = scan_bands(preset("delta", a, [alpha]), ScanConfig(k_min=0.5 / a, k_max=k_max),
                     include_negative=False)
    want = crossings(delta_condition(alpha, a), 0.5 / a, k_max)
    got = edges_k(rep)
    # window ends are artificial edges of the scan
    got = got[(got > 0.5 / a + 1e-9) & (got < k_max - 1e-9)]
    assert got == pytest.approx(want, abs=1e-10)


def test_delta_negative_bands_match_closed_condition():
    alpha = -5.0
    c = preset("delta", 1.0, [alpha])
    neg = negative_spectrum(c)
    assert 1 <= len(neg) <= 4
    want = crossings(delta_condition_negative(alpha, 1.0), 1e-3, 40.0)
    got = np.sort([x for b in neg for x in (b.k_lo, b.k_hi) if x > 0])
    assert got == pytest.approx(want, abs=1e-9)
    # the band reaches E = 0 from below
    assert max(b.e_hi for b in neg) == 0.0


def test_delta_gaps_open_above_n_pi_squared():
    rep = scan_bands(preset("delta", 1.0, [2.0]), ScanConfig(k_min=0.5, k_max=31 * np.pi))
    for n in (10, 20, 30):
        e = (n * np.pi) ** 2
        gap = [g for g in rep.gaps if abs(g[0] - e) < 1e-6 * e]
        assert len(gap) == 1
        assert gap[0][1] - gap[0][0] == pytest.approx(2.0, abs=0.05)


@pytest.mark.parametrize("t", [(0, 1, 0), (0, 0, 2)])
def test_point_spectrum_offsets(t):
    """T = (0, t2, t3) with t2 t3 = 0, s = -1: flat bands at ((n - 1/2) pi)^2 + 2s/(1 + |t|^2) + O(1/n).

    The offset follows from the two-edge problem tan(ak) = -k(1 + |t|^2)/s.
    """
    s = -1.0
    c = STCoupling(1, (s,), (t,))
    rep = scan_bands(c, ScanConfig(k_min=0.5, k_max=30.5 * np.pi), include_negative=False)
    assert all(b.kind == "flat" for b in rep.bands)
    energies = np.array([b.e_lo for b in rep.bands])
    offset = 2 * s / (1 + t[1] ** 2 + t[2] ** 2)
    for n in (20, 25, 30):
        e0 = ((n - 0.5) * np.pi) ** 2
        near = energies[np.argmin(np.abs(energies - e0))]
        assert near - e0 == pytest.approx(offset, abs=2.0 / n)
    # the sin(ak) factor gives (n pi)^2 too
    assert np.min(np.abs(energies - (20 * np.pi) ** 2)) < 1e-8 * (20 * np.pi) ** 2


def test_theta_independent_spectrum_is_flat():
    c = STCoupling.from_matrices(np.diag([1.0, 2.0]), np.zeros((2, 2)))
    rep = scan_bands(c, ScanConfig(k_min=0.1, k_max=15.0), include_negative=False)
    assert rep.bands and all(b.kind == "flat" and b.width == 0 for b in rep.bands)


def test_flat_band_eigenvalues_placement():
    kir = flat_band_eigenvalues(preset("kirchhoff"), ScanConfig(k_min=0.1, k_max=10.0),
                                with_placement=True)
    assert [p for _, p in kir] == ["embedded"] * 3
    d = flat_band_eigenvalues(preset("dirichlet"), ScanConfig(k_min=0.1, k_max=7.0))
    assert d == pytest.approx([np.pi ** 2, 4 * np.pi ** 2], rel=1e-12)
    delta = flat_band_eigenvalues(preset("delta", 1.0, [2.0]), ScanConfig(k_min=0.1, k_max=7.0),
                                  with_placement=True)
    assert [p for _, p in delta] == ["edge", "edge"]


# --- structural properties ------------------------------------------------------

def test_zero_limit():
    assert zero_limit_member(preset("kirchhoff")) == (True, True)
    assert zero_limit_member(preset("dirichlet")) == (False, False)
    pos, neg = zero_limit_member(preset("delta", 1.0, [2.0]))
    assert not pos and not neg


def test_refinement_only_widens(rng):
    c = random_coupling(rng, 2)
    cfg = dict(k_min=0.2, k_max=12.0, adaptive_theta=False)
    coarse = scan_bands(c, ScanConfig(theta_grid=8, **cfg), include_negative=False)
    fine = scan_bands(c, ScanConfig(theta_grid=64, **cfg), include_negative=False)
    for b in coarse.bands:
        assert any(f.k_lo <= b.k_lo + 1e-10 and b.k_hi <= f.k_hi + 1e-10 for f in fine.bands)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_edges_are_zeros_of_extrema(rng, m):
    c = random_coupling(rng, m)
    cfg = ScanConfig(k_min=0.3, k_max=10.0)
    rep = scan_bands(c, cfg, include_negative=False)
    for b in rep.bands:
        if b.kind == "flat":
            continue
        for k in (b.k_lo, b.k_hi):
            if k in (cfg.k_min, cfg.k_max):
                continue
            lo, hi, _, _ = torus_extrema(c, k)
            lo2, hi2, _, _ = torus_extrema(c, k + 1e-3)
            scale = max(abs(lo2), abs(hi2), 1e-300)
            assert min(abs(lo), abs(hi)) <= 1e-8 * scale


def test_raw_bands_lie_inside_merged(rng):
    c = random_coupling(rng, 3)
    rep = scan_bands(c, ScanConfig(k_min=0.2, k_max=15.0), include_negative=False)
    for r in rep.raw_bands:
        if r.kind == "flat":
            continue
        assert any(b.e_lo - 1e-9 <= r.e_lo and r.e_hi <= b.e_hi + 1e-9 for b in rep.bands)


def test_gaps_are_complement(rng):
    c = random_coupling(rng, 1)
    rep = scan_bands(c, ScanConfig(k_min=0.2, k_max=10.0), include_negative=False)
    pieces = sorted([(b.e_lo, b.e_hi) for b in rep.bands] + list(rep.gaps))
    assert pieces[0][0] == 0.0
    for (l0, h0), (l1, h1) in zip(pieces, pieces[1:]):
        assert l1 <= h0 + 1e-9
    assert max(h for _, h in pieces) == pytest.approx(rep.e_max)


def test_threads_do_not_change_result(rng, monkeypatch):
    c = random_coupling(rng, 2)
    cfg = ScanConfig(k_min=0.2, k_max=15.0)
    monkeypatch.setenv("QLATTICE_THREADS", "1")
    one = scan_bands(c, cfg)
    monkeypatch.setenv("QLATTICE_THREADS", "4")
    four = scan_bands(c, cfg)
    assert one.bands == four.bands and one.negative_bands == four.negative_bands


def test_abs_squared_mode_agrees(rng):
    c = preset("delta", 1.0, [2.0])
    cfg = dict(k_min=0.5, k_max=10.0)
    real = scan_bands(c, ScanConfig(mode="real-part", **cfg), include_negative=False)
    sq = scan_bands(c, ScanConfig(mode="abs-squared", **cfg), include_negative=False)
    assert sq.realness_mode == "abs-squared"
    assert edges_k(sq) == pytest.approx(edges_k(real), abs=1e-6)


def test_negative_count_bound(rng):
    for i in range(40):
        c = random_coupling(rng, 1 + i % 4, scale=4.0)
        neg = negative_spectrum(c)
        assert len(neg) <= 4
        assert all(b.e_hi <= 0 for b in neg)


def test_report_dict(rng):
    rep = scan_bands(preset("delta", 1.0, [-2.0]), ScanConfig(k_min=0.2, k_max=8.0),
                     keep_traces=True)
    d = rep.as_dict()
    assert set(d) >= {"bands", "gaps", "negative_bands", "flat_roots", "e_max", "realness_mode"}
    tr = rep.diagnostics["traces"]
    assert len(tr["k"]) == len(tr["f_min"]) == len(tr["f_max"])
    assert np.all(tr["f_min"] <= tr["f_max"])


def test_negative_flat_points_listed_once():
    """Two Robin edge types with two bound states each: four distinct points."""
    bands = negative_spectrum(preset("diagonal", 1.0, [-3, -3, -5, -5]), ScanConfig())
    k = np.sqrt([-b.e_lo for b in bands])
    assert len(bands) == 4 and all(b.width == 0 for b in bands)
    # symmetric and antisymmetric bound states of the Robin edges
    for s in (3.0, 5.0):
        assert np.min(np.abs(k * np.tanh(k / 2) - s)) < 1e-8
        assert np.min(np.abs(k / np.tanh(k / 2) - s)) < 1e-8
