import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qlattice import STCoupling

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def unit_disc(rng, shape):
    """Complex samples uniform in the unit disc."""
    r = np.sqrt(rng.uniform(size=shape))
    return r * np.exp(2j * np.pi * rng.uniform(size=shape))


def random_hermitian(rng, m, scale=1.0):
    X = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return scale * 0.5 * (X + X.conj().T)


def random_coupling(rng, m, a=1.0, scale=1.0):
    S = random_hermitian(rng, m, scale) if m else np.zeros((0, 0))
    T = unit_disc(rng, (m, 4 - m)) if 0 < m < 4 else None
    return STCoupling.from_matrices(S, T, a=a)


def direct_det(c, k, t1, t2):
    """Spectral determinant built from scratch, independent of ``fiber``.

    Each edge carries ``c1 exp(-ikx) + c2 exp(ikx)`` on ``[0, a]``.  The
    first slot of a direction is the end at ``x = 0``; the second is the end
    at ``x = a`` of the neighbouring cell, which carries the phase
    ``exp(i theta)``.  Values and outgoing derivatives enter ``A u + B u'``.
    """
    from qlattice import st_to_ab
    ab = st_to_ab(c)
    a = c.a
    V = np.zeros((4, 4), complex)
    W = np.zeros((4, 4), complex)
    for b, th in ((0, t1), (2, t2)):
        ph = np.exp(1j * th)
        em, ep = np.exp(-1j * k * a), np.exp(1j * k * a)
        V[b, b:b + 2] = [1.0, 1.0]
        W[b, b:b + 2] = [-1j * k, 1j * k]
        V[b + 1, b:b + 2] = [ph * em, ph * ep]
        W[b + 1, b:b + 2] = [ph * 1j * k * em, -ph * 1j * k * ep]
    return np.linalg.det(ab.A @ V + ab.B @ W)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, title, detail = results[n]
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
