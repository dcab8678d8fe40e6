import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlattice.trigform import (TrigForm, evaluate_coeffs, m1_amplitude_equality, reduced_range_m1,
                               torus_minmax, trig_form_range, wrap_angle)

small = st.floats(-3, 3, allow_nan=False)
cplx = st.builds(complex, small, small)
forms = st.builds(TrigForm, cplx, cplx, cplx, cplx, small)


def brute_range(f, n=721):
    t = np.linspace(-np.pi, np.pi, n)
    v = f(t[:, None], t[None, :])
    return v.min(), v.max()


def test_wrap_angle():
    assert wrap_angle(np.pi) == np.pi
    assert wrap_angle(-np.pi) == np.pi
    assert wrap_angle(3 * np.pi) == pytest.approx(np.pi)
    assert np.allclose(wrap_angle(np.array([0.0, 2 * np.pi, -0.5])), [0.0, 0.0, -0.5])


@pytest.mark.parametrize("form, expected, degenerate", [
    (TrigForm(c0=5.0), (5.0, 5.0), True),
    (TrigForm(A1=1.0), (-1.0, 1.0), False),
    (TrigForm(A1=1.0, A2=1.0), (-2.0, 2.0), False),
    (TrigForm(A3=2.0, A4=2.0, c0=1.0), (-3.0, 5.0), False),
])
def test_range_examples(form, expected, degenerate):
    lo, hi, deg = trig_form_range(form)
    assert (lo, hi) == pytest.approx(expected, abs=1e-12)
    assert deg is degenerate


def test_coeffs_match_direct_evaluation(rng):
    for _ in range(20):
        A = rng.normal(size=8)
        f = TrigForm(A[0] + 1j * A[1], A[2] + 1j * A[3], A[4] + 1j * A[5], A[6] + 1j * A[7], 0.3)
        t1, t2 = rng.uniform(-np.pi, np.pi, 2)
        direct = (0.3 + (f.A1 * np.exp(1j * t1)).real + (f.A2 * np.exp(1j * t2)).real
                  + (f.A3 * np.exp(1j * (t1 - t2))).real + (f.A4 * np.exp(1j * (t1 + t2))).real)
        assert f(t1, t2) == pytest.approx(direct, abs=1e-12)


@given(forms)
def test_range_brackets_dense_grid(f):
    lo, hi, _ = trig_form_range(f)
    blo, bhi = brute_range(f)
    scale = 1.0 + abs(f.A1) + abs(f.A2) + abs(f.A3) + abs(f.A4) + abs(f.c0)
    # exact extrema can only be more extreme than a grid, and not by much
    assert lo <= blo + 1e-9 * scale
    assert hi >= bhi - 1e-9 * scale
    assert blo - lo <= 1e-3 * scale
    assert hi - bhi <= 1e-3 * scale


@given(forms)
def test_argmin_argmax_attain_values(f):
    ext = torus_minmax(f.coeffs(), 32)
    assert f(*ext.argmin) == pytest.approx(float(ext.fmin), abs=1e-9)
    assert f(*ext.argmax) == pytest.approx(float(ext.fmax), abs=1e-9)


def test_refinement_only_widens(rng):
    F = np.array([TrigForm(*(rng.normal(size=4) + 1j * rng.normal(size=4)), c0=rng.normal()).coeffs()
                  for _ in range(50)])
    coarse = torus_minmax(F, 8, refine=False)
    fine = torus_minmax(F, 8, refine=True)
    assert np.all(fine.fmin <= coarse.fmin + 1e-14)
    assert np.all(fine.fmax >= coarse.fmax - 1e-14)


def test_batched_matches_single(rng):
    F = np.array([TrigForm(*(rng.normal(size=4) + 1j * rng.normal(size=4))).coeffs()
                  for _ in range(6)])
    batch = torus_minmax(F, 32)
    for i in range(6):
        one = torus_minmax(F[i], 32)
        assert float(one.fmin) == pytest.approx(batch.fmin[i], abs=1e-12)
        assert float(one.fmax) == pytest.approx(batch.fmax[i], abs=1e-12)


def test_degeneracy_flag_matches_numeric_width(rng):
    for i in range(100):
        if i % 4 == 0:
            f = TrigForm(c0=rng.normal())
        else:
            A = rng.normal(size=8) * (rng.uniform(size=8) < 0.5)
            f = TrigForm(A[0] + 1j * A[1], A[2] + 1j * A[3], A[4] + 1j * A[5], A[6] + 1j * A[7],
                         rng.normal())
        lo, hi, deg = trig_form_range(f)
        assert deg == (hi - lo < 1e-9)


def test_grid_validation():
    with pytest.raises(ValueError):
        trig_form_range(TrigForm(), grid_n=4)
    with pytest.raises(ValueError):
        torus_minmax(TrigForm().coeffs(), grid_n=2)


def test_evaluate_coeffs_hermitian_real(rng):
    F = TrigForm(1 + 2j, -1j, 0.5, 2 - 1j, 0.1).coeffs()
    assert np.allclose(F, np.conj(F[::-1, ::-1]))
    v = evaluate_coeffs(F, rng.uniform(size=5), rng.uniform(size=5))
    assert v.dtype == float


@pytest.mark.parametrize("t, expected", [((0, 1, 1), 1.0), ((1, 1, 1), 2.0), ((0, 0, 0), 0.0),
                                         ((0.5j, 2, -1j), 2.5)])
def test_reduced_range_m1(t, expected):
    assert reduced_range_m1(*t) == pytest.approx(expected)


def test_amplitude_equality_case():
    lhs, rhs, eq = m1_amplitude_equality(1, 1, 1)
    assert (lhs, rhs, eq) == (4.0, 4.0, True)
    assert m1_amplitude_equality(1j, 0.3, -0.3)[2]
    assert not m1_amplitude_equality(0, 1, 1)[2]


def test_amplitude_inequality_random(rng):
    """``2(|t1| + |t2||t3|) <= 1 + |t1|^2 + |t2|^2 + |t3|^2``, equality on the manifold."""
    z = 2.0 * (rng.normal(size=(1000, 3)) + 1j * rng.normal(size=(1000, 3)))
    for t in z:
        lhs, rhs, eq = m1_amplitude_equality(*t)
        assert lhs <= rhs + 1e-12
        assert not eq
    # samples on |t1| = 1, |t2| = |t3|
    for _ in range(200):
        r = rng.uniform(0, 3)
        ph = np.exp(2j * np.pi * rng.uniform(size=3))
        lhs, rhs, eq = m1_amplitude_equality(ph[0], r * ph[1], r * ph[2])
        assert eq and abs(lhs - rhs) <= 1e-12 * rhs
