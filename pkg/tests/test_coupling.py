import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_coupling, random_hermitian, unit_disc
from qlattice.coupling import (ABCoupling, CouplingClass, CouplingError, STCoupling,
                               classify_coupling, from_projection, from_unitary, preset, st_to_ab,
                               st_to_ab_permuted, validate_ab)

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)


@st.composite
def st_couplings(draw, m=None):
    m = draw(st.integers(0, 4)) if m is None else m
    upper = []
    for i in range(m):
        for j in range(i, m):
            upper.append(complex(draw(finite)) if i == j else draw(cplx))
    t = tuple(tuple(draw(cplx) for _ in range(4 - m)) for _ in range(m)) if 0 < m < 4 else ()
    a = draw(st.floats(0.2, 5.0))
    return STCoupling(m, tuple(upper), t, a)


# --- STCoupling --------------------------------------------------------------

def test_s_is_hermitian_by_construction():
    c = STCoupling(3, (1, 2 + 1j, 3j, 4, 5, 6), ((1,), (2,), (3,)))
    S = c.S
    assert np.array_equal(S, S.conj().T)
    assert S[1, 0] == 2 - 1j


@pytest.mark.parametrize("kwargs, msg", [
    (dict(m=5), "m out of range"),
    (dict(m=-1), "m out of range"),
    (dict(m=1, s_upper=(1j,), t=((1, 1, 1),)), "must be real"),
    (dict(m=1, s_upper=(1, 2), t=((1, 1, 1),)), "upper triangle"),
    (dict(m=2, s_upper=(1, 0, 1), t=((1, 1),)), "T must have shape"),
    (dict(m=4, s_upper=(0,) * 10, t=((1,),) * 4), "T must be empty"),
    (dict(m=0, a=0.0), "edge length"),
    (dict(m=1, s_upper=(np.nan,), t=((1, 1, 1),)), "non-finite"),
])
def test_invalid_couplings(kwargs, msg):
    with pytest.raises(CouplingError, match=msg):
        STCoupling(**kwargs)


def test_from_matrices_rejects_non_hermitian():
    with pytest.raises(CouplingError, match="Hermitian"):
        STCoupling.from_matrices([[1, 1], [0, 1]], [[0, 0], [0, 0]])


# --- ST to (A, B) ------------------------------------------------------------

def test_dirichlet_block_form():
    ab = st_to_ab(STCoupling(0))
    assert np.array_equal(ab.A, -np.eye(4))
    assert np.array_equal(ab.B, np.zeros((4, 4)))


def test_kirchhoff_block_form():
    ab = st_to_ab(preset("kirchhoff"))
    assert np.array_equal(ab.B[0], np.ones(4))
    assert np.array_equal(ab.B[1:], np.zeros((3, 4)))
    # rows 2..4 of A psi = 0 force all values equal to psi_1
    psi = np.ones(4)
    assert np.allclose(ab.A[1:] @ psi, 0)
    for j in range(1, 4):
        e = np.zeros(4)
        e[j] = 1.0
        assert not np.allclose(ab.A[1:] @ e, 0)


def test_m4_diagonal_block_form():
    ab = st_to_ab(STCoupling.from_matrices(np.diag([1.0, 2, 3, 4])))
    assert np.array_equal(ab.B, np.eye(4))
    assert np.array_equal(ab.A, -np.diag([1.0, 2, 3, 4]))


@given(st_couplings())
def test_st_to_ab_is_valid(c):
    ab = st_to_ab(c)
    rep = validate_ab(ab.A, ab.B)
    assert rep.ok, rep.failures
    assert rep.rank_b == c.m


def test_hermiticity_defect_random(rng):
    worst = 0.0
    for i in range(1000):
        m = i % 5
        ab = st_to_ab(random_coupling(rng, m))
        worst = max(worst, validate_ab(ab.A, ab.B).hermiticity_defect)
    assert worst < 1e-12


def test_permuted_identity_and_inverse(rng):
    c = random_coupling(rng, 2)
    assert st_to_ab_permuted(c, (0, 1, 2, 3)) == st_to_ab(c)
    perm = (2, 0, 3, 1)
    inv = np.argsort(perm)
    ab = st_to_ab_permuted(c, perm)
    back = ABCoupling(ab.A[:, inv], ab.B[:, inv])
    assert back == st_to_ab(c)


def test_permuted_swap_moves_identity_columns():
    c = STCoupling(2, (1, 2, 3), ((5, 6), (7, 8)))
    ab = st_to_ab_permuted(c, (0, 2, 1, 3))
    assert np.array_equal(ab.B[:, [0, 2]], np.vstack([np.eye(2), np.zeros((2, 2))]))
    assert np.array_equal(ab.B[:2, [1, 3]], c.T)


def test_permuted_rejects_non_permutation(rng):
    with pytest.raises(CouplingError):
        st_to_ab_permuted(random_coupling(rng, 1), (0, 0, 1, 2))


# --- validate_ab ---------------------------------------------------------------

def test_validate_examples():
    rep = validate_ab(-np.eye(4), np.zeros((4, 4)))
    assert rep.ok and rep.rank_ab == 4 and rep.rank_b == 0 and rep.hermiticity_defect == 0
    rep = validate_ab(np.zeros((4, 4)), np.eye(4))
    assert rep.ok and rep.rank_b == 4
    rep = validate_ab(np.zeros((4, 4)), np.zeros((4, 4)))
    assert not rep.ok and any("rank" in f for f in rep.failures)


def test_validate_non_hermitian_and_shape():
    A = np.eye(4)
    B = np.eye(4)
    B[0, 1] = 1.0
    rep = validate_ab(A, B)
    assert not rep.ok and any("Hermitian" in f for f in rep.failures)
    assert not validate_ab(np.eye(3), np.eye(3)).ok


def test_report_dict_keys():
    d = validate_ab(-np.eye(4), np.zeros((4, 4))).as_dict()
    assert set(d) == {"ok", "rank_AB", "singular_values", "hermiticity_defect", "m", "failures"}


def test_unitary_and_projection_forms_are_valid(rng):
    X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    U, _ = np.linalg.qr(X)
    ab = from_unitary(U)
    assert validate_ab(ab.A, ab.B).ok
    P = np.diag([1.0, 0, 0, 0])
    ab = from_projection(P, random_hermitian(rng, 4))
    rep = validate_ab(ab.A, ab.B)
    assert rep.ok and rep.rank_b == 3
    with pytest.raises(CouplingError):
        from_unitary(2 * np.eye(4))
    with pytest.raises(CouplingError):
        from_projection(2 * np.eye(4), np.eye(4))


# --- presets and classification -------------------------------------------------

def test_preset_examples():
    d = preset("delta", 1.0, [2.0])
    assert d.m == 1 and d.S[0, 0] == 2 and np.array_equal(d.T, np.ones((1, 3)))
    assert preset("kirchhoff") == preset("delta", 1.0, [0.0])
    assert preset("dirichlet").m == 0
    dps = preset("delta_prime_s", 1.0, [1.0])
    assert dps.m == 4 and np.array_equal(dps.S, np.ones((4, 4)))
    dp = preset("delta_prime", 1.0, [2.0])
    assert np.allclose(dp.S, (4 * np.eye(4) - np.ones((4, 4))) / 2.0)
    diag = preset("diagonal", 1.0, [1, 2, 3, 4])
    assert np.array_equal(diag.S, np.diag([1.0, 2, 3, 4]))


@pytest.mark.parametrize("name, params", [("delta_prime_s", [0.0]), ("delta_prime", [0.0]),
                                          ("delta", []), ("nonsense", [])])
def test_preset_errors(name, params):
    with pytest.raises(CouplingError):
        preset(name, 1.0, params)


@pytest.mark.parametrize("tag, params", [("Delta", (2.0,)), ("Delta", (-1.5,)), ("Kirchhoff", ()),
                                         ("Dirichlet", ()), ("DeltaPrimeS", (0.5,)),
                                         ("DeltaPrime", (3.0,)),
                                         ("DiagonalDecoupled", (1.0, 2.0, 3.0, 4.0)),
                                         ("ScaleInvariant", (2.0, 1, 0, 0, 1, 0.5, 0, 0, -1))])
def test_classify_round_trip(tag, params):
    cls = CouplingClass(tag, params)
    got = classify_coupling(preset(cls))
    assert got.tag == tag
    assert np.allclose(got.parameters, params)


def test_classify_examples(rng):
    assert classify_coupling(STCoupling.from_matrices(np.zeros((4, 4)))).tag == "DiagonalDecoupled"
    assert classify_coupling(random_coupling(rng, 3)).tag == "Generic"


def test_coupling_class_validation():
    with pytest.raises(CouplingError):
        CouplingClass("Delta", ())
    with pytest.raises(CouplingError):
        CouplingClass("Unknown")
    assert CouplingClass("delta", (1.0,)).tag == "Delta"


def test_unit_disc_sampler(rng):
    z = unit_disc(rng, 1000)
    assert np.all(np.abs(z) <= 1)
