"""Vertex couplings of the square lattice.

A coupling is the boundary condition ``A Psi(0) + B Psi'(0) = 0`` imposed at
every vertex, with the four edge slots ordered as (psi_1, psi_2, phi_1, phi_2):
left and right horizontal half-edges, then lower and upper vertical ones.
Derivatives are taken in the outgoing direction.

The canonical description is :class:`STCoupling` (rank ``m``, Hermitian ``S``,
rectangular ``T``), from which the raw matrix pair :class:`ABCoupling` is
obtained by :func:`st_to_ab`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ABCoupling",
    "CouplingClass",
    "CouplingError",
    "STCoupling",
    "ValidationReport",
    "classify_coupling",
    "from_projection",
    "from_unitary",
    "preset",
    "st_to_ab",
    "st_to_ab_permuted",
    "validate_ab",
    "PRESET_NAMES",
]

RANK_RTOL = 1e-10
HERMITIAN_ATOL = 1e-12
ZERO_ATOL = 1e-12


class CouplingError(ValueError):
    """Invalid coupling data."""


def _as_complex(z) -> complex:
    if isinstance(z, (list, tuple)) and len(z) == 2:
        return complex(float(z[0]), float(z[1]))
    return complex(z)


@dataclass(frozen=True)
class STCoupling:
    """Coupling in ST-form.

    Only the upper triangle of ``S`` is stored (row-major, diagonal included),
    so ``S`` is Hermitian by construction. The diagonal must be real.

    Parameters
    ----------
    m : int
        Rank of ``B``, between 0 and 4.
    s_upper : tuple of complex
        Upper triangle of ``S``, ``m(m+1)/2`` entries in row-major order.
    t : tuple of tuple of complex
        ``T`` as ``m`` rows of ``4 - m`` entries.
    a : float
        Edge length of the lattice.
    """

    m: int
    s_upper: tuple = ()
    t: tuple = ()
    a: float = 1.0

    def __post_init__(self):
        m = int(self.m)
        if not 0 <= m <= 4:
            raise CouplingError(f"m out of range: {self.m}")
        object.__setattr__(self, "m", m)
        a = float(self.a)
        if not np.isfinite(a) or a <= 0:
            raise CouplingError(f"edge length must be positive, got {self.a}")
        object.__setattr__(self, "a", a)

        su = tuple(_as_complex(z) for z in self.s_upper)
        if len(su) != m * (m + 1) // 2:
            raise CouplingError(
                f"S upper triangle needs {m * (m + 1) // 2} entries for m={m}, got {len(su)}"
            )
        idx = 0
        for i in range(m):
            for j in range(i, m):
                if i == j:
                    if su[idx].imag != 0.0:
                        raise CouplingError(
                            f"diagonal entry S[{i}][{i}] must be real, got {su[idx]}"
                        )
                    su = su[:idx] + (complex(su[idx].real, 0.0),) + su[idx + 1:]
                idx += 1
        object.__setattr__(self, "s_upper", su)

        rows = tuple(tuple(_as_complex(z) for z in row) for row in self.t)
        if m == 0 or m == 4:
            if any(len(r) for r in rows):
                raise CouplingError(f"T must be empty for m={m}")
            rows = tuple(() for _ in range(m))
        elif len(rows) != m or any(len(r) != 4 - m for r in rows):
            raise CouplingError(f"T must have shape {m}x{4 - m}")
        object.__setattr__(self, "t", rows)
        if not all(np.isfinite(z) for z in su) or not all(
            np.isfinite(z) for r in rows for z in r
        ):
            raise CouplingError("non-finite entries in S or T")

    @classmethod
    def from_matrices(cls, S, T=None, a: float = 1.0) -> "STCoupling":
        """Build from a full Hermitian ``S`` (only the upper triangle is read)."""
        S = np.atleast_2d(np.asarray(S, dtype=complex)) if np.size(S) else np.zeros((0, 0))
        m = S.shape[0]
        if S.shape != (m, m):
            raise CouplingError(f"S must be square, got shape {S.shape}")
        if m and np.max(np.abs(S - S.conj().T)) > HERMITIAN_ATOL * max(1.0, np.max(np.abs(S))):
            raise CouplingError("S is not Hermitian")
        upper = []
        for i in range(m):
            for j in range(i, m):
                z = S[i, j]
                upper.append(complex(z.real, 0.0) if i == j else complex(z))
        if T is None or m in (0, 4):
            t = tuple(() for _ in range(m))
        else:
            T = np.asarray(T, dtype=complex).reshape(m, 4 - m)
            t = tuple(tuple(complex(z) for z in row) for row in T)
        return cls(m=m, s_upper=tuple(upper), t=t, a=a)

    @property
    def S(self) -> np.ndarray:
        m = self.m
        S = np.zeros((m, m), dtype=complex)
        idx = 0
        for i in range(m):
            for j in range(i, m):
                S[i, j] = self.s_upper[idx]
                S[j, i] = np.conj(self.s_upper[idx])
                idx += 1
        return S

    @property
    def T(self) -> np.ndarray:
        return np.array(self.t, dtype=complex).reshape(self.m, 4 - self.m)

    def s(self, i: int, j: int) -> complex:
        """Entry ``s_ij`` with 1-based indices."""
        return complex(self.S[i - 1, j - 1])


@dataclass(frozen=True, eq=False)
class ABCoupling:
    """Raw boundary-condition pair ``A Psi(0) + B Psi'(0) = 0``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        B = np.array(self.B, dtype=complex)
        if A.shape != (4, 4) or B.shape != (4, 4):
            raise CouplingError("A and B must be 4x4")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    def __eq__(self, other):
        if not isinstance(other, ABCoupling):
            return NotImplemented
        return np.array_equal(self.A, other.A) and np.array_equal(self.B, other.B)

    __hash__ = None


def st_to_ab(c: STCoupling) -> ABCoupling:
    """Block matrices ``-A = [[S, 0], [-T*, I]]`` and ``B = [[I, T], [0, 0]]``."""
    m = c.m
    A = np.zeros((4, 4), dtype=complex)
    B = np.zeros((4, 4), dtype=complex)
    A[:m, :m] = -c.S
    A[m:, :m] = c.T.conj().T
    A[m:, m:] = -np.eye(4 - m)
    B[:m, :m] = np.eye(m)
    B[:m, m:] = c.T
    return ABCoupling(A, B)


def st_to_ab_permuted(c: STCoupling, perm: Sequence[int]) -> ABCoupling:
    """ST-form with the edge slots relabelled.

    Column ``j`` of the result is column ``perm[j]`` of :func:`st_to_ab`
    (0-based), i.e. the boundary-value vector is reordered by ``perm``.
    ``perm=(0, 2, 1, 3)`` attaches the two ``I`` columns of ``B`` to the left
    horizontal and lower vertical edges.
    """
    p = [int(i) for i in perm]
    if sorted(p) != [0, 1, 2, 3]:
        raise CouplingError(f"not a permutation of the four edge slots: {perm!r}")
    ab = st_to_ab(c)
    return ABCoupling(ab.A[:, p], ab.B[:, p])


@dataclass(frozen=True)
class ValidationReport:
    rank_ab: int
    singular_values: tuple
    hermiticity_defect: float
    rank_b: int
    failures: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "rank_AB": self.rank_ab,
            "singular_values": list(self.singular_values),
            "hermiticity_defect": self.hermiticity_defect,
            "m": self.rank_b,
            "failures": list(self.failures),
        }


def _numeric_rank(X: np.ndarray) -> tuple[int, np.ndarray]:
    sv = np.linalg.svd(X, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0, sv
    return int(np.sum(sv > RANK_RTOL * sv[0])), sv


def validate_ab(A, B) -> ValidationReport:
    """Check maximal rank of ``(A|B)``, Hermiticity of ``AB*`` and report ``rank B``.

    Never raises on bad matrices; failing conditions are listed in
    ``failures``.
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    failures = []
    if A.shape != (4, 4) or B.shape != (4, 4):
        return ValidationReport(0, (), float("inf"), 0, ("shape: A and B must be 4x4",))
    rank_ab, sv = _numeric_rank(np.hstack([A, B]))
    if rank_ab != 4:
        failures.append(f"rank(A|B) = {rank_ab} < 4")
    AB = A @ B.conj().T
    defect = float(np.max(np.abs(AB - AB.conj().T)))
    if defect > HERMITIAN_ATOL:
        failures.append(f"A B* not Hermitian (defect {defect:.3e})")
    rank_b, _ = _numeric_rank(B)
    return ValidationReport(rank_ab, tuple(float(x) for x in sv), defect, rank_b, tuple(failures))


def from_unitary(U) -> ABCoupling:
    """Condition ``(U - I) Psi(0) + i (U + I) Psi'(0) = 0`` for unitary ``U``."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (4, 4):
        raise CouplingError("U must be 4x4")
    if np.max(np.abs(U @ U.conj().T - np.eye(4))) > 1e-10:
        raise CouplingError("U is not unitary")
    return ABCoupling(U - np.eye(4), 1j * (U + np.eye(4)))


def from_projection(P, L) -> ABCoupling:
    """Condition ``P Psi(0) = 0``, ``Q Psi'(0) + L Q Psi(0) = 0`` with ``Q = I - P``.

    ``L`` must be self-adjoint and act inside ``Q C^4``; it is compressed to
    ``Q L Q`` before use.
    """
    P = np.asarray(P, dtype=complex)
    L = np.asarray(L, dtype=complex)
    if np.max(np.abs(P @ P - P)) > 1e-10 or np.max(np.abs(P - P.conj().T)) > 1e-10:
        raise CouplingError("P is not an orthogonal projection")
    if np.max(np.abs(L - L.conj().T)) > 1e-10:
        raise CouplingError("L is not self-adjoint")
    Q = np.eye(4) - P
    L = Q @ L @ Q
    return ABCoupling(P + L @ Q, Q)


# --- named couplings -------------------------------------------------------

_ARITY = {
    "Dirichlet": 0,
    "Delta": 1,
    "DeltaPrimeS": 1,
    "DeltaPrime": 1,
    "Kirchhoff": 0,
    "DiagonalDecoupled": 4,
    "ScaleInvariant": None,
    "Generic": 0,
}

PRESET_NAMES = {
    "dirichlet": "Dirichlet",
    "delta": "Delta",
    "delta_prime_s": "DeltaPrimeS",
    "deltaprimes": "DeltaPrimeS",
    "delta_prime": "DeltaPrime",
    "deltaprime": "DeltaPrime",
    "kirchhoff": "Kirchhoff",
    "diagonal": "DiagonalDecoupled",
    "diagonal_decoupled": "DiagonalDecoupled",
    "scale_invariant": "ScaleInvariant",
}


@dataclass(frozen=True)
class CouplingClass:
    """A named family of couplings with its real parameters.

    ``ScaleInvariant`` carries ``[m, Re t_11, Im t_11, ...]`` (``T`` row-major),
    so that it can be turned back into a coupling.
    """

    tag: str
    parameters: tuple = ()

    def __post_init__(self):
        tag = PRESET_NAMES.get(self.tag.lower(), self.tag) if self.tag not in _ARITY else self.tag
        if tag not in _ARITY:
            raise CouplingError(f"unknown coupling class {self.tag!r}")
        params = tuple(float(p) for p in self.parameters)
        arity = _ARITY[tag]
        if arity is not None and len(params) != arity:
            raise CouplingError(f"{tag} takes {arity} parameter(s), got {len(params)}")
        if tag == "ScaleInvariant":
            if not params or params[0] not in (1.0, 2.0, 3.0):
                raise CouplingError("ScaleInvariant needs m in {1,2,3} as first parameter")
            m = int(params[0])
            if len(params) != 1 + 2 * m * (4 - m):
                raise CouplingError(f"ScaleInvariant with m={m} needs {2 * m * (4 - m)} T values")
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "parameters", params)


def preset(cls: CouplingClass | str, a: float = 1.0, params: Sequence[float] = ()) -> STCoupling:
    """Coupling for a named class.

    ``cls`` may be a :class:`CouplingClass` or a tag/alias string used together
    with ``params``.
    """
    if isinstance(cls, str):
        cls = CouplingClass(cls, tuple(params))
    tag, p = cls.tag, cls.parameters
    if tag == "Dirichlet":
        return STCoupling(0, a=a)
    if tag == "Kirchhoff":
        return preset(CouplingClass("Delta", (0.0,)), a)
    if tag == "Delta":
        return STCoupling(1, (p[0],), ((1, 1, 1),), a=a)
    if tag == "DeltaPrimeS":
        if p[0] == 0.0:
            raise CouplingError("DeltaPrimeS strength must be nonzero")
        return STCoupling.from_matrices(np.full((4, 4), 1.0 / p[0]), a=a)
    if tag == "DeltaPrime":
        if p[0] == 0.0:
            raise CouplingError("DeltaPrime strength must be nonzero")
        return STCoupling.from_matrices((4.0 * np.eye(4) - np.ones((4, 4))) / p[0], a=a)
    if tag == "DiagonalDecoupled":
        return STCoupling.from_matrices(np.diag(p), a=a)
    if tag == "ScaleInvariant":
        m = int(p[0])
        vals = np.asarray(p[1:]).reshape(-1, 2)
        T = (vals[:, 0] + 1j * vals[:, 1]).reshape(m, 4 - m)
        return STCoupling.from_matrices(np.zeros((m, m)), T, a=a)
    raise CouplingError(f"no preset for class {tag}")


def _close(x, y, tol=ZERO_ATOL) -> bool:
    return bool(np.all(np.abs(np.asarray(x) - np.asarray(y)) <= tol))


def classify_coupling(c: STCoupling) -> CouplingClass:
    """Recognise the named preset shapes; anything else is ``Generic``."""
    S, T = c.S, c.T
    if c.m == 0:
        return CouplingClass("Dirichlet")
    if c.m == 1 and _close(T, np.ones((1, 3))):
        alpha = float(S[0, 0].real)
        if alpha == 0.0:
            return CouplingClass("Kirchhoff")
        return CouplingClass("Delta", (alpha,))
    if c.m == 4:
        off = S - np.diag(np.diag(S))
        if _close(off, 0):
            return CouplingClass("DiagonalDecoupled", tuple(np.diag(S).real))
        s0 = S[0, 0].real
        if s0 != 0.0 and _close(S, np.full((4, 4), s0)):
            return CouplingClass("DeltaPrimeS", (1.0 / s0,))
        if off[0, 1].real != 0.0:
            beta = -1.0 / off[0, 1].real
            if _close(S, (4.0 * np.eye(4) - np.ones((4, 4))) / beta):
                return CouplingClass("DeltaPrime", (beta,))
    if 1 <= c.m <= 3 and _close(S, 0):
        flat = [v for z in T.ravel() for v in (z.real, z.imag)]
        return CouplingClass("ScaleInvariant", (float(c.m), *flat))
    return CouplingClass("Generic")
