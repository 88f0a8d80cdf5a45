"""Eigendecomposition, kernel bases and rank tests.

All rank decisions go through singular values compared against a relative
threshold (``Tolerances.rank_rtol``); nothing here uses determinants.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, EigFailure, KernelDimensionUnexpected

__all__ = ["Tolerances", "Eigenstructure", "NullBasis", "eig", "null_basis",
           "kernel_vector", "kernel_basis", "is_independent", "smallest_sv",
           "numerical_rank", "pbh_observable", "pbh_controllable",
           "DEFAULT_TOL"]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every design and check.

    ``distinct_sep`` is relative: two eigenvalues of ``L`` count as distinct
    when they differ by more than ``distinct_sep * ||L||``.
    """

    rank_rtol: float = 1e-9
    eig_match_atol: float = 1e-6
    residual_rtol: float = 1e-8
    distinct_sep: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        for name in ("rank_rtol", "eig_match_atol", "residual_rtol",
                     "distinct_sep"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    def sep(self, scale):
        """Absolute eigenvalue separation for a matrix of norm ``scale``."""
        return self.distinct_sep * max(float(scale), 1.0)


DEFAULT_TOL = Tolerances()


def _unit_phase(v):
    """Scale ``v`` to unit norm with its largest entry real positive.

    Ties between equal-magnitude entries go to the lowest index, which keeps
    the normalization a deterministic function of the input bits.
    """
    v = v / np.linalg.norm(v)
    mags = np.abs(v)
    j = int(np.argmax(mags > mags.max() * (1 - 1e-12)))
    return v * (abs(v[j]) / v[j])


@dataclass(frozen=True)
class Eigenstructure:
    """Eigenvalues sorted by (real, imag) with the modal matrix ``V0``.

    Real eigenvalues carry real unit eigenvectors; complex pairs sit next to
    each other (lower imaginary part first) with exactly conjugate columns.
    """

    eigenvalues: np.ndarray
    V0: np.ndarray
    all_real: bool
    distinct: bool

    def __len__(self):
        return len(self.eigenvalues)

    def is_real(self, i):
        return self.eigenvalues[i].imag == 0.0

    def conjugate_index(self, i):
        """Index of the conjugate partner of eigenvalue ``i`` (itself if real)."""
        lam = self.eigenvalues[i]
        if lam.imag == 0.0:
            return i
        hits = np.flatnonzero(self.eigenvalues == np.conj(lam))
        return int(hits[0])

    def index_of(self, value, atol=None):
        """Index of the eigenvalue nearest to ``value``."""
        d = np.abs(self.eigenvalues - complex(value))
        i = int(np.argmin(d))
        if atol is not None and d[i] > atol:
            raise ValueError(f"{value} is not an eigenvalue (nearest "
                             f"{self.eigenvalues[i]:.6g}, gap {d[i]:.3g})")
        return i

    def clusters(self, sep):
        """Groups of eigenvalue indices closer than ``sep`` to each other."""
        lam = self.eigenvalues
        out = []
        for i in range(len(lam)):
            for j in range(i + 1, len(lam)):
                if abs(lam[i] - lam[j]) <= sep:
                    out.append((i, j))
        return out


def eig(L, tol=DEFAULT_TOL):
    """Eigendecomposition of a real square matrix with conjugate repair."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {L.shape}")
    n = L.shape[0]
    try:
        w, V = sla.eig(L)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigFailure(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise EigFailure("eigenvalue iteration did not converge")
    scale = max(np.linalg.norm(L, 2), 1.0)
    imag_tol = 1e3 * np.finfo(float).eps * scale

    vals = []
    vecs = []
    used = np.zeros(n, dtype=bool)
    for i in np.argsort(-w.imag, kind="stable"):
        if used[i]:
            continue
        used[i] = True
        lam = w[i]
        if abs(lam.imag) <= imag_tol:
            v = V[:, i]
            # real eigenvalue of a real matrix: rotate the vector real
            j = int(np.argmax(np.abs(v)))
            v = (v * (abs(v[j]) / v[j])).real
            v = v / np.linalg.norm(v)
            if v[np.argmax(np.abs(v))] < 0:
                v = -v
            vals.append(complex(lam.real, 0.0))
            vecs.append(v.astype(complex))
            continue
        # pair with the unused eigenvalue closest to the conjugate
        cand = np.where(~used)[0]
        if cand.size == 0:
            raise EigFailure("unpaired complex eigenvalue")
        k = cand[np.argmin(np.abs(w[cand] - np.conj(lam)))]
        used[k] = True
        lam = 0.5 * (lam + np.conj(w[k]))
        if lam.imag < 0:
            lam = np.conj(lam)
            v = np.conj(V[:, i])
        else:
            v = V[:, i]
        v = _unit_phase(v)
        vals.extend([np.conj(lam), lam])
        vecs.extend([np.conj(v), v])

    vals = np.array(vals, dtype=complex)
    V0 = np.column_stack(vecs)
    order = np.lexsort((vals.imag, vals.real))
    vals = vals[order]
    V0 = V0[:, order]
    all_real = bool(np.all(vals.imag == 0.0))
    sep = tol.sep(scale)
    gaps = np.abs(vals[:, None] - vals[None, :]) + np.diag(np.full(n, np.inf))
    distinct = bool(n < 2 or gaps.min() > sep)
    vals.setflags(write=False)
    V0.setflags(write=False)
    return Eigenstructure(vals, V0, all_real, distinct)


@dataclass(frozen=True)
class NullBasis:
    """Orthonormal basis of ``ker [(A - lam I) B]`` split as ``[N1; N2]``."""

    lam: complex
    N1: np.ndarray
    N2: np.ndarray

    @property
    def N(self):
        return np.vstack([self.N1, self.N2])

    @property
    def dim(self):
        return self.N1.shape[1]

    def split(self, m):
        """``(N3, N4)``: top ``n - m`` rows and bottom ``m`` rows of ``N1``."""
        n = self.N1.shape[0]
        return self.N1[:n - m], self.N1[n - m:]

    def rows(self, idx):
        """Rows of ``N1`` at the given state indices."""
        return self.N1[list(idx)]


def _sv_threshold(s, tol):
    return tol.rank_rtol * (s[0] if s.size and s[0] > 0 else 1.0)


def null_basis(A, B, lam, tol=DEFAULT_TOL):
    """Kernel basis of ``S(lam) = [(A - lam I) B]`` via the SVD.

    Raises :class:`KernelDimensionUnexpected` unless the kernel has exactly
    ``q`` columns, i.e. unless ``S(lam)`` has full row rank.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    n, q = B.shape
    lam = complex(lam)
    if lam.imag == 0.0:
        S = np.hstack([A - lam.real * np.eye(n), B]).astype(float)
    else:
        S = np.hstack([A - lam * np.eye(n), B]).astype(complex)
    _, s, Vh = np.linalg.svd(S)
    rank = int(np.sum(s > _sv_threshold(s, tol)))
    dim = n + q - rank
    if dim != q:
        raise KernelDimensionUnexpected(
            f"kernel of [(A - lam I) B] at lam={lam:.6g} has dimension {dim}, "
            f"expected {q}")
    N = Vh[rank:].conj().T
    return NullBasis(lam, N[:n], N[n:])


def smallest_sv(M):
    """Smallest singular value of ``M``, counting implicit zeros of wide
    matrices (a ``k x p`` matrix with ``p > k`` returns 0)."""
    M = np.atleast_2d(M)
    if M.shape[1] == 0:
        return np.inf
    if M.shape[0] < M.shape[1]:
        return 0.0
    return np.linalg.svd(M, compute_uv=False)[-1]


def numerical_rank(M, tol=DEFAULT_TOL):
    M = np.atleast_2d(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > _sv_threshold(s, tol)))


def _fix_sign(h):
    j = int(np.argmax(np.abs(h) > 1e-14 * max(np.abs(h).max(), 1e-300)))
    if h[j] != 0:
        h = h * (abs(h[j]) / h[j])
    return h


def kernel_vector(M, tol=DEFAULT_TOL):
    """Unit vector ``h`` with ``M h`` ~ 0, or ``None`` if ``M`` has full
    column rank.

    The vector is the right singular vector of the smallest singular value,
    phase-normalized so its first nonzero entry is real positive.
    """
    M = np.atleast_2d(np.asarray(M))
    k, p = M.shape
    if p == 0:
        return None
    if k == 0:
        h = np.zeros(p, dtype=M.dtype)
        h[0] = 1
        return h
    _, s, Vh = np.linalg.svd(M)
    smin = s[-1] if k >= p else 0.0
    norm = s[0] if s.size else 0.0
    if smin > tol.rank_rtol * norm:
        return None
    h = Vh[-1].conj()
    return _fix_sign(h)


def kernel_basis(M, tol=DEFAULT_TOL):
    """Orthonormal basis (columns) of the numerical kernel of ``M``."""
    M = np.atleast_2d(np.asarray(M))
    k, p = M.shape
    if k == 0:
        return np.eye(p, dtype=M.dtype)
    _, s, Vh = np.linalg.svd(M)
    rank = int(np.sum(s > _sv_threshold(s, tol)))
    return Vh[rank:].conj().T


def _columns(columns):
    if isinstance(columns, np.ndarray) and columns.ndim == 2:
        M = columns
    else:
        cols = [np.asarray(c) for c in columns]
        if not cols:
            raise DimensionMismatch("need at least one vector")
        n = cols[0].shape
        if any(c.shape != n or c.ndim != 1 for c in cols):
            raise DimensionMismatch("vectors must share one length")
        M = np.column_stack(cols)
    return M


def is_independent(columns, tol=DEFAULT_TOL):
    """True iff the given vectors are linearly independent.

    Columns are normalized first, so the test measures geometry rather than
    scaling; independence means ``s_min > rank_rtol * s_max``.
    """
    M = _columns(columns)
    if M.shape[1] > M.shape[0]:
        return False
    norms = np.linalg.norm(M, axis=0)
    if np.any(norms == 0):
        return False
    s = np.linalg.svd(M / norms, compute_uv=False)
    return bool(s[-1] > tol.rank_rtol * s[0])


def independence_margin(columns):
    """Smallest singular value of the column-normalized stack."""
    M = _columns(columns)
    norms = np.linalg.norm(M, axis=0)
    if np.any(norms == 0):
        return 0.0
    return smallest_sv(M / norms)


def pbh_observable(A, C, lam, tol=DEFAULT_TOL):
    """PBH test at one point: ``rank [A - lam I; C] == n``."""
    A = np.asarray(A)
    C = np.atleast_2d(np.asarray(C))
    n = A.shape[0]
    M = np.vstack([A - complex(lam) * np.eye(n), C])
    return numerical_rank(M, tol) == n


def pbh_controllable(A, B, tol=DEFAULT_TOL):
    """PBH controllability: ``rank [A - lam I, B] == n`` at every eigenvalue."""
    A = np.asarray(A, dtype=float)
    B = np.atleast_2d(np.asarray(B))
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        M = np.hstack([A - lam * np.eye(n), B])
        if numerical_rank(M, tol) < n:
            return False
    return True
