"""Independent checks of a designed gain.

Everything here recomputes from ``(L, B, C, F)`` alone: PBH ranks at the
closed-loop eigenvalues, a Krylov observability rank, a spectrum diff
against the open loop and a stability verdict.  A design routine's own
bookkeeping is never trusted.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .spectral import DEFAULT_TOL, Tolerances, eig, pbh_observable

__all__ = ["Stability", "Claims", "VerificationReport", "classify_stability",
           "verify_design", "unobservable_subspace", "observability_rank",
           "match_spectra", "MAX_OBS_N"]

MAX_OBS_N = 64


class Stability:
    """Verdicts for ``x' = -A x``."""

    STRICT = "Strict"
    MARGINAL = "Marginal"
    UNSTABLE = "Unstable"


def classify_stability(A, tol=DEFAULT_TOL):
    """Return ``(verdict, offending eigenvalues of A)`` for ``x' = -A x``.

    Strict: every eigenvalue of ``A`` has real part above the separation
    margin.  Marginal: exactly one eigenvalue sits at 0 (within the margin)
    and the rest are strict.  For an unstable verdict a single eigenvalue at
    0 is left out of the offending list.
    """
    A = np.asarray(A, dtype=float)
    ev = np.linalg.eigvals(A)
    sep = tol.sep(np.linalg.norm(A, 2))
    bad = ev[ev.real <= sep]
    if bad.size == 0:
        return Stability.STRICT, bad
    zero = np.abs(bad) <= sep
    if bad.size == 1 and zero[0]:
        return Stability.MARGINAL, bad
    if zero.sum() == 1:
        # a lone consensus mode is harmless; report the others
        bad = bad[~zero]
    return Stability.UNSTABLE, bad


def _orth(M, thresh):
    if M.shape[1] == 0:
        return M
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, s > thresh]


def _krylov(A, C, tol):
    """Orthonormal basis of ``span{C^T, A^T C^T, (A^T)^2 C^T, ...}``.

    Each power step is applied to the orthonormal basis of the previous new
    directions and re-orthogonalized against everything found so far.
    """
    A = np.asarray(A, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    scale = max(np.linalg.norm(A, 2), 1.0)
    Q = _orth(C.T, tol.rank_rtol * max(np.linalg.norm(C, 2), 1.0))
    new = Q
    while new.shape[1] and Q.shape[1] < n:
        W = A.T @ new
        for _ in range(2):
            W = W - Q @ (Q.T @ W)
        new = _orth(W, tol.rank_rtol * scale)
        Q = np.hstack([Q, new])
    return Q


def observability_rank(A, C, tol=DEFAULT_TOL):
    """Rank of the observability matrix of ``(C, A)`` (same for ``-A``)."""
    return _krylov(A, C, tol).shape[1]


def unobservable_subspace(mats, F, tol=DEFAULT_TOL):
    """Orthonormal basis (columns) of the unobservable subspace of
    ``(C, -(L + B F))``; shape ``n x 0`` when observable."""
    A = mats.closed_loop(F)
    Q = _krylov(A, mats.C, tol)
    n = A.shape[0]
    if Q.shape[1] == 0:
        return np.eye(n)
    U, _, _ = np.linalg.svd(Q, full_matrices=True)
    return U[:, Q.shape[1]:]


def match_spectra(open_ev, closed_ev):
    """Greedy pairing: each open-loop eigenvalue, in (real, imag) order,
    takes the nearest unmatched closed-loop one."""
    open_ev = np.asarray(open_ev, dtype=complex)
    closed_ev = list(np.asarray(closed_ev, dtype=complex))
    out = []
    for lam in sorted(open_ev, key=lambda z: (z.real, z.imag)):
        j = int(np.argmin([abs(lam - c) for c in closed_ev]))
        c = closed_ev.pop(j)
        out.append((complex(lam), complex(c), float(abs(lam - c))))
    return out


@dataclass(frozen=True)
class Claims:
    """Properties a design is expected to have.

    ``mode`` is an expected unobservable mode of ``-(L + B F)`` (i.e.
    ``-lambda_p``); ``observable_mode`` one that must be observable.
    ``preserved`` lists open-loop eigenvalue indices (sorted order) whose
    eigenvectors ``F`` must annihilate; ``zero_columns`` lists node ids
    (1-based) whose ``F`` columns must be exactly zero.  ``stability`` is
    ``None``, ``"Strict"`` or ``"Stable"`` (Strict or Marginal).
    """

    unobservable: bool = True
    mode: complex = None
    preserve_spectrum: bool = False
    preserved: tuple = ()
    stability: str = None
    zero_columns: tuple = ()
    observable_mode: complex = None


def _c(z):
    return [float(np.real(z)), float(np.imag(z))]


def _z(p):
    return complex(p[0], p[1])


@dataclass(frozen=True)
class VerificationReport:
    unobservable_modes: tuple
    obs_matrix_rank: int
    open_vs_closed_eigs: tuple
    preserved_count: int
    preserved_max_residual: float
    modified_vectors: tuple
    stability: str
    unstable_modes: tuple
    passed: bool
    failures: tuple = ()
    claims: Claims = field(default_factory=Claims)
    tolerances: Tolerances = DEFAULT_TOL

    def to_dict(self):
        c = asdict(self.claims)
        for k in ("mode", "observable_mode"):
            c[k] = None if c[k] is None else _c(c[k])
        c["preserved"] = list(c["preserved"])
        c["zero_columns"] = list(c["zero_columns"])
        return {
            "pass": self.passed,
            "unobservable_modes": [_c(z) for z in self.unobservable_modes],
            "obs_matrix_rank": self.obs_matrix_rank,
            "open_vs_closed_eigs": [[_c(a), _c(b), d]
                                    for a, b, d in self.open_vs_closed_eigs],
            "preserved_vectors": {"count": self.preserved_count,
                                  "max_residual": self.preserved_max_residual},
            "modified_vectors": list(self.modified_vectors),
            "stability": self.stability,
            "unstable_modes": [_c(z) for z in self.unstable_modes],
            "failures": list(self.failures),
            "claims": c,
            "tolerances": asdict(self.tolerances),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        c = dict(d["claims"])
        for k in ("mode", "observable_mode"):
            c[k] = None if c[k] is None else _z(c[k])
        c["preserved"] = tuple(c["preserved"])
        c["zero_columns"] = tuple(c["zero_columns"])
        pv = d["preserved_vectors"]
        return cls(
            tuple(_z(p) for p in d["unobservable_modes"]),
            d["obs_matrix_rank"],
            tuple((_z(a), _z(b), float(x))
                  for a, b, x in d["open_vs_closed_eigs"]),
            pv["count"], pv["max_residual"],
            tuple(d["modified_vectors"]), d["stability"],
            tuple(_z(p) for p in d["unstable_modes"]), bool(d["pass"]),
            tuple(d["failures"]), Claims(**c), Tolerances(**d["tolerances"]))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _near(z, values, atol):
    return any(abs(z - v) <= atol * max(1.0, abs(z)) for v in values)


def verify_design(mats, F, claims=None, tol=DEFAULT_TOL):
    """Check a gain against ``claims``.

    Parameters
    ----------
    mats : SystemMatrices
    F : (q, n) real array
    claims : Claims, optional
        Defaults to "some mode is unobservable".
    tol : Tolerances

    Returns
    -------
    VerificationReport
    """
    claims = Claims() if claims is None else claims
    F = np.asarray(F)
    if np.iscomplexobj(F):
        if np.any(F.imag != 0):
            raise DimensionMismatch("F must be real")
        F = F.real
    F = F.astype(float)
    if F.shape != (mats.q, mats.n):
        raise DimensionMismatch(
            f"F must be {mats.q}x{mats.n}, got {F.shape}")
    n = mats.n
    A = mats.closed_loop(F)
    scale = max(np.linalg.norm(mats.L, 2), 1.0)
    closed = np.linalg.eigvals(A)

    unobs = []
    for lam in sorted(closed, key=lambda z: (z.real, z.imag)):
        mode = -complex(lam)
        if _near(mode, unobs, tol.eig_match_atol):
            continue
        if not pbh_observable(-A, mats.C, mode, tol):
            unobs.append(mode)
    rank = observability_rank(A, mats.C, tol) if n <= MAX_OBS_N else -1

    es = eig(mats.L, tol)
    pairs = match_spectra(es.eigenvalues, closed)

    Fn = F
    res = [float(np.linalg.norm(Fn @ es.V0[:, i])) for i in claims.preserved]
    max_res = max(res, default=0.0)
    modified = tuple(i for i in range(n)
                     if np.linalg.norm(F @ es.V0[:, i])
                     > tol.residual_rtol * scale)

    verdict, bad = classify_stability(A, tol)

    failures = []
    if claims.unobservable and not unobs:
        failures.append("observable at all modes")
    if claims.unobservable and rank == n:
        failures.append("observability matrix has full rank")
    if claims.mode is not None and not _near(complex(claims.mode), unobs,
                                             tol.eig_match_atol):
        failures.append(f"mode {complex(claims.mode):.6g} is observable")
    if claims.observable_mode is not None and _near(
            complex(claims.observable_mode), unobs, tol.eig_match_atol):
        failures.append(
            f"mode {complex(claims.observable_mode):.6g} is unobservable")
    if claims.preserve_spectrum:
        worst = max(d for _, _, d in pairs)
        if worst > tol.eig_match_atol:
            failures.append(f"spectrum moved by {worst:.3g}")
    if max_res > tol.residual_rtol * scale:
        failures.append(f"preserved eigenvector residual {max_res:.3g}")
    if claims.stability == Stability.STRICT and verdict != Stability.STRICT:
        failures.append(f"stability is {verdict}, expected Strict")
    if claims.stability == "Stable" and verdict == Stability.UNSTABLE:
        failures.append("closed loop is unstable")
    if claims.zero_columns:
        cols = F[:, [v - 1 for v in claims.zero_columns]]
        if np.any(cols != 0):
            failures.append("nonzero gain at inaccessible nodes")

    return VerificationReport(
        tuple(unobs), rank, tuple(pairs), len(res), max_res, modified,
        verdict, tuple(complex(b) for b in bad)
        if verdict == Stability.UNSTABLE else (), not failures,
        tuple(failures), claims, tol)
