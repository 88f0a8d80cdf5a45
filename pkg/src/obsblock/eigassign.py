"""Surgical eigenstructure assignment.

A closed-loop modal target is a set of triples ``(lam_i, v_i, z_i)`` with
``(A - lam_i I) v_i + B z_i = 0``.  If the ``v_i`` are independent, the gain
``F = Z V^{-1}`` gives ``F v_i = z_i`` and hence ``(A + B F) v_i = lam_i v_i``
for every ``i``.  Open-loop pairs carry ``z_i = 0``, so ``F`` annihilates
every eigenvector that is kept.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (CompletionFailed, InadmissibleTarget, NotDistinct,
                     ResidualTooLarge, SingularModalMatrix, Uncontrollable)
from .spectral import (DEFAULT_TOL, eig, independence_margin, is_independent,
                       null_basis, pbh_controllable, smallest_sv)

__all__ = ["ModalTarget", "GainMatrix", "open_loop_target", "complete_target",
           "gain_from_target", "place_eigenvalues", "conjugate_partners"]


@dataclass(frozen=True)
class ModalTarget:
    """Closed-loop eigenvalues ``lambdas`` with eigenvectors ``V`` (columns)
    and input directions ``Z`` (columns); ``modified[i]`` flags entries that
    differ from the open loop."""

    lambdas: np.ndarray
    V: np.ndarray
    Z: np.ndarray
    modified: np.ndarray
    H: np.ndarray = field(default=None, repr=False)

    @property
    def n(self):
        return len(self.lambdas)

    def modified_indices(self):
        return tuple(int(i) for i in np.flatnonzero(self.modified))


@dataclass(frozen=True)
class GainMatrix:
    F: np.ndarray
    provenance: str = ""
    target: ModalTarget = field(default=None, repr=False, compare=False)


def conjugate_partners(lambdas):
    """Map each index to the index of its conjugate (itself when real).

    Raises ``InadmissibleTarget`` if the set is not self-conjugate.
    """
    lambdas = np.asarray(lambdas, dtype=complex)
    partner = {}
    free = set(range(len(lambdas)))
    for i in range(len(lambdas)):
        if i not in free:
            continue
        free.discard(i)
        if lambdas[i].imag == 0.0:
            partner[i] = i
            continue
        hits = [j for j in sorted(free) if lambdas[j] == np.conj(lambdas[i])]
        if not hits:
            raise InadmissibleTarget(
                f"eigenvalue {lambdas[i]:.6g} has no conjugate partner")
        j = hits[0]
        free.discard(j)
        partner[i] = j
        partner[j] = i
    return partner


def open_loop_target(es, q):
    """The open-loop eigenstructure as a (trivially admissible) target."""
    n = len(es)
    return ModalTarget(np.array(es.eigenvalues), np.array(es.V0),
                       np.zeros((q, n), dtype=complex), np.zeros(n, bool),
                       np.zeros((q, n), dtype=complex))


def _check_admissible(A, B, lam, v, z, tol):
    n = A.shape[0]
    r = (A - lam * np.eye(n)) @ v + B @ z
    scale = (np.linalg.norm(A, 2) + 1.0) * np.linalg.norm(v)
    if np.linalg.norm(r) > tol.residual_rtol * scale:
        raise InadmissibleTarget(
            f"vector at lam={lam:.6g} is not attainable "
            f"(residual {np.linalg.norm(r):.3g})")


def _projection_maximizer(N1, selected):
    """Direction in colspace(N1) farthest from span(selected)."""
    Q, _ = np.linalg.qr(N1)
    if selected:
        S = np.column_stack(selected)
        U, s, _ = np.linalg.svd(S, full_matrices=False)
        U = U[:, s > 1e-12 * s[0]]
        P = Q - U @ (U.conj().T @ Q)
    else:
        P = Q
    _, _, Wh = np.linalg.svd(P)
    g = Wh[0].conj()
    return np.linalg.lstsq(N1, Q @ g, rcond=None)[0]


def complete_target(A, B, lambdas, fixed, tol=DEFAULT_TOL, bases=None):
    """Fill in eigenvectors for every eigenvalue not listed in ``fixed``.

    Parameters
    ----------
    A, B : arrays
        Open-loop state and input matrices.
    lambdas : sequence of complex
        All ``n`` closed-loop eigenvalues; must be self-conjugate.
    fixed : dict
        ``index -> (v, z, modified)`` for dictated entries.  These are
        passed through untouched.
    bases : dict, optional
        Precomputed :class:`~obsblock.spectral.NullBasis` per index.

    Free eigenvectors are chosen greedily from ``colspace N1(lam_k)``: the
    candidates are the columns of ``N1`` plus the direction of that column
    space farthest from the vectors already placed, and the candidate that
    maximizes the smallest singular value of the partial modal matrix wins.
    A seeded random search backs up the greedy pass.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    lambdas = np.asarray(lambdas, dtype=complex)
    n, q = B.shape
    if len(lambdas) != n:
        raise InadmissibleTarget(f"need {n} eigenvalues, got {len(lambdas)}")
    partner = conjugate_partners(lambdas)
    bases = dict(bases or {})

    V = np.zeros((n, n), dtype=complex)
    Z = np.zeros((q, n), dtype=complex)
    H = np.full((q, n), np.nan, dtype=complex)
    modified = np.ones(n, dtype=bool)
    done = np.zeros(n, dtype=bool)
    for i, entry in fixed.items():
        v, z = entry[0], entry[1]
        _check_admissible(A, B, lambdas[i], v, z, tol)
        V[:, i] = v
        Z[:, i] = z
        modified[i] = bool(entry[2]) if len(entry) > 2 else False
        done[i] = True
    for i in fixed:
        j = partner[i]
        if j != i and j in fixed:
            if not (np.allclose(V[:, j], np.conj(V[:, i]), rtol=0, atol=1e-12)
                    and np.allclose(Z[:, j], np.conj(Z[:, i]), rtol=0,
                                    atol=1e-12)):
                raise InadmissibleTarget(
                    f"entries {i} and {j} are not conjugate")

    def basis(i):
        if i not in bases:
            bases[i] = null_basis(A, B, lambdas[i], tol)
        return bases[i]

    # entries forced by a fixed conjugate partner
    for i in range(n):
        j = partner[i]
        if not done[i] and done[j]:
            V[:, i] = np.conj(V[:, j])
            Z[:, i] = np.conj(Z[:, j])
            done[i] = True

    groups = []
    for i in range(n):
        if done[i]:
            continue
        j = partner[i]
        if j < i and not done[j]:
            continue
        groups.append(i if j == i or lambdas[i].imag > 0 else j)

    def unit(v):
        return v / np.linalg.norm(v)

    selected = [unit(V[:, i]) for i in range(n) if done[i]]
    for i in groups:
        nb = basis(i)
        j = partner[i]
        hs = [np.eye(q)[:, c] for c in range(q)]
        hs.append(_projection_maximizer(nb.N1, selected))
        best, best_score = None, -1.0
        for h in hs:
            v = nb.N1 @ h
            nv = np.linalg.norm(v)
            if nv == 0:
                continue
            h = h / nv
            v = v / nv
            stack = selected + [v] + ([np.conj(v)] if j != i else [])
            score = smallest_sv(np.column_stack(stack))
            if score > best_score:
                best, best_score = h, score
        _place(V, Z, H, nb, i, j, best)
        selected.append(V[:, i])
        if j != i:
            selected.append(V[:, j])

    if groups and not is_independent(V, tol):
        rng = np.random.default_rng(tol.seed)
        best_V, best_margin = None, -1.0
        for _ in range(64):
            Vt, Zt, Ht = V.copy(), Z.copy(), H.copy()
            for i in groups:
                nb = basis(i)
                h = rng.standard_normal(q)
                if lambdas[i].imag != 0:
                    h = h + 1j * rng.standard_normal(q)
                h = h / np.linalg.norm(nb.N1 @ h)
                _place(Vt, Zt, Ht, nb, i, partner[i], h)
            margin = independence_margin(Vt)
            if margin > best_margin:
                best_V, best_margin = (Vt, Zt, Ht), margin
        V, Z, H = best_V
        if not is_independent(V, tol):
            raise CompletionFailed(
                "no independent completion found (smallest singular value "
                f"{best_margin:.3g})")
    for a in (V, Z, H, modified, lambdas):
        a.setflags(write=False)
    return ModalTarget(lambdas, V, Z, modified, H)


def _place(V, Z, H, nb, i, j, h):
    V[:, i] = nb.N1 @ h
    Z[:, i] = nb.N2 @ h
    H[:, i] = h
    if j != i:
        V[:, j] = np.conj(V[:, i])
        Z[:, j] = np.conj(Z[:, i])
        H[:, j] = np.conj(h)


def _real_form(target):
    """``(V_mod, Z_mod)``: each conjugate column pair replaced by its real and
    imaginary parts."""
    partner = conjugate_partners(target.lambdas)
    V = target.V
    Z = target.Z
    Vm = np.empty(V.shape)
    Zm = np.empty(Z.shape)
    for i, j in partner.items():
        if i == j:
            Vm[:, i] = V[:, i].real
            Zm[:, i] = Z[:, i].real
        elif i < j:
            if not (np.allclose(V[:, j], np.conj(V[:, i]), rtol=0, atol=1e-12)
                    and np.allclose(Z[:, j], np.conj(Z[:, i]), rtol=0,
                                    atol=1e-12)):
                raise InadmissibleTarget(
                    f"entries {i} and {j} are not conjugate")
            Vm[:, i], Vm[:, j] = V[:, i].real, V[:, i].imag
            Zm[:, i], Zm[:, j] = Z[:, i].real, Z[:, i].imag
    return Vm, Zm


def gain_from_target(A, B, target, tol=DEFAULT_TOL, provenance=""):
    """Real gain ``F = Z_mod V_mod^{-1}`` realizing a self-conjugate target."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if not is_independent(target.V, tol):
        raise SingularModalMatrix("closed-loop modal matrix is singular")
    Vm, Zm = _real_form(target)
    F = np.linalg.solve(Vm.T, Zm.T).T
    Fc = np.linalg.solve(target.V.T, target.Z.T).T
    fnorm = np.linalg.norm(F)
    residue = np.abs(Fc.imag).max() if Fc.size else 0.0
    if residue > 1e-8 * max(fnorm, 1.0):
        raise ResidualTooLarge(
            f"complex gain has imaginary residue {residue:.3g}")
    n = A.shape[0]
    Acl = A + B @ F
    scale = tol.residual_rtol * max(np.linalg.norm(A, 2), 1.0)
    for i in range(n):
        v = target.V[:, i]
        r = np.linalg.norm(Acl @ v - target.lambdas[i] * v) / np.linalg.norm(v)
        if r > scale:
            raise ResidualTooLarge(
                f"closed loop misses eigenpair {i} (lam={target.lambdas[i]:.6g},"
                f" residual {r:.3g})")
    F.setflags(write=False)
    return GainMatrix(F, provenance, target)


def place_eigenvalues(A, B, targets, tol=DEFAULT_TOL):
    """Gain placing the spectrum of ``A + B F`` at ``targets``.

    Targets that coincide with an open-loop eigenvalue keep the open-loop
    eigenvector (and ``F`` annihilates it); only the remaining eigenvectors
    are chosen freely.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    targets = np.asarray(targets, dtype=complex)
    n = A.shape[0]
    if len(targets) != n:
        raise InadmissibleTarget(f"need {n} targets, got {len(targets)}")
    if not pbh_controllable(A, B, tol):
        raise Uncontrollable("(A, B) is not controllable")
    scale = max(np.linalg.norm(A, 2), 1.0)
    sep = tol.sep(scale)
    order = np.lexsort((targets.imag, targets.real))
    targets = targets[order]
    gaps = np.abs(targets[:, None] - targets[None, :]) + np.diag(
        np.full(n, np.inf))
    if n > 1 and gaps.min() <= sep:
        raise NotDistinct("target eigenvalues must be pairwise distinct")
    conjugate_partners(targets)

    es = eig(A, tol)
    fixed = {}
    used = set()
    if es.distinct:
        for i, t in enumerate(targets):
            d = np.abs(es.eigenvalues - t)
            k = int(np.argmin(d))
            if d[k] <= tol.eig_match_atol and k not in used:
                used.add(k)
                # snap to the open-loop value so conjugate pairs stay exact
                targets[i] = es.eigenvalues[k]
                fixed[i] = (es.V0[:, k], np.zeros(B.shape[1], complex), False)
    target = complete_target(A, B, targets, fixed, tol)
    return gain_from_target(A, B, target, tol, provenance="place_eigenvalues")
