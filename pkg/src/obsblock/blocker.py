"""Observability-blocking state feedback.

The pair ``(C, -(L + B F))`` loses observability of the mode ``-lam_p`` as
soon as ``L + B F`` has an eigenvector at ``lam_p`` that vanishes on every
measured entry.  The designs below build such an eigenvector from
``ker [(L - lam_p I) B]``, keep every other eigenvalue, and keep all but a
handful of the open-loop eigenvectors.

Internally the state is re-indexed so that measured nodes come last; gains
and vectors are mapped back before they are returned.
"""

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .eigassign import GainMatrix, complete_target, gain_from_target
from .errors import (AlreadyObservable, CompletionFailed, ConjugateDegenerate,
                     EnableInfeasible, KernelInfeasible, NotDistinct,
                     NotDistinctReal, ObsBlockError, RepeatedEigenvalues,
                     ResidualTooLarge, TooManyModes, Uncontrollable)
from .netmodel import SystemMatrices
from .spectral import (DEFAULT_TOL, eig, independence_margin, is_independent,
                       kernel_basis, kernel_vector, null_basis,
                       pbh_controllable, pbh_observable)

__all__ = ["Case", "BlockingDesign", "algorithm1", "algorithm2",
           "block_modes", "enable_mode", "select_mode", "mode_index",
           "mode_spectrum"]


class Case(str, enum.Enum):
    DIRECT = "Direct"
    FALLBACK = "Fallback"


@dataclass(frozen=True)
class BlockingDesign:
    """Result of a blocking (or enabling) design.

    ``lambda_p`` is the eigenvalue of ``L + B F`` whose eigenvector
    ``vhat_p`` is zero on the measured nodes; the unobservable mode of the
    dynamics ``x' = -(L + B F) x`` is ``-lambda_p``.  ``modified`` lists
    open-loop eigenvalue indices (sorted order) whose eigenvectors changed.
    """

    F: GainMatrix
    lambda_p: complex
    modified: tuple
    vhat_p: np.ndarray
    case: Case
    eigenvalues: np.ndarray = field(default=None, repr=False)
    lambdas: tuple = ()
    stages: tuple = field(default=(), repr=False)
    cut: object = field(default=None, repr=False)

    @property
    def gain(self):
        return self.F.F

    @property
    def unobservable_mode(self):
        return None if self.lambda_p is None else -self.lambda_p

    @property
    def preserved(self):
        n = len(self.eigenvalues)
        return tuple(i for i in range(n) if i not in self.modified)


def _permutation(mats):
    meas = list(mats.measurement_indices)
    rest = [i for i in range(mats.n) if i not in set(meas)]
    return np.array(rest + meas)


def _check_spectrum(es, scale, tol, need_real):
    if not es.distinct:
        groups = es.clusters(tol.sep(scale))
        vals = sorted({f"{es.eigenvalues[i]:.6g}" for g in groups for i in g})
        raise RepeatedEigenvalues(
            "open-loop eigenvalues are not distinct: " + ", ".join(vals))
    if need_real and not es.all_real:
        raise NotDistinctReal(
            "algorithm1 needs a real spectrum; use algorithm2")


def _blocking_direction(nb, m, lam, tol):
    """Coefficient vector ``h`` with ``N4 h = 0`` (and, for complex ``lam``,
    ``N1 h`` independent of its conjugate)."""
    n = nb.N1.shape[0]
    N4 = nb.N1[n - m:]
    if lam.imag == 0.0:
        h = kernel_vector(N4, tol)
        if h is None:
            raise KernelInfeasible(
                f"N4({lam.real:.6g}) has full column rank; more actuators "
                "are needed")
        return h
    K = kernel_basis(N4, tol)
    if K.shape[1] == 0:
        raise KernelInfeasible(
            f"N4({lam:.6g}) has full column rank; more actuators are needed")
    cands = [K[:, j] for j in range(K.shape[1])]
    for a, b in itertools.combinations(range(K.shape[1]), 2):
        cands.append((K[:, a] + 1j * K[:, b]) / np.sqrt(2))
    best, best_margin = None, -1.0
    for g in cands:
        v = nb.N1 @ g
        margin = independence_margin([v, np.conj(v)])
        if margin > best_margin + 1e-12:
            best, best_margin = g, margin
    if not is_independent([nb.N1 @ best, np.conj(nb.N1 @ best)], tol):
        raise ConjugateDegenerate(
            f"blocking vector at lam={lam:.6g} is real up to phase, so it "
            "cannot be paired with its conjugate; add an actuation node "
            "(q = m + 2 is sufficient)")
    return best


def _enabling_direction(nb, m, lam, tol):
    n = nb.N1.shape[0]
    N4 = nb.N1[n - m:]
    _, s, Wh = np.linalg.svd(N4)
    if s.size == 0 or s[0] <= tol.rank_rtol * max(np.linalg.norm(nb.N1), 1.0):
        raise EnableInfeasible(
            f"N4({lam:.6g}) vanishes: no actuation pattern exposes this mode")
    h = Wh[0].conj()
    if lam.imag != 0.0:
        v = nb.N1 @ h
        if not is_independent([v, np.conj(v)], tol):
            raise EnableInfeasible(
                f"enabling vector at lam={lam:.6g} is real up to phase")
    return h


def _removal_sets(es, candidates, max_groups=4):
    """Conjugation-closed groups of candidate indices, smallest first."""
    seen = set()
    groups = []
    for i in candidates:
        j = es.conjugate_index(i)
        key = tuple(sorted({i, j}))
        if key in seen or j not in candidates:
            continue
        seen.add(key)
        groups.append(key)
    for r in range(1, max_groups + 1):
        combos = [tuple(sorted(sum(c, ()))) for c in
                  itertools.combinations(groups, r)]
        yield from sorted(combos, key=len)


def _choose_removal(es, Vhat0, new, protected, tol):
    """Smallest conjugation-closed set of open-loop eigenvectors whose
    removal leaves ``Vhat0`` independent.

    Among minimal sets whose conditioning is within a factor 1e3 of the best,
    the one containing the fastest mode (largest real part) is taken.
    """
    n = Vhat0.shape[1]
    cands = [i for i in range(n) if i not in new and i not in protected]
    by_size = {}
    for R in _removal_sets(es, cands):
        keep = [i for i in range(n) if i not in R]
        if is_independent(Vhat0[:, keep], tol):
            by_size.setdefault(len(R), []).append(
                (R, independence_margin(Vhat0[:, keep])))
        if by_size and len(R) > min(by_size):
            break
    if not by_size:
        raise CompletionFailed(
            "no set of open-loop eigenvectors can be released to keep the "
            "modal matrix independent; more actuators are needed")
    options = by_size[min(by_size)]
    best_margin = max(mg for _, mg in options)
    options = [(R, mg) for R, mg in options if mg >= 1e-3 * best_margin]
    options.sort(key=lambda o: (-max(es.eigenvalues[i].real for i in o[0]),
                                -o[1]))
    return options[0][0]


def _design(mats, p, tol, *, need_real=False, enable=False, protected=(),
            provenance="algorithm2", check_controllable=True):
    n, m, q = mats.n, mats.m, mats.q
    perm = _permutation(mats)
    Lp = mats.L[np.ix_(perm, perm)]
    Bp = mats.B[perm]
    scale = max(np.linalg.norm(Lp, 2), 1.0)
    es = eig(Lp, tol)
    _check_spectrum(es, scale, tol, need_real)
    if check_controllable and not pbh_controllable(-Lp, Bp, tol):
        raise Uncontrollable("(-L, B) is not controllable")
    if not 0 <= p < n:
        raise IndexError(f"eigenvalue index {p} outside 0..{n - 1}")
    lam = complex(es.eigenvalues[p])
    pc = es.conjugate_index(p)
    nb = null_basis(Lp, Bp, lam, tol)
    if enable:
        h = _enabling_direction(nb, m, lam, tol)
    else:
        h = _blocking_direction(nb, m, lam, tol)
    v = nb.N1 @ h
    nv = np.linalg.norm(v)
    h = h / nv
    v = v / nv
    z = nb.N2 @ h

    new = {p: (v, z, True)}
    if pc != p:
        new[pc] = (np.conj(v), np.conj(z), True)
    Vhat0 = np.array(es.V0)
    for i, (vi, _, _) in new.items():
        Vhat0[:, i] = vi
    zero = np.zeros(q, dtype=complex)
    if is_independent(Vhat0, tol):
        case = Case.DIRECT
        released = ()
    else:
        case = Case.FALLBACK
        released = _choose_removal(es, Vhat0, set(new), set(protected), tol)
    fixed = dict(new)
    for i in range(n):
        if i not in new and i not in released:
            fixed[i] = (es.V0[:, i], zero, False)
    target = complete_target(Lp, Bp, es.eigenvalues, fixed, tol,
                             bases={p: nb})
    gain = gain_from_target(Lp, Bp, target, tol, provenance=provenance)

    F = np.zeros((q, n))
    F[:, perm] = gain.F
    F.setflags(write=False)
    vhat = np.zeros(n, dtype=complex)
    vhat[perm] = v
    if lam.imag == 0.0:
        vhat = vhat.real
    design = BlockingDesign(
        GainMatrix(F, provenance, target), lam if lam.imag else lam.real,
        tuple(sorted(set(new) | set(released))), vhat, case,
        np.array(es.eigenvalues))
    _check_design(mats, design, tol, blocking=not enable)
    return design


def _check_design(mats, design, tol, blocking=True):
    v = design.vhat_p
    nv = np.linalg.norm(v)
    scale = max(np.linalg.norm(mats.L, 2), 1.0)
    r = np.linalg.norm(mats.closed_loop(design.gain) @ v - design.lambda_p * v)
    if r > tol.residual_rtol * scale * nv:
        raise ResidualTooLarge(f"blocking eigenpair residual {r:.3g}")
    if blocking:
        y = np.linalg.norm(mats.C @ v)
        if y > tol.residual_rtol * nv:
            raise ResidualTooLarge(f"measured entries of vhat_p reach {y:.3g}")


def algorithm1(mats, p, tol=DEFAULT_TOL):
    """Block the mode ``-lam_p`` for a distinct, real open-loop spectrum.

    Parameters
    ----------
    mats : SystemMatrices
    p : int
        Index of ``lam_p`` in the sorted open-loop spectrum
        (``spectral.eig(mats.L).eigenvalues``).
    tol : Tolerances

    Returns
    -------
    BlockingDesign
        ``case`` is ``Direct`` when only ``v_p`` changes and ``Fallback``
        when a second eigenvector ``v_k`` had to be released.
    """
    return _design(mats, p, tol, need_real=True, provenance="algorithm1")


def algorithm2(mats, p, tol=DEFAULT_TOL):
    """Block the mode ``-lam_p`` for any distinct open-loop spectrum.

    A complex ``lam_p`` modifies the conjugate eigenvector pair together and
    generally needs ``q >= m + 2`` actuators; if the blocking vector comes
    out real up to phase, :class:`ConjugateDegenerate` is raised.
    """
    return _design(mats, p, tol, provenance="algorithm2")


def block_modes(mats, indices, tol=DEFAULT_TOL):
    """Block several modes by stacking single-mode designs.

    Each stage treats the current closed loop as its open loop and may not
    release the eigenvectors blocked by earlier stages.
    """
    n, m, q = mats.n, mats.m, mats.q
    es0 = eig(mats.L, tol)
    wanted = []
    for idx in indices:
        pair = {int(idx), es0.conjugate_index(int(idx))}
        if not any(pair & set(w) for w in wanted):
            wanted.append(tuple(sorted(pair)))
    if sum(len(w) for w in wanted) > n - m:
        raise TooManyModes(
            f"at most n - m = {n - m} modes can be made unobservable")
    F = np.zeros((q, n))
    if not wanted:
        F.setflags(write=False)
        return BlockingDesign(GainMatrix(F, "block_modes"), None, (), None,
                              Case.DIRECT, np.array(es0.eigenvalues))
    stages = []
    modified = set()
    blocked = []
    for s, group in enumerate(wanted):
        current = SystemMatrices(mats.closed_loop(F), mats.B, mats.C)
        es = eig(current.L, tol)
        lam0 = es0.eigenvalues[group[-1]]
        p = es.index_of(lam0, atol=tol.eig_match_atol)
        protected = set()
        for b in blocked:
            k = es.index_of(b, atol=tol.eig_match_atol)
            protected |= {k, es.conjugate_index(k)}
        try:
            d = _design(current, p, tol, protected=protected,
                        provenance="block_modes")
        except ObsBlockError as exc:
            raise type(exc)(f"stage {s}: {exc}") from exc
        stages.append(d)
        F = F + d.gain
        blocked.append(lam0)
        modified |= {es0.index_of(es.eigenvalues[i]) for i in d.modified}
    F.setflags(write=False)
    last = stages[-1]
    Acl = -mats.closed_loop(F)
    for lam in blocked:
        if pbh_observable(Acl, mats.C, -lam, tol):
            raise ResidualTooLarge(f"mode {-lam:.6g} did not stay blocked")
    return BlockingDesign(
        GainMatrix(F, "block_modes"), last.lambda_p, tuple(sorted(modified)),
        last.vhat_p, Case.FALLBACK if any(d.case == Case.FALLBACK
                                          for d in stages) else Case.DIRECT,
        np.array(es0.eigenvalues), tuple(blocked), tuple(stages))


def enable_mode(mats, p, tol=DEFAULT_TOL):
    """Make an open-loop unobservable mode ``-lam_p`` observable."""
    es = eig(mats.L, tol)
    lam = es.eigenvalues[p]
    if pbh_observable(-mats.L, mats.C, -lam, tol):
        raise AlreadyObservable(f"mode {-lam:.6g} is already observable")
    # the permuted spectrum sorts identically, so p carries over
    design = _design(mats, p, tol, enable=True, provenance="enable_mode")
    if not pbh_observable(-mats.closed_loop(design.gain), mats.C, -lam, tol):
        raise ResidualTooLarge(f"mode {-lam:.6g} is still unobservable")
    return design


def select_mode(mats, tol=DEFAULT_TOL, candidates=None, real_only=True):
    """Pick a mode to block.

    Chooses, among ``candidates`` (default: all indices), the real eigenvalue
    whose ``N4`` has the largest smallest singular value, i.e. the most
    sharply defined blocking direction.  The consensus eigenvalue 0 is only
    returned when nothing else qualifies.
    """
    perm = _permutation(mats)
    Lp = mats.L[np.ix_(perm, perm)]
    Bp = mats.B[perm]
    es = eig(Lp, tol)
    idx = range(len(es)) if candidates is None else candidates
    scale = max(np.linalg.norm(Lp, 2), 1.0)
    scored = []
    for i in idx:
        lam = es.eigenvalues[i]
        if real_only and lam.imag != 0.0:
            continue
        if lam.imag < 0:
            continue
        try:
            nb = null_basis(Lp, Bp, lam, tol)
        except ObsBlockError:
            continue
        _, N4 = nb.split(mats.m)
        s = np.linalg.svd(N4, compute_uv=False)
        margin = s[-1] if s.size else 0.0
        is_zero = abs(lam) <= tol.sep(scale)
        scored.append((is_zero, -margin, i))
    if not scored:
        raise NotDistinct("no admissible mode to block")
    scored.sort()
    return scored[0][2]


def mode_index(mats, value, tol=DEFAULT_TOL):
    """Index (as used by the designs) of the eigenvalue of ``mats.L``
    nearest ``value``; raises ``ValueError`` beyond ``eig_match_atol``."""
    perm = _permutation(mats)
    es = eig(mats.L[np.ix_(perm, perm)], tol)
    return es.index_of(value, atol=max(tol.eig_match_atol, 1e-3 * max(
        1.0, abs(complex(value)))))


def mode_spectrum(mats, tol=DEFAULT_TOL):
    """Open-loop eigenvalues in the order the design indices refer to."""
    perm = _permutation(mats)
    return eig(mats.L[np.ix_(perm, perm)], tol).eigenvalues
