"""Blocking designs driven by a vertex cutset, optionally restricted to an
accessible region of the network.

The cutset acts as a surrogate measurement set: a closed-loop eigenvector
that vanishes on the cut also vanishes on everything beyond it, provided the
blocked eigenvalue avoids the spectrum of the far-side grounded Laplacian.
"""

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .blocker import BlockingDesign, _design, mode_index, mode_spectrum
from .errors import (AccessibleNotStronglyConnected, EscalationExhausted,
                     InsufficientActuators, NoAdmissibleMode, ObsBlockError,
                     ResidualTooLarge, Uncontrollable, ValidationError)
from .netmodel import SystemMatrices, build_matrices, laplacian
from .netmodel import indicator_columns
from .spectral import DEFAULT_TOL, eig, pbh_controllable, pbh_observable
from .eigassign import place_eigenvalues
from .verify import Stability, classify_stability
from .topology import (grounded_spectrum_gap, induced_subgraph,
                       min_vertex_cut, partition_blocks)

__all__ = ["RegionalDesign", "Stability", "classify_stability",
           "cutset_design", "regional_design", "regional_stable_design",
           "default_d0"]


@dataclass(frozen=True)
class RegionalDesign:
    """Gain ``F = [Ftilde 0]`` built on the accessible-region model.

    ``accessible`` lists the original ids in the column order of ``Ftilde``;
    ``vtilde_p`` is the accessible-model eigenvector at ``lambda_p``.
    """

    F: np.ndarray
    Ftilde: np.ndarray
    Ftilde1: np.ndarray
    Ftilde2: np.ndarray
    d: float
    cut: object
    lambda_p: complex
    vtilde_p: np.ndarray
    accessible: tuple
    stable: bool
    stability: str = Stability.UNSTABLE
    unstable_modes: tuple = ()
    iterations: int = 1
    modified: tuple = ()
    blocking: BlockingDesign = field(default=None, repr=False)

    @property
    def gain(self):
        return self.F

    @property
    def unobservable_mode(self):
        return -self.lambda_p

    @property
    def vhat_p(self):
        """``vtilde_p`` padded with zeros at the inaccessible nodes."""
        n = self.F.shape[1]
        v = np.zeros(n, dtype=self.vtilde_p.dtype)
        v[np.array(self.accessible) - 1] = self.vtilde_p
        return v


def _check_actuators(q, k, all_real, what):
    need = k + 1 if all_real else k + 2
    if q < need:
        raise InsufficientActuators(
            f"{what} needs at least {need} actuators (cutset size {k}), "
            f"have {q}")


def _order_modes(lams, admissible, prefer):
    """Candidate indices: admissible ones, sorted by preference."""
    idx = [i for i in range(len(lams)) if admissible[i] and lams[i].imag >= 0]
    if prefer == "fast":
        idx.sort(key=lambda i: (-lams[i].real, -lams[i].imag))
    else:
        # nonzero modes first; 0 is always admissible but makes a poor target
        idx.sort(key=lambda i: (abs(lams[i]) < 1e-9, -lams[i].real))
    return idx


def _block(mats, p, tol, shifted):
    # controllability is feedback invariant; a shifted model with large gains
    # would only fail the rank test numerically
    return _design(mats, p, tol, provenance="algorithm2",
                   check_controllable=not shifted)


def _block_first(mats, order, tol, real_only, shifted):
    """Run the blocker on candidate indices until one succeeds."""
    lams = mode_spectrum(mats, tol)
    last = None
    for p in order:
        if real_only and lams[p].imag != 0.0:
            continue
        try:
            return _block(mats, p, tol, shifted)
        except Uncontrollable:
            raise
        except ObsBlockError as exc:
            last = exc
    if last is not None:
        raise last
    raise NoAdmissibleMode("no eigenvalue clears the grounded-spectrum gap")


def _admissible(mats, block, tol):
    lams = mode_spectrum(mats, tol)
    scale = max(np.linalg.norm(mats.L, 2), 1.0)
    return lams, [grounded_spectrum_gap(block, lam, tol, scale=scale)
                  for lam in lams]


def _select(mats, block, tol, mode_value, prefer, real_only, shifted=False):
    lams, ok = _admissible(mats, block, tol)
    if mode_value is not None:
        p = mode_index(mats, mode_value, tol)
        if not ok[p]:
            raise NoAdmissibleMode(
                f"{lams[p]:.6g} is an eigenvalue of the far-side block")
        return _block(mats, p, tol, shifted)
    order = _order_modes(lams, ok, prefer)
    return _block_first(mats, order, tol, real_only, shifted)


def cutset_design(model, tol=DEFAULT_TOL, mode_value=None):
    """Block observability at every measurement node using a vertex cutset.

    The design runs on the model whose measurements are the cut vertices,
    which needs only ``|vcut| + 2`` actuators (``|vcut| + 1`` for a real
    spectrum) however many measurement nodes there are.

    Returns
    -------
    BlockingDesign
        With ``cut`` set to the partition used.
    """
    mats = build_matrices(model)
    if not pbh_controllable(-mats.L, mats.B, tol):
        raise Uncontrollable("(-L, B) is not controllable")
    cut = min_vertex_cut(model.graph, model.actuation, model.measurement)
    es = eig(mats.L, tol)
    _check_actuators(mats.q, len(cut.vcut), es.all_real, "cutset design")
    blocks = partition_blocks(mats, cut)
    surrogate = mats.with_output(indicator_columns(mats.n, cut.vcut).T)
    real_only = mats.q < len(cut.vcut) + 2
    design = _select(surrogate, blocks.block("V2", "V2"), tol, mode_value,
                     "margin", real_only)
    Acl = -mats.closed_loop(design.gain)
    if pbh_observable(Acl, mats.C, -design.lambda_p, tol):
        raise ResidualTooLarge("cutset design left the mode observable at "
                               "the measurement nodes")
    return dataclasses.replace(design, cut=cut)


class _Region:
    """Accessible-region model: induced Laplacian, actuators, cut outputs."""

    def __init__(self, model, tol):
        n = model.n
        acc = set(range(1, n + 1)) if model.accessible is None \
            else set(model.accessible)
        if not set(model.actuation) <= acc:
            raise ValidationError("actuation nodes must be accessible",
                                  "accessible")
        self.mats = build_matrices(model)
        self.cut = min_vertex_cut(model.graph, model.actuation,
                                  model.measurement, accessible=acc)
        sub = induced_subgraph(model.graph, acc)
        if not sub.graph.is_strongly_connected():
            raise AccessibleNotStronglyConnected(
                "the subgraph induced by the accessible nodes is not "
                "strongly connected")
        self.ids = sub.ids
        local = {v: j + 1 for j, v in enumerate(sub.ids)}
        Lt = laplacian(sub.graph)
        Bt = indicator_columns(len(sub.ids), [local[v]
                                              for v in model.actuation])
        Ct = indicator_columns(len(sub.ids),
                               [local[v] for v in self.cut.vcut]).T
        self.local = SystemMatrices(Lt, Bt, Ct)
        if not pbh_controllable(-Lt, Bt, tol):
            raise Uncontrollable("(-Ltilde, Btilde) is not controllable")
        v3 = [local[v] - 1 for v in self.cut.v3]
        self.V3V3 = Lt[np.ix_(v3, v3)]
        self.model = model

    def pad(self, Ftilde):
        F = np.zeros((self.mats.q, self.mats.n))
        F[:, np.array(self.ids) - 1] = Ftilde
        F.setflags(write=False)
        return F


def _finish(region, F1, blocking, d, tol, iterations=1):
    F2 = np.array(blocking.gain)
    Ft = F1 + F2
    F = region.pad(Ft)
    mats = region.mats
    design = RegionalDesign(
        F, Ft, F1, F2, d, region.cut, blocking.lambda_p, blocking.vhat_p,
        region.ids, False, iterations=iterations,
        modified=blocking.modified, blocking=blocking)
    # the padded eigenvector must carry over to the full network
    v = design.vhat_p
    A = mats.closed_loop(F)
    scale = max(np.linalg.norm(mats.L, 2), 1.0)
    r = np.linalg.norm(A @ v - design.lambda_p * v)
    if r > tol.residual_rtol * scale * np.linalg.norm(v):
        raise ResidualTooLarge(f"padded eigenvector residual {r:.3g}")
    if pbh_observable(-A, mats.C, -design.lambda_p, tol):
        raise ResidualTooLarge("regional design left the mode observable at "
                               "the measurement nodes")
    verdict, bad = classify_stability(A, tol)
    return dataclasses.replace(
        design, stable=verdict != Stability.UNSTABLE, stability=verdict,
        unstable_modes=tuple(complex(b) for b in bad)
        if verdict == Stability.UNSTABLE else ())


def regional_design(model, tol=DEFAULT_TOL, mode_value=None):
    """Blocking gain that only reads the states of accessible nodes.

    No stability guarantee: ``stable`` reports whether ``-(L + B F)`` is
    (marginally) stable and ``unstable_modes`` lists eigenvalues of
    ``L + B F`` that are not.
    """
    region = _Region(model, tol)
    q = region.mats.q
    k = len(region.cut.vcut)
    es = eig(region.local.L, tol)
    _check_actuators(q, k, es.all_real, "regional design")
    blocking = _select(region.local, region.V3V3, tol, mode_value, "fast",
                       q < k + 2)
    F1 = np.zeros((q, len(region.ids)))
    return _finish(region, F1, blocking, 0.0, tol)


def default_d0(L, inaccessible=None):
    """Initial shift threshold ``1 + max L_ii``.

    The maximum runs over the inaccessible rows when they are given: their
    diagonal bounds (Gershgorin) how strongly the slow subsystem is driven,
    while the accessible diagonal only sets how far the shift has to push.
    """
    diag = np.diag(np.asarray(L, dtype=float))
    if inaccessible is not None:
        idx = [v - 1 for v in inaccessible]
        diag = diag[idx] if idx else np.zeros(1)
    return 1.0 + float(np.max(diag))


def _shift_targets(lams, d, avoid, sep, nudge, step=1.0):
    """Move every eigenvalue with real part <= d to distinct reals > d,
    spaced ``step`` apart."""
    keep = [lam for lam in lams if lam.real > d]
    slow = sorted((lam for lam in lams if lam.real <= d),
                  key=lambda z: (z.real, z.imag))
    taken = [complex(z) for z in keep] + [complex(z) for z in avoid]
    out = list(keep)
    t = d
    for _ in slow:
        t = t + step
        while any(abs(t - z) <= max(sep, nudge) for z in taken):
            t = t + nudge
        taken.append(complex(t))
        out.append(complex(t))
    return np.array(out, dtype=complex)


def _place_shift(Lt, Bt, lams, d, avoid, tol):
    """Shift gain; unit spacing first, then spacing ``d / k`` when closely
    packed targets far from the open-loop spectrum leave too little room for
    independent eigenvectors."""
    scale = max(np.linalg.norm(Lt, 2), 1.0)
    nudge = max(1e-3, 10 * tol.sep(scale))
    k = int(np.sum(np.asarray(lams).real <= d))
    steps = [1.0]
    if k > 1 and d / k > 1.0:
        steps.append(d / k)
    for step in steps:
        targets = _shift_targets(lams, d, avoid, tol.sep(scale), nudge, step)
        try:
            return targets, place_eigenvalues(Lt, Bt, targets, tol)
        except (InsufficientActuators, Uncontrollable):
            raise
        except ObsBlockError as exc:
            err = exc
    raise err


def regional_stable_design(model, d0=None, tol=DEFAULT_TOL, max_iters=20,
                           mode_value=None):
    """Regional blocking design with a stable full closed loop.

    Each round first shifts every accessible-model eigenvalue with real part
    at most ``d`` beyond ``d`` (gain ``Ftilde1``), then blocks a mode of the
    shifted model (gain ``Ftilde2``).  A fast enough accessible region
    decouples from the inaccessible one, so ``d`` doubles until
    ``-(L + B F)`` is strictly stable.

    Parameters
    ----------
    model : NetworkModel
    d0 : float, optional
        Initial threshold; defaults to ``1 + max diag(L)``.
    tol : Tolerances
    max_iters : int
        Number of thresholds tried.
    mode_value : complex, optional
        Blocked eigenvalue of the shifted accessible model; by default the
        fastest one clearing the gap test.
    """
    region = _Region(model, tol)
    Lt, Bt = region.local.L, region.local.B
    q, k = Bt.shape[1], len(region.cut.vcut)
    # shifted targets are real; complex survivors need the larger budget
    lams0 = eig(Lt, tol).eigenvalues
    d = default_d0(region.mats.L, region.cut.v4) if d0 is None \
        else float(d0)
    if not d >= 0:
        raise ValueError("d0 must be nonnegative")
    scale = max(np.linalg.norm(Lt, 2), 1.0)
    block_ev = np.linalg.eigvals(region.V3V3) if region.V3V3.size else []
    spectrum = None
    last_err = None
    for it in range(1, max_iters + 1):
        try:
            targets, gain1 = _place_shift(Lt, Bt, lams0, d, block_ev, tol)
            F1 = np.array(gain1.F)
            shifted = region.local.with_state(Lt + Bt @ F1)
            all_real = bool(np.all(np.abs(targets.imag) == 0))
            _check_actuators(q, k, all_real, "regional design")
            blocking = _select(shifted, region.V3V3, tol, mode_value, "fast",
                               q < k + 2, shifted=True)
            design = _finish(region, F1, blocking, d, tol, iterations=it)
        except (InsufficientActuators, NoAdmissibleMode):
            raise
        except ObsBlockError as exc:
            last_err = exc
            d *= 2
            continue
        if design.stability == Stability.STRICT:
            return design
        spectrum = np.linalg.eigvals(region.mats.closed_loop(design.F))
        d *= 2
    msg = f"no strictly stable design after {max_iters} thresholds"
    if last_err is not None and spectrum is None:
        msg += f" (last error: {last_err})"
    raise EscalationExhausted(msg, spectrum=spectrum)
