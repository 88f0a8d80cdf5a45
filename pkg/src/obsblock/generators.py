"""Seeded random networks for tests, demos and benchmarks."""

import numpy as np

from .errors import ObsBlockError
from .netmodel import (NetworkGraph, NetworkModel, build_matrices,
                       indicator_columns, laplacian)
from .spectral import DEFAULT_TOL, eig, pbh_controllable
from .topology import induced_subgraph, min_vertex_cut

__all__ = ["random_digraph", "random_blocking_instance",
           "random_cut_instance", "random_regional_instance"]


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(seed)


def random_digraph(n, seed=None, density=0.3, weights=(0.5, 2.0), offset=0):
    """Strongly connected weighted digraph on ``offset+1 .. offset+n``.

    A random Hamiltonian cycle guarantees strong connectivity; every other
    ordered pair becomes an edge with probability ``density``.  Returned as
    an edge list ``[(i, k, w), ...]``.
    """
    rng = _rng(seed)
    order = rng.permutation(n) + 1 + offset
    edges = {}
    for a, b in zip(order, np.roll(order, -1)):
        if n > 1:
            edges[(int(a), int(b))] = None
    for i in range(1, n + 1):
        for k in range(1, n + 1):
            if i != k and rng.random() < density:
                edges[(i + offset, k + offset)] = None
    lo, hi = weights
    return [(i, k, float(np.round(rng.uniform(lo, hi), 3)))
            for (i, k) in sorted(edges)]


def _subset(rng, pool, size):
    return tuple(sorted(int(v) for v in rng.choice(pool, size, replace=False)))


def random_blocking_instance(seed, n_range=(4, 12), extra=2, tol=DEFAULT_TOL):
    """Model with ``q = m + extra`` actuators, distinct spectrum and
    ``(-L, B)`` controllable; resamples until those hold."""
    rng = _rng(seed)
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        m = int(rng.integers(1, n - extra + 1))
        g = NetworkGraph(n, tuple(random_digraph(n, rng)))
        act = _subset(rng, np.arange(1, n + 1), m + extra)
        meas = _subset(rng, np.arange(1, n + 1), m)
        model = NetworkModel(g, act, meas)
        mats = build_matrices(model)
        if eig(mats.L, tol).distinct and pbh_controllable(-mats.L, mats.B,
                                                          tol):
            return model


def random_cut_instance(seed, n_range=(5, 10), extra=2, tol=DEFAULT_TOL):
    """Model whose actuator count is ``|vcut| + extra``.

    Actuators are topped up from the source side of the cut, which leaves a
    minimum cut of the same size in place.
    """
    rng = _rng(seed)
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        g = NetworkGraph(n, tuple(random_digraph(n, rng, density=0.2)))
        nodes = np.arange(1, n + 1)
        act = _subset(rng, nodes, int(rng.integers(1, 3)))
        rest = [v for v in nodes if v not in act]
        meas = _subset(rng, rest, int(rng.integers(1, min(4, len(rest)) + 1)))
        cut = min_vertex_cut(g, act, meas)
        need = len(cut.vcut) + extra
        pool = [v for v in cut.v1 + cut.vcut if v not in act]
        if len(act) + len(pool) < need:
            continue
        act = tuple(sorted(act + _subset(rng, pool, need - len(act))
                           if need > len(act) else act))
        model = NetworkModel(g, act, meas)
        mats = build_matrices(model)
        if not (eig(mats.L, tol).distinct
                and pbh_controllable(-mats.L, mats.B, tol)):
            continue
        if len(min_vertex_cut(g, act, meas).vcut) + extra != len(act):
            continue
        return model


def random_regional_instance(seed, n_acc=(5, 7), n_tail=(2, 4),
                             coupling=(0.5, 2.0), extra=2, tol=DEFAULT_TOL):
    """Accessible strongly connected region plus an inaccessible tail.

    The tail hangs off one or two boundary vertices of the region; one
    measurement sits in the tail and actuators are drawn away from the
    boundary, topped up to ``|vcut| + extra``.
    """
    rng = _rng(seed)
    while True:
        na = int(rng.integers(n_acc[0], n_acc[1] + 1))
        nt = int(rng.integers(n_tail[0], n_tail[1] + 1))
        n = na + nt
        edges = random_digraph(na, rng)
        edges += random_digraph(nt, rng, offset=na)
        boundary = _subset(rng, np.arange(1, na + 1), int(rng.integers(1, 3)))
        lo, hi = coupling
        for b in boundary:
            t = int(rng.integers(na + 1, n + 1))
            edges.append((b, t, float(np.round(rng.uniform(lo, hi), 3))))
            t = int(rng.integers(na + 1, n + 1))
            edges.append((t, b, float(np.round(rng.uniform(lo, hi), 3))))
        g = NetworkGraph(n, tuple(sorted(set(edges))))
        acc = frozenset(range(1, na + 1))
        inner = [v for v in range(1, na + 1) if v not in boundary]
        if not inner:
            continue
        meas = (int(rng.integers(na + 1, n + 1)),)
        act = _subset(rng, inner, 1)
        cut = min_vertex_cut(g, act, meas, accessible=acc)
        need = len(cut.vcut) + extra
        pool = [v for v in cut.v1 + cut.vcut if v not in act]
        if len(act) + len(pool) < need:
            continue
        if need > len(act):
            act = tuple(sorted(act + _subset(rng, pool, need - len(act))))
        model = NetworkModel(g, act, meas, acc)
        try:
            mats = build_matrices(model)
        except ObsBlockError:
            continue
        sub = induced_subgraph(g, acc)
        cut2 = min_vertex_cut(g, act, meas, accessible=acc)
        if len(cut2.vcut) + extra != len(act):
            continue
        Lt = laplacian(sub.graph)
        Bt = indicator_columns(na, act)
        if not (eig(Lt, tol).distinct and eig(mats.L, tol).distinct
                and pbh_controllable(-Lt, Bt, tol)):
            continue
        return model
