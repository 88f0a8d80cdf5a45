"""Vertex cutsets, block partitions of the Laplacian and induced subgraphs."""

from collections import namedtuple
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from networkx.algorithms.flow import edmonds_karp

from .errors import EmptyKeep, NotACut
from .netmodel import NetworkGraph
from .spectral import DEFAULT_TOL

__all__ = ["CutPartition", "BlockedLaplacian", "InducedSubgraph",
           "min_vertex_cut", "partition_blocks", "grounded_spectrum_gap",
           "induced_subgraph", "separates"]


@dataclass(frozen=True)
class CutPartition:
    """Vertex sets (1-based ids, sorted tuples).

    ``v1`` holds no measurement vertex, ``v2`` no actuation vertex, and no
    edge joins ``v1`` and ``v2`` in either direction.  For regional designs
    ``v3``/``v4`` split ``v2`` into accessible and inaccessible vertices.
    """

    v1: tuple
    vcut: tuple
    v2: tuple
    v3: tuple = None
    v4: tuple = None

    @property
    def accessible_region(self):
        """``v1 + vcut + v3`` in block order."""
        return self.v1 + self.vcut + (self.v3 or ())

    def check(self, graph, actuation, measurement, accessible=None):
        """Raise :class:`NotACut` unless every partition invariant holds."""
        n = graph.n
        s1, sc, s2 = set(self.v1), set(self.vcut), set(self.v2)
        if s1 & sc or s1 & s2 or sc & s2 or (s1 | sc | s2) != set(
                range(1, n + 1)):
            raise NotACut("v1, vcut, v2 must partition the vertex set")
        if s1 & set(measurement):
            raise NotACut("v1 contains measurement vertices")
        if s2 & set(actuation):
            raise NotACut("v2 contains actuation vertices")
        for i, k, _ in graph.edges:
            if (i in s1 and k in s2) or (i in s2 and k in s1):
                raise NotACut(f"edge {i}->{k} crosses between v1 and v2")
        if accessible is not None:
            acc = set(accessible)
            if not sc <= acc or not s1 <= acc:
                raise NotACut("cutset and v1 must be accessible")
            if set(self.v3) != s2 & acc or set(self.v4) != s2 - acc:
                raise NotACut("v3/v4 must split v2 by accessibility")


def separates(graph, removed, sources, sinks):
    """True if no path (ignoring edge direction) joins a source to a sink
    once ``removed`` is deleted.  A removed source or sink is separated."""
    removed = set(removed)
    adj = {v: set() for v in range(1, graph.n + 1)}
    for i, k, _ in graph.edges:
        adj[i].add(k)
        adj[k].add(i)
    start = [s for s in sources if s not in removed]
    seen = set(start)
    stack = list(start)
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in removed and v not in seen:
                seen.add(v)
                stack.append(v)
    return not (seen & (set(sinks) - removed))


def min_vertex_cut(graph, sources, sinks, accessible=None):
    """Minimum vertex set separating ``sources`` from ``sinks``.

    Sources and sinks may themselves be cut.  Separation is taken in the
    underlying undirected graph, which is what makes the ``v1``/``v2`` blocks
    of ``L`` vanish in both directions.  With ``accessible`` given, the
    inaccessible vertices become uncuttable sinks, so the cut and ``v1`` are
    forced into the accessible set.

    The cut comes from a unit-capacity max-flow on the vertex-split network.
    Among minimum cuts the one farthest from the sources is returned: ``v2``
    is the set of vertices that can still reach the sinks in the residual
    graph, so ``v1`` is as large as possible.
    """
    sources = set(sources)
    sinks = set(sinks)
    hard = set()
    if accessible is not None:
        hard = set(range(1, graph.n + 1)) - set(accessible)
        sinks |= hard
    G = nx.DiGraph()
    S, T = "S", "T"
    for v in range(1, graph.n + 1):
        if v in hard:
            G.add_edge(("in", v), ("out", v))
        else:
            G.add_edge(("in", v), ("out", v), capacity=1)
    for i, k, _ in graph.edges:
        G.add_edge(("out", i), ("in", k))
        G.add_edge(("out", k), ("in", i))
    for s in sorted(sources):
        G.add_edge(S, ("in", s))
    for t in sorted(sinks):
        G.add_edge(("out", t), T)
    R = edmonds_karp(G, S, T)
    if R.graph["flow_value"] >= R.graph["inf"]:
        raise NotACut("no finite vertex cut exists")
    # vertices that can still reach T in the residual graph form the
    # smallest sink side; everything else is the largest source side
    pred = {}
    for u in R:
        for v, attr in R[u].items():
            if attr["capacity"] - attr["flow"] > 0:
                pred.setdefault(v, []).append(u)
    sink_side = {T}
    stack = [T]
    while stack:
        v = stack.pop()
        for u in pred.get(v, ()):
            if u not in sink_side:
                sink_side.add(u)
                stack.append(u)
    v1, vcut, v2 = [], [], []
    for v in range(1, graph.n + 1):
        a, b = ("in", v) in sink_side, ("out", v) in sink_side
        if a:
            v2.append(v)
        elif b:
            vcut.append(v)
        else:
            v1.append(v)
    assert len(vcut) == R.graph["flow_value"]
    if accessible is None:
        return CutPartition(tuple(v1), tuple(vcut), tuple(v2))
    acc = set(accessible)
    return CutPartition(tuple(v1), tuple(vcut), tuple(v2),
                        tuple(v for v in v2 if v in acc),
                        tuple(v for v in v2 if v not in acc))


@dataclass(frozen=True)
class BlockedLaplacian:
    """``L`` permuted to block order with named views.

    ``order`` lists 0-based original indices in block order; ``sets`` maps a
    block name (``V1``, ``Vcut``, ``V2``, ``V3``, ``V4``) to positions in
    that order.
    """

    L: np.ndarray
    order: np.ndarray
    sets: dict = field(repr=False)

    def block(self, a, b):
        return self.L[np.ix_(self.sets[a], self.sets[b])]

    def __getitem__(self, key):
        return self.block(*key)

    def reassemble(self):
        """``L`` in the original vertex order."""
        out = np.empty_like(self.L)
        out[np.ix_(self.order, self.order)] = self.L
        return out

    @property
    def accessible(self):
        return np.concatenate([self.sets["V1"], self.sets["Vcut"],
                               self.sets.get("V3", np.array([], int))])

    @property
    def L_reg_rem(self):
        return self.L[np.ix_(self.accessible, self.sets["V4"])]

    @property
    def L_rem_reg(self):
        return self.L[np.ix_(self.sets["V4"], self.accessible)]

    @property
    def P1(self):
        """Diagonal of edge weights entering each accessible vertex from the
        inaccessible region (difference between the full and induced
        Laplacian diagonals)."""
        return np.diag(-self.L_reg_rem.sum(axis=1))

    @property
    def L_rem_tilde(self):
        """Laplacian of the subgraph induced by the inaccessible vertices."""
        L44 = self.block("V4", "V4").copy()
        np.fill_diagonal(L44, 0.0)
        np.fill_diagonal(L44, -L44.sum(axis=1))
        return L44


def partition_blocks(mats, cut):
    """Permute ``mats.L`` into ``v1, vcut, v2`` (``v3`` before ``v4``) order
    and check that the ``v1``/``v2`` blocks vanish."""
    L = np.asarray(mats.L if hasattr(mats, "L") else mats)
    groups = [("V1", cut.v1), ("Vcut", cut.vcut)]
    if cut.v3 is not None:
        groups += [("V3", cut.v3), ("V4", cut.v4)]
    else:
        groups += [("V2", cut.v2)]
    order = np.array([v - 1 for _, vs in groups for v in vs], dtype=int)
    if sorted(order.tolist()) != list(range(L.shape[0])):
        raise NotACut("partition does not cover every vertex exactly once")
    sets = {}
    pos = 0
    for name, vs in groups:
        sets[name] = np.arange(pos, pos + len(vs))
        pos += len(vs)
    if "V3" in sets:
        sets["V2"] = np.concatenate([sets["V3"], sets["V4"]])
    Lp = L[np.ix_(order, order)]
    Lp.setflags(write=False)
    bl = BlockedLaplacian(Lp, order, sets)
    if np.any(bl.block("V1", "V2") != 0) or np.any(bl.block("V2", "V1") != 0):
        raise NotACut("edges join v1 and v2")
    return bl


def grounded_spectrum_gap(block, lam, tol=DEFAULT_TOL, scale=None):
    """True iff ``lam`` is farther than the distinctness separation from
    every eigenvalue of ``block`` (an empty block always passes)."""
    block = np.atleast_2d(np.asarray(block, dtype=float))
    if block.size == 0:
        return True
    if scale is None:
        scale = np.linalg.norm(block, 2)
    ev = np.linalg.eigvals(block)
    return bool(np.min(np.abs(ev - complex(lam))) > tol.sep(scale))


InducedSubgraph = namedtuple("InducedSubgraph", ["graph", "ids"])
InducedSubgraph.__doc__ = """Subgraph on vertices ``1..len(ids)``; local
vertex ``j`` is original vertex ``ids[j - 1]``."""


def induced_subgraph(graph, keep):
    keep = sorted(set(int(v) for v in keep))
    if not keep:
        raise EmptyKeep("cannot induce a subgraph on no vertices")
    local = {v: j + 1 for j, v in enumerate(keep)}
    edges = tuple((local[i], local[k], w) for i, k, w in graph.edges
                  if i in local and k in local)
    return InducedSubgraph(NetworkGraph(len(keep), edges), tuple(keep))
