"""Network synchronization model: weighted digraph, Laplacian, input/output
indicator matrices, file I/O and closed-loop simulation.

Vertex ids are 1-based in every public structure and file; matrices are
indexed 0-based as usual, so vertex ``i`` lives in row/column ``i - 1``.
"""

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (DimensionMismatch, InvalidWeight, NotStronglyConnected,
                     ParseError, ValidationError)

__all__ = ["NetworkGraph", "NetworkModel", "SystemMatrices", "SimTrace",
           "laplacian", "build_matrices", "load_network", "save_network",
           "model_from_dict", "model_to_dict", "simulate"]


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NetworkGraph:
    """Weighted digraph on vertices ``1..n``.

    ``edges`` holds ``(i, k, w)`` triples meaning an edge from ``i`` to ``k``
    with weight ``w > 0``.
    """

    n: int
    edges: tuple

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError("vertex count must be a positive integer", "n")
        object.__setattr__(self, "n", int(self.n))
        seen = set()
        clean = []
        for idx, e in enumerate(self.edges):
            path = f"edges[{idx}]"
            if len(e) != 3:
                raise ValidationError("edge must be (from, to, w)", path)
            i, k, w = e
            for name, v in (("from", i), ("to", k)):
                if int(v) != v or not 1 <= v <= self.n:
                    raise ValidationError(
                        f"vertex id {v!r} outside 1..{self.n}", f"{path}.{name}")
            i, k, w = int(i), int(k), float(w)
            if not np.isfinite(w) or w <= 0:
                raise InvalidWeight(
                    f"edge {i}->{k} has non-positive weight {w!r}", f"{path}.w")
            if i == k:
                raise ValidationError(f"self-loop at vertex {i}", path)
            if (i, k) in seen:
                raise ValidationError(f"duplicate edge {i}->{k}", path)
            seen.add((i, k))
            clean.append((i, k, w))
        object.__setattr__(self, "edges", tuple(clean))

    def adjacency(self):
        """Dense weight matrix ``W`` with ``W[i-1, k-1] = w_ik``."""
        W = np.zeros((self.n, self.n))
        for i, k, w in self.edges:
            W[i - 1, k - 1] = w
        return W

    def is_strongly_connected(self):
        if self.n == 1:
            return True
        ncomp, _ = connected_components(csr_matrix(self.adjacency()),
                                        directed=True, connection="strong")
        return ncomp == 1

    def weight(self, i, k):
        for a, b, w in self.edges:
            if a == i and b == k:
                return w
        return 0.0


@dataclass(frozen=True)
class NetworkModel:
    graph: NetworkGraph
    actuation: tuple
    measurement: tuple
    accessible: frozenset = None

    def __post_init__(self):
        n = self.graph.n
        for name in ("actuation", "measurement"):
            ids = tuple(getattr(self, name))
            if not ids:
                raise ValidationError("at least one vertex required", name)
            for j, v in enumerate(ids):
                if int(v) != v or not 1 <= v <= n:
                    raise ValidationError(f"vertex id {v!r} outside 1..{n}",
                                          f"{name}[{j}]")
            if len(set(ids)) != len(ids):
                raise ValidationError("repeated vertex id", name)
            object.__setattr__(self, name, tuple(int(v) for v in ids))
        if self.accessible is not None:
            acc = frozenset(int(v) for v in self.accessible)
            for v in acc:
                if not 1 <= v <= n:
                    raise ValidationError(f"vertex id {v!r} outside 1..{n}",
                                          "accessible")
            missing = set(self.actuation) - acc
            if missing:
                raise ValidationError(
                    f"actuation vertices {sorted(missing)} are not accessible",
                    "accessible")
            object.__setattr__(self, "accessible", acc)

    @property
    def n(self):
        return self.graph.n

    @property
    def q(self):
        return len(self.actuation)

    @property
    def m(self):
        return len(self.measurement)

    def with_nodes(self, actuation=None, measurement=None, accessible=None):
        """Copy of the model with some node sets replaced."""
        return NetworkModel(
            self.graph,
            self.actuation if actuation is None else tuple(actuation),
            self.measurement if measurement is None else tuple(measurement),
            self.accessible if accessible is None else frozenset(accessible))


@dataclass(frozen=True)
class SystemMatrices:
    """State matrix ``L`` and indicator matrices ``B`` (n x q), ``C`` (m x n).

    ``L`` is normally a Laplacian, but the design routines accept any real
    square state matrix (e.g. an already-shifted closed loop).
    """

    L: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise DimensionMismatch(f"L must be square, got {L.shape}")
        n = L.shape[0]
        if B.ndim != 2 or B.shape[0] != n:
            raise DimensionMismatch(f"B must have {n} rows, got {B.shape}")
        if C.ndim != 2 or C.shape[1] != n:
            raise DimensionMismatch(f"C must have {n} columns, got {C.shape}")
        object.__setattr__(self, "L", _frozen(L))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "C", _frozen(C))

    @property
    def n(self):
        return self.L.shape[0]

    @property
    def q(self):
        return self.B.shape[1]

    @property
    def m(self):
        return self.C.shape[0]

    @property
    def measurement_indices(self):
        """0-based state index read by each output row (C must be 0-1)."""
        return tuple(int(np.argmax(r)) for r in self.C)

    @property
    def actuation_indices(self):
        return tuple(int(np.argmax(c)) for c in self.B.T)

    def closed_loop(self, F):
        """``L + B F``."""
        F = np.asarray(F, dtype=float)
        if F.shape != (self.q, self.n):
            raise DimensionMismatch(
                f"F must be {self.q}x{self.n}, got {F.shape}")
        return self.L + self.B @ F

    def with_output(self, C):
        return SystemMatrices(self.L, self.B, C)

    def with_state(self, L):
        return SystemMatrices(L, self.B, self.C)


def indicator_columns(n, ids):
    """n x len(ids) matrix whose j-th column is e_{ids[j]} (ids 1-based)."""
    E = np.zeros((n, len(ids)))
    for j, v in enumerate(ids):
        E[v - 1, j] = 1.0
    return E


def laplacian(graph):
    """Asymmetric Laplacian: ``L[k, i] = -w_ik`` for edge i->k, zero row sums.

    Diagonals are summed from the incoming weights rather than from the
    off-diagonal entries so that each row sums to zero up to the rounding of
    that single sum.
    """
    n = graph.n
    L = np.zeros((n, n))
    for i, k, w in graph.edges:
        L[k - 1, i - 1] = -w
    L[np.diag_indices(n)] = -L.sum(axis=1)
    return L


def build_matrices(model):
    """Laplacian and indicator matrices of a validated model."""
    if not model.graph.is_strongly_connected():
        raise NotStronglyConnected("network graph is not strongly connected")
    n = model.n
    L = laplacian(model.graph)
    B = indicator_columns(n, model.actuation)
    C = indicator_columns(n, model.measurement).T
    return SystemMatrices(L, B, C)


# -- serialization ------------------------------------------------------------

def _require(d, key, kind, path):
    if key not in d:
        raise ValidationError("missing required field", f"{path}{key}")
    v = d[key]
    if kind is int and (isinstance(v, bool) or not isinstance(v, int)):
        raise ValidationError(f"expected integer, got {v!r}", f"{path}{key}")
    if kind is list and not isinstance(v, list):
        raise ValidationError(f"expected list, got {type(v).__name__}",
                              f"{path}{key}")
    return v


def _id_list(d, key):
    vals = _require(d, key, list, "")
    for j, v in enumerate(vals):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValidationError(f"expected integer vertex id, got {v!r}",
                                  f"{key}[{j}]")
    return vals


def model_from_dict(d):
    """Build a :class:`NetworkModel` from the JSON data model."""
    if not isinstance(d, dict):
        raise ValidationError("top level must be an object")
    n = _require(d, "n", int, "")
    raw = _require(d, "edges", list, "")
    undirected = d.get("undirected", False)
    if not isinstance(undirected, bool):
        raise ValidationError("expected boolean", "undirected")
    edges = []
    for idx, e in enumerate(raw):
        path = f"edges[{idx}]."
        if not isinstance(e, dict):
            raise ValidationError("edge must be an object", f"edges[{idx}]")
        i = _require(e, "from", int, path)
        k = _require(e, "to", int, path)
        w = _require(e, "w", float, path)
        if isinstance(w, bool) or not isinstance(w, (int, float)):
            raise ValidationError(f"expected number, got {w!r}", f"{path}w")
        if w <= 0:
            raise InvalidWeight(f"edge {i}->{k} has non-positive weight {w!r}",
                                f"{path}w")
        edges.append((i, k, w))
        if undirected:
            edges.append((k, i, w))
    graph = NetworkGraph(n, tuple(edges))
    acc = d.get("accessible")
    if acc is not None:
        acc = frozenset(_id_list(d, "accessible"))
    return NetworkModel(graph, tuple(_id_list(d, "actuation")),
                        tuple(_id_list(d, "measurement")), acc)


def model_to_dict(model):
    d = {
        "n": model.n,
        "edges": [{"from": i, "to": k, "w": w} for i, k, w in model.graph.edges],
        "actuation": list(model.actuation),
        "measurement": list(model.measurement),
    }
    if model.accessible is not None:
        d["accessible"] = sorted(model.accessible)
    return d


def load_network(path):
    """Read and validate a network JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return model_from_dict(d)


def save_network(model, path):
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n",
                          encoding="utf-8")


# -- simulation ---------------------------------------------------------------

@dataclass(frozen=True)
class SimTrace:
    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    inputs: np.ndarray = field(repr=False)

    def to_csv(self, path=None):
        """Write ``t,x1..xn,y1..ym,u1..uq`` rows; returns the text if no path."""
        n, m, q = (self.states.shape[1], self.outputs.shape[1],
                   self.inputs.shape[1])
        header = (["t"] + [f"x{i}" for i in range(1, n + 1)]
                  + [f"y{i}" for i in range(1, m + 1)]
                  + [f"u{i}" for i in range(1, q + 1)])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        data = np.hstack([self.times[:, None], self.states, self.outputs,
                          self.inputs])
        for row in data:
            w.writerow(["%.12g" % v for v in row])
        if path is None:
            return buf.getvalue()
        Path(path).write_text(buf.getvalue(), encoding="utf-8")


def simulate(mats, F, x0, horizon, dt=1e-3):
    """Integrate ``x' = -(L + B F) x`` with fixed-step classical RK4.

    For a linear vector field one RK4 step is multiplication by the degree-4
    Taylor polynomial of ``exp(-h (L + B F))``, which is what is used here.
    """
    F = np.asarray(F, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (mats.n,):
        raise DimensionMismatch(f"x0 must have length {mats.n}, got {x0.shape}")
    if dt <= 0 or horizon < dt:
        raise ValueError("need dt > 0 and horizon >= dt")
    A = -mats.closed_loop(F)
    hA = dt * A
    step = np.eye(mats.n)
    term = np.eye(mats.n)
    for j in range(1, 5):
        term = term @ hA / j
        step = step + term
    nsteps = int(round(horizon / dt))
    X = np.empty((nsteps + 1, mats.n))
    X[0] = x0
    for k in range(nsteps):
        X[k + 1] = step @ X[k]
    t = dt * np.arange(nsteps + 1)
    return SimTrace(t, X, X @ mats.C.T, -(X @ F.T))
