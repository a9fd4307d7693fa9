"""Inverter network graphs, Laplacians, Kron reduction and power injections.

Node indices are 0-based inside the library. The JSON network file format
(see :mod:`drooploss.io`) uses 1-based indices.

Line admittances follow the convention ``y_ik = g_ik - j*b_ik`` with
``b_ik > 0`` for inductive lines. Shunt conductances are fixed at zero; only
shunt susceptances ``shunt_b`` are modelled.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DisconnectedGraphError, GraphValidationError

DEFAULT_B_RANGE = (0.5, 3.25)
CONNECTIVITY_RTOL = 1e-9


class Edge(NamedTuple):
    i: int
    k: int
    b: float
    g: float


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """Undirected weighted graph of inverter nodes.

    Every edge carries a susceptance ``b > 0`` and a conductance ``g >= 0``.
    ``shunt_b`` holds the per-node shunt susceptance. Instances are validated
    on construction and treated as immutable.
    """

    n_nodes: int
    edges: tuple[Edge, ...]
    shunt_b: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        n = self.n_nodes
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise GraphValidationError(f"n_nodes must be a positive integer, got {n!r}")
        edges = []
        seen = set()
        for idx, e in enumerate(self.edges):
            i, k, b, g = (int(e[0]), int(e[1]), float(e[2]), float(e[3]))
            if i == k:
                raise GraphValidationError(f"edge {idx}: self-loop at node {i}")
            if not (0 <= i < n and 0 <= k < n):
                raise GraphValidationError(f"edge {idx}: endpoint out of range [0, {n})")
            if i > k:
                i, k = k, i
            if (i, k) in seen:
                raise GraphValidationError(f"edge {idx}: duplicate edge ({i}, {k})")
            seen.add((i, k))
            if not b > 0:
                raise GraphValidationError(f"edge {idx}: susceptance must be > 0, got {b}")
            if not g >= 0:
                raise GraphValidationError(f"edge {idx}: conductance must be >= 0, got {g}")
            edges.append(Edge(i, k, b, g))
        object.__setattr__(self, "n_nodes", int(n))
        object.__setattr__(self, "edges", tuple(sorted(edges)))

        shunt = np.zeros(n) if self.shunt_b is None else np.asarray(self.shunt_b, dtype=float)
        if shunt.ndim == 0:
            shunt = np.full(n, float(shunt))
        if shunt.shape != (n,):
            raise GraphValidationError(f"shunt_b must have length {n}, got shape {shunt.shape}")
        if not np.all(np.isfinite(shunt)):
            raise GraphValidationError("shunt_b must be finite")
        shunt = shunt.copy()
        shunt.flags.writeable = False
        object.__setattr__(self, "shunt_b", shunt)

    def __eq__(self, other):
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return (self.n_nodes == other.n_nodes and self.edges == other.edges
                and np.array_equal(self.shunt_b, other.shunt_b))

    def __hash__(self):
        return hash((self.n_nodes, self.edges, self.shunt_b.tobytes()))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def susceptances(self) -> np.ndarray:
        return np.array([e.b for e in self.edges])

    @property
    def conductances(self) -> np.ndarray:
        return np.array([e.g for e in self.edges])

    @property
    def alpha(self) -> float | None:
        """Common ratio g/b of all edges, or None if the ratio is not uniform."""
        if not self.edges:
            return None
        ratios = self.conductances / self.susceptances
        if np.ptp(ratios) <= 1e-12 * max(1.0, abs(ratios).max()):
            return float(ratios[0])
        return None

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=int)
        for e in self.edges:
            deg[e.i] += 1
            deg[e.k] += 1
        return deg

    def with_alpha(self, alpha: float) -> "NetworkGraph":
        """Copy of the graph with every conductance set to ``alpha * b``."""
        edges = [Edge(e.i, e.k, e.b, alpha * e.b) for e in self.edges]
        return NetworkGraph(self.n_nodes, tuple(edges), self.shunt_b)

    def scaled(self, factor: float) -> "NetworkGraph":
        edges = [Edge(e.i, e.k, factor * e.b, factor * e.g) for e in self.edges]
        return NetworkGraph(self.n_nodes, tuple(edges), self.shunt_b)


def _laplacian(n, edges, weight):
    L = np.zeros((n, n))
    for e in edges:
        w = weight(e)
        L[e.i, e.k] -= w
        L[e.k, e.i] -= w
        L[e.i, e.i] += w
        L[e.k, e.k] += w
    return L


def build_laplacian(graph: NetworkGraph, kind: str = "susceptance") -> np.ndarray:
    """Weighted graph Laplacian of the susceptances (``L_B``) or conductances (``L_G``).

    Shunt susceptances are not part of ``L_B``; they enter the dynamics via
    the voltage-loop constant ``c_Q``.
    """
    if kind in ("susceptance", "B", "b"):
        return _laplacian(graph.n_nodes, graph.edges, lambda e: e.b)
    if kind in ("conductance", "G", "g"):
        return _laplacian(graph.n_nodes, graph.edges, lambda e: e.g)
    raise ValueError(f"unknown Laplacian kind {kind!r}")


def laplacian_eigenvalues(graph: NetworkGraph) -> np.ndarray:
    """Ascending eigenvalues of ``L_B``."""
    return np.linalg.eigvalsh(build_laplacian(graph, "susceptance"))


def admittance_matrix(graph: NetworkGraph) -> np.ndarray:
    """Complex bus admittance matrix ``L_G - j(L_B + diag(shunt_b))``."""
    return build_laplacian(graph, "conductance") - 1j * (
        build_laplacian(graph, "susceptance") + np.diag(graph.shunt_b)
    )


def is_connected(graph: NetworkGraph) -> bool:
    if graph.n_nodes == 1:
        return True
    lam = laplacian_eigenvalues(graph)
    if lam[-1] <= 0:
        return False
    return bool(lam[1] > CONNECTIVITY_RTOL * lam[-1])


def require_connected(graph: NetworkGraph) -> None:
    if not is_connected(graph):
        raise DisconnectedGraphError()


def _resolve_susceptances(count, susceptance, b_range, seed):
    if b_range is not None:
        lo, hi = b_range
        if not 0 < lo < hi:
            raise GraphValidationError(f"invalid susceptance range {b_range}")
        rng = np.random.default_rng(seed)
        return rng.uniform(lo, hi, size=count)
    b = np.asarray(susceptance, dtype=float)
    if b.ndim == 0:
        return np.full(count, float(b))
    if b.shape != (count,):
        raise GraphValidationError(f"expected {count} susceptances, got {b.shape[0]}")
    return b


def _check_alpha(alpha):
    if not 0 <= alpha < 1:
        raise GraphValidationError(f"alpha must lie in [0, 1), got {alpha}")


def _from_pairs(n, pairs, b, alpha, shunt_b):
    edges = tuple(Edge(i, k, float(bb), alpha * float(bb)) for (i, k), bb in zip(pairs, b))
    return NetworkGraph(n, edges, shunt_b)


def complete_graph(
    n: int,
    susceptance: float | Sequence[float] = 1.0,
    alpha: float = 0.2,
    *,
    b_range: tuple[float, float] | None = None,
    seed=None,
    shunt_b=0.0,
) -> NetworkGraph:
    """Complete graph on ``n`` nodes with ``g = alpha * b`` on every line.

    Susceptances are either given (scalar or one per edge, in lexicographic
    edge order) or, when ``b_range`` is set, drawn uniformly from it.
    """
    if n < 2:
        raise GraphValidationError("complete graph needs n >= 2")
    _check_alpha(alpha)
    pairs = [(i, k) for i in range(n) for k in range(i + 1, n)]
    b = _resolve_susceptances(len(pairs), susceptance, b_range, seed)
    return _from_pairs(n, pairs, b, alpha, shunt_b)


def path_graph(
    n: int,
    susceptance: float | Sequence[float] = 1.0,
    alpha: float = 0.2,
    *,
    b_range: tuple[float, float] | None = None,
    seed=None,
    shunt_b=0.0,
) -> NetworkGraph:
    """Line graph 0-1-...-(n-1)."""
    if n < 2:
        raise GraphValidationError("path graph needs n >= 2")
    _check_alpha(alpha)
    pairs = [(i, i + 1) for i in range(n - 1)]
    b = _resolve_susceptances(len(pairs), susceptance, b_range, seed)
    return _from_pairs(n, pairs, b, alpha, shunt_b)


def random_connected_graph(
    n: int,
    edge_prob: float,
    susceptance_range: tuple[float, float] = DEFAULT_B_RANGE,
    alpha: float = 0.2,
    seed: int = 0,
    shunt_b=0.0,
) -> NetworkGraph:
    """Erdos-Renyi graph made connected by joining components.

    Edges are kept with probability ``edge_prob``. Remaining components are
    then chained together by one random edge between consecutive components,
    so the result is connected and fully determined by ``seed``.
    """
    if n < 2:
        raise GraphValidationError("random graph needs n >= 2")
    if not 0 < edge_prob <= 1:
        raise GraphValidationError(f"edge_prob must lie in (0, 1], got {edge_prob}")
    _check_alpha(alpha)
    rng = np.random.default_rng(seed)
    pairs = [(i, k) for i in range(n) for k in range(i + 1, n)]
    keep = rng.random(len(pairs)) < edge_prob
    chosen = [p for p, kp in zip(pairs, keep) if kp]

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, k in chosen:
        parent[find(i)] = find(k)
    comps: dict[int, list[int]] = {}
    for v in range(n):
        comps.setdefault(find(v), []).append(v)
    groups = sorted(comps.values())
    for a, b in zip(groups[:-1], groups[1:]):
        u = int(rng.choice(a))
        v = int(rng.choice(b))
        chosen.append((min(u, v), max(u, v)))

    lo, hi = susceptance_range
    weights = rng.uniform(lo, hi, size=len(chosen))
    return _from_pairs(n, chosen, weights, alpha, shunt_b)


def kron_reduce(admittance: np.ndarray, boundary: Sequence[int], *, tol: float = 1e-12) -> NetworkGraph:
    """Eliminate interior nodes by a Schur complement of the admittance matrix.

    ``admittance`` uses the bus convention of :func:`admittance_matrix`.
    The reduced matrix is read back as lines (negated off-diagonals) and shunt
    susceptances (row sums). Reductions that produce negative line
    conductances, non-positive line susceptances, or shunts with a real part
    are rejected.
    """
    Y = np.asarray(admittance, dtype=complex)
    n = Y.shape[0]
    if Y.shape != (n, n):
        raise GraphValidationError("admittance matrix must be square")
    if not np.allclose(Y, Y.T, atol=tol * max(1.0, np.abs(Y).max())):
        raise GraphValidationError("admittance matrix must be symmetric")
    bnd = list(dict.fromkeys(int(b) for b in boundary))
    if not bnd or any(not 0 <= b < n for b in bnd):
        raise GraphValidationError("boundary must be a non-empty subset of the nodes")
    interior = [v for v in range(n) if v not in set(bnd)]
    Ybb = Y[np.ix_(bnd, bnd)]
    if interior:
        Yii = Y[np.ix_(interior, interior)]
        Ybi = Y[np.ix_(bnd, interior)]
        Yib = Y[np.ix_(interior, bnd)]
        try:
            cond = np.linalg.cond(Yii)
        except np.linalg.LinAlgError:
            cond = np.inf
        if not np.isfinite(cond) or cond > 1 / np.finfo(float).eps:
            raise GraphValidationError("interior admittance block is singular")
        Yred = Ybb - Ybi @ np.linalg.solve(Yii, Yib)
    else:
        Yred = Ybb

    m = len(bnd)
    scale = max(1.0, np.abs(Yred).max())
    edges = []
    for i in range(m):
        for k in range(i + 1, m):
            y = -Yred[i, k]
            if abs(y) <= tol * scale:
                continue
            g, b = y.real, -y.imag
            if g < -tol * scale:
                raise GraphValidationError(f"reduced line ({i}, {k}) has negative conductance {g}")
            if b <= 0:
                raise GraphValidationError(f"reduced line ({i}, {k}) has non-positive susceptance {b}")
            edges.append(Edge(i, k, b, max(g, 0.0)))
    rowsum = Yred.sum(axis=1)
    if np.any(np.abs(rowsum.real) > 1e-9 * scale):
        raise GraphValidationError("reduced network has shunt conductances; not representable")
    return NetworkGraph(m, tuple(edges), -rowsum.imag)


def _check_vectors(graph, *vecs):
    out = []
    for v in vecs:
        v = np.asarray(v, dtype=float)
        if v.shape != (graph.n_nodes,):
            raise ValueError(f"expected vector of length {graph.n_nodes}, got shape {v.shape}")
        out.append(v)
    return out


def power_injections(graph: NetworkGraph, delta, V) -> tuple[np.ndarray, np.ndarray]:
    """Exact nonlinear active and reactive power injected at every node."""
    delta, V = _check_vectors(graph, delta, V)
    n = graph.n_nodes
    P = np.zeros(n)
    Q = graph.shunt_b * V**2
    for e in graph.edges:
        for i, k in ((e.i, e.k), (e.k, e.i)):
            d = delta[i] - delta[k]
            vv = V[i] * V[k]
            P[i] += -e.g * V[i] ** 2 + vv * (e.g * np.cos(d) + e.b * np.sin(d))
            Q[i] += e.b * V[i] ** 2 + vv * (e.g * np.sin(d) - e.b * np.cos(d))
    return P, Q


def linearized_injections(graph: NetworkGraph, d_delta, d_V) -> tuple[np.ndarray, np.ndarray]:
    """Injections linearised at flat voltage 1 p.u. and zero angle differences."""
    d_delta, d_V = _check_vectors(graph, d_delta, d_V)
    LB = build_laplacian(graph, "susceptance")
    LG = build_laplacian(graph, "conductance")
    dP = LB @ d_delta - LG @ d_V
    dQ = (LB + 2 * np.diag(graph.shunt_b)) @ d_V + LG @ d_delta
    return dP, dQ


def is_complete(graph: NetworkGraph) -> bool:
    n = graph.n_nodes
    return n >= 2 and graph.n_edges == n * (n - 1) // 2


def is_path(graph: NetworkGraph) -> bool:
    """True for a simple path through all nodes, in any node order."""
    n = graph.n_nodes
    if n < 2 or graph.n_edges != n - 1:
        return False
    deg = graph.degrees()
    if deg.max() > 2 or (deg == 1).sum() != 2:
        return False
    return is_connected(graph)
