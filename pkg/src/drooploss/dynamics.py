"""Linearised droop-controlled inverter dynamics as LTI state-space models.

State ordering is ``(delta_1..delta_N, omega_1..omega_N, V_1..V_N)`` and
input ordering ``(w_omega_1..w_omega_N, w_V_1..w_V_N)``. The output ``y``
stacks the phase-loss rows on top of the voltage-loss rows so that
``||y||^2`` is the instantaneous resistive loss.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import NonUniformParamsError, ValidationError
from .network import NetworkGraph, build_laplacian, require_connected

PSD_CLAMP = 1e-12


def _as_param(value, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim > 1:
        raise ValidationError(f"{name} must be a scalar or a per-node vector")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite")
    return float(arr) if arr.ndim == 0 else arr


@dataclass(frozen=True)
class InverterParams:
    """Droop gains, filter time constants and shunt susceptance.

    Each field is a scalar (identical inverters) or a per-node vector.
    ``alpha`` is the uniform conductance/susceptance ratio used by the
    uniform-parameter models; leave it ``None`` to take it from the graph.
    """

    k_p: float | np.ndarray = 1.0
    k_q: float | np.ndarray = 1.0
    tau_p: float | np.ndarray = 1.0
    tau_q: float | np.ndarray = 1.0
    shunt_b: float | np.ndarray = 0.0
    alpha: Optional[float] = None

    def __post_init__(self):
        for name in ("k_p", "k_q", "tau_p", "tau_q"):
            v = _as_param(getattr(self, name), name)
            if np.any(np.asarray(v) <= 0):
                raise ValidationError(f"{name} must be strictly positive")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "shunt_b", _as_param(self.shunt_b, "shunt_b"))
        if self.alpha is not None:
            a = float(self.alpha)
            if not 0 <= a < 1:
                raise ValidationError(f"alpha must lie in [0, 1), got {a}")
            object.__setattr__(self, "alpha", a)
        if np.any(np.asarray(self.c_q) <= 0):
            raise ValidationError("c_q = 1 + 2 k_q shunt_b must be positive (shunt_b > -1/(2 k_q))")

    @classmethod
    def from_cq(cls, c_q, *, k_p=1.0, k_q=1.0, tau_p=1.0, tau_q=1.0, alpha=None):
        """Build parameters from the voltage-loop constant instead of the shunt."""
        shunt_b = (np.asarray(c_q, dtype=float) - 1.0) / (2.0 * np.asarray(k_q, dtype=float))
        return cls(k_p=k_p, k_q=k_q, tau_p=tau_p, tau_q=tau_q, shunt_b=shunt_b, alpha=alpha)

    @property
    def c_q(self):
        c = 1.0 + 2.0 * np.asarray(self.k_q) * np.asarray(self.shunt_b)
        return float(c) if c.ndim == 0 else c

    def _all_scalar(self):
        return all(np.ndim(getattr(self, f)) == 0 for f in ("k_p", "k_q", "tau_p", "tau_q", "shunt_b"))

    @property
    def is_uniform(self) -> bool:
        return all(np.ptp(np.atleast_1d(getattr(self, f))) == 0
                   for f in ("k_p", "k_q", "tau_p", "tau_q", "shunt_b"))

    def uniform(self) -> "InverterParams":
        """Scalar version of these parameters; raises if they differ across nodes."""
        if not self.is_uniform:
            raise NonUniformParamsError("operation requires identical inverter parameters")
        if self._all_scalar():
            return self
        vals = {f: float(np.atleast_1d(getattr(self, f))[0])
                for f in ("k_p", "k_q", "tau_p", "tau_q", "shunt_b")}
        return InverterParams(**vals, alpha=self.alpha)

    def per_node(self, n: int) -> dict:
        out = {}
        for f in ("k_p", "k_q", "tau_p", "tau_q", "shunt_b"):
            v = np.asarray(getattr(self, f), dtype=float)
            if v.ndim == 0:
                v = np.full(n, float(v))
            elif v.shape != (n,):
                raise ValidationError(f"{f} has {v.shape[0]} entries, network has {n} nodes")
            out[f] = v
        out["c_q"] = 1.0 + 2.0 * out["k_q"] * out["shunt_b"]
        return out

    def with_alpha(self, alpha: float) -> "InverterParams":
        return replace(self, alpha=alpha)

    def resolve_alpha(self, graph: NetworkGraph | None = None) -> float:
        if self.alpha is not None:
            return self.alpha
        if graph is not None and graph.alpha is not None:
            return graph.alpha
        raise ValidationError("alpha is not set and the graph has no uniform g/b ratio")

    def to_dict(self) -> dict:
        def conv(v):
            return v.tolist() if isinstance(v, np.ndarray) else v
        return {f: conv(getattr(self, f)) for f in ("k_p", "k_q", "tau_p", "tau_q", "shunt_b", "alpha")}


@dataclass(frozen=True)
class StateSpaceModel:
    """``dx/dt = A x + B w``, ``y = C x`` over the (delta, omega, V) state."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    n_nodes: int
    kind: str = "full"
    graph: Optional[NetworkGraph] = field(default=None, repr=False, compare=False)
    params: Optional[InverterParams] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_nodes
        for name, shape in (("A", (3 * n, 3 * n)), ("B", (3 * n, 2 * n)), ("C", (2 * n, 3 * n))):
            m = np.array(getattr(self, name), dtype=float)
            if m.shape != shape:
                raise ValidationError(f"{name} must have shape {shape}, got {m.shape}")
            m.flags.writeable = False
            object.__setattr__(self, name, m)

    @property
    def n_states(self) -> int:
        return 3 * self.n_nodes

    @property
    def kernel_vector(self) -> np.ndarray:
        """Uniform phase shift: delta = 1, omega = 0, V = 0."""
        e = np.zeros(3 * self.n_nodes)
        e[: self.n_nodes] = 1.0
        return e

    def blocks(self, name: str) -> list[list[np.ndarray]]:
        """Split ``A``, ``B`` or ``C`` into its N x N blocks."""
        M = getattr(self, name)
        n = self.n_nodes
        return [[M[r:r + n, c:c + n] for c in range(0, M.shape[1], n)]
                for r in range(0, M.shape[0], n)]

    def state_labels(self) -> list[str]:
        n = self.n_nodes
        return ([f"delta_{i + 1}" for i in range(n)] + [f"omega_{i + 1}" for i in range(n)]
                + [f"V_{i + 1}" for i in range(n)])

    def input_labels(self) -> list[str]:
        n = self.n_nodes
        return [f"w_omega_{i + 1}" for i in range(n)] + [f"w_V_{i + 1}" for i in range(n)]


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    """Unique PSD square root of a symmetric PSD matrix.

    Eigenvalues down to ``-1e-12 * max(1, |lambda|_max)`` are clamped to zero;
    anything more negative is rejected.
    """
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + M.T)
    w, U = np.linalg.eigh(M)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    if w.min(initial=0.0) < -PSD_CLAMP * scale:
        raise ValidationError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    S = (U * np.sqrt(w)) @ U.T
    return 0.5 * (S + S.T)


def loss_output_matrix(root: np.ndarray) -> np.ndarray:
    """``[[R, 0, 0], [0, 0, R]]`` for an N x N loss root ``R``."""
    n = root.shape[0]
    Z = np.zeros((n, n))
    return np.block([[root, Z, Z], [Z, Z, root]])


def _input_matrix(tau_p, tau_q):
    n = len(tau_p)
    Z = np.zeros((n, n))
    return np.block([[Z, Z], [np.diag(1 / tau_p), Z], [Z, np.diag(1 / tau_q)]])


def assemble_full(graph: NetworkGraph, params: InverterParams, *, check_connected: bool = True) -> StateSpaceModel:
    """Heterogeneous model with the full cross-coupling through ``L_G``."""
    if check_connected:
        require_connected(graph)
    n = graph.n_nodes
    p = params.per_node(n)
    LB = build_laplacian(graph, "susceptance")
    LG = build_laplacian(graph, "conductance")
    I, Z = np.eye(n), np.zeros((n, n))
    kp_tp = np.diag(p["k_p"] / p["tau_p"])
    kq_tq = np.diag(p["k_q"] / p["tau_q"])
    A = np.block([
        [Z, I, Z],
        [-kp_tp @ LB, -np.diag(1 / p["tau_p"]), kp_tp @ LG],
        [-kq_tq @ LG, Z, -np.diag(p["c_q"] / p["tau_q"]) - kq_tq @ LB],
    ])
    B = _input_matrix(p["tau_p"], p["tau_q"])
    C = loss_output_matrix(psd_sqrt(LG))
    return StateSpaceModel(A, B, C, n, "full", graph, params)


def _uniform_blocks(graph, params, alpha, coupled):
    p = params.uniform()
    n = graph.n_nodes
    LB = build_laplacian(graph, "susceptance")
    I, Z = np.eye(n), np.zeros((n, n))
    kp_tp = p.k_p / p.tau_p
    kq_tq = p.k_q / p.tau_q
    A = np.block([
        [Z, I, Z],
        [-kp_tp * LB, -(1 / p.tau_p) * I, kp_tp * alpha * LB if coupled else Z],
        [-kq_tq * alpha * LB if coupled else Z, Z, -(p.c_q / p.tau_q) * I - kq_tq * LB],
    ])
    B = _input_matrix(np.full(n, p.tau_p), np.full(n, p.tau_q))
    C = loss_output_matrix(np.sqrt(alpha) * psd_sqrt(LB))
    return A, B, C, p


def assemble_decoupled(graph: NetworkGraph, params: InverterParams, *, check_connected: bool = True) -> StateSpaceModel:
    """Identical inverters, lossless power flow in ``A``, losses kept in ``C``."""
    if check_connected:
        require_connected(graph)
    alpha = params.resolve_alpha(graph)
    A, B, C, p = _uniform_blocks(graph, params, alpha, coupled=False)
    return StateSpaceModel(A, B, C, graph.n_nodes, "decoupled", graph, p.with_alpha(alpha))


def assemble_coupled(graph: NetworkGraph, params: InverterParams, *, check_connected: bool = True) -> StateSpaceModel:
    """Identical inverters with the alpha-proportional cross-coupling blocks."""
    if check_connected:
        require_connected(graph)
    alpha = params.resolve_alpha(graph)
    A, B, C, p = _uniform_blocks(graph, params, alpha, coupled=True)
    return StateSpaceModel(A, B, C, graph.n_nodes, "coupled", graph, p.with_alpha(alpha))


def instantaneous_loss(graph: NetworkGraph, delta, V) -> float:
    """Quadratic-form approximation of the total resistive loss."""
    delta = np.asarray(delta, dtype=float)
    V = np.asarray(V, dtype=float)
    n = graph.n_nodes
    if delta.shape != (n,) or V.shape != (n,):
        raise ValueError(f"expected vectors of length {n}")
    LG = build_laplacian(graph, "conductance")
    return float(V @ LG @ V + delta @ LG @ delta)
