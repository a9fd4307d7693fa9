"""Squared H2 norms of the loss output: Gramian, closed-form and modal routes.

Also holds the topology bounds for complete and line graphs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spla

from .dynamics import InverterParams, StateSpaceModel
from .errors import (
    DisconnectedGraphError,
    LyapunovResidualError,
    TopologyError,
    UnstableModelError,
    ValidationError,
)
from .network import NetworkGraph, build_laplacian, is_complete, is_path

LYAP_RTOL = 1e-8


@dataclass(frozen=True)
class H2Report:
    total: float
    phase_part: float
    voltage_part: float
    method: str
    per_mode: tuple[tuple[float, float], ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "phase_part": self.phase_part,
            "voltage_part": self.voltage_part,
            "method": self.method,
            "per_mode": [list(m) for m in self.per_mode],
        }


@dataclass(frozen=True)
class BoundsReport:
    lower: float
    upper: float
    mean_susceptance: float
    min_susceptance: float
    equality_expected: bool
    topology: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve ``A^T X + X A = -Q`` for Hurwitz ``A`` (Bartels-Stewart).

    The solution is symmetrised and its residual checked against
    ``1e-8 * ||Q||_F``.
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    ev = np.linalg.eigvals(A)
    if ev.size and ev.real.max() >= 0:
        raise UnstableModelError(f"A is not Hurwitz (spectral abscissa {ev.real.max():.3e})")
    X = spla.solve_continuous_lyapunov(A.T, -Q)
    X = 0.5 * (X + X.T)
    res = np.linalg.norm(A.T @ X + X @ A + Q, "fro")
    if res > LYAP_RTOL * np.linalg.norm(Q, "fro"):
        raise LyapunovResidualError(f"Lyapunov residual {res:.3e} exceeds tolerance")
    return X


def _orthonormal_complement_of_ones(n):
    # columns span the subspace orthogonal to the all-ones vector
    return spla.null_space(np.ones((1, n)))


def deflate(model: StateSpaceModel):
    """Remove the mean-phase mode; returns ``(A_r, B_r, C_r)`` of order ``3N - 1``.

    The phase block is restricted to an orthonormal basis ``Q`` of the
    complement of the all-ones vector. Because ``A`` and ``C`` annihilate the
    uniform phase direction, the discarded coordinate (the mean phase) feeds
    nothing back and is unobservable, so the transfer function is unchanged.
    """
    n = model.n_nodes
    Q = _orthonormal_complement_of_ones(n)
    T = spla.block_diag(Q.T, np.eye(2 * n))
    Tinv = spla.block_diag(Q, np.eye(2 * n))
    return T @ model.A @ Tinv, T @ model.B, model.C @ Tinv


def _gramian_parts(A, B, C, n_phase_rows):
    Cp, Cv = C[:n_phase_rows], C[n_phase_rows:]
    Xp = solve_lyapunov(A, Cp.T @ Cp)
    Xv = solve_lyapunov(A, Cv.T @ Cv)
    return float(np.trace(B.T @ Xp @ B)), float(np.trace(B.T @ Xv @ B))


def h2_norm_gramian(model: StateSpaceModel) -> H2Report:
    """Squared H2 norm ``trace(B^T X B)`` from the deflated observability Gramian.

    ``phase_part`` and ``voltage_part`` are the contributions of the phase and
    voltage output rows; they add up to the total for any model.
    """
    Ar, Br, Cr = deflate(model)
    ev = np.linalg.eigvals(Ar)
    if ev.real.max() >= 0:
        raise UnstableModelError(
            f"observable subspace is unstable (spectral abscissa {ev.real.max():.3e})")
    phase, volt = _gramian_parts(Ar, Br, Cr, model.n_nodes)
    return H2Report(phase + volt, phase, volt, "gramian")


def _nonzero_modes(laplacian_eigs):
    lam = np.sort(np.asarray(laplacian_eigs, dtype=float))
    if lam.size < 2:
        return lam[:0]
    if lam[1] <= 1e-9 * max(lam[-1], 1e-300):
        raise DisconnectedGraphError("graph not connected (second Laplacian eigenvalue ~ 0)")
    return lam[1:]


def _alpha(params):
    if params.alpha is None:
        raise ValidationError("params.alpha must be set for this computation")
    return params.alpha


def modal_gramian(params: InverterParams, lambda_b: float) -> tuple[float, float]:
    """Diagonal Gramian entries ``(X22, X33)`` of one decoupled Laplacian mode."""
    p = params.uniform()
    if not lambda_b > 0:
        raise ValidationError("modal Gramian needs a positive Laplacian eigenvalue")
    a = _alpha(p)
    x22 = a * p.tau_p**2 / (2 * p.k_p)
    x33 = (a * p.tau_q / 2) / (p.c_q / lambda_b + p.k_q)
    return x22, x33


def h2_norm_analytic(params: InverterParams, laplacian_eigs) -> H2Report:
    """Closed-form squared H2 norm of the decoupled uniform model."""
    p = params.uniform()
    a = _alpha(p)
    lam = _nonzero_modes(laplacian_eigs)
    per_mode = []
    volt = 0.0
    for lb in lam:
        x22, x33 = modal_gramian(p, lb)
        volt += x33 / p.tau_q**2
        per_mode.append((float(lb), x22 / p.tau_p**2 + x33 / p.tau_q**2))
    # every mode contributes the same alpha/(2 k_p): no topology dependence
    phase = a * len(lam) / (2 * p.k_p)
    return H2Report(phase + volt, phase, volt, "analytic", tuple(per_mode))


def modal_system(params: InverterParams, lambda_b: float, *, coupled: bool = False):
    """3x3 per-mode ``(A_n, B_n, C_n)`` after diagonalising ``L_B``."""
    p = params.uniform()
    a = _alpha(p)
    kp, kq = p.k_p / p.tau_p, p.k_q / p.tau_q
    A = np.array([
        [0.0, 1.0, 0.0],
        [-kp * lambda_b, -1 / p.tau_p, kp * a * lambda_b if coupled else 0.0],
        [-kq * a * lambda_b if coupled else 0.0, 0.0, -p.c_q / p.tau_q - kq * lambda_b],
    ])
    B = np.array([[0.0, 0.0], [1 / p.tau_p, 0.0], [0.0, 1 / p.tau_q]])
    C = np.sqrt(a * lambda_b) * np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    return A, B, C


def h2_norm_modal(params: InverterParams, laplacian_eigs, *, coupled: bool = False) -> H2Report:
    """Sum of per-mode Gramian norms; valid for the decoupled and coupled uniform models."""
    lam = _nonzero_modes(laplacian_eigs)
    per_mode = []
    phase = volt = 0.0
    for lb in lam:
        A, B, C = modal_system(params, lb, coupled=coupled)
        ph, vo = _gramian_parts(A, B, C, 1)
        phase += ph
        volt += vo
        per_mode.append((float(lb), ph + vo))
    return H2Report(phase + volt, phase, volt, "modal", tuple(per_mode))


def _bound(p, n, mean_eig):
    a = _alpha(p)
    return a / 2 * (n - 1) * (1 / p.k_p + 1 / (p.tau_q * (p.c_q / mean_eig + p.k_q)))


def complete_graph_bounds(params: InverterParams, graph: NetworkGraph) -> BoundsReport:
    """Upper (mean susceptance) and lower (minimum susceptance) bounds on a complete graph."""
    if not is_complete(graph):
        raise TopologyError("complete_graph_bounds needs a complete graph")
    p = params.uniform()
    n = graph.n_nodes
    b = graph.susceptances
    b_mean, b_min = float(b.mean()), float(b.min())
    return BoundsReport(
        lower=_bound(p, n, n * b_min),
        upper=_bound(p, n, n * b_mean),
        mean_susceptance=b_mean,
        min_susceptance=b_min,
        equality_expected=bool(np.ptp(b) <= 1e-12 * b.max()),
        topology="complete",
    )


def complete_graph_asymptote(params: InverterParams, n: int) -> float:
    """Large-N limit of the complete-graph norm."""
    p = params.uniform()
    return _alpha(p) / 2 * (n - 1) * (1 / p.k_p + 1 / (p.tau_q * p.k_q))


def path_graph_bound(params: InverterParams, graph: NetworkGraph) -> BoundsReport:
    """Upper bound for a line graph via the mean nonzero eigenvalue ``2 * mean(b)``."""
    if not is_path(graph):
        raise TopologyError("path_graph_bound needs a path (line) graph")
    p = params.uniform()
    b = graph.susceptances
    b_mean = float(b.mean())
    return BoundsReport(
        lower=0.0,
        upper=_bound(p, graph.n_nodes, 2 * b_mean),
        mean_susceptance=b_mean,
        min_susceptance=float(b.min()),
        equality_expected=False,
        topology="path",
    )


def mean_nonzero_eigenvalue(graph: NetworkGraph) -> float:
    """``trace(L_B) / (N - 1)``, the mean of the nonzero Laplacian eigenvalues."""
    return float(np.trace(build_laplacian(graph, "susceptance")) / (graph.n_nodes - 1))
