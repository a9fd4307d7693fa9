"""Euler-Maruyama simulation of the LTI models and empirical H2 estimates.

The simulator works on phase differences relative to node 1 plus a separately
tracked reference phase. Since ``A`` and ``C`` ignore a uniform phase shift,
shifting every initial phase by the same constant leaves the reduced state,
and therefore every loss sample, bit-for-bit unchanged.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit
from scipy.special import roots_legendre
import scipy.linalg as spla

from .dynamics import StateSpaceModel
from .errors import UnstableModelError, ValidationError

STEP_GUARD = 0.5
CHUNK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    horizon: float = 100.0
    burn_in: float = 0.2
    seed: int = 0
    noise_intensity: float | np.ndarray = 1.0
    initial_state: Optional[np.ndarray] = None
    record_stride: int = 1
    n_batches: int = 50

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if not self.horizon > 0:
            raise ValidationError("horizon must be positive")
        if not 0 <= self.burn_in < 1:
            raise ValidationError("burn_in must lie in [0, 1)")
        if int(self.record_stride) < 1:
            raise ValidationError("record_stride must be >= 1")
        if int(self.n_batches) < 2:
            raise ValidationError("n_batches must be >= 2")
        if np.any(np.asarray(self.noise_intensity) < 0):
            raise ValidationError("noise intensity must be non-negative")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples every ``stride`` steps.

    ``cumulative_loss`` is the left Riemann sum of the loss at full step
    resolution, sampled at the recorded times.
    """

    times: np.ndarray
    states: np.ndarray
    loss_series: np.ndarray
    cumulative_loss: np.ndarray
    empirical_h2: float
    stderr: float
    n_nodes: int
    labels: tuple[str, ...] = field(default=(), repr=False)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *self.labels, "loss"])
            for t, x, l in zip(self.times, self.states, self.loss_series):
                w.writerow([repr(float(t)), *(repr(float(v)) for v in x), repr(float(l))])


def grounded_reduction(model: StateSpaceModel):
    """Coordinates ``(delta_2 - delta_1, ..., delta_N - delta_1, omega, V)``.

    Returns ``(A_r, B_r, C_r, P, E)`` with ``x_r = P x`` and ``x = E x_r`` up
    to a uniform phase shift.
    """
    n = model.n_nodes
    D = np.hstack([-np.ones((n - 1, 1)), np.eye(n - 1)])
    P = spla.block_diag(D, np.eye(2 * n))
    Lift = np.vstack([np.zeros((1, n - 1)), np.eye(n - 1)])
    E = spla.block_diag(Lift, np.eye(2 * n))
    return P @ model.A @ E, P @ model.B, model.C @ E, P, E


@njit(cache=True)
def _em_chunk(M, G, C, x, ref, noise, use_noise, dt, ref_idx,
              loss, rec_states, rec_ref, stride, offset):
    r = x.shape[0]
    m = G.shape[1]
    p = C.shape[0]
    xn = np.empty(r)
    rec = 0
    for s in range(noise.shape[0]):
        acc = 0.0
        for i in range(p):
            y = 0.0
            for j in range(r):
                y += C[i, j] * x[j]
            acc += y * y
        loss[s] = acc
        if (offset + s) % stride == 0:
            for j in range(r):
                rec_states[rec, j] = x[j]
            rec_ref[rec] = ref[0]
            rec += 1
        for i in range(r):
            v = 0.0
            for j in range(r):
                v += M[i, j] * x[j]
            if use_noise:
                for j in range(m):
                    v += G[i, j] * noise[s, j]
            xn[i] = v
        ref[0] += dt * x[ref_idx]
        for i in range(r):
            x[i] = xn[i]
    return rec


def _loss(C, x):
    y = C @ x
    return float(y @ y)


def step_guard(model: StateSpaceModel, dt: float) -> None:
    rho = float(np.abs(np.linalg.eigvals(model.A)).max())
    if dt * rho >= STEP_GUARD:
        raise ValidationError(f"dt * |lambda|_max = {dt * rho:.3g} >= {STEP_GUARD}; reduce dt")


def _noise_scale(intensity, m):
    s = np.asarray(intensity, dtype=float)
    if s.ndim == 0:
        s = np.full(m, float(s))
    if s.shape != (m,):
        raise ValidationError(f"noise intensity needs {m} channels, got {s.shape}")
    return np.sqrt(s)


def _run(model: StateSpaceModel, cfg: SimConfig, record: bool):
    step_guard(model, cfg.dt)
    n = model.n_nodes
    Ar, Br, Cr, P, E = grounded_reduction(model)
    r, m = Br.shape
    dt = cfg.dt
    M = np.ascontiguousarray(np.eye(r) + dt * Ar)
    scale = _noise_scale(cfg.noise_intensity, m)
    G = np.ascontiguousarray(np.sqrt(dt) * Br * scale)
    use_noise = bool(np.any(scale > 0))
    Cr = np.ascontiguousarray(Cr)

    x0 = np.zeros(3 * n) if cfg.initial_state is None else np.asarray(cfg.initial_state, dtype=float)
    if x0.shape != (3 * n,):
        raise ValidationError(f"initial_state must have length {3 * n}")
    x = np.ascontiguousarray(P @ x0)
    ref = np.array([x0[0]])

    n_steps = cfg.n_steps
    stride = int(cfg.record_stride) if record else n_steps + 1
    n_rec = n_steps // stride + 1
    rec_states = np.empty((n_rec, r))
    rec_ref = np.empty(n_rec)
    rec_loss = np.empty(n_rec)
    rec_cum = np.empty(n_rec)

    b0 = int(round(cfg.burn_in * n_steps))
    n_post = n_steps + 1 - b0
    nb = int(cfg.n_batches)
    batch_sums = np.zeros(nb)
    batch_counts = np.zeros(nb)

    rng = np.random.default_rng(cfg.seed)
    cum = 0.0
    rec_pos = 0
    for start in range(0, n_steps, CHUNK):
        k = min(CHUNK, n_steps - start)
        # the kernel only reads noise rows when use_noise is set
        noise = rng.standard_normal((k, m)) if use_noise else np.zeros((k, 1))
        loss = np.empty(k)
        got = _em_chunk(M, G, Cr, x, ref, noise, use_noise, dt, n - 1,
                        loss, rec_states[rec_pos:], rec_ref[rec_pos:], stride, start)
        idx = np.arange(start, start + k)
        sel = idx % stride == 0
        csum = cum + dt * np.concatenate([[0.0], np.cumsum(loss)[:-1]])
        rec_loss[rec_pos:rec_pos + got] = loss[sel]
        rec_cum[rec_pos:rec_pos + got] = csum[sel]
        rec_pos += got
        cum += dt * loss.sum()
        post = idx >= b0
        if post.any():
            bid = (idx[post] - b0) * nb // n_post
            batch_sums += np.bincount(bid, weights=loss[post], minlength=nb)
            batch_counts += np.bincount(bid, minlength=nb)

    final_loss = _loss(Cr, x)
    if n_steps % stride == 0:
        rec_states[rec_pos] = x
        rec_ref[rec_pos] = ref[0]
        rec_loss[rec_pos] = final_loss
        rec_cum[rec_pos] = cum
        rec_pos += 1
    batch_sums[-1] += final_loss
    batch_counts[-1] += 1

    estimate = float(batch_sums.sum() / batch_counts.sum())
    filled = batch_counts > 0
    means = batch_sums[filled] / batch_counts[filled]
    stderr = float(means.std(ddof=1) / np.sqrt(means.size)) if means.size > 1 else float("nan")

    states = rec_states[:rec_pos] @ E.T
    states[:, :n] += rec_ref[:rec_pos, None]
    times = np.arange(rec_pos) * stride * dt
    return Trajectory(times, states, rec_loss[:rec_pos], rec_cum[:rec_pos],
                      estimate, stderr, n, tuple(model.state_labels())), cum


def simulate(model: StateSpaceModel, config: SimConfig) -> Trajectory:
    """Euler-Maruyama run ``x_{k+1} = x_k + dt A x_k + sqrt(dt) B xi_k``.

    ``xi_k`` is standard normal per input channel, scaled by the square root
    of ``config.noise_intensity``. Deterministic given ``config.seed``.
    """
    traj, _ = _run(model, config, record=True)
    return traj


def slowest_observable_rate(model: StateSpaceModel) -> float:
    Ar = grounded_reduction(model)[0]
    ab = float(np.linalg.eigvals(Ar).real.max())
    if ab >= 0:
        raise UnstableModelError(f"observable subspace unstable (abscissa {ab:.3e})")
    return -ab


def empirical_h2(model: StateSpaceModel, config: SimConfig) -> tuple[float, float]:
    """Time-averaged loss after burn-in, with a batch-means standard error."""
    if not config.burn_in > 0:
        raise ValidationError("empirical_h2 needs burn_in > 0")
    rate = slowest_observable_rate(model)
    window = config.horizon * (1 - config.burn_in)
    if window < 10.0 / rate:
        raise ValidationError(
            f"averaging window {window:.3g}s shorter than 10 slowest time constants ({10 / rate:.3g}s)")
    traj, _ = _run(model, config, record=False)
    return traj.empirical_h2, traj.stderr


def impulse_energies(model: StateSpaceModel, *, order: int = 8, tail: float = 40.0) -> np.ndarray:
    """``int_0^inf ||C exp(At) B e_j||^2 dt`` for every input channel ``j``.

    The reduced state is propagated exactly with matrix exponentials over
    steps of length ``h = 1 / |lambda|_max`` and each step is integrated by
    Gauss-Legendre quadrature, out to ``tail`` slowest time constants.
    """
    Ar, Br, Cr, _, _ = grounded_reduction(model)
    ev = np.linalg.eigvals(Ar)
    if ev.real.max() >= 0:
        raise UnstableModelError("observable subspace unstable")
    rate = -ev.real.max()
    h = 1.0 / np.abs(ev).max()
    n_int = int(np.ceil(tail / rate / h))
    nodes, weights = roots_legendre(order)
    s = 0.5 * h * (nodes + 1)
    w = 0.5 * h * weights
    Phis = [Cr @ spla.expm(Ar * sj) for sj in s]
    step = spla.expm(Ar * h)
    X = Br.copy()
    energy = np.zeros(Br.shape[1])
    for _ in range(n_int):
        for wj, CP in zip(w, Phis):
            Y = CP @ X
            energy += wj * np.einsum("ij,ij->j", Y, Y)
        X = step @ X
    return energy


def impulse_energy(model: StateSpaceModel, channel: int) -> float:
    return float(impulse_energies(model)[channel])


def settling_time(times, loss, fraction: float = 0.05) -> float:
    """First time after which ``loss`` stays below ``fraction`` of its peak."""
    loss = np.asarray(loss)
    peak = loss.max()
    if peak <= 0:
        return 0.0
    above = np.nonzero(loss > fraction * peak)[0]
    if above.size == 0:
        return float(times[0])
    last = above[-1]
    if last + 1 >= len(times):
        return float("inf")
    return float(times[last + 1])
