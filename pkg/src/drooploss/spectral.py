"""Closed-form and numerical spectra, and stability certification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import InverterParams, StateSpaceModel
from .errors import NumericalError
from .network import laplacian_eigenvalues

ZERO_RTOL = 1e-9


@dataclass(frozen=True)
class SpectrumReport:
    laplacian_eigenvalues: tuple[float, ...]
    system_eigenvalues: tuple[complex, ...]
    stable_observable: bool
    spectral_abscissa_observable: float
    n_zero: int
    certified_by: str
    diagnosis: str = ""

    def to_dict(self) -> dict:
        return {
            "laplacian_eigenvalues": list(self.laplacian_eigenvalues),
            "system_eigenvalues": [[z.real, z.imag] for z in self.system_eigenvalues],
            "stable_observable": self.stable_observable,
            "spectral_abscissa_observable": self.spectral_abscissa_observable,
            "n_zero": self.n_zero,
            "certified_by": self.certified_by,
            "diagnosis": self.diagnosis,
        }


def analytic_spectrum(params: InverterParams, laplacian_eigs) -> np.ndarray:
    """Eigenvalues of the decoupled uniform model from the Laplacian spectrum.

    Each Laplacian eigenvalue ``lam`` contributes the phase pair
    ``-(1 +- sqrt(1 - 4 k_p tau_p lam)) / (2 tau_p)``, the roots of
    ``tau_p s^2 + s + k_p lam = 0``, and the voltage mode
    ``-(c_q + k_q lam) / tau_q``. The ``lam = 0`` entry yields the structural
    zero, ``-1/tau_p`` and ``-c_q/tau_q``.
    """
    p = params.uniform()
    lam = np.asarray(laplacian_eigs, dtype=float)
    root = np.sqrt((1.0 - 4.0 * p.k_p * p.tau_p * lam).astype(complex))
    upper = -(1.0 + root) / (2.0 * p.tau_p)
    lower = -(1.0 - root) / (2.0 * p.tau_p)
    volt = (-(p.c_q + p.k_q * lam) / p.tau_q).astype(complex)
    return np.concatenate([lower, upper, volt])


def numeric_spectrum(model: StateSpaceModel) -> np.ndarray:
    """Eigenvalues of ``A`` sorted by real part, then imaginary part."""
    try:
        ev = np.linalg.eigvals(model.A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolve failed: {exc}") from exc
    return ev[np.lexsort((ev.imag, ev.real))]


def match_multisets(a, b, tol: float = 1e-8) -> bool:
    """Greedy nearest-neighbour pairing of two complex multisets."""
    a = list(np.asarray(a, dtype=complex))
    b = list(np.asarray(b, dtype=complex))
    if len(a) != len(b):
        return False
    remaining = np.array(b)
    used = np.zeros(len(b), dtype=bool)
    for z in sorted(a, key=lambda z: (z.real, z.imag)):
        d = np.where(used, np.inf, np.abs(remaining - z))
        j = int(np.argmin(d))
        if d[j] > tol:
            return False
        used[j] = True
    return True


def certify_stability(model: StateSpaceModel) -> SpectrumReport:
    """Check that every eigenvalue except one structural zero is in the open LHP.

    Zero identification uses ``|lambda| < 1e-9 * ||A||_F``. Models other than
    the decoupled one are certified numerically only.
    """
    ev = numeric_spectrum(model)
    tol = ZERO_RTOL * max(np.linalg.norm(model.A, "fro"), 1.0)
    n_zero = int((np.abs(ev) < tol).sum())
    # the uniform-phase direction is always in the kernel
    rest = np.delete(ev, np.argmin(np.abs(ev)))
    abscissa = float(rest.real.max()) if rest.size else -np.inf
    diagnosis = ""
    stable = abscissa < -tol
    if n_zero > 1:
        stable = False
        diagnosis = f"degenerate: {n_zero} eigenvalues at zero (disconnected graph or c_q <= 0)"
    elif not stable:
        diagnosis = "eigenvalue with non-negative real part on the observable subspace"

    lap = ()
    if model.graph is not None:
        lap = tuple(float(x) for x in laplacian_eigenvalues(model.graph))
    certified_by = "theorem+numeric" if model.kind == "decoupled" else "numeric"
    return SpectrumReport(
        laplacian_eigenvalues=lap,
        system_eigenvalues=tuple(complex(z) for z in ev),
        stable_observable=bool(stable),
        spectral_abscissa_observable=abscissa,
        n_zero=n_zero,
        certified_by=certified_by,
        diagnosis=diagnosis,
    )
