"""Effect of the alpha-proportional cross-coupling on the loss norm.

``gamma`` is the relative change of the squared norm when the coupling blocks
are switched on. For large complete graphs it follows a geometric series in
``x = k_p tau_q alpha^2 / k_q``.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import InverterParams, assemble_coupled
from .errors import UnstableModelError, ValidationError
from .h2 import h2_norm_analytic, h2_norm_gramian
from .network import NetworkGraph, laplacian_eigenvalues
from .spectral import certify_stability

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GammaCurve:
    alphas: tuple[float, ...]
    gammas: tuple[float, ...]
    series_prediction: tuple[float, ...] = field(default=())
    fitted_exponent: float = math.nan

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        if len(self.gammas) != a.size:
            raise ValidationError("alphas and gammas differ in length")
        if a.size > 1 and np.any(np.diff(a) <= 0):
            raise ValidationError("alphas must be strictly increasing")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["alpha", "gamma_measured", "gamma_series", "ratio"])
            series = self.series_prediction or (math.nan,) * len(self.alphas)
            for a, g, s in zip(self.alphas, self.gammas, series):
                ratio = g / s if s and not math.isnan(s) else math.nan
                w.writerow([repr(float(a)), repr(float(g)), repr(float(s)), repr(float(ratio))])


def coupling_ratio(params: InverterParams) -> float:
    """``k_p tau_q / k_q``: ratio of consecutive series coefficients."""
    p = params.uniform()
    return p.k_p * p.tau_q / p.k_q


def gamma(graph: NetworkGraph, params: InverterParams, alpha: float | None = None) -> float:
    """Relative error of the decoupled norm against the cross-coupled one.

    The coupled norm comes from the dense Gramian solve, the decoupled one
    from the closed form. Raises :class:`UnstableModelError` when alpha is
    too large for the coupled model to be stable.
    """
    if alpha is None:
        alpha = params.resolve_alpha(graph)
    p = params.uniform().with_alpha(alpha)
    if alpha == 0:
        return 0.0
    model = assemble_coupled(graph, p)
    rep = certify_stability(model)
    if not rep.stable_observable:
        raise UnstableModelError(f"coupled model unstable at alpha={alpha}: {rep.diagnosis}")
    coupled_norm = h2_norm_gramian(model).total
    base = h2_norm_analytic(p, laplacian_eigenvalues(graph)).total
    return (coupled_norm - base) / base


def gamma_series_complete(params: InverterParams, alpha: float, terms: int | None = None) -> float:
    """Partial sum ``x + x^2 + ... + x^terms``; ``terms=None`` gives ``x / (1 - x)``."""
    x = coupling_ratio(params) * alpha**2
    if x >= 1:
        raise ValidationError(f"series diverges: k_p tau_q alpha^2 / k_q = {x} >= 1")
    if terms is None or terms == math.inf:
        return x / (1 - x)
    if terms < 0:
        raise ValidationError("terms must be non-negative")
    return float(sum(x**k for k in range(1, int(terms) + 1)))


def coupled_coefficient_complete(params: InverterParams, n: int, k: int) -> float:
    """Coefficient of ``alpha^(2k-1)`` in the large-N complete-graph norm expansion."""
    if k < 1:
        raise ValidationError("coefficient index must be >= 1")
    p = params.uniform()
    if k == 1:
        # the large-N norm divided by alpha
        return (n - 1) / 2 * (1 / p.k_p + 1 / (p.tau_q * p.k_q))
    return (n - 1) * (p.k_p + p.k_q * p.tau_q) / (2 * p.k_q**2) * coupling_ratio(p) ** (k - 2)


def fit_alpha_exponent(curve: GammaCurve, *, min_points: int = 3) -> float:
    """Least-squares slope of ``log gamma`` against ``log alpha``; drops gamma <= 0."""
    a = np.asarray(curve.alphas, dtype=float)
    g = np.asarray(curve.gammas, dtype=float)
    ok = (g > 0) & (a > 0) & np.isfinite(g)
    if ok.sum() < min_points:
        raise ValidationError(f"need at least {min_points} positive samples, got {int(ok.sum())}")
    slope, _ = np.polyfit(np.log(a[ok]), np.log(g[ok]), 1)
    return float(slope)


def gamma_curve(
    graph: NetworkGraph,
    params: InverterParams,
    alphas: Sequence[float],
    *,
    with_series: bool = True,
) -> GammaCurve:
    """Sweep ``gamma`` over ``alphas``; unstable points raise."""
    alphas = tuple(float(a) for a in alphas)
    gammas = tuple(gamma(graph, params, a) for a in alphas)
    series = tuple(gamma_series_complete(params, a) for a in alphas) if with_series else ()
    curve = GammaCurve(alphas, gammas, series)
    try:
        exponent = fit_alpha_exponent(curve)
    except ValidationError:
        exponent = math.nan
    return GammaCurve(alphas, gammas, series, exponent)


def check_series_upper_bound(curve: GammaCurve) -> list[float]:
    """Alphas where measured gamma exceeds the complete-graph series.

    The series bounding gamma on other topologies is an empirical observation,
    not a theorem, so violations are logged rather than raised.
    """
    bad = [a for a, g, s in zip(curve.alphas, curve.gammas, curve.series_prediction) if g > s]
    if bad:
        log.warning("gamma exceeds complete-graph series at alpha=%s", bad)
    return bad
