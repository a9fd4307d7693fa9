import math

import numpy as np
import pytest

from drooploss.coupled import (
    GammaCurve,
    check_series_upper_bound,
    coupled_coefficient_complete,
    coupling_ratio,
    fit_alpha_exponent,
    gamma,
    gamma_curve,
    gamma_series_complete,
)
from drooploss.dynamics import InverterParams
from drooploss.errors import UnstableModelError, ValidationError
from drooploss.h2 import complete_graph_asymptote
from drooploss.network import complete_graph, path_graph

FIG4 = InverterParams(k_p=1.0, k_q=2.0, tau_p=0.5, tau_q=0.5, shunt_b=0.0)


def test_series_coefficients():
    assert coupling_ratio(FIG4) == pytest.approx(0.25)
    c1 = coupled_coefficient_complete(FIG4, 50, 1)
    c2 = coupled_coefficient_complete(FIG4, 50, 2)
    c3 = coupled_coefficient_complete(FIG4, 50, 3)
    assert c1 == pytest.approx(49.0)
    assert c1 == pytest.approx(complete_graph_asymptote(FIG4.with_alpha(0.5), 50) / 0.5)
    assert c2 == pytest.approx(12.25)
    assert c2 / c1 == pytest.approx(coupling_ratio(FIG4))
    assert c3 / c2 == pytest.approx(coupling_ratio(FIG4))


def test_series_closed_form_and_partial_sums():
    p = InverterParams()
    assert gamma_series_complete(p, 0.1) == pytest.approx(0.01 / 0.99, rel=1e-14)
    assert gamma_series_complete(p, 0.1, terms=1) == pytest.approx(0.01)
    assert gamma_series_complete(p, 0.1, terms=2) == pytest.approx(0.0101)
    assert gamma_series_complete(p, 0.1, terms=0) == 0.0
    with pytest.raises(ValidationError):
        gamma_series_complete(InverterParams(k_p=4.0), 0.5)


def test_fit_exponent_of_known_curve():
    a = np.linspace(0.01, 0.05, 9)
    curve = GammaCurve(tuple(a), tuple(3 * a**2 + 5 * a**4))
    slope = fit_alpha_exponent(curve)
    assert 2.0 < slope < 2.01


def test_fit_drops_nonpositive_and_needs_points():
    curve = GammaCurve((0.1, 0.2, 0.3, 0.4), (0.0, 0.04, 0.09, 0.16))
    assert fit_alpha_exponent(curve) == pytest.approx(2.0)
    with pytest.raises(ValidationError):
        fit_alpha_exponent(GammaCurve((0.1, 0.2), (0.01, 0.04)))


def test_gamma_curve_validation():
    with pytest.raises(ValidationError):
        GammaCurve((0.2, 0.1), (0.0, 0.0))


def test_gamma_zero_at_zero_alpha():
    assert gamma(complete_graph(5), FIG4, 0.0) == 0.0


def test_gamma_complete_graph_tracks_series():
    g = complete_graph(50, 5.0)
    measured = gamma(g, FIG4, 0.1)
    predicted = gamma_series_complete(FIG4, 0.1)
    assert predicted == pytest.approx(0.0025 / 0.9975)
    assert abs(measured / predicted - 1) < 0.05


def test_gamma_line_graph_below_series(tmp_path):
    curve = gamma_curve(path_graph(20, 5.0), FIG4, [0.05, 0.1, 0.2])
    assert check_series_upper_bound(curve) == []
    assert curve.fitted_exponent == pytest.approx(2.0, abs=0.1)
    out = tmp_path / "g.csv"
    curve.write_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "alpha,gamma_measured,gamma_series,ratio"
    assert len(lines) == 4


def test_unstable_coupling_raises():
    # fast voltage loop, slow phase loop and strong coupling: one unstable mode at lambda = 27
    p = InverterParams(k_p=17.4, k_q=0.024, tau_p=6.28, tau_q=0.075)
    with pytest.raises(UnstableModelError):
        gamma(path_graph(2, 13.5), p, 0.85)
    assert gamma(path_graph(2, 13.5), p, 0.05) > 0


def test_series_upper_bound_logs(caplog):
    curve = GammaCurve((0.1,), (1.0,), (0.5,))
    assert check_series_upper_bound(curve) == [0.1]
    assert any("exceeds" in r.message for r in caplog.records)
    assert math.isnan(GammaCurve((0.1,), (1.0,)).fitted_exponent)
