import numpy as np
from hypothesis import given

from drooploss.dynamics import InverterParams, StateSpaceModel, assemble_coupled, assemble_decoupled
from drooploss.network import Edge, NetworkGraph, laplacian_eigenvalues, path_graph
from drooploss.spectral import (
    analytic_spectrum,
    certify_stability,
    match_multisets,
    numeric_spectrum,
)

from conftest import connected_graphs, uniform_params


def test_two_node_complex_pair():
    # lambda = 2: s^2 + s + 2 = 0
    ev = analytic_spectrum(InverterParams(), [0.0, 2.0])
    assert match_multisets(ev, [0, -1, -0.5 + 1j * np.sqrt(7) / 2, -0.5 - 1j * np.sqrt(7) / 2, -1, -3],
                           tol=1e-14)


def test_two_node_real_pair():
    # k_p = tau_p = 0.1, lambda = 2: 0.1 s^2 + s + 0.2 = 0
    p = InverterParams(k_p=0.1, tau_p=0.1)
    ev = analytic_spectrum(p, [2.0])
    r = np.sqrt(0.92)
    assert np.allclose(np.sort(ev[:2].real), np.sort([-5 * (1 - r), -5 * (1 + r)]), atol=1e-13)
    assert np.allclose(ev[:2].imag, 0)
    m = assemble_decoupled(path_graph(2), p.with_alpha(0.2))
    assert match_multisets(numeric_spectrum(m), analytic_spectrum(p, [0.0, 2.0]))


@given(connected_graphs(max_n=10), uniform_params())
def test_analytic_matches_numeric(graph, params):
    m = assemble_decoupled(graph, params)
    assert match_multisets(analytic_spectrum(params, laplacian_eigenvalues(graph)),
                           numeric_spectrum(m), tol=1e-8)


def test_single_node_spectrum():
    g = NetworkGraph(1, ())
    p = InverterParams(tau_p=0.5, tau_q=2.0, alpha=0.2)
    m = assemble_decoupled(g, p)
    assert match_multisets(numeric_spectrum(m), [0.0, -2.0, -0.5])


def test_match_multisets_respects_multiplicity():
    assert match_multisets([1, 1, 2], [1, 2, 1])
    assert not match_multisets([1, 1, 2], [1, 2, 2])
    assert not match_multisets([1, 2], [1, 2, 3])


def test_certify_decoupled_stable():
    g = path_graph(4, b_range=(0.5, 2), seed=0)
    rep = certify_stability(assemble_decoupled(g, InverterParams()))
    assert rep.stable_observable and rep.n_zero == 1
    assert rep.certified_by == "theorem+numeric"
    assert rep.spectral_abscissa_observable < 0
    rep_c = certify_stability(assemble_coupled(g, InverterParams()))
    assert rep_c.certified_by == "numeric"


def test_nonpositive_cq_is_flagged():
    # bypass parameter validation to place a voltage mode at zero (c_q = 0, N = 1)
    A = np.zeros((3, 3))
    A[0, 1] = 1.0
    A[1, 1] = -1.0
    m = StateSpaceModel(A, np.zeros((3, 2)), np.zeros((2, 3)), 1)
    rep = certify_stability(m)
    assert not rep.stable_observable
    assert rep.n_zero == 2 and "degenerate" in rep.diagnosis


def test_disconnected_graph_is_degenerate():
    g = NetworkGraph(4, (Edge(0, 1, 1.0, 0.2), Edge(2, 3, 1.0, 0.2)))
    rep = certify_stability(assemble_decoupled(g, InverterParams(), check_connected=False))
    assert not rep.stable_observable
    assert rep.n_zero == 2
    assert "degenerate" in rep.diagnosis
    assert rep.to_dict()["n_zero"] == 2
