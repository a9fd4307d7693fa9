import numpy as np
import pytest
from hypothesis import given

from drooploss.dynamics import (
    InverterParams,
    assemble_coupled,
    assemble_decoupled,
    assemble_full,
    instantaneous_loss,
    psd_sqrt,
)
from drooploss.errors import DisconnectedGraphError, NonUniformParamsError, ValidationError
from drooploss.network import Edge, NetworkGraph, build_laplacian, complete_graph, path_graph

from conftest import connected_graphs, uniform_params


def test_param_validation():
    with pytest.raises(ValidationError):
        InverterParams(k_p=0.0)
    with pytest.raises(ValidationError):
        InverterParams(tau_q=[1.0, -1.0])
    with pytest.raises(ValidationError):
        InverterParams(alpha=1.0)
    with pytest.raises(ValidationError):
        InverterParams(k_q=1.0, shunt_b=-0.5)  # c_q = 0
    p = InverterParams.from_cq(2.0, k_q=0.5)
    assert p.shunt_b == pytest.approx(1.0)
    assert p.c_q == pytest.approx(2.0)


def test_uniform_collapse():
    p = InverterParams(k_p=[2.0, 2.0], tau_q=np.array([0.5, 0.5]))
    u = p.uniform()
    assert u.k_p == 2.0 and u.tau_q == 0.5
    with pytest.raises(NonUniformParamsError):
        InverterParams(k_p=[1.0, 2.0]).uniform()


def test_full_model_block_structure():
    g = path_graph(3, susceptance=[1.0, 2.0], alpha=0.1)
    p = InverterParams(k_p=[1.0, 2.0, 3.0], k_q=0.5, tau_p=[0.5, 1.0, 2.0], tau_q=0.25, shunt_b=0.2)
    m = assemble_full(g, p)
    LB, LG = build_laplacian(g), build_laplacian(g, "conductance")
    A = m.blocks("A")
    I, Z = np.eye(3), np.zeros((3, 3))
    assert np.array_equal(A[0][0], Z) and np.array_equal(A[0][1], I)
    assert np.allclose(A[1][0], -np.diag([2.0, 2.0, 1.5]) @ LB)
    assert np.allclose(A[1][1], -np.diag([2.0, 1.0, 0.5]))
    assert np.allclose(A[1][2], np.diag([2.0, 2.0, 1.5]) @ LG)
    assert np.allclose(A[2][0], -2.0 * LG)
    c_q = 1 + 2 * 0.5 * 0.2
    assert np.allclose(A[2][2], -(c_q / 0.25) * I - 2.0 * LB)
    B = m.blocks("B")
    assert np.allclose(B[1][0], np.diag([2.0, 1.0, 0.5])) and np.allclose(B[2][1], 4 * I)
    C = m.blocks("C")
    R = C[0][0]
    assert np.allclose(R @ R, LG, atol=1e-12)
    assert np.array_equal(C[1][2], R) and np.array_equal(C[0][2], Z)
    assert not m.A.flags.writeable


def test_decoupled_and_coupled_blocks():
    g = complete_graph(4, b_range=(0.5, 3.25), seed=1, alpha=0.3)
    p = InverterParams(k_p=2.0, k_q=0.5, tau_p=0.4, tau_q=0.8)
    dec, cou = assemble_decoupled(g, p), assemble_coupled(g, p)
    LB = build_laplacian(g)
    assert np.array_equal(dec.blocks("A")[1][2], np.zeros((4, 4)))
    assert np.allclose(cou.blocks("A")[1][2], 5.0 * 0.3 * LB)
    assert np.allclose(cou.blocks("A")[2][0], -0.625 * 0.3 * LB)
    # uniform alpha: the coupled model equals the full model
    assert np.allclose(cou.A, assemble_full(g, p).A)
    assert np.allclose(dec.C, assemble_full(g, p).C, atol=1e-12)


@given(connected_graphs(), uniform_params())
def test_uniform_phase_is_in_kernel(graph, params):
    for build in (assemble_full, assemble_decoupled, assemble_coupled):
        m = build(graph, params)
        e = m.kernel_vector
        assert np.allclose(m.A @ e, 0, atol=1e-12)
        assert np.allclose(m.C @ e, 0, atol=1e-7)


def test_disconnected_graph_rejected():
    g = NetworkGraph(4, (Edge(0, 1, 1.0, 0.2), Edge(2, 3, 1.0, 0.2)))
    with pytest.raises(DisconnectedGraphError):
        assemble_decoupled(g, InverterParams())
    m = assemble_decoupled(g, InverterParams(), check_connected=False)
    assert m.n_states == 12


def test_instantaneous_loss_example_and_output_consistency():
    g = path_graph(2, alpha=0.25)
    assert instantaneous_loss(g, [0.3, 0.3], [0.05, -0.05]) == pytest.approx(0.0025)
    m = assemble_full(path_graph(4, b_range=(0.5, 3.0), seed=5, alpha=0.2), InverterParams())
    rng = np.random.default_rng(2)
    d, w, v = rng.normal(size=(3, 4))
    y = m.C @ np.concatenate([d, w, v])
    assert y @ y == pytest.approx(instantaneous_loss(m.graph, d, v), rel=1e-12)


@given(connected_graphs(max_n=10))
def test_psd_sqrt_squares_back(graph):
    L = build_laplacian(graph)
    R = psd_sqrt(L)
    assert np.allclose(R, R.T)
    assert np.max(np.abs(R @ R - L)) <= 1e-10 * max(1.0, np.abs(L).max())


def test_psd_sqrt_rejects_indefinite():
    with pytest.raises(ValidationError):
        psd_sqrt(np.diag([1.0, -0.1]))


def test_labels():
    m = assemble_decoupled(path_graph(2), InverterParams())
    assert m.state_labels() == ["delta_1", "delta_2", "omega_1", "omega_2", "V_1", "V_2"]
    assert m.input_labels()[2] == "w_V_1"
