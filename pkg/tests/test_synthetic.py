import numpy as np
import pytest

from pgl_lab.graph_domain import ContractError, commutator_residual, validate_gso
from pgl_lab.synthetic import (
    CovModel,
    GraphModel,
    derive_seed,
    gen_covariance,
    gen_graph,
    sample_covariance,
    sample_signals,
    simulate_covariance,
)


def test_er_extremes():
    empty = gen_graph(GraphModel("ER", 6, 0.0, allow_isolated=True), 0)
    assert not empty.S.any()
    full = gen_graph(GraphModel("ER", 4, 1.0), 0)
    assert full.S.sum() / 2 == 6
    assert full.components == 1


def test_er_edge_count_statistics():
    counts = [gen_graph(GraphModel("ER", 20, 0.1, allow_isolated=True), s).S.sum() / 2 for s in range(10_000)]
    sd = np.sqrt(190 * 0.1 * 0.9 / len(counts))
    assert abs(np.mean(counts) - 19.0) <= 3 * sd


@pytest.mark.parametrize(
    "model",
    [
        GraphModel("ER", 20, 0.1),
        GraphModel("SW", 20),
        GraphModel("SBM", 40, clusters=4),
        GraphModel("BA", 20),
    ],
)
def test_graphs_are_valid_and_deterministic(model):
    a = gen_graph(model, 7)
    b = gen_graph(model, 7)
    np.testing.assert_array_equal(a.S, b.S)
    assert validate_gso(a.S, "groundTruth").ok
    assert set(np.unique(a.S)) <= {0.0, 1.0}
    assert np.all(a.S.sum(axis=1) > 0)


def test_sbm_labels_and_density():
    g = gen_graph(GraphModel("SBM", 40, clusters=4, p_intra=0.8, p_inter=0.05), 3)
    same = g.labels[:, None] == g.labels[None, :]
    off = ~np.eye(40, dtype=bool)
    assert g.S[same & off].mean() > 0.6
    assert g.S[~same].mean() < 0.15


def test_graph_model_validation():
    with pytest.raises(ContractError):
        GraphModel("ER", 10, 1.5)
    with pytest.raises(ContractError):
        GraphModel("XX")
    with pytest.raises(ContractError):
        GraphModel("SW", 5, mean_degree=5)


def test_identity_covariances():
    S = gen_graph(GraphModel("ER", 6, 0.5), 1).S
    np.testing.assert_allclose(gen_covariance(S, CovModel("Poly", coeffs=(1.0, 0.0, 0.0)), 0), np.eye(6))
    np.testing.assert_allclose(gen_covariance(np.zeros((4, 4)), CovModel("SSEM"), 0), np.eye(4))
    np.testing.assert_allclose(gen_covariance(S, CovModel("MRF", mu=1.0, nu=0.0), 0), np.eye(6))


def test_poly_subsumes_ssem():
    S = gen_graph(GraphModel("ER", 10, 0.3), 2).S
    S = 0.9 * S / np.max(np.abs(np.linalg.eigvalsh(S)))
    a = gen_covariance(S, CovModel("Poly", coeffs=(1.0, -1.0)), 0)
    b = gen_covariance(S, CovModel("SSEM"), 0)
    np.testing.assert_allclose(a, b, atol=1e-14)


@pytest.mark.parametrize("kind", ["Poly", "SSEM", "MRF"])
def test_covariances_commute_and_are_pd(kind):
    for seed in range(10):
        S = gen_graph(GraphModel("ER", 20, 0.1), seed).S
        Sigma = gen_covariance(S, CovModel(kind), seed)
        w = np.linalg.eigvalsh(Sigma)
        assert w[0] > 1e-10 * w[-1]
        assert commutator_residual(Sigma, S) <= 1e-10


def test_poly_condition_cap():
    S = gen_graph(GraphModel("ER", 20, 0.1), 0).S
    for seed in range(10):
        Sigma = gen_covariance(S, CovModel("Poly", max_cond=100.0), seed)
        assert np.linalg.cond(Sigma) < 100.0


def test_mrf_rejects_indefinite_precision():
    S = gen_graph(GraphModel("ER", 6, 0.5), 0).S
    with pytest.raises(ContractError):
        gen_covariance(S, CovModel("MRF", mu=0.1, nu=1.0), 0)


def test_sample_signals_shapes_and_determinism():
    Sigma = np.eye(3)
    X = sample_signals(Sigma, 1, seed=0)
    assert X.shape == (3, 1)
    np.testing.assert_array_equal(sample_signals(Sigma, 50, 0.1, seed=4), sample_signals(Sigma, 50, 0.1, seed=4))
    with pytest.raises(ContractError):
        sample_signals(Sigma, 0)


def test_law_of_large_numbers():
    C = simulate_covariance(np.eye(4), 10**6, 0.0, seed=1)
    assert np.max(np.abs(C.values - np.eye(4))) < 0.01
    S = gen_graph(GraphModel("ER", 8, 0.4), 0).S
    Sigma = gen_covariance(S, CovModel("SSEM"), 0)
    C = simulate_covariance(Sigma, 10**6, 0.0, seed=2)
    assert np.max(np.abs(C.values - Sigma)) <= 0.02 * np.max(np.abs(Sigma))


def test_simulate_matches_explicit_samples():
    Sigma = gen_covariance(gen_graph(GraphModel("ER", 5, 0.5), 0).S, CovModel("MRF"), 0)
    X = sample_signals(Sigma, 300, 0.2, seed=9, chunk=128)
    C = simulate_covariance(Sigma, 300, 0.2, seed=9, chunk=128)
    np.testing.assert_allclose(sample_covariance(X).values, C.values, atol=1e-12)


def test_noise_power_is_normalized():
    Sigma = 4.0 * np.eye(3)
    X = sample_signals(Sigma, 200_000, 0.5, seed=0)
    # signal variance 4, noise variance 0.25 * 4
    assert np.mean(X.var(axis=1)) == pytest.approx(5.0, rel=0.02)


def test_sample_covariance_examples(rng):
    np.testing.assert_array_equal(sample_covariance(np.zeros((3, 4))).values, 0)
    x = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(sample_covariance(x).values, np.outer(x, x))
    C = sample_covariance(rng.standard_normal((6, 4))).values
    assert np.linalg.eigvalsh(C)[0] >= -1e-10


def test_derive_seed_is_stable():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
    assert derive_seed(1, "a", 2) != derive_seed(1, "a", 3)
    assert derive_seed(0, "x") == 9140116420975132322
