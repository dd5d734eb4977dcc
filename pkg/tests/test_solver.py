import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edmdkit import (
    BasisFunction,
    ConfigurationError,
    Dictionary,
    EmpiricalGram,
    MissingOutputError,
    RegularizerSpec,
    SingularSystemError,
    SnapshotSet,
    blockwise_tikhonov,
    build_gram,
    koopman_matrix,
    make_standard_dictionary,
    output_weights,
    truncated_pinv,
)

PINV = RegularizerSpec.pseudoinverse()


def coord_dict(n):
    return make_standard_dictionary(n, include_state=True)


def generic_gram(seed=0, n=2, m=10, A=None):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(m, n))
    Xp = X @ A.T if A is not None else rng.normal(size=(m, n))
    return build_gram(coord_dict(n), SnapshotSet(X=X, Xplus=Xp))


def test_identity_dynamics_gives_identity():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(8, 2))
    gram = build_gram(coord_dict(2), SnapshotSet(X=X, Xplus=X))
    K = koopman_matrix(gram, PINV)
    assert np.allclose(K, np.eye(2), rtol=0, atol=1e-12)


def test_linear_map_transposed():
    A = np.array([[0.9, 0.1], [0.0, 0.8]])
    gram = generic_gram(seed=2, A=A)
    K = koopman_matrix(gram, PINV)
    assert np.linalg.norm(K - A.T) <= 1e-9 * np.linalg.norm(A)


def test_linear_map_against_lstsq_oracle():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(3, 3))
    X = rng.normal(size=(12, 3))
    d = coord_dict(3)
    data = SnapshotSet(X=X, Xplus=X @ A.T)
    K = koopman_matrix(build_gram(d, data), PINV)
    oracle = np.linalg.lstsq(d.evaluate_matrix(X), d.evaluate_matrix(data.Xplus), rcond=None)[0]
    assert np.allclose(K, oracle, rtol=0, atol=1e-10)


def test_invariant_scalar_dictionary_diagonal():
    d = Dictionary(1, (BasisFunction.coordinate(0), BasisFunction.monomial((2,))))
    X = np.array([[0.4], [-1.1], [2.0], [0.9], [-0.3]])
    gram = build_gram(d, SnapshotSet(X=X, Xplus=0.5 * X))
    K = koopman_matrix(gram, PINV)
    assert np.allclose(K, np.diag([0.5, 0.25]), rtol=0, atol=1e-12)


def test_duplicated_basis_minimum_norm():
    # psi = {x, x}; any K with K11+K21 = a and K12+K22 = a fits; the
    # minimum-Frobenius choice spreads a/2 everywhere
    a = 0.7
    d = Dictionary(1, (BasisFunction.coordinate(0), BasisFunction.coordinate(0)))
    X = np.array([[1.0], [-2.0], [0.5]])
    gram = build_gram(d, SnapshotSet(X=X, Xplus=a * X))
    K = koopman_matrix(gram, PINV)
    assert np.allclose(K, np.full((2, 2), a / 2), rtol=0, atol=1e-12)
    alternative = np.array([[a, a], [0.0, 0.0]])  # also a minimizer, larger norm
    assert np.linalg.norm(K) < np.linalg.norm(alternative)


def test_pseudoinverse_equals_psi_lstsq_on_rank_deficient_data():
    # states on a line make the coordinate Gram rank 1
    rng = np.random.default_rng(4)
    t = rng.normal(size=9)
    X = np.column_stack([t, 2.0 * t])
    Xp = 0.8 * X
    d = coord_dict(2)
    gram = build_gram(d, SnapshotSet(X=X, Xplus=Xp))
    K = koopman_matrix(gram, PINV)
    oracle = np.linalg.pinv(d.evaluate_matrix(X)) @ d.evaluate_matrix(Xp)
    assert np.allclose(K, oracle, rtol=0, atol=1e-10)


def test_truncated_pinv_threshold():
    G = np.diag([1.0, 1e-15])
    Gd = truncated_pinv(G, rtol=1e-12)
    assert np.array_equal(Gd, np.diag([1.0, 0.0]))
    Gd_keep = truncated_pinv(G, rtol=1e-16)
    assert Gd_keep[1, 1] == pytest.approx(1e15, rel=1e-10)
    assert np.array_equal(truncated_pinv(np.zeros((3, 3))), np.zeros((3, 3)))


def test_ridge_closed_form_and_consistency():
    gram = generic_gram(seed=5)
    beta = 0.37
    K = koopman_matrix(gram, RegularizerSpec.ridge(beta))
    resid = (gram.G + beta * np.eye(2)) @ K - gram.A
    assert np.linalg.norm(resid) <= 1e-10 * max(np.linalg.norm(gram.A), 1.0)
    K0 = koopman_matrix(gram, RegularizerSpec.ridge(0.0))
    Kp = koopman_matrix(gram, PINV)
    assert np.linalg.norm(K0 - Kp) <= 1e-10 * np.linalg.norm(Kp)


def test_ridge_norm_weakly_decreasing_in_beta():
    gram = generic_gram(seed=6, n=3, m=20)
    norms = [
        np.linalg.norm(koopman_matrix(gram, RegularizerSpec.ridge(b)))
        for b in [0.0, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0]
    ]
    assert all(n2 <= n1 + 1e-12 for n1, n2 in zip(norms, norms[1:]))


def test_ridge_zero_on_singular_gram_raises():
    # second coordinate is identically zero, so the Gram has an exact null pivot
    d = Dictionary(2, (BasisFunction.coordinate(0), BasisFunction.coordinate(1)))
    X = np.array([[1.0, 0.0], [2.0, 0.0]])
    gram = build_gram(d, SnapshotSet(X=X, Xplus=X))
    with pytest.raises(SingularSystemError, match="pseudoinverse"):
        koopman_matrix(gram, RegularizerSpec.ridge(0.0))


def test_output_weights_pseudoinverse_recovers_span():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(10, 2))
    data = SnapshotSet(X=X, Xplus=X, Y=X[:, :1].copy())  # y = x1
    gram = build_gram(coord_dict(2), data)
    W = output_weights(gram, PINV)
    assert np.allclose(W, [[1.0], [0.0]], rtol=0, atol=1e-12)


def test_output_weights_requires_outputs():
    gram = generic_gram(seed=8)
    with pytest.raises(MissingOutputError):
        output_weights(gram, PINV)


def test_tikhonov_hand_case():
    gram = EmpiricalGram(
        G=np.array([[2.0, 0.0], [0.0, 1.0]]), A=np.eye(2), m=4,
        B=np.array([[1.0], [1.0]]),
    )
    reg = RegularizerSpec.tikhonov(np.eye(2), np.array([[1.0], [0.0]]))
    W = output_weights(gram, reg)
    assert np.allclose(W, [[2.0 / 3.0], [0.5]], rtol=1e-14)


def test_tikhonov_zero_q_matches_pseudoinverse():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(12, 2))
    data = SnapshotSet(X=X, Xplus=X, Y=rng.normal(size=(12, 2)))
    gram = build_gram(coord_dict(2), data)
    W0 = rng.normal(size=(2, 2))
    reg = RegularizerSpec.tikhonov(0.0, W0)
    assert np.allclose(output_weights(gram, reg), output_weights(gram, PINV), atol=1e-10)


def test_tikhonov_large_beta_returns_prior():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(15, 2))
    data = SnapshotSet(X=X, Xplus=X, Y=rng.normal(size=(15, 2)))
    gram = build_gram(coord_dict(2), data)
    W0 = rng.normal(size=(2, 2))
    beta = 1e8 * np.linalg.norm(gram.G, 2)
    W = output_weights(gram, RegularizerSpec.tikhonov(beta, W0))
    assert np.linalg.norm(W - W0) / np.linalg.norm(W0) <= 1e-6


def tikhonov_objective(PsiX, y, Q, w0, w):
    misfit = PsiX @ w - y
    dev = w - w0
    return misfit @ misfit / PsiX.shape[0] + dev @ Q @ dev


def test_tikhonov_first_order_optimality():
    rng = np.random.default_rng(11)
    d = make_standard_dictionary(1, include_state=True, monomial_degree=2)
    X = rng.normal(size=(20, 1))
    Y = rng.normal(size=(20, 2))
    data = SnapshotSet(X=X, Xplus=X, Y=Y)
    gram = build_gram(d, data)
    Q = np.diag([0.5, 1.0, 2.0])
    W0 = rng.normal(size=(3, 2))
    W = output_weights(gram, RegularizerSpec.tikhonov(Q, W0))
    PsiX = d.evaluate_matrix(X)
    delta = 1e-4
    for i in range(2):
        base = tikhonov_objective(PsiX, Y[:, i], Q, W0[:, i], W[:, i])
        for k in range(3):
            for sign in (+1.0, -1.0):
                bumped = W[:, i] + sign * delta * np.eye(3)[k]
                assert tikhonov_objective(PsiX, Y[:, i], Q, W0[:, i], bumped) > base


def test_tikhonov_matches_stacked_design_oracle():
    # independent route: augment the design with Q^(1/2) rows and lstsq it
    rng = np.random.default_rng(12)
    for _ in range(20):
        n_L, p, m = rng.integers(2, 6), rng.integers(1, 4), 25
        PsiX = rng.normal(size=(m, n_L))
        Y = rng.normal(size=(m, p))
        G = PsiX.T @ PsiX / m
        B = PsiX.T @ Y / m
        M = rng.normal(size=(n_L, n_L))
        Q = M.T @ M + 0.1 * np.eye(n_L)
        W0 = rng.normal(size=(n_L, p))
        gram = EmpiricalGram(G=G, A=G, B=B, m=m)
        W = output_weights(gram, RegularizerSpec.tikhonov(Q, W0))
        evals, vecs = np.linalg.eigh(Q)
        Qroot = vecs @ np.diag(np.sqrt(np.maximum(evals, 0.0))) @ vecs.T
        design = np.vstack([PsiX / np.sqrt(m), Qroot])
        for i in range(p):
            target = np.concatenate([Y[:, i] / np.sqrt(m), Qroot @ W0[:, i]])
            w_oracle = np.linalg.lstsq(design, target, rcond=None)[0]
            assert np.linalg.norm(W[:, i] - w_oracle) <= 1e-9 * max(
                np.linalg.norm(w_oracle), 1.0
            )


def test_tikhonov_koopman_prior():
    gram = generic_gram(seed=13)
    W0 = np.eye(2)
    beta = 1e9 * np.linalg.norm(gram.G, 2)
    K = koopman_matrix(gram, RegularizerSpec.tikhonov(beta, W0))
    assert np.linalg.norm(K - W0) / np.linalg.norm(W0) <= 1e-6
    with pytest.raises(ConfigurationError):
        koopman_matrix(gram, RegularizerSpec.tikhonov(1.0, np.zeros((2, 3))))


def test_blockwise_matches_ridge_when_degenerate():
    rng = np.random.default_rng(14)
    X = rng.normal(size=(18, 2))
    data = SnapshotSet(X=X, Xplus=X, Y=rng.normal(size=(18, 2)))
    gram = build_gram(coord_dict(2), data)
    beta = 0.05
    W_block = blockwise_tikhonov(gram, beta, beta, np.zeros((2, 2)), 2)
    W_ridge = output_weights(gram, RegularizerSpec.ridge(beta))
    assert np.allclose(W_block, W_ridge, rtol=0, atol=1e-12)


def test_blockwise_prior_pull_and_free_block():
    rng = np.random.default_rng(15)
    X = rng.normal(size=(30, 2))
    Y = np.column_stack([X[:, 0], X[:, 1], X[:, 0] ** 3])
    data = SnapshotSet(X=X, Xplus=X, Y=Y)
    gram = build_gram(coord_dict(2), data)
    W0_known = np.eye(2)  # state outputs expect unit-coordinate weights
    beta1 = 1e8 * np.linalg.norm(gram.G, 2)
    beta2 = 1e-8
    W = blockwise_tikhonov(gram, beta1, beta2, W0_known, 2)
    assert np.linalg.norm(W[:, :2] - W0_known) / np.linalg.norm(W0_known) <= 1e-6
    # last column is an almost-plain least-squares fit of x^3
    W_free = output_weights(gram, PINV)
    assert np.allclose(W[:, 2], W_free[:, 2], atol=1e-6)


def test_blockwise_column_oracle():
    rng = np.random.default_rng(16)
    d = make_standard_dictionary(1, include_state=True, monomial_degree=2)
    X = rng.normal(size=(25, 1))
    Y = np.column_stack([X[:, 0], X[:, 0] ** 3])
    data = SnapshotSet(X=X, Xplus=0.5 * X, Y=Y)
    gram = build_gram(d, data)
    W0_known = np.array([[1.0], [0.0], [0.0]])
    beta1, beta2 = 0.2, 0.01
    W = blockwise_tikhonov(gram, beta1, beta2, W0_known, 1)
    n_L = gram.G.shape[0]
    col1 = np.linalg.solve(gram.G + beta1 * np.eye(n_L), gram.B[:, 0] + beta1 * W0_known[:, 0])
    col2 = np.linalg.solve(gram.G + beta2 * np.eye(n_L), gram.B[:, 1])
    assert np.allclose(W[:, 0], col1, rtol=1e-12)
    assert np.allclose(W[:, 1], col2, rtol=1e-12)


def test_blockwise_validation():
    rng = np.random.default_rng(17)
    X = rng.normal(size=(10, 2))
    data = SnapshotSet(X=X, Xplus=X, Y=X.copy())
    gram = build_gram(coord_dict(2), data)
    with pytest.raises(ConfigurationError):
        blockwise_tikhonov(gram, 1.0, 1.0, np.zeros((2, 3)), 3)
    with pytest.raises(ConfigurationError):
        blockwise_tikhonov(gram, 0.0, 1.0, np.zeros((2, 1)), 1)
    no_y = build_gram(coord_dict(2), SnapshotSet(X=X, Xplus=X))
    with pytest.raises(MissingOutputError):
        blockwise_tikhonov(no_y, 1.0, 1.0, np.zeros((2, 1)), 1)


def test_regularizer_spec_validation():
    with pytest.raises(ConfigurationError):
        RegularizerSpec("nonsense")
    with pytest.raises(ConfigurationError):
        RegularizerSpec.pseudoinverse(svd_rtol=0.0)
    with pytest.raises(ConfigurationError):
        RegularizerSpec.pseudoinverse(svd_rtol=1.5)
    with pytest.raises(ConfigurationError):
        RegularizerSpec.ridge(-1.0)
    with pytest.raises(ConfigurationError):
        RegularizerSpec.tikhonov(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros((2, 1)))
    with pytest.raises(ConfigurationError):
        RegularizerSpec.tikhonov(np.diag([1.0, -1.0]), np.zeros((2, 1)))
    # prior columns: the no-information columns must be zero
    with pytest.raises(ConfigurationError):
        RegularizerSpec.tikhonov(1.0, np.ones((2, 2)), prior_columns=[0])
    RegularizerSpec.tikhonov(1.0, np.array([[1.0, 0.0], [2.0, 0.0]]), prior_columns=[0])
    with pytest.raises(ConfigurationError):
        RegularizerSpec.tikhonov(1.0, np.ones((2, 1)), prior_columns=[3])


def test_regularizer_json_round_trip():
    specs = [
        RegularizerSpec.pseudoinverse(svd_rtol=1e-10),
        RegularizerSpec.ridge(0.25),
        RegularizerSpec.tikhonov(2.5, np.array([[1.0, 0.0], [0.5, 0.0]]), prior_columns=[0]),
        RegularizerSpec.tikhonov(np.diag([1.0, 2.0]), np.array([[1.0], [0.0]])),
    ]
    for spec in specs:
        back = RegularizerSpec.from_json_dict(spec.to_json_dict())
        assert back.mode == spec.mode
        assert back.to_json_dict() == spec.to_json_dict()
    with pytest.raises(ConfigurationError):
        RegularizerSpec.from_json_dict({"mode": "ridge"})
    with pytest.raises(ConfigurationError):
        RegularizerSpec.from_json_dict({"mode": "tikhonov", "Q": 1.0})


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_ridge_normal_equations_hold(seed):
    rng = np.random.default_rng(seed)
    n_L = int(rng.integers(1, 6))
    PsiX = rng.normal(size=(12, n_L))
    G = PsiX.T @ PsiX / 12
    A = rng.normal(size=(n_L, n_L))
    beta = float(rng.uniform(1e-6, 10.0))
    gram = EmpiricalGram(G=G, A=A, m=12)
    K = koopman_matrix(gram, RegularizerSpec.ridge(beta))
    resid = (G + beta * np.eye(n_L)) @ K - A
    assert np.linalg.norm(resid) <= 1e-10 * max(np.linalg.norm(A), 1.0)
