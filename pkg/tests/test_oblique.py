import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from obliquesep.exceptions import (
    DegenerateInputError,
    DimensionMismatchError,
    GridMismatchError,
    InvalidArgumentError,
)
from obliquesep.function_space import (
    Grid,
    SampledFunction,
    SpanningSet,
    gram_matrix,
    inner_products,
    make_uniform_grid,
    norm,
)
from obliquesep.oblique import (
    apply_projector,
    build_oblique_projector,
    build_singular_system,
    complement_spanning_set,
    dual_vectors,
    orthonormalize,
    project_orthogonal,
    projector_coefficients,
    pseudoinverse_apply,
    truncate_projector,
)
from obliquesep.simulator import background_family

from .conftest import HAS_EXTENDED, random_oblique_instance

SEEDS = st.integers(0, 2**32 - 1)


def _poly_set(grid, degrees):
    return SpanningSet.from_functions([grid.sample(lambda t, k=k: t**k) for k in degrees])


# -- orthonormalize ----------------------------------------------------------

@pytest.mark.parametrize("method", ["svd", "gram"])
def test_orthonormalize_pair(method):
    g = make_uniform_grid(0, 1, 1001)
    O = orthonormalize(_poly_set(g, [0, 1]), 1e-8, method=method)
    assert len(O) == 2
    np.testing.assert_allclose(gram_matrix(O), np.eye(2), atol=1e-8)


@pytest.mark.parametrize("method", ["svd", "gram"])
def test_orthonormalize_duplicate(method):
    g = make_uniform_grid(0, 1, 101)
    assert len(orthonormalize(_poly_set(g, [0, 0]), 1e-8, method=method)) == 1


def test_orthonormalize_rejects_zero_set_and_bad_tol():
    g = make_uniform_grid(0, 1, 11)
    with pytest.raises(DegenerateInputError):
        orthonormalize(SpanningSet(g, np.zeros((2, 11))), 1e-6)
    with pytest.raises(InvalidArgumentError):
        orthonormalize(_poly_set(g, [0]), 0.0)
    with pytest.raises(InvalidArgumentError):
        orthonormalize(_poly_set(g, [0]), 1e-3, method="qr")


@pytest.mark.skipif(not HAS_EXTENDED, reason="long double is not wider than double here")
def test_background_rank_at_1e12_matches_independent_svd():
    # oracle: LAPACK singular values of the weighted float64 samples
    g = Grid(0, 1, 1001, np.longdouble)
    Y = background_family(g, 50)
    O = orthonormalize(Y, 1e-12)
    A = (Y.values.astype(float) * np.sqrt(g.weights.astype(float))).T
    s = scipy.linalg.svdvals(A)
    assert len(O) == int(np.sum(s > 1e-12 * s[0])) == 13
    np.testing.assert_allclose(gram_matrix(O).astype(float), np.eye(len(O)), atol=1e-8)


# -- project_orthogonal / complement ----------------------------------------

def _sine_basis(g, ks):
    fns = [g.sample(lambda t, k=k: np.sqrt(2) * np.sin(np.pi * k * t)) for k in ks]
    return orthonormalize(SpanningSet.from_functions(fns), 1e-10)


def test_project_orthogonal_examples():
    g = make_uniform_grid(0, 1, 401)
    B = _sine_basis(g, [1, 2])
    o1 = B[0]
    assert norm(project_orthogonal(B, o1) - o1) <= 1e-8
    h = g.sample(lambda t: np.sqrt(2) * np.sin(5 * np.pi * t))
    h = h - project_orthogonal(B, h)
    assert norm(project_orthogonal(B, h)) <= 1e-8 * norm(h)
    assert norm(project_orthogonal(B, o1 + h) - o1) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(SEEDS)
def test_project_orthogonal_residual_is_orthogonal(seed):
    rng = np.random.default_rng(seed)
    g = make_uniform_grid(0, 1, 40)
    B = orthonormalize(SpanningSet(g, rng.standard_normal((4, 40))), 1e-10)
    f = SampledFunction(g, rng.standard_normal(40))
    Pf = project_orthogonal(B, f)
    assert np.max(np.abs(inner_products(B, f - Pf))) <= 1e-8 * norm(f)
    assert norm(project_orthogonal(B, Pf) - Pf) <= 1e-8 * norm(f)


def test_complement_examples():
    g = make_uniform_grid(0, 1, 401)
    B = _sine_basis(g, [1])
    v_perp = g.sample(lambda t: np.sqrt(2) * np.sin(2 * np.pi * t))
    v_in = B[0] * 3.0
    U = complement_spanning_set(SpanningSet.from_functions([v_perp, v_in]), B)
    assert norm(U[0] - v_perp) <= 1e-8
    assert norm(U[1]) <= 1e-8
    with pytest.raises(GridMismatchError):
        other = SpanningSet.from_functions([make_uniform_grid(0, 1, 5).sample(np.cos)])
        complement_spanning_set(other, B)


def test_complement_is_orthogonal_to_wperp(default_setup):
    s = default_setup
    C = gram_matrix(s.U, s.wperp).astype(float)
    assert np.abs(C).max() <= 1e-8


# -- singular system ---------------------------------------------------------

@pytest.mark.parametrize("method", ["svd", "gram"])
def test_singular_system_of_orthonormal_set(method):
    g = make_uniform_grid(0, 1, 801)
    U = _sine_basis(g, [1, 2, 3, 4])
    sys = build_singular_system(U, method=method)
    assert sys.rank == 4
    np.testing.assert_allclose(sys.sigmas, 1, atol=1e-8)


def test_singular_system_single_function():
    g = make_uniform_grid(0, 1, 11)
    sys = build_singular_system(SpanningSet(g, 2 * np.ones((1, 11))))
    assert sys.rank == 1 and sys.sigmas[0] == pytest.approx(2, abs=1e-8)


def test_singular_system_errors():
    g = make_uniform_grid(0, 1, 11)
    with pytest.raises(DegenerateInputError):
        build_singular_system(SpanningSet(g, np.zeros((3, 11))))
    with pytest.raises(InvalidArgumentError):
        build_singular_system(SpanningSet(g, np.ones((1, 11))), rank_tol=-1)


@settings(max_examples=20, deadline=None)
@given(SEEDS)
def test_singular_system_invariants(seed):
    _, _, _, _, U, sys, _ = random_oblique_instance(np.random.default_rng(seed))
    assert np.all(sys.sigmas > 0) and np.all(np.diff(sys.sigmas) <= 0)
    np.testing.assert_allclose(sys.psis.T @ sys.psis, np.eye(sys.rank), atol=1e-10)
    # psi_n are eigenvectors of G with eigenvalue sigma_n^2
    G = gram_matrix(U)
    np.testing.assert_allclose(G @ sys.psis, sys.psis * sys.lambdas, atol=1e-10 * sys.lambdas[0])


def test_svd_and_gram_routes_agree_on_well_conditioned_set():
    rng = np.random.default_rng(5)
    g = make_uniform_grid(0, 1, 50)
    U = SpanningSet(g, rng.standard_normal((6, 50)))
    a, b = build_singular_system(U, method="svd"), build_singular_system(U, method="gram")
    np.testing.assert_allclose(a.sigmas, b.sigmas, rtol=1e-10)
    np.testing.assert_allclose(np.abs(a.psis.T @ b.psis), np.eye(6), atol=1e-8)


def test_rank_tol_truncates():
    g = make_uniform_grid(0, 1, 50)
    vals = np.random.default_rng(0).standard_normal((4, 50))
    vals[2] = vals[0] + 1e-6 * vals[3]
    vals = vals[:3]
    U = SpanningSet(g, vals)
    assert build_singular_system(U).rank == 3
    assert build_singular_system(U, rank_tol=1e-4).rank == 2


# -- oblique projector -------------------------------------------------------

def test_projector_reduces_to_orthogonal_when_U_is_V():
    rng = np.random.default_rng(1)
    g = make_uniform_grid(0, 1, 30)
    V = SpanningSet(g, rng.standard_normal((4, 30)))
    P = build_oblique_projector(V, V, build_singular_system(V))
    O = orthonormalize(V, 1e-12)
    for _ in range(5):
        f = SampledFunction(g, rng.standard_normal(30))
        assert norm(apply_projector(P, f) - project_orthogonal(O, f)) <= 1e-10 * norm(f)


def test_projector_annihilates_background_and_fixes_signal():
    rng = np.random.default_rng(2)
    grid, V, Y, O, U, sys, P = random_oblique_instance(rng, M=5, J=3, n=40)
    for y in Y:
        assert norm(apply_projector(P, y)) <= 1e-6 * norm(y)
    fV = V.combine(rng.standard_normal(5))
    assert norm(apply_projector(P, fV) - fV) <= 1e-8 * norm(fV)


def test_three_point_toy_matches_direct_decomposition():
    g = make_uniform_grid(0, 1, 3)
    V = SpanningSet(g, [[1, 0, 0], [0, 1, 0]])
    O = orthonormalize(SpanningSet(g, [[1, 1, 1]]), 1e-12)
    U = complement_spanning_set(V, O)
    P = build_oblique_projector(V, U, build_singular_system(U), wperp=O)
    system = np.array([[1, 0, 1], [0, 1, 1], [0, 0, 1]], dtype=float)
    rng = np.random.default_rng(0)
    for _ in range(10):
        f = rng.standard_normal(3)
        c = np.linalg.solve(system, f)
        expected = c[0] * np.array([1, 0, 0]) + c[1] * np.array([0, 1, 0])
        got = apply_projector(P, SampledFunction(g, f)).values
        np.testing.assert_allclose(got, expected, atol=1e-12)


def test_build_projector_dimension_mismatch():
    g = make_uniform_grid(0, 1, 20)
    rng = np.random.default_rng(0)
    V = SpanningSet(g, rng.standard_normal((3, 20)))
    U = SpanningSet(g, rng.standard_normal((2, 20)))
    with pytest.raises(DimensionMismatchError):
        build_oblique_projector(V, U, build_singular_system(U))


def test_apply_projector_examples():
    rng = np.random.default_rng(4)
    grid, V, Y, O, U, sys, P = random_oblique_instance(rng, M=4, J=2, n=30)
    eta1 = P.etas[0]
    assert norm(apply_projector(P, eta1) - eta1) <= 1e-8 * norm(eta1)
    h = SampledFunction(grid, rng.standard_normal(30))
    h = h - P.xis.combine(np.linalg.solve(gram_matrix(P.xis), inner_products(P.xis, h)))
    assert norm(apply_projector(P, h)) <= 1e-10 * norm(h)
    with pytest.raises(GridMismatchError):
        apply_projector(P, make_uniform_grid(0, 1, 31).sample(np.cos))


# -- dual vectors --------------------------------------------------------------

def test_dual_vectors_of_orthonormal_U():
    g = make_uniform_grid(0, 1, 801)
    U = _sine_basis(g, [1, 2, 3])
    P = build_oblique_projector(U, U, build_singular_system(U))
    W = dual_vectors(P)
    np.testing.assert_allclose(W.values, U.values, atol=1e-8)


@settings(max_examples=20, deadline=None)
@given(SEEDS)
def test_dual_vector_representation_matches_spectral_sum(seed):
    rng = np.random.default_rng(seed)
    grid, V, Y, O, U, sys, P = random_oblique_instance(rng)
    W = dual_vectors(P)
    for _ in range(10):
        f = SampledFunction(grid, rng.standard_normal(grid.n_points))
        via_dual = V.combine(inner_products(W, f))
        assert norm(via_dual - apply_projector(P, f)) <= 1e-8 * norm(f) * max(1, 1 / sys.sigmas[-1])
        np.testing.assert_allclose(projector_coefficients(P, f), inner_products(W, f), atol=1e-10)


def test_dual_coefficient_matrix_is_idempotent():
    rng = np.random.default_rng(6)
    grid, V, Y, O, U, sys, P = random_oblique_instance(rng, M=6, J=3, n=50)
    A = gram_matrix(dual_vectors(P), V)
    np.testing.assert_allclose(A @ A, A, atol=1e-6)


# -- pseudoinverse routes ------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(SEEDS, st.booleans())
def test_pseudoinverse_route_matches_spectral_sum(seed, orth):
    rng = np.random.default_rng(seed)
    grid, V, Y, O, U, sys, P = random_oblique_instance(rng)
    f = SampledFunction(grid, rng.standard_normal(grid.n_points))
    Ef = apply_projector(P, f)
    scale = norm(f) * max(1.0, 1 / sys.sigmas[-1])
    assert norm(pseudoinverse_apply(V, U, f, orthogonalize=orth) - Ef) <= 1e-8 * scale


# -- truncation ----------------------------------------------------------------

def test_truncate_full_rank_is_identity_operation():
    rng = np.random.default_rng(7)
    grid, V, Y, O, U, sys, P = random_oblique_instance(rng, M=6, J=3, n=40)
    T = truncate_projector(P, P.rank)
    for _ in range(10):
        f = SampledFunction(grid, rng.standard_normal(40))
        assert norm(apply_projector(T, f) - apply_projector(P, f)) <= 1e-10 * norm(f)


def test_truncate_range_checked():
    rng = np.random.default_rng(8)
    P = random_oblique_instance(rng, M=3, J=1, n=10)[-1]
    for r in (0, P.rank + 1, 1.5):
        with pytest.raises(InvalidArgumentError):
            truncate_projector(P, r)


@settings(max_examples=20, deadline=None)
@given(SEEDS, st.data())
def test_truncated_projector_properties(seed, data):
    rng = np.random.default_rng(seed)
    grid, V, Y, O, U, sys, P = random_oblique_instance(rng, M=int(rng.integers(2, 11)))
    r = data.draw(st.integers(1, P.rank))
    T = truncate_projector(P, r)
    for i in range(r, P.rank):
        for vec in (P.xis[i], P.etas[i]):
            assert norm(apply_projector(T, vec)) <= 1e-8 * norm(vec)
    for i in range(r):
        assert norm(apply_projector(T, P.etas[i]) - P.etas[i]) <= 1e-8 * norm(P.etas[i])
    for y in Y:
        assert norm(apply_projector(T, y)) <= 1e-8 * norm(y) / sys.sigmas[r - 1]
    f = SampledFunction(grid, rng.standard_normal(grid.n_points))
    Tf = apply_projector(T, f)
    assert norm(apply_projector(T, Tf) - Tf) <= 1e-8 * norm(f) / sys.sigmas[r - 1] ** 2
