"""Orthogonal and oblique projectors built from spanning sets.

Notation: ``V = {v_i}`` spans the signal space, ``{y_j}`` spans the background
space W⊥, and ``u_i = v_i - P_{W⊥} v_i`` spans W, its orthogonal complement
restricted to the reach of ``V``.  With ``G = U*U = sum_n psi_n lambda_n psi_n^T``
the oblique projector onto V along W⊥ is

    E = sum_n |eta_n><xi_n|,   xi_n = U psi_n / sigma_n,   eta_n = V psi_n / sigma_n.

Two factorization routes are offered.  ``method="svd"`` takes the SVD of the
quadrature-weighted sample matrix ``diag(sqrt(w)) U``; its right singular
vectors are the eigenvectors of ``G`` and its left singular vectors are the
``xi_n`` directly, which avoids squaring the condition number.
``method="gram"`` diagonalizes ``G`` itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _linalg
from .exceptions import (
    DegenerateInputError,
    DimensionMismatchError,
    GridMismatchError,
    InvalidArgumentError,
)
from .function_space import SampledFunction, SpanningSet, gram_matrix, inner_products

__all__ = [
    "OrthonormalBasis",
    "SingularSystem",
    "ObliqueProjector",
    "orthonormalize",
    "project_orthogonal",
    "complement_spanning_set",
    "build_singular_system",
    "build_oblique_projector",
    "dual_vectors",
    "apply_projector",
    "projector_coefficients",
    "truncate_projector",
    "pseudoinverse_apply",
    "remove_component",
]

_METHODS = ("svd", "gram")


def _check_method(method):
    if method not in _METHODS:
        raise InvalidArgumentError(f"method must be one of {_METHODS}, got {method!r}")


def _weighted(S):
    """Columns are the functions of ``S`` scaled by sqrt of the quadrature weights."""
    sw = np.sqrt(S.grid.weights)
    return (S.values * sw).T, sw


@dataclass(frozen=True, eq=False)
class OrthonormalBasis(SpanningSet):
    """Orthonormal functions ``o_1..o_J'`` spanning the significant range of a set."""

    rank_tolerance_used: float = 0.0
    source_singular_values: np.ndarray | None = None


def orthonormalize(S, rel_tol, method="svd"):
    """Orthonormal basis for the numerically significant span of ``S``.

    Directions whose singular value falls at or below ``rel_tol`` times the
    largest (eigenvalues of the Gram matrix below ``rel_tol**2 * lambda_max``)
    are discarded.
    """
    if not 0 < rel_tol < 1:
        raise InvalidArgumentError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    _check_method(method)
    if method == "svd":
        A, sw = _weighted(S)
        X, s, _ = _linalg.svd(A)
        if s.size == 0 or s[0] == 0:
            raise DegenerateInputError("all functions in the set are numerically zero")
        keep = s > rel_tol * s[0]
        O = X[:, keep].T / sw
    else:
        lam, psi = _linalg.eigh_descending(gram_matrix(S))
        lam = np.maximum(lam, 0)
        if lam[0] == 0:
            raise DegenerateInputError("all functions in the set are numerically zero")
        s = np.sqrt(lam)
        keep = lam > rel_tol**2 * lam[0]
        O = (psi[:, keep] / s[keep]).T @ S.values
    return OrthonormalBasis(
        S.grid, O, label=f"orthonormal({S.label})",
        rank_tolerance_used=rel_tol, source_singular_values=s,
    )


def project_orthogonal(B, f):
    """``sum_j <o_j|f> o_j``."""
    return SampledFunction(f.grid, inner_products(B, f) @ B.values)


def remove_component(values, B, passes=2):
    """Subtract from each row of ``values`` its projection onto the basis ``B``.

    Classical Gram-Schmidt; the second pass removes what round-off left behind.
    """
    for _ in range(passes):
        values = values - (values * B.grid.weights) @ B.values.T @ B.values
    return values


def complement_spanning_set(V, B_wperp):
    """``u_i = v_i - P_{W⊥} v_i`` for every ``v_i`` in ``V``."""
    if V.grid != B_wperp.grid:
        raise GridMismatchError("spanning set and basis are sampled on different grids")
    return SpanningSet(V.grid, remove_component(V.values, B_wperp), label=f"complement({V.label})")


@dataclass(frozen=True, eq=False)
class SingularSystem:
    """Nonzero spectrum of ``G = U*U``.

    ``psis`` holds the eigenvectors of ``G`` as columns (``M x N``).
    ``xis`` caches the left singular functions when the SVD route produced
    them; otherwise it is ``None`` and they are formed as ``U psi_n / sigma_n``.
    """

    sigmas: np.ndarray
    psis: np.ndarray
    method: str = "svd"
    rank_tol: float = 0.0
    xis: np.ndarray | None = None

    def __post_init__(self):
        if self.sigmas.ndim != 1 or self.psis.shape[1] != self.sigmas.size:
            raise DimensionMismatchError("sigmas and psis disagree in length")
        if self.sigmas.size and (np.any(self.sigmas <= 0) or np.any(np.diff(self.sigmas) > 0)):
            raise InvalidArgumentError("sigmas must be positive and descending")

    @property
    def rank(self):
        return self.sigmas.size

    @property
    def lambdas(self):
        return self.sigmas**2

    def truncated(self, r):
        xis = None if self.xis is None else self.xis[:r]
        return SingularSystem(self.sigmas[:r], self.psis[:, :r], self.method, self.rank_tol, xis)


def machine_floor(sigma_max, shape, dtype):
    """Smallest singular value distinguishable from round-off."""
    return max(shape) * np.finfo(dtype).eps * sigma_max


def build_singular_system(U, rank_tol=0.0, method="svd"):
    """Spectral factorization of the Gram matrix of ``U``.

    Keeps ``sigma_n > rank_tol * sigma_1``.  With ``rank_tol = 0`` every
    singular value above the round-off floor ``max(M, n_points) * eps * sigma_1``
    is kept.
    """
    if rank_tol < 0:
        raise InvalidArgumentError(f"rank_tol must be >= 0, got {rank_tol}")
    _check_method(method)
    dtype = U.grid.dtype
    if method == "svd":
        A, sw = _weighted(U)
        X, s, psi = _linalg.svd(A)
    else:
        lam, psi = _linalg.eigh_descending(gram_matrix(U))
        s = np.sqrt(np.maximum(lam, 0))
    if s.size == 0 or s[0] == 0:
        raise DegenerateInputError("the Gram matrix is zero")
    floor = max(rank_tol * s[0], machine_floor(s[0], (len(U), U.grid.n_points), dtype))
    keep = s > floor
    xis = X[:, keep].T / sw if method == "svd" else None
    return SingularSystem(s[keep], psi[:, keep], method, rank_tol, xis)


@dataclass(frozen=True, eq=False)
class ObliqueProjector:
    """``E = sum_n |eta_n><xi_n|`` together with the sets it was built from."""

    etas: SpanningSet
    xis: SpanningSet
    system: SingularSystem
    V: SpanningSet
    U: SpanningSet

    @property
    def rank(self):
        return self.system.rank

    @property
    def grid(self):
        return self.etas.grid

    @property
    def dual(self):
        return dual_vectors(self)


def build_oblique_projector(V, U, sys, wperp=None):
    """Biorthogonal representation of the projector onto span(V) along W⊥.

    If the orthonormal basis ``wperp`` of W⊥ is given, the ``xi_n`` are
    projected onto W once more, which removes the round-off leak into W⊥
    that would otherwise be amplified by ``1/sigma_n``.
    """
    if len(V) != len(U) or sys.psis.shape[0] != len(U):
        raise DimensionMismatchError(
            f"|V| = {len(V)}, |U| = {len(U)}, singular system built for M = {sys.psis.shape[0]}"
        )
    if V.grid != U.grid:
        raise GridMismatchError("V and U are sampled on different grids")
    scaled = sys.psis / sys.sigmas
    xi = sys.xis if sys.xis is not None else scaled.T @ U.values
    if wperp is not None:
        xi = remove_component(xi, wperp, passes=1)
    eta = scaled.T @ V.values
    return ObliqueProjector(
        SpanningSet(V.grid, eta, "eta"), SpanningSet(V.grid, xi, "xi"), sys, V, U
    )


def dual_vectors(P):
    """Functions ``w_i = sum_n xi_n psi_{n,i} / sigma_n`` with ``E = sum_i |v_i><w_i|``."""
    sys = P.system
    return SpanningSet(P.grid, (sys.psis / sys.sigmas) @ P.xis.values, "w")


def projector_coefficients(P, f):
    """Coefficients ``c_i = <w_i|f>`` of ``E f`` in the spanning set ``V``."""
    sys = P.system
    return (sys.psis / sys.sigmas) @ inner_products(P.xis, f)


def apply_projector(P, f):
    """``E f = sum_n <xi_n|f> eta_n``."""
    return SampledFunction(f.grid, inner_products(P.xis, f) @ P.etas.values)


def truncate_projector(P, r):
    """Keep the first ``r`` terms of the spectral sum."""
    if int(r) != r or not 1 <= r <= P.rank:
        raise InvalidArgumentError(f"r must be an integer in [1, {P.rank}], got {r}")
    r = int(r)
    return ObliqueProjector(
        SpanningSet(P.grid, P.etas.values[:r], "eta"),
        SpanningSet(P.grid, P.xis.values[:r], "xi"),
        P.system.truncated(r),
        P.V,
        P.U,
    )


def pseudoinverse_apply(V, U, f, rank_tol=0.0, orthogonalize=False):
    """Apply ``E = V G^+ U*`` without the spectral sum.

    With ``orthogonalize=True`` the Gram matrix is replaced by
    ``G_q[i, j] = <q_i|v_j>`` for an orthonormal basis ``{q_i}`` of span(U),
    and the coefficients are ``G_q^+ (<q_i|f>)``.
    """
    if len(V) != len(U):
        raise DimensionMismatchError(f"|V| = {len(V)} but |U| = {len(U)}")
    if orthogonalize:
        Q = orthonormalize(U, rel_tol=max(rank_tol, np.finfo(U.grid.dtype).eps))
        Gq = gram_matrix(Q, V)
        c = _linalg.pinv(Gq, rtol=rank_tol or None) @ inner_products(Q, f)
    else:
        lam, psi = _linalg.eigh_descending(gram_matrix(U))
        lam = np.maximum(lam, 0)
        if lam[0] == 0:
            raise DegenerateInputError("the Gram matrix is zero")
        s = np.sqrt(lam)
        keep = s > max(rank_tol * s[0], machine_floor(s[0], (len(U), U.grid.n_points), lam.dtype))
        ginv = (psi[:, keep] / lam[keep]) @ psi[:, keep].T
        c = ginv @ inner_products(U, f)
    return SampledFunction(f.grid, c @ V.values)
