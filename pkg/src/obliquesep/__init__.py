"""Separate a sparse signal from an additive background lying in a nearly
aligned subspace, by oblique projection or by sparse q-norm minimization."""

from importlib.metadata import PackageNotFoundError, version

from .config import ExperimentConfig, RunManifest
from .exceptions import (
    DegenerateInputError,
    DimensionMismatchError,
    ExhaustedError,
    GridMismatchError,
    InvalidArgumentError,
    ObliqueSepError,
    SingularSystemError,
)
from .function_space import (
    Grid,
    SampledFunction,
    SpanningSet,
    gram_matrix,
    inner_product,
    inner_products,
    make_uniform_grid,
    norm,
)
from .oblique import (
    ObliqueProjector,
    OrthonormalBasis,
    SingularSystem,
    apply_projector,
    build_oblique_projector,
    build_singular_system,
    complement_spanning_set,
    dual_vectors,
    orthonormalize,
    project_orthogonal,
    truncate_projector,
)
from .sparse_solver import (
    SeparationProblem,
    SeparationState,
    focuss_minimize,
    project_data_to_W,
    separate,
)

__all__ = [
    "apply_projector",
    "build_oblique_projector",
    "build_singular_system",
    "complement_spanning_set",
    "DegenerateInputError",
    "DimensionMismatchError",
    "dual_vectors",
    "ExhaustedError",
    "ExperimentConfig",
    "focuss_minimize",
    "gram_matrix",
    "Grid",
    "GridMismatchError",
    "inner_product",
    "inner_products",
    "InvalidArgumentError",
    "make_uniform_grid",
    "norm",
    "ObliqueProjector",
    "ObliqueSepError",
    "OrthonormalBasis",
    "orthonormalize",
    "project_data_to_W",
    "project_orthogonal",
    "RunManifest",
    "SampledFunction",
    "separate",
    "SeparationProblem",
    "SeparationState",
    "SingularSystem",
    "SingularSystemError",
    "SpanningSet",
    "truncate_projector",
]

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.0.0"
