"""Synthetic test assets: cubic B-spline basis, background family, planted
sparse spectra and multiplicative Gaussian noise.

Everything is a pure function of its arguments and seeds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import InvalidArgumentError
from .function_space import (
    SampledFunction,
    SpanningSet,
    norm,
    read_function_csv,
    write_function_csv,
)

__all__ = [
    "bspline_basis",
    "cox_de_boor",
    "background_family",
    "background_weights",
    "make_background",
    "plant_spectrum",
    "add_noise",
    "PlantedInstance",
    "build_instance",
    "save_bundle",
    "load_bundle",
    "NOISE_MODES",
]

NOISE_MODES = ("relative_std", "relative_var")
KNOT_LAYOUTS = ("clamped", "cardinal")


def cox_de_boor(knots, degree, x):
    """All B-splines of ``degree`` on ``knots`` evaluated at ``x``.

    Returns an array of shape ``(len(knots) - degree - 1, len(x))`` in the
    dtype of ``x``.  Intervals are half-open, except that the right end of
    the last non-empty interval is included.
    """
    t = np.asarray(knots, dtype=x.dtype)[:, None]
    N = ((t[:-1] <= x) & (x < t[1:])).astype(x.dtype)
    last = np.flatnonzero(t[:-1, 0] < t[1:, 0]).max()
    N[last, x == t[last + 1, 0]] = 1
    for p in range(1, degree + 1):
        rows = len(t) - p - 1
        ti, tip, ti1, tip1 = t[:rows], t[p:p + rows], t[1:1 + rows], t[p + 1:p + 1 + rows]
        left = tip - ti
        right = tip1 - ti1
        left = np.where(left > 0, left, np.inf)
        right = np.where(right > 0, right, np.inf)
        N = (x - ti) / left * N[:-1] + (tip1 - x) / right * N[1:]
    return N


def bspline_basis(grid, spacing, knots="clamped", normalize=True):
    """Cubic B-splines with knot spacing ``spacing`` restricted to the grid interval.

    ``knots="cardinal"`` uses the uniform knot sequence extended by three
    knots past each end, so every function is a translate of one prototype.
    ``knots="clamped"`` repeats the end knots instead; the boundary functions
    are then the clamped ones but the count is the same, ``(b - a)/spacing + 3``.
    With ``normalize`` each function is scaled to unit norm on the grid.
    """
    if knots not in KNOT_LAYOUTS:
        raise InvalidArgumentError(f"knots must be one of {KNOT_LAYOUTS}, got {knots!r}")
    if not spacing > 0:
        raise InvalidArgumentError(f"spacing must be positive, got {spacing}")
    ratio = (grid.b - grid.a) / spacing
    n_int = round(ratio)
    if n_int < 1 or abs(ratio - n_int) > 1e-12 * max(ratio, 1.0):
        raise InvalidArgumentError(f"spacing {spacing} does not divide [{grid.a}, {grid.b}]")
    dt = grid.dtype.type
    a, b = dt(grid.a), dt(grid.b)
    if knots == "cardinal":
        k = np.arange(-3, n_int + 4, dtype=grid.dtype)
        t = a + (b - a) * (k / dt(n_int))
    else:
        inner = a + (b - a) * (np.arange(n_int + 1, dtype=grid.dtype) / dt(n_int))
        t = np.concatenate([np.full(3, a), inner, np.full(3, b)])
    B = cox_de_boor(t, 3, grid.points)
    if normalize:
        B = B / np.sqrt((B * B) @ grid.weights)[:, None]
    return SpanningSet(grid, B, label=f"bspline({knots}, {spacing})")


def background_family(grid, J, normalize=False):
    """``y_j(x) = (x + 0.01 j) ** (-0.01 j)`` for ``j = 1..J``."""
    if int(J) != J or J < 1:
        raise InvalidArgumentError(f"J must be a positive integer, got {J}")
    dt = grid.dtype.type
    x = grid.points
    Y = np.stack([(x + dt(j) / 100) ** (-dt(j) / 100) for j in range(1, int(J) + 1)])
    if normalize:
        Y = Y / np.sqrt((Y * Y) @ grid.weights)[:, None]
    return SpanningSet(grid, Y, label="background")


def background_weights(J, dtype=np.float64):
    j = np.arange(1, J + 1, dtype=dtype)
    return j**4 * np.exp(-j / 20)


def make_background(family, weights=None):
    """``g = sum_j j^4 exp(-0.05 j) y_j`` unless other ``weights`` are given."""
    if weights is None:
        weights = background_weights(len(family), family.grid.dtype)
    return family.combine(np.asarray(weights, dtype=family.grid.dtype))


def plant_spectrum(basis, K, support_seed, coeff_seed, coeff_range=(0.0, 1.0)):
    """Draw ``K`` distinct basis indices and uniform coefficients.

    Returns ``(support, coeffs, f_V)``; the support is sorted (0-based).
    """
    M = len(basis)
    if int(K) != K or not 1 <= K <= M:
        raise InvalidArgumentError(f"K must be an integer in [1, {M}], got {K}")
    lo, hi = coeff_range
    if not lo <= hi:
        raise InvalidArgumentError(f"empty coefficient range {coeff_range}")
    support = np.sort(np.random.default_rng(support_seed).choice(M, int(K), replace=False))
    coeffs = np.random.default_rng(coeff_seed).uniform(lo, hi, int(K))
    c = np.zeros(M)
    c[support] = coeffs
    return support, coeffs, basis.combine(c)


def add_noise(f, percent, noise_seed, mode="relative_std"):
    """Independent Gaussian perturbation of every sample.

    ``relative_std``: standard deviation ``percent/100 * |f(x_j)|``.
    ``relative_var``: variance ``percent/100 * |f(x_j)|``.
    Returns ``(noisy, noise)`` where ``noise`` is exactly ``noisy - f``.
    """
    if not percent >= 0:
        raise InvalidArgumentError(f"percent must be >= 0, got {percent}")
    if mode not in NOISE_MODES:
        raise InvalidArgumentError(f"noise mode must be one of {NOISE_MODES}, got {mode!r}")
    dt = f.grid.dtype
    scale = np.abs(f.values) * dt.type(percent / 100)
    if mode == "relative_var":
        scale = np.sqrt(scale)
    z = np.random.default_rng(noise_seed).standard_normal(f.grid.n_points).astype(dt)
    noisy = f.values + z * scale
    return SampledFunction(f.grid, noisy), noisy - f.values


@dataclass(frozen=True, eq=False)
class PlantedInstance:
    support: np.ndarray
    coeffs: np.ndarray
    f_V: SampledFunction
    g: SampledFunction
    f_clean: SampledFunction
    f_obs: SampledFunction
    noise: np.ndarray
    noise_percent: float = 0.0
    noise_mode: str = "relative_std"

    @property
    def grid(self):
        return self.f_V.grid

    def true_coefficients(self, M):
        c = np.zeros(M)
        c[self.support] = self.coeffs
        return c


def build_instance(basis, background, K, support_seed, coeff_seed, noise_seed,
                   noise_percent, noise_mode="relative_std", background_ratio=1.0,
                   coeff_range=(0.0, 1.0)):
    """Planted spectrum plus background plus noise.

    ``background`` is the unscaled background function.  If
    ``background_ratio`` is not ``None`` it is rescaled so that
    ``||g|| = background_ratio * ||f_V||``.
    """
    support, coeffs, f_V = plant_spectrum(basis, K, support_seed, coeff_seed, coeff_range)
    g = background
    if background_ratio is not None:
        g = g * (background_ratio * norm(f_V) / norm(g))
    f_clean = f_V + g
    f_obs, noise = add_noise(f_clean, noise_percent, noise_seed, noise_mode)
    return PlantedInstance(support, coeffs, f_V, g, f_clean, f_obs, noise, noise_percent,
                           noise_mode)


_BUNDLE_FUNCTIONS = ("f_obs", "f_clean", "f_V", "g")


def save_bundle(instance, directory, config_text=""):
    """Write an instance to ``directory`` (created if needed)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "config").write_text(config_text)
    for name in _BUNDLE_FUNCTIONS:
        write_function_csv(getattr(instance, name), d / f"{name}.csv")
    write_function_csv(SampledFunction(instance.grid, instance.noise), d / "noise.csv")
    with (d / "support.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "coefficient"])
        for i, c in zip(instance.support, instance.coeffs):
            w.writerow([int(i), f"{float(c):.17g}"])
    return d


def load_bundle(directory, grid=None):
    """Read a bundle written by :func:`save_bundle`.

    Returns ``(instance, config_text)``.  Values are read back at the
    precision of ``grid`` (float64 if the grid is rebuilt from the files).
    """
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"no instance bundle at {d}")
    funcs = {}
    for name in _BUNDLE_FUNCTIONS:
        funcs[name] = read_function_csv(d / f"{name}.csv", grid)
        grid = funcs[name].grid
    noise = read_function_csv(d / "noise.csv", grid).values
    with (d / "support.csv").open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    support = np.array([int(r["index"]) for r in rows], dtype=int)
    coeffs = np.array([float(r["coefficient"]) for r in rows])
    config_text = (d / "config").read_text() if (d / "config").exists() else ""
    inst = PlantedInstance(support, coeffs, funcs["f_V"], funcs["g"], funcs["f_clean"],
                           funcs["f_obs"], noise)
    return inst, config_text
