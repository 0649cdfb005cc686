"""Benchmark dataset generators: StepHeat, delta-Helmholtz, steady 2D
Burgers, and GRF-Helmholtz.

All four produce (input observations, query coordinates, target values,
scenario parameter) records on the unit domain, in a canonical raster order
(x fastest, then y or t) that the spectral encoder's bin/location pairing
relies on. Targets are analytic wherever a closed form exists:

* StepHeat: step input 1_{x>s}; target is the frequency-scaled sine series
  u(x,t) = sum_n a_n sin(n kappa pi x) exp(-beta (n kappa pi)^2 t) with
  a_n = (2 / (n kappa pi)) (cos(n kappa pi s) - cos(n kappa pi)).
  The series is truncated at 64 terms: the omitted tail is below 1e-12 for
  t >= 0.1 thanks to the exponential factor, and the t=0 Gibbs wiggles are
  inherent to the truncated-series target, not an implementation artifact.
* delta-Helmholtz: a manufactured pair with deliberate frequency mismatch;
  the forcing uses k=1-scale trigonometry while the solution oscillates at
  10 pi. The pair is supervised data, not a PDE-consistent pair; delta is an
  additive global shift of both fields.
* Burgers: manufactured u = x(1-x)y(1-y)exp(lambda(x-y)); the forcing is
  assembled from closed-form derivatives (with g the polynomial factor and
  E the exponential: u_x = E(g_x + lambda g), u_y = E(g_y - lambda g),
  u_xx = E(g_xx + 2 lambda g_x + lambda^2 g),
  u_yy = E(g_yy - 2 lambda g_y + lambda^2 g)).
* GRF-Helmholtz: separable Matern-1.5 field f = L_x Z L_y^T sampled via the
  per-axis Cholesky factors on the fine 128x128 grid, solution from the
  sparse Helmholtz solve; training samples are nearest-index decimations to
  the 50x50 grid so every stored value is an exact sample of the fine field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import cholesky, helmholtz_solve

__all__ = [
    "Scenario",
    "FunctionSample",
    "BenchmarkSpec",
    "Dataset",
    "BENCHMARK_IDS",
    "default_spec",
    "test_scenarios",
    "stepheat_sample",
    "delta_helmholtz_sample",
    "burgers_sample",
    "grf_helmholtz_sample",
    "grf_forcing",
    "make_dataset",
    "raster_grid_2d",
    "decimate_indices",
]

BENCHMARK_IDS = {"stepheat": 1, "delta_helmholtz": 2, "burgers": 3,
                 "grf_helmholtz": 4}

# StepHeat constants
KAPPA = 20
BETA = 6.25e-4
STEPHEAT_TERMS = 64

BURGERS_NU = 0.05


@dataclass(frozen=True)
class Scenario:
    """Tagged generator parameter: s | delta | lambda | (ell, k, seed)."""

    kind: str                      # "s" | "delta" | "lambda" | "grf"
    params: tuple[float, ...]

    def describe(self) -> str:
        if self.kind == "grf":
            ell, k, seed = self.params
            return f"ell={ell!r},k={k!r},seed={int(seed)}"
        return f"{self.kind}={self.params[0]!r}"

    def label(self) -> str:
        if self.kind == "grf":
            ell, k, seed = self.params
            return f"ell={ell:g},k={k:g},seed={int(seed)}"
        return f"{self.kind}={self.params[0]:g}"


@dataclass
class FunctionSample:
    """One dataset record. Coordinates live in the closed unit domain;
    targets follow raster order (x fastest) and ``query_dims`` gives the
    grid shape (slow axis first) when the queries form a uniform grid."""

    input_coords: np.ndarray       # [N, d_in]
    input_values: np.ndarray       # [N, d_f]
    query_coords: np.ndarray       # [M, d_q]
    targets: np.ndarray            # [M]
    scenario: Scenario
    query_dims: tuple[int, ...]
    input_dims: tuple[int, ...] | None = None   # grid shape of inputs, if any

    def validate(self) -> None:
        n, m = self.input_coords.shape[0], self.query_coords.shape[0]
        if n < 1 or m < 1:
            raise ValueError("samples need N >= 1 observations and M >= 1 queries")
        for name, arr in (("input_coords", self.input_coords),
                          ("input_values", self.input_values),
                          ("query_coords", self.query_coords),
                          ("targets", self.targets)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite values")
        for coords in (self.input_coords, self.query_coords):
            if coords.min() < 0.0 or coords.max() > 1.0:
                raise ValueError("coordinates must lie in the unit domain")
        if int(np.prod(self.query_dims)) != self.targets.size:
            raise ValueError("query_dims inconsistent with target count")


@dataclass(frozen=True)
class BenchmarkSpec:
    """Generation plan; defaults per benchmark mirror the summary table in
    ``default_spec``. ``n_samples`` is the total count (for GRF it must be a
    multiple of len(ells))."""

    benchmark: str
    n_samples: int
    param_range: tuple[float, float] | None = None
    ells: tuple[float, ...] | None = None
    k: float | None = None
    input_mode: str = "nonuniform"      # delta_helmholtz: nonuniform | regular
    grf_mode: str = "train"             # grf: train (50x50) | eval (128x128)
    split: str = "train"                # train | test (fixed scenario list)

    def __post_init__(self):
        if self.benchmark not in BENCHMARK_IDS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}")
        if self.benchmark == "grf_helmholtz":
            if not self.ells or self.k is None:
                raise ValueError("grf_helmholtz needs ells and k")
            if self.split == "train" and self.n_samples % len(self.ells):
                raise ValueError("n_samples must be a multiple of len(ells)")


@dataclass
class Dataset:
    benchmark: str
    samples: list[FunctionSample]
    seed: int
    spec: BenchmarkSpec | None = None


def default_spec(benchmark: str, split: str = "train") -> BenchmarkSpec:
    if benchmark == "stepheat":
        return BenchmarkSpec("stepheat", 128, param_range=(0.3, 0.7), split=split)
    if benchmark == "delta_helmholtz":
        return BenchmarkSpec("delta_helmholtz", 256, param_range=(-5.0, 5.0),
                             split=split)
    if benchmark == "burgers":
        return BenchmarkSpec("burgers", 128, param_range=(3.0, 6.0), split=split)
    if benchmark == "grf_helmholtz":
        return BenchmarkSpec("grf_helmholtz", 450, ells=(0.1, 0.2, 0.3), k=60.0,
                             grf_mode="train" if split == "train" else "eval",
                             split=split)
    raise ValueError(f"unknown benchmark {benchmark!r}")


def test_scenarios(benchmark: str) -> list[float] | list[tuple[float, float]]:
    """Canonical evaluation points: ID and bidirectional OOD."""
    if benchmark == "stepheat":
        return [0.32, 0.39, 0.41, 0.48, 0.52, 0.66]
    if benchmark == "delta_helmholtz":
        return [4.3, 30.8, -30.8]
    if benchmark == "burgers":
        return [3.2, 3.8, 4.2, 4.5, 5.8, 1.5, 2.0, 6.6, 7.5]
    if benchmark == "grf_helmholtz":
        return [0.05, 0.35]
    raise ValueError(f"unknown benchmark {benchmark!r}")


def raster_grid_2d(nx: int, ny: int) -> tuple[np.ndarray, tuple[int, int]]:
    """Uniform grid on [0,1]^2 in raster order, x fastest; returns the
    [nx*ny, 2] coordinate list and the (ny, nx) field shape."""
    x = np.linspace(0.0, 1.0, nx)
    y = np.linspace(0.0, 1.0, ny)
    xx, yy = np.meshgrid(x, y)           # [ny, nx], x fastest on ravel
    return np.column_stack([xx.ravel(), yy.ravel()]), (ny, nx)


def decimate_indices(n_fine: int, n_coarse: int) -> np.ndarray:
    """Nearest fine-grid indices of a coarse uniform grid (no interpolation)."""
    return np.round(np.linspace(0.0, n_fine - 1, n_coarse)).astype(int)


# ---------------------------------------------------------------------------
# StepHeat

def stepheat_series(x: np.ndarray, t: np.ndarray, s: float,
                    n_terms: int = STEPHEAT_TERMS) -> np.ndarray:
    """Truncated frequency-scaled sine series, evaluated pointwise on
    (x, t) arrays of equal shape."""
    u = np.zeros(np.broadcast_shapes(x.shape, t.shape))
    for n in range(1, n_terms + 1):
        w = n * KAPPA * math.pi
        a_n = (2.0 / w) * (math.cos(w * s) - math.cos(w))
        u += a_n * np.sin(w * x) * np.exp(-BETA * w * w * t)
    return u


def stepheat_sample(s: float, n_input: int = 100, nx: int = 150, nt: int = 50,
                    n_terms: int = STEPHEAT_TERMS) -> FunctionSample:
    """Step input observed at n_input uniform locations; target series on a
    uniform nx (space) by nt (time) grid, x fastest."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"discontinuity location must be in (0,1), got {s}")
    x_in = np.linspace(0.0, 1.0, n_input)
    values = (x_in > s).astype(np.float64)

    x = np.linspace(0.0, 1.0, nx)
    t = np.linspace(0.0, 1.0, nt)
    xx, tt = np.meshgrid(x, t)          # [nt, nx]
    targets = stepheat_series(xx, tt, s, n_terms)
    return FunctionSample(
        input_coords=x_in[:, None],
        input_values=values[:, None],
        query_coords=np.column_stack([xx.ravel(), tt.ravel()]),
        targets=targets.ravel(),
        scenario=Scenario("s", (float(s),)),
        query_dims=(nt, nx),
        input_dims=(n_input,),
    )


# ---------------------------------------------------------------------------
# delta-Helmholtz

def delta_helmholtz_solution(x, y, delta: float):
    return (x + y) * np.sin(10.0 * np.pi * x) * np.sin(10.0 * np.pi * y) + delta


def delta_helmholtz_forcing(x, y, delta: float):
    """Forcing with deliberate frequency mismatch (k=1-scale trigonometry)."""
    return (2.0 * np.pi * (np.sin(np.pi * x) * np.cos(np.pi * y)
                           + np.cos(np.pi * x) * np.sin(np.pi * y))
            + (1.0 - 2.0 * np.pi ** 2) * (x + y) * np.sin(np.pi * x) * np.sin(np.pi * y)
            + delta)


def delta_helmholtz_sample(delta: float, rng: np.random.Generator | None = None,
                           input_mode: str = "nonuniform",
                           n_input_side: int = 50,
                           n_query_side: int = 60) -> FunctionSample:
    """Forcing observed at n_input_side^2 locations (iid uniform for the
    encoder-based model, a regular grid for fixed-sensor baselines); solution
    on a uniform n_query_side^2 grid."""
    n_in = n_input_side * n_input_side
    if input_mode == "nonuniform":
        if rng is None:
            raise ValueError("nonuniform input sampling needs an rng")
        in_coords = rng.uniform(0.0, 1.0, size=(n_in, 2))
        input_dims = None
    elif input_mode == "regular":
        in_coords, _ = raster_grid_2d(n_input_side, n_input_side)
        input_dims = (n_input_side, n_input_side)
    else:
        raise ValueError(f"unknown input_mode {input_mode!r}")
    values = delta_helmholtz_forcing(in_coords[:, 0], in_coords[:, 1], delta)

    q_coords, q_dims = raster_grid_2d(n_query_side, n_query_side)
    targets = delta_helmholtz_solution(q_coords[:, 0], q_coords[:, 1], delta)
    return FunctionSample(
        input_coords=in_coords,
        input_values=values[:, None],
        query_coords=q_coords,
        targets=targets,
        scenario=Scenario("delta", (float(delta),)),
        query_dims=q_dims,
        input_dims=input_dims,
    )


# ---------------------------------------------------------------------------
# steady 2D Burgers

def burgers_solution(x, y, lam: float):
    # grouped so the polynomial factor is exactly symmetric under x <-> y
    return (x * (1.0 - x)) * (y * (1.0 - y)) * np.exp(lam * (x - y))


def burgers_forcing(x, y, lam: float, nu: float = BURGERS_NU):
    """u u_x + u u_y - nu (u_xx + u_yy) from closed-form derivatives."""
    g = (x * (1.0 - x)) * (y * (1.0 - y))
    gx = (1.0 - 2.0 * x) * y * (1.0 - y)
    gy = x * (1.0 - x) * (1.0 - 2.0 * y)
    gxx = -2.0 * y * (1.0 - y)
    gyy = -2.0 * x * (1.0 - x)
    e = np.exp(lam * (x - y))
    u = g * e
    ux = e * (gx + lam * g)
    uy = e * (gy - lam * g)
    uxx = e * (gxx + 2.0 * lam * gx + lam * lam * g)
    uyy = e * (gyy - 2.0 * lam * gy + lam * lam * g)
    return u * ux + u * uy - nu * (uxx + uyy)


def burgers_sample(lam: float, nu: float = BURGERS_NU,
                   n_side: int = 100) -> FunctionSample:
    """Forcing and manufactured solution on the same uniform n_side^2 grid."""
    coords, dims = raster_grid_2d(n_side, n_side)
    x, y = coords[:, 0], coords[:, 1]
    return FunctionSample(
        input_coords=coords,
        input_values=burgers_forcing(x, y, lam, nu)[:, None],
        query_coords=coords.copy(),
        targets=burgers_solution(x, y, lam),
        scenario=Scenario("lambda", (float(lam),)),
        query_dims=dims,
        input_dims=(n_side, n_side),
    )


# ---------------------------------------------------------------------------
# GRF-Helmholtz

def matern15_covariance(coords: np.ndarray, ell: float,
                        sigma2: float = 1.0) -> np.ndarray:
    """Matern-1.5 kernel C(r) = sigma^2 (1 + sqrt(3) r / ell) exp(-sqrt(3) r / ell)."""
    r = np.abs(coords[:, None] - coords[None, :])
    s = np.sqrt(3.0) * r / ell
    return sigma2 * (1.0 + s) * np.exp(-s)


_chol_cache: dict[tuple[float, int], np.ndarray] = {}


def _axis_factor(ell: float, n_fine: int) -> np.ndarray:
    key = (float(ell), n_fine)
    l = _chol_cache.get(key)
    if l is None:
        axis = np.linspace(0.0, 1.0, n_fine)
        l = cholesky(matern15_covariance(axis, ell))
        _chol_cache[key] = l
    return l


def grf_forcing(ell: float, noise: np.ndarray, n_fine: int = 128) -> np.ndarray:
    """Separable Matern field L Z L^T on the fine grid, returned [y, x]."""
    if noise.shape != (n_fine, n_fine):
        raise ValueError(f"noise must be [{n_fine}, {n_fine}], got {noise.shape}")
    l = _axis_factor(ell, n_fine)
    field_xy = l @ noise @ l.T           # first axis x, second y
    return field_xy.T


def grf_helmholtz_sample(ell: float, k: float, seed: int, n_fine: int = 128,
                         n_coarse: int = 50, mode: str = "train") -> FunctionSample:
    """Seeded Matern forcing plus its finite-difference Helmholtz solution.

    mode="train" decimates both fields onto the n_coarse grid (values remain
    exact samples of the fine field); mode="eval" keeps the fine grid.
    """
    if ell <= 0 or k <= 0:
        raise ValueError("ell and k must be positive")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6F]))
    noise = rng.standard_normal((n_fine, n_fine))
    f_fine = grf_forcing(ell, noise, n_fine)            # [y, x]
    h = 1.0 / (n_fine - 1)
    u_fine = helmholtz_solve(f_fine, k, h)

    axis = np.linspace(0.0, 1.0, n_fine)
    if mode == "train":
        idx = decimate_indices(n_fine, n_coarse)
        f_out = f_fine[np.ix_(idx, idx)]
        u_out = u_fine[np.ix_(idx, idx)]
        ax = axis[idx]
        dims = (n_coarse, n_coarse)
    elif mode == "eval":
        f_out, u_out, ax, dims = f_fine, u_fine, axis, (n_fine, n_fine)
    else:
        raise ValueError(f"unknown grf mode {mode!r}")

    xx, yy = np.meshgrid(ax, ax)
    coords = np.column_stack([xx.ravel(), yy.ravel()])
    return FunctionSample(
        input_coords=coords,
        input_values=f_out.ravel()[:, None],
        query_coords=coords.copy(),
        targets=u_out.ravel(),
        scenario=Scenario("grf", (float(ell), float(k), float(seed))),
        query_dims=dims,
        input_dims=dims,
    )


# ---------------------------------------------------------------------------
# dataset assembly

def _noise_seed(dataset_seed: int, index: int) -> int:
    return int(dataset_seed) * 1_000_000 + index


def make_dataset(spec: BenchmarkSpec, seed: int) -> Dataset:
    """Draw scenario parameters (train: uniform over the stated range; test:
    the canonical scenario list) and generate every sample deterministically.
    Per-sample randomness (input locations, GRF noise) comes from streams
    derived from (seed, sample index)."""
    samples: list[FunctionSample] = []
    rng_params = np.random.default_rng(np.random.SeedSequence([int(seed), 0xDA7A]))

    if spec.benchmark == "grf_helmholtz":
        if spec.split == "train":
            per_ell = spec.n_samples // len(spec.ells)
            plan = [ell for ell in spec.ells for _ in range(per_ell)]
        else:
            per_ell = max(1, spec.n_samples // len(spec.ells))
            plan = [ell for ell in spec.ells for _ in range(per_ell)]
        for i, ell in enumerate(plan):
            samples.append(grf_helmholtz_sample(
                ell, spec.k, _noise_seed(seed, i), mode=spec.grf_mode))
    else:
        if spec.split == "train":
            lo, hi = spec.param_range
            values = rng_params.uniform(lo, hi, size=spec.n_samples)
        else:
            values = np.array(test_scenarios(spec.benchmark), dtype=np.float64)
        for i, v in enumerate(values):
            if spec.benchmark == "stepheat":
                samples.append(stepheat_sample(v))
            elif spec.benchmark == "delta_helmholtz":
                rng_i = np.random.default_rng(np.random.SeedSequence([int(seed), i]))
                samples.append(delta_helmholtz_sample(
                    v, rng=rng_i, input_mode=spec.input_mode))
            else:
                samples.append(burgers_sample(v))

    for s in samples:
        s.validate()
    return Dataset(benchmark=spec.benchmark, samples=samples, seed=int(seed),
                   spec=spec)
