"""Evaluation metrics: relative L2 error and a frequency-weighted spectral
(Barron-type) relative error.

The Barron norm used throughout this repository is

    |g|_B = sum_k (1 + |k|_2) |ghat(k)|

over the multi-dimensional DFT of the raw grid values, with k the signed
integer wavenumber vector (bins mapped to centered frequencies). The weight
1 + |k| is frozen in one place so every table the harness emits is
internally comparable; absolute magnitudes are a convention of this repo,
not a universal normalization. No windowing or detrending is applied --
three of the four benchmarks have zero-boundary fields, which limits
leakage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["MetricReport", "rel_l2", "barron_rel", "barron_norm"]


@dataclass
class MetricReport:
    """One evaluation row; the CSV schema the harness writes."""

    benchmark: str
    scenario: str
    model: str
    seed: int
    rel_l2: float
    barron_rel: float
    n_input: int
    n_query: int
    wall_ms: float
    note: str = ""

    CSV_HEADER = "benchmark,scenario,model,seed,rel_l2,barron_rel,n_input,n_query,wall_ms"

    def csv_row(self) -> str:
        return (f"{self.benchmark},{self.scenario},{self.model},{self.seed},"
                f"{self.rel_l2:.8g},{self.barron_rel:.8g},{self.n_input},"
                f"{self.n_query},{self.wall_ms:.3f}")


def rel_l2(pred, ref) -> float:
    """||pred - ref||_2 / ||ref||_2 over all grid values."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    ref = np.asarray(ref, dtype=np.float64).ravel()
    if pred.shape != ref.shape:
        raise ValueError(f"field shapes differ: {pred.shape} vs {ref.shape}")
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise ValueError("reference field has zero L2 norm")
    return float(np.linalg.norm(pred - ref) / denom)


def _frequency_weights(dims: tuple[int, ...]) -> np.ndarray:
    axes = [np.fft.fftfreq(n) * n for n in dims]   # signed integer wavenumbers
    grids = np.meshgrid(*axes, indexing="ij")
    k2 = np.zeros(dims)
    for g in grids:
        k2 += g * g
    return 1.0 + np.sqrt(k2)


def barron_norm(field, grid_dims: tuple[int, ...]) -> float:
    """sum_k (1 + |k|) |DFT(field)(k)| on a uniform rectangular grid."""
    arr = np.asarray(field, dtype=np.float64)
    dims = tuple(int(d) for d in grid_dims)
    if arr.size != int(np.prod(dims)):
        raise ValueError(f"field size {arr.size} does not match dims {dims}")
    spec = np.fft.fftn(arr.reshape(dims))
    return float(np.sum(_frequency_weights(dims) * np.abs(spec)))


def barron_rel(pred, ref, grid_dims: tuple[int, ...]) -> float:
    """|pred - ref|_B / |ref|_B on a shared uniform grid."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    ref = np.asarray(ref, dtype=np.float64).ravel()
    if pred.shape != ref.shape:
        raise ValueError(f"field shapes differ: {pred.shape} vs {ref.shape}")
    denom = barron_norm(ref, grid_dims)
    if denom == 0.0:
        raise ValueError("reference field has zero Barron norm")
    return barron_norm(pred - ref, grid_dims) / denom
