"""Minimal unstacked DeepONet baseline: a branch MLP on a fixed sensor
vector, a trunk MLP on query coordinates, inner-product readout plus a
scalar bias.

The branch input width is frozen at construction. That fixed-sensor
contract is the point of the baseline: evaluating with a different number
of observations is a dimension error, in deliberate contrast to the
encoder-based operator, and the harness reports that error as a structured
failure row rather than working around it.

Layer shapes (branch [n_sensors -> 64 -> p], trunk [d -> 64 -> 64 -> p],
p = 128) put the default parameter count at 1.8e5 for a 50x50 sensor grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import ContractError, ShapeError, Tensor
from .model import Linear, mlp_forward, mlp_init, mlp_param_count

__all__ = ["DeepOnetConfig", "DeepOnetParams", "init_deeponet_params",
           "deeponet_forward", "deeponet_batch_forward", "toy_deeponet_config"]


@dataclass(frozen=True)
class DeepOnetConfig:
    n_sensors: int
    d_f: int = 1
    d_coord_out: int = 2
    p: int = 128                      # interaction width
    branch_hidden: tuple[int, ...] = (64,)
    trunk_hidden: tuple[int, ...] = (64, 64)
    activation: str = "gelu"

    def branch_dims(self) -> tuple[int, ...]:
        return (self.n_sensors * self.d_f, *self.branch_hidden, self.p)

    def trunk_dims(self) -> tuple[int, ...]:
        return (self.d_coord_out, *self.trunk_hidden, self.p)

    def param_count(self) -> int:
        return (mlp_param_count(self.branch_dims())
                + mlp_param_count(self.trunk_dims()) + 1)


@dataclass
class DeepOnetParams:
    config: DeepOnetConfig
    branch: list[Linear]
    trunk: list[Linear]
    bias: Tensor                      # scalar

    def named_tensors(self) -> list[tuple[str, Tensor]]:
        out = []
        for name, layers in (("branch", self.branch), ("trunk", self.trunk)):
            for i, layer in enumerate(layers):
                out.append((f"{name}.{i}.w", layer.w))
                out.append((f"{name}.{i}.b", layer.b))
        out.append(("bias", self.bias))
        return out

    def param_count(self) -> int:
        return sum(t.size for _, t in self.named_tensors())


def init_deeponet_params(config: DeepOnetConfig, seed: int) -> DeepOnetParams:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xD0]))
    # inner-product readout over p channels: shrink both output layers so the
    # untrained model starts near the zero predictor (same rationale as the
    # encoder-based model, applied symmetrically)
    params = DeepOnetParams(
        config=config,
        branch=mlp_init(config.branch_dims(), rng, final_scale=0.25),
        trunk=mlp_init(config.trunk_dims(), rng, final_scale=0.25),
        bias=Tensor(np.zeros(()), requires_grad=True),
    )
    assert params.param_count() == config.param_count()
    return params


def _check_sensors(config: DeepOnetConfig, sensor_values) -> Tensor:
    v = np.asarray(sensor_values, dtype=np.float64).ravel()
    want = config.n_sensors * config.d_f
    if v.size != want:
        raise ShapeError(
            f"DeepONet was built for {want} sensor values, got {v.size}; "
            "the sensor set is fixed at construction")
    return Tensor(v.reshape(1, want))


def deeponet_forward(params: DeepOnetParams, sensor_values, query_coords) -> Tensor:
    """<branch(sensors), trunk(x_m)> + bias for each query row."""
    cfg = params.config
    sv = _check_sensors(cfg, sensor_values)
    qc = np.asarray(query_coords, dtype=np.float64)
    if qc.ndim != 2 or qc.shape[1] != cfg.d_coord_out:
        raise ShapeError(f"query_coords must be [M, {cfg.d_coord_out}], got {qc.shape}")
    br = mlp_forward(params.branch, sv, cfg.activation)            # [1, p]
    tr = mlp_forward(params.trunk, Tensor(qc), cfg.activation)     # [M, p]
    out = ad.matmul(tr, ad.transpose(br))                          # [M, 1]
    return ad.add(ad.reshape(out, (qc.shape[0],)), params.bias)


def deeponet_batch_forward(params: DeepOnetParams, sensor_matrix,
                           query_coords) -> Tensor:
    """Batch of sensor vectors against one shared query set; returns
    predictions flattened to [B*M], sample-major."""
    cfg = params.config
    sm = sensor_matrix if isinstance(sensor_matrix, Tensor) else Tensor(sensor_matrix)
    if sm.data.ndim != 2 or sm.shape[1] != cfg.n_sensors * cfg.d_f:
        raise ShapeError(
            f"sensor_matrix must be [B, {cfg.n_sensors * cfg.d_f}], got {sm.shape}")
    br = mlp_forward(params.branch, sm, cfg.activation)            # [B, p]
    tr = mlp_forward(params.trunk, Tensor(np.asarray(query_coords, dtype=np.float64)),
                     cfg.activation)                               # [M, p]
    out = ad.matmul(br, ad.transpose(tr))                          # [B, M]
    b, m = out.shape
    return ad.add(ad.reshape(out, (b * m,)), params.bias)


def toy_deeponet_config() -> DeepOnetConfig:
    return DeepOnetConfig(n_sensors=5, d_coord_out=2, p=6,
                          branch_hidden=(7,), trunk_hidden=(7,))
