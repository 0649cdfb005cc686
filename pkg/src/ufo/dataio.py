"""Binary dataset files (magic "UFOD") and their plain-text manifests.

Layout, all little-endian:

    magic "UFOD" | u16 version | u8 benchmark id | u32 sample count
    per sample:
        u8 scenario tag (1=s, 2=delta, 3=lambda, 4=grf)
        u8 parameter count, then that many f64 scenario parameters
        u8 input-grid rank, then u32 dims (0 rank = scattered inputs)
        four arrays (input_coords, input_values, query_coords, targets),
        each as u8 ndim | u32 shape... | f64 data (C order)

Targets are stored in their grid shape, which is how query_dims round-trips.
Writing is deterministic: the same Dataset serializes to identical bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .benchmarks import BENCHMARK_IDS, Dataset, FunctionSample, Scenario

__all__ = ["write_dataset", "read_dataset", "write_manifest"]

MAGIC = b"UFOD"
VERSION = 1

_TAGS = {"s": 1, "delta": 2, "lambda": 3, "grf": 4}
_KINDS = {v: k for k, v in _TAGS.items()}
_ID_TO_BENCH = {v: k for k, v in BENCHMARK_IDS.items()}


def _pack_array(out: list[bytes], arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    out.append(struct.pack("<B", arr.ndim))
    out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
    out.append(arr.tobytes())


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        vals = struct.unpack_from(fmt, self.blob, self.pos)
        self.pos += size
        return vals

    def array(self) -> np.ndarray:
        (ndim,) = self.take("<B")
        shape = self.take(f"<{ndim}I") if ndim else ()
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(self.blob, dtype="<f8", count=n, offset=self.pos).copy()
        self.pos += 8 * n
        return arr.reshape(shape)


def write_dataset(dataset: Dataset, path: str | Path) -> Path:
    path = Path(path)
    parts: list[bytes] = [MAGIC, struct.pack("<H", VERSION),
                          struct.pack("<B", BENCHMARK_IDS[dataset.benchmark]),
                          struct.pack("<I", len(dataset.samples))]
    for s in dataset.samples:
        parts.append(struct.pack("<B", _TAGS[s.scenario.kind]))
        parts.append(struct.pack("<B", len(s.scenario.params)))
        parts.append(struct.pack(f"<{len(s.scenario.params)}d", *s.scenario.params))
        in_dims = s.input_dims or ()
        parts.append(struct.pack("<B", len(in_dims)))
        if in_dims:
            parts.append(struct.pack(f"<{len(in_dims)}I", *in_dims))
        _pack_array(parts, s.input_coords)
        _pack_array(parts, s.input_values)
        _pack_array(parts, s.query_coords)
        _pack_array(parts, s.targets.reshape(s.query_dims))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(parts))
    return path


def read_dataset(path: str | Path) -> Dataset:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: not a UFOD dataset file")
    r = _Reader(blob)
    r.pos = 4
    (version,) = r.take("<H")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported UFOD version {version}")
    (bench_id,) = r.take("<B")
    (count,) = r.take("<I")
    benchmark = _ID_TO_BENCH[bench_id]

    samples = []
    for _ in range(count):
        (tag,) = r.take("<B")
        (n_params,) = r.take("<B")
        params = r.take(f"<{n_params}d") if n_params else ()
        (in_rank,) = r.take("<B")
        input_dims = tuple(r.take(f"<{in_rank}I")) if in_rank else None
        input_coords = r.array()
        input_values = r.array()
        query_coords = r.array()
        targets = r.array()
        samples.append(FunctionSample(
            input_coords=input_coords,
            input_values=input_values,
            query_coords=query_coords,
            targets=targets.ravel(),
            scenario=Scenario(_KINDS[tag], tuple(params)),
            query_dims=targets.shape,
            input_dims=input_dims,
        ))
    return Dataset(benchmark=benchmark, samples=samples, seed=-1)


def write_manifest(dataset: Dataset, data_path: str | Path) -> Path:
    """Sidecar text manifest: header plus one scenario line per sample."""
    data_path = Path(data_path)
    lines = [
        "format: UFOD v1",
        f"benchmark: {dataset.benchmark}",
        f"samples: {len(dataset.samples)}",
        f"seed: {dataset.seed}",
    ]
    if dataset.spec is not None:
        lines.append(f"split: {dataset.spec.split}")
    for i, s in enumerate(dataset.samples):
        lines.append(f"sample {i:04d}: {s.scenario.describe()}")
    path = data_path.with_suffix(data_path.suffix + ".manifest.txt")
    path.write_text("\n".join(lines) + "\n")
    return path
