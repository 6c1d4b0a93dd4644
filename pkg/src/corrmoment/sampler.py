"""Random symmetric matrices with metric-decaying correlations.

FilteredGaussian convolves white noise on an enlarged lattice with the filter
a(dx, dy) = (1 + |dx| + |dy|)^-s, so the covariance is a Gram form and always
positive semidefinite. WignerIID is the uncorrelated GOE-normalized baseline.
"""
from __future__ import annotations

import hashlib
import json
import math
import struct
from functools import lru_cache
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import correlate, fftconvolve

from .kernel import CorrelationParams

MAGIC = b"CMH1"
HEADER = struct.Struct("<4sIQ")  # magic, N, sample index: 16 bytes


class Construction(str, Enum):
    FILTERED = "FilteredGaussian"
    WIGNER = "WignerIID"

    @classmethod
    def parse(cls, value) -> "Construction":
        if isinstance(value, Construction):
            return value
        key = str(value).strip().lower()
        aliases = {"filteredgaussian": cls.FILTERED, "filtered": cls.FILTERED,
                   "wigneriid": cls.WIGNER, "wigner": cls.WIGNER}
        if key not in aliases:
            raise ValueError(f"unknown construction {value!r}")
        return aliases[key]


def default_halfwidth(n: int) -> int:
    return min(n, 32)


@dataclass(frozen=True)
class EnsembleSpec:
    params: CorrelationParams
    construction: Construction = Construction.FILTERED
    filter_halfwidth: int | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "construction", Construction.parse(self.construction))
        if self.filter_halfwidth is None:
            object.__setattr__(self, "filter_halfwidth", default_halfwidth(self.params.n))
        if self.construction is Construction.FILTERED and self.filter_halfwidth < 1:
            raise ValueError("filter_halfwidth must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n(self) -> int:
        return self.params.n

    def with_n(self, n: int, halfwidth: int | None = None) -> "EnsembleSpec":
        return EnsembleSpec(self.params.with_n(n), self.construction, halfwidth, self.seed)

    def to_dict(self) -> dict:
        return {"n": self.params.n, "s": self.params.s, "c_kappa": self.params.c_kappa,
                "construction": self.construction.value,
                "filter_halfwidth": self.filter_halfwidth, "seed": int(self.seed)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        params = CorrelationParams(int(d["n"]), float(d.get("s", 3.0)), float(d.get("c_kappa", 1.0)))
        return cls(params, d.get("construction", "FilteredGaussian"),
                   d.get("filter_halfwidth"), int(d.get("seed", 0)))

    @classmethod
    def from_json(cls, text: str) -> "EnsembleSpec":
        return cls.from_dict(json.loads(text))

    def spec_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:12]


@dataclass
class MatrixSample:
    h: np.ndarray
    spec: EnsembleSpec
    sample_index: int

    @property
    def w(self) -> np.ndarray:
        return self.h * math.sqrt(self.h.shape[0])


def build_filter(params: CorrelationParams, halfwidth: int) -> np.ndarray:
    """a[dx + h, dy + h] = (1 + |dx| + |dy|)^-s, scaled to unit sum of squares."""
    if halfwidth < 1:
        raise ValueError("halfwidth must be >= 1")
    r = np.abs(np.arange(-halfwidth, halfwidth + 1))
    a = (1.0 + r[:, None] + r[None, :]) ** (-params.s)
    return a / math.sqrt(float(np.sum(a * a)))


def sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    """Counter-based stream: the sample index occupies the top word of the Philox counter,
    so streams for different samples never overlap."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, int(sample_index)]))


def sample_matrix(spec: EnsembleSpec, sample_index: int) -> MatrixSample:
    n = spec.n
    if n < 2:
        raise ValueError("matrix size must be >= 2")
    rng = sample_rng(spec.seed, sample_index)
    if spec.construction is Construction.FILTERED:
        h = spec.filter_halfwidth
        a = build_filter(spec.params, h)
        g = rng.standard_normal((n + 2 * h, n + 2 * h))
        f = fftconvolve(g, a, mode="valid")
    else:
        f = rng.standard_normal((n, n))
    w = (f + f.T) / math.sqrt(2.0)
    return MatrixSample(w / math.sqrt(n), spec, sample_index)


def write_sample(path, sample: MatrixSample) -> None:
    h = np.ascontiguousarray(sample.h, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, h.shape[0], int(sample.sample_index)))
        fh.write(h.tobytes(order="C"))


def read_sample(path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        magic, n, index = HEADER.unpack(fh.read(HEADER.size))
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n * n:
        raise ValueError(f"{path}: expected {n * n} entries, found {data.size}")
    return data.reshape(n, n).copy(), index


def filter_autocorrelation(a: np.ndarray) -> np.ndarray:
    """c[u + 2h, v + 2h] = Σ_γ a(γ) a(γ + (u, v))."""
    return correlate(a, a, mode="full", method="direct")


@lru_cache(maxsize=16)
def _autocorrelation(s: float, halfwidth: int) -> np.ndarray:
    c = filter_autocorrelation(build_filter(CorrelationParams(2, s), halfwidth))
    c.setflags(write=False)
    return c


def _lag_value(c: np.ndarray, du, dv):
    r = (c.shape[0] - 1) // 2
    du = np.asarray(du)
    dv = np.asarray(dv)
    inside = (np.abs(du) <= r) & (np.abs(dv) <= r)
    out = np.where(inside, c[np.clip(du + r, 0, 2 * r), np.clip(dv + r, 0, 2 * r)], 0.0)
    return out


def exact_covariance(spec: EnsembleSpec, alpha, beta) -> float:
    """Cov(W_alpha, W_beta) of the exact ensemble; 1-based index pairs."""
    (a1, a2), (b1, b2) = alpha, beta
    if spec.construction is Construction.WIGNER:
        return float((a1, a2) == (b1, b2)) + float((a1, a2) == (b2, b1))
    c = _autocorrelation(spec.params.s, spec.filter_halfwidth)
    return float(_lag_value(c, a1 - b1, a2 - b2) + _lag_value(c, a1 - b2, a2 - b1))


def covariance_tensor(spec: EnsembleSpec) -> np.ndarray:
    """cov[a, b, c, d] = Cov(W_ab, W_cd) over all 0-based indices."""
    n = spec.n
    i = np.arange(n)
    A, B, C, D = np.meshgrid(i, i, i, i, indexing="ij")
    if spec.construction is Construction.WIGNER:
        return ((A == C) & (B == D)).astype(float) + ((A == D) & (B == C)).astype(float)
    c = _autocorrelation(spec.params.s, spec.filter_halfwidth)
    return _lag_value(c, A - C, B - D) + _lag_value(c, A - D, B - C)


@dataclass
class CovarianceEstimate:
    value: float
    stderr: float


def empirical_covariance(spec: EnsembleSpec, pairs, num_samples: int) -> list[CovarianceEstimate]:
    if not pairs:
        raise ValueError("empty pair list")
    if num_samples < 100:
        raise ValueError("num_samples must be >= 100")
    idx = np.array([[a[0] - 1, a[1] - 1, b[0] - 1, b[1] - 1] for a, b in pairs])
    xs = np.empty((num_samples, len(pairs)))
    ys = np.empty((num_samples, len(pairs)))
    for t in range(num_samples):
        w = sample_matrix(spec, t).w
        xs[t] = w[idx[:, 0], idx[:, 1]]
        ys[t] = w[idx[:, 2], idx[:, 3]]
    out = []
    for j in range(len(pairs)):
        x, y = xs[:, j], ys[:, j]
        prod = (x - x.mean()) * (y - y.mean())
        est = prod.sum() / (num_samples - 1)
        se = prod.std(ddof=1) / math.sqrt(num_samples)
        out.append(CovarianceEstimate(float(est), float(se)))
    return out
