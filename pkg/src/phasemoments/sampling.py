"""Synthetic measurement records and empirical moments.

Draws are inverse-CDF with linear interpolation between grid nodes, driven by
a counter-based generator: stream ``i`` of a seed is statistically independent
of stream ``j``, so partitioned sampling is reproducible no matter how the
work is split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .hilbert import GridDensity

__all__ = ["SampleSet", "MomentSequence", "sample_outcomes", "empirical_moments",
           "EMPIRICAL_ORDER_CEILING"]

EMPIRICAL_ORDER_CEILING = 12  # documented statistical reliability ceiling


@dataclass(frozen=True)
class SampleSet:
    """Measurement outcomes plus the provenance needed to reproduce them."""

    values: np.ndarray
    seed: int
    source: str
    stream: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size < 1:
            raise ValueError("sample set must be nonempty")
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return self.values.size

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# seed={self.seed} stream={self.stream} source={self.source}\n")
            fh.write("outcome\n")
            for x in self.values:
                fh.write(repr(float(x)) + "\n")


def _generator(seed: int, stream: int) -> np.random.Generator:
    bitgen = np.random.Philox(key=np.uint64(seed))
    if stream:
        bitgen = bitgen.jumped(stream)
    return np.random.Generator(bitgen)


def sample_outcomes(density: GridDensity, count: int, seed: int,
                    stream: int = 0, source: str = "") -> SampleSet:
    """Draw ``count`` i.i.d. outcomes from a grid density, reproducibly."""
    if count < 1:
        raise ValueError("count must be at least 1")
    grid = density.grid
    mass = grid.mass(density.values)
    if abs(mass - 1.0) > 1e-6:
        raise ValueError(f"density mass {mass} deviates from 1 beyond 1e-6")
    cdf = np.concatenate(([0.0], np.cumsum((density.values[1:] + density.values[:-1]))))
    cdf *= 0.5 * grid.dx
    cdf /= cdf[-1]
    u = _generator(seed, stream).random(count)
    values = np.interp(u, cdf, grid.points)
    return SampleSet(values=values, seed=seed, stream=stream, source=source)


@dataclass(frozen=True)
class MomentSequence:
    """Moments m_0..m_K with optional standard errors."""

    m: np.ndarray
    se: np.ndarray | None = None
    order_warning: bool = False

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.size < 1 or abs(m[0] - 1.0) > 1e-12:
            raise ValueError("moment sequence must start with m_0 = 1")
        object.__setattr__(self, "m", m)
        if self.se is not None:
            se = np.asarray(self.se, dtype=float)
            if se.shape != m.shape or se.min() < 0:
                raise ValueError("standard errors must be nonnegative and match m")
            object.__setattr__(self, "se", se)

    @property
    def K(self) -> int:
        return self.m.size - 1

    def to_dict(self) -> dict:
        out = {"m": self.m.tolist(), "se": None if self.se is None else self.se.tolist()}
        if self.order_warning:
            out["order_warning"] = True
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "MomentSequence":
        return cls(
            m=np.asarray(data["m"], dtype=float),
            se=None if data.get("se") is None else np.asarray(data["se"], dtype=float),
            order_warning=bool(data.get("order_warning", False)),
        )

    @classmethod
    def from_json(cls, text: str) -> "MomentSequence":
        return cls.from_dict(json.loads(text))

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("k,m,se\n")
            for k in range(self.K + 1):
                se = "" if self.se is None else repr(float(self.se[k]))
                fh.write(f"{k},{float(self.m[k])!r},{se}\n")


def empirical_moments(samples: SampleSet, K: int) -> MomentSequence:
    """m_k = mean(x^k), se_k = sample std of x^k / sqrt(n).

    Orders above EMPIRICAL_ORDER_CEILING are computed but flagged.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    x = samples.values
    n = x.size
    m = np.empty(K + 1)
    se = np.empty(K + 1)
    m[0], se[0] = 1.0, 0.0
    power = np.ones_like(x)
    for k in range(1, K + 1):
        power = power * x
        m[k] = power.mean()
        se[k] = power.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
    return MomentSequence(m=m, se=se, order_warning=K > EMPIRICAL_ORDER_CEILING)
