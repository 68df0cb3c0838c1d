"""The three joint measurement schemes as covariant phase-space observables.

Each convolution model is described two ways that are kept mutually
consistent: a pair of detector kernels (f, g) such that the measured marginal
densities are f * rho_Q and g * rho_P, and a coefficient table s_{ki} turning
exact moments into measured moments,

    measured_k = sum_i s[k][i] * exact_{k-i},    s[k][0] = 1.

The kernels are the laws of the actual readout noise variables, so their raw
moments coincide with the table entries row by row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.signal import fftconvolve

from .errors import GridResolutionError, UnsupportedModelError
from .hilbert import (
    Grid,
    GridDensity,
    Probe,
    StateVector,
    exact_moment,
    mean_occupation,
    momentum_density,
    position_density,
    probe_density,
    probe_moment,
    probe_variance,
    quadrature_matrix,
)

__all__ = [
    "GeneratingOperator",
    "SequentialVN",
    "ArthursKelly",
    "EightPort",
    "BalancedHomodyne",
    "Model",
    "CoefficientTable",
    "coefficient_table",
    "detector_kernels",
    "smear_density",
    "measured_marginal_density",
    "measured_moment",
    "measured_moments",
    "geometric_distance",
    "intrinsic_noise_vn",
    "homodyne_moment12",
    "uncertainty_product",
    "MAX_TABLE_ORDER",
]

MAX_TABLE_ORDER = 20  # binomials stay exact integers well beyond this; moment
                      # recovery is numerically meaningless much earlier


@dataclass(frozen=True)
class GeneratingOperator:
    """Positive trace-one operator in spectral form {(t_i, eta_i)}."""

    weights: tuple
    vectors: tuple

    def __post_init__(self):
        w = tuple(float(t) for t in self.weights)
        v = tuple(self.vectors)
        if len(w) != len(v) or not w:
            raise ValueError("weights and vectors must pair up")
        if min(w) <= 0:
            raise ValueError("spectral weights must be positive")
        if abs(sum(w) - 1.0) > 1e-10:
            raise ValueError("spectral weights must sum to 1")
        d = max(s.dim for s in v)
        for i in range(len(v)):
            for j in range(i + 1, len(v)):
                ov = abs(np.vdot(v[i].padded(d), v[j].padded(d)))
                if ov > 1e-10:
                    raise ValueError("spectral vectors must be orthonormal")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def pure(cls, state: StateVector) -> "GeneratingOperator":
        return cls((1.0,), (state,))

    @classmethod
    def vacuum(cls) -> "GeneratingOperator":
        return cls.pure(StateVector.vacuum())

    @classmethod
    def mixture(cls, weights, states) -> "GeneratingOperator":
        return cls(tuple(weights), tuple(states))

    @property
    def dim(self) -> int:
        return max(s.dim for s in self.vectors)

    def conjugated(self) -> "GeneratingOperator":
        """Coordinate-representation conjugation, coefficient-wise in the
        (real) Hermite basis."""
        return GeneratingOperator(self.weights, tuple(s.conjugated() for s in self.vectors))

    def moment(self, axis: str, k: int) -> float:
        """Tr[T Q^k] resp. Tr[T P^k]."""
        return sum(t * exact_moment(s, axis, k) for t, s in zip(self.weights, self.vectors))


@dataclass(frozen=True)
class SequentialVN:
    """Standard position coupling (strength lam, probe phi) followed by a
    sharp momentum measurement."""

    lam: float
    probe: Probe

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("coupling constant must be positive")


@dataclass(frozen=True)
class ArthursKelly:
    """Simultaneous position/momentum coupling to two probes."""

    lam: float
    mu: float
    probe1: Probe
    probe2: Probe

    def __post_init__(self):
        if self.lam <= 0 or self.mu <= 0:
            raise ValueError("coupling constants must be positive")


@dataclass(frozen=True)
class EightPort:
    """High-amplitude limit of the eight-port detector with parameter state
    sigma; the phase shift is fixed at pi/2."""

    sigma: GeneratingOperator


@dataclass(frozen=True)
class BalancedHomodyne:
    """Single-quadrature detection against a coherent reference r e^{i theta}."""

    r: float
    theta: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("reference amplitude must be positive")
        if not 0.0 <= self.theta < 2.0 * math.pi:
            raise ValueError("theta must lie in [0, 2*pi)")


Model = SequentialVN | ArthursKelly | EightPort | BalancedHomodyne


@dataclass(frozen=True)
class CoefficientTable:
    """Lower-triangular moment coefficients for both marginals."""

    k_max: int
    sq: np.ndarray
    sp: np.ndarray

    def __post_init__(self):
        for name, s in (("sq", self.sq), ("sp", self.sp)):
            s = np.asarray(s, dtype=float)
            if s.shape != (self.k_max + 1, self.k_max + 1):
                raise ValueError(f"{name} has wrong shape")
            if not np.allclose(s[:, 0], 1.0, rtol=0, atol=1e-12):
                raise ValueError("s[k][0] must equal 1 for every k")
            object.__setattr__(self, name, s)

    @classmethod
    def identity(cls, k_max: int) -> "CoefficientTable":
        s = np.zeros((k_max + 1, k_max + 1))
        s[:, 0] = 1.0
        return cls(k_max, s, s.copy())

    def coefficients(self, axis: str) -> np.ndarray:
        if axis == "Q":
            return self.sq
        if axis == "P":
            return self.sp
        raise ValueError("axis must be 'Q' or 'P'")


def coefficient_table(model: Model, k_max: int) -> CoefficientTable:
    """Coefficients s[k][i] of the measured-moment polynomials, exact binomials."""
    if k_max < 0 or k_max > MAX_TABLE_ORDER:
        raise ValueError(f"k_max must lie in 0..{MAX_TABLE_ORDER}")
    if isinstance(model, BalancedHomodyne):
        raise UnsupportedModelError(
            "balanced homodyne moments beyond k=2 have no closed table; "
            "use homodyne_moment12"
        )
    sq = np.zeros((k_max + 1, k_max + 1))
    sp = np.zeros((k_max + 1, k_max + 1))
    if isinstance(model, SequentialVN):
        q = [probe_moment(model.probe, "Q", i) for i in range(k_max + 1)]
        p = [probe_moment(model.probe, "P", i) for i in range(k_max + 1)]
        for k in range(k_max + 1):
            for i in range(k + 1):
                c = math.comb(k, i)
                sq[k, i] = c * model.lam ** (-i) * q[i]
                sp[k, i] = c * model.lam**i * p[i]
    elif isinstance(model, ArthursKelly):
        q1 = [probe_moment(model.probe1, "Q", i) for i in range(k_max + 1)]
        q2 = [probe_moment(model.probe2, "Q", i) for i in range(k_max + 1)]
        p1 = [probe_moment(model.probe1, "P", i) for i in range(k_max + 1)]
        p2 = [probe_moment(model.probe2, "P", i) for i in range(k_max + 1)]
        for k in range(k_max + 1):
            for n in range(k + 1):
                aq = sum(
                    math.comb(n, i)
                    * model.lam ** (-(n - i))
                    * (-model.mu) ** i
                    * q1[n - i]
                    * q2[i]
                    for i in range(n + 1)
                )
                ap = sum(
                    math.comb(n, i)
                    * model.mu ** (-(n - i))
                    * (-model.lam) ** i
                    * p2[n - i]
                    * p1[i]
                    for i in range(n + 1)
                )
                sq[k, n] = math.comb(k, n) * aq
                sp[k, n] = math.comb(k, n) * ap
    elif isinstance(model, EightPort):
        tq = [model.sigma.moment("Q", i) for i in range(k_max + 1)]
        tp = [model.sigma.moment("P", i) for i in range(k_max + 1)]
        for k in range(k_max + 1):
            for i in range(k + 1):
                c = math.comb(k, i) * (-1.0) ** i
                sq[k, i] = c * tq[i]
                sp[k, i] = c * tp[i]
    else:
        raise TypeError(f"unknown model {type(model)!r}")
    return CoefficientTable(k_max, sq, sp)


def _scaled_density(dens, scale: float):
    """Law of scale*X for X ~ dens: x -> dens(x/scale)/|scale|."""
    s = float(scale)
    return lambda x: dens(np.asarray(x, dtype=float) / s) / abs(s)


def _kernel_from_callable(fn, grid: Grid) -> GridDensity:
    return GridDensity.normalized(grid, fn(grid.points), mass_tol=1e-6)


def _convolved_kernel(fn1, fn2, grid: Grid) -> GridDensity:
    v1 = fn1(grid.points)
    v2 = fn2(grid.points)
    full = fftconvolve(v1, v2, mode="full") * grid.dx
    k0 = grid.zero_index
    return GridDensity.normalized(grid, full[k0 : k0 + grid.n], mass_tol=1e-6)


def detector_kernels(model: Model, grid: Grid) -> tuple[GridDensity, GridDensity]:
    """Smearing kernels (f, g): measured marginals are f * rho_Q and g * rho_P.

    They are the outcome-noise laws of each scheme, so their raw moments match
    the coefficient table exactly (for the symmetric probes used throughout,
    this coincides with the mirrored closed forms).
    """
    if isinstance(model, SequentialVN):
        # position readout noise Q0/lam, momentum kick lam*P0
        f = _scaled_density(probe_density(model.probe, "Q"), 1.0 / model.lam)
        g = _scaled_density(probe_density(model.probe, "P"), model.lam)
        return _kernel_from_callable(f, grid), _kernel_from_callable(g, grid)
    if isinstance(model, ArthursKelly):
        # noise Q1/lam - mu*Q2 on the first marginal, P2/mu - lam*P1 on the second
        f1 = _scaled_density(probe_density(model.probe1, "Q"), 1.0 / model.lam)
        f2 = _scaled_density(probe_density(model.probe2, "Q"), -model.mu)
        g1 = _scaled_density(probe_density(model.probe2, "P"), 1.0 / model.mu)
        g2 = _scaled_density(probe_density(model.probe1, "P"), -model.lam)
        return _convolved_kernel(f1, f2, grid), _convolved_kernel(g1, g2, grid)
    if isinstance(model, EightPort):
        fvals = np.zeros(grid.n)
        gvals = np.zeros(grid.n)
        for t, eta in zip(model.sigma.weights, model.sigma.vectors):
            fvals += t * position_density(eta.reflected(), grid).values
            gvals += t * momentum_density(eta.reflected(), grid).values
        return (
            GridDensity.normalized(grid, fvals, mass_tol=1e-6),
            GridDensity.normalized(grid, gvals, mass_tol=1e-6),
        )
    if isinstance(model, BalancedHomodyne):
        raise UnsupportedModelError("balanced homodyne is not a convolution model")
    raise TypeError(f"unknown model {type(model)!r}")


def smear_density(kernel: GridDensity, density: GridDensity,
                  edge_tol: float = 1e-8) -> GridDensity:
    """Linear (non-circular) convolution kernel * density on the shared grid."""
    if kernel.grid != density.grid:
        raise ValueError("kernel and density must share a grid")
    grid = density.grid
    full = fftconvolve(density.values, kernel.values, mode="full") * grid.dx
    k0 = grid.zero_index
    vals = full[k0 : k0 + grid.n]
    edge_mass = (vals[:8].sum() + vals[-8:].sum()) * grid.dx
    if edge_mass > edge_tol:
        raise GridResolutionError(
            f"tail mass {edge_mass} at grid edge exceeds {edge_tol}; widen the grid"
        )
    return GridDensity.normalized(grid, vals, mass_tol=1e-6)


def measured_marginal_density(model: Model, state: StateVector, axis: str,
                              grid: Grid) -> GridDensity:
    """Exact outcome density of the simulated experiment on one marginal."""
    f, g = detector_kernels(model, grid)
    if axis == "Q":
        return smear_density(f, position_density(state, grid))
    if axis == "P":
        return smear_density(g, momentum_density(state, grid))
    raise ValueError("axis must be 'Q' or 'P'")


def measured_moment(model: Model, state: StateVector, axis: str, k: int,
                    table: CoefficientTable | None = None) -> float:
    """k-th moment of the measured marginal, via the coefficient table."""
    if table is None:
        table = coefficient_table(model, k)
    s = table.coefficients(axis)
    if k > table.k_max:
        raise ValueError("k exceeds the table order")
    return float(sum(s[k, i] * exact_moment(state, axis, k - i) for i in range(k + 1)))


def measured_moments(model: Model, state: StateVector, axis: str, k_max: int) -> np.ndarray:
    table = coefficient_table(model, k_max)
    return np.array(
        [measured_moment(model, state, axis, k, table) for k in range(k_max + 1)]
    )


def _absolute_mean(dens) -> float:
    integrand = lambda x: x * (float(dens(x)) + float(dens(-x)))
    val, _ = quad(integrand, 0.0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def geometric_distance(model: Model, axis: str) -> float:
    """Distance between a sequential-scheme marginal and the sharp observable.

    axis "Q": (1/lam) * int |x| |phi(x)|^2 dx; axis "P": lam * int |x|
    |phi_hat(x)|^2 dx. Quadrature on the probe densities.
    """
    if not isinstance(model, SequentialVN):
        raise UnsupportedModelError("geometric distance is implemented for the sequential scheme")
    if axis == "Q":
        return _absolute_mean(probe_density(model.probe, "Q")) / model.lam
    if axis == "P":
        return model.lam * _absolute_mean(probe_density(model.probe, "P"))
    raise ValueError("axis must be 'Q' or 'P'")


def intrinsic_noise_vn(model: SequentialVN) -> float:
    """Scalar intrinsic noise Var(Q0, phi) / lam^2 of the position readout.

    Equals measured variance minus true variance for every signal state.
    """
    if not isinstance(model, SequentialVN):
        raise UnsupportedModelError("intrinsic noise in this closed form is sequential-only")
    return probe_variance(model.probe, "Q") / model.lam**2


def homodyne_moment12(state: StateVector, r: float, theta: float) -> tuple[float, float]:
    """First and second moment of balanced homodyne detection at finite
    reference amplitude r: (<Q_theta>, <Q_theta^2> + r^-2 <N> / 2)."""
    if r <= 0:
        raise ValueError("reference amplitude must be positive")
    d = state.dim + 2
    q = quadrature_matrix(d, theta)
    v = state.padded(d)
    qv = q @ v
    m1 = float(np.real(np.vdot(v, qv)))
    m2 = float(np.real(np.vdot(qv, qv))) + 0.5 * r ** (-2) * mean_occupation(state)
    return m1, m2


def uncertainty_product(state: StateVector, r: float) -> tuple[float, bool]:
    """Product of the homodyne-read variances at theta = 0 and pi/2.

    (Var Q + r^-2 <N>/2)(Var P + r^-2 <N>/2); the bound flag checks >= 1/4,
    which holds for every state and amplitude.
    """
    if r <= 0:
        raise ValueError("reference amplitude must be positive")
    noise = 0.5 * r ** (-2) * mean_occupation(state)
    var_q = exact_moment(state, "Q", 2) - exact_moment(state, "Q", 1) ** 2
    var_p = exact_moment(state, "P", 2) - exact_moment(state, "P", 1) ** 2
    product = (var_q + noise) * (var_p + noise)
    return product, product >= 0.25 - 1e-12
