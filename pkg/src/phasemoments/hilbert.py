"""States, wavefunctions and exact moments in a truncated number basis.

Conventions, fixed once for the whole package: hbar = 1, the quadratures are
Q = (a + a*)/sqrt(2) and P = i(a* - a)/sqrt(2), and the Fourier transform is
psi_hat(p) = (2*pi)**(-1/2) * integral exp(-i*p*q) psi(q) dq, under which the
orthonormal Hermite functions h_n are eigenfunctions with eigenvalue (-i)**n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridResolutionError, TruncationError

__all__ = [
    "Grid",
    "GridFunction",
    "GridDensity",
    "StateVector",
    "GaussianProbe",
    "ChirpedGaussianProbe",
    "FockProbe",
    "default_grid",
    "hermite_functions",
    "hermite_wavefunction",
    "fourier_transform",
    "position_density",
    "momentum_density",
    "exact_moment",
    "probe_moment",
    "probe_density",
    "probe_variance",
    "annihilation_matrix",
    "quadrature_matrix",
    "number_matrix",
    "coherent_state",
    "chirped_gaussian_densities",
    "chirped_gaussian_state",
]

_FT_PHASES = np.array([1.0, -1.0j, -1.0, 1.0j])  # (-i)**n, exact


@dataclass(frozen=True)
class Grid:
    """Uniform real grid x_i = x0 + i*dx, i = 0..n-1.

    ``centered`` grids place x = 0 exactly on a node, which keeps grid
    convolutions alignment-exact.
    """

    x0: float
    dx: float
    n: int

    def __post_init__(self):
        if self.dx <= 0 or self.n < 2:
            raise ValueError("grid needs dx > 0 and at least two points")

    @classmethod
    def centered(cls, half_width: float, n: int) -> "Grid":
        if n % 2:
            raise ValueError("centered grids require an even point count")
        dx = 2.0 * half_width / n
        return cls(x0=-half_width, dx=dx, n=n)

    @property
    def points(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def zero_index(self) -> int:
        i = -self.x0 / self.dx
        k = int(round(i))
        if abs(i - k) > 1e-9 or not 0 <= k < self.n:
            raise GridResolutionError("grid does not contain x = 0 on a node")
        return k

    def mass(self, values: np.ndarray) -> float:
        return float(np.trapezoid(values, dx=self.dx))

    def moment(self, values: np.ndarray, k: int) -> float:
        return float(np.trapezoid(self.points**k * values, dx=self.dx))


def default_grid(dim: int, points: int = 4096) -> Grid:
    """Grid covering Hermite support of ``dim`` levels plus Gaussian tails.

    Half width sqrt(2*dim) + 8 puts the tails below 1e-14 for pure states.
    """
    return Grid.centered(math.sqrt(2.0 * max(dim, 1)) + 8.0, points)


@dataclass(frozen=True)
class GridFunction:
    """Complex-valued function sampled on a uniform grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n,):
            raise ValueError("value array does not match grid")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class GridDensity:
    """Nonnegative density on a uniform grid with unit trapezoid mass."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError("value array does not match grid")
        if v.min() < -1e-12:
            raise ValueError("density has negative values")
        mass = self.grid.mass(v)
        if abs(mass - 1.0) > 1e-9:
            raise ValueError(f"density mass {mass} deviates from 1")
        object.__setattr__(self, "values", v)

    @classmethod
    def normalized(cls, grid: Grid, values: np.ndarray, mass_tol: float = 1e-6) -> "GridDensity":
        """Clip tiny negatives and renormalize; reject if raw mass is off by more
        than ``mass_tol`` (signals a grid that does not resolve the function)."""
        v = np.asarray(values, dtype=float)
        mass = grid.mass(v)
        if not math.isfinite(mass) or abs(mass - 1.0) > mass_tol:
            raise GridResolutionError(
                f"raw mass {mass} deviates from 1 by more than {mass_tol}; "
                "grid too short or too coarse"
            )
        v = np.where(v < 0.0, 0.0, v)
        return cls(grid, v / grid.mass(v))

    def moment(self, k: int) -> float:
        return self.grid.moment(self.values, k)

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def variance(self) -> float:
        m1 = self.moment(1)
        return self.moment(2) - m1 * m1

    def l1_distance(self, other: "GridDensity") -> float:
        if other.grid != self.grid:
            raise ValueError("densities live on different grids")
        return float(np.trapezoid(np.abs(self.values - other.values), dx=self.grid.dx))


@dataclass(frozen=True)
class StateVector:
    """Pure state as number-basis amplitudes c_0..c_{N-1}, unit norm."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if c.size < 1:
            raise ValueError("state needs at least one amplitude")
        nrm = float(np.linalg.norm(c))
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"state norm {nrm} deviates from 1 beyond 1e-12")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def normalized(cls, coeffs) -> "StateVector":
        c = np.asarray(coeffs, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(c)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(c / nrm)

    @classmethod
    def fock(cls, n: int, dim: int | None = None) -> "StateVector":
        dim = n + 1 if dim is None else dim
        if dim <= n:
            raise ValueError("dim must exceed the Fock index")
        c = np.zeros(dim, dtype=complex)
        c[n] = 1.0
        return cls(c)

    @classmethod
    def vacuum(cls, dim: int = 1) -> "StateVector":
        return cls.fock(0, dim)

    @property
    def dim(self) -> int:
        return self.coeffs.size

    def padded(self, dim: int) -> np.ndarray:
        if dim < self.dim:
            raise ValueError("cannot pad to a smaller dimension")
        out = np.zeros(dim, dtype=complex)
        out[: self.dim] = self.coeffs
        return out

    def conjugated(self) -> "StateVector":
        """Complex conjugation in the coordinate representation; since the
        Hermite functions are real this is coefficient-wise conjugation."""
        return StateVector(np.conj(self.coeffs))

    def reflected(self) -> "StateVector":
        """Parity: psi(q) -> psi(-q), i.e. c_n -> (-1)**n c_n."""
        signs = np.where(np.arange(self.dim) % 2, -1.0, 1.0)
        return StateVector(self.coeffs * signs)

    def overlap(self, other: "StateVector") -> complex:
        d = max(self.dim, other.dim)
        return complex(np.vdot(self.padded(d), other.padded(d)))


def annihilation_matrix(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, dim)), k=1).astype(complex)


def quadrature_matrix(dim: int, theta: float = 0.0) -> np.ndarray:
    """Q_theta = (e^{-i theta} a + e^{i theta} a*) / sqrt(2); theta=0 is Q,
    theta=pi/2 is P."""
    a = annihilation_matrix(dim)
    ph = np.exp(-1j * theta)
    return (ph * a + np.conj(ph) * a.conj().T) / math.sqrt(2.0)


def number_matrix(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def hermite_functions(n_levels: int, x: np.ndarray) -> np.ndarray:
    """Orthonormal Hermite functions h_0..h_{n_levels-1} on the points ``x``.

    Upward three-term recurrence on the *normalized* functions; every value
    stays bounded by ~0.8, so there is no overflow to renormalize away even
    for a few hundred levels.
    """
    x = np.asarray(x, dtype=float)
    h = np.empty((n_levels, x.size))
    h[0] = math.pi ** (-0.25) * np.exp(-0.5 * x * x)
    if n_levels > 1:
        h[1] = math.sqrt(2.0) * x * h[0]
    for n in range(1, n_levels - 1):
        h[n + 1] = math.sqrt(2.0 / (n + 1)) * x * h[n] - math.sqrt(n / (n + 1.0)) * h[n - 1]
    return h


def _check_resolution(state_dim: int, grid: Grid):
    p_max = math.sqrt(2.0 * state_dim)
    if grid.dx > math.pi / p_max:
        raise GridResolutionError(
            f"dx = {grid.dx} exceeds pi/p_max = {math.pi / p_max}; grid too coarse"
        )


def hermite_wavefunction(state: StateVector, grid: Grid) -> GridFunction:
    """psi(q) = sum_n c_n h_n(q) on the grid."""
    _check_resolution(state.dim, grid)
    h = hermite_functions(state.dim, grid.points)
    return GridFunction(grid, state.coeffs @ h)


def fourier_transform(state: StateVector) -> StateVector:
    """c_n -> (-i)**n c_n; exactly order four on coefficients."""
    phases = _FT_PHASES[np.arange(state.dim) % 4]
    return StateVector(state.coeffs * phases)


def position_density(state: StateVector, grid: Grid | None = None) -> GridDensity:
    grid = default_grid(state.dim) if grid is None else grid
    psi = hermite_wavefunction(state, grid)
    return GridDensity.normalized(grid, np.abs(psi.values) ** 2, mass_tol=1e-9)


def momentum_density(state: StateVector, grid: Grid | None = None) -> GridDensity:
    return position_density(fourier_transform(state), grid)


def exact_moment(state: StateVector, axis: str, k: int) -> float:
    """<psi| Q^k |psi> (axis "Q") or <psi| P^k |psi> (axis "P").

    Built in a basis enlarged by k levels, so the result is exact up to
    roundoff for any truncated state.
    """
    if axis == "P":
        return exact_moment(fourier_transform(state), "Q", k)
    if axis != "Q":
        raise ValueError("axis must be 'Q' or 'P'")
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    if k == 0:
        return 1.0
    d = state.dim + k
    q = quadrature_matrix(d)
    v = state.padded(d)
    w = v
    for _ in range(k):
        w = q @ w
    return float(np.real(np.vdot(v, w)))


def mean_occupation(state: StateVector) -> float:
    return float(np.sum(np.arange(state.dim) * np.abs(state.coeffs) ** 2))


# --- analytic probes -------------------------------------------------------

@dataclass(frozen=True)
class GaussianProbe:
    """phi_n(x) = (n/pi)**(1/4) exp(-n x^2 / 2); position variance 1/(2n)."""

    n: float

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("Gaussian probe parameter must be positive")


@dataclass(frozen=True)
class ChirpedGaussianProbe:
    """phi_{a,b}(q) = (2a/pi)**(1/4) exp(-(a+ib) q^2), a > 0.

    Position variance 1/(4a); momentum variance (a^2+b^2)/a. The pair (a, b)
    and (a, -b) share both densities while being different states.
    """

    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("chirped Gaussian needs a > 0")


@dataclass(frozen=True)
class FockProbe:
    """Probe given by an explicit number-basis state."""

    state: StateVector


Probe = GaussianProbe | ChirpedGaussianProbe | FockProbe


def _even_gaussian_moment(variance: float, k: int) -> float:
    # E[x^k] for N(0, variance): (k-1)!! sigma^k = 2^(k/2) Gamma((k+1)/2)/sqrt(pi) sigma^k
    if k % 2:
        return 0.0
    return variance ** (k // 2) * 2.0 ** (k // 2) * math.gamma((k + 1) / 2.0) / math.sqrt(math.pi)


def probe_moment(probe: Probe, axis: str, k: int) -> float:
    """k-th moment of the probe's position (axis "Q") or momentum statistics.

    Closed forms for the analytic probes; ladder matrices otherwise, which
    keeps coefficient tables free of quadrature error.
    """
    if axis not in ("Q", "P"):
        raise ValueError("axis must be 'Q' or 'P'")
    if isinstance(probe, GaussianProbe):
        # The Fourier transform of a width-n Gaussian is the width-1/n one.
        n = probe.n if axis == "Q" else 1.0 / probe.n
        if k % 2:
            return 0.0
        return n ** (-k / 2.0) * math.gamma((k + 1) / 2.0) / math.sqrt(math.pi)
    if isinstance(probe, ChirpedGaussianProbe):
        var = 1.0 / (4.0 * probe.a) if axis == "Q" else (probe.a**2 + probe.b**2) / probe.a
        return _even_gaussian_moment(var, k)
    if isinstance(probe, FockProbe):
        return exact_moment(probe.state, axis, k)
    raise TypeError(f"unknown probe type {type(probe)!r}")


def probe_variance(probe: Probe, axis: str = "Q") -> float:
    m1 = probe_moment(probe, axis, 1)
    return probe_moment(probe, axis, 2) - m1 * m1


def probe_density(probe: Probe, axis: str):
    """Vectorized callable x -> probability density of the probe statistics."""
    if axis not in ("Q", "P"):
        raise ValueError("axis must be 'Q' or 'P'")
    if isinstance(probe, GaussianProbe):
        n = probe.n if axis == "Q" else 1.0 / probe.n
        return lambda x: np.sqrt(n / math.pi) * np.exp(-n * np.asarray(x, dtype=float) ** 2)
    if isinstance(probe, ChirpedGaussianProbe):
        a, b = probe.a, probe.b
        if axis == "Q":
            return lambda x: np.sqrt(2.0 * a / math.pi) * np.exp(-2.0 * a * np.asarray(x, dtype=float) ** 2)
        c = a / (2.0 * (a**2 + b**2))
        return lambda x: np.sqrt(c / math.pi) * np.exp(-c * np.asarray(x, dtype=float) ** 2)
    if isinstance(probe, FockProbe):
        st = probe.state if axis == "Q" else fourier_transform(probe.state)

        def _dens(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            h = hermite_functions(st.dim, x)
            vals = np.abs(st.coeffs @ h) ** 2
            return vals if vals.size > 1 else float(vals[0])

        return _dens
    raise TypeError(f"unknown probe type {type(probe)!r}")


# --- special state families ------------------------------------------------

def coherent_state(z: complex, dim: int, tail_tol: float = 1e-8) -> StateVector:
    """Coherent state |z> truncated to ``dim`` levels and renormalized."""
    if z == 0:
        return StateVector.fock(0, dim)
    amp = np.empty(dim, dtype=complex)
    amp[0] = math.exp(-0.5 * abs(z) ** 2)
    for n in range(1, dim):
        amp[n] = amp[n - 1] * z / math.sqrt(n)
    deficit = 1.0 - float(np.sum(np.abs(amp) ** 2))
    if deficit > tail_tol:
        raise TruncationError(f"coherent tail mass {deficit} above {tail_tol}; increase dim")
    return StateVector.normalized(amp)


def chirped_gaussian_densities(a: float, b: float, grid: Grid) -> tuple[GridDensity, GridDensity]:
    """Closed-form position/momentum densities of the chirped Gaussian.

    Both densities depend on b only through a^2 + b^2, so (a, b) and (a, -b)
    give the identical pair.
    """
    probe = ChirpedGaussianProbe(a, b)
    pos = probe_density(probe, "Q")(grid.points)
    mom = probe_density(probe, "P")(grid.points)
    return (
        GridDensity.normalized(grid, pos, mass_tol=1e-9),
        GridDensity.normalized(grid, mom, mass_tol=1e-9),
    )


def chirped_gaussian_state(a: float, b: float, dim: int, grid: Grid | None = None,
                           tail_tol: float = 1e-9) -> StateVector:
    """Expand the chirped Gaussian in the number basis by quadrature."""
    if a <= 0:
        raise ValueError("chirped Gaussian needs a > 0")
    if grid is None:
        grid = default_grid(dim, points=8192)
    x = grid.points
    phi = (2.0 * a / math.pi) ** 0.25 * np.exp(-(a + 1j * b) * x * x)
    h = hermite_functions(dim, x)
    coeffs = (h * phi).sum(axis=1) * grid.dx
    deficit = 1.0 - float(np.sum(np.abs(coeffs) ** 2))
    if deficit > tail_tol:
        raise TruncationError(f"expansion tail mass {deficit} above {tail_tol}; increase dim")
    return StateVector.normalized(coeffs)
