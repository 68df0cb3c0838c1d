"""Husimi Q function and its radial-derivative matrix-element inversion.

This is the full-state alternative the moment method avoids: with a vacuum
parameter state the joint outcome distribution is the Husimi function
Q_rho(z) = <z|rho|z>/pi, and number-basis matrix elements follow from radial
derivatives of angular Fourier coefficients at the origin. High-order
derivatives at 0 are estimated by parity-constrained polynomial least squares
on r in [0, r_fit]; finite differences are hopeless at these orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.special import gammainc

from .errors import GridResolutionError, TruncationError, UnreliableDerivativeError
from .hilbert import StateVector

__all__ = [
    "DensityMatrix",
    "HusimiQ",
    "husimi_q",
    "angular_coefficient",
    "reconstruct_element",
    "reconstruct_elements",
    "DERIVATIVE_CEILING",
]

DERIVATIVE_CEILING = 10


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state in the number basis; Hermitian, PSD, unit trace."""

    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if np.abs(rho - rho.conj().T).max() > 1e-12:
            raise ValueError("density matrix must be Hermitian")
        eigs = np.linalg.eigvalsh(rho)
        if eigs.min() < -1e-10:
            raise ValueError(f"density matrix not PSD (min eig {eigs.min()})")
        tr = float(np.real(np.trace(rho)))
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"trace {tr} deviates from 1")
        object.__setattr__(self, "entries", rho)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        c = state.coeffs
        return cls(np.outer(c, c.conj()))

    @classmethod
    def from_mixture(cls, weights, states) -> "DensityMatrix":
        d = max(s.dim for s in states)
        rho = np.zeros((d, d), dtype=complex)
        for w, s in zip(weights, states):
            c = s.padded(d)
            rho += w * np.outer(c, c.conj())
        return cls(rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def conjugated(self) -> "DensityMatrix":
        return DensityMatrix(self.entries.conj())

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "real": np.real(self.entries).tolist(),
            "imag": np.imag(self.entries).tolist(),
        }


@dataclass(frozen=True)
class HusimiQ:
    """Husimi function sampled on a polar grid (r rows, theta columns)."""

    r: np.ndarray
    theta: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        th = np.asarray(self.theta, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (r.size, th.size):
            raise ValueError("value array does not match the polar grid")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "values", v)

    @property
    def mass(self) -> float:
        # rectangle rule in theta (exact for periodic data), Simpson in r
        dth = 2.0 * math.pi / self.theta.size
        radial = simpson(self.values * self.r[:, None], x=self.r, axis=0)
        return float(radial.sum() * dth)


def polar_nodes(r_max: float, r_points: int, theta_points: int) -> tuple[np.ndarray, np.ndarray]:
    r = np.linspace(0.0, r_max, r_points)
    theta = np.arange(theta_points) * (2.0 * math.pi / theta_points)
    return r, theta


def husimi_q(rho: DensityMatrix, r_nodes: np.ndarray, theta_nodes: np.ndarray) -> HusimiQ:
    """Q_rho(r e^{i theta}) = <z|rho|z>/pi on the polar grid.

    The matrix entries are taken as exact. If the top basis level carries
    weight, rho looks like a truncation of a larger state and the coherent
    overlaps must then be negligible beyond the basis: that requires
    r_max^2 well below the dimension.
    """
    r = np.asarray(r_nodes, dtype=float)
    theta = np.asarray(theta_nodes, dtype=float)
    d = rho.dim
    r_max = float(r.max())
    top_weight = float(np.real(rho.entries[d - 1, d - 1]))
    if top_weight > 1e-10 and gammainc(d, r_max**2) >= 1e-12:
        raise TruncationError(
            f"dimension {d} cannot hold coherent states out to r = {r_max}; "
            "embed the state in a larger basis"
        )
    # coherent coefficients c_n(z) = e^{-r^2/2} z^n / sqrt(n!)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, d)))))
    z = r[:, None] * np.exp(1j * theta[None, :])
    flat = z.reshape(-1)
    n = np.arange(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        logz = np.where(flat == 0, 0.0, np.log(np.where(flat == 0, 1.0, flat)))
    coh = np.exp(
        -0.5 * (np.abs(flat) ** 2)[:, None]
        + n[None, :] * logz[:, None]
        - 0.5 * log_fact[None, :]
    )
    coh[flat == 0] = 0.0
    coh[flat == 0, 0] = 1.0
    vals = np.real(np.einsum("pm,mn,pn->p", coh.conj(), rho.entries, coh)) / math.pi
    vals = np.where(vals < 0.0, 0.0, vals)  # roundoff only; PSD guarantees >= 0
    q = HusimiQ(r, theta, vals.reshape(r.size, theta.size))
    if abs(q.mass - 1.0) > 1e-6:
        raise TruncationError(
            f"Husimi mass {q.mass} deviates from 1 beyond 1e-6; enlarge r_max"
        )
    return q


def angular_coefficient(q: HusimiQ, k: int) -> np.ndarray:
    """f(r) = (1/2) e^{r^2} * integral_0^{2pi} e^{-i k theta} Q(r e^{i theta}) dtheta.

    Uniform-theta trapezoid (exact for trigonometric polynomials resolved by
    the grid); returns a complex array on the r nodes.
    """
    n_theta = q.theta.size
    if n_theta < 8 * (abs(k) + 1):
        raise GridResolutionError(
            f"need at least {8 * (abs(k) + 1)} theta nodes for angular index {k}"
        )
    phases = np.exp(-1j * k * q.theta)
    dth = 2.0 * math.pi / n_theta
    integral = (q.values * phases[None, :]).sum(axis=1) * dth
    return 0.5 * np.exp(q.r**2) * integral


def _fit_radial_coefficients(q: HusimiQ, k: int, n_terms: int, r_fit: float,
                             residual_tol: float) -> np.ndarray:
    """Least-squares fit f(r) ~ sum_m beta_m r^(2m+|k|) on r <= r_fit."""
    f = angular_coefficient(q, k)
    mask = q.r <= r_fit
    if mask.sum() < 2 * n_terms:
        raise GridResolutionError("too few radial nodes below r_fit for the fit")
    rs = q.r[mask]
    fs = f[mask]
    kk = abs(k)
    scaled = rs / r_fit
    design = np.column_stack([scaled ** (2 * m + kk) for m in range(n_terms)])
    beta_scaled, *_ = np.linalg.lstsq(design, fs, rcond=None)
    resid = float(np.abs(design @ beta_scaled - fs).max())
    if resid > residual_tol:
        raise UnreliableDerivativeError(
            f"radial fit residual {resid} above {residual_tol}"
        )
    powers = np.array([2 * m + kk for m in range(n_terms)], dtype=float)
    return beta_scaled / r_fit**powers


def reconstruct_element(q: HusimiQ, n: int, k: int, r_fit: float = 1.5,
                        derivative_ceiling: int = DERIVATIVE_CEILING,
                        residual_tol: float = 1e-6) -> complex:
    """Matrix element rho_{n, n+k} from the polar Husimi data.

    rho_{n,n+k} = sqrt(n!(n+k)!)/(2n+k)! * d^{2n+k} f(0)/dr^{2n+k}; the
    derivative comes from the parity-constrained radial polynomial fit.
    Negative k reads off the conjugate band of the same data.
    """
    if n < 0 or n + k < 0:
        raise ValueError("element indices must be nonnegative")
    order = 2 * min(n, n + k) + abs(k)
    if order > derivative_ceiling:
        raise ValueError(f"derivative order {order} above ceiling {derivative_ceiling}")
    n_terms = (derivative_ceiling - abs(k)) // 2 + 3
    beta = _fit_radial_coefficients(q, k, n_terms, r_fit, residual_tol)
    j = min(n, n + k)
    fact = math.sqrt(math.factorial(n) * math.factorial(n + k))
    return complex(beta[j]) * fact


def reconstruct_elements(q: HusimiQ, max_order: int = 6, **kwargs) -> dict:
    """All elements rho_{n, n+k} (k >= 0) with 2n+k <= max_order, as a dict
    keyed by (n, n+k); complete the lower triangle by Hermiticity."""
    out = {}
    for k in range(max_order + 1):
        for n in range((max_order - k) // 2 + 1):
            out[(n, n + k)] = reconstruct_element(q, n, k, **kwargs)
    return out
