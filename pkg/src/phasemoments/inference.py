"""Recovering sharp moments and densities from measured statistics.

The measured and sharp moment sequences are related by a unit-lower-triangular
system, so the recovery is a forward recursion

    r_k = m_k - sum_{i=1}^{k} s[k][i] * r_{k-i},

with first-order linear propagation of the measured standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite_e
from scipy.linalg import solve_triangular

from .errors import InvalidMomentSequenceError, GridResolutionError
from .hilbert import Grid, GridDensity
from .models import CoefficientTable
from .sampling import MomentSequence

__all__ = [
    "DeterminacyVerdict",
    "recover_moments",
    "determinacy_check",
    "density_from_moments",
    "hankel_matrix",
]


def _system_matrix(table: CoefficientTable, axis: str, K: int) -> np.ndarray:
    """S with measured = S @ sharp; S[k, k-i] = s[k][i], unit diagonal."""
    s = table.coefficients(axis)
    S = np.zeros((K + 1, K + 1))
    for k in range(K + 1):
        for i in range(k + 1):
            S[k, k - i] = s[k, i]
    return S


def recover_moments(measured: MomentSequence, table: CoefficientTable,
                    axis: str = "Q") -> MomentSequence:
    """Invert the measured-moment polynomials for the sharp moments.

    Triangularity means r_k depends on m_0..m_k only. If the input carries
    standard errors they are propagated through the (linear) inversion
    assuming independent errors per order.
    """
    K = measured.K
    if K > table.k_max:
        raise ValueError("measured sequence exceeds the table order")
    S = _system_matrix(table, axis, K)
    r = solve_triangular(S, measured.m, lower=True, unit_diagonal=True)
    r[0] = 1.0
    se = None
    if measured.se is not None:
        L = solve_triangular(S, np.eye(K + 1), lower=True, unit_diagonal=True)
        se = np.sqrt((L**2) @ (measured.se**2))
    return MomentSequence(m=r, se=se, order_warning=measured.order_warning)


@dataclass(frozen=True)
class DeterminacyVerdict:
    """Outcome of the factorial-envelope growth screen.

    This is a finite-sample heuristic surrogate for exponential boundedness
    (|m_k| <= C R^k k!), not a proof: it fits log|m_k| - log k! over the even
    orders to a line and inspects the right-tail residual, which turns
    positive when the sequence grows super-factorially.
    """

    bounded: bool
    C: float
    R: float
    max_violation: float

    def to_dict(self) -> dict:
        return {
            "bounded": self.bounded,
            "C": self.C,
            "R": self.R,
            "max_violation": self.max_violation,
            "heuristic": "factorial-envelope tail residual (not a proof)",
        }


def determinacy_check(moments: MomentSequence) -> DeterminacyVerdict:
    """Screen a moment sequence for factorial-envelope growth.

    bounded means the tail residual stays below 0.1 on the log scale; any
    negative even moment invalidates the sequence outright.
    """
    if moments.K < 6:
        raise ValueError("need at least moments up to order 6")
    ks, ys = [], []
    for k in range(0, moments.K + 1, 2):
        mk = moments.m[k]
        if mk < -1e-12:
            raise InvalidMomentSequenceError(f"even moment m_{k} = {mk} is negative")
        if mk > 0.0:
            ks.append(float(k))
            ys.append(math.log(mk) - math.lgamma(k + 1))
    if len(ks) < 3:
        # all mass at a point: nothing can grow
        return DeterminacyVerdict(bounded=True, C=1.0, R=1.0, max_violation=0.0)
    ks = np.asarray(ks)
    ys = np.asarray(ys)
    b, a = np.polyfit(ks, ys, 1)
    residuals = ys - (a + b * ks)
    tail = float(residuals[-1])
    return DeterminacyVerdict(
        bounded=tail <= 0.1,
        C=float(math.exp(a)),
        R=float(math.exp(b)),
        max_violation=tail,
    )


def hankel_matrix(m: np.ndarray) -> np.ndarray:
    half = (len(m) - 1) // 2
    idx = np.arange(half + 1)
    return np.asarray(m)[idx[:, None] + idx[None, :]]


def _correction_coefficients(m: np.ndarray, mu: float, sigma: float, K: int) -> np.ndarray:
    """Series coefficients c_j = E[He_j(Z)]/sqrt(j!), Z = (X - mu)/sigma,
    evaluated from the raw moments."""
    z = np.empty(K + 1)
    for j in range(K + 1):
        z[j] = sum(math.comb(j, i) * m[i] * (-mu) ** (j - i) for i in range(j + 1)) / sigma**j
    coeffs = np.zeros(K + 1)
    for j in range(K + 1):
        poly = hermite_e.herme2poly(np.eye(K + 1)[j])
        coeffs[j] = float(np.dot(poly, z[: len(poly)])) / math.sqrt(math.factorial(j))
    return coeffs


def _best_reference_width(m: np.ndarray, mu: float, sigma_hat: float, K: int) -> float:
    """Pick the reference Gaussian width minimizing the top correction
    coefficients; ties resolve to the plain moment fit sigma_hat."""
    tail = max(1, K - 3)

    def objective(sigma: float) -> float:
        c = _correction_coefficients(m, mu, sigma, K)
        return float(np.sum(c[tail:] ** 2))

    best_sigma, best_val = sigma_hat, objective(sigma_hat)
    for sigma in sigma_hat * np.geomspace(0.4, 1.4, 41):
        val = objective(float(sigma))
        if val < best_val * (1.0 - 1e-9):
            best_sigma, best_val = float(sigma), val
    return best_sigma


def density_from_moments(moments: MomentSequence, grid: Grid,
                         check_determinacy: bool = True) -> GridDensity:
    """Gram-Charlier style reconstruction of a density from its moments.

    A Gaussian matching (m_1, m_2) is corrected by orthonormal polynomials of
    that Gaussian so that all moments up to K are reproduced exactly (before
    the final clip-and-renormalize). Moment-level recovery is the primary
    contract; this is a convenience visualization of it.
    """
    K = moments.K
    if K < 2 or K % 2 or K > 12:
        raise ValueError("K must be even, in 2..12")
    if check_determinacy and K >= 6 and not determinacy_check(moments).bounded:
        raise InvalidMomentSequenceError("sequence failed the determinacy screen")
    m = moments.m
    hank = hankel_matrix(m)
    min_eig = float(np.linalg.eigvalsh(hank).min())
    if min_eig < -1e-8 * max(1.0, float(np.abs(hank).max())):
        raise InvalidMomentSequenceError(f"Hankel matrix indefinite (min eig {min_eig})")
    mu = m[1]
    var = m[2] - mu * mu
    if var <= 0:
        raise InvalidMomentSequenceError("nonpositive variance; degenerate sequence")

    # Reference width: start from sqrt(m2 - m1^2) but allow a narrower or wider
    # Gaussian if that shrinks the high-order corrections; the series matches
    # all moments <= K for any width, but its quality depends strongly on it
    # (densities vanishing at a point want a narrower reference).
    sigma = _best_reference_width(m, mu, math.sqrt(var), K)
    coeffs = _correction_coefficients(m, mu, sigma, K)

    def evaluate(x: np.ndarray) -> np.ndarray:
        zs = (x - mu) / sigma
        gauss = np.exp(-0.5 * zs * zs) / (sigma * math.sqrt(2.0 * math.pi))
        series = np.zeros_like(zs)
        for j in range(K + 1):
            basis = hermite_e.hermeval(zs, np.eye(K + 1)[j]) / math.sqrt(math.factorial(j))
            series += coeffs[j] * basis
        return gauss * series

    # Signed moments must reproduce the input before clipping. Checked on a
    # wide internal grid: x^k against the polynomial tail decays late, later
    # than the caller's grid needs to reach for the density itself.
    check = Grid.centered(abs(mu) + sigma * (K + 12.0), 8192)
    raw_check = evaluate(check.points)
    for k in range(K + 1):
        got = check.moment(raw_check, k)
        if abs(got - m[k]) > 1e-4 * max(1.0, abs(m[k])):
            raise InvalidMomentSequenceError(
                f"expansion does not reproduce moment {k}: {got} vs {m[k]}"
            )
    raw = evaluate(grid.points)
    clipped = np.where(raw < 0.0, 0.0, raw)
    mass = grid.mass(clipped)
    if mass <= 0:
        raise GridResolutionError("grid misses the reconstructed density")
    return GridDensity(grid, clipped / mass)
