"""Convolution inversion, the independent check on the moment route.

Two routes: regularized Fourier division for arbitrary kernels, and the
derivative series specific to the unit-width Gaussian kernel
pi**(-1/2) exp(-x^2), whose partial sums are Taylor sections of exp(w^2/4)
applied in the spectral domain.
"""

from __future__ import annotations

import numpy as np

from .errors import DivergenceError, GridResolutionError, IllPosedError
from .hilbert import GridDensity, GridFunction

__all__ = ["fourier_deconvolve", "gaussian_differential_deconvolve"]


def _aligned_spectrum(values: np.ndarray, zero_index: int, n_pad: int) -> np.ndarray:
    padded = np.zeros(n_pad)
    padded[: values.size] = values
    return np.fft.rfft(np.roll(padded, -zero_index))


def fourier_deconvolve(measured: GridDensity, kernel: GridDensity, eps: float = 1e-8,
                       clip: bool = True):
    """Divide out the kernel in the spectral domain with an eps floor.

    Where |kernel_hat| < eps the divisor is replaced by the sign-consistent
    floor eps * kernel_hat/|kernel_hat|. Raises IllPosedError when the floor
    covers more than half of the band actually carrying signal. With
    clip=False the signed, unnormalized result is returned as a GridFunction
    (useful for round-trip checks).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if measured.grid != kernel.grid:
        raise ValueError("measured density and kernel must share a grid")
    grid = measured.grid
    n_pad = 2 * grid.n
    k0 = grid.zero_index

    m_hat = np.fft.rfft(np.pad(measured.values, (0, grid.n)))
    f_hat = _aligned_spectrum(kernel.values, k0, n_pad) * grid.dx  # f_hat[0] ~ 1

    small = np.abs(f_hat) < eps
    band = np.abs(m_hat) > eps * np.abs(m_hat).max()
    if band.any() and (small & band).sum() > 0.5 * band.sum():
        raise IllPosedError("kernel spectrum vanishes on most of the signal band")

    divisor = np.where(small, _sign_floor(f_hat, eps), f_hat)
    raw = np.fft.irfft(m_hat / divisor, n=n_pad)[: grid.n]
    if not clip:
        return GridFunction(grid, raw.astype(complex))
    vals = np.where(raw < 0.0, 0.0, raw)
    mass = grid.mass(vals)
    if mass <= 0:
        raise IllPosedError("deconvolved density has no mass")
    return GridDensity(grid, vals / mass)


def _sign_floor(f_hat: np.ndarray, eps: float) -> np.ndarray:
    mag = np.abs(f_hat)
    phase = np.where(mag > 0, f_hat / np.where(mag > 0, mag, 1.0), 1.0)
    return eps * phase


def gaussian_differential_deconvolve(measured: GridDensity, order: int = 20) -> GridDensity:
    """Partial sum of the even-derivative inversion series for the Gaussian
    kernel pi**(-1/2) exp(-x^2), derivatives taken spectrally.

    Diverges when the measured density is narrower than the kernel; three
    consecutive growing terms raise DivergenceError carrying the last stable
    partial sum.
    """
    if not 0 <= order <= 30:
        raise ValueError("order must lie in 0..30")
    grid = measured.grid
    m_hat = np.fft.rfft(measured.values)
    omega = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.dx)

    # smoothness gate: spectral tail of the data must be negligible
    top = int(0.9 * m_hat.size)
    if np.abs(m_hat[top:]).max() > 1e-10 * np.abs(m_hat).max():
        raise GridResolutionError("measured density is not smooth on this grid")

    # Work only on the band carrying signal: beyond it the data is FFT
    # roundoff, which omega^{2k} would amplify without bound.
    band = np.abs(m_hat) >= 1e-13 * np.abs(m_hat).max()
    mb = m_hat[band]
    z = 0.25 * omega[band] ** 2
    term = np.ones_like(z)          # z^k / k!, k = 0
    acc = mb * term
    stable = acc.copy()
    last_norm = None
    increases = 0
    for k in range(1, order + 1):
        term = term * z / k
        contrib = mb * term
        norm = float(np.linalg.norm(contrib))
        if last_norm is not None and norm > last_norm:
            increases += 1
            if increases >= 3:
                raise DivergenceError(
                    f"series terms growing at order {k}",
                    partial=_banded_density(grid, stable, band, m_hat.size),
                )
        else:
            increases = 0
            stable = acc + contrib
        last_norm = norm
        acc = acc + contrib
    return _banded_density(grid, acc, band, m_hat.size)


def _banded_density(grid, band_spectrum, band, n_freq) -> GridDensity:
    spectrum = np.zeros(n_freq, dtype=complex)
    spectrum[band] = band_spectrum
    vals = np.fft.irfft(spectrum, n=grid.n)
    vals = np.where(vals < 0.0, 0.0, vals)
    mass = grid.mass(vals)
    if mass <= 0:
        raise IllPosedError("deconvolved density has no mass")
    return GridDensity(grid, vals / mass)
