"""Free-space propagation between parallel planes.

The production path is the paraxial (Fresnel) transfer function applied in
the Fourier domain:

    H(fx, fy) = exp(i k d) * exp(-i pi lambda d (fx^2 + fy^2))

sampled at the DFT frequencies ``f = index / (n dx)``. H has unit modulus
everywhere, so with orthonormal FFTs propagation is exactly unitary and the
adjoint operator is propagation with the conjugated kernel. A direct
spherical-wavelet summation (:func:`rayleigh_sommerfeld`) is kept as an
independent small-grid reference; it is O(n^4) and not meant for production.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridMismatchError
from .field import ComplexField, GridSpec, _require_same_grid


@dataclass(frozen=True)
class PropagationKernel:
    """Precomputed Fourier-domain transfer function for one hop."""

    grid: GridSpec
    distance: float
    h: np.ndarray

    def __post_init__(self):
        if self.h.shape != (self.grid.n, self.grid.n):
            raise GridMismatchError(
                f"kernel shape {self.h.shape} does not match grid {self.grid.n}"
            )


def make_kernel(grid: GridSpec, distance: float) -> PropagationKernel:
    """Build the transfer function for a signed propagation distance.

    ``distance = 0`` gives the identity kernel; negative distances give the
    exact inverse of the corresponding positive hop, ``H(-d) = conj(H(d))``.
    """
    f1 = np.fft.fftfreq(grid.n, d=grid.dx)
    fx, fy = np.meshgrid(f1, f1, indexing="ij")
    k = 2.0 * np.pi / grid.wavelength
    phase = k * distance - np.pi * grid.wavelength * distance * (fx**2 + fy**2)
    return PropagationKernel(grid, distance, np.exp(1j * phase))


def propagate(field: ComplexField, kernel: PropagationKernel) -> ComplexField:
    """Apply the transfer function: IFFT( FFT(u) * H ). Power conserving."""
    _require_same_grid(field.grid, kernel.grid)
    spec = np.fft.fft2(field.values, norm="ortho")
    out = np.fft.ifft2(spec * kernel.h, norm="ortho")
    return ComplexField(field.grid, out)


def propagate_adjoint(field: ComplexField, kernel: PropagationKernel) -> ComplexField:
    """Adjoint of :func:`propagate` under the unweighted inner product.

    Because the kernel is unit modulus and the transform orthonormal, the
    adjoint equals the inverse: propagation with conj(H). This carries
    output-plane residuals backward during gradient computation.
    """
    _require_same_grid(field.grid, kernel.grid)
    spec = np.fft.fft2(field.values, norm="ortho")
    out = np.fft.ifft2(spec * np.conj(kernel.h), norm="ortho")
    return ComplexField(field.grid, out)


def layer_transmit(field: ComplexField, t: np.ndarray) -> ComplexField:
    """Pointwise product of a field with a complex transmission array."""
    t = np.asarray(t)
    if t.shape != field.values.shape:
        raise GridMismatchError(
            f"transmission shape {t.shape} does not match field {field.values.shape}"
        )
    return ComplexField(field.grid, field.values * t)


def propagate_padded(field: ComplexField, distance: float) -> ComplexField:
    """Propagate on a 2x zero-padded grid, then crop back.

    Suppresses periodic wraparound for distances whose diffraction spread
    approaches the aperture. Light leaving the window is genuinely lost, so
    this variant is not power conserving; the default unpadded path is exact
    circular propagation and stays unitary.
    """
    g = field.grid
    big = GridSpec(2 * g.n, g.dx, g.wavelength)
    padded = np.zeros((big.n, big.n), dtype=np.complex128)
    lo = g.n // 2
    padded[lo : lo + g.n, lo : lo + g.n] = field.values
    out = propagate(ComplexField(big, padded), make_kernel(big, distance))
    return ComplexField(g, out.values[lo : lo + g.n, lo : lo + g.n].copy())


def rayleigh_sommerfeld(field: ComplexField, distance: float) -> ComplexField:
    """Direct secondary-wavelet summation to a parallel plane.

    Each source pixel radiates ``(d/r^2) (1/(i lambda) + 1/(2 pi r)) exp(i k r)``
    weighted by its complex amplitude and the pixel area, with
    ``r = sqrt((x-xs)^2 + (y-ys)^2 + d^2)``. Output sampled on the same grid.
    Quadratic memory, quartic time; use for small-grid cross-checks only.
    """
    if distance <= 0:
        raise DomainError("rayleigh_sommerfeld requires a positive distance")
    g = field.grid
    lam = g.wavelength
    x, y = g.mesh()
    xs = x.ravel()
    ys = y.ravel()
    ddx = xs[:, None] - xs[None, :]
    ddy = ys[:, None] - ys[None, :]
    r = np.sqrt(ddx**2 + ddy**2 + distance**2)
    w = (distance / r**2) * (1.0 / (1j * lam) + 1.0 / (2.0 * np.pi * r)) * np.exp(
        2j * np.pi * r / lam
    )
    out = (w @ field.values.ravel()) * g.dx**2
    return ComplexField(g, out.reshape(g.n, g.n))
