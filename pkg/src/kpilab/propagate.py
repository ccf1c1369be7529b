"""Exact-in-time spectral propagation of the linear evolutions.

All equations handled here are linear with constant coefficients, so the
evolution is a diagonal phase multiplication per Fourier mode and carries no
discretization error. A classical per-mode RK4 integrator is provided as an
independent oracle for tests; it is never part of the primary path.

The Nyquist frequencies (k = -nx/2 and, in 2D, l = -ny/2) are excluded from
every evolution: the unpaired mode breaks conjugate symmetry for real data,
so its coefficient is forced to zero.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .dispersion import (
    DispersionParams,
    frequencies_1d,
    frequencies_2d,
    semiclassical_frequencies,
    unit_phases,
)
from .errors import ConstraintError, DimensionError, ParameterError
from .fourier import SpectralField, require_mean_zero


def _zero_excluded_modes(coeffs: np.ndarray, grid) -> np.ndarray:
    """Zero the k = 0 row and the Nyquist row/column; returns a copy."""
    out = coeffs.copy()
    out[grid.index_of_k(0)] = 0.0
    out[0] = 0.0  # k = -nx/2
    if grid.dimension == 2:
        out[:, 0] = 0.0  # l = -ny/2
    return out


def _check_mode(field: SpectralField, params: DispersionParams) -> None:
    if params.mode == "full-2d" and field.grid.dimension != 2:
        raise DimensionError("full-2d dispersion requires a 2D field")
    if params.mode == "reduced-1d" and field.grid.dimension != 1:
        raise DimensionError("reduced-1d dispersion requires a 1D field")


@lru_cache(maxsize=128)
def _cached_grid_frequencies(grid, params) -> np.ndarray:
    if params.mode == "full-2d":
        table = frequencies_2d(grid.k_values, grid.l_values, params)
    else:
        table = frequencies_1d(grid.k_values, params)
    table.flags.writeable = False
    return table


def _grid_frequencies(field: SpectralField, params: DispersionParams) -> np.ndarray:
    return _cached_grid_frequencies(field.grid, params)


def evolve(u0: SpectralField, t: float, params: DispersionParams) -> SpectralField:
    """Propagate by multiplying each coefficient with ``exp(i*t*omega)``.

    Requires zero x-mean (the inverse x-derivative is undefined at k = 0).
    Norm is conserved to rounding; the group law holds exactly up to the
    extended-precision phase reduction.
    """
    _check_mode(u0, params)
    require_mean_zero(u0)
    phases = unit_phases(_grid_frequencies(u0, params), t)
    return u0.with_coeffs(_zero_excluded_modes(u0.coeffs * phases, u0.grid))


def evolve_modewise(u0: SpectralField, t: float, alpha: float) -> SpectralField:
    """2D evolution assembled one transverse frequency at a time.

    Each l-slice is propagated under the reduced 1D family with ``lam = |l|``;
    coefficientwise identical to :func:`evolve` on the full 2D multiplier.
    Kept as a distinct code path for cross-checking the mode reduction.
    """
    if u0.grid.dimension != 2:
        raise DimensionError("modewise evolution requires a 2D field")
    require_mean_zero(u0)
    grid = u0.grid
    out = np.empty_like(u0.coeffs)
    for j, l in enumerate(grid.l_values):
        reduced = DispersionParams.reduced(alpha=alpha, lam=float(abs(l)))
        phases = unit_phases(frequencies_1d(grid.k_values, reduced), t)
        out[:, j] = u0.coeffs[:, j] * phases
    return u0.with_coeffs(_zero_excluded_modes(out, grid))


def evolve_semiclassical(
    w0: SpectralField, t: float, h: float, params: DispersionParams
) -> SpectralField:
    """Evolution in the frame translated to the critical frequency.

    Coefficient k is multiplied by ``exp(i*t*Phi(hk)/h^(1+alpha))`` where
    ``Phi`` is the multiplier translated by ``h*floor(xi0/h)`` and gauged so
    its value at the critical offset ``sigma_h`` is zero (a global phase).
    The translated image of the original k = 0 mode, ``k = -floor(xi0/h)``,
    is singular and must carry no mass.
    """
    if w0.grid.dimension != 1:
        raise DimensionError("semiclassical evolution acts on 1D fields")
    if not 0.0 < h < 1.0:
        raise ParameterError(f"h must lie in (0, 1), got {h}")
    grid = w0.grid
    omega, shift = semiclassical_frequencies(grid.k_values, h, params)
    singular = -shift
    if -grid.nx // 2 <= singular < grid.nx // 2:
        mass = abs(w0.coeffs[grid.index_of_k(singular)])
        scale = max(np.max(np.abs(w0.coeffs)), 1e-300)
        if mass > 1e-14 * scale:
            raise ConstraintError(
                f"mass {mass:.3e} on the singular translated mode k={singular}"
            )
    out = w0.coeffs * unit_phases(omega, t)
    out[0] = 0.0  # Nyquist
    if -grid.nx // 2 <= singular < grid.nx // 2:
        out[grid.index_of_k(singular)] = 0.0
    return w0.with_coeffs(out)


def rk4_reference_evolve(
    u0: SpectralField, t: float, steps: int, params: DispersionParams
) -> SpectralField:
    """Classical RK4 on ``du_hat/dt = i*omega*u_hat``, one mode at a time.

    Independent verification oracle; global error is O(t*(t*omega/steps)^4
    * omega / 120) per mode, so it is only meaningful on frequency windows
    where ``t*omega/steps`` is small. Used by tests and never by the primary
    evolution path.
    """
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    _check_mode(u0, params)
    require_mean_zero(u0)
    rate = 1j * _grid_frequencies(u0, params).astype(np.float64)
    u = _zero_excluded_modes(u0.coeffs, u0.grid)
    dt = t / steps
    for _ in range(steps):
        k1 = rate * u
        k2 = rate * (u + 0.5 * dt * k1)
        k3 = rate * (u + 0.5 * dt * k2)
        k4 = rate * (u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return u0.with_coeffs(u)
