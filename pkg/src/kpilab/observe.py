"""Control operators, time Gramians and observability constants.

The vertical control operator is ``G h = g(x) (h - integral(g h dx))`` with a
fixed nonnegative bump ``g`` of unit integral; its horizontal counterpart acts
in y. The observed energy ``integral_0^T ||G u(t)||^2 dt`` is a hermitian
quadratic form whose per-transverse-frequency blocks carry the closed-form
time factor

    E(delta, T) = (exp(i T delta) - 1) / (i delta),    E(0, T) = T,

paired with the static Gram matrix of G on exponentials. The same kernel,
conjugated, drives the control Gramian used by the HUM synthesis.

All Gram matrices are assembled from the grid DFT of ``g`` and ``g^2`` with
periodic index wrapping, which makes them exactly consistent with the
physical-space application of G on the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Sequence

import numpy as np

from .dispersion import (
    DispersionParams,
    frequencies_1d,
    unit_phases,
)
from .errors import (
    ConstraintError,
    DimensionError,
    NumericalConsistencyError,
    ParameterError,
)
from .fourier import (
    TWO_PI,
    SpectralField,
    TorusGrid,
    forward_transform,
    inverse_transform,
    require_mean_zero,
)

ProfileKind = Literal["smooth-exp", "hann-squared"]
Orientation = Literal["vertical", "horizontal"]

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10


# ---------------------------------------------------------------------------
# Control profiles
# ---------------------------------------------------------------------------


def _bump_values(x: np.ndarray, a: float, b: float, kind: str) -> np.ndarray:
    s = (2.0 * x - (a + b)) / (b - a)  # [-1, 1] on the support
    inside = np.abs(s) < 1.0
    out = np.zeros_like(x)
    if kind == "smooth-exp":
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    elif kind == "hann-squared":
        out[inside] = np.sin(np.pi * (x[inside] - a) / (b - a)) ** 4
    else:
        raise ParameterError(f"unknown profile kind {kind!r}")
    return out


@dataclass(frozen=True, eq=False)
class ControlProfile:
    """Nonnegative bump ``g`` with unit integral on a 1D torus grid.

    Carries the physical samples together with the grid Fourier coefficients
    of both ``g`` and ``g^2``, from which all Gram matrices are assembled.
    """

    grid: TorusGrid
    intervals: tuple[tuple[float, float], ...]
    kind: ProfileKind
    values: np.ndarray
    normalization: float

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def support(self) -> tuple[float, float]:
        """Single support interval; raises for multi-component profiles."""
        if len(self.intervals) != 1:
            raise ParameterError("profile has multiple support components")
        return self.intervals[0]

    @cached_property
    def g_hat(self) -> np.ndarray:
        """Grid Fourier coefficients of g, monotone frequency order."""
        return forward_transform(self.values.astype(complex), self.grid).coeffs

    @cached_property
    def gsq_hat(self) -> np.ndarray:
        """Grid Fourier coefficients of g^2, monotone frequency order."""
        return forward_transform(self.values.astype(complex) ** 2, self.grid).coeffs

    def quad_integral(self) -> float:
        """Trapezoid-rule integral of g over the torus (equals 1 by design)."""
        return float(np.sum(self.values) * TWO_PI / self.grid.nx)

    def exp_moment(self, k: np.ndarray) -> np.ndarray:
        """``integral g(x) exp(i k x) dx`` for integer k inside the window."""
        k = np.asarray(k)
        idx = np.array([self.grid.index_of_k(int(-m)) for m in np.ravel(k)])
        return (TWO_PI * self.g_hat[idx]).reshape(k.shape)

    def gsq_moment(self, m: np.ndarray) -> np.ndarray:
        """``integral g(x)^2 exp(i m x) dx`` with periodic index wrapping.

        Wrapping matches the aliasing of the grid quadrature exactly, so the
        value is valid for arbitrarily large integer ``m``.
        """
        m = np.asarray(m)
        nx = self.grid.nx
        idx = np.mod(-m + nx // 2, nx)
        return TWO_PI * self.gsq_hat[idx]


def make_region_profile(
    intervals: Sequence[tuple[float, float]],
    kind: ProfileKind,
    grid: TorusGrid,
) -> ControlProfile:
    """Bump supported on a union of intervals, jointly normalized to integral 1."""
    if grid.dimension != 1:
        raise DimensionError("control profiles live on 1D grids")
    x = grid.x_nodes
    total = np.zeros_like(x)
    for a, b in intervals:
        if not (-np.pi <= a < b <= np.pi):
            raise ParameterError(f"invalid support interval ({a}, {b})")
        total += _bump_values(x, a, b, kind)
    integral = float(np.sum(total) * TWO_PI / grid.nx)
    if integral <= 0:
        raise ParameterError("profile support contains no grid nodes")
    return ControlProfile(
        grid=grid,
        intervals=tuple((float(a), float(b)) for a, b in intervals),
        kind=kind,
        values=total / integral,
        normalization=1.0 / integral,
    )


def make_control_profile(
    a: float, b: float, kind: ProfileKind, grid: TorusGrid
) -> ControlProfile:
    """Single-interval profile on ``(a, b)`` with quadrature integral 1."""
    if not a < b:
        raise ParameterError(f"empty or reversed interval ({a}, {b})")
    return make_region_profile([(a, b)], kind, grid)


def default_profile(nx: int = 1024) -> ControlProfile:
    """The package default: smooth-exp bump on (pi/4, 3*pi/4)."""
    return make_control_profile(np.pi / 4, 3 * np.pi / 4, "smooth-exp", TorusGrid(nx))


# ---------------------------------------------------------------------------
# Control operators (physical space)
# ---------------------------------------------------------------------------


def apply_vertical_control(u: SpectralField, profile: ControlProfile) -> SpectralField:
    """``G u = g(x) (u - integral g(x') u(x', y) dx')``.

    Self-adjoint on L^2 and, because g has unit integral, the output has zero
    x-mean for every y.
    """
    if u.grid.nx != profile.grid.nx:
        raise DimensionError("profile grid does not match the field's x-axis")
    samples = inverse_transform(u)
    g = profile.values
    dx = TWO_PI / u.grid.nx
    if u.grid.dimension == 1:
        mean = np.sum(g * samples) * dx
        out = g * (samples - mean)
    else:
        mean = np.sum(g[:, None] * samples, axis=0) * dx
        out = g[:, None] * (samples - mean[None, :])
    return forward_transform(out, u.grid)


def apply_horizontal_control(u: SpectralField, profile: ControlProfile) -> SpectralField:
    """``g(y) (u - integral g(y') u(x, y') dy')``; annihilates y-independent fields."""
    if u.grid.dimension != 2:
        raise DimensionError("horizontal control requires a 2D field")
    if u.grid.ny != profile.grid.nx:
        raise DimensionError("profile grid does not match the field's y-axis")
    samples = inverse_transform(u)
    g = profile.values
    dy = TWO_PI / u.grid.ny
    mean = np.sum(g[None, :] * samples, axis=1) * dy
    out = g[None, :] * (samples - mean[:, None])
    return forward_transform(out, u.grid)


def apply_control(
    u: SpectralField, profile: ControlProfile, orientation: Orientation
) -> SpectralField:
    if orientation == "vertical":
        return apply_vertical_control(u, profile)
    if orientation == "horizontal":
        return apply_horizontal_control(u, profile)
    raise ParameterError(f"unknown control orientation {orientation!r}")


# ---------------------------------------------------------------------------
# Gramian blocks
# ---------------------------------------------------------------------------


def control_gram_matrix(profile: ControlProfile, indices: np.ndarray) -> np.ndarray:
    """Static Gram ``M[i, j] = <G e_{kj}, G e_{ki}>`` over a frequency window.

    Assembled from the grid DFT of g and g^2; exactly the matrix of the
    physical-space operator restricted to the window.
    """
    indices = np.asarray(indices, dtype=int)
    c = profile.exp_moment(indices)  #  integral g e^{ikx}
    q_diff = profile.gsq_moment(indices[None, :] - indices[:, None])
    q_single = profile.gsq_moment(indices)
    q_zero = profile.gsq_moment(np.array(0))
    m = (
        q_diff
        - np.conj(c)[:, None] * q_single[None, :]
        - np.conj(q_single)[:, None] * c[None, :]
        + q_zero * np.conj(c)[:, None] * c[None, :]
    )
    return m


def plain_weight_gram_matrix(profile: ControlProfile, indices: np.ndarray) -> np.ndarray:
    """Static Gram of plain multiplication by g: ``<g e_{kj}, g e_{ki}>``."""
    indices = np.asarray(indices, dtype=int)
    return profile.gsq_moment(indices[None, :] - indices[:, None])


def time_factor(delta: np.ndarray, horizon: float) -> np.ndarray:
    """``E(delta, T) = (exp(i T delta) - 1)/(i delta)`` with a Taylor branch.

    The series branch for ``|T delta| < 1e-4`` keeps the resonant diagonal
    (delta = 0, value exactly T) and its neighborhood fully accurate.
    """
    delta = np.asarray(delta, dtype=float)
    z = horizon * delta
    out = np.empty(delta.shape, dtype=np.complex128)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = horizon * (1.0 + 1j * zs / 2.0 - zs**2 / 6.0 - 1j * zs**3 / 24.0)
    db = delta[~small]
    out[~small] = (unit_phases(db, horizon) - 1.0) / (1j * db)
    return out


@dataclass(frozen=True, eq=False)
class GramianBlock:
    """Hermitian PSD block of the observed-energy form at one fixed frequency.

    ``indices`` are the varying frequencies (x-window for vertical control,
    transverse window for horizontal), ``fixed_freq`` the frozen one. The
    matrix is normalized so that the Rayleigh quotient against the plain
    coefficient 2-norm equals the observed-energy ratio.
    """

    indices: np.ndarray
    fixed_freq: int
    horizon: float
    matrix: np.ndarray
    axis: Literal["x", "y"] = "x"

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        scale = float(np.max(np.abs(m))) or 1.0
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > HERMITICITY_TOL * scale:
            raise NumericalConsistencyError(
                f"Gramian block lost hermiticity: defect {herm:.3e} at scale {scale:.3e}"
            )
        m = 0.5 * (m + m.conj().T)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        idx = np.ascontiguousarray(self.indices, dtype=int)
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)
        # absolute dust allowance keeps degenerate (identically zero) blocks
        # from tripping on rounding noise
        floor = -PSD_TOL * max(np.trace(m).real, 0.0) / m.shape[0] - 1e-15 * (1.0 + scale)
        if self.eigenvalues[0] < floor:
            raise NumericalConsistencyError(
                f"Gramian block is not PSD: lambda_min = {self.eigenvalues[0]:.3e}"
            )

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def quadratic_form(self, vec: np.ndarray) -> float:
        return float(np.real(np.vdot(vec, self.matrix @ vec)))


def window_indices(size: int, exclude_zero: bool) -> np.ndarray:
    """Symmetric frequency window ``[-size, size]``, optionally without 0."""
    idx = np.arange(-size, size + 1)
    return idx[idx != 0] if exclude_zero else idx


def assemble_observability_gramian(
    horizon: float,
    k_window: int,
    l: int,
    profile: ControlProfile,
    params: DispersionParams,
) -> GramianBlock:
    """Vertical-control block over ``k in [-K, K] \\ {0}`` at transverse ``l``.

    Entry ``(k1, k2)`` is ``E(omega(k2, l) - omega(k1, l), T)`` times the
    static Gram of G; distinct l decouple exactly because the y-integral
    forces equal transverse frequencies.
    """
    if k_window < 1:
        raise ParameterError("k_window must be >= 1")
    if horizon <= 0:
        raise ParameterError("horizon must be positive")
    if k_window > profile.grid.nx // 2 - 1:
        raise ParameterError(
            f"window K={k_window} exceeds the profile grid (nx={profile.grid.nx})"
        )
    idx = window_indices(k_window, exclude_zero=True)
    reduced = DispersionParams.reduced(params.alpha, float(abs(l)))
    omega = frequencies_1d(idx, reduced).astype(float)
    e_mat = time_factor(omega[None, :] - omega[:, None], horizon)
    m = control_gram_matrix(profile, idx)
    return GramianBlock(
        indices=idx,
        fixed_freq=l,
        horizon=horizon,
        matrix=m * e_mat / TWO_PI,
        axis="x",
    )


def assemble_horizontal_gramian(
    horizon: float,
    l_window: int,
    k: int,
    profile: ControlProfile,
    params: DispersionParams,
) -> GramianBlock:
    """Horizontal-control block over ``l in [-L, L]`` at fixed x-frequency k.

    l = 0 stays in the window (only k = 0 is excluded by the mean-zero
    constraint); that row and column vanish, which is exactly the invisible
    y-independent sector.
    """
    if k == 0:
        raise ParameterError("x-frequency k = 0 is excluded by the mean-zero constraint")
    if horizon <= 0:
        raise ParameterError("horizon must be positive")
    if l_window > profile.grid.nx // 2 - 1:
        raise ParameterError(
            f"window L={l_window} exceeds the profile grid (nx={profile.grid.nx})"
        )
    idx = window_indices(l_window, exclude_zero=False)
    omega = np.array(
        [abs(k) ** params.alpha * k + float(l) ** 2 / k for l in idx], dtype=float
    )
    e_mat = time_factor(omega[None, :] - omega[:, None], horizon)
    m = control_gram_matrix(profile, idx)
    return GramianBlock(
        indices=idx,
        fixed_freq=k,
        horizon=horizon,
        matrix=m * e_mat / TWO_PI,
        axis="y",
    )


def gramian_from_frequencies(
    horizon: float,
    indices: np.ndarray,
    omega: np.ndarray,
    profile: ControlProfile,
    fixed_freq: int = 0,
    plain_weight: bool = False,
) -> GramianBlock:
    """Block with caller-supplied per-mode frequencies.

    Used for the semiclassical (translated-frame) evolutions, where the
    frequency table is not the standard multiplier. ``plain_weight`` selects
    multiplication by g instead of the mean-corrected control operator.
    """
    indices = np.asarray(indices, dtype=int)
    omega = np.asarray(omega, dtype=float)
    if omega.shape != indices.shape:
        raise DimensionError("frequency table must match the index window")
    e_mat = time_factor(omega[None, :] - omega[:, None], horizon)
    m = (
        plain_weight_gram_matrix(profile, indices)
        if plain_weight
        else control_gram_matrix(profile, indices)
    )
    return GramianBlock(
        indices=indices,
        fixed_freq=fixed_freq,
        horizon=horizon,
        matrix=m * e_mat / TWO_PI,
        axis="x",
    )


# ---------------------------------------------------------------------------
# Observability ratios and constants
# ---------------------------------------------------------------------------


def gauss_legendre_nodes(
    horizon: float, panels: int, order: int
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [0, T]."""
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    width = horizon / panels
    starts = width * np.arange(panels)
    nodes = (starts[:, None] + width * (base_x[None, :] + 1.0) / 2.0).ravel()
    weights = np.tile(base_w * width / 2.0, panels)
    return nodes, weights


def quadrature_observed_energy(
    u0: SpectralField,
    horizon: float,
    profile: ControlProfile,
    params: DispersionParams,
    orientation: Orientation = "vertical",
    panels: int = 16,
    order: int = 24,
    evolve_fn=None,
) -> float:
    """Time-quadrature oracle for ``integral_0^T ||G u(t)||^2 dt``.

    Evolves the field to each node and applies the control operator in
    physical space; entirely independent of the closed-form time kernel.
    """
    from .propagate import evolve as _evolve

    evolve_fn = evolve_fn or (lambda f, t: _evolve(f, t, params))
    nodes, weights = gauss_legendre_nodes(horizon, panels, order)
    total = 0.0
    for t, w in zip(nodes, weights):
        total += w * apply_control(evolve_fn(u0, t), profile, orientation).norm() ** 2
    return total


def gramian_observed_energy(
    u0: SpectralField,
    horizon: float,
    profile: ControlProfile,
    params: DispersionParams,
    orientation: Orientation = "vertical",
) -> float:
    """Observed energy via exact-time-factor blocks on the field's support."""
    grid = u0.grid
    if orientation == "vertical":
        kv = grid.k_values
        nonzero = np.abs(u0.coeffs) > 0
        k_active = kv[np.any(nonzero, axis=1)] if grid.dimension == 2 else kv[nonzero]
        if k_active.size == 0:
            return 0.0
        k_max = int(np.max(np.abs(k_active)))
        total = 0.0
        if grid.dimension == 1:
            idx = window_indices(k_max, exclude_zero=True)
            omega = frequencies_1d(idx, params).astype(float)
            block = gramian_from_frequencies(horizon, idx, omega, profile)
            vec = np.array([u0.coeffs[grid.index_of_k(int(k))] for k in idx])
            return TWO_PI * block.quadratic_form(vec)
        for j, l in enumerate(grid.l_values):
            col = u0.coeffs[:, j]
            if not np.any(np.abs(col) > 0):
                continue
            block = assemble_observability_gramian(
                horizon, k_max, int(l), profile, params
            )
            vec = np.array([col[grid.index_of_k(int(k))] for k in block.indices])
            total += block.quadratic_form(vec)
        return TWO_PI**2 * total
    # horizontal: blocks at fixed k over the transverse window
    if grid.dimension != 2:
        raise DimensionError("horizontal control requires a 2D field")
    lv = grid.l_values
    nonzero = np.abs(u0.coeffs) > 0
    l_active = lv[np.any(nonzero, axis=0)]
    if l_active.size == 0:
        return 0.0
    l_max = int(np.max(np.abs(l_active)))
    l_max = max(l_max, 1)
    total = 0.0
    for i, k in enumerate(grid.k_values):
        row = u0.coeffs[i, :]
        if k == 0 or not np.any(np.abs(row) > 0):
            continue
        block = assemble_horizontal_gramian(horizon, l_max, int(k), profile, params)
        vec = np.array([row[grid.index_of_l(int(l))] for l in block.indices])
        total += block.quadratic_form(vec)
    return TWO_PI**2 * total


def observability_ratio(
    u0: SpectralField,
    horizon: float,
    profile: ControlProfile,
    params: DispersionParams,
    orientation: Orientation = "vertical",
    method: Literal["gramian", "quadrature"] = "gramian",
    panels: int = 16,
    order: int = 24,
) -> float:
    """``integral_0^T ||G u(t)||^2 dt / ||u0||^2`` for the chosen operator."""
    if horizon <= 0:
        raise ParameterError("horizon must be positive")
    require_mean_zero(u0)
    norm_sq = u0.norm() ** 2
    if norm_sq == 0.0:
        raise ConstraintError("observability ratio undefined for the zero field")
    if method == "quadrature":
        energy = quadrature_observed_energy(
            u0, horizon, profile, params, orientation, panels, order
        )
    elif method == "gramian":
        energy = gramian_observed_energy(u0, horizon, profile, params, orientation)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return energy / norm_sq


@dataclass(frozen=True)
class ObservabilityEstimate:
    """Smallest Gramian eigenvalue over a block family and its inverse."""

    lambda_min: float
    constant: float
    per_block: tuple[float, ...]


def observability_constant(blocks: Sequence[GramianBlock]) -> ObservabilityEstimate:
    """``C_T`` estimate ``1/lambda_min`` over the supplied truncated blocks."""
    if not blocks:
        raise ParameterError("need at least one Gramian block")
    minima = tuple(float(b.eigenvalues[0]) for b in blocks)
    lam_min = min(minima)
    constant = float("inf") if lam_min <= 0 else 1.0 / lam_min
    return ObservabilityEstimate(lambda_min=lam_min, constant=constant, per_block=minima)


# ---------------------------------------------------------------------------
# Spectral inequality constant
# ---------------------------------------------------------------------------


def concentration_matrix(profile: ControlProfile, m0: int) -> np.ndarray:
    """Toeplitz matrix ``integral g^2 e^{i(k-j)x} dx`` over ``|j|,|k| <= m0``."""
    idx = np.arange(-m0, m0 + 1)
    return profile.gsq_moment(idx[None, :] - idx[:, None])


def _mp_concentration_moments(profile: ControlProfile, m_abs: int, dps: int) -> list:
    """g^2 moments in extended precision from the profile samples."""
    import mpmath as mp

    nx = profile.grid.nx
    with mp.workdps(dps):
        gsq = [(j, mp.mpf(float(v)) ** 2) for j, v in enumerate(profile.values) if v != 0.0]
        weight = 2 * mp.pi / nx
        moments = []
        for m in range(m_abs + 1):
            s = mp.mpc(0)
            for j, v in gsq:
                s += v * mp.expjpi(mp.mpf(2 * m * j) / nx)
            moments.append(s * weight * (-1 if m % 2 else 1))
        return moments


def _mp_smallest_eigenvalue(moments: list, m0: int, dps: int):
    """Smallest eigenvalue of the hermitian Toeplitz matrix, inverse power.

    The bottom of the spectrum is exponentially separated, so a Cholesky
    factorization plus a handful of inverse-power sweeps converges fast.
    """
    import mpmath as mp

    with mp.workdps(dps):
        n = 2 * m0 + 1
        a = mp.matrix(n, n)
        for i in range(n):
            for j in range(n):
                d = j - i
                a[i, j] = moments[d] if d >= 0 else mp.conj(moments[-d])
        lower = mp.cholesky(a)
        x = mp.matrix([mp.mpf(1) + mp.mpf(i) / n for i in range(n)])
        rayleigh = None
        for _ in range(80):
            z = mp.matrix(n, 1)
            for i in range(n):
                s = x[i]
                for k in range(i):
                    s -= lower[i, k] * z[k]
                z[i] = s / lower[i, i]
            y = mp.matrix(n, 1)
            for i in reversed(range(n)):
                s = z[i]
                for k in range(i + 1, n):
                    s -= mp.conj(lower[k, i]) * y[k]
                y[i] = s / lower[i, i]
            nrm = mp.sqrt(sum(abs(v) ** 2 for v in y))
            x = y / nrm
            ax = a * x
            new_rayleigh = sum(mp.conj(x[i]) * ax[i] for i in range(n)).real
            if rayleigh is not None and abs(new_rayleigh - rayleigh) <= mp.mpf("1e-25") * abs(
                new_rayleigh
            ):
                return new_rayleigh
            rayleigh = new_rayleigh
        return rayleigh


def spectral_constant_table(profile: ControlProfile, m_max: int) -> list[float]:
    """``kappa(m0)`` for ``m0 = 0 .. m_max`` (sharp constants, one assembly).

    The inequality ``sum |c_k|^2 <= kappa(m0) integral |g p|^2`` is sharp at
    the bottom eigenvector of the concentration matrix. Those eigenvalues
    decay exponentially in m0 and fall far below float64 resolution around
    m0 = 12, so the dense solve runs in extended precision sized to m_max;
    the returned constants are floats.
    """
    if m_max < 0:
        raise ParameterError("m0 must be nonnegative")
    if m_max > profile.grid.nx // 2 - 1:
        raise ParameterError(
            f"window 2*m0+1 = {2 * m_max + 1} exceeds the grid (nx={profile.grid.nx})"
        )
    import mpmath as mp

    dps = max(50, 60 + 3 * m_max)
    moments = _mp_concentration_moments(profile, 2 * m_max, dps)
    with mp.workdps(dps):
        if moments[0].real <= 0:
            raise NumericalConsistencyError(
                "profile has no quadrature mass; the constant diverges"
            )
        out = []
        for m0 in range(m_max + 1):
            lam = _mp_smallest_eigenvalue(moments, m0, dps)
            if lam is None or lam <= 0:
                raise NumericalConsistencyError(
                    "concentration matrix is numerically singular; "
                    "the constant diverges"
                )
            out.append(float(1 / lam))
        return out


def spectral_constant(profile: ControlProfile, m0: int) -> float:
    """Sharp constant in ``sum |c_k|^2 <= kappa(m0) * integral |g p|^2``."""
    if m0 < 0:
        raise ParameterError("m0 must be nonnegative")
    if m0 > profile.grid.nx // 2 - 1:
        raise ParameterError(
            f"window 2*m0+1 = {2 * m0 + 1} exceeds the grid (nx={profile.grid.nx})"
        )
    import mpmath as mp

    dps = max(50, 60 + 3 * m0)
    moments = _mp_concentration_moments(profile, 2 * m0, dps)
    with mp.workdps(dps):
        lam = _mp_smallest_eigenvalue(moments, m0, dps)
        if lam is None or lam <= 0:
            raise NumericalConsistencyError(
                "concentration matrix is numerically singular; the constant diverges"
            )
        return float(1 / lam)
