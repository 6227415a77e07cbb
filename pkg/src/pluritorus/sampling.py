"""Seeded random fields used by the probes and estimators.

All samplers draw from a caller-provided ``numpy.random.Generator`` in a
fixed iteration order, so a seed pins every output bit-for-bit.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .errors import SamplingExhaustedError
from .grid import GridTorus, min_eigenvalues
from .qpsh import QPshFunction
from .tolerances import DEFAULT_TOLS, Tolerances


def fourier_field(grid: GridTorus, rng: np.random.Generator,
                  max_mode: int = 2, amplitude: float = 1.0,
                  decay: float = 2.0) -> np.ndarray:
    """Band-limited random periodic field with decaying mode amplitudes."""
    coords = grid.coordinates()
    u = grid.field(0.0)
    for k in product(range(-max_mode, max_mode + 1), repeat=grid.dim):
        if all(c == 0 for c in k):
            continue
        scale = amplitude / (1.0 + float(sum(c * c for c in k))) ** (decay / 2.0)
        a, b = rng.normal(0.0, scale, size=2)
        phase = 2.0 * np.pi * sum(c * x for c, x in zip(k, coords))
        u += a * np.cos(phase) + b * np.sin(phase)
    return u


def convexify_against(grid: GridTorus, u: np.ndarray, base: np.ndarray,
                      bisect_steps: int = 60) -> np.ndarray:
    """Largest scaling s*u (s in [0,1]) that keeps base + D^2(s*u) PSD.

    The minimal eigenvalue is concave in s and strictly positive at s = 0
    (the base must be positive definite), so bisection on s keeps the
    returned field exactly feasible.
    """
    H = grid.hessian(u)

    def feasible(s: float) -> bool:
        return bool(np.min(min_eigenvalues(base + s * H)) >= 0.0)

    if feasible(1.0):
        return u.copy()
    lo, hi = 0.0, 1.0
    for _ in range(bisect_steps):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo * u


def convexify(grid: GridTorus, u: np.ndarray, metric, c_bound: float,
              bisect_steps: int = 60) -> np.ndarray:
    """Largest scaling of u keeping c_bound*W + D^2(s*u) PSD."""
    return convexify_against(grid, u, c_bound * metric.W, bisect_steps)


def _sample_against(grid, rng, base, amplitude, max_mode, max_retries):
    for _ in range(max_retries):
        raw = fourier_field(grid, rng, max_mode=max_mode, amplitude=1.0)
        peak = float(np.max(np.abs(raw)))
        if peak == 0.0:
            continue
        u = convexify_against(grid, (amplitude / peak) * raw, base)
        if float(np.max(np.abs(u))) > 0.0:
            return QPshFunction(grid, u)
    raise SamplingExhaustedError("could not sample an admissible potential")


def sample_convex_potential(grid: GridTorus, rng: np.random.Generator, metric,
                            c_bound: float = 1.0, amplitude: float = 0.5,
                            max_mode: int = 2, max_retries: int = 50,
                            tols: Tolerances = DEFAULT_TOLS) -> QPshFunction:
    """A random pole-free potential u with c_bound*W + D^2 u PSD."""
    return _sample_against(grid, rng, c_bound * metric.W, amplitude, max_mode, max_retries)


def sample_admissible_potential(grid: GridTorus, rng: np.random.Generator, form,
                                amplitude: float = 0.5, max_mode: int = 2,
                                max_retries: int = 50) -> QPshFunction:
    """A random pole-free potential u with G + D^2 u PSD (G must be PD)."""
    if float(np.min(min_eigenvalues(form.G))) <= 0.0:
        raise SamplingExhaustedError("form is not pointwise positive definite")
    return _sample_against(grid, rng, form.G, amplitude, max_mode, max_retries)


def random_pole_mask(grid: GridTorus, rng: np.random.Generator, count: int) -> np.ndarray:
    """Boolean mask with ``count`` distinct pole nodes."""
    count = min(int(count), grid.node_count - 1)
    mask = np.zeros(grid.node_count, dtype=bool)
    if count > 0:
        picks = rng.choice(grid.node_count, size=count, replace=False)
        mask[picks] = True
    return mask.reshape(grid.sizes)


def with_poles(u: QPshFunction, mask: np.ndarray) -> QPshFunction:
    """Copy of ``u`` with poles added on ``mask``."""
    vals = u.values.copy()
    vals[mask] = -np.inf
    return QPshFunction(u.grid, vals)
