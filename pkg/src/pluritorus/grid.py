"""Periodic lattice model of the flat d-torus and its discrete Hessian.

The torus [0,1)^d is sampled on a uniform grid with N_k nodes and spacing
h_k = 1/N_k along axis k.  Node fields are float64 arrays of shape
``sizes`` in row-major order; wraparound indexing makes every stencil
well defined.  The discrete Hessian uses central second differences on
the diagonal and the 4-point centered formula for cross terms, so each
entry telescopes exactly over the torus.
"""

from __future__ import annotations

import math
from functools import cached_property
from itertools import combinations

import numpy as np

from .errors import InvalidArgumentError

Offset = tuple  # integer offset vector, one entry per axis


class GridTorus:
    """Uniform periodic grid on the flat torus, d in {1, 2, 3}.

    Parameters
    ----------
    sizes : int or sequence of int
        Number of nodes along each axis; every entry must be >= 4 so
        that each node has two distinct neighbors per axis.
    """

    def __init__(self, sizes):
        if np.isscalar(sizes):
            sizes = (sizes,)
        sizes = tuple(int(n) for n in sizes)
        if len(sizes) not in (1, 2, 3):
            raise InvalidArgumentError(f"dimension must be 1, 2 or 3, got {len(sizes)}")
        if any(n < 4 for n in sizes):
            raise InvalidArgumentError(f"every axis needs at least 4 nodes, got {sizes}")
        self.sizes = sizes
        self.dim = len(sizes)
        self.spacing = tuple(1.0 / n for n in sizes)
        self.node_count = int(np.prod(sizes))
        self.cell_volume = float(np.prod(self.spacing))

    def __repr__(self):
        return f"GridTorus(sizes={self.sizes})"

    def __eq__(self, other):
        return isinstance(other, GridTorus) and self.sizes == other.sizes

    def __hash__(self):
        return hash(self.sizes)

    # -- field helpers -------------------------------------------------

    def field(self, value=0.0) -> np.ndarray:
        """A float64 node field filled with ``value`` (or broadcast from it)."""
        return np.broadcast_to(np.asarray(value, dtype=float), self.sizes).copy()

    def as_field(self, values) -> np.ndarray:
        """Coerce scalars/arrays to a float64 field of shape ``sizes``."""
        arr = np.asarray(values, dtype=float)
        if arr.shape == ():
            return self.field(float(arr))
        if arr.shape == (self.node_count,):
            arr = arr.reshape(self.sizes)
        if arr.shape != self.sizes:
            raise InvalidArgumentError(f"field shape {arr.shape} does not match grid {self.sizes}")
        return arr.copy()

    def coordinates(self):
        """Node coordinates, one meshgrid array per axis (ij indexing)."""
        axes = [np.arange(n) / n for n in self.sizes]
        return np.meshgrid(*axes, indexing="ij")

    def shift(self, arr: np.ndarray, offset) -> np.ndarray:
        """Field of values ``arr(x + offset)`` with periodic wraparound."""
        out = arr
        for axis, step in enumerate(offset):
            if step:
                out = np.roll(out, -step, axis=axis)
        return out

    # -- stencil geometry ----------------------------------------------

    def unit_offset(self, axis: int) -> Offset:
        off = [0] * self.dim
        off[axis] = 1
        return tuple(off)

    @cached_property
    def axis_offsets(self):
        return tuple(self.unit_offset(k) for k in range(self.dim))

    @cached_property
    def pair_offsets(self):
        """One representative per diagonal direction: e_i + e_j and e_i - e_j."""
        offs = []
        for i, j in combinations(range(self.dim), 2):
            plus = [0] * self.dim
            plus[i], plus[j] = 1, 1
            minus = [0] * self.dim
            minus[i], minus[j] = 1, -1
            offs.append(tuple(plus))
            offs.append(tuple(minus))
        return tuple(offs)

    @cached_property
    def convexity_directions(self):
        """Direction representatives used by directional convexity: axes then diagonals."""
        return self.axis_offsets + self.pair_offsets

    @cached_property
    def stencil_offsets(self):
        """All nonzero offsets touched by the discrete Hessian (2d + 2d(d-1))."""
        offs = []
        for off in self.convexity_directions:
            offs.append(off)
            offs.append(tuple(-o for o in off))
        return tuple(offs)

    def physical_vector(self, offset) -> np.ndarray:
        return np.array([o * h for o, h in zip(offset, self.spacing)], dtype=float)

    # -- discrete Hessian ------------------------------------------------

    def hessian(self, u: np.ndarray) -> np.ndarray:
        """Discrete Hessian field, shape ``sizes + (d, d)``.

        Diagonal entries are central second differences; off-diagonal
        entries use the 4-point centered cross formula
        ``(u(x+e_i+e_j) + u(x-e_i-e_j) - u(x+e_i-e_j) - u(x-e_i+e_j)) / (4 h_i h_j)``.
        """
        u = np.asarray(u, dtype=float)
        d = self.dim
        H = np.empty(self.sizes + (d, d), dtype=float)
        for k in range(d):
            e = self.unit_offset(k)
            hk2 = self.spacing[k] ** 2
            H[..., k, k] = (self.shift(u, e) + self.shift(u, tuple(-o for o in e)) - 2.0 * u) / hk2
        for i, j in combinations(range(d), 2):
            pp = [0] * d
            pp[i], pp[j] = 1, 1
            pm = [0] * d
            pm[i], pm[j] = 1, -1
            pp, pm = tuple(pp), tuple(pm)
            mm = tuple(-o for o in pp)
            mp = tuple(-o for o in pm)
            denom = 4.0 * self.spacing[i] * self.spacing[j]
            cross = (self.shift(u, pp) + self.shift(u, mm) - self.shift(u, pm) - self.shift(u, mp)) / denom
            H[..., i, j] = cross
            H[..., j, i] = cross
        return H

    def hessian_adjoint(self, S: np.ndarray) -> np.ndarray:
        """Adjoint of the Hessian map applied to a symmetric matrix field.

        Each stencil is symmetric, hence self-adjoint on the torus, so the
        adjoint applies the same scalar stencils to the matrix entries and
        sums (off-diagonal entries count twice).
        """
        d = self.dim
        out = np.zeros(self.sizes, dtype=float)
        for k in range(d):
            e = self.unit_offset(k)
            hk2 = self.spacing[k] ** 2
            s = S[..., k, k]
            out += (self.shift(s, e) + self.shift(s, tuple(-o for o in e)) - 2.0 * s) / hk2
        for i, j in combinations(range(d), 2):
            pp = [0] * d
            pp[i], pp[j] = 1, 1
            pm = [0] * d
            pm[i], pm[j] = 1, -1
            pp, pm = tuple(pp), tuple(pm)
            mm = tuple(-o for o in pp)
            mp = tuple(-o for o in pm)
            denom = 4.0 * self.spacing[i] * self.spacing[j]
            s = S[..., i, j]
            out += 2.0 * (self.shift(s, pp) + self.shift(s, mm) - self.shift(s, pm) - self.shift(s, mp)) / denom
        return out

    def axis_telescoping_sum(self, u: np.ndarray, axis: int) -> float:
        """Exact sum over nodes of the axis second difference (times h^2).

        Computed with exact float summation over the three shifted copies,
        so the result is bit-level 0.0 for every periodic field.
        """
        u = np.asarray(u, dtype=float)
        e = self.unit_offset(axis)
        parts = np.concatenate([
            self.shift(u, e).ravel(),
            self.shift(u, tuple(-o for o in e)).ravel(),
            (-2.0 * u).ravel(),
        ])
        return math.fsum(parts.tolist())

    # -- masks -----------------------------------------------------------

    def stencil_erode(self, mask: np.ndarray) -> np.ndarray:
        """Nodes whose full Hessian stencil (node included) lies in ``mask``."""
        out = mask.copy()
        for off in self.stencil_offsets:
            out &= self.shift(mask, off)
        return out

    def stencil_dilate(self, mask: np.ndarray) -> np.ndarray:
        """``mask`` together with all stencil neighbors of its nodes."""
        out = mask.copy()
        for off in self.stencil_offsets:
            out |= self.shift(mask, off)
        return out

    # -- flat index tables (used by sweep kernels) -----------------------

    def flat_neighbor_tables(self, offsets):
        """Flattened neighbor index tables ``(plus, minus)`` for the offsets.

        ``plus[m, k]`` is the row-major index of node k shifted by
        ``offsets[m]``; ``minus`` shifts the opposite way.
        """
        idx = np.arange(self.node_count).reshape(self.sizes)
        plus = np.stack([self.shift(idx, off).ravel() for off in offsets])
        minus = np.stack([self.shift(idx, tuple(-o for o in off)).ravel() for off in offsets])
        return plus.astype(np.int64), minus.astype(np.int64)


# -- small symmetric matrix fields ----------------------------------------


def dets(M: np.ndarray) -> np.ndarray:
    """Determinant field of a stacked symmetric d x d matrix field, d <= 3."""
    d = M.shape[-1]
    if d == 1:
        return M[..., 0, 0].copy()
    if d == 2:
        return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    if d == 3:
        a, b, c = M[..., 0, 0], M[..., 0, 1], M[..., 0, 2]
        e, f = M[..., 1, 1], M[..., 1, 2]
        i = M[..., 2, 2]
        return a * (e * i - f * f) - b * (b * i - f * c) + c * (b * f - e * c)
    raise InvalidArgumentError(f"unsupported matrix size {d}")


def min_eigenvalues(M: np.ndarray) -> np.ndarray:
    """Smallest-eigenvalue field of a stacked symmetric matrix field."""
    d = M.shape[-1]
    if d == 1:
        return M[..., 0, 0].copy()
    if d == 2:
        a, b, c = M[..., 0, 0], M[..., 0, 1], M[..., 1, 1]
        half_tr = 0.5 * (a + c)
        radius = np.sqrt((0.5 * (a - c)) ** 2 + b * b)
        return half_tr - radius
    if d == 3:
        return np.linalg.eigvalsh(M)[..., 0]
    raise InvalidArgumentError(f"unsupported matrix size {d}")


def min_eigenpairs(M: np.ndarray):
    """Smallest eigenvalue and a unit eigenvector per node (d <= 3)."""
    d = M.shape[-1]
    if d == 1:
        lam = M[..., 0, 0].copy()
        vec = np.ones(M.shape[:-2] + (1,), dtype=float)
        return lam, vec
    if d == 2:
        a, b, c = M[..., 0, 0], M[..., 0, 1], M[..., 1, 1]
        lam = min_eigenvalues(M)
        # (M - lam I) v = 0; pick the more stable of the two row solutions
        v1 = np.stack([b, lam - a], axis=-1)
        v2 = np.stack([lam - c, b], axis=-1)
        n1 = np.linalg.norm(v1, axis=-1)
        n2 = np.linalg.norm(v2, axis=-1)
        use1 = (n1 >= n2)[..., None]
        v = np.where(use1, v1, v2)
        norm = np.linalg.norm(v, axis=-1)[..., None]
        fallback = np.zeros_like(v)
        fallback[..., 0] = 1.0
        v = np.where(norm > 0, v / np.where(norm > 0, norm, 1.0), fallback)
        return lam, v
    if d == 3:
        w, vecs = np.linalg.eigh(M)
        return w[..., 0], vecs[..., :, 0]
    raise InvalidArgumentError(f"unsupported matrix size {d}")
