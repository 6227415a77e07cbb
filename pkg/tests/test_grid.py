import numpy as np
import pytest

from pluritorus import GridTorus, InvalidArgumentError
from pluritorus.grid import dets, min_eigenpairs, min_eigenvalues

from oracles import hessian_loops


@pytest.mark.parametrize("sizes", [(16,), (8, 6), (4, 5, 6)])
def test_hessian_matches_loop_oracle(sizes):
    grid = GridTorus(sizes)
    rng = np.random.default_rng(3)
    u = rng.normal(size=sizes)
    np.testing.assert_allclose(grid.hessian(u), hessian_loops(grid, u),
                               rtol=0, atol=1e-12)


@pytest.mark.parametrize("sizes", [(32,), (12, 12), (6, 5, 4)])
def test_axis_telescoping_is_bit_zero(sizes):
    grid = GridTorus(sizes)
    rng = np.random.default_rng(11)
    u = rng.normal(size=sizes) * 100.0
    for axis in range(grid.dim):
        assert grid.axis_telescoping_sum(u, axis) == 0.0


def test_stencil_counts():
    for sizes in [(8,), (8, 8), (4, 4, 4)]:
        grid = GridTorus(sizes)
        d = grid.dim
        assert len(grid.axis_offsets) == d
        assert len(grid.stencil_offsets) == 2 * d + 2 * d * (d - 1)
        # all offsets are distinct and well-defined under wraparound
        assert len(set(grid.stencil_offsets)) == len(grid.stencil_offsets)


def test_grid_validation():
    with pytest.raises(InvalidArgumentError):
        GridTorus((3,))
    with pytest.raises(InvalidArgumentError):
        GridTorus((4, 4, 4, 4))
    g = GridTorus(8)
    assert g.dim == 1 and g.spacing == (0.125,) and g.cell_volume == 0.125


def test_erode_dilate_duality():
    grid = GridTorus((10, 10))
    rng = np.random.default_rng(5)
    mask = rng.random((10, 10)) > 0.4
    eroded = grid.stencil_erode(mask)
    dilated = grid.stencil_dilate(mask)
    assert np.all(eroded <= mask) and np.all(mask <= dilated)
    # erosion of the complement is the complement of dilation
    assert np.array_equal(grid.stencil_erode(~mask), ~dilated)


def test_dets_and_eigs_match_numpy():
    rng = np.random.default_rng(7)
    for d in (1, 2, 3):
        M = rng.normal(size=(40, d, d))
        M = M + np.swapaxes(M, -1, -2)
        np.testing.assert_allclose(dets(M), np.linalg.det(M), rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(min_eigenvalues(M), np.linalg.eigvalsh(M)[..., 0],
                                   rtol=1e-10, atol=1e-10)
        lam, vec = min_eigenpairs(M)
        resid = np.einsum("...ij,...j->...i", M, vec) - lam[..., None] * vec
        assert np.max(np.abs(resid)) < 1e-8
