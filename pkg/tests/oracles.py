"""Reference implementations used only as test oracles."""

import numpy as np

from curvedenoise.grid import CurveSeries, check_same_grid


def oblique_projection(Y, psi, noise_basis):
    """Projection of ``Y`` onto ``span(psi)`` along ``span(noise_basis)``.

    Exact signal recovery when the two spans intersect only in zero.
    """
    check_same_grid(Y.grid, psi.grid, noise_basis.grid)
    w = Y.grid.weight
    F = np.vstack([psi.data, noise_basis.data])
    coef = np.linalg.solve(w * F @ F.T, w * F @ Y.data.T)
    return CurveSeries(coef[: psi.n].T @ psi.data, Y.grid)
