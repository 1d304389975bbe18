import numpy as np
import pytest

from logbound import (BallDomain, ConstantPotential, Field, Grid,
                      PenaltyConfig, ProblemSpec)


@pytest.fixture(scope="session")
def grid_1d():
    return Grid(mode="full", dim=1, n=2049, half_width=12.0)


@pytest.fixture(scope="session")
def pure_log_spec():
    """Constant potential 2 with a huge truncation ball: fields supported in
    |y| <= 2.4 see only the plain log functional."""
    cfg = PenaltyConfig(eps=1.0, r0=5.0, omega=BallDomain(2.5), gauge_c=0.0)
    grid = Grid(mode="full", dim=1, n=513, half_width=10.0)
    return ProblemSpec(potential=ConstantPotential(2.0), cfg=cfg, grid=grid)


def bump_field(grid, center=0.0, width=1.0, amplitude=1.0, hard_cut=None):
    d2 = np.sum((grid.points - center) ** 2, axis=1)
    vals = amplitude * np.exp(-0.5 * d2 / width**2)
    if hard_cut is not None:
        vals[np.sqrt(d2) > hard_cut] = 0.0
    return Field(grid, vals)
