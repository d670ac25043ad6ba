"""Shared fixtures: kernel warmup and common quadrature specifications."""

import numpy as np
import pytest

from gaussjn import kernels
from gaussjn.fields import QuadratureSpec


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile (or no-op) the numerical kernels once per session.

    Keeps JIT compilation out of individual test timings, in particular out
    of the acceptance-suite runtime budgets.
    """
    kernels.warmup()


@pytest.fixture(scope="session")
def spec() -> QuadratureSpec:
    return QuadratureSpec()


@pytest.fixture(scope="session")
def spec_deep() -> QuadratureSpec:
    """Extra refinement headroom for integrands with fractional-power kinks."""
    return QuadratureSpec(nodes_per_axis=8, refinement_levels=14, abs_tol=1e-9)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
