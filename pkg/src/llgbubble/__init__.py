"""Moving-mesh simulation of equivariant Landau-Lifshitz-Gilbert blowup.

Submodules: :mod:`core` (types), :mod:`dynamics` (right-hand sides, energy),
:mod:`mesh` (monitor and mesh motion), :mod:`integrator` (time stepping),
:mod:`initialdata`, :mod:`diagnostics`, :mod:`asymptotics` and
:mod:`harness` / :mod:`cli` for batch experiments.
"""

from .core import BoundaryCondition, EulerField, LLGParams, MagnetizationField
from .integrator import IntegratorConfig, SimState, StopSpec, run_until, step
from .mesh import MeshConfig, RadialMesh

__version__ = "0.1.0"

__all__ = ["BoundaryCondition", "EulerField", "LLGParams", "MagnetizationField", "IntegratorConfig",
           "SimState", "StopSpec", "run_until", "step", "MeshConfig", "RadialMesh"]
