"""wavekit: travelling-wave laboratory for sign-changing nonlinear diffusion.

Modules
-------
model_core
    Model family, derivatives, roots, and analytic speed thresholds.
lattice_sim
    Agent-based lattice model: mean-field map and stochastic realizations.
pde_solver
    Finite-difference runs of the continuum limit, front tracking, speed scans.
wave_analysis
    Desingularised phase plane: equilibria, shooting, wave assembly.
spectral
    Asymptotic matrices, dispersion relations, absolute spectrum, weights.
cli
    Command-line harness tying the above into reproducible experiments.
"""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = [
    "model_core",
    "lattice_sim",
    "pde_solver",
    "wave_analysis",
    "spectral",
    "cli",
    "__version__",
]
