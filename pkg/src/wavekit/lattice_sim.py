"""Discrete two-population model: mean-field map and stochastic exclusion process.

Agents hop, proliferate and die on a 1-d lattice with at most one agent per
site.  An agent is *isolated* when both nearest-neighbour sites are vacant,
otherwise *grouped*; the two classes carry separate per-step probabilities.
The synchronous mean-field occupancy map is the discrete conservation
statement for site occupancies U_j; the stochastic simulator realizes the
same rules agent by agent with random sequential updates.  The continuum
limit map sends per-step probabilities to the rates of the
reaction-diffusion model in :mod:`wavekit.model_core`.

Boundary closure everywhere: ghost sites are vacant.  An agent that steps
off the lattice, or a daughter placed off it, is removed — the leading edge
faces empty space, matching the invasion geometry the model targets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from ._rng import derive_stream_seeds, make_state, next_below, next_uniform
from .model_core import ModelParams

__all__ = [
    "LatticeParams",
    "MeanFieldState",
    "AgentLattice",
    "mean_field_step",
    "mean_field_run",
    "stochastic_step",
    "run_realization",
    "ensemble_mean_occupancy",
    "continuum_limit_map",
    "lattice_params_from_model",
    "heaviside_occupancy",
    "occupancy_front_position",
]

# Mean-field runs clamping more than this fraction of site-updates are invalid.
CLAMP_FRACTION_LIMIT = 1e-3

# Continuum map smallness: P_p, P_d beyond this violate the O(tau) assumption.
_RATE_SMALLNESS = 0.1


@dataclass(frozen=True)
class LatticeParams:
    """Per-step probabilities and the lattice scales (delta, tau)."""

    P_m_i: float
    P_m_g: float
    P_p_i: float
    P_p_g: float
    P_d_i: float
    P_d_g: float
    delta: float
    tau: float

    def __post_init__(self) -> None:
        for name in ("P_m_i", "P_m_g", "P_p_i", "P_p_g", "P_d_i", "P_d_g"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} = {p} outside [0, 1]")
        if not self.delta > 0.0:
            raise ValueError("delta must be positive")
        if not self.tau > 0.0:
            raise ValueError("tau must be positive")


def continuum_limit_map(params: LatticeParams) -> ModelParams:
    """Rates of the continuum model: D = P_m delta^2/(2 tau), rates = P/tau.

    Warns when a proliferation or death probability exceeds 0.1: the
    continuum derivation keeps only O(tau) event probabilities per step.
    """
    big = [
        name
        for name in ("P_p_i", "P_p_g", "P_d_i", "P_d_g")
        if getattr(params, name) > _RATE_SMALLNESS
    ]
    if big:
        warnings.warn(
            f"{', '.join(big)} exceed {_RATE_SMALLNESS}; continuum map assumes "
            "O(tau) proliferation/death probabilities",
            stacklevel=2,
        )
    scale = params.delta**2 / (2.0 * params.tau)
    return ModelParams(
        D_i=params.P_m_i * scale,
        D_g=params.P_m_g * scale,
        lambda_i=params.P_p_i / params.tau,
        lambda_g=params.P_p_g / params.tau,
        K_i=params.P_d_i / params.tau,
        K_g=params.P_d_g / params.tau,
    )


def lattice_params_from_model(model: ModelParams, delta: float, tau: float) -> LatticeParams:
    """Inverse of :func:`continuum_limit_map` for fixed (delta, tau).

    Raises ValueError when a rate maps to a probability above 1; pick a
    smaller tau (or larger delta for the movement terms) in that case.
    """
    scale = 2.0 * tau / delta**2
    return LatticeParams(
        P_m_i=model.D_i * scale,
        P_m_g=model.D_g * scale,
        P_p_i=model.lambda_i * tau,
        P_p_g=model.lambda_g * tau,
        P_d_i=model.K_i * tau,
        P_d_g=model.K_g * tau,
        delta=delta,
        tau=tau,
    )


@dataclass(frozen=True)
class MeanFieldState:
    """Occupancy vector under the synchronous mean-field map.

    clamp_events / site_updates accumulate across steps; a run is valid while
    the clamped fraction stays at or below 0.1% of all site-updates.
    """

    occupancy: np.ndarray
    time: float = 0.0
    clamp_events: int = 0
    site_updates: int = 0

    def __post_init__(self) -> None:
        occ = np.asarray(self.occupancy, dtype=float)
        if occ.ndim != 1:
            raise ValueError("occupancy must be a 1-d vector")
        if occ.size < 5:
            raise ValueError("need at least 5 sites: the update stencil touches j +/- 2")
        if np.any(occ < 0.0) or np.any(occ > 1.0):
            raise ValueError("occupancies must lie in [0, 1]")
        object.__setattr__(self, "occupancy", occ)

    @property
    def clamp_fraction(self) -> float:
        return self.clamp_events / self.site_updates if self.site_updates else 0.0

    @property
    def valid(self) -> bool:
        return self.clamp_fraction <= CLAMP_FRACTION_LIMIT


def mean_field_step(state: MeanFieldState, params: LatticeParams) -> MeanFieldState:
    """One synchronous update of the mean-field occupancy map.

    Every site is updated with the full stencil; two vacant ghost sites on
    each side close the boundary.  Occupancies are clamped back to [0, 1]
    afterwards and clamping events are counted into the new state.

    Isolated-class terms carry the (1 - U) vacancy weights of both
    neighbours; the grouped class picks up the complement, so the update is
    organised as grouped-rate terms plus (P_i - P_g) isolated corrections.
    """
    U = state.occupancy
    n = U.size
    V = np.zeros(n + 4)
    V[2:-2] = U
    Um2, Um1 = V[:-4], V[1:-3]
    U0 = V[2:-2]
    Up1, Up2 = V[3:-1], V[4:]

    iso_in = Um1 * (1.0 - U0) * (1.0 - Um2) + Up1 * (1.0 - U0) * (1.0 - Up2)
    iso_out = 2.0 * U0 * (1.0 - Um1) * (1.0 - Up1)
    g_in = (Um1 + Up1) * (1.0 - U0)
    g_out = U0 * (2.0 - Um1 - Up1)

    move = 0.5 * params.P_m_g * (g_in - g_out) + 0.5 * (params.P_m_i - params.P_m_g) * (
        iso_in - iso_out
    )
    prolif = 0.5 * params.P_p_g * g_in + 0.5 * (params.P_p_i - params.P_p_g) * iso_in
    vacant_both = (1.0 - Um1) * (1.0 - Up1)
    death = params.P_d_i * U0 * vacant_both + params.P_d_g * U0 * (1.0 - vacant_both)

    new = U0 + move + prolif - death
    clamped = np.clip(new, 0.0, 1.0)
    n_clamped = int(np.count_nonzero(clamped != new))
    return MeanFieldState(
        occupancy=clamped,
        time=state.time + params.tau,
        clamp_events=state.clamp_events + n_clamped,
        site_updates=state.site_updates + n,
    )


def mean_field_run(state: MeanFieldState, params: LatticeParams, n_steps: int) -> MeanFieldState:
    for _ in range(n_steps):
        state = mean_field_step(state, params)
    return state


@dataclass(frozen=True)
class AgentLattice:
    """Exclusion-process configuration: at most one agent per site."""

    occupied: np.ndarray
    rng_seed: int
    time: int = 0  # elapsed sweeps

    def __post_init__(self) -> None:
        occ = np.ascontiguousarray(self.occupied, dtype=np.uint8)
        if occ.ndim != 1:
            raise ValueError("occupied must be a 1-d vector")
        if np.any(occ > 1):
            raise ValueError("exclusion violated: occupancy values must be 0 or 1")
        object.__setattr__(self, "occupied", occ)

    @property
    def n_agents(self) -> int:
        return int(self.occupied.sum())


@njit(cache=True, nogil=True)
def _is_isolated(occ, p):
    # missing neighbours beyond the boundary count as vacant
    n = occ.size
    left = p > 0 and occ[p - 1] == 1
    right = p < n - 1 and occ[p + 1] == 1
    return not (left or right)


@njit(cache=True, nogil=True)
def _stochastic_sweep(occ, P_m_i, P_m_g, P_p_i, P_p_g, P_d_i, P_d_g, state):
    """One random-sequential sweep, in place.

    Agents present at sweep start are visited once each in a random order;
    daughters born during the sweep wait for the next one.  Per agent the
    stages run move -> proliferation -> death, each an independent Bernoulli
    attempt with the probability of the agent's class *at attempt time*.
    """
    n = occ.size
    count = 0
    for j in range(n):
        count += occ[j]
    if count == 0:
        return
    pos = np.empty(count, np.int64)
    k = 0
    for j in range(n):
        if occ[j] == 1:
            pos[k] = j
            k += 1
    # Fisher-Yates
    for i in range(count - 1, 0, -1):
        j = np.int64(next_below(state, np.uint64(i + 1)))
        tmp = pos[i]
        pos[i] = pos[j]
        pos[j] = tmp

    for t in range(count):
        p = pos[t]
        # move
        pm = P_m_i if _is_isolated(occ, p) else P_m_g
        if next_uniform(state) < pm:
            q = p - 1 if next_uniform(state) < 0.5 else p + 1
            if q < 0 or q >= n:
                occ[p] = 0  # stepped off the lattice
                continue
            if occ[q] == 0:
                occ[p] = 0
                occ[q] = 1
                p = q
        # proliferation
        pp = P_p_i if _is_isolated(occ, p) else P_p_g
        if next_uniform(state) < pp:
            q = p - 1 if next_uniform(state) < 0.5 else p + 1
            if 0 <= q < n and occ[q] == 0:
                occ[q] = 1
        # death
        pd = P_d_i if _is_isolated(occ, p) else P_d_g
        if next_uniform(state) < pd:
            occ[p] = 0


def stochastic_step(lattice: AgentLattice, params: LatticeParams, rng: np.ndarray) -> AgentLattice:
    """One sweep of random sequential updates; returns the new configuration.

    `rng` is a length-1 uint64 state vector (see :func:`wavekit._rng.make_state`);
    it advances in place so consecutive calls continue one stream.
    """
    occ = lattice.occupied.copy()
    _stochastic_sweep(
        occ,
        params.P_m_i,
        params.P_m_g,
        params.P_p_i,
        params.P_p_g,
        params.P_d_i,
        params.P_d_g,
        rng,
    )
    return replace(lattice, occupied=occ, time=lattice.time + 1)


def run_realization(lattice: AgentLattice, params: LatticeParams, n_steps: int) -> AgentLattice:
    """Run one realization for n_steps sweeps, stream seeded from lattice.rng_seed."""
    rng = make_state(lattice.rng_seed)
    occ = lattice.occupied.copy()
    for _ in range(n_steps):
        _stochastic_sweep(
            occ,
            params.P_m_i,
            params.P_m_g,
            params.P_p_i,
            params.P_p_g,
            params.P_d_i,
            params.P_d_g,
            rng,
        )
    return replace(lattice, occupied=occ, time=lattice.time + n_steps)


def ensemble_mean_occupancy(
    occupied0: np.ndarray,
    params: LatticeParams,
    n_realizations: int,
    snapshot_steps: list[int],
    master_seed: int,
):
    """Column-averaged occupancy over an ensemble of realizations.

    All realizations start from the same configuration; realization k runs on
    an independent stream seeded by splitmix64 substream k of master_seed.

    Returns
    -------
    steps : int array, the sorted snapshot sweep counts
    mean : (len(steps), n_sites) array of mean occupancy
    stderr : matching standard errors of the mean
    """
    occupied0 = np.ascontiguousarray(occupied0, dtype=np.uint8)
    steps = sorted(set(int(s) for s in snapshot_steps))
    if steps and steps[0] < 0:
        raise ValueError("snapshot steps must be nonnegative")
    seeds = derive_stream_seeds(master_seed, n_realizations)
    n_sites = occupied0.size
    acc = np.zeros((len(steps), n_sites))
    acc2 = np.zeros((len(steps), n_sites))
    for k in range(n_realizations):
        rng = make_state(int(seeds[k]))
        occ = occupied0.copy()
        done = 0
        for si, s in enumerate(steps):
            for _ in range(s - done):
                _stochastic_sweep(
                    occ,
                    params.P_m_i,
                    params.P_m_g,
                    params.P_p_i,
                    params.P_p_g,
                    params.P_d_i,
                    params.P_d_g,
                    rng,
                )
            done = s
            acc[si] += occ
            acc2[si] += occ  # occupancies are 0/1 so occ**2 == occ
    mean = acc / n_realizations
    var = np.maximum(acc2 / n_realizations - mean**2, 0.0)
    stderr = np.sqrt(var / n_realizations)
    return np.asarray(steps), mean, stderr


def heaviside_occupancy(n_sites: int, n_filled: int) -> np.ndarray:
    """Deterministic step data: the leftmost n_filled sites occupied."""
    occ = np.zeros(n_sites, dtype=np.uint8)
    occ[: min(n_filled, n_sites)] = 1
    return occ


def occupancy_front_position(x: np.ndarray, profile: np.ndarray, level: float = 0.5):
    """Rightmost downward crossing of `level`, linearly interpolated.

    Mean occupancy profiles are noisy near zero, so fronts are read at the
    half-occupancy level rather than at a leading-edge threshold.  Returns
    NaN when the profile never crosses.
    """
    above = profile >= level
    idx = np.nonzero(above[:-1] & ~above[1:])[0]
    if idx.size == 0:
        return float("nan")
    k = idx[-1]
    y0, y1 = profile[k], profile[k + 1]
    if y1 == y0:
        return float(x[k])
    return float(x[k] + (level - y0) / (y1 - y0) * (x[k + 1] - x[k]))
