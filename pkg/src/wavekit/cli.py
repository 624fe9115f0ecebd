"""Command-line harness: reproducible experiment recipes over the library.

Five subcommands map onto the library layers: ``simulate-pde`` (evolve +
front tracking), ``phase-plane`` (classification, certificates, shooting,
assembly), ``spectrum`` (dispersion curves, weights, verdict), ``lattice``
(mean-field map, stochastic realizations, ensembles), and ``speed-scan``
(front speed vs initial steepness).  Every run writes into one output
directory: the resolved configuration (config.json), the data files (.dat /
.csv / .json), and a manifest listing each emitted file with its sha256.
Re-running a config with the same seed reproduces the data files byte for
byte; the manifest differs only in its wall-clock entry.

Configuration is a flat key-value record.  Values resolve in order
defaults < --config file < explicit command-line flags; the output directory
additionally honours the WAVEKIT_OUT environment variable (flag beats env
beats file).  The config hash excludes ``outdir`` and ``jobs``, which cannot
affect the numbers, so relocated or reparallelised reruns of the same
experiment hash identically.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from ._emit import dumps_json, fmt, sha256_file, sha256_text, write_csv, write_dat, write_json
from .lattice_sim import (
    AgentLattice,
    LatticeParams,
    MeanFieldState,
    ensemble_mean_occupancy,
    heaviside_occupancy,
    lattice_params_from_model,
    mean_field_run,
    occupancy_front_position,
    run_realization,
)
from .model_core import (
    DiffusivityProfile,
    KineticProfile,
    ModelParams,
    min_wave_speed,
)
from .pde_solver import (
    BlowUpError,
    Grid1D,
    InitialCondition,
    NoFrontError,
    aggregate_scan,
    evolve,
    speed_vs_eta_scan,
    track_front,
)
from .spectral import build_spectrum_report, weighted_intersections
from .wave_analysis import (
    NoWaveConnectionError,
    assemble_wave,
    classify_equilibria,
    region_certificates,
    shoot_segment,
    slope_comparisons,
    SEGMENT_IDS,
)

__all__ = [
    "ExperimentConfig",
    "RunManifest",
    "cmd_simulate_pde",
    "cmd_phase_plane",
    "cmd_spectrum",
    "cmd_lattice",
    "cmd_speed_scan",
    "verify_manifest",
    "main",
]

_CHOICES = {
    "D_kind": ("rates", "general"),
    "ic": ("heaviside", "tanh"),
    "fit_window": ("tail", "full"),
    "mode": ("mean-field", "stochastic", "ensemble"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat, fully serialisable record of one experiment.

    Defaults reproduce the reference setup: the (0.25, 0.05, 0.75) rates on
    the [0, 100] grid with dx = 0.1, dt = 0.01 to t = 50, Heaviside data
    jumping at x = 40, and 101 stored snapshots with a full-series speed
    fit.  ``D_kind = "general"`` switches to the explicit quadratic
    diffusivity (u - root1)(u - root2) with logistic kinetics at ``lam``.
    """

    command: str = ""
    # model
    D_i: float = 0.25
    D_g: float = 0.05
    lam: float = 0.75
    D_kind: str = "rates"
    root1: float = 0.1
    root2: float = 0.3
    # space-time grid
    x0: float = 0.0
    x1: float = 100.0
    dx: float = 0.1
    dt: float = 0.01
    t_end: float = 50.0
    # initial data and front tracking
    ic: str = "heaviside"
    x_jump: float = 40.0
    eta: float = 1.0
    snapshots: int = 101
    clamp: bool = True
    fit_window: str = "full"
    threshold: float = 1e-5
    # travelling-wave speed (phase-plane, spectrum)
    c: float = 0.8660254037844386
    # spectrum options (NaN means "module default")
    nu: float = float("nan")
    k_max: float = float("nan")
    k_points: int = 801
    scan_nu: str = ""
    # speed-scan options
    etas: tuple = (0.5, 1.0, 2.0, 5.0, 10.0)
    # lattice options (occ0 set: uniform initial occupancy; NaN: block fill)
    mode: str = "mean-field"
    sites: int = 200
    filled: int = 40
    occ0: float = float("nan")
    delta: float = 1.0
    tau: float = 0.25
    sweeps: int = 400
    runs: int = 20
    samples: int = 5
    # plumbing
    seed: int = 20240801
    jobs: int = 1
    outdir: str = "wavekit-out"

    def __post_init__(self) -> None:
        for name, allowed in _CHOICES.items():
            if getattr(self, name) not in allowed:
                raise ValueError(f"{name} must be one of {allowed}")
        if self.snapshots < 2:
            raise ValueError("snapshots must be at least 2")
        if not self.etas:
            raise ValueError("etas must be nonempty")
        if not math.isnan(self.occ0) and not 0.0 <= self.occ0 <= 1.0:
            raise ValueError("occ0 must lie in [0, 1]")

    def __eq__(self, other):
        """Field-wise equality with NaN sentinels comparing equal to themselves."""
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        for f in dataclasses.fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
                continue
            if a != b:
                return False
        return True

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["etas"] = list(self.etas)
        return d

    @classmethod
    def from_dict(cls, values: dict) -> "ExperimentConfig":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {}
        for name, value in values.items():
            f = known[name]
            if name == "etas":
                kwargs[name] = tuple(float(e) for e in value)
            elif f.type == "float":
                kwargs[name] = float(value)
            elif f.type == "int":
                kwargs[name] = int(value)
            elif f.type == "bool":
                kwargs[name] = bool(value)
            else:
                kwargs[name] = str(value)
        return cls(**kwargs)

    def canonical_hash(self) -> str:
        """sha256 of the config minus outdir/jobs, which cannot move numbers."""
        d = self.to_dict()
        d.pop("outdir")
        d.pop("jobs")
        return sha256_text(dumps_json(d))


@dataclass(frozen=True)
class RunManifest:
    """Ledger of one run: what produced it, what it wrote, what it found."""

    command: str
    config_hash: str
    artifact_version: str
    wall_clock_s: float
    files: tuple
    results: dict

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config_hash": self.config_hash,
            "artifact_version": self.artifact_version,
            "wall_clock_s": self.wall_clock_s,
            "files": list(self.files),
            "results": self.results,
        }

    @classmethod
    def from_file(cls, path: str) -> "RunManifest":
        with open(path) as fh:
            d = json.load(fh)
        return cls(
            command=d["command"],
            config_hash=d["config_hash"],
            artifact_version=d["artifact_version"],
            wall_clock_s=d["wall_clock_s"],
            files=tuple(d["files"]),
            results=d["results"],
        )


def verify_manifest(outdir: str) -> bool:
    """Recompute checksums of every file a manifest lists; raise on mismatch."""
    manifest = RunManifest.from_file(os.path.join(outdir, "manifest.json"))
    bad = []
    for record in manifest.files:
        path = os.path.join(outdir, record["path"])
        if not os.path.exists(path):
            bad.append(f"{record['path']}: missing")
        elif sha256_file(path) != record["sha256"]:
            bad.append(f"{record['path']}: checksum mismatch")
    if bad:
        raise ValueError("manifest verification failed: " + "; ".join(bad))
    return True


class _OutputDir:
    """Collects emitted files and their checksums for the manifest."""

    def __init__(self, outdir: str):
        os.makedirs(outdir, exist_ok=True)
        self.outdir = outdir
        self.records: list[dict] = []

    def _done(self, name: str) -> None:
        self.records.append({"path": name, "sha256": sha256_file(os.path.join(self.outdir, name))})

    def dat(self, name: str, names, columns) -> None:
        write_dat(os.path.join(self.outdir, name), names, columns)
        self._done(name)

    def csv(self, name: str, names, columns) -> None:
        write_csv(os.path.join(self.outdir, name), names, columns)
        self._done(name)

    def json(self, name: str, obj) -> None:
        write_json(os.path.join(self.outdir, name), obj)
        self._done(name)


def _finish(config: ExperimentConfig, out: _OutputDir, results: dict, t0: float) -> RunManifest:
    manifest = RunManifest(
        command=config.command,
        config_hash=config.canonical_hash(),
        artifact_version=__version__,
        wall_clock_s=time.perf_counter() - t0,
        files=tuple(out.records),
        results=results,
    )
    write_json(os.path.join(out.outdir, "manifest.json"), manifest.to_dict())
    return manifest


def _model_and_kin(config: ExperimentConfig):
    if config.D_kind == "rates":
        return ModelParams.logistic(config.D_i, config.D_g, config.lam), None
    profile = DiffusivityProfile.from_roots(config.root1, config.root2)
    return profile, KineticProfile.logistic(config.lam)


def _grid(config: ExperimentConfig) -> Grid1D:
    n_steps = int(round(config.t_end / config.dt))
    return Grid1D(x0=config.x0, x1=config.x1, dx=config.dx, dt=config.dt, n_steps=n_steps)


def _ic(config: ExperimentConfig) -> InitialCondition:
    if config.ic == "heaviside":
        return InitialCondition.heaviside(config.x_jump)
    return InitialCondition.tanh_front(config.eta, config.x_jump)


def _snapshot_times(config: ExperimentConfig) -> np.ndarray:
    return np.linspace(0.0, config.t_end, config.snapshots)


def cmd_simulate_pde(config: ExperimentConfig) -> RunManifest:
    """Evolve the initial data, track the front, emit snapshots and the trace."""
    t0 = time.perf_counter()
    model, kin = _model_and_kin(config)
    out = _OutputDir(config.outdir)
    out.json("config.json", config.to_dict())
    traj = evolve(
        model,
        _grid(config),
        _ic(config),
        kin=kin,
        snapshot_times=_snapshot_times(config),
        clamp=config.clamp,
    )
    trace = track_front(traj, config.threshold, fit_window=config.fit_window)
    names = ["x"] + [f"u_t{t:g}" for t in traj.times]
    out.dat("snapshots.dat", names, [traj.x] + list(traj.snapshots))
    out.dat("front_trace.dat", ["t", "L"], [trace.t, trace.L])
    results = {
        "speed": trace.speed,
        "fit_residual": trace.fit_residual,
        "fit_window": list(trace.fit_window),
        "converged": trace.converged,
        "stability_ratio": traj.stability_ratio,
        "clamp_events": traj.clamp_events,
        "max_overshoot": traj.max_overshoot,
    }
    return _finish(config, out, results, t0)


def _equilibrium_dict(eq) -> dict:
    return {
        "u": eq.location.u,
        "p": eq.location.p,
        "kind": eq.kind,
        "eigenvalues": [[z.real, z.imag] for z in eq.eigenvalues],
        "eigenvectors": [[[complex(z).real, complex(z).imag] for z in v] for v in eq.eigenvectors],
    }


def cmd_phase_plane(config: ExperimentConfig) -> RunManifest:
    """Classify equilibria, certify regions, shoot segments, assemble the wave."""
    t0 = time.perf_counter()
    model, kin = _model_and_kin(config)
    c = config.c
    out = _OutputDir(config.outdir)
    out.json("config.json", config.to_dict())

    equilibria = classify_equilibria(model, c, kin=kin)
    certificates = region_certificates(model, c, kin=kin)
    slopes = slope_comparisons(model, c, kin=kin)
    out.json(
        "analysis.json",
        {
            "equilibria": {name: _equilibrium_dict(eq) for name, eq in equilibria.items()},
            "certificates": [
                {"region": r.region_id, "mu": r.mu, "margin": r.margin, "valid": r.valid}
                for r in certificates
            ],
            "slope_comparisons": [
                {
                    "u0": e.u0,
                    "lambda_plus": [e.lambda_plus.real, e.lambda_plus.imag],
                    "chi": e.chi,
                    "difference": e.difference,
                }
                for e in slopes.entries
            ],
            "all_slopes_negative": slopes.all_negative,
        },
    )

    segments: dict[str, str] = {}
    for seg in SEGMENT_IDS:
        try:
            orbit = shoot_segment(model, c, seg, kin=kin)
        except Exception as exc:  # per-segment reporting, scan continues
            segments[seg] = f"error: {exc}"
            continue
        out.dat(f"orbit_{seg}.dat", ["xi", "u", "p"], [orbit.xi, orbit.u, orbit.p])
        flag = ", entered spiral" if orbit.entered_spiral else ""
        segments[seg] = f"ok: endpoint_error={orbit.endpoint_error:.3e}{flag}"

    try:
        wave = assemble_wave(model, c, kin=kin)
        regime = wave.regime
        diagnostic = ""
        out.dat("profile.dat", ["z", "u", "dudz"], [wave.z, wave.u, wave.dudz])
    except NoWaveConnectionError as exc:
        regime = "NoWaveConnection"
        diagnostic = str(exc)

    results = {
        "c": c,
        "regime": regime,
        "diagnostic": diagnostic,
        "segments": segments,
        "equilibrium_kinds": {name: eq.kind for name, eq in equilibria.items()},
        "certificate_margins": {r.region_id: r.margin for r in certificates},
        "all_slopes_negative": slopes.all_negative,
    }
    return _finish(config, out, results, t0)


def _parse_span(text: str) -> np.ndarray:
    try:
        lo_s, hi_s, step_s = text.split(":")
        lo, hi, step = float(lo_s), float(hi_s), float(step_s)
    except ValueError as exc:
        raise ValueError(f"expected lo:hi:step, got {text!r}") from exc
    if not step > 0.0 or not hi > lo:
        raise ValueError(f"need hi > lo and step > 0 in {text!r}")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


def cmd_spectrum(config: ExperimentConfig) -> RunManifest:
    """Emit the spectrum report, dispersion tables, and an optional nu scan."""
    t0 = time.perf_counter()
    model, kin = _model_and_kin(config)
    out = _OutputDir(config.outdir)
    out.json("config.json", config.to_dict())
    k_grid = None
    if not math.isnan(config.k_max):
        k_grid = np.linspace(-config.k_max, config.k_max, config.k_points)
    nu = None if math.isnan(config.nu) else config.nu
    report = build_spectrum_report(model, config.c, kin=kin, k_grid=k_grid, nu=nu)
    out.json("spectrum.json", report.to_dict())
    for name, curve in (
        ("dispersion_plus.dat", report.dispersion_plus),
        ("dispersion_minus.dat", report.dispersion_minus),
    ):
        out.dat(name, ["k", "re_lambda", "im_lambda"], [curve.k, curve.lam.real, curve.lam.imag])
    results = {
        "c": config.c,
        "verdict": report.verdict,
        "K_plus": report.K_plus,
        "K_minus": report.K_minus,
        "K_plus_nu": report.K_plus_nu,
        "K_minus_nu": report.K_minus_nu,
        "ideal_weight": report.ideal_weight,
        "weight_range_kind": report.weight_range.kind,
    }
    if config.scan_nu:
        nus = _parse_span(config.scan_nu)
        table = [weighted_intersections(model, config.c, float(v), kin=kin) for v in nus]
        kpn = np.array([row[0] for row in table])
        kmn = np.array([row[1] for row in table])
        out.dat("nu_scan.dat", ["nu", "K_plus_nu", "K_minus_nu"], [nus, kpn, kmn])
        best = int(np.argmin(kpn))
        results["nu_scan_argmin"] = float(nus[best])
        results["nu_scan_min"] = float(kpn[best])
    return _finish(config, out, results, t0)


def _fit_speed(times: np.ndarray, positions: np.ndarray) -> float:
    """Least-squares slope over the last half of the finite samples."""
    good = np.isfinite(positions)
    t, L = times[good], positions[good]
    if t.size < 2:
        return float("nan")
    half = t.size // 2 if t.size > 3 else 0
    return float(np.polyfit(t[half:], L[half:], 1)[0])


def cmd_lattice(config: ExperimentConfig) -> RunManifest:
    """Mean-field map, one stochastic realization, or an averaged ensemble."""
    t0 = time.perf_counter()
    if config.D_i > 0.0:
        model = ModelParams.logistic(config.D_i, config.D_g, config.lam)
        params = lattice_params_from_model(model, config.delta, config.tau)
        continuum = min_wave_speed(model)
    else:
        # all-zero movement has no continuum counterpart; build the static
        # probabilities directly (the zero-rate lattice is a determinism probe)
        params = LatticeParams(
            P_m_i=0.0,
            P_m_g=2.0 * config.D_g * config.tau / config.delta**2,
            P_p_i=config.lam * config.tau,
            P_p_g=config.lam * config.tau,
            P_d_i=0.0,
            P_d_g=0.0,
            delta=config.delta,
            tau=config.tau,
        )
        continuum = float("nan")
    out = _OutputDir(config.outdir)
    out.json("config.json", config.to_dict())
    if math.isnan(config.occ0):
        occ0 = heaviside_occupancy(config.sites, config.filled)
        occ0_field = occ0.astype(float)
    else:
        # uniform level: exact for the mean-field map, Bernoulli draw (from
        # the master seed, separate from the sweep streams) for agents
        occ0_field = np.full(config.sites, config.occ0)
        draws = np.random.default_rng(config.seed).random(config.sites)
        occ0 = (draws < config.occ0).astype(np.uint8)
    x = config.delta * np.arange(config.sites)
    steps = sorted(set(int(round(s)) for s in np.linspace(0.0, config.sweeps, config.samples)))
    times = config.tau * np.asarray(steps, dtype=float)
    results: dict = {"mode": config.mode, "continuum_speed": continuum}

    if config.mode == "mean-field":
        state = MeanFieldState(occupancy=occ0_field)
        names, cols = ["site", "x"], [np.arange(config.sites), x]
        profiles = []
        done = 0
        for s in steps:
            state = mean_field_run(state, params, s - done)
            done = s
            profiles.append(state.occupancy.copy())
            names.append(f"occ_step{s}")
            cols.append(profiles[-1])
        out.csv("occupancy_mean_field.csv", names, cols)
        results["clamp_events"] = state.clamp_events
        results["mean_occupancy"] = {fmt(s): float(p.mean()) for s, p in zip(steps, profiles)}
        fronts = np.array([occupancy_front_position(x, p) for p in profiles])
    elif config.mode == "stochastic":
        # one realization: the stream is deterministic per seed, so running
        # fresh to each sample step yields prefixes of the same trajectory
        fronts = []
        for s in steps:
            lattice = run_realization(AgentLattice(occupied=occ0, rng_seed=config.seed), params, s)
            out.csv(
                f"occupancy_step{s}.csv",
                ["site", "x", "occupied"],
                [np.arange(config.sites), x, lattice.occupied],
            )
            fronts.append(occupancy_front_position(x, lattice.occupied.astype(float)))
        results["n_agents_final"] = lattice.n_agents
        fronts = np.array(fronts)
    else:
        step_arr, mean, stderr = ensemble_mean_occupancy(
            occ0, params, config.runs, steps, config.seed
        )
        names, cols = ["site", "x"], [np.arange(config.sites), x]
        for i, s in enumerate(step_arr):
            names.extend([f"mean_step{s}", f"stderr_step{s}"])
            cols.extend([mean[i], stderr[i]])
        out.csv("occupancy_ensemble.csv", names, cols)
        results["runs"] = config.runs
        fronts = np.array([occupancy_front_position(x, mean[i]) for i in range(len(step_arr))])

    out.csv("front_positions.csv", ["step", "time", "front"], [steps, times, fronts])
    speed = _fit_speed(times, fronts)
    results["lattice_speed"] = speed
    results["speed_ratio"] = speed / results["continuum_speed"]
    return _finish(config, out, results, t0)


def _scan_entry(payload) -> "ScanEntry":
    config_dict, eta = payload
    config = ExperimentConfig.from_dict(config_dict)
    model, kin = _model_and_kin(config)
    result = speed_vs_eta_scan(
        model,
        [eta],
        _grid(config),
        kin=kin,
        x_center=config.x_jump,
        threshold=config.threshold,
        snapshot_times=_snapshot_times(config),
        fit_window=config.fit_window,
        clamp=config.clamp,
    )
    return result.entries[0]


def cmd_speed_scan(config: ExperimentConfig) -> RunManifest:
    """Front speed against initial steepness; per-eta failures logged."""
    t0 = time.perf_counter()
    out = _OutputDir(config.outdir)
    out.json("config.json", config.to_dict())
    payloads = [(config.to_dict(), float(eta)) for eta in config.etas]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            entries = list(pool.map(_scan_entry, payloads))
    else:
        entries = [_scan_entry(p) for p in payloads]
    scan = aggregate_scan(entries)
    out.dat(
        "speed_scan.dat",
        ["eta", "speed", "fit_residual"],
        [
            [e.eta for e in scan.entries],
            [e.speed for e in scan.entries],
            [e.fit_residual for e in scan.entries],
        ],
    )
    results = {
        "limiting_speed": scan.limiting_speed,
        "tail_monotone": scan.tail_monotone,
        "speeds": {fmt(e.eta): e.speed for e in scan.entries},
        "failures": {fmt(e.eta): e.error for e in scan.entries if e.error is not None},
    }
    return _finish(config, out, results, t0)


COMMANDS = {
    "simulate-pde": cmd_simulate_pde,
    "phase-plane": cmd_phase_plane,
    "spectrum": cmd_spectrum,
    "lattice": cmd_lattice,
    "speed-scan": cmd_speed_scan,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavekit",
        description="Travelling waves of a sign-changing nonlinear diffusion model: "
        "simulate, analyse, and emit plot-ready data.",
    )
    sub = parser.add_subparsers(dest="command")

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags given here override it")
        p.add_argument("--out", dest="outdir", help="output directory (or set WAVEKIT_OUT)")
        p.add_argument("--seed", type=int, help="master seed for stochastic runs")
        p.add_argument("--jobs", type=int, help="worker processes for scans/ensembles")
        p.add_argument("--Di", dest="D_i", type=float, help="isolated-agent diffusivity")
        p.add_argument("--Dg", dest="D_g", type=float, help="grouped-agent diffusivity")
        p.add_argument("--lambda", dest="lam", type=float, help="logistic growth rate")
        p.add_argument("--D-kind", dest="D_kind", choices=_CHOICES["D_kind"])
        p.add_argument(
            "--roots",
            nargs=2,
            type=float,
            metavar=("R1", "R2"),
            help="diffusivity roots for --D-kind general",
        )

    def add_grid(p: argparse.ArgumentParser) -> None:
        p.add_argument("--x0", type=float)
        p.add_argument("--x1", type=float)
        p.add_argument("--dx", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--t-end", dest="t_end", type=float)
        p.add_argument("--snapshots", type=int, help="number of stored snapshot times")
        p.add_argument("--x-jump", dest="x_jump", type=float, help="initial front location")
        p.add_argument("--threshold", type=float, help="front-tracking level")
        p.add_argument("--fit-window", dest="fit_window", choices=_CHOICES["fit_window"])
        p.add_argument(
            "--clamp",
            action=argparse.BooleanOptionalAction,
            default=None,
            help="clip each step back into [0, 1] (on by default)",
        )

    p = sub.add_parser("simulate-pde", help="finite-difference run with front tracking")
    add_common(p)
    add_grid(p)
    p.add_argument("--ic", choices=_CHOICES["ic"])
    p.add_argument("--eta", type=float, help="tanh steepness when --ic tanh")

    p = sub.add_parser("phase-plane", help="equilibria, certificates, orbits, wave assembly")
    add_common(p)
    p.add_argument("--c", type=float, help="wave speed")

    p = sub.add_parser("spectrum", help="dispersion curves, weights, stability verdict")
    add_common(p)
    p.add_argument("--c", type=float, help="wave speed")
    p.add_argument("--nu", type=float, help="weight for the K_nu readouts (default: ideal)")
    p.add_argument("--k-max", dest="k_max", type=float, help="half-width of the k grid")
    p.add_argument("--k-points", dest="k_points", type=int)
    p.add_argument("--scan-nu", dest="scan_nu", metavar="LO:HI:STEP", help="tabulate K_nu over weights")

    p = sub.add_parser("lattice", help="mean-field map, stochastic runs, ensembles")
    add_common(p)
    p.add_argument("--mode", choices=_CHOICES["mode"])
    p.add_argument("--sites", type=int)
    p.add_argument("--filled", type=int, help="initially occupied left block")
    p.add_argument("--occ0", type=float, help="uniform initial occupancy level instead of a block")
    p.add_argument("--delta", type=float, help="lattice spacing")
    p.add_argument("--tau", type=float, help="sweep duration")
    p.add_argument("--sweeps", type=int)
    p.add_argument("--runs", type=int, help="ensemble size")
    p.add_argument("--samples", type=int, help="number of sampled sweep counts")

    p = sub.add_parser("speed-scan", help="front speed vs initial steepness")
    add_common(p)
    add_grid(p)
    p.add_argument("--etas", help="comma-separated steepness list, e.g. 0.5,1,2,5,10")

    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    merged = ExperimentConfig().to_dict()
    if args.config:
        with open(args.config) as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise ValueError("config file must hold a JSON object")
        merged.update(file_values)

    field_names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    provided = {
        k: v for k, v in vars(args).items() if k in field_names and v is not None and k != "command"
    }
    if getattr(args, "roots", None) is not None:
        provided["root1"], provided["root2"] = args.roots
        provided.setdefault("D_kind", "general")
    if getattr(args, "etas", None) is not None:
        provided["etas"] = [float(s) for s in str(args.etas).split(",") if s.strip()]

    if "outdir" not in provided and os.environ.get("WAVEKIT_OUT"):
        provided["outdir"] = os.environ["WAVEKIT_OUT"]

    merged.update(provided)
    merged["command"] = args.command
    return ExperimentConfig.from_dict(merged)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if not args.command:
        _build_parser().print_help(sys.stderr)
        return 2
    try:
        config = _config_from_args(args)
        manifest = COMMANDS[args.command](config)
    except (BlowUpError, NoFrontError) as exc:
        print(f"wavekit: solver failure: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"wavekit: {exc}", file=sys.stderr)
        return 2
    headline = {
        "simulate-pde": lambda r: f"speed={r.get('speed'):.6g}",
        "phase-plane": lambda r: f"regime={r.get('regime')}",
        "spectrum": lambda r: f"verdict={r.get('verdict')}",
        "lattice": lambda r: f"lattice_speed={r.get('lattice_speed'):.6g}",
        "speed-scan": lambda r: f"limiting_speed={r.get('limiting_speed'):.6g}",
    }[args.command](manifest.results)
    print(f"wavekit {args.command}: {headline}")
    print(f"outputs: {os.path.join(config.outdir, 'manifest.json')}")
    return 0


if __name__ == "__main__":  # pragma: no cover - module execution hook
    sys.exit(main())
