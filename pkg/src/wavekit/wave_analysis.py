"""Phase-plane analysis of travelling waves for the sign-changing diffusion model.

The travelling-wave ansatz u(x - ct) turns the PDE into the singular system
D(u) u' = p, D(u) p' = -cp - D(u)R(u), undefined on the walls u = alpha,
u = beta where D vanishes.  Rescaling the independent variable by
D(u) d(xi) = dz removes the singularity and gives the polynomial field

    du/dxi = p,        dp/dxi = -c p - D(u) R(u),

at the price of orientation: where D < 0, increasing xi runs backwards in
physical z.  Waves are heteroclinic orbits of this field assembled from
three segments, (1,0) -> (beta,0), (alpha,0) -> (beta,0) and
(alpha,0) -> (0,0), glued through the holes in the wall where the orbit
crosses with the finite slope du/dz = lambda_plus / D'(hole).

Everything here is closed-form linear algebra at the four equilibria plus
controlled numerical shooting between them; no claim of uniqueness of the
assembled wave is made.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp

from .model_core import (
    KineticProfile,
    NO_SIGN_CHANGE,
    _resolve,
    beta_node_threshold,
    eval_D,
    eval_D_prime,
    eval_R,
    eval_R_prime,
    min_wave_speed,
    roots_alpha_beta,
)

__all__ = [
    "PhasePoint",
    "Equilibrium",
    "PhaseOrbit",
    "WaveProfile",
    "RegionCertificate",
    "SlopeComparison",
    "SlopeComparisonReport",
    "DivergenceError",
    "BudgetExceededError",
    "NoWaveConnectionError",
    "vector_field_desingularised",
    "nullcline_p",
    "nullcline_slope",
    "classify_equilibria",
    "region_certificates",
    "shoot_segment",
    "assemble_wave",
    "slope_comparisons",
]

SEGMENT_IDS = ("OneToBeta", "AlphaToBeta", "AlphaToZero")

BALL_RADIUS = 1e-6
SHOOT_EPS = 1e-6
XI_BUDGET = 1e4

# relative scale below which the discriminant c^2 - 4F counts as zero; the
# node/spiral boundary cases (c = c* exactly) land here in floating point
_DISC_TOL = 1e-12

# sample tolerances for orbit flags
_FLAG_TOL = 1e-12


class DivergenceError(RuntimeError):
    """The orbit left the phase-plane bounding box; carries the exit point."""

    def __init__(self, segment_id: str, xi: float, u: float, p: float):
        self.segment_id = segment_id
        self.xi = xi
        self.exit_point = (u, p)
        super().__init__(
            f"{segment_id}: orbit left the bounding box at xi = {xi:.6g}, "
            f"(u, p) = ({u:.6g}, {p:.6g})"
        )


class BudgetExceededError(RuntimeError):
    """The xi budget ran out before reaching the target ball (distinct from
    divergence: the orbit stayed in the box but converged too slowly)."""


class NoWaveConnectionError(RuntimeError):
    """Both (0,0) and (beta,0) are spirals: no wave of any regime exists."""


@dataclass(frozen=True)
class PhasePoint:
    """Point of the (u, p) phase plane, p = D(u) du/dz."""

    u: float
    p: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.u) and math.isfinite(self.p)):
            raise ValueError("phase point components must be finite")


@dataclass(frozen=True)
class Equilibrium:
    """Linearisation record at one of (0,0), (alpha,0), (beta,0), (1,0).

    kind is the classification {Saddle, StableNode, StableSpiral}; the
    constructor cross-checks it against the eigenvalues rather than trusting
    the caller.
    """

    location: PhasePoint
    eigenvalues: tuple[complex, complex]
    eigenvectors: tuple[np.ndarray, np.ndarray]
    kind: str

    def __post_init__(self) -> None:
        lp, lm = self.eigenvalues
        if abs(lp.imag) > 0.0 or abs(lm.imag) > 0.0:
            consistent = self.kind == "StableSpiral" and lp.real < 0.0
        elif lp.real * lm.real < 0.0:
            consistent = self.kind == "Saddle"
        else:
            consistent = self.kind == "StableNode" and lp.real <= 0.0
        if not consistent:
            raise ValueError(f"classification {self.kind!r} inconsistent with eigenvalues")


@dataclass(frozen=True)
class PhaseOrbit:
    """One shot heteroclinic segment of the desingularised field.

    Samples are ordered in xi.  Flags are computed from the samples when the
    orbit is built, never asserted from outside.
    """

    xi: np.ndarray
    u: np.ndarray
    p: np.ndarray
    origin: PhasePoint
    target: PhasePoint
    segment_id: str
    monotone_u: bool
    u_nonnegative: bool
    entered_spiral: bool
    endpoint_error: float

    def __post_init__(self) -> None:
        if not (self.xi.size == self.u.size == self.p.size):
            raise ValueError("sample arrays must share a length")
        if np.any(np.diff(self.xi) < 0.0):
            raise ValueError("samples must be ordered in xi")


@dataclass(frozen=True)
class WaveProfile:
    """Assembled wave u(z) with speed and regime.

    ShockRegime is detection-only (the interior layer is not constructed)
    and carries no samples; the tail and monotonicity invariants apply to
    the sampled regimes.
    """

    z: np.ndarray
    u: np.ndarray
    dudz: np.ndarray
    speed: float
    regime: str  # SmoothMonotone | OscillatoryTail | ShockRegime

    def __post_init__(self) -> None:
        if not (self.z.size == self.u.size == self.dudz.size):
            raise ValueError("sample arrays must share a length")
        if self.z.size:
            if abs(self.u[0] - 1.0) > 1e-4 or abs(self.u[-1]) > 1e-4:
                raise ValueError("profile tails must approach 1 and 0")
            if self.regime == "SmoothMonotone" and np.max(self.dudz) > 1e-10:
                raise ValueError("monotone regime requires nonpositive du/dz")


@dataclass(frozen=True)
class RegionCertificate:
    """Invariant-region inequality for one of R1, R2, R3 at line slope mu.

    margin is the minimum slack of the defining inequality over the region's
    u-range; the certificate holds iff it is nonnegative.
    """

    region_id: str
    mu: float
    margin: float

    @property
    def valid(self) -> bool:
        return self.margin >= 0.0


@dataclass(frozen=True)
class SlopeComparison:
    """lambda_plus vs the nullcline slope chi at one equilibrium."""

    u0: float
    lambda_plus: complex
    chi: float
    difference: float  # NaN when lambda_plus is complex


@dataclass(frozen=True)
class SlopeComparisonReport:
    entries: tuple[SlopeComparison, ...]

    @property
    def all_negative(self) -> bool:
        return all(math.isfinite(e.difference) and e.difference < 0.0 for e in self.entries)


def vector_field_desingularised(model, c: float, point, *, kin: KineticProfile | None = None):
    """Right-hand side (du/dxi, dp/dxi) = (p, -c p - D(u) R(u)).

    `point` is a PhasePoint or a (u, p) pair.  Polynomial in (u, p): no
    preconditions beyond c > 0.
    """
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    u, p = (point.u, point.p) if isinstance(point, PhasePoint) else point
    return p, -c * p - eval_D(profile, u) * eval_R(kinetics, u)


def nullcline_p(model, c: float, u, *, kin: KineticProfile | None = None):
    """p-nullcline p = -D(u) R(u) / c of the desingularised field."""
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    return -eval_D(profile, u) * eval_R(kinetics, u) / c


def nullcline_slope(model, c: float, u, *, kin: KineticProfile | None = None):
    """Nullcline slope chi(u) = -F(u)/c with F = (D R)'; chi(0) = -R'(0) D(0)/c."""
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    F = eval_D_prime(profile, u) * eval_R(kinetics, u) + eval_D(profile, u) * eval_R_prime(
        kinetics, u
    )
    return -F / c


def _flux_derivative(profile, kinetics, u: float) -> float:
    return float(
        eval_D_prime(profile, u) * eval_R(kinetics, u)
        + eval_D(profile, u) * eval_R_prime(kinetics, u)
    )


def _eigen_pair(F: float, c: float):
    """Eigenvalues of [[0, 1], [-F, -c]]: roots of s^2 + c s + F = 0."""
    disc = c * c - 4.0 * F
    if abs(disc) <= _DISC_TOL * max(c * c, 4.0 * abs(F)):
        disc = 0.0
    if disc >= 0.0:
        root = math.sqrt(disc)
        return complex((-c + root) / 2.0), complex((-c - root) / 2.0)
    root = math.sqrt(-disc)
    return complex(-c / 2.0, root / 2.0), complex(-c / 2.0, -root / 2.0)


def _classify(lp: complex, lm: complex) -> str:
    if lp.imag != 0.0:
        return "StableSpiral"
    if lp.real > 0.0 > lm.real:
        return "Saddle"
    return "StableNode"


def _equilibrium_at(profile, kinetics, u0: float, c: float) -> Equilibrium:
    F = _flux_derivative(profile, kinetics, u0)
    lp, lm = _eigen_pair(F, c)
    return Equilibrium(
        location=PhasePoint(u0, 0.0),
        eigenvalues=(lp, lm),
        eigenvectors=(np.array([1.0, lp]), np.array([1.0, lm])),
        kind=_classify(lp, lm),
    )


def _alpha_beta(profile):
    roots = roots_alpha_beta(profile)
    if roots is NO_SIGN_CHANGE:
        raise ValueError("phase-plane analysis needs a sign-changing diffusivity")
    return roots


def classify_equilibria(model, c: float, *, kin: KineticProfile | None = None):
    """Linearise at the four equilibria; keys 'one', 'beta', 'alpha', 'zero'.

    Eigen-pairs come from the closed form s = (-c +/- sqrt(c^2 - 4F(u0)))/2
    with eigenvectors (1, s).  (1,0) and (alpha,0) have F < 0 and are always
    saddles; (0,0) is a node iff c >= 2 sqrt(D(0) R'(0)) and (beta,0) iff
    c >= 2 sqrt(D'(beta) R(beta)), spirals below.  Discriminants within
    1e-12 relative of zero are treated as the boundary double root, so the
    threshold speeds themselves classify as nodes.
    """
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    alpha, beta = _alpha_beta(profile)
    return {
        "one": _equilibrium_at(profile, kinetics, 1.0, c),
        "beta": _equilibrium_at(profile, kinetics, beta, c),
        "alpha": _equilibrium_at(profile, kinetics, alpha, c),
        "zero": _equilibrium_at(profile, kinetics, 0.0, c),
    }


def _kinetic_poly_over_u(kinetics) -> np.ndarray:
    # R(u)/u as coefficients [R'(0), -(lambda_g + 2M), M], M the mixed weight
    M = kinetics._mixed
    return np.array(
        [kinetics.lambda_i - kinetics.K_i, -(kinetics.lambda_g + 2.0 * M), M]
    )


def _poly_max_on(coeffs: np.ndarray, lo: float, hi: float, grid_points: int) -> float:
    """Maximum of a polynomial on [lo, hi]: dense grid plus exact critical points."""
    u = np.linspace(lo, hi, grid_points)
    best = float(np.max(P.polyval(u, coeffs)))
    for r in P.polyroots(P.polyder(coeffs)):
        if abs(r.imag) < 1e-12 and lo < r.real < hi:
            best = max(best, float(P.polyval(r.real, coeffs)))
    return best


def region_certificates(model, c: float, *, kin: KineticProfile | None = None, grid_points: int = 10_000):
    """Invariant-region certificates for R1, R2, R3 at line slope mu = -c/2.

    With mu = -c/2 the flow-tangency slack reduces to c^2/4 - q(u) with
    q = D(u) R(u)/u on R1 = (0, alpha] and q = D(u) R(u)/(u - beta) on
    R2 = (alpha, beta], R3 = [beta, 1); both q are polynomials, so the
    margin is c^2/4 minus the polynomial maximum (dense grid plus exact
    interior critical points).  The R1 margin at u -> 0 is c^2/4 - D(0)R'(0),
    zero exactly at the minimum wave speed; the R2/R3 margins at u = beta
    reduce to the beta-node threshold condition.
    """
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    alpha, beta = _alpha_beta(profile)

    D_coeffs = np.array([profile.c0, profile.c1, profile.c2])
    r_over_u = _kinetic_poly_over_u(kinetics)
    R_coeffs = np.concatenate(([0.0], r_over_u))

    h = P.polymul(D_coeffs, r_over_u)  # D(u) R(u) / u
    g = P.polymul(np.array([-profile.c2 * alpha, profile.c2]), R_coeffs)  # D R / (u - beta)

    bound = c * c / 4.0
    mu = -c / 2.0
    return (
        RegionCertificate("R1", mu, bound - _poly_max_on(h, 0.0, alpha, grid_points)),
        RegionCertificate("R2", mu, bound - _poly_max_on(g, alpha, beta, grid_points)),
        RegionCertificate("R3", mu, bound - _poly_max_on(g, beta, 1.0, grid_points)),
    )


def slope_comparisons(model, c: float, *, kin: KineticProfile | None = None) -> SlopeComparisonReport:
    """Compare lambda_plus with the nullcline slope chi at all four equilibria.

    Each real difference equals -(c - sqrt(c^2 - 4F))^2 / (4c), so it is
    negative whenever F(u0) != 0: the unstable (or weak stable) direction
    leaves each equilibrium below the nullcline, the orientation Fig.-style
    phase portraits rely on.  Spiral cases have no real eigendirection and
    report NaN.
    """
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    alpha, beta = _alpha_beta(profile)
    entries = []
    for u0 in (1.0, alpha, 0.0, beta):
        F = _flux_derivative(profile, kinetics, u0)
        lp, _ = _eigen_pair(F, c)
        chi = -F / c
        diff = lp.real - chi if lp.imag == 0.0 else float("nan")
        entries.append(SlopeComparison(u0=u0, lambda_plus=lp, chi=chi, difference=diff))
    return SlopeComparisonReport(entries=tuple(entries))


def _max_nullcline(profile, kinetics, c: float) -> float:
    u = np.linspace(0.0, 1.0, 2001)
    return float(np.max(np.abs(eval_D(profile, u) * eval_R(kinetics, u)))) / c


def _count_sign_changes(values: np.ndarray) -> int:
    s = np.sign(values[np.abs(values) > 1e-9])
    if s.size < 2:
        return 0
    return int(np.count_nonzero(np.diff(s)))


def shoot_segment(
    model,
    c: float,
    segment_id: str,
    *,
    kin: KineticProfile | None = None,
    eps: float = SHOOT_EPS,
    ball_radius: float = BALL_RADIUS,
    xi_budget: float = XI_BUDGET,
    n_samples: int = 16001,
) -> PhaseOrbit:
    """Integrate one heteroclinic segment of the desingularised field.

    Starts at the origin equilibrium displaced by eps along its unstable
    eigendirection (the branch pointing at the target), runs an adaptive
    embedded Runge-Kutta pair at rtol 1e-10 until the orbit enters the
    ball of radius ball_radius around the target.  Leaving the box
    u in [-0.5, 1.5], |p| <= 10 max|nullcline| raises DivergenceError with
    the exit point; running out of xi raises BudgetExceededError instead,
    the two being different diagnoses (escape vs slow convergence).

    Spiral targets are legal: the orbit still converges and the
    entered_spiral flag records the oscillation (two or more sign changes
    of u - u_target along the samples).

    n_samples sets the uniform part of the sample grid.  It is not cosmetic:
    the wave's z-coordinate is rebuilt by trapezoidal accumulation over
    these samples, and the default keeps the eps-halving reproducibility of
    the assembled profile comfortably below 1e-6.
    """
    if segment_id not in SEGMENT_IDS:
        raise ValueError(f"unknown segment {segment_id!r}")
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    alpha, beta = _alpha_beta(profile)

    if segment_id == "OneToBeta":
        u0, u_target, branch = 1.0, beta, -1.0
    elif segment_id == "AlphaToBeta":
        u0, u_target, branch = alpha, beta, +1.0
    else:
        u0, u_target, branch = alpha, 0.0, -1.0

    lp, _ = _eigen_pair(_flux_derivative(profile, kinetics, u0), c)
    if lp.imag != 0.0 or lp.real <= 0.0:  # origins are saddles for this family
        raise ValueError(f"origin u = {u0:g} has no unstable direction at c = {c:g}")
    v = np.array([1.0, lp.real])
    v /= np.linalg.norm(v)
    y0 = np.array([u0, 0.0]) + branch * eps * v

    p_max = 10.0 * max(_max_nullcline(profile, kinetics, c), eps)

    def rhs(_xi, y):
        u, p = y
        return (p, -c * p - eval_D(profile, u) * eval_R(kinetics, u))

    def reach(_xi, y):
        return math.hypot(y[0] - u_target, y[1]) - ball_radius

    reach.terminal = True
    reach.direction = -1.0

    def escape(_xi, y):
        return max(y[0] - 1.5, -0.5 - y[0], abs(y[1]) - p_max)

    escape.terminal = True
    escape.direction = 1.0

    sol = solve_ivp(
        rhs,
        (0.0, xi_budget),
        y0,
        method="RK45",
        rtol=1e-10,
        atol=1e-13,
        events=(reach, escape),
        dense_output=True,
    )
    if sol.t_events[1].size:
        xi_exit = float(sol.t_events[1][0])
        u_exit, p_exit = sol.y_events[1][0]
        raise DivergenceError(segment_id, xi_exit, float(u_exit), float(p_exit))
    if not sol.t_events[0].size:
        raise BudgetExceededError(
            f"{segment_id}: no ball entry within xi budget {xi_budget:g} at c = {c:g}"
        )

    xi_end = float(sol.t_events[0][0])
    # solver steps catch the fast transient, the uniform grid fills the tail
    xi = np.union1d(sol.t[sol.t <= xi_end], np.linspace(0.0, xi_end, n_samples))
    u, p = sol.sol(xi)

    du = np.diff(u)
    monotone = bool(np.all(du <= _FLAG_TOL) or np.all(du >= -_FLAG_TOL))
    return PhaseOrbit(
        xi=xi,
        u=u,
        p=p,
        origin=PhasePoint(u0, 0.0),
        target=PhasePoint(u_target, 0.0),
        segment_id=segment_id,
        monotone_u=monotone,
        u_nonnegative=bool(np.min(u) >= -_FLAG_TOL),
        entered_spiral=_count_sign_changes(u - u_target) >= 2,
        endpoint_error=float(math.hypot(u[-1] - u_target, p[-1])),
    )


def _cumtrapz0(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    out[0] = 0.0
    np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x), out=out[1:])
    return out


def _hole_slope(profile, kinetics, u_hole: float, c: float) -> float:
    # du/dz through the hole: L'Hopital on p/D gives (dp/du)/D' with dp/du
    # the leading eigendirection slope lambda_plus
    lp, _ = _eigen_pair(_flux_derivative(profile, kinetics, u_hole), c)
    return lp.real / float(eval_D_prime(profile, u_hole))


def assemble_wave(
    model,
    c: float,
    *,
    kin: KineticProfile | None = None,
    eps: float = SHOOT_EPS,
) -> WaveProfile:
    """Assemble the full wave profile u(z) at speed c from three segments.

    Regime logic comes first: if both (0,0) and (beta,0) are spirals no
    connection exists at all (NoWaveConnectionError); if (beta,0) alone is a
    spiral the wave is shock-fronted and only the regime is reported
    (detection without interior-layer construction).  Otherwise the three
    segments are shot, the middle one is reversed (D < 0 there runs z
    backwards relative to xi), z is rebuilt by integrating dz = D(u) dxi
    segment-wise, the 2 eps hole gaps are bridged with the L'Hopital slope
    lambda_plus / D', and z is shifted so the profile crosses u = 1/2 at
    z = 0.  SmoothMonotone requires min u >= -1e-12 and du/dz <= 1e-10 at
    every sample; anything else from a node-to-node assembly is an
    OscillatoryTail profile.
    """
    profile, kinetics = _resolve(model, kin)
    eqs = classify_equilibria(profile, c, kin=kinetics)
    beta_spiral = eqs["beta"].kind == "StableSpiral"
    zero_spiral = eqs["zero"].kind == "StableSpiral"
    if beta_spiral and zero_spiral:
        raise NoWaveConnectionError(
            f"c = {c:g} is below both node thresholds "
            f"{min_wave_speed(profile, kinetics):.6g} and "
            f"{beta_node_threshold(profile, kinetics):.6g}"
        )
    if beta_spiral:
        empty = np.array([])
        return WaveProfile(z=empty, u=empty, dudz=empty, speed=c, regime="ShockRegime")

    seg_a = shoot_segment(profile, c, "OneToBeta", kin=kinetics, eps=eps)
    seg_b = shoot_segment(profile, c, "AlphaToBeta", kin=kinetics, eps=eps)
    seg_c = shoot_segment(profile, c, "AlphaToZero", kin=kinetics, eps=eps)
    alpha, beta = _alpha_beta(profile)

    z_a = _cumtrapz0(eval_D(profile, seg_a.u), seg_a.xi)

    # middle segment lives where D < 0: reverse to physical z order
    u_b = seg_b.u[::-1]
    p_b = seg_b.p[::-1]
    z_b = _cumtrapz0(eval_D(profile, seg_b.u), seg_b.xi)[::-1]
    z_b = z_b - z_b[0]

    z_c = _cumtrapz0(eval_D(profile, seg_c.u), seg_c.xi)

    gap_beta = (u_b[0] - seg_a.u[-1]) / _hole_slope(profile, kinetics, beta, c)
    gap_alpha = (seg_c.u[0] - u_b[-1]) / _hole_slope(profile, kinetics, alpha, c)

    z_b = z_b + z_a[-1] + gap_beta
    z_c = z_c + z_b[-1] + gap_alpha

    z = np.concatenate([z_a, z_b, z_c])
    u = np.concatenate([seg_a.u, u_b, seg_c.u])
    p = np.concatenate([seg_a.p, p_b, seg_c.p])
    dudz = p / eval_D(profile, u)

    # anchor z = 0 at the first downward crossing of 1/2
    below = u <= 0.5
    k = int(np.argmax(below))
    if k == 0:
        raise RuntimeError("assembled profile never crosses one half")
    z_half = np.interp(0.5, [u[k], u[k - 1]], [z[k], z[k - 1]])
    z = z - z_half

    smooth = np.min(u) >= -_FLAG_TOL and np.max(dudz) <= 1e-10
    regime = "SmoothMonotone" if smooth else "OscillatoryTail"
    return WaveProfile(z=z, u=u, dudz=dudz, speed=c, regime=regime)
