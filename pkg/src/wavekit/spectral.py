"""Essential and absolute spectrum of the travelling-wave linearisation.

Linearising the density equation about a front that connects u = 1 (z ->
-inf) to u = 0 (z -> +inf) gives an operator whose coefficients freeze, at
each spatial limit, into the constant-coefficient form

    v  ->  D v'' + c v' + R' v,

with the endpoint values D(0), R'(0) on the right and D(1), R'(1) on the
left.  Fourier modes e^{ikz} trace the dispersion curves

    Lambda(k) = -D k^2 + i c k + R',

leftward-opening parabolas crossing the real axis at R'(0) = lambda > 0 and
R'(1) = -lambda < 0; the right-limit curve always protrudes into the right
half plane, so the front is at best convectively unstable at the leading
edge.  An exponential weight e^{nu z} shifts the admissible modes; the
weighted curve meets the real axis at the quadratic

    K^nu = D nu^2 - c nu + R',

whose minimum over nu sits at the ideal weight nu* = c / (2 D(0)) and equals
the absolute-spectrum endpoint K = -c^2/(4 D) + R'.  No weight pushes the
essential spectrum left of K, which splits the diagnosis cleanly: K_plus > 0
is an absolute instability at the leading edge, while K_plus <= 0 leaves a
range of stabilising weights, the sub-level set {nu : K_plus^nu < 0}.  For
logistic growth the sign of K_plus flips exactly at the minimum front speed
c* = 2 sqrt(D(0) R'(0)): slow fronts are absolutely unstable, fast ones are
stabilised by any weight in the admissible interval.

The point-spectrum side works on the desingularised (phase-plane) form of
the eigenproblem.  Symmetrising with the Liouville weight e^{c xi / 2} turns
it into a Schroedinger problem with potential F(u(xi)) - c^2/4, F = (D R)',
so the operator is negative semidefinite exactly when that potential is
nonpositive along the orbit.  For the two-rate diffusivity with logistic
growth, 4 F(u) <= lambda D_i (4 - 32 u + 63 u^2 - 36 u^3) whenever
D_i > 4 D_g, and the cubic's maximum on [0, 1] is 4, attained at u = 0, so
the certificate reduces to c^2 >= 4 lambda D_i = (c*)^2: the same threshold,
reached from the spectral side.

Numerical policy: complex square roots use the principal branch; sign
decisions at the threshold speed use a relative deadband of 1e-12 so that
c = c* classifies as weighted-stabilisable (a hair of rounding in c^2 would
otherwise flip it), mirroring how the phase-plane classifier treats the
node/spiral boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .model_core import (
    ModelParams,
    _resolve,
    eval_D,
    eval_D_prime,
    eval_D_second,
    eval_R_prime,
    flux_derivative_F,
)

__all__ = [
    "SIDES",
    "AsymptoticMatrix",
    "DispersionCurve",
    "WeightRange",
    "SpectrumReport",
    "PointSpectrumCertificate",
    "asymptotic_matrix",
    "spatial_eigenvalues",
    "dispersion_curves",
    "absolute_spectrum_endpoints",
    "ideal_weight",
    "weighted_intersections",
    "admissible_weight_range",
    "stability_verdict",
    "build_spectrum_report",
    "linearisation_coefficients",
    "point_spectrum_certificate",
]

SIDES = ("PlusInfinity", "MinusInfinity")

# relative deadband for sign decisions at the threshold speed
_DEADBAND = 1e-12

# a certificate tolerates this much positive potential (rounding headroom)
CERTIFICATE_TOL = 1e-10

# cubic bounding 4 F(u) / (lambda D_i) on [0, 1] for the two-rate family
_BOUND_POLY = np.array([4.0, -32.0, 63.0, -36.0])


def _end_values(profile, kinetics, side: str) -> tuple[float, float]:
    """(D, R') frozen at the spatial limit: u = 0 at +inf, u = 1 at -inf."""
    if side not in SIDES:
        raise ValueError(f"unknown side {side!r}; expected one of {SIDES}")
    u_end = 0.0 if side == "PlusInfinity" else 1.0
    d_end = float(eval_D(profile, u_end))
    if d_end == 0.0:
        raise ValueError(f"D({u_end:g}) = 0: no asymptotic system at {side}")
    return d_end, float(eval_R_prime(kinetics, u_end))


def _leading_edge(model, kin) -> tuple[float, float]:
    profile, kinetics = _resolve(model, kin)
    d0, rp0 = _end_values(profile, kinetics, "PlusInfinity")
    if d0 <= 0.0:
        raise ValueError("weight machinery requires D(0) > 0")
    return d0, rp0


@dataclass(frozen=True)
class AsymptoticMatrix:
    """First-order system frozen at one spatial limit.

    ``evaluate(lam)`` returns [[0, 1], [(lam - R')/D, -c/D]] + nu*I, whose
    eigenvalues are the spatial rates mu of modes ~ e^{mu z} solving the
    frozen eigenproblem in the e^{nu z}-weighted space.  At nu = 0 the
    entries are the unweighted matrix exactly.
    """

    side: str
    c: float
    D_end: float
    R_prime_end: float
    nu: float = 0.0

    def __post_init__(self) -> None:
        if self.side not in SIDES:
            raise ValueError(f"unknown side {self.side!r}")
        if not self.c > 0.0:
            raise ValueError("wave speed c must be positive")
        if self.D_end == 0.0:
            raise ValueError("endpoint diffusivity must be nonzero")

    def evaluate(self, lam: complex) -> np.ndarray:
        a = np.array(
            [
                [0.0, 1.0],
                [(lam - self.R_prime_end) / self.D_end, -self.c / self.D_end],
            ],
            dtype=complex,
        )
        a[0, 0] += self.nu
        a[1, 1] += self.nu
        return a

    __call__ = evaluate


def asymptotic_matrix(model, c: float, side: str, *, kin=None, nu: float = 0.0) -> AsymptoticMatrix:
    profile, kinetics = _resolve(model, kin)
    d_end, rp_end = _end_values(profile, kinetics, side)
    return AsymptoticMatrix(side=side, c=c, D_end=d_end, R_prime_end=rp_end, nu=nu)


def spatial_eigenvalues(model, c: float, lam, side: str, *, kin=None) -> tuple[complex, complex]:
    """Spatial rates mu = (-c +- sqrt(c^2 - 4 D (R' - lam))) / (2 D) at one limit.

    Returned as (plus branch, minus branch) with the principal square root.
    They collide exactly at the branch point lam = -c^2/(4 D) + R', the
    endpoint of the absolute spectrum on that side.
    """
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    d_end, rp_end = _end_values(profile, kinetics, side)
    s = np.sqrt(complex(c * c - 4.0 * d_end * (rp_end - lam)))
    return complex((-c + s) / (2.0 * d_end)), complex((-c - s) / (2.0 * d_end))


@dataclass(frozen=True)
class DispersionCurve:
    """Sampled essential-spectrum curve at one spatial limit.

    ``lam[i]`` is the temporal eigenvalue of the mode e^{(ik[i] - nu) z}; at
    nu = 0 this is the classic parabola -D k^2 + i c k + R'.
    """

    side: str
    nu: float
    k: np.ndarray
    lam: np.ndarray

    def __post_init__(self) -> None:
        if self.k.shape != self.lam.shape:
            raise ValueError("k and lam must have matching shapes")

    @property
    def max_real(self) -> float:
        return float(np.max(self.lam.real)) if self.lam.size else float("nan")


def dispersion_curves(
    model,
    c: float,
    k_grid=None,
    *,
    kin=None,
    nu: float = 0.0,
) -> tuple[DispersionCurve, DispersionCurve]:
    """Sample Lambda(k) at both limits over a symmetric wavenumber grid.

    The default grid spans four times the wavenumber scale sqrt(|R'|/D) of
    the faster endpoint, enough to show both crossings and the parabolic
    decay.  ``nu`` shifts the curves into the e^{nu z}-weighted space.
    """
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    ends = [_end_values(profile, kinetics, side) for side in SIDES]
    if k_grid is None:
        scale = max(abs(rp) / abs(d) for d, rp in ends)
        kmax = 4.0 * math.sqrt(max(scale, 1.0))
        k_grid = np.linspace(-kmax, kmax, 801)
    k = np.asarray(k_grid, dtype=float)
    curves = []
    for side, (d_end, rp_end) in zip(SIDES, ends):
        mu = 1j * k - nu
        curves.append(DispersionCurve(side=side, nu=nu, k=k, lam=d_end * mu * mu + c * mu + rp_end))
    return curves[0], curves[1]


def absolute_spectrum_endpoints(model, c: float, *, kin=None) -> tuple[float, float]:
    """Real endpoints (K_plus, K_minus) = (R'(0) - c^2/(4 D(0)), R'(1) - c^2/(4 D(1)))."""
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    d0, rp0 = _end_values(profile, kinetics, "PlusInfinity")
    d1, rp1 = _end_values(profile, kinetics, "MinusInfinity")
    return rp0 - c * c / (4.0 * d0), rp1 - c * c / (4.0 * d1)


def ideal_weight(model, c: float, *, kin=None) -> float:
    """nu* = c / (2 D(0)), the vertex of the weighted-intersection quadratic."""
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    d0, _ = _leading_edge(model, kin)
    return c / (2.0 * d0)


def weighted_intersections(model, c: float, nu: float, *, kin=None) -> tuple[float, float]:
    """Real-axis crossings (K_plus_nu, K_minus_nu) = (D nu^2 - c nu + R') at both limits."""
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    profile, kinetics = _resolve(model, kin)
    d0, rp0 = _end_values(profile, kinetics, "PlusInfinity")
    d1, rp1 = _end_values(profile, kinetics, "MinusInfinity")
    return d0 * nu * nu - c * nu + rp0, d1 * nu * nu - c * nu + rp1


@dataclass(frozen=True)
class WeightRange:
    """Weights nu with K_plus_nu < 0.

    Empty below the threshold speed, a Singleton {nu*} exactly at it (double
    root of the quadratic), and an open Interval above it.
    """

    kind: str
    lo: float = float("nan")
    hi: float = float("nan")

    def __post_init__(self) -> None:
        if self.kind not in ("Empty", "Singleton", "Interval"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "Empty":
            if not (math.isnan(self.lo) and math.isnan(self.hi)):
                raise ValueError("Empty range carries no endpoints")
        elif self.kind == "Singleton":
            if not self.lo == self.hi:
                raise ValueError("Singleton requires lo == hi")
        elif not self.lo < self.hi:
            raise ValueError("Interval requires lo < hi")

    @property
    def is_empty(self) -> bool:
        return self.kind == "Empty"

    def contains(self, nu: float) -> bool:
        if self.kind == "Empty":
            return False
        if self.kind == "Singleton":
            return nu == self.lo
        return self.lo < nu < self.hi


def _edge_discriminant(model, c: float, kin) -> tuple[float, float, float]:
    """(disc, deadband, D(0)) for the sign decisions keyed to c^2 - 4 D(0) R'(0).

    K_plus = -disc / (4 D(0)), so disc < 0 is absolute instability and
    disc = 0 is the threshold speed; one shared tolerance keeps the verdict
    and the weight range consistent with each other at the boundary.
    """
    d0, rp0 = _leading_edge(model, kin)
    prod = 4.0 * d0 * rp0
    disc = c * c - prod
    return disc, _DEADBAND * max(c * c, abs(prod)), d0


def admissible_weight_range(model, c: float, *, kin=None) -> WeightRange:
    """Sub-level set {nu : K_plus_nu < 0} of the leading-edge quadratic.

    The quadratic D(0) nu^2 - c nu + R'(0) dips below zero exactly between
    its roots (c -+ sqrt(c^2 - 4 D(0) R'(0))) / (2 D(0)); no real roots means
    no stabilising weight exists.
    """
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    disc, tol, d0 = _edge_discriminant(model, c, kin)
    if disc < -tol:
        return WeightRange("Empty")
    if disc <= tol:
        nu_star = c / (2.0 * d0)
        return WeightRange("Singleton", nu_star, nu_star)
    s = math.sqrt(disc)
    return WeightRange("Interval", (c - s) / (2.0 * d0), (c + s) / (2.0 * d0))


def stability_verdict(model, c: float, *, kin=None) -> str:
    """'AbsolutelyUnstable' when K_plus > 0, else 'TransientlyStableWithWeight'."""
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    disc, tol, _ = _edge_discriminant(model, c, kin)
    return "AbsolutelyUnstable" if disc < -tol else "TransientlyStableWithWeight"


@dataclass(frozen=True)
class SpectrumReport:
    """One-stop spectral summary at a given speed.

    Dispersion curves are unweighted; the K_*_nu scalars are evaluated at
    ``nu`` (the ideal weight unless overridden).  ``verdict`` is keyed to the
    sign of K_plus: positive means no weight can stop the leading edge from
    amplifying in place.
    """

    c: float
    nu: float
    dispersion_plus: DispersionCurve
    dispersion_minus: DispersionCurve
    K_plus: float
    K_minus: float
    K_plus_nu: float
    K_minus_nu: float
    weight_range: WeightRange
    ideal_weight: float
    verdict: str

    def to_dict(self) -> dict:
        """JSON-ready plain-type view (arrays flattened to lists)."""

        def curve(cv: DispersionCurve) -> dict:
            return {
                "side": cv.side,
                "nu": cv.nu,
                "k": cv.k.tolist(),
                "re_lambda": cv.lam.real.tolist(),
                "im_lambda": cv.lam.imag.tolist(),
            }

        rng: dict = {"kind": self.weight_range.kind}
        if not self.weight_range.is_empty:
            rng["lo"] = self.weight_range.lo
            rng["hi"] = self.weight_range.hi
        return {
            "c": self.c,
            "nu": self.nu,
            "K_plus": self.K_plus,
            "K_minus": self.K_minus,
            "K_plus_nu": self.K_plus_nu,
            "K_minus_nu": self.K_minus_nu,
            "weight_range": rng,
            "ideal_weight": self.ideal_weight,
            "verdict": self.verdict,
            "dispersion_plus": curve(self.dispersion_plus),
            "dispersion_minus": curve(self.dispersion_minus),
        }


def build_spectrum_report(
    model,
    c: float,
    *,
    kin=None,
    k_grid=None,
    nu: float | None = None,
) -> SpectrumReport:
    """Assemble curves, endpoints, weighted crossings, range, and verdict."""
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    nu_star = ideal_weight(model, c, kin=kin)
    if nu is None:
        nu = nu_star
    plus, minus = dispersion_curves(model, c, k_grid, kin=kin)
    k_plus, k_minus = absolute_spectrum_endpoints(model, c, kin=kin)
    kpn, kmn = weighted_intersections(model, c, nu, kin=kin)
    return SpectrumReport(
        c=c,
        nu=nu,
        dispersion_plus=plus,
        dispersion_minus=minus,
        K_plus=k_plus,
        K_minus=k_minus,
        K_plus_nu=kpn,
        K_minus_nu=kmn,
        weight_range=admissible_weight_range(model, c, kin=kin),
        ideal_weight=nu_star,
        verdict=stability_verdict(model, c, kin=kin),
    )


def linearisation_coefficients(model, wave, *, kin=None, nu: float = 0.0):
    """Coefficient samples (B, C) of D(u) w'' + B w' + C w along a wave profile.

    Linearising the density equation about a profile u(z) travelling at
    ``wave.speed`` gives B = 2 D'(u) u' + c and C = D''(u) u'^2 + D'(u) u''
    + R'(u); u'' is reconstructed by differencing ``wave.dudz``.  A weight
    e^{nu z} (substituting v = e^{-nu z} w) shifts them to B - 2 D(u) nu and
    D(u) nu^2 - B nu + C.  All coefficients are polynomial in (u, u', u''),
    so the samples stay finite across the interior zeros of D; only the
    first-order reduction, which divides by D(u), is singular there.  In the
    tails B -> c - 2 D nu and C -> the weighted crossing K_nu of that side.
    Evaluation-only diagnostic: no eigenvalue problem is solved here.
    """
    profile, kinetics = _resolve(model, kin)
    z = np.asarray(wave.z, dtype=float)
    if z.size == 0:
        return np.array([]), np.array([])
    u = np.asarray(wave.u, dtype=float)
    uz = np.asarray(wave.dudz, dtype=float)
    uzz = np.gradient(uz, z)
    dp = eval_D_prime(profile, u)
    b = 2.0 * dp * uz + wave.speed
    cc = eval_D_second(profile, u) * uz * uz + dp * uzz + eval_R_prime(kinetics, u)
    if nu != 0.0:
        d = eval_D(profile, u)
        b, cc = b - 2.0 * d * nu, d * nu * nu - b * nu + cc
    return b, cc


def _poly_max_on(coeffs, lo: float, hi: float, grid_points: int = 10_001) -> float:
    """Max of a polynomial on [lo, hi]: dense grid plus exact critical points."""
    grid = np.linspace(lo, hi, grid_points)
    best = float(np.max(P.polyval(grid, coeffs)))
    der = P.polyder(coeffs)
    if len(der) > 1:
        for root in np.atleast_1d(P.polyroots(der)):
            if abs(root.imag) < 1e-12 and lo < root.real < hi:
                best = max(best, float(P.polyval(float(root.real), coeffs)))
    return best


@dataclass(frozen=True)
class PointSpectrumCertificate:
    """Negativity certificate for the symmetrised desingularised eigenproblem.

    ``max_potential`` is the largest value of F(u) - c^2/4 seen over a dense
    u-grid on [0, 1] (maximised exactly via the cubic's critical points) and,
    when an orbit is supplied, along its samples too; ``analytic_bound`` is
    the closed-form majorant lambda D_i (4 - 32u + 63u^2 - 36u^3)/4 - c^2/4
    at the cubic's maximum.  ``certified`` requires both to be nonpositive
    (up to 1e-10 of rounding headroom), which pins the operator's spectrum
    to the closed left half line.
    """

    c: float
    orbit: object | None
    potential_samples: np.ndarray
    max_potential: float
    polynomial_bound_max: float
    analytic_bound: float
    certified: bool

    def __post_init__(self) -> None:
        if self.certified and not self.max_potential <= CERTIFICATE_TOL:
            raise ValueError("certified requires max_potential <= 1e-10")


def point_spectrum_certificate(model, c: float, orbit=None, *, kin=None) -> PointSpectrumCertificate:
    """Decide negative semidefiniteness of the weighted phase-plane eigenproblem.

    Applies to the two-rate diffusivity with logistic growth only: the
    majorant cubic encodes that structure (and D_i > 4 D_g), and its maximum
    of 4 at u = 0 collapses the analytic test to c >= 2 sqrt(lambda D_i).
    ``orbit`` is any object exposing sampled densities ``u`` (a phase-plane
    segment or an assembled profile); omitting it certifies from the u-grid
    alone, which is equivalent whenever the orbit stays inside [0, 1] and
    strictly weaker when an oscillatory tail undershoots u = 0, where F
    exceeds its [0, 1] maximum.
    """
    if not c > 0.0:
        raise ValueError("wave speed c must be positive")
    if kin is not None or not isinstance(model, ModelParams) or not model.logistic_reduction:
        raise ValueError(
            "certificate requires the two-rate reduction with logistic kinetics"
            " (ModelParams with equal proliferation rates and no death)"
        )
    profile, kinetics = model.diffusivity(), model.kinetics()
    d_coeffs = np.array([profile.c0, profile.c1, profile.c2])
    mixed = kinetics._mixed
    r_coeffs = np.array(
        [
            0.0,
            kinetics.lambda_g + mixed - kinetics.K_g,
            -(kinetics.lambda_g + 2.0 * mixed),
            mixed,
        ]
    )
    f_coeffs = P.polyder(P.polymul(d_coeffs, r_coeffs))
    max_potential = _poly_max_on(f_coeffs, 0.0, 1.0) - c * c / 4.0
    samples = np.array([])
    if orbit is not None:
        u_orb = np.asarray(orbit.u, dtype=float)
        samples = flux_derivative_F(model, u_orb) - c * c / 4.0
        if samples.size:
            max_potential = max(max_potential, float(np.max(samples)))
    poly_max = _poly_max_on(_BOUND_POLY, 0.0, 1.0)
    bound = 0.25 * (-c * c + model.lambda_i * model.D_i * poly_max)
    return PointSpectrumCertificate(
        c=c,
        orbit=orbit,
        potential_samples=samples,
        max_potential=max_potential,
        polynomial_bound_max=poly_max,
        analytic_bound=bound,
        certified=max_potential <= CERTIFICATE_TOL and bound <= CERTIFICATE_TOL,
    )
