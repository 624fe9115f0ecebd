"""Closed-form model family for a two-population invasion process.

The continuum model is a reaction-diffusion equation

    dU/dt = d/dx ( D(U) dU/dx ) + R(U),

where the diffusivity D is a quadratic in U that may change sign twice on
(0, 1) and the kinetics R vanish at U = 0 and U = 1.  This module holds the
model family itself: diffusivity and kinetic profiles, their derivatives,
the sign-change roots (alpha, beta), and every analytic threshold the other
modules consume (minimum wave speed, upper-root node threshold, positive-D
speed bounds, and the flux derivative F = (D*R)').

Everything here is closed-form and pure; no integration or simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CLASSIFICATION_RTOL",
    "DegenerateDiffusivity",
    "NO_SIGN_CHANGE",
    "ModelParams",
    "DiffusivityProfile",
    "KineticProfile",
    "DerivedConstants",
    "eval_D",
    "eval_D_prime",
    "eval_D_second",
    "eval_R",
    "eval_R_prime",
    "roots_alpha_beta",
    "min_wave_speed",
    "beta_node_threshold",
    "positive_D_bounds",
    "flux_derivative_F",
    "derived_constants",
]

# Relative half-width of the band around classification thresholds inside
# which a discriminant is treated as exactly zero.  Rounded speeds quoted to
# three decimals (c = 0.866 vs the exact sqrt(3)/2) land inside this band;
# classification labels must not flip across such rounding.
CLASSIFICATION_RTOL = 1e-4

# Relative discriminant size below which a quadratic is declared to have a
# double root rather than two ordered roots.
_DEGENERATE_RTOL = 1e-14


class DegenerateDiffusivity(ValueError):
    """The diffusivity quadratic has a double root: roots cannot be ordered."""


class _NoSignChange:
    """Sentinel: the diffusivity keeps one sign on [0, 1]."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "NoSignChange"


NO_SIGN_CHANGE = _NoSignChange()


@dataclass(frozen=True)
class ModelParams:
    """Rates of the two-population model.

    Parameters
    ----------
    D_i, D_g : float
        Diffusivities of isolated and grouped agents (length^2 / time).
        ``D_i`` must be positive, ``D_g`` nonnegative.
    lambda_i, lambda_g : float
        Proliferation rates (1 / time), nonnegative.
    K_i, K_g : float
        Death rates (1 / time), nonnegative.
    """

    D_i: float
    D_g: float
    lambda_i: float
    lambda_g: float
    K_i: float = 0.0
    K_g: float = 0.0

    def __post_init__(self) -> None:
        # D_i = 0 is allowed as a data carrier (the all-zero continuum limit
        # of a motionless lattice); building the diffusivity profile, and
        # every threshold that divides by D(0), still demands D_i > 0.
        for name in ("D_i", "D_g", "lambda_i", "lambda_g", "K_i", "K_g"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    @classmethod
    def logistic(cls, D_i: float, D_g: float, lam: float) -> "ModelParams":
        """Equal proliferation rates and no death: R reduces to lam*U*(1-U)."""
        return cls(D_i=D_i, D_g=D_g, lambda_i=lam, lambda_g=lam, K_i=0.0, K_g=0.0)

    @property
    def logistic_reduction(self) -> bool:
        """True iff the kinetics collapse to a pure logistic term."""
        return self.lambda_i == self.lambda_g and self.K_i == 0.0 and self.K_g == 0.0

    def diffusivity(self) -> "DiffusivityProfile":
        return DiffusivityProfile.from_rates(self.D_i, self.D_g)

    def kinetics(self) -> "KineticProfile":
        return KineticProfile(self.lambda_i, self.lambda_g, self.K_i, self.K_g)


@dataclass(frozen=True)
class DiffusivityProfile:
    """A quadratic diffusivity D(u) = c0 + c1*u + c2*u**2.

    Use the constructors rather than raw coefficients:

    * :meth:`from_rates` builds the two-population form
      ``D_i*(1 - 4u + 3u^2) + D_g*(4u - 3u^2)``, which equals ``D_i`` for an
      isolated agent (u -> 0) and ``D_g`` for a fully grouped one (u -> 1).
    * :meth:`from_roots` builds ``leading*(u - r1)*(u - r2)`` directly from
      prescribed sign-change locations.
    """

    c0: float
    c1: float
    c2: float
    kind: str  # "rates" | "roots"

    @classmethod
    def from_rates(cls, D_i: float, D_g: float) -> "DiffusivityProfile":
        if not D_i > 0.0 or D_g < 0.0:
            raise ValueError("need D_i > 0 and D_g >= 0")
        return cls(c0=D_i, c1=4.0 * (D_g - D_i), c2=3.0 * (D_i - D_g), kind="rates")

    @classmethod
    def from_roots(cls, r1: float, r2: float, leading: float = 1.0) -> "DiffusivityProfile":
        if leading == 0.0:
            raise ValueError("leading coefficient must be nonzero")
        return cls(c0=leading * r1 * r2, c1=-leading * (r1 + r2), c2=leading, kind="roots")

    @property
    def sign_class(self) -> str:
        """One of ``PositiveOnUnit``, ``SignChangingTwice``, ``Degenerate``.

        Derived from the coefficients on every call, never stored.  Profiles
        outside the supported family (nonpositive at u = 0 or u = 1, or a
        single interior sign change) raise ValueError.
        """
        r = _real_roots(self)
        if r == "degenerate":
            return "Degenerate"
        inside = [x for x in (r if isinstance(r, tuple) else ()) if 0.0 < x < 1.0]
        if len(inside) == 2:
            return "SignChangingTwice"
        if len(inside) == 1:
            raise ValueError("diffusivity changes sign once on [0, 1]; unsupported family")
        if eval_D(self, 0.0) > 0.0 and eval_D(self, 1.0) > 0.0:
            return "PositiveOnUnit"
        raise ValueError("diffusivity must be positive at u = 0 and u = 1")


def _real_roots(profile: DiffusivityProfile):
    """Real roots of the diffusivity polynomial.

    Returns a sorted tuple of roots (possibly empty), or the string
    ``"degenerate"`` for a quadratic double root inside [0, 1].  Uses the
    sign-matched quadratic formula: beta - alpha can be tiny near the
    double-root boundary of the family and the naive formula cancels.
    """
    a, b, c = profile.c2, profile.c1, profile.c0
    if a == 0.0:
        if b == 0.0:
            return ()
        return (-c / b,)
    disc = b * b - 4.0 * a * c
    scale = max(b * b, abs(4.0 * a * c))
    if abs(disc) <= _DEGENERATE_RTOL * scale:
        double = -b / (2.0 * a)
        if 0.0 <= double <= 1.0:
            return "degenerate"
        return ()
    if disc < 0.0:
        return ()
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    r1, r2 = q / a, c / q
    return (r1, r2) if r1 <= r2 else (r2, r1)


@dataclass(frozen=True)
class KineticProfile:
    """Kinetic term R(u) of the two-population model.

    R(u) = lambda_g*u*(1-u) + (lambda_i - lambda_g - K_i + K_g)*u*(1-u)^2 - K_g*u.

    Equal proliferation rates with zero death collapse this to the logistic
    term lam*u*(1-u); :meth:`logistic` builds that case directly and the
    reduction identity holds pointwise for every u.
    """

    lambda_i: float
    lambda_g: float
    K_i: float = 0.0
    K_g: float = 0.0

    @classmethod
    def logistic(cls, lam: float) -> "KineticProfile":
        return cls(lambda_i=lam, lambda_g=lam, K_i=0.0, K_g=0.0)

    @property
    def is_logistic(self) -> bool:
        return self.lambda_i == self.lambda_g and self.K_i == 0.0 and self.K_g == 0.0

    @property
    def _mixed(self) -> float:
        # coefficient of the u*(1-u)^2 correction term
        return self.lambda_i - self.lambda_g - self.K_i + self.K_g


def eval_D(profile: DiffusivityProfile, u):
    """Diffusivity D(u); exact quadratic evaluation, scalar or array."""
    return profile.c0 + u * (profile.c1 + u * profile.c2)


def eval_D_prime(profile: DiffusivityProfile, u):
    """First derivative D'(u)."""
    return profile.c1 + 2.0 * profile.c2 * u


def eval_D_second(profile: DiffusivityProfile, u):
    """Second derivative D''(u) (constant for a quadratic)."""
    return 2.0 * profile.c2 + 0.0 * u


def eval_R(kin: KineticProfile, u):
    """Kinetic term R(u); scalar or array."""
    one_minus = 1.0 - u
    return kin.lambda_g * u * one_minus + kin._mixed * u * one_minus * one_minus - kin.K_g * u


def eval_R_prime(kin: KineticProfile, u):
    """Derivative R'(u); R'(0) = lambda_i - K_i sets the leading-edge growth rate."""
    return kin.lambda_g * (1.0 - 2.0 * u) + kin._mixed * (1.0 - u) * (1.0 - 3.0 * u) - kin.K_g


def roots_alpha_beta(profile: DiffusivityProfile):
    """Sign-change locations of D on (0, 1).

    Returns
    -------
    (alpha, beta) : tuple of float
        The two roots in increasing order, when D changes sign twice on (0, 1).
    NO_SIGN_CHANGE
        When D keeps a single sign on [0, 1] (no interior roots).

    Raises
    ------
    DegenerateDiffusivity
        Double root (discriminant zero to relative 1e-14): reported, not
        silently ordered, because downstream classification changes
        qualitatively there.
    ValueError
        Exactly one root inside (0, 1): outside the supported model family.
    """
    r = _real_roots(profile)
    if r == "degenerate":
        a = profile.c2
        raise DegenerateDiffusivity(
            f"double diffusivity root at u = {-profile.c1 / (2.0 * a):.6g}"
        )
    inside = tuple(x for x in r if 0.0 < x < 1.0)
    if len(inside) == 2:
        return inside
    if len(inside) == 1:
        raise ValueError("diffusivity changes sign once on [0, 1]; unsupported family")
    return NO_SIGN_CHANGE


def _resolve(params_or_profile, kin):
    """Threshold ops accept either ModelParams or (profile, kinetics)."""
    if isinstance(params_or_profile, ModelParams):
        if kin is not None:
            raise TypeError("pass either ModelParams or (profile, kinetics), not both")
        return params_or_profile.diffusivity(), params_or_profile.kinetics()
    if kin is None:
        raise TypeError("kinetics required when passing an explicit profile")
    return params_or_profile, kin


def min_wave_speed(params_or_profile, kin: KineticProfile | None = None) -> float:
    """Minimum speed 2*sqrt(R'(0) * D(0)) of a nonnegative monotone front.

    Requires logistic kinetics (the threshold theory assumes them) and a
    positive diffusivity at the leading edge.
    """
    profile, kin = _resolve(params_or_profile, kin)
    if not kin.is_logistic:
        raise ValueError("minimum wave speed requires logistic kinetics")
    d0 = eval_D(profile, 0.0)
    if d0 <= 0.0:
        raise ValueError("minimum wave speed requires D(0) > 0")
    return 2.0 * math.sqrt(eval_R_prime(kin, 0.0) * d0)


def beta_node_threshold(params_or_profile, kin: KineticProfile | None = None) -> float:
    """Speed 2*sqrt(D'(beta) * R(beta)) above which the upper hole is a node."""
    profile, kin = _resolve(params_or_profile, kin)
    roots = roots_alpha_beta(profile)
    if roots is NO_SIGN_CHANGE:
        raise ValueError("no sign-changing root beta: threshold undefined")
    _, beta = roots
    val = eval_D_prime(profile, beta) * eval_R(kin, beta)
    if val < 0.0:
        raise ValueError("D'(beta) * R(beta) negative: threshold undefined")
    return 2.0 * math.sqrt(val)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, a: float, b: float, rtol: float = 1e-10) -> tuple[float, float]:
    """Golden-section maximisation of a unimodal f on [a, b]."""
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while (b - a) > rtol * max(1.0, abs(a) + abs(b)):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
    x = 0.5 * (a + b)
    return x, f(x)


def positive_D_bounds(params_or_profile, kin: KineticProfile | None = None) -> tuple[float, float]:
    """Speed bounds (s2, s1) bracketing the minimum wave speed for positive D.

    s2 = 2*sqrt(lam*D(0)) is the node threshold at the leading edge;
    s1 = sup over u in (0,1) of 2*sqrt(lam*(1-u)*D(u)) is the invariant-region
    bound.  s2 <= s1 always.  The supremum is located by golden-section search
    after a 50-point unimodality check on the derivative of (1-u)*D(u), with a
    dense-grid fallback when the sign pattern is not unimodal.
    """
    profile, kin = _resolve(params_or_profile, kin)
    if not kin.is_logistic:
        raise ValueError("positive-D bounds require logistic kinetics")
    if profile.sign_class != "PositiveOnUnit":
        raise ValueError("bounds defined only for diffusivities positive on [0, 1]")
    lam = eval_R_prime(kin, 0.0)

    def g(u):
        return (1.0 - u) * eval_D(profile, u)

    def gprime(u):
        return (1.0 - u) * eval_D_prime(profile, u) - eval_D(profile, u)

    grid = np.linspace(0.0, 1.0, 50)
    signs = np.sign(gprime(grid))
    flips = np.nonzero(np.diff(np.sign(signs[signs != 0.0])))[0]
    candidates = [(0.0, g(0.0)), (1.0, g(1.0))]
    nonzero = grid[signs != 0.0]
    if len(flips) == 0:
        pass  # monotone: endpoints already cover the supremum
    elif len(flips) == 1 and signs[signs != 0.0][0] > 0.0:
        lo = nonzero[flips[0]]
        hi = nonzero[flips[0] + 1]
        candidates.append(_golden_max(g, lo, hi))
    else:
        # not unimodal on this grid: dense scan, then refine around the argmax
        dense = np.linspace(0.0, 1.0, 100001)
        k = int(np.argmax(g(dense)))
        lo, hi = dense[max(k - 1, 0)], dense[min(k + 1, len(dense) - 1)]
        candidates.append(_golden_max(g, lo, hi))
    g_max = max(v for _, v in candidates)
    s2 = 2.0 * math.sqrt(lam * eval_D(profile, 0.0))
    s1 = 2.0 * math.sqrt(lam * g_max)
    return s2, max(s1, s2)


def flux_derivative_F(params_or_profile, kin_or_u, u=None):
    """F(u) = (D*R)'(u) = D'(u)R(u) + D(u)R'(u), the phase-plane restoring term.

    Call as ``flux_derivative_F(params, u)`` or
    ``flux_derivative_F(profile, kinetics, u)``.
    """
    if isinstance(params_or_profile, ModelParams):
        if u is not None:
            raise TypeError("pass either ModelParams or (profile, kinetics), not both")
        profile, kin, uu = params_or_profile.diffusivity(), params_or_profile.kinetics(), kin_or_u
    else:
        profile, kin, uu = params_or_profile, kin_or_u, u
    return eval_D_prime(profile, uu) * eval_R(kin, uu) + eval_D(profile, uu) * eval_R_prime(kin, uu)


@dataclass(frozen=True)
class DerivedConstants:
    """Analytic constants of one model instance.

    Fields are None when undefined for the profile's sign class (e.g. no
    (alpha, beta) for a positive diffusivity, no (s1, s2) for a sign-changing
    one).
    """

    alpha: float | None
    beta: float | None
    c_star: float
    beta_threshold: float | None
    s1: float | None
    s2: float | None


def derived_constants(params_or_profile, kin: KineticProfile | None = None) -> DerivedConstants:
    """Bundle every analytic threshold for a model instance."""
    profile, kin = _resolve(params_or_profile, kin)
    sign_class = profile.sign_class  # raises for unsupported profiles
    c_star = min_wave_speed(profile, kin)
    if sign_class == "SignChangingTwice":
        alpha, beta = roots_alpha_beta(profile)
        return DerivedConstants(
            alpha=alpha,
            beta=beta,
            c_star=c_star,
            beta_threshold=beta_node_threshold(profile, kin),
            s1=None,
            s2=None,
        )
    if sign_class == "PositiveOnUnit":
        s2, s1 = positive_D_bounds(profile, kin)
        return DerivedConstants(
            alpha=None, beta=None, c_star=c_star, beta_threshold=None, s1=s1, s2=s2
        )
    raise DegenerateDiffusivity("derived constants undefined at a double root")
