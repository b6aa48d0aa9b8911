"""Closed-form calculators for LSI constants, condition numbers and chaos bounds.

Every function here is a pure map from declared constants to a number.
Hidden universal or polylogarithmic constants are exposed as explicit
arguments that default to 1, and results that depend on them carry an
``up_to_constants`` flag.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import NamedTuple

from .exceptions import DomainError

SETTINGS = ("strongly_convex", "lsi_pairwise", "lsi_general")


@dataclass(frozen=True)
class RegularityParams:
    """Declared regularity constants of a mean-field model.

    The pairwise constants follow the convention that ``U`` is
    ``alpha``-uniformly convex and ``beta``-smooth; alphas may be <= 0.
    ``osc_V1``/``osc_W1`` are oscillations of bounded perturbations, and
    ``alpha_V``/``alpha_W`` then refer to the convex parts. ``beta``, ``B``
    and ``lam`` describe a general functional model (smoothness of the
    Wasserstein gradient, a uniform bound on it, weight decay). The three
    ``clsi_*`` fields are declared log-Sobolev constants of the mean-field
    law, of the N-particle law and the uniform proximal Gibbs bound.
    """

    sigma: float
    alpha_V: float | None = None
    beta_V: float | None = None
    alpha_W: float | None = None
    beta_W: float | None = None
    osc_V1: float | None = None
    osc_W1: float | None = None
    beta: float | None = None
    B: float | None = None
    lam: float | None = None
    clsi_pi: float | None = None
    clsi_muN: float | None = None
    clsi_bar: float | None = None

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        for name in ("beta_V", "beta_W", "osc_V1", "osc_W1", "beta", "B", "lam",
                     "clsi_pi", "clsi_muN", "clsi_bar"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")

    @property
    def sigma2(self):
        return self.sigma ** 2

    @property
    def alpha_W_neg(self):
        """Negative part ``min(alpha_W, 0)``."""
        return min(self._need("alpha_W"), 0.0)

    def _need(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise DomainError(f"missing declared constant(s): {', '.join(missing)}")
        values = tuple(float(getattr(self, n)) for n in names)
        return values if len(values) > 1 else values[0]

    @classmethod
    def from_mapping(cls, mapping):
        """Build from a str->str or str->float mapping, ignoring unknown keys."""
        known = {f.name for f in fields(cls)}
        aliases = {"lambda": "lam", "sigma2": None}
        kwargs = {}
        for key, value in mapping.items():
            key = aliases.get(key, key)
            if key in known:
                kwargs[key] = float(value)
        if "sigma" not in kwargs and "sigma2" in mapping:
            kwargs["sigma"] = math.sqrt(float(mapping["sigma2"]))
        return cls(**kwargs)

    def with_(self, **changes):
        return replace(self, **changes)


class HolleyStroock(NamedTuple):
    clsi_pi: float
    clsi_bar: float
    weak_interaction: bool


class StationaryLSI(NamedTuple):
    value: float
    n_threshold: float
    order_of_magnitude: bool = True


class RhoCheck(NamedTuple):
    rho: float
    passed: bool


class WeakBounds(NamedTuple):
    w2sq: float
    kl: float


class GeneralBound(NamedTuple):
    kl: float
    w2sq: float
    valid: bool


# -- LSI constants ---------------------------------------------------------

def lsi_bakry_emery(params):
    """LSI constant bound ``sigma^2 / (2 (alpha_V + alpha_W))`` for the mean-field law."""
    a_v, a_w = params._need("alpha_V", "alpha_W")
    if a_v + a_w <= 0:
        raise DomainError("Bakry-Emery needs alpha_V + alpha_W > 0")
    return params.sigma2 / (2.0 * (a_v + a_w))


def finite_particle_regularity(params, N):
    """Convexity and smoothness of ``-log mu^{1:N}`` for the pairwise model.

    Returns ``(convexity, smoothness)``; either entry is None when the
    constants it needs are not declared. Only the negative part of
    ``alpha_W`` enters the convexity.
    """
    if N < 2:
        raise DomainError("the pairwise N-particle law needs N >= 2")
    c = 2.0 / params.sigma2
    ratio = N / (N - 1)
    convexity = smoothness = None
    if params.alpha_V is not None and params.alpha_W is not None:
        convexity = c * (params.alpha_V + ratio * params.alpha_W_neg)
    if params.beta_V is not None and params.beta_W is not None:
        smoothness = c * (params.beta_V + ratio * params.beta_W)
    return convexity, smoothness


def lsi_holley_stroock(params, N):
    """LSI constants for bounded perturbations of convex confinement/interaction.

    ``alpha_V``, ``alpha_W`` are read as the constants of the convex parts
    ``V0``, ``W0``. Returns the bound on ``C_LSI(pi)``, the uniform constant
    ``C_bar`` (which also bounds ``C_LSI(mu^{1:N})``), and whether
    ``sigma^2 / (beta_W C_bar) >= sqrt(6)``.
    """
    if N < 2:
        raise DomainError("N must be >= 2")
    a_v, a_w = params._need("alpha_V", "alpha_W")
    osc = (params.osc_V1 or 0.0) + (params.osc_W1 or 0.0)
    factor = math.exp(2.0 / params.sigma2 * osc)
    denom_bar = a_v + N / (N - 1) * min(a_w, 0.0)
    if denom_bar <= 0:
        raise DomainError("alpha_V0 + N/(N-1) * alpha_W0^- must be > 0")
    if a_v + a_w <= 0:
        raise DomainError("alpha_V0 + alpha_W0 must be > 0")
    c_bar = params.sigma2 / denom_bar * factor
    c_pi = params.sigma2 / (2.0 * (a_v + a_w)) * factor
    weak = False
    if params.beta_W is not None:
        weak = (params.beta_W == 0
                or params.sigma2 / (params.beta_W * c_bar) >= math.sqrt(6.0) * (1.0 - 1e-12))
    return HolleyStroock(c_pi, c_bar, weak)


def lsi_lipschitz_perturbation(alpha, L):
    """LSI constant of ``exp(-H - V)`` with ``V`` alpha-strongly convex and ``H`` L-Lipschitz."""
    if not alpha > 0:
        raise DomainError("alpha must be > 0")
    if L < 0:
        raise DomainError("L must be >= 0")
    return math.exp(L * L / alpha + 4.0 * L / math.sqrt(alpha)) / alpha


def lsi_proximal_gibbs(params):
    """Uniform LSI bound for proximal Gibbs measures of a general model."""
    lam, B = params._need("lam", "B")
    if lam <= 0:
        raise DomainError("weight decay lam must be > 0")
    s2, s = params.sigma2, params.sigma
    return s2 / (2.0 * lam) * math.exp(2.0 * B * B / (lam * s2) + 8.0 * B / (math.sqrt(2.0 * lam) * s))


def lsi_stationary_uniform(params, d):
    """Order-of-magnitude uniform-in-N LSI bound for ``mu^{1:N}`` (general model).

    All hidden universal constants are set to 1. ``n_threshold`` is the
    particle count below which the bound says nothing.
    """
    lam, B, beta = params._need("lam", "B", "beta")
    if lam <= 0:
        raise DomainError("weight decay lam must be > 0")
    s2 = params.sigma2
    t = B * B / (lam * s2)
    value = s2 / lam * math.exp(t + beta * d / lam * math.exp(16.0 * t))
    threshold = beta * d / lam * math.exp(8.0 * t)
    return StationaryLSI(value, threshold, True)


def weak_interaction_rho(params):
    """Ratio ``sigma^4 / (8 beta_W^2 C_LSI(pi)^2)`` and whether it is at least 3."""
    beta_w = params._need("beta_W")
    if params.clsi_pi is None:
        raise DomainError("weak_interaction_rho needs a declared clsi_pi")
    if beta_w <= 0:
        raise DomainError("beta_W must be > 0")
    rho = params.sigma2 ** 2 / (8.0 * beta_w ** 2 * params.clsi_pi ** 2)
    # tolerate round-off exactly at the boundary
    return RhoCheck(rho, rho >= 3.0 * (1.0 - 1e-12))


# -- propagation-of-chaos bounds -------------------------------------------

def poc_sharp_n(k, d, eps, c_log=1.0):
    """Particle count ``max(100, ceil(c_log k sqrt(d) / eps))`` for KL below eps^2."""
    if not eps > 0:
        raise DomainError("eps must be > 0")
    return max(100, math.ceil(c_log * k * math.sqrt(d) / eps))


def poc_weak_bounds(params, N, k, d):
    """W2^2 and KL bounds between ``mu^{1:k}`` and ``pi^{(x)k}`` under strong convexity."""
    a_v, a_w, b_v, b_w = params._need("alpha_V", "alpha_W", "beta_V", "beta_W")
    a_neg = min(a_w, 0.0)
    alpha = a_v + a_neg
    if alpha <= 0:
        raise DomainError("alpha_V + alpha_W^- must be > 0")
    n_min = max((a_v - a_neg) / alpha, 2.0)
    if N < n_min:
        raise DomainError(f"N = {N} below the required minimum {n_min:g}")
    if not 1 <= k <= N:
        raise DomainError(f"k must lie in [1, N], got {k}")
    w2sq = 4.0 * b_w ** 2 * params.sigma2 * d / alpha ** 3 * k / N
    kl = 132.0 * b_w ** 2 * (b_v + b_w) ** 2 * d / alpha ** 4 * k / N
    return WeakBounds(w2sq, kl)


def poc_general_bound(params, N, k, d):
    """KL bound ``33 beta C_bar d k / (sigma^2 N)`` with its Talagrand W2^2 companion.

    ``valid`` reports whether ``N >= 160 beta C_bar / sigma^2``.
    """
    beta, c_bar = params._need("beta", "clsi_bar")
    s2 = params.sigma2
    kl = 33.0 * beta * c_bar * d * k / (s2 * N)
    return GeneralBound(kl, 2.0 * c_bar * kl, N >= 160.0 * beta * c_bar / s2)


def condition_number(params, setting):
    """Condition number ``beta / alpha`` for one of :data:`SETTINGS`."""
    if setting == "strongly_convex":
        b_v, b_w, a_v = params._need("beta_V", "beta_W", "alpha_V")
        beta = b_v + b_w
        alpha = a_v + params.alpha_W_neg
    elif setting == "lsi_pairwise":
        b_v, b_w, c_pi, c_mu = params._need("beta_V", "beta_W", "clsi_pi", "clsi_muN")
        beta = b_v + b_w
        alpha = params.sigma2 / (2.0 * max(c_pi, c_mu))
    elif setting == "lsi_general":
        beta, c_mu, c_bar = params._need("beta", "clsi_muN", "clsi_bar")
        alpha = params.sigma2 / (2.0 * max(c_mu, c_bar))
    else:
        raise ValueError(f"unknown setting {setting!r}; expected one of {SETTINGS}")
    if alpha <= 0:
        raise DomainError("effective convexity alpha must be > 0")
    return beta / alpha


# -- complexity planner ----------------------------------------------------

@dataclass(frozen=True)
class Rate:
    """Monomial ``kappa^a d^b / eps^c`` with rational exponents."""

    kappa: Fraction
    d: Fraction
    eps: Fraction

    @classmethod
    def of(cls, kappa, d, eps):
        return cls(Fraction(kappa), Fraction(d), Fraction(eps))

    def __call__(self, kappa, d, eps):
        return kappa ** float(self.kappa) * d ** float(self.d) / eps ** float(self.eps)

    def __str__(self):
        num = " ".join(p for p in (_power("kappa", self.kappa), _power("d", self.d)) if p)
        den = _power("eps", self.eps)
        num = num or "1"
        return f"{num}/{den}" if den else num


def _power(symbol, exponent):
    if exponent == 0:
        return ""
    if exponent == 1:
        return symbol
    if exponent.denominator == 1:
        return f"{symbol}^{exponent.numerator}"
    return f"{symbol}^{{{exponent.numerator}/{exponent.denominator}}}"


@dataclass(frozen=True)
class _Block:
    assumptions: tuple
    setting: str
    rows: tuple  # (metric, sampler, M rate, N rate)


_R = Rate.of
TABLE = {
    "sharp": _Block(
        ("smoothness", "pi_lsi", "weak_interaction", "lsi_N"), "lsi_pairwise",
        (("w2", "LMC", _R(2, 1, 2), _R(0, "1/2", 1)),
         ("w2", "MALA-PS", _R(1, "3/4", "1/2"), _R(0, "1/2", 1)),
         ("w2", "ULMC-PS", _R("3/2", "1/2", 1), _R(0, "1/2", 1)))),
    "sharp_convex": _Block(
        ("smoothness", "weak_interaction", "strong_convexity"), "strongly_convex",
        (("w2", "ULMC+", _R(1, "1/3", "2/3"), _R(0, "1/2", 1)),)),
    "strongly_convex": _Block(
        ("smoothness", "strong_convexity"), "strongly_convex",
        (("sqrt_kl", "LMC", _R(2, 1, 2), _R(4, 1, 2)),
         ("sqrt_kl", "ULMC", _R("3/2", "1/2", 1), _R(4, 1, 2)),
         ("w2", "LMC", _R(1, 1, 2), _R(2, 1, 2)),
         ("w2", "ULMC+", _R(1, "1/3", "2/3"), _R(2, 1, 2)))),
    "general": _Block(
        ("functional_convexity", "functional_smoothness", "prox_gibbs_lsi", "lsi_N"), "lsi_general",
        (("sqrt_kl", "LMC", _R(2, 1, 2), _R(1, 1, 2)),
         ("sqrt_kl", "ULMC-PS", _R("3/2", "1/2", 1), _R(1, 1, 2)))),
}
METRICS = ("w2", "sqrt_kl")


@dataclass(frozen=True)
class Plan:
    """One row of the complexity planner.

    ``M`` and ``N`` are evaluated with polylog factors set to 1; the
    symbolic formulas are kept alongside. ``metric`` ``"w2"`` means the
    scaled distance ``sqrt(alpha)/sigma * W2``.
    """

    sampler: str
    metric: str
    assumptions: tuple
    M: float
    N: int
    M_formula: str
    N_formula: str
    kappa: float
    up_to_constants: bool = True
    warnings: tuple = field(default=())

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("planned M and N must be >= 1")


def resolve_block(assumptions):
    """Map a block name or a collection of assumption names to a table block name."""
    if isinstance(assumptions, str):
        if assumptions in TABLE:
            return assumptions
        assumptions = [a.strip() for a in assumptions.split(",") if a.strip()]
    wanted = frozenset(assumptions)
    for name, block in TABLE.items():
        if frozenset(block.assumptions) == wanted:
            return name
    raise ValueError(f"assumptions {sorted(wanted)} match no table block; "
                     f"known blocks: {', '.join(TABLE)}")


def plan(metric, eps, d, k=1, assumptions="sharp", params=None, kappa=None):
    """Instantiate every sampler row of the matching table block.

    Parameters
    ----------
    metric : {"w2", "sqrt_kl"} or None
        None returns all rows of the block.
    eps : float
        Target accuracy, > 0.
    d, k : int
        Dimension and number of output particles. The particle count
        scales linearly in ``k`` (all chaos bounds are linear in k/N or
        k sqrt(d)/N); the oracle count does not depend on ``k``.
    assumptions : str or iterable of str
        Block name (``sharp``, ``sharp_convex``, ``strongly_convex``,
        ``general``) or the set of assumption names defining it.
    params : RegularityParams, optional
        Used to compute the condition number for the block's setting.
    kappa : float, optional
        Overrides the condition number.
    """
    if not eps > 0:
        raise DomainError("eps must be > 0")
    if d < 1 or k < 1:
        raise DomainError("d and k must be >= 1")
    if metric is not None and metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    name = resolve_block(assumptions)
    block = TABLE[name]
    if kappa is None:
        if params is None:
            raise DomainError("plan needs params or an explicit kappa")
        kappa = condition_number(params, block.setting)
    notes = []
    if kappa > math.sqrt(d) / eps:
        notes.append(f"kappa = {kappa:g} exceeds sqrt(d)/eps = {math.sqrt(d) / eps:g}; "
                     "simplified rates may be loose")
        warnings.warn(notes[-1], stacklevel=2)
    rows = []
    for row_metric, sampler, m_rate, n_rate in block.rows:
        if metric is not None and row_metric != metric:
            continue
        rows.append(Plan(
            sampler=sampler, metric=row_metric, assumptions=block.assumptions,
            M=max(1.0, m_rate(kappa, d, eps)),
            N=max(1, math.ceil(k * n_rate(kappa, d, eps))),
            M_formula=str(m_rate), N_formula=str(n_rate),
            kappa=kappa, warnings=tuple(notes)))
    if not rows:
        raise ValueError(f"block {name!r} has no rows for metric {metric!r}")
    return rows
