"""Method-of-types route to the typical trellis exponent.

Everything here works on joint distributions P(x, x') of a correct/incorrect
symbol pair: the pairwise-distance average Delta_s(P), the divergence
D(P || QxQ), the constrained minimum Z(.) in its direct (tilted-family) and
Legendre forms, the nested rate optimization, and the dominant joint type.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .channels import Dmc, InputDist, chernoff_matrix
from .exponents import RateOutOfRange, cutoff_rate, expurgated_ex, expurgated_ex_limit

PROB_ATOL = 1e-12


class NormalizerZero(ArithmeticError):
    pass


@dataclass(frozen=True)
class JointType:
    """Joint distribution P(x, x') on pairs of channel input symbols."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"joint type must be square, got shape {p.shape}")
        if np.any(p < 0):
            raise ValueError("negative joint-type entry")
        if abs(p.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"joint type sums to {p.sum()!r}")
        p = p / p.sum()
        p.flags.writeable = False
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class DominantEvent:
    p_star: JointType
    rho: float
    rate: float
    divergence: float
    delta_half: float
    critical_length_factor: float


def delta_s(p: JointType, dmc: Dmc, s: float) -> float:
    """Average Chernoff distance sum_{x,x'} P(x,x') d_s(x,x')."""
    d = chernoff_matrix(dmc, s)
    mask = p.p > 0
    if np.any(mask & np.isinf(d)):
        return np.inf
    return float(np.sum(p.p[mask] * d[mask]))


def delta_max(p: JointType, dmc: Dmc) -> tuple[float, float]:
    """Maximize Delta_s(P) over s in [0, 1]; returns (value, argmax s).

    Delta_s is concave in s, so a bounded scalar search suffices.  For a
    P that yields a constant zero (e.g. diagonal types) the reported argmax
    is the tie-break s = 1/2.
    """
    # disjoint-support pairs with positive mass make the max infinite
    if np.isinf(delta_s(p, dmc, 0.5)):
        return np.inf, 0.5
    res = minimize_scalar(
        lambda s: -delta_s(p, dmc, s), bounds=(0.0, 1.0), method="bounded",
        options={"xatol": 1e-10},
    )
    value = -res.fun
    if value <= 1e-15:
        return max(value, 0.0), 0.5
    return float(value), float(res.x)


def divergence_qq(p: JointType, q: InputDist) -> float:
    """KL divergence D(P || QxQ) in nats, with 0 ln 0 = 0."""
    qq = np.outer(q.q, q.q)
    mask = p.p > 0
    if np.any(mask & (qq <= 0)):
        return np.inf
    return float(np.sum(p.p[mask] * np.log(p.p[mask] / qq[mask])))


def _diag_divergence(q: InputDist) -> float:
    """Divergence of the best (minimum-D) diagonal joint type, -ln sum Q^2."""
    return -np.log(np.sum(q.q ** 2))


def z_of_rhat_legendre(dmc: Dmc, q: InputDist, rhat: float) -> float:
    """Legendre form of Z: sup_{rho >= 0} [Ex(rho, Q) - 2 rho rhat]."""
    if rhat < 0:
        raise ValueError(f"rhat must be >= 0, got {rhat}")
    if rhat == 0.0:
        return expurgated_ex_limit(dmc, q)
    if 2 * rhat >= _diag_divergence(q):
        return 0.0  # objective has nonpositive slope at rho = 0
    obj = lambda rho: expurgated_ex(dmc, q, rho) - 2 * rho * rhat
    hi = 1.0
    while obj(2 * hi) > obj(hi) and hi < 1e9:
        hi *= 2
    res = minimize_scalar(
        lambda rho: -obj(rho), bounds=(0.0, 2 * hi), method="bounded",
        options={"xatol": 1e-10},
    )
    return max(0.0, float(-res.fun))


def _tilted_type(dmc: Dmc, q: InputDist, rho: float) -> np.ndarray:
    """Tilted family member P_rho proportional to Q(x)Q(x') e^{-d_{1/2}/rho}."""
    d = chernoff_matrix(dmc, 0.5)
    qq = np.outer(q.q, q.q)
    with np.errstate(over="ignore"):
        weights = qq * np.exp(-np.where(np.isinf(d), np.inf, d) / rho)
    weights[np.isinf(d)] = 0.0  # e^{-inf} = 0: infinite-distance pairs carry no mass
    norm = weights.sum()
    if norm <= 0.0:
        raise NormalizerZero("tilted family degenerate: all mass annihilated")
    return weights / norm


def z_of_rhat_direct(dmc: Dmc, q: InputDist, rhat: float) -> tuple[float, JointType]:
    """Direct form of Z: min Delta_{1/2}(P) s.t. D(P || QxQ) <= 2 rhat.

    Solved through the tilted family P_rho, whose divergence decreases
    monotonically in rho; rho is bisected until the divergence constraint is
    active (or the unconstrained diagonal minimum is feasible).
    """
    if rhat < 0:
        raise ValueError(f"rhat must be >= 0, got {rhat}")
    qq = np.outer(q.q, q.q)
    if rhat == 0.0:
        p = JointType(qq)
        return delta_s(p, dmc, 0.5), p
    if 2 * rhat >= _diag_divergence(q) - 1e-13:
        # constraint slack: the zero-Delta diagonal type is feasible
        diag = np.diag(q.q ** 2 / np.sum(q.q ** 2))
        return 0.0, JointType(diag)

    target = 2 * rhat

    def div_at(rho):
        return divergence_qq(JointType(_tilted_type(dmc, q, rho)), q)

    lo, hi = 1.0, 1.0
    while div_at(lo) < target:
        lo /= 2
        if lo < 1e-14:
            break
    while div_at(hi) > target:
        hi *= 2
        if hi > 1e14:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        dm = div_at(mid)
        if abs(dm - target) <= 1e-13:
            lo = hi = mid
            break
        if dm > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    p = JointType(_tilted_type(dmc, q, 0.5 * (lo + hi)))
    return delta_s(p, dmc, 0.5), p


def csiszar_exponent(dmc: Dmc, q: InputDist, rate: float) -> float:
    """Nested types-form exponent inf_{rhat < R} (Z(2 rhat) + rhat)/(R - rhat).

    Z is evaluated in Legendre form; the rhat search is a 256-point scan
    followed by a bounded refinement of the located basin.
    """
    r0 = cutoff_rate(dmc, q)
    if not 0 < rate < r0 + 1e-12:
        raise RateOutOfRange(f"need 0 < R < R0={r0:.6g}, got {rate}")

    def obj(rhat):
        return (z_of_rhat_legendre(dmc, q, rhat) + rhat) / (rate - rhat)

    grid = np.linspace(0.0, rate * (1.0 - 1e-9), 256)
    values = [obj(rh) for rh in grid]
    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(obj, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-9})
    return float(min(res.fun, values[i]))


def dominant_joint_type(dmc: Dmc, q: InputDist, rho: float) -> DominantEvent:
    """Dominant error-event joint type P* at tilt rho, with the critical-length
    factor evaluated at the rate R for which rho = rho_trtc(R)."""
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    p = JointType(_tilted_type(dmc, q, rho))
    div = divergence_qq(p, q)
    delta = delta_s(p, dmc, 0.5)
    rate = expurgated_ex(dmc, q, rho) / (2 * rho - 1) if rho > 0.5 else np.nan
    # span factor 1 + theta(D) with theta(D) = D / (2R - D)
    factor = 2 * rate / (2 * rate - div) if np.isfinite(rate) else np.nan
    return DominantEvent(p, rho, rate, div, delta, factor)
