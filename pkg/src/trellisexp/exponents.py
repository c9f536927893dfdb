"""Gallager-style exponent functions and the three trellis exponent curves.

E0 is the Gallager function, Ex the expurgated function; the curves are

  rtc :  R0(Q)/R for R < R0(Q)                    (random trellis coding)
  cex :  Ex(rho_cex(R), Q)/R,  R = Ex(rho)/rho    (convolutional expurgated)
  trtc:  Ex(rho_trtc(R), Q)/R, R = Ex(rho)/(2rho-1)  (typical random trellis)

all per unit of constraint length, with rates in nats/channel-use.
"""

from dataclasses import dataclass

import numpy as np

from .channels import Dmc, InputDist, bhattacharyya_matrix

RHO_MAX = 1e6
RESIDUAL_TOL = 1e-10

CURVE_KINDS = ("rtc", "cex", "trtc", "rtimes_rtc", "rtimes_cex", "rtimes_trtc")


class RateOutOfRange(ValueError):
    pass


class NotBinaryInput(ValueError):
    pass


class NotUniformQ(ValueError):
    pass


@dataclass(frozen=True)
class RhoValue:
    rho: float
    residual: float = 0.0


@dataclass(frozen=True)
class ExponentCurve:
    kind: str
    points: list  # (rate, value, rho or None)


def gallager_e0(dmc: Dmc, q: InputDist, rho: float) -> float:
    """Gallager function E0(rho, Q) in nats, rho >= 0."""
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    inner = (q.q[:, None] * dmc.w ** (1.0 / (1.0 + rho))).sum(axis=0)
    return -np.log(np.sum(inner ** (1.0 + rho)))


def expurgated_ex(dmc: Dmc, q: InputDist, rho: float) -> float:
    """Expurgated function Ex(rho, Q) = -rho ln sum QQ' Z(x,x')^{1/rho}."""
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    if rho == 0.0:
        return 0.0
    z = bhattacharyya_matrix(dmc)
    qq = np.outer(q.q, q.q)
    return -rho * np.log(np.sum(qq * z ** (1.0 / rho)))


def expurgated_ex_limit(dmc: Dmc, q: InputDist) -> float:
    """Zero-rate expurgated exponent lim_{rho->inf} Ex(rho, Q) = -E[ln Z]."""
    z = bhattacharyya_matrix(dmc)
    qq = np.outer(q.q, q.q)
    with np.errstate(divide="ignore"):
        logz = np.log(z)
    mass = qq > 0
    if np.any(mass & (z <= 0)):
        return np.inf
    return -float(np.sum(qq[mass] * logz[mass]))


def cutoff_rate(dmc: Dmc, q: InputDist) -> float:
    """Cutoff rate R0(Q) = E0(1, Q) = Ex(1, Q), cross-checked to 1e-10."""
    r0 = gallager_e0(dmc, q, 1.0)
    r0x = expurgated_ex(dmc, q, 1.0)
    if abs(r0 - r0x) > 1e-10:
        raise ArithmeticError(f"E0(1) and Ex(1) disagree: {r0} vs {r0x}")
    return r0


def critical_rate(dmc: Dmc, q: InputDist, h: float = 1e-5) -> float:
    """Critical rate dE0/drho at rho=1 by central difference with Richardson step."""
    d1 = (gallager_e0(dmc, q, 1.0 + h) - gallager_e0(dmc, q, 1.0 - h)) / (2 * h)
    h2 = h / 2
    d2 = (gallager_e0(dmc, q, 1.0 + h2) - gallager_e0(dmc, q, 1.0 - h2)) / (2 * h2)
    return (4 * d2 - d1) / 3


def _bisect_decreasing(g, lo, hi, tol=RESIDUAL_TOL, max_iter=200):
    """Root of a decreasing function with g(lo) >= 0 >= g(hi)."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= tol:
            return mid, gm
        if gm > 0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    return mid, g(mid)


def solve_rho(curve_kind: str, dmc: Dmc, q: InputDist, rate: float) -> RhoValue:
    """Solve the defining rho-equation of a curve at rate R (nats).

    cex : R = Ex(rho)/rho, rho >= 1
    trtc: R = Ex(rho)/(2 rho - 1), rho >= 1
    rtc : R = E0(rho)/rho for R > R0(Q), rho in (0, 1)
    """
    r0 = cutoff_rate(dmc, q)
    if curve_kind in ("cex", "trtc"):
        if not 0 < rate < r0 + RESIDUAL_TOL:
            raise RateOutOfRange(f"need 0 < R < R0={r0:.6g}, got R={rate}")
        if curve_kind == "cex":
            g = lambda rho: expurgated_ex(dmc, q, rho) / rho - rate
        else:
            g = lambda rho: expurgated_ex(dmc, q, rho) / (2 * rho - 1) - rate
        if g(1.0) <= RESIDUAL_TOL:
            return RhoValue(1.0, g(1.0))
        hi = 2.0
        while g(hi) > 0:
            hi *= 2
            if hi > RHO_MAX:
                # beyond the cap the curve is flat: zero-rate regime
                return RhoValue(RHO_MAX, g(RHO_MAX))
        rho, res = _bisect_decreasing(g, 1.0, hi)
        return RhoValue(rho, res)
    if curve_kind == "rtc":
        if rate <= r0:
            raise RateOutOfRange(f"rtc rho branch needs R > R0={r0:.6g}")
        g = lambda rho: gallager_e0(dmc, q, rho) / rho - rate
        if g(1e-12) < 0:
            raise RateOutOfRange("R exceeds the mutual information of (Q, W)")
        rho, res = _bisect_decreasing(g, 1e-12, 1.0)
        return RhoValue(rho, res)
    raise ValueError(f"unknown curve kind {curve_kind!r}")


def exponent_curve(kind: str, dmc: Dmc, q: InputDist, rate_grid) -> ExponentCurve:
    """Evaluate one exponent curve (or its R-times variant) on a rate grid."""
    if kind not in CURVE_KINDS:
        raise ValueError(f"unknown curve kind {kind!r}")
    rates = np.asarray(rate_grid, dtype=float)
    if rates.size > 1 and np.any(np.diff(rates) <= 0):
        raise ValueError("rate grid must be strictly increasing")
    base = kind.removeprefix("rtimes_")
    times_r = kind.startswith("rtimes_")
    r0 = cutoff_rate(dmc, q)
    points = []
    for rate in rates:
        if not 0 < rate < r0 + RESIDUAL_TOL:
            raise RateOutOfRange(f"R={rate} outside (0, R0={r0:.6g}) for {kind}")
        if base == "rtc":
            value, rho = r0 / rate, None
        else:
            sol = solve_rho(base, dmc, q, rate)
            rho = sol.rho
            value = expurgated_ex(dmc, q, rho) / rate
        if times_r:
            value *= rate
        points.append((float(rate), float(value), rho))
    return ExponentCurve(kind, points)


def costello_form_cex(dmc: Dmc, q: InputDist, rate: float) -> float:
    """Closed-form cex exponent ln Z / ln(2 e^{-R} - 1) for binary-input
    channels under the uniform input distribution (R in nats)."""
    if dmc.num_inputs != 2:
        raise NotBinaryInput(f"channel has {dmc.num_inputs} inputs")
    if np.max(np.abs(q.q - 0.5)) > 1e-9:
        raise NotUniformQ(f"q={q.q} is not uniform")
    r0 = cutoff_rate(dmc, q)
    if not 0 < rate < r0 + RESIDUAL_TOL:
        raise RateOutOfRange(f"need 0 < R < R0={r0:.6g}, got {rate}")
    z = bhattacharyya_matrix(dmc)[0, 1]
    if z >= 1.0:
        return 0.0  # useless channel: identical rows, degenerate form
    return np.log(z) / np.log(2.0 * np.exp(-rate) - 1.0)
