"""Channels with one-step input memory and mismatched metrics.

The pairwise distance generalizes to d_s(x, x-; x', x-') and the expurgated
generator becomes rho * G_s(1/rho) with G_s(r) = -ln lambda_s(r), lambda_s(r)
the Perron-Frobenius eigenvalue of the J^2 x J^2 tilted pair-chain matrix.
Channels remembering p > 1 past inputs are handled by lifting to an alphabet
of size J^p with a sparse consistency mask.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .channels import PROB_ATOL, NonStochasticRow
from .exponents import RateOutOfRange

S_MAX_DEFAULT = 8.0
S_SCAN_POINTS = 64


class MetricZeroInRatio(ArithmeticError):
    pass


class ConvergenceFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class MarkovChannel:
    """Channel W(y | x, x_prev) with an optional mismatched metric W~.

    `w` has shape (J, J, Y) indexed [x, x_prev, y].  For lifted channels,
    `allowed[x, x_prev]` masks inconsistent symbol transitions and
    `newest[x]` maps a lifted symbol to the base-alphabet symbol it reveals
    (the component that carries the Q-weight in the pair chain).
    """

    w: np.ndarray
    w_tilde: np.ndarray = None
    allowed: np.ndarray = None
    newest: np.ndarray = None
    base_size: int = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 3 or w.shape[0] != w.shape[1]:
            raise ValueError(f"w must have shape (J, J, Y), got {w.shape}")
        j = w.shape[0]
        allowed = self.allowed
        allowed = np.ones((j, j), bool) if allowed is None else np.asarray(allowed, bool)
        sums = w.sum(axis=2)
        if np.any(np.abs(sums[allowed] - 1.0) > PROB_ATOL):
            raise NonStochasticRow("some allowed (x, x_prev) row does not sum to 1")
        wt = w if self.w_tilde is None else np.asarray(self.w_tilde, dtype=float)
        if wt.shape != w.shape:
            raise ValueError("w_tilde shape differs from w")
        newest = self.newest
        newest = np.arange(j) if newest is None else np.asarray(newest, int)
        base = self.base_size if self.base_size is not None else j
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "w_tilde", wt)
        object.__setattr__(self, "allowed", allowed)
        object.__setattr__(self, "newest", newest)
        object.__setattr__(self, "base_size", base)

    @property
    def num_symbols(self):
        return self.w.shape[0]

    @property
    def matched(self):
        return self.w_tilde is self.w or np.array_equal(self.w_tilde, self.w)


def memoryless_lift(dmc_w) -> MarkovChannel:
    """Embed a memoryless channel matrix W(y|x) as a MarkovChannel."""
    w = np.asarray(getattr(dmc_w, "w", dmc_w), dtype=float)
    j = w.shape[0]
    return MarkovChannel(np.broadcast_to(w[:, None, :], (j, j, w.shape[1])).copy())


@dataclass(frozen=True)
class TiltedMatrix:
    a: np.ndarray  # (J^2, J^2), rows (x, x'), columns (x_prev, x_prev')
    s: float
    r: float


def markov_chernoff(ch: MarkovChannel, x, xm, xp, xpm, s: float) -> float:
    """Distance d_s(x, x-; x', x-') = -ln sum_y W(y|x,x-) [W~(y|x',x-')/W~(y|x,x-)]^s.

    May be negative under mismatch; s >= 0 is unrestricted above.
    """
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    w = ch.w[x, xm]
    wt = ch.w_tilde[x, xm]
    wtp = ch.w_tilde[xp, xpm]
    support = w > 0
    if s > 0 and np.any(support & (wt <= 0)):
        raise MetricZeroInRatio(
            f"metric W~(y|{x},{xm}) vanishes on the support of W(y|{x},{xm})"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(support, (wtp / np.where(support, wt, 1.0)) ** s, 0.0)
    total = float(np.sum(w[support] * ratio[support]))
    if total <= 0.0:
        return np.inf
    return -np.log(total)


def _distance_tensor(ch: MarkovChannel, s: float) -> np.ndarray:
    """d_s for all (x, xm, x', xm'), shape (J, J, J, J)."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    w = ch.w          # (x, xm, y)
    wt = ch.w_tilde
    support = w > 0
    if s > 0:
        bad = support & (wt <= 0)
        if np.any(bad[ch.allowed]):
            raise MetricZeroInRatio("metric vanishes on the channel support")
    safe_wt = np.where(support, np.where(wt > 0, wt, 1.0), 1.0)
    # base[x, xm, y] = W / W~^s ; tilt[x', xm', y] = W~^s
    base = np.where(support, w * safe_wt ** (-s), 0.0)
    tilt = np.where(wt > 0, wt, 0.0) ** s
    total = np.einsum("aby,cdy->abcd", base, tilt)
    with np.errstate(divide="ignore"):
        return -np.log(total)


def build_tilted(ch: MarkovChannel, q, s: float, r: float) -> TiltedMatrix:
    """Tilted pair-chain matrix A_s(r) with entries Q Q' e^{-r d_s}, masked.

    `q` is the input distribution over the base alphabet; lifted symbols are
    weighted by the Q-probability of their newest component.
    """
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r}")
    qv = np.asarray(getattr(q, "q", q), dtype=float)
    j = ch.num_symbols
    qn = qv[ch.newest]
    d = _distance_tensor(ch, s)  # (x, xm, x', xm')
    with np.errstate(over="ignore"):
        ent = np.exp(np.clip(-r * d, -745.0, 700.0))
    ent[np.isinf(d) & (d > 0)] = 0.0 if r > 0 else 1.0
    # rows (x, x'), columns (xm, xm')
    a = (qn[:, None, None, None] * qn[None, :, None, None]
         * np.transpose(ent, (0, 2, 1, 3)))
    mask = (ch.allowed[:, None, :, None] & ch.allowed[None, :, None, :])
    a = np.where(mask, a, 0.0)
    return TiltedMatrix(a.reshape(j * j, j * j), s, r)


def perron_frobenius(tm: TiltedMatrix, tol: float = 1e-13,
                     max_iter: int = 100_000) -> float:
    """Spectral radius of the nonnegative tilted matrix.

    Power iteration from the all-ones vector; if the mask makes the matrix
    periodic or reducible and the iteration fails to settle, fall back to a
    dense eigenvalue solve.
    """
    a = tm.a
    n = a.shape[0]
    v = np.ones(n)
    lam = 0.0
    for _ in range(max_iter):
        w = a @ v
        norm = w.sum()
        if norm <= 0.0:
            return 0.0
        lam_new = norm / v.sum()
        w /= norm
        if abs(lam_new - lam) <= tol * max(lam_new, 1e-300):
            # accept only if the eigen-residual confirms convergence
            resid = np.linalg.norm(a @ w - lam_new * w)
            if resid <= 1e-10 * max(lam_new, 1e-300):
                return float(lam_new)
        lam, v = lam_new, w
    ev = np.linalg.eigvals(a)
    return float(np.max(np.abs(ev)))


def g_s(ch: MarkovChannel, q, s: float, r: float) -> float:
    """Rate-function generator G_s(r) = -ln lambda_s(r) in nats."""
    lam = perron_frobenius(build_tilted(ch, q, s, r))
    if lam <= 0.0:
        return np.inf
    return -np.log(lam)


def _g_factory(ch: MarkovChannel, q, s: float):
    """G_s(r) closure with the s-dependent distance tensor cached."""
    qv = np.asarray(getattr(q, "q", q), dtype=float)
    j = ch.num_symbols
    qn = qv[ch.newest]
    d = _distance_tensor(ch, s)
    d_rows = np.transpose(d, (0, 2, 1, 3))
    qq = qn[:, None, None, None] * qn[None, :, None, None]
    mask = (ch.allowed[:, None, :, None] & ch.allowed[None, :, None, :])
    inf_d = np.isinf(d_rows) & (d_rows > 0)

    def g(r):
        with np.errstate(over="ignore"):
            ent = np.exp(np.clip(-r * d_rows, -745.0, 700.0))
        ent[inf_d] = 0.0 if r > 0 else 1.0
        a = np.where(mask, qq * ent, 0.0).reshape(j * j, j * j)
        lam = perron_frobenius(TiltedMatrix(a, s, r))
        return -np.log(lam) if lam > 0 else np.inf

    return g


def f_s(ch: MarkovChannel, q, s: float, d: float) -> float:
    """Large-deviations rate function F_s(d) = sup_{r >= 0} [G_s(r) - r d]."""
    g = _g_factory(ch, q, s)
    obj = lambda r: g(r) - r * d
    if obj(1e-7) <= obj(0.0) + 1e-15:
        return max(0.0, obj(0.0))  # supremum at the r = 0 boundary
    hi = 1.0
    while obj(2 * hi) > obj(hi) and hi < 1e9:
        hi *= 2
    res = minimize_scalar(lambda r: -obj(r), bounds=(0.0, 2 * hi),
                          method="bounded", options={"xatol": 1e-10})
    return max(0.0, float(-res.fun))


def _rho_root(g, rate: float, rho_cap: float = 1e9):
    """Solve (2 rho - 1) R = rho G_s(1/rho) for rho >= 1; None when no root."""
    h = lambda rho: rho * g(1.0 / rho) - (2 * rho - 1) * rate
    h1 = h(1.0)
    if h1 < -1e-12:
        return None
    if h1 <= 1e-12:
        return 1.0
    hi = 2.0
    while h(hi) > 0:
        hi *= 2
        if hi > rho_cap:
            return hi  # zero-rate regime: treat the cap as the root
    # bracket sanity: a decreasing sign pattern on a coarse scan
    probes = np.linspace(1.0, hi, 9)
    signs = [h(p) for p in probes]
    flips = sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))
    if flips != 1:
        raise ConvergenceFailure(
            f"root equation not monotone on [1, {hi}]: sign pattern {signs}"
        )
    lo = 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        hm = h(mid)
        if abs(hm) <= 1e-12:
            return mid
        if hm > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def extended_cutoff(ch: MarkovChannel, q, s_max: float = S_MAX_DEFAULT) -> float:
    """Extended cutoff rate sup_{s >= 0} G_s(1)."""
    grid = np.linspace(0.0, s_max, S_SCAN_POINTS)
    vals = [g_s(ch, q, s, 1.0) for s in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda s: -g_s(ch, q, s, 1.0), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-8})
    return float(max(-res.fun, vals[i]))


def extended_exponent(ch: MarkovChannel, q, rate: float,
                      s_max: float = S_MAX_DEFAULT):
    """Typical-code exponent bound sup_{s >= 0} rho_{R,s} G_s(1/rho_{R,s}) / R.

    Returns (value, argmax s, rho at the argmax).  The s-search scans
    [0, s_max] and refines by a bounded scalar search; a boundary-active
    argmax (s == s_max) is reported as-is.
    """
    r0 = extended_cutoff(ch, q, s_max)
    if not 0 < rate < r0 + 1e-12:
        raise RateOutOfRange(f"need 0 < R < R0={r0:.6g}, got {rate}")

    def value_at(s):
        g = _g_factory(ch, q, s)
        rho = _rho_root(g, rate)
        if rho is None:
            return -np.inf, None
        return rho * g(1.0 / rho) / rate, rho

    grid = np.linspace(0.0, s_max, S_SCAN_POINTS)
    vals = [value_at(s)[0] for s in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(lambda s: -value_at(s)[0], bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-6})
    s_star = float(res.x)
    best, rho = value_at(s_star)
    if vals[i] > best:
        s_star = float(grid[i])
        best, rho = value_at(s_star)
    return float(best), s_star, float(rho)


def lift_memory(w, p: int, w_tilde=None) -> MarkovChannel:
    """Lift a channel with p past inputs to an order-1 MarkovChannel.

    `w` is indexed [x_t, x_{t-1}, ..., x_{t-p}, y] (newest first).  Lifted
    symbols are p-tuples (x_t, ..., x_{t-p+1}) encoded newest-first in base
    J; a transition xbar_prev -> xbar is allowed iff the tuples overlap
    consistently, and only the newest raw component carries Q-weight.
    """
    w = np.asarray(w, dtype=float)
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if w.ndim != p + 2:
        raise ValueError(f"w must have {p + 2} axes for p={p}, got {w.ndim}")
    j = w.shape[0]
    if w.shape[:-1] != (j,) * (p + 1):
        raise ValueError(f"inconsistent input axes in shape {w.shape}")
    ny = w.shape[-1]
    wt = None if w_tilde is None else np.asarray(w_tilde, dtype=float)
    if p == 1:
        return MarkovChannel(w, w_tilde=wt)

    jl = j ** p
    digits = np.empty((jl, p), dtype=int)  # newest-first base-J digits
    for idx in range(jl):
        rem = idx
        for pos in range(p - 1, -1, -1):
            digits[idx, pos] = rem % j
            rem //= j
    allowed = np.zeros((jl, jl), dtype=bool)
    wl = np.zeros((jl, jl, ny))
    wtl = None if wt is None else np.zeros((jl, jl, ny))
    for cur in range(jl):
        for prev in range(jl):
            consistent = np.array_equal(digits[cur, 1:], digits[prev, :-1])
            raw = tuple(digits[cur]) + (digits[prev, -1],)
            wl[cur, prev] = w[raw]
            if wtl is not None:
                wtl[cur, prev] = wt[raw]
            if consistent:
                allowed[cur, prev] = True
    return MarkovChannel(wl, w_tilde=wtl, allowed=allowed,
                         newest=digits[:, 0], base_size=j)
