"""Trellis-code ensemble simulator.

Samples time-varying trellis codes (general i.i.d.-Q labels or the linear
GF(2) subclass), encodes with zero-tail termination, transmits through a
DMC or a one-step-memory channel, Viterbi-decodes with a per-symbol log
metric, estimates the per-node first-error-event probability, enumerates
incorrect-path joint types, and audits the typicality conditions.

Everything is a deterministic function of (config, seed): randomness comes
from counter-based Philox streams keyed by (seed, code index, purpose).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import Dmc, InputDist
from .memory import MarkovChannel

ENUM_BUDGET = 10_000_000


class LengthMismatch(ValueError):
    pass


class EnumerationBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class EnsembleConfig:
    m: int          # input bits per branch
    n: int          # channel symbols per branch
    k: int          # memory in branches; constraint length K = m*k
    L: int = None   # block length in branches (default 100*k)
    linear: bool = False
    seed: int = 0

    def __post_init__(self):
        if min(self.m, self.n, self.k) < 1:
            raise ValueError("m, n, k must all be >= 1")
        if self.L is None:
            object.__setattr__(self, "L", 100 * self.k)
        if self.L < 1:
            raise ValueError("L must be >= 1")

    @property
    def constraint_length(self):
        return self.m * self.k

    @property
    def rate_bits(self):
        return self.m / self.n

    @property
    def rate_nats(self):
        return self.m / self.n * math.log(2.0)

    @property
    def num_states(self):
        return 1 << (self.m * (self.k - 1))

    @property
    def num_branches(self):
        return self.L + self.k - 1  # includes the k-1 zero-tail branches


@dataclass(frozen=True)
class TrellisCode:
    """Sampled ensemble member: full branch-label table.

    labels[t, window] is the n-symbol branch output at time t, where the
    K-bit window packs (current input block, previous k-1 blocks) with the
    current block in the most significant bits.  Linear codes also carry
    their generator matrices and offsets.
    """

    cfg: EnsembleConfig
    j: int
    labels: np.ndarray                 # (T, 2^K, n) symbol indices
    generators: np.ndarray = None      # (T, k, m, n) bits, linear only
    offsets: np.ndarray = None         # (T, n) bits, linear only


def _rng(seed, *stream):
    return np.random.Generator(np.random.Philox(key=np.uint64(seed),
                                                counter=list(stream) + [0] * (4 - len(stream))))


def sample_code(cfg: EnsembleConfig, j: int = 2, q=None, code_index: int = 0) -> TrellisCode:
    """Draw one code. General codes: labels i.i.d. Q^n per (t, window) cell.
    Linear codes: equiprobable generator matrices and offsets over GF(2)."""
    rng = _rng(cfg.seed, code_index)
    t_total = cfg.num_branches
    cells = 1 << cfg.constraint_length
    if cfg.linear:
        if j != 2:
            raise ValueError("linear codes require a binary channel alphabet")
        gens = rng.integers(0, 2, size=(t_total, cfg.k, cfg.m, cfg.n), dtype=np.int8)
        offs = rng.integers(0, 2, size=(t_total, cfg.n), dtype=np.int8)
        # window bit w: bit (K-1-i) is the i-th bit of the (current..oldest) blocks
        win_bits = ((np.arange(cells)[:, None] >> np.arange(cfg.constraint_length - 1, -1, -1)[None, :]) & 1)
        gflat = gens.reshape(t_total, cfg.constraint_length, cfg.n)
        labels = (np.einsum("wb,tbn->twn", win_bits, gflat) + offs[:, None, :]) % 2
        return TrellisCode(cfg, j, labels.astype(np.int8), gens, offs)
    qv = None if q is None else np.asarray(getattr(q, "q", q), dtype=float)
    labels = rng.choice(j, size=(t_total, cells, cfg.n), p=qv).astype(np.int8)
    return TrellisCode(cfg, j, labels)


def _info_to_blocks(info_bits, m, length):
    bits = np.asarray(info_bits).reshape(-1, length * m) if np.asarray(info_bits).ndim > 1 else np.asarray(info_bits)[None, :]
    if bits.shape[-1] != length * m:
        raise LengthMismatch(f"expected {length * m} info bits, got {bits.shape[-1]}")
    weights = 1 << np.arange(m - 1, -1, -1)
    return (bits.reshape(bits.shape[0], length, m) * weights).sum(axis=2)


def _block_windows(blocks, cfg):
    """Window integers per branch for block integers (B, T) with zero history."""
    b, t_total = blocks.shape
    wins = np.zeros((b, t_total), dtype=np.int64)
    acc = np.zeros(b, dtype=np.int64)
    mask = (1 << cfg.constraint_length) - 1
    for t in range(t_total):
        acc = ((acc >> cfg.m) | (blocks[:, t].astype(np.int64) << (cfg.m * (cfg.k - 1)))) & mask
        wins[:, t] = acc
    return wins


def encode(code: TrellisCode, info_bits) -> np.ndarray:
    """Encode m*L info bits into n*(L+k-1) channel symbols (zero-tail)."""
    cfg = code.cfg
    blocks = _info_to_blocks(info_bits, cfg.m, cfg.L)
    single = np.asarray(info_bits).ndim == 1
    tail = np.zeros((blocks.shape[0], cfg.k - 1), dtype=np.int64)
    blocks = np.concatenate([blocks, tail], axis=1)
    wins = _block_windows(blocks, cfg)
    t_idx = np.broadcast_to(np.arange(cfg.num_branches)[None, :], wins.shape)
    symbols = code.labels[t_idx, wins]  # (B, T, n)
    out = symbols.reshape(blocks.shape[0], -1)
    return out[0] if single else out


def transmit(channel, symbols, rng) -> np.ndarray:
    """Draw channel outputs for a symbol sequence (Dmc or MarkovChannel)."""
    x = np.asarray(symbols)
    flat = x.reshape(-1)
    if isinstance(channel, Dmc):
        cum = np.cumsum(channel.w, axis=1)
        u = rng.random(flat.size)
        y = (u[:, None] > cum[flat]).sum(axis=1)
        return y.reshape(x.shape)
    if isinstance(channel, MarkovChannel):
        prev = np.concatenate([[0], flat[:-1]])
        cum = np.cumsum(channel.w, axis=2)
        u = rng.random(flat.size)
        y = (u[:, None] > cum[flat, prev]).sum(axis=1)
        return y.reshape(x.shape)
    raise TypeError(f"unsupported channel type {type(channel).__name__}")


def _log_metric(metric) -> np.ndarray:
    """Per-symbol log metric table ln W~(y|x) from a Dmc or raw matrix."""
    w = metric.w if isinstance(metric, Dmc) else np.asarray(metric, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(w)


def _trellis_transitions(cfg):
    """next_state[s, u] plus predecessor tables for vectorized ACS."""
    s_count = cfg.num_states
    u_count = 1 << cfg.m
    states = np.arange(s_count)
    ns = np.empty((s_count, u_count), dtype=np.int64)
    for u in range(u_count):
        ns[:, u] = (states >> cfg.m) | (u << (cfg.m * (cfg.k - 1) - cfg.m)) if cfg.k > 1 else 0
    # predecessors of s': all (s, u) with ns[s, u] == s', ordered by s then u
    pred_state = np.empty((s_count, u_count), dtype=np.int64)
    pred_input = np.empty((s_count, u_count), dtype=np.int64)
    fill = np.zeros(s_count, dtype=np.int64)
    for s in range(s_count):
        for u in range(u_count):
            sp = ns[s, u]
            pred_state[sp, fill[sp]] = s
            pred_input[sp, fill[sp]] = u
            fill[sp] += 1
    assert np.all(fill == u_count)
    return ns, pred_state, pred_input


def viterbi_decode(code: TrellisCode, metric, outputs) -> np.ndarray:
    """Maximum-metric path with zero terminal state; returns m*L info bits.

    `metric` is a Dmc (use its W as the decoding metric) or a (J, Y) matrix.
    Ties are broken toward the predecessor with the smaller state index.
    Accepts a single output sequence or a batch (B, n*(L+k-1)).
    """
    cfg = code.cfg
    logw = _log_metric(metric)
    ys = np.asarray(outputs)
    single = ys.ndim == 1
    if single:
        ys = ys[None, :]
    if ys.shape[1] != cfg.n * cfg.num_branches:
        raise LengthMismatch(
            f"expected {cfg.n * cfg.num_branches} output symbols, got {ys.shape[1]}"
        )
    b = ys.shape[0]
    ys = ys.reshape(b, cfg.num_branches, cfg.n)
    s_count, u_count = cfg.num_states, 1 << cfg.m
    ns, pred_state, pred_input = _trellis_transitions(cfg)

    neg = -1e30
    alpha = np.full((b, s_count), neg)
    alpha[:, 0] = 0.0  # encoder starts in the all-zero state
    choice = np.empty((b, cfg.num_branches, s_count), dtype=np.int8)
    for t in range(cfg.num_branches):
        lab = code.labels[t]  # (2^K, n)
        bm_cell = logw[lab, ys[:, t, None, :]].sum(axis=2)  # (B, 2^K)
        cand = alpha[:, pred_state] + bm_cell[:, (pred_input << (cfg.m * (cfg.k - 1))) | pred_state]
        best = cand.argmax(axis=2)  # first occurrence = smallest pred index
        choice[:, t] = best
        alpha = np.take_along_axis(cand, best[:, :, None], axis=2)[:, :, 0]

    # traceback from the zero terminal state
    blocks = np.empty((b, cfg.num_branches), dtype=np.int64)
    state = np.zeros(b, dtype=np.int64)
    rows = np.arange(b)
    for t in range(cfg.num_branches - 1, -1, -1):
        j = choice[rows, t, state]
        blocks[:, t] = pred_input[state, j]
        state = pred_state[state, j]
    info = blocks[:, : cfg.L]
    bits = ((info[:, :, None] >> np.arange(cfg.m - 1, -1, -1)[None, None, :]) & 1)
    bits = bits.reshape(b, cfg.m * cfg.L).astype(np.int8)
    return bits[0] if single else bits


@dataclass(frozen=True)
class ErrorEstimate:
    events: int
    nodes: int
    p_e: float
    exponent: float
    wilson_low: float
    wilson_high: float
    no_errors: bool


def _wilson(successes, trials, z=1.959963984540054):
    if trials == 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def estimate_error_exponent(code: TrellisCode, channel, trials: int, rng,
                            metric=None, batch: int = 256) -> ErrorEstimate:
    """Monte-Carlo per-node first-error-event probability over `trials` blocks.

    An event is charged to the node where the decoded path first diverges
    from the correct one (inputs differ while the trellis states agree).
    With zero events the reported p_e is the one-sided 95% Clopper-Pearson
    ceiling and the exponent is the matching lower bound.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = code.cfg
    metric = channel if metric is None else metric
    events = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        info = rng.integers(0, 2, size=(b, cfg.m * cfg.L), dtype=np.int8)
        x = encode(code, info)
        y = transmit(channel, x, rng)
        dec = viterbi_decode(code, metric, y)
        tb = _info_to_blocks(info, cfg.m, cfg.L)
        db = _info_to_blocks(dec, cfg.m, cfg.L)
        diff = tb != db  # (b, L)
        merged = np.ones_like(diff)
        for back in range(1, cfg.k):
            shifted = np.zeros_like(diff)
            shifted[:, back:] = diff[:, :-back]
            merged &= ~shifted
        events += int(np.sum(diff & merged))
        done += b
    nodes = trials * cfg.L
    no_errors = events == 0
    if no_errors:
        p_e = 1.0 - 0.05 ** (1.0 / nodes)  # exact one-sided 95% upper bound
    else:
        p_e = events / nodes
    lo, hi = _wilson(events, nodes)
    exponent = -math.log(p_e) / cfg.constraint_length
    return ErrorEstimate(events, nodes, p_e, exponent, lo, hi, no_errors)


@dataclass
class PairTypeTable:
    """Counts N_l(P) of incorrect-path pairs per unmerged-extension length l.

    entries[(l, key)] = count, where key is the flattened tuple of integer
    symbol-pair occurrence counts (length j*j, total n*(k+l)).  pair_totals[l]
    is the number of enumerated (correct-window, incorrect-path) pairs.
    """

    j: int
    entries: dict = field(default_factory=dict)
    pair_totals: dict = field(default_factory=dict)


def _deviation_patterns(l, k, m):
    """Input-difference patterns over the l+1 free branches of an incorrect
    path that remerges exactly after k+l branches: nonzero first and last
    block, no k-1 consecutive zero blocks strictly inside."""
    u_count = 1 << m
    pats = []
    for code_int in range(u_count ** (l + 1)):
        digits = []
        rem = code_int
        for _ in range(l + 1):
            digits.append(rem % u_count)
            rem //= u_count
        if digits[0] == 0 or digits[-1] == 0:
            continue
        run = 0
        ok = True
        for d in digits[1:-1]:
            run = run + 1 if d == 0 else 0
            if run >= k - 1:
                ok = False
                break
        if ok:
            pats.append(tuple(digits))
    return pats


def enumerate_pair_types(code: TrellisCode, l_max: int, fixed_message=None,
                         budget: int = ENUM_BUDGET) -> PairTypeTable:
    """Exact joint-type counts for all incorrect paths with extension l <= l_max.

    The divergence node is fixed at t = k-1 (the first node with a full
    input history inside the block).  By default counts are averaged over
    all correct-path input windows (message-averaged mode); passing
    `fixed_message` (a block-integer sequence covering the window) restricts
    to one correct path.
    """
    cfg = code.cfg
    m, n, k, j = cfg.m, cfg.n, cfg.k, code.j
    node = k - 1
    u_count = 1 << m
    table = PairTypeTable(j=j)
    for l in range(1, l_max + 1):
        span = k + l  # branches from divergence to remerge
        if node + span > cfg.num_branches:
            raise ValueError(f"block too short for l={l} at divergence node {node}")
        pats = _deviation_patterns(l, k, m)
        win_len = (k - 1) + span  # correct input blocks feeding the span
        if fixed_message is None:
            n_windows = u_count ** win_len
        else:
            n_windows = 1
        total = n_windows * len(pats)
        if total > budget:
            raise EnumerationBudgetExceeded(
                f"l={l}: {total} pairs exceed budget {budget}"
            )
        if fixed_message is None:
            u_all = np.empty((n_windows, win_len), dtype=np.int64)
            rem = np.arange(n_windows)
            for pos in range(win_len):
                u_all[:, pos] = rem % u_count
                rem //= u_count
        else:
            u_all = np.asarray(fixed_message, dtype=np.int64)[None, :win_len]
            if u_all.shape[1] != win_len:
                raise LengthMismatch(f"fixed message must cover {win_len} blocks")
        counts = np.zeros((total, j * j), dtype=np.int32)
        shift = cfg.m * (k - 1)
        mask = (1 << cfg.constraint_length) - 1
        for pi, pat in enumerate(pats):
            u = u_all  # (W, win_len): blocks u_{node-k+1} .. u_{node+span-1}
            v = u.copy()
            for off, e in enumerate(pat):
                v[:, (k - 1) + off] = u[:, (k - 1) + off] ^ e
            wu = np.zeros(n_windows, dtype=np.int64)
            wv = np.zeros(n_windows, dtype=np.int64)
            # prime the window with the shared pre-divergence history
            for pos in range(k - 1):
                wu = ((wu >> m) | (u[:, pos] << shift)) & mask
            wv = wu.copy()
            acc = np.zeros(n_windows * j * j, dtype=np.int64)
            base_idx = np.arange(n_windows, dtype=np.int64)[:, None] * (j * j)
            for br in range(span):
                pos = (k - 1) + br
                wu = ((wu >> m) | (u[:, pos] << shift)) & mask
                wv = ((wv >> m) | (v[:, pos] << shift)) & mask
                t = node + br
                lu = code.labels[t, wu]  # (W, n)
                lv = code.labels[t, wv]
                cell = lu.astype(np.int64) * j + lv
                acc += np.bincount((base_idx + cell).ravel(),
                                   minlength=acc.size)
            counts[pi * n_windows:(pi + 1) * n_windows] = acc.reshape(n_windows, j * j)
        keys, mult = np.unique(counts, axis=0, return_counts=True)
        for key, c in zip(keys, mult):
            table.entries[(l, tuple(int(v) for v in key))] = int(c)
        table.pair_totals[l] = total
    return table


@dataclass(frozen=True)
class TypicalityReport:
    epsilon: float
    violations: tuple

    @property
    def is_typical(self):
        return len(self.violations) == 0


def _log2_type_probability(counts, log2_qq):
    """log2 Pr{a QxQ-i.i.d. pair of length-N vectors has these cell counts}."""
    counts = np.asarray(counts)
    total = counts.sum()
    lg = math.lgamma(total + 1) - sum(math.lgamma(c + 1) for c in counts)
    lg /= math.log(2.0)
    finite = counts > 0
    if np.any(finite & np.isinf(log2_qq)):
        return -np.inf
    return lg + float(np.sum(counts[finite] * log2_qq[finite]))


def typicality_check(code: TrellisCode, q, epsilon: float, l_max: int,
                     table: PairTypeTable = None) -> TypicalityReport:
    """Check the two enumerator conditions for one code at slack epsilon.

    epsilon is a base-2 exponent slack per channel use, matching the
    analytic union bound.  E{N_l(P)} is the exact pair total times the exact
    multinomial type probability under QxQ.
    """
    cfg = code.cfg
    if table is None:
        table = enumerate_pair_types(code, l_max)
    qv = np.asarray(getattr(q, "q", q), dtype=float)
    qq = np.outer(qv, qv).reshape(-1)
    with np.errstate(divide="ignore"):
        log2_qq = np.log2(qq)
    log2_excess = math.log2((1 << cfg.m) - 1) if cfg.m else 0.0
    violations = []
    for (l, key), observed in table.entries.items():
        nkl = cfg.n * (cfg.k + l)
        log2_en = math.log2(table.pair_totals[l]) + _log2_type_probability(key, log2_qq)
        if log2_en < log2_excess - nkl * epsilon:
            # first condition: this type should be unpopulated
            violations.append((l, key, observed, 0.0))
        elif math.log2(observed) > nkl * epsilon + log2_en:
            violations.append((l, key, observed, 2.0 ** (nkl * epsilon + log2_en)))
    return TypicalityReport(epsilon, tuple(violations))


def typicality_union_bound(cfg: EnsembleConfig, j: int, epsilon: float,
                           tail_terms: int = 10_000) -> float:
    """Analytic union bound (2^m - 1) sum_{l >= k+1} (n l + 1)^{J^2} 2^{-n l eps}."""
    total = 0.0
    for l in range(cfg.k + 1, cfg.k + 1 + tail_terms):
        term = (cfg.n * l + 1) ** (j * j) * 2.0 ** (-cfg.n * l * epsilon)
        total += term
        if term < 1e-18 * max(total, 1.0):
            break
    return ((1 << cfg.m) - 1) * total


def typicality_audit(cfg: EnsembleConfig, j, q, num_codes: int, epsilon: float,
                     l_max: int):
    """Sample codes and report (atypical fraction, per-code reports, bound)."""
    reports = []
    atypical = 0
    for i in range(num_codes):
        code = sample_code(cfg, j=j, q=q, code_index=i)
        rep = typicality_check(code, q, epsilon, l_max)
        reports.append(rep)
        if not rep.is_typical:
            atypical += 1
    bound = typicality_union_bound(cfg, j, epsilon)
    return atypical / num_codes, reports, bound
