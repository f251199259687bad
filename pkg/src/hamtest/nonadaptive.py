"""Non-adaptive testers: folklore sampling baseline and the periodic-sample
fingerprint pipeline (single executions with implicit answer sets, plus the
tolerant decision / reporting driver built on repeated executions).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from random import Random

import numpy as np

from .hashing import FingerprintFn, fingerprint_modulus, random_prime, sample_residues
from .strings import Instance, QueryOracle, occ_k_bruteforce

__all__ = [
    "AnswerSet",
    "ExecutionContext",
    "ExecutionParams",
    "TesterReport",
    "choose_z",
    "folklore_test",
    "naive_execution",
    "one_execution",
    "sample_execution_context",
    "tolerant_decide",
    "tolerant_report",
]

C_PHAT = 2  # constant in p_hat = C * n^{4k'/k} * k * ceil(log2 n)^e


@dataclass(frozen=True)
class ExecutionParams:
    """Parameters of one generic execution; z_prime and beta are derived."""

    n: int
    m: int
    k: int
    p_hat: int
    z: int
    kprime: int = 0
    seed: int | None = None
    z_prime: int = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        delta = self.n - self.m + 1
        if self.p_hat < self.k:
            raise ValueError("p_hat must be >= k")
        if not (1 <= self.z <= min(self.p_hat, delta)):
            raise ValueError(f"z={self.z} outside [1, min(p_hat, delta)]")
        object.__setattr__(self, "z_prime", math.ceil(min(2 * self.p_hat, delta) / self.z))
        # beta = 1 - n^{-4/k}, complement computed in log space for precision
        object.__setattr__(self, "beta", -math.expm1(-4.0 * math.log(self.n) / self.k))

    @property
    def delta(self) -> int:
        return self.n - self.m + 1

    @property
    def expected_work(self) -> float:
        """Expected counted work units of one execution (selected characters)."""
        return self.beta * (self.z * self.m + self.z_prime * self.n) + self.z + self.z_prime


@dataclass
class ExecutionContext:
    """The randomness (p, B, F) shared by an execution and its naive oracle."""

    p: int
    b_mask: np.ndarray
    fp: FingerprintFn
    modulus_deviated: bool = False


def sample_execution_context(params: ExecutionParams, sigma: int, rng: Random) -> ExecutionContext:
    p = random_prime(params.p_hat, 2 * params.p_hat + 1, rng)  # random prime in [p_hat, 2*p_hat]
    if params.beta * p > 2e8:
        raise RuntimeError(
            f"residue sample of expected size {params.beta * p:.2e} is not materializable; "
            "use the desk profile at this instance size"
        )
    b = sample_residues(p, params.beta, rng)
    q, deviated = fingerprint_modulus(params.n, sigma, rng)
    fp = FingerprintFn.sample(q, max_len=params.n, rng=rng)
    return ExecutionContext(p=p, b_mask=b.mask, fp=fp, modulus_deviated=deviated)


def choose_z(p_hat: int, n: int, m: int, delta: int) -> int:
    """Split parameter of the generic execution.

    Small p_hat (<= 2n/m) takes z = p_hat so that z' <= 2; otherwise the
    balanced choice z = ceil(sqrt(min(2*p_hat, delta) * n / m)).
    """
    if p_hat <= 2 * n / m:
        z = p_hat
    else:
        z = math.ceil(math.sqrt(min(2 * p_hat, delta) * n / m))
    return max(1, min(z, p_hat, delta))


class AnswerSet:
    """Implicit sorted subset of [0..delta) with indexed random access.

    Stored as segments (offset, u_array, lo, hi): the segment's elements are
    offset + u_array[lo:hi], ascending, and segments are globally ascending.
    Random access is O(log #segments) by binary search on prefix sums.
    """

    def __init__(self, delta: int, segments: list[tuple[int, np.ndarray, int, int]]):
        self.delta = delta
        self._segments = [seg for seg in segments if seg[3] > seg[2]]
        sizes = [hi - lo for (_o, _u, lo, hi) in self._segments]
        self._prefix = np.concatenate(([0], np.cumsum(sizes))) if sizes else np.zeros(1, dtype=np.int64)
        self.total = int(self._prefix[-1])
        self._starts = np.asarray(
            [off + int(u[lo]) for (off, u, lo, _hi) in self._segments], dtype=np.int64
        )

    @classmethod
    def full(cls, delta: int) -> "AnswerSet":
        return cls.from_positions(delta, np.arange(delta, dtype=np.int64))

    @classmethod
    def from_positions(cls, delta: int, positions) -> "AnswerSet":
        arr = np.asarray(positions, dtype=np.int64)
        return cls(delta, [(0, arr, 0, len(arr))])

    def __len__(self) -> int:
        return self.total

    def at(self, a: int) -> int:
        if not (0 <= a < self.total):
            raise IndexError(a)
        s = int(np.searchsorted(self._prefix, a, side="right")) - 1
        off, u, lo, _hi = self._segments[s]
        return off + int(u[lo + (a - int(self._prefix[s]))])

    def __iter__(self):
        for off, u, lo, hi in self._segments:
            for t in range(lo, hi):
                yield off + int(u[t])

    def to_list(self) -> list[int]:
        return list(self)

    def sample_uniform(self, rng: Random) -> int:
        if self.total == 0:
            raise ValueError("empty answer set")
        return self.at(rng.randrange(self.total))

    def rank(self, value: int) -> int:
        """Number of elements strictly below value."""
        s = int(np.searchsorted(self._starts, value, side="right")) - 1
        if s < 0:
            return 0
        off, u, lo, hi = self._segments[s]
        within = int(np.searchsorted(u[lo:hi], value - off, side="left"))
        return int(self._prefix[s]) + within

    def count_range(self, lo: int, hi: int) -> int:
        return self.rank(hi) - self.rank(lo)

    def positions_in_range(self, lo: int, hi: int) -> list[int]:
        a, b = self.rank(lo), self.rank(hi)
        return [self.at(t) for t in range(a, b)]


@dataclass
class TesterReport:
    answer: str  # "yes" | "no"
    reported_set: list[int] | None = None
    queries_pattern: int = 0
    queries_text: int = 0
    wall_time_s: float = 0.0
    executions_aborted: int = 0
    deviations: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# One execution of the generic algorithm
# ---------------------------------------------------------------------------


def _piecewise_window_fps(
    iv: np.ndarray, chars: list[int], m: int, delta: int, fp: FingerprintFn
) -> list[tuple[int, int, int]]:
    """Fingerprint of the selected window content, piecewise constant in i.

    iv holds the selected text positions (ascending), chars their symbols.
    Returns (a, b, value) with F over iv \\cap [i..i+m) equal to value for all
    i in [a, b); pieces cover [0, delta).
    """
    q = fp.q
    inv_x = fp.inv_x
    lo = 0
    hi = int(np.searchsorted(iv, m, side="left"))
    val = 0
    fp.power(max(hi, 1))
    pows = fp._pows
    for t in range(hi):
        val += chars[t] * pows[t]
    val %= q
    events = set()
    for e in iv.tolist():
        if e <= delta - 2:
            events.add(e + 1)
        if m <= e <= m + delta - 2:
            events.add(e - m + 1)
    pieces = []
    cur = 0
    niv = len(iv)
    for ev in sorted(events):
        pieces.append((cur, ev, val))
        while lo < hi and iv[lo] < ev:
            val = (val - chars[lo]) * inv_x % q
            lo += 1
        while hi < niv and iv[hi] < ev + m:
            val = (val + chars[hi] * fp.power(hi - lo)) % q
            hi += 1
        cur = ev
    pieces.append((cur, delta, val))
    return pieces


def _execute(
    pattern_reader,
    text_reader,
    m: int,
    n: int,
    params: ExecutionParams,
    ctx: ExecutionContext,
    work_budget: float | None = None,
) -> tuple[AnswerSet | None, float]:
    """Core of one execution, plus its counted work (selected characters).

    Returns (None, work) if the work budget is exceeded mid-flight.
    """
    delta = n - m + 1
    p, b_mask, fp = ctx.p, ctx.b_mask, ctx.fp
    z, zp = params.z, params.z_prime
    q = fp.q
    work = 0.0

    # F(X_u) for u in [0..z): subsequence of P at positions (j+u) mod p in B
    jm = np.arange(m, dtype=np.int64) % p
    fp.power(m)
    pows = fp._pows
    fpx: list[int] = []
    for u in range(z):
        shifted = jm + u
        shifted = np.where(shifted >= p, shifted - p, shifted)
        sel = np.nonzero(b_mask[shifted])[0]
        work += len(sel) + 1
        if work_budget is not None and work > work_budget:
            return None, work
        chars = pattern_reader(sel).tolist()
        fpx.append(sum(c * w for c, w in zip(chars, pows)) % q)
    u_lists: dict[int, np.ndarray] = {}
    for u, valu in enumerate(fpx):
        u_lists.setdefault(valu, []).append(u)  # type: ignore[arg-type]
    u_lists = {valu: np.asarray(us, dtype=np.int64) for valu, us in u_lists.items()}

    # piecewise-constant F(Y_v(i)) per v
    im = np.arange(n, dtype=np.int64) % p
    seg_by_v: list[list[tuple[int, int, int]]] = []
    for v in range(zp):
        base = (v * z) % p
        shifted = im - base
        shifted = np.where(shifted < 0, shifted + p, shifted)
        iv = np.nonzero(b_mask[shifted])[0]
        work += len(iv) + 1
        if work_budget is not None and work > work_budget:
            return None, work
        chars = text_reader(iv).tolist()
        seg_by_v.append(_piecewise_window_fps(iv, chars, m, delta, fp))

    # assemble A = {i : F(X_{u_i}) == F(Y_{v_i}(i))} from v-blocks of i-space
    segments: list[tuple[int, np.ndarray, int, int]] = []
    ptr = [0] * zp
    t = 0
    while t * p < delta:
        base = t * p
        for v in range(zp):
            if v * z >= p:
                break
            s0 = base + v * z
            if s0 >= delta:
                break
            s1 = min(base + min((v + 1) * z, p), delta)
            pieces = seg_by_v[v]
            i_pc = ptr[v]
            while i_pc < len(pieces) and pieces[i_pc][1] <= s0:
                i_pc += 1
            ptr[v] = i_pc
            j_pc = i_pc
            while j_pc < len(pieces) and pieces[j_pc][0] < s1:
                a, b, valp = pieces[j_pc]
                aa, bb = max(a, s0), min(b, s1)
                if aa < bb:
                    ul = u_lists.get(valp)
                    if ul is not None:
                        left = int(np.searchsorted(ul, aa - s0, side="left"))
                        right = int(np.searchsorted(ul, bb - s0, side="left"))
                        if right > left:
                            segments.append((s0, ul, left, right))
                j_pc += 1
        t += 1
    return AnswerSet(delta, segments), work


def one_execution(
    inst: Instance,
    params: ExecutionParams,
    rng: Random,
    ctx: ExecutionContext | None = None,
    oracle: QueryOracle | None = None,
    work_budget: float | None = None,
) -> AnswerSet | None:
    """One execution of the generic periodic-sample algorithm.

    Returns the candidate set A as an implicit AnswerSet, or None when the
    caller-supplied work budget is exceeded (abort is the caller's concern).
    A fresh (p, B, F) context is sampled unless one is given.
    """
    if ctx is None:
        ctx = sample_execution_context(params, inst.sigma, rng)
    if oracle is None:
        oracle = QueryOracle(inst)
    aset, _work = _execute(
        oracle.pattern_many, oracle.text_many, inst.m, inst.n, params, ctx, work_budget
    )
    return aset


def naive_execution(
    inst: Instance, params: ExecutionParams, ctx: ExecutionContext
) -> list[int]:
    """Literal per-candidate recomputation of the execution's defining sets.

    Independent oracle for one_execution: given the same (p, B, F) it must
    produce the same set, computed with direct fingerprint evaluation.
    """
    p, b_mask, fp = ctx.p, ctx.b_mask, ctx.fp
    m, n = inst.m, inst.n
    z = params.z
    out = []
    jr = np.arange(m, dtype=np.int64)
    for i in range(inst.delta):
        u = (i % p) % z
        v = (i % p) // z
        sel_p = np.nonzero(b_mask[(jr + u) % p])[0]
        sel_t = np.nonzero(b_mask[(i + jr - v * z) % p])[0]
        fx = fp.eval(inst.pattern[sel_p])
        fy = fp.eval(inst.text[i + sel_t])
        if fx == fy:
            out.append(i)
    return out


# ---------------------------------------------------------------------------
# Folklore baseline
# ---------------------------------------------------------------------------


def folklore_test(oracle: QueryOracle, rng: Random) -> TesterReport:
    """i.i.d.-sampling tester: rates r_P * r_T = min(1, 2 ln n / k).

    Answers yes iff some alignment shows no mismatch on the sampled positions.
    """
    t0 = time.perf_counter()
    inst = oracle.inst
    n, m, k = inst.n, inst.m, inst.k
    target = min(1.0, 2.0 * math.log(n) / k)
    r_p = min(1.0, math.sqrt(target * n / m))
    r_t = min(1.0, target / r_p)
    mask_p = np.asarray([rng.random() < r_p for _ in range(m)])
    mask_t = np.asarray([rng.random() < r_t for _ in range(n)])
    sel_p = np.nonzero(mask_p)[0]
    sel_t = np.nonzero(mask_t)[0]
    p_vals = oracle.pattern_many(sel_p)
    t_vals = oracle.text_many(sel_t)
    pat = np.zeros(m, dtype=np.int64)
    pat[sel_p] = p_vals
    txt = np.zeros(n, dtype=np.int64)
    txt[sel_t] = t_vals
    answer = "no"
    for i in range(n - m + 1):
        both = mask_p & mask_t[i : i + m]
        if np.array_equal(pat[both], txt[i : i + m][both]):
            answer = "yes"
            break
    return TesterReport(
        answer=answer,
        queries_pattern=oracle.pattern_queries,
        queries_text=oracle.text_queries,
        wall_time_s=time.perf_counter() - t0,
        extra={"r_p": r_p, "r_t": r_t},
    )


# ---------------------------------------------------------------------------
# Tolerant decision / reporting driver
# ---------------------------------------------------------------------------


def _driver_setup(inst: Instance, profile: str) -> tuple[ExecutionParams, int, float, list[str]]:
    n, m, k, kp = inst.n, inst.m, inst.k, inst.kprime
    deviations = []
    nfac = n ** (4.0 * kp / k)
    log2n = math.ceil(math.log2(max(n, 2)))
    if profile == "paper":
        r = math.ceil(216 * nfac * math.log(n))
        p_hat = math.ceil(C_PHAT * nfac * k * log2n**9)
    elif profile == "desk":
        r = math.ceil(40 * nfac)
        p_hat = math.ceil(C_PHAT * nfac * k * log2n**2)
        deviations.append("desk-profile: r=ceil(40*n^(4k'/k)), p_hat uses log^2")
    else:
        raise ValueError(f"unknown profile {profile!r}")
    p_hat = max(p_hat, k)
    z = choose_z(p_hat, n, m, inst.delta)
    params = ExecutionParams(n=n, m=m, k=k, kprime=kp, p_hat=p_hat, z=z)
    alpha = (1.0 / 6.0) / nfac
    return params, r, alpha, deviations


def _tolerant(inst: Instance, profile: str, rng: Random, want_report: bool) -> TesterReport:
    t0 = time.perf_counter()
    oracle = QueryOracle(inst)
    n, m, k, kp = inst.n, inst.m, inst.k, inst.kprime

    if 5 * kp > k:
        # gap too small for the fingerprint pipeline: solve exactly
        oracle.pattern_many(np.arange(m))
        oracle.text_many(np.arange(n))
        occ = occ_k_bruteforce(inst, kp)
        return TesterReport(
            answer="yes" if occ else "no",
            reported_set=occ if want_report else None,
            queries_pattern=oracle.pattern_queries,
            queries_text=oracle.text_queries,
            wall_time_s=time.perf_counter() - t0,
            deviations=["kprime > k/5: brute-force fallback"],
        )

    params, r, alpha, deviations = _driver_setup(inst, profile)
    nfac = n ** (4.0 * kp / k)
    budget = 20.0 * nfac * params.expected_work
    delta = inst.delta
    pieces = [(s * m, min((s + 1) * m, delta)) for s in range(n // m)]

    sets: list[AnswerSet] = []
    aborted = 0
    mod_deviated = False
    for _ell in range(r):
        ctx = sample_execution_context(params, inst.sigma, rng)
        mod_deviated |= ctx.modulus_deviated
        a, _work = _execute(oracle.pattern_many, oracle.text_many, m, n, params, ctx, budget)
        if a is None:
            aborted += 1
            a = AnswerSet.full(delta)
        sets.append(a)
    if mod_deviated:
        deviations.append("fingerprint modulus substituted with fixed prime < 2^62")

    keep = math.ceil((1.0 - alpha) * r)
    thresh = 2.0 * alpha * r
    answer = "no"
    reported: set[int] = set()
    for lo, hi in pieces:
        counts_by_ell = [sets[ell].count_range(lo, hi) for ell in range(r)]
        kept = sorted(range(r), key=lambda ell: counts_by_ell[ell])[:keep]
        if all(counts_by_ell[ell] == 0 for ell in kept):
            continue
        answer = "yes"
        if want_report:
            counts: dict[int, int] = {}
            for ell in kept:
                for pos in sets[ell].positions_in_range(lo, hi):
                    counts[pos] = counts.get(pos, 0) + 1
            reported.update(pos for pos, c in counts.items() if c >= thresh)
    return TesterReport(
        answer=answer,
        reported_set=sorted(reported) if want_report else None,
        queries_pattern=oracle.pattern_queries,
        queries_text=oracle.text_queries,
        wall_time_s=time.perf_counter() - t0,
        executions_aborted=aborted,
        deviations=deviations,
        extra={"r": r, "p_hat": params.p_hat, "z": params.z, "alpha": alpha},
    )


def tolerant_decide(inst: Instance, profile: str = "desk", rng: Random | None = None) -> TesterReport:
    """Yes/no tester distinguishing Occ_{k'} != empty from Occ_k = empty."""
    return _tolerant(inst, profile, rng or Random(), want_report=False)


def tolerant_report(inst: Instance, profile: str = "desk", rng: Random | None = None) -> TesterReport:
    """Reporting variant: additionally emits A_out with Occ_{k'} <= A_out <= Occ_k."""
    return _tolerant(inst, profile, rng or Random(), want_report=True)
