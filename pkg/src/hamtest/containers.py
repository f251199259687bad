"""Mismatch containers: synchronizing sets, periodic runs, trie light edges.

Builds position sets M such that, for every alignment of two length-m windows,
the mismatches between them hit M (suitably shifted) enough times.  The chain
is: sync_set / tau_runs / light_positions -> one_mismatch_container ->
k_mismatch_container -> container_below / container_above ->
mismatch_container, with exhaustive verify-and-redraw making the final
guarantees deterministic at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .hashing import FIXED_PRIME_62, random_prime
from .strings import Instance, _as_symbol_array

__all__ = [
    "ContainerSet",
    "CoverageCertificate",
    "SyncSet",
    "container_above",
    "container_below",
    "k_mismatch_container",
    "light_positions",
    "mismatch_container",
    "one_mismatch_container",
    "sync_set",
    "tau_runs",
    "verify_container",
    "verify_sync_conditions",
]

# Defaults for the constants the source analysis leaves implicit.
C_FALLBACK = 8.0
C_PRIME = 4
C_SIZE = 8.0
SYNC_RETRY_CAP = 25
CONTAINER_RETRY_CAP = 6

_PHI_INF = 1 << 62  # sentinel above every window hash


class ConstructionError(RuntimeError):
    """Raised when a randomized construction exhausts its retry cap."""


@dataclass(frozen=True)
class SyncSet:
    """A tau-synchronizing set: sparse, content-consistent position sample."""

    tau: int
    positions: np.ndarray
    seed: int

    def __post_init__(self):
        self.positions.flags.writeable = False

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class CoverageCertificate:
    threshold: int
    passed: bool
    # (alignment, covered mismatches, required mismatches)
    violations: tuple[tuple[int, int, int], ...] = ()


@dataclass
class ContainerSet:
    positions: np.ndarray
    budget: float | None = None
    verified: CoverageCertificate | None = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.positions)

    def mask(self, n: int) -> np.ndarray:
        msk = np.zeros(n, dtype=bool)
        msk[self.positions] = True
        return msk


# ---------------------------------------------------------------------------
# Periodicity scans
# ---------------------------------------------------------------------------


def _period_at_most_mask(s: np.ndarray, win_len: int, max_period: int) -> np.ndarray:
    """mask[j] = (shortest period of s[j..j+win_len) <= max_period).

    O(n * max_period) via per-period equality arrays and window sums.
    """
    n = len(s)
    count = n - win_len + 1
    if count <= 0:
        return np.zeros(0, dtype=bool)
    mask = np.zeros(count, dtype=bool)
    for p in range(1, min(max_period, win_len - 1) + 1):
        eq = s[: n - p] == s[p:]
        need = win_len - p
        csum = np.concatenate(([0], np.cumsum(eq)))
        mask |= (csum[need : need + count] - csum[:count]) == need
    if max_period >= win_len:
        mask[:] = True
    return mask


def _shortest_period(fragment: np.ndarray) -> int:
    """per(fragment) via the failure function."""
    f = fragment
    ln = len(f)
    fail = [0] * ln
    k = 0
    for j in range(1, ln):
        while k > 0 and f[j] != f[k]:
            k = fail[k - 1]
        if f[j] == f[k]:
            k += 1
        fail[j] = k
    return ln - fail[-1] if ln else 0


def tau_runs(s, tau: int) -> list[tuple[int, int, int]]:
    """Maximal fragments of length >= 3*tau-1 with shortest period <= tau//3.

    Returns (start, end, period) triples, each run reported once with its
    shortest period.  Desk-scale O(n*tau) scan.
    """
    if tau < 3:
        raise ValueError("tau_runs needs tau >= 3 so that tau/3 >= 1")
    s = _as_symbol_array(s)
    n = len(s)
    min_len = 3 * tau - 1
    out = []
    for p in range(1, tau // 3 + 1):
        if p >= n:
            break
        eq = s[: n - p] == s[p:]
        # maximal True stretches of eq; stretch [a, b) gives fragment [a, b+p)
        padded = np.concatenate(([False], eq, [False])).astype(np.int8)
        d = np.diff(padded)
        starts = np.nonzero(d == 1)[0]
        ends = np.nonzero(d == -1)[0]
        for a, b in zip(starts, ends):
            ell, r = int(a), int(b) + p
            if r - ell < min_len:
                continue
            if _shortest_period(s[ell:r]) == p:
                out.append((ell, r, p))
    out.sort()
    return out


# ---------------------------------------------------------------------------
# Synchronizing sets (local-minimizer construction, verified post hoc)
# ---------------------------------------------------------------------------


def _window_hashes(s: np.ndarray, tau: int, rng: Random) -> list[int]:
    """Random content-determined hash of every length-tau window."""
    q = FIXED_PRIME_62
    x = rng.randrange(1, q)
    inv_x = pow(x, -1, q)
    x_top = pow(x, tau - 1, q)
    n = len(s)
    vals = [0] * (n - tau + 1)
    h = 0
    for t in range(tau):
        h = (h + int(s[t]) * pow(x, t, q)) % q
    vals[0] = h
    for j in range(1, n - tau + 1):
        h = ((h - int(s[j - 1])) * inv_x + int(s[j + tau - 1]) * x_top) % q
        vals[j] = h
    return vals


def _build_sync_positions(s: np.ndarray, tau: int, rng: Random) -> np.ndarray:
    """One construction attempt: phi-minimizer at a window endpoint.

    phi(j) hashes s[j..j+tau) and is +inf on windows with period <= tau/3, so
    membership of i depends only on s[i..i+2*tau) (condition 1 holds exactly).
    """
    n = len(s)
    phi = np.asarray(_window_hashes(s, tau, rng), dtype=np.uint64)
    periodic = _period_at_most_mask(s, tau, tau // 3)
    phi = np.where(periodic, np.uint64(_PHI_INF), phi)
    count = n - 2 * tau + 1
    win_min = sliding_window_view(phi, tau + 1).min(axis=1)[:count]
    member = (win_min < _PHI_INF) & ((phi[:count] == win_min) | (phi[tau : tau + count] == win_min))
    return np.nonzero(member)[0].astype(np.int64)


def verify_sync_conditions(s, tau: int, positions: np.ndarray) -> tuple[bool, bool]:
    """Exhaustively check both synchronizing-set conditions.

    Condition 1: equal 2*tau-windows agree on membership.
    Condition 2: positions are absent from [i..i+tau) exactly when
    per(s[i..i+3*tau-1)) <= tau/3.
    """
    s = _as_symbol_array(s)
    n = len(s)
    member = np.zeros(n, dtype=bool)
    member[positions] = True
    count = n - 2 * tau + 1
    if count > 0:
        windows = sliding_window_view(s, 2 * tau)[:count]
        _, group = np.unique(windows, axis=0, return_inverse=True)
        flags = member[:count]
        cond1 = all(
            flags[group == g].all() or not flags[group == g].any() for g in range(group.max() + 1)
        )
    else:
        cond1 = True
    cond2 = True
    span = 3 * tau - 1
    if n - span + 1 > 0:
        periodic = _period_at_most_mask(s, span, tau // 3)
        csum = np.concatenate(([0], np.cumsum(member)))
        for i in range(n - span + 1):
            empty = (csum[i + tau] - csum[i]) == 0
            if empty != bool(periodic[i]):
                cond2 = False
                break
    return cond1, cond2


def sync_set(
    s,
    tau: int,
    rng: Random,
    retry_cap: int = SYNC_RETRY_CAP,
    verify: bool = False,
) -> SyncSet:
    """Build a tau-synchronizing set of size at most 30n/tau.

    Retries with a fresh derived seed until the size bound (and, when
    ``verify`` is set, both conditions) hold.
    """
    s = _as_symbol_array(s)
    n = len(s)
    if not (1 <= tau <= n / 2):
        raise ValueError(f"tau={tau} outside [1, n/2] for n={n}")
    bound = 30 * n / tau
    achieved = -1
    for _ in range(retry_cap):
        seed = rng.getrandbits(63)
        positions = _build_sync_positions(s, tau, Random(seed))
        achieved = len(positions)
        if achieved > bound:
            continue
        if verify and not all(verify_sync_conditions(s, tau, positions)):
            continue
        return SyncSet(tau=tau, positions=positions, seed=seed)
    raise ConstructionError(
        f"sync_set retry cap exhausted (size {achieved} vs bound {bound:.1f})"
    )


# ---------------------------------------------------------------------------
# Suffix ordering and trie light edges
# ---------------------------------------------------------------------------


def _suffix_rank(s: np.ndarray) -> np.ndarray:
    """Lexicographic rank of every suffix (prefix doubling, end-of-string low)."""
    n = len(s)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(s, kind="stable")
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.concatenate(([0], np.cumsum(np.diff(s[order]) != 0)))
    k = 1
    idx = np.arange(n)
    while k < n and rank.max() < n - 1:
        second = np.where(idx + k < n, rank[np.minimum(idx + k, n - 1)], -1)
        order = np.lexsort((second, rank))
        changed = np.ones(n, dtype=np.int64)
        changed[0] = 0
        changed[1:] = (np.diff(rank[order]) != 0) | (np.diff(second[order]) != 0)
        new_rank = np.empty(n, dtype=np.int64)
        new_rank[order] = np.cumsum(changed)
        rank = new_rank
        k *= 2
    return rank


def _lce_scan(s: np.ndarray, a: int, b: int) -> int:
    n = len(s)
    d = 0
    while a + d < n and b + d < n and s[a + d] == s[b + d]:
        d += 1
    return d


def _light_edge_positions(w: np.ndarray, starts: list[int]) -> set[int]:
    """Positions start+depth over light edges of the trie of suffixes w[i..).

    Light edges only occur where the compacted trie branches, so the walk runs
    over leaf intervals of the suffix-sorted starts with adjacent LCE values.
    Sentinel edges (a suffix ending exactly at the branch depth) carry no real
    character and contribute nothing.
    """
    cnt = len(starts)
    if cnt <= 1:
        return set()
    rank = _suffix_rank(w)
    leaves = sorted(starts, key=lambda i: rank[i])
    lce = [_lce_scan(w, leaves[t], leaves[t + 1]) for t in range(cnt - 1)]
    n = len(w)
    out: set[int] = set()
    stack = [(0, cnt - 1)]
    while stack:
        lo, hi = stack.pop()
        depth = min(lce[lo:hi])
        size = hi - lo + 1
        c_lo = lo
        for t in range(lo, hi + 1):
            if t == hi or lce[t] == depth:
                c_hi = t
                c_size = c_hi - c_lo + 1
                if size >= 2 * c_size:
                    for leaf_idx in range(c_lo, c_hi + 1):
                        pos = leaves[leaf_idx] + depth
                        if pos < n:
                            out.add(pos)
                if c_size >= 2:
                    stack.append((c_lo, c_hi))
                c_lo = t + 1
    return out


def light_positions(s, starts, reverse: bool = False) -> list[int]:
    """Heavy-light selected positions for the suffix trie over ``starts``.

    Forward: trie of suffixes s[i..n); a light edge at depth d on the path of
    suffix i contributes position i+d.  Reversed: trie of reversed prefixes
    s[i-1]..s[0]; depth d on the path of prefix i contributes i-1-d.
    At most |starts| * ceil(log2 |starts|) positions.
    """
    s = _as_symbol_array(s)
    n = len(s)
    starts = sorted(set(int(i) for i in starts))
    if any(i < 0 or i >= n for i in starts):
        raise ValueError("starts must lie in [0, n)")
    if not reverse:
        return sorted(_light_edge_positions(s, starts))
    rev = s[::-1].copy()
    rstarts = [n - i for i in starts if i > 0]
    raw = _light_edge_positions(rev, rstarts)
    return sorted(n - 1 - pos for pos in raw)


# ---------------------------------------------------------------------------
# Containers
# ---------------------------------------------------------------------------


def one_mismatch_container(s, m: int, rng: Random) -> ContainerSet:
    """One-mismatch container for all length-m window pairs of s.

    For every i, j with HD(s[i..i+m), s[j..j+m)) = 1, the unique mismatch lands
    in (M-i) or (M-j).  Union of tau-run boundaries and light-edge positions of
    the forward and reversed tries over a tau-synchronizing set, tau = m//6.
    """
    s = _as_symbol_array(s)
    n = len(s)
    if not (1 <= m <= n):
        raise ValueError(f"m={m} outside [1, n={n}]")
    budget = C_SIZE * (n / m) * math.log2(2 * n / m)
    if m < 6:
        return ContainerSet(np.arange(n, dtype=np.int64), budget=budget)
    tau = m // 6
    sync = sync_set(s, tau, rng)
    positions: set[int] = set()
    if tau >= 3:
        for ell, r, _period in tau_runs(s, tau):
            if ell - 1 >= 0:
                positions.add(ell - 1)
            if r < n:
                positions.add(r)
    starts = sync.positions.tolist()
    positions.update(light_positions(s, starts, reverse=False))
    positions.update(light_positions(s, starts, reverse=True))
    return ContainerSet(np.asarray(sorted(positions), dtype=np.int64), budget=budget)


def k_mismatch_container(
    s,
    m: int,
    k: int,
    rng: Random,
    c_fallback: float = C_FALLBACK,
    c_prime: int = C_PRIME,
) -> ContainerSet:
    """One draw of the randomized k-mismatch container distribution.

    For each window pair at HD <= k and each of its mismatches, the mismatch is
    covered with constant probability.  Positions are permuted by (j mod p, j)
    for a random prime p ~ k log n, then the one-mismatch container of the
    permuted string is pulled back.
    """
    s = _as_symbol_array(s)
    n = len(s)
    if not (1 <= m <= n) or k < 1:
        raise ValueError("need 1 <= m <= n and k >= 1")
    full = ContainerSet(np.arange(n, dtype=np.int64))
    if n < 2 or k * math.log2(n) ** 2 >= m / c_fallback:
        return full
    p_hat = c_prime * k * math.ceil(math.log2(n))
    if p_hat < 2 or 2 * p_hat > m:
        # The fallback branch is supposed to guarantee m >= 2*p_hat; keep the
        # guard so off-default constants stay safe.
        return full
    p = random_prime(p_hat, 2 * p_hat, rng)
    idx = np.arange(n, dtype=np.int64)
    order = np.lexsort((idx, idx % p))
    permuted = s[order]
    inner = one_mismatch_container(permuted, m // p, rng)
    back = np.sort(order[inner.positions])
    return ContainerSet(back)


def _pair_violations(
    s: np.ndarray, m: int, k: int, mask: np.ndarray, capped: bool, limit: int = 16
) -> list[tuple[int, int, int]]:
    """Window pairs violating the (capped) coverage property, by shift.

    For shift d and left endpoint i, coverage counts mismatch positions t in
    [i, i+m) with t in M or t+d in M.  Uncapped requires full containment for
    pairs at HD <= k; capped requires >= min(k, HD) covered for every pair.
    Returns (i, j, covered) triples, at most ``limit``.
    """
    n = len(s)
    out: list[tuple[int, int, int]] = []
    for d in range(1, n - m + 1):
        a = s[: n - d]
        b = s[d:]
        diff = a != b
        cov = diff & (mask[: n - d] | mask[d:])
        cdiff = np.concatenate(([0], np.cumsum(diff)))
        ccov = np.concatenate(([0], np.cumsum(cov)))
        wins = n - d - m + 1
        hd = cdiff[m : m + wins] - cdiff[:wins]
        got = ccov[m : m + wins] - ccov[:wins]
        if capped:
            bad = got < np.minimum(hd, k)
        else:
            bad = (hd <= k) & (got < hd)
        for i in np.nonzero(bad)[0][: limit - len(out)]:
            out.append((int(i), int(i) + d, int(got[i])))
        if len(out) >= limit:
            break
    return out


def container_below(
    s, m: int, k: int, rng: Random, retry_cap: int = CONTAINER_RETRY_CAP
) -> ContainerSet:
    """Deterministic-coverage container: MM(pair) subset of (M-i) u (M-j).

    Union of ceil(10 log2 n) independent k-mismatch draws, re-verified
    exhaustively and re-drawn on failure so the property holds surely.
    """
    s = _as_symbol_array(s)
    n = len(s)
    draws = max(1, math.ceil(10 * math.log2(max(n, 2))))
    for _ in range(retry_cap):
        union: set[int] = set()
        for _t in range(draws):
            union.update(k_mismatch_container(s, m, k, rng).positions.tolist())
            if len(union) == n:
                break
        positions = np.asarray(sorted(union), dtype=np.int64)
        mask = np.zeros(n, dtype=bool)
        mask[positions] = True
        if not _pair_violations(s, m, k, mask, capped=False, limit=1):
            return ContainerSet(positions)
    raise ConstructionError("container_below retry cap exhausted")


def container_above(
    s, m: int, k: int, rng: Random, retry_cap: int = CONTAINER_RETRY_CAP
) -> ContainerSet:
    """Capped-coverage container: >= min(k, HD) covered mismatches per pair.

    A below-threshold part at 4k plus geometrically growing thresholds K,
    each subsampled at rate 8k/K; verified exhaustively and re-drawn.
    """
    s = _as_symbol_array(s)
    n = len(s)
    k_eff = max(k, 20)
    draws = max(1, math.ceil(10 * math.log2(max(n, 2))))
    for _ in range(retry_cap):
        union: set[int] = set(container_below(s, m, 4 * k_eff, rng).positions.tolist())
        kk = 8 * k_eff
        while kk <= 2 * m and len(union) < n:
            rate = 8 * k_eff / kk
            for _t in range(draws):
                drawn = k_mismatch_container(s, m, kk, rng).positions
                union.update(int(v) for v in drawn if rng.random() < rate)
                if len(union) == n:
                    break
            kk *= 2
        positions = np.asarray(sorted(union), dtype=np.int64)
        mask = np.zeros(n, dtype=bool)
        mask[positions] = True
        if not _pair_violations(s, m, k, mask, capped=True, limit=1):
            return ContainerSet(positions)
    raise ConstructionError("container_above retry cap exhausted")


def mismatch_container(pattern, text, k: int, rng: Random) -> ContainerSet:
    """Full mismatch container M subset of [0..n) for a pattern/text pair.

    For every alignment i, at least min(k, HD_i) of the mismatches between the
    pattern and T[i..i+m) involve a position of M (text side) or of M-i
    (pattern side).  Built on the concatenation S = P.T and mapped back via
    M = (M' u (M'-m)) inter [0..n); verified and re-drawn, so the attached
    certificate always passes.
    """
    p = _as_symbol_array(pattern)
    t = _as_symbol_array(text)
    m, n = len(p), len(t)
    s = np.concatenate([p, t])
    budget = C_SIZE * (n / m) * k * math.log2(max(n, 2)) ** 4
    for _ in range(CONTAINER_RETRY_CAP):
        above = container_above(s, m, k, rng)
        shifted = np.concatenate([above.positions, above.positions - m])
        positions = np.unique(shifted[(shifted >= 0) & (shifted < n)])
        cert = _verify_cover(p, t, positions, k)
        if cert.passed:
            return ContainerSet(positions, budget=budget, verified=cert)
    raise ConstructionError("mismatch_container retry cap exhausted")


def _verify_cover(p: np.ndarray, t: np.ndarray, positions: np.ndarray, k: int) -> CoverageCertificate:
    m, n = len(p), len(t)
    mask = np.zeros(n, dtype=bool)
    mask[positions] = True
    tw = sliding_window_view(t, m)
    diff = tw != p
    cov = diff & (mask[:m][None, :] | sliding_window_view(mask, m))
    hd = diff.sum(axis=1)
    got = cov.sum(axis=1)
    need = np.minimum(hd, k)
    bad = np.nonzero(got < need)[0]
    violations = tuple((int(i), int(got[i]), int(need[i])) for i in bad[:32])
    return CoverageCertificate(threshold=k, passed=bad.size == 0, violations=violations)


def verify_container(inst: Instance, container: ContainerSet | np.ndarray, threshold: int) -> CoverageCertificate:
    """Exhaustive O(nm) coverage check of a container against an instance."""
    positions = container.positions if isinstance(container, ContainerSet) else np.asarray(container, dtype=np.int64)
    return _verify_cover(inst.pattern, inst.text, positions, threshold)
