"""Karp-Rabin fingerprints, random primes, and rate-beta residue sampling.

The fingerprint of a string S is F(S) = (sum_i S[i] * x^i) mod q for a prime
modulus q and a random nonzero evaluation point x.  Sliding-window updates are
exact: after any extend/drop sequence the value equals a fresh evaluation of
the current window.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from random import Random

import numpy as np

__all__ = [
    "FIXED_PRIME_62",
    "FingerprintFn",
    "ResidueSample",
    "SlidingFingerprint",
    "fingerprint_modulus",
    "fp_drop_left",
    "fp_extend_right",
    "is_prime",
    "mod_project",
    "random_prime",
    "sample_residues",
]

# Largest prime below 2^62; substituted when the target modulus interval
# outgrows 64-bit words (see fingerprint_modulus).
FIXED_PRIME_62 = 4611686018427387847

# Strong-pseudoprime witnesses making the Miller test deterministic for all
# 64-bit integers (Sorenson & Webster).
_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic strong-pseudoprime test, exact for n < 2^64."""
    if n < 2:
        return False
    for p in _WITNESSES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def random_prime(lo: int, hi: int, rng: Random) -> int:
    """Uniformly random prime in [lo, hi) by rejection sampling.

    Small ranges are enumerated so that an empty prime range raises instead of
    looping; large ranges (Bertrand-style [p, 2p) intervals in particular)
    always succeed quickly.
    """
    if lo < 2 or hi <= lo:
        raise ValueError(f"bad prime range [{lo}, {hi})")
    if hi - lo > 2048:
        # Prime density ~ 1/ln(hi); the cap makes a miss astronomically
        # unlikely unless the range is near-empty of primes.
        for _ in range(64 * hi.bit_length()):
            cand = rng.randrange(lo, hi)
            if is_prime(cand):
                return cand
        if hi - lo > 1 << 22:
            raise ValueError(f"no prime found in [{lo}, {hi}) after rejection cap")
    primes = [v for v in range(lo, hi) if is_prime(v)]
    if not primes:
        raise ValueError(f"no prime in [{lo}, {hi})")
    return primes[rng.randrange(len(primes))]


def fingerprint_modulus(n: int, sigma: int, rng: Random, exponent: int = 10) -> tuple[int, bool]:
    """Pick the fingerprint modulus for strings of length scale n.

    Target interval is [n^exponent, 2*n^exponent] (with the lower end raised
    above sigma).  When that interval pokes past 2^61 the fixed prime just
    below 2^62 is substituted; the second return value flags the substitution
    so reports can log it.
    """
    lo = max(n**exponent, sigma + 1, 3)
    if 2 * lo > 1 << 61:
        if sigma >= FIXED_PRIME_62:
            raise ValueError("alphabet too large for the fixed fingerprint modulus")
        return FIXED_PRIME_62, True
    return random_prime(lo, 2 * lo + 1, rng), False


@dataclass(frozen=True)
class FingerprintFn:
    """Evaluation context for F(S) = sum S[i]*x^i mod q.

    Immutable after construction and freely shareable; the power cache is
    grown on demand.
    """

    x: int
    q: int
    max_len: int
    inv_x: int = field(init=False)
    _pows: list[int] = field(init=False, repr=False)

    def __post_init__(self):
        if not (1 <= self.x < self.q):
            raise ValueError("evaluation point must be a nonzero residue mod q")
        object.__setattr__(self, "inv_x", pow(self.x, -1, self.q))
        object.__setattr__(self, "_pows", [1])

    @classmethod
    def sample(cls, q: int, max_len: int, rng: Random) -> "FingerprintFn":
        return cls(x=rng.randrange(1, q), q=q, max_len=max_len)

    @property
    def pow_x(self) -> int:
        """x^max_len mod q (cached with the other powers)."""
        return self.power(self.max_len)

    def power(self, e: int) -> int:
        """x^e mod q, cached."""
        pows = self._pows
        while len(pows) <= e:
            pows.append(pows[-1] * self.x % self.q)
        return pows[e]

    def eval(self, symbols) -> int:
        """Direct O(len) evaluation; symbols must be < q."""
        syms = [int(s) for s in symbols]
        if len(syms) > self.max_len:
            raise ValueError(f"string longer than max_len={self.max_len}")
        if syms and (min(syms) < 0 or max(syms) >= self.q):
            raise ValueError("symbol outside [0, q)")
        self.power(max(len(syms) - 1, 0))
        pows = self._pows
        return sum(c * pows[t] for t, c in enumerate(syms)) % self.q

    def sliding(self) -> "SlidingFingerprint":
        return SlidingFingerprint(owner=self)


@dataclass
class SlidingFingerprint:
    """Fingerprint of a window maintained under extend-right / drop-left.

    Single-owner mutable state; `x_pow_len` tracks x^length so both updates are
    a constant number of modular multiplications.
    """

    owner: FingerprintFn
    value: int = 0
    length: int = 0
    x_pow_len: int = 1

    def extend_right(self, symbol: int) -> "SlidingFingerprint":
        q = self.owner.q
        self.value = (self.value + int(symbol) * self.x_pow_len) % q
        self.x_pow_len = self.x_pow_len * self.owner.x % q
        self.length += 1
        return self

    def drop_left(self, old_leftmost: int) -> "SlidingFingerprint":
        if self.length == 0:
            raise ValueError("drop_left on an empty window")
        q = self.owner.q
        self.value = (self.value - int(old_leftmost)) * self.owner.inv_x % q
        self.x_pow_len = self.x_pow_len * self.owner.inv_x % q
        self.length -= 1
        return self


def fp_extend_right(st: SlidingFingerprint, symbol: int) -> SlidingFingerprint:
    return st.extend_right(symbol)


def fp_drop_left(st: SlidingFingerprint, old_leftmost: int) -> SlidingFingerprint:
    return st.drop_left(old_leftmost)


def _rate_sample_sorted(limit: int, rate: float, rng: Random) -> np.ndarray:
    """Each value of [0, limit) independently with probability rate, sorted.

    Geometric skipping keeps the sampling work proportional to the output
    size; the jumps are drawn in vectorized batches from a generator seeded
    off the caller's rng.
    """
    if rate <= 0.0 or limit == 0:
        return np.empty(0, dtype=np.int64)
    if rate >= 1.0:
        return np.arange(limit, dtype=np.int64)
    gen = np.random.Generator(np.random.PCG64(rng.getrandbits(64)))
    chunks = []
    pos = -1
    while pos < limit:
        batch = max(256, int((limit - pos) * rate * 1.2) + 16)
        jumps = gen.geometric(rate, batch)  # trials-to-first-success, >= 1
        positions = pos + np.cumsum(jumps)
        if positions[-1] >= limit:
            chunks.append(positions[positions < limit])
            break
        chunks.append(positions)
        pos = int(positions[-1])
    return np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class ResidueSample:
    """A rate-beta random subset B of Z_p, materialized and sorted."""

    p: int
    beta: float
    members: np.ndarray

    def __post_init__(self):
        self.members.flags.writeable = False

    @property
    def mask(self) -> np.ndarray:
        msk = np.zeros(self.p, dtype=bool)
        msk[self.members] = True
        return msk

    def __len__(self) -> int:
        return len(self.members)


def sample_residues(p: int, beta: float, rng: Random) -> ResidueSample:
    """Include each residue of Z_p independently with probability beta.

    For beta > 1/2 the complement is sampled at rate 1-beta, so the sampling
    work is O(p*(1-beta)+1) before materialization.
    """
    if not (0.0 <= beta <= 1.0):
        raise ValueError("beta must lie in [0, 1]")
    if beta > 0.5:
        excluded = _rate_sample_sorted(p, 1.0 - beta, rng)
        keep = np.ones(p, dtype=bool)
        keep[excluded] = False
        members = np.nonzero(keep)[0].astype(np.int64)
    else:
        members = _rate_sample_sorted(p, beta, rng)
    return ResidueSample(p=p, beta=beta, members=members)


def mod_project(positions, p: int) -> list[int]:
    """The residue image {a mod p : a in positions}, sorted and deduplicated."""
    if p < 1:
        raise ValueError("modulus must be >= 1")
    arr = np.asarray(list(positions), dtype=np.int64)
    if arr.size == 0:
        return []
    return np.unique(arr % p).tolist()
