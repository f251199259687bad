"""Instance generators with truth labels attached.

Planted families give Yes instances by construction; the Bernoulli and
hidden-block families reproduce the hard input distributions whose typical
samples are k-far.  Labels are oracle-verified on demand (O(nm)), with
verification defaulting off above n*m = 10^7.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random

import numpy as np

from .strings import Instance, occ_exact, occ_k_bruteforce

__all__ = [
    "LabeledInstance",
    "gen_bernoulli_family",
    "gen_hybrid_family",
    "gen_large_alphabet",
    "gen_planted_noisy",
]

AUTO_VERIFY_LIMIT = 10**7  # n*m above which labels stay unverified by default


@dataclass
class LabeledInstance:
    instance: Instance
    dist_name: str
    seed: int
    plant: int | None = None
    truth_exact: bool | None = None  # Occ(P,T) nonempty
    truth_kfar: bool | None = None  # Occ_k(P,T) empty
    kfar_verified: bool = False
    regime_ok: bool = True

    def verify(self) -> "LabeledInstance":
        """Fill truth flags from the brute-force oracle."""
        inst = self.instance
        self.truth_exact = bool(occ_exact(inst.pattern, inst.text))
        self.truth_kfar = not occ_k_bruteforce(inst, inst.k)
        self.kfar_verified = True
        return self

    def header(self) -> dict:
        return {
            "dist": self.dist_name,
            "seed": self.seed,
            "plant": self.plant if self.plant is not None else "-",
            "truth_exact": _flag(self.truth_exact),
            "truth_kfar": _flag(self.truth_kfar),
            "kfar_verified": int(self.kfar_verified),
            "regime_ok": int(self.regime_ok),
        }


def _flag(v: bool | None) -> str:
    return "?" if v is None else str(int(v))


def _rng_for(*parts) -> Random:
    # String seeding hashes via sha512, stable across processes.
    return Random(":".join(str(p) for p in parts))


def _maybe_verify(li: LabeledInstance, verify: bool | None) -> LabeledInstance:
    inst = li.instance
    if verify is None:
        verify = inst.n * inst.m <= AUTO_VERIFY_LIMIT
    if verify:
        li.verify()
    return li


def _bernoulli(rng: Random, prob: float, count: int) -> list[int]:
    return [1 if rng.random() < prob else 0 for _ in range(count)]


def _clamp_k(k: int, m: int) -> tuple[int, bool]:
    """Instance validity needs 1 <= k < m; requests outside only void the
    regime guarantees, they never fail."""
    clamped = min(max(k, 1), m - 1)
    return clamped, clamped == k


def gen_bernoulli_family(
    kind: str, n: int, m: int, k: int, seed: int, verify: bool | None = None
) -> LabeledInstance:
    """Ber(2k/m) families: independent Random, window-copy Planted, fair Mixed.

    Outside the regime 4 ln(5n) < k <= m/4 the instance is still produced but
    the regime flag is cleared (distributional guarantees void).
    """
    if kind not in ("random", "planted", "mixed"):
        raise ValueError(f"unknown bernoulli kind {kind!r}")
    rng = _rng_for("bernoulli", kind, n, m, k, seed)
    prob = min(1.0, 2.0 * k / m)
    k, k_unclamped = _clamp_k(k, m)
    regime_ok = k_unclamped and (4.0 * math.log(5.0 * n) < k) and (k <= m / 4)
    subkind = kind
    if kind == "mixed":
        subkind = "planted" if rng.random() < 0.5 else "random"
    text = _bernoulli(rng, prob, n)
    plant = None
    truth_exact = None
    if subkind == "planted":
        plant = rng.randrange(n - m + 1)
        pattern = text[plant : plant + m]
        truth_exact = True
    else:
        pattern = _bernoulli(rng, prob, m)
    inst = Instance(pattern=pattern, text=text, sigma=2, k=k, kprime=0)
    li = LabeledInstance(
        instance=inst,
        dist_name=f"bernoulli-{kind}",
        seed=seed,
        plant=plant,
        truth_exact=truth_exact,
        regime_ok=regime_ok,
    )
    return _maybe_verify(li, verify)


def gen_hybrid_family(
    kind: str, n: int, m: int, k: int, seed: int, verify: bool | None = None
) -> LabeledInstance:
    """Hidden-block families: a Ber(2k/s)^s block of length s = min(m, max(4k, Delta))
    placed at offset p in the pattern and p+t in the text, zeros elsewhere."""
    if kind not in ("equal", "independent", "hybrid"):
        raise ValueError(f"unknown hybrid kind {kind!r}")
    rng = _rng_for("hybrid", kind, n, m, k, seed)
    delta = n - m + 1
    s = min(m, max(4 * k, delta))
    prob = min(1.0, 2.0 * k / s)
    k, k_unclamped = _clamp_k(k, m)
    regime_ok = (
        k_unclamped and (4.0 * math.log(5.0 * n) < k) and (k <= m / 4) and 2.0 * k / s <= 1.0
    )
    subkind = kind
    if kind == "hybrid":
        subkind = "equal" if rng.random() < 0.5 else "independent"
    p = rng.randrange(m - s + 1)
    t = rng.randrange(delta)
    block_p = _bernoulli(rng, prob, s)
    block_t = block_p if subkind == "equal" else _bernoulli(rng, prob, s)
    pattern = [0] * m
    pattern[p : p + s] = block_p
    text = [0] * n
    text[p + t : p + t + s] = block_t
    inst = Instance(pattern=pattern, text=text, sigma=2, k=k, kprime=0)
    li = LabeledInstance(
        instance=inst,
        dist_name=f"hybrid-{kind}",
        seed=seed,
        plant=t if subkind == "equal" else None,
        truth_exact=True if subkind == "equal" else None,
        regime_ok=regime_ok,
    )
    return _maybe_verify(li, verify)


def gen_large_alphabet(
    kind: str, n: int, m: int, seed: int, verify: bool | None = None
) -> LabeledInstance:
    """Uniform symbols over [1..10n^2] with k fixed to m-1."""
    if kind not in ("random", "planted", "mixed"):
        raise ValueError(f"unknown large-alphabet kind {kind!r}")
    if m < 2:
        raise ValueError("large-alphabet family needs m >= 2 (k = m-1 >= 1)")
    rng = _rng_for("large-alpha", kind, n, m, seed)
    sigma = 10 * n * n + 1
    subkind = kind
    if kind == "mixed":
        subkind = "planted" if rng.random() < 0.5 else "random"
    text = [rng.randrange(1, sigma) for _ in range(n)]
    plant = None
    truth_exact = None
    if subkind == "planted":
        plant = rng.randrange(n - m + 1)
        pattern = text[plant : plant + m]
        truth_exact = True
    else:
        pattern = [rng.randrange(1, sigma) for _ in range(m)]
    inst = Instance(pattern=pattern, text=text, sigma=sigma, k=m - 1, kprime=0)
    li = LabeledInstance(
        instance=inst,
        dist_name=f"large-alpha-{kind}",
        seed=seed,
        plant=plant,
        truth_exact=truth_exact,
    )
    return _maybe_verify(li, verify)


def gen_planted_noisy(
    n: int,
    m: int,
    k: int,
    kprime: int,
    seed: int,
    sigma: int = 4,
    verify: bool | None = None,
) -> LabeledInstance:
    """Plant a window, then flip exactly kprime pattern positions to fresh
    symbols, so Occ_{kprime} contains the plant by construction."""
    if not (0 <= kprime < k):
        raise ValueError("need 0 <= kprime < k")
    if sigma < 2:
        raise ValueError("flipping symbols needs sigma >= 2")
    rng = _rng_for("planted-noisy", n, m, k, kprime, sigma, seed)
    text = [rng.randrange(sigma) for _ in range(n)]
    t = rng.randrange(n - m + 1)
    pattern = text[t : t + m]
    for j in rng.sample(range(m), kprime):
        pattern[j] = (pattern[j] + rng.randrange(1, sigma)) % sigma
    inst = Instance(pattern=pattern, text=text, sigma=sigma, k=k, kprime=kprime)
    li = LabeledInstance(
        instance=inst,
        dist_name="planted-noisy",
        seed=seed,
        plant=t,
        truth_exact=True if kprime == 0 else None,
    )
    return _maybe_verify(li, verify)
