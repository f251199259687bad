"""Instance model, counted query oracle, and exact brute-force matching oracles.

Everything downstream (testers, containers, generators) treats the functions in
this module as ground truth.  Strings are sequences of machine integers in
[0, sigma); there is no character decoding anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Instance",
    "QueryOracle",
    "hamming_distance",
    "mismatch_set",
    "occ_exact",
    "occ_hamming",
    "occ_k_bruteforce",
    "read_instance",
    "write_instance",
]


def _as_symbol_array(seq) -> np.ndarray:
    arr = np.asarray(seq, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("symbol sequence must be one-dimensional")
    return arr


@dataclass(frozen=True)
class Instance:
    """A pattern/text pair with mismatch thresholds k and kprime.

    Invariants: all symbols lie in [0, sigma); 1 <= k < m <= n; 0 <= kprime < k.
    """

    pattern: np.ndarray
    text: np.ndarray
    sigma: int
    k: int
    kprime: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pattern", _as_symbol_array(self.pattern))
        object.__setattr__(self, "text", _as_symbol_array(self.text))
        self.pattern.flags.writeable = False
        self.text.flags.writeable = False
        m, n = len(self.pattern), len(self.text)
        if m < 1:
            raise ValueError("pattern must be non-empty")
        if n < m:
            raise ValueError(f"text shorter than pattern: n={n} < m={m}")
        if not (1 <= self.k < m):
            raise ValueError(f"k={self.k} outside [1, m)={m}")
        if not (0 <= self.kprime < self.k):
            raise ValueError(f"kprime={self.kprime} outside [0, k)={self.k}")
        for name, arr in (("pattern", self.pattern), ("text", self.text)):
            if arr.size and (arr.min() < 0 or arr.max() >= self.sigma):
                raise ValueError(f"{name} contains symbols outside [0, sigma={self.sigma})")

    @property
    def m(self) -> int:
        return len(self.pattern)

    @property
    def n(self) -> int:
        return len(self.text)

    @property
    def delta(self) -> int:
        """Number of candidate alignments, n - m + 1."""
        return self.n - self.m + 1

    def window(self, i: int) -> np.ndarray:
        """Text window T[i..i+m)."""
        return self.text[i : i + self.m]


class QueryOracle:
    """Counted read access to the pattern and text of an instance.

    By default every read increments the counter; with ``dedupe=True`` only the
    first read of each distinct position counts.  Single-owner: counters are not
    synchronized, so concurrent trials must each build their own oracle.
    """

    def __init__(self, inst: Instance, dedupe: bool = False, log: bool = False):
        self.inst = inst
        self.dedupe = dedupe
        self.pattern_queries = 0
        self.text_queries = 0
        self.query_log: list[tuple[str, int]] | None = [] if log else None
        if dedupe:
            self._seen_p = np.zeros(inst.m, dtype=bool)
            self._seen_t = np.zeros(inst.n, dtype=bool)

    @property
    def total_queries(self) -> int:
        return self.pattern_queries + self.text_queries

    def pattern(self, j: int) -> int:
        self._count_p(np.asarray([j]))
        return int(self.inst.pattern[j])

    def text(self, i: int) -> int:
        self._count_t(np.asarray([i]))
        return int(self.inst.text[i])

    def pattern_many(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        self._count_p(idx)
        return self.inst.pattern[idx]

    def text_many(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        self._count_t(idx)
        return self.inst.text[idx]

    def _count_p(self, idx: np.ndarray):
        if self.dedupe:
            fresh = np.unique(idx[~self._seen_p[idx]])
            self.pattern_queries += len(fresh)
            self._seen_p[fresh] = True
        else:
            self.pattern_queries += len(idx)
        if self.query_log is not None:
            self.query_log.extend(("P", int(j)) for j in idx)

    def _count_t(self, idx: np.ndarray):
        if self.dedupe:
            fresh = np.unique(idx[~self._seen_t[idx]])
            self.text_queries += len(fresh)
            self._seen_t[fresh] = True
        else:
            self.text_queries += len(idx)
        if self.query_log is not None:
            self.query_log.extend(("T", int(i)) for i in idx)


def hamming_distance(a, b) -> int:
    """Number of mismatching positions between two equal-length sequences."""
    a = _as_symbol_array(a)
    b = _as_symbol_array(b)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} != {len(b)}")
    return int(np.count_nonzero(a != b))


def mismatch_set(pattern, window) -> list[int]:
    """Sorted positions j with pattern[j] != window[j]."""
    a = _as_symbol_array(pattern)
    b = _as_symbol_array(window)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} != {len(b)}")
    return np.nonzero(a != b)[0].tolist()


def occ_exact(pattern, text) -> list[int]:
    """Exact occurrences of pattern in text via the failure-function matcher.

    Worst-case linear time; the adaptive multi-instance filter's brute branch
    relies on this bound.
    """
    p = _as_symbol_array(pattern)
    t = _as_symbol_array(text)
    m, n = len(p), len(t)
    if m > n:
        raise ValueError(f"pattern longer than text: {m} > {n}")
    if m == 0:
        return list(range(n + 1))
    fail = [0] * m
    k = 0
    for j in range(1, m):
        while k > 0 and p[j] != p[k]:
            k = fail[k - 1]
        if p[j] == p[k]:
            k += 1
        fail[j] = k
    out = []
    k = 0
    for i in range(n):
        while k > 0 and t[i] != p[k]:
            k = fail[k - 1]
        if t[i] == p[k]:
            k += 1
        if k == m:
            out.append(i - m + 1)
            k = fail[k - 1]
    return out


def occ_hamming(pattern, text, threshold: int) -> list[int]:
    """Starting positions i with HD(pattern, text[i..i+m)) <= threshold.

    Exhaustive O(n*m) window scan; this is the ground-truth oracle.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    p = _as_symbol_array(pattern)
    t = _as_symbol_array(text)
    m, n = len(p), len(t)
    if m > n:
        raise ValueError(f"pattern longer than text: {m} > {n}")
    out = []
    for i in range(n - m + 1):
        if int(np.count_nonzero(p != t[i : i + m])) <= threshold:
            out.append(i)
    return out


def occ_k_bruteforce(inst: Instance, threshold: int) -> list[int]:
    """Occ_threshold(P, T) of an instance by exhaustive scan."""
    return occ_hamming(inst.pattern, inst.text, threshold)


# ---------------------------------------------------------------------------
# Instance text format
#
# line 1: `n m sigma k kprime` (five base-10 integers)
# line 2: m pattern symbols, space-separated
# line 3: n text symbols, space-separated
# Lines starting with `#` are comments; generators put labels there.
# ---------------------------------------------------------------------------


def write_instance(path, inst: Instance, header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        fh.write(f"{inst.n} {inst.m} {inst.sigma} {inst.k} {inst.kprime}\n")
        fh.write(" ".join(str(int(s)) for s in inst.pattern) + "\n")
        fh.write(" ".join(str(int(s)) for s in inst.text) + "\n")


def _parse_header_line(line: str, header: dict) -> None:
    for tok in line.lstrip("#").split():
        if "=" in tok:
            key, val = tok.split("=", 1)
            header[key] = val


def read_instance(path) -> tuple[Instance, dict]:
    """Parse an instance file; returns the instance and the `#`-header fields.

    Raises ValueError on malformed content, including out-of-range symbols
    (Instance validation).
    """
    header: dict = {}
    data_lines: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                _parse_header_line(line, header)
                continue
            data_lines.append(line)
    if len(data_lines) < 3:
        raise ValueError("instance file needs a size line, a pattern line and a text line")
    try:
        n, m, sigma, k, kprime = (int(x) for x in data_lines[0].split())
    except Exception as exc:
        raise ValueError(f"bad size line: {data_lines[0]!r}") from exc
    pattern = [int(x) for x in data_lines[1].split()]
    text = [int(x) for x in data_lines[2].split()]
    if len(pattern) != m:
        raise ValueError(f"pattern length {len(pattern)} does not match header m={m}")
    if len(text) != n:
        raise ValueError(f"text length {len(text)} does not match header n={n}")
    return Instance(pattern=pattern, text=text, sigma=sigma, k=k, kprime=kprime), header
