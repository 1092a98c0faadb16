"""Prime and factor sieves, and counting statistics over reversed primes.

All counts are exact integers.  A *block* is the set of primes in
``[b^(lambda-1), b^lambda)``; its reversal ``R_lambda(p)`` is compared against
congruence classes, smallest prime factors and multiplicity counts.
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .digits import check_base, reverse_array

SEGMENT = 1 << 20
SIEVE_BUDGET = 2 * 10**9
CACHE_MAGIC = b"RVLPRM1\0"


class BudgetExceeded(RuntimeError):
    """The requested range is beyond the sieve budget."""


def check_budget(hi: int) -> None:
    if hi > SIEVE_BUDGET:
        # one byte per integer while sieving, eight per stored prime
        est = SEGMENT + 8 * int(hi / max(math.log(hi), 1.0))
        raise BudgetExceeded(f"range up to {hi} exceeds the budget {SIEVE_BUDGET} "
                             f"(about {est / 2**20:.0f} MiB would be needed)")


@lru_cache(maxsize=8)
def primes_upto(n: int) -> np.ndarray:
    """All primes <= n (simple sieve; meant for n up to a few times 10^7)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    s = np.ones(n + 1, dtype=bool)
    s[:2] = False
    s[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if s[p]:
            s[p * p::2 * p] = False
    return np.flatnonzero(s).astype(np.int64)


def _sieve_segment(lo: int, hi: int) -> np.ndarray:
    base = primes_upto(math.isqrt(max(hi - 1, 1)))
    s = np.ones(hi - lo, dtype=bool)
    if lo < 2:
        s[: 2 - lo] = False
    for p in base.tolist():
        start = max(p * p, -(-lo // p) * p)
        if start >= hi:
            continue
        s[start - lo:: p] = False
    return np.flatnonzero(s).astype(np.int64) + lo


def _pool_map(fn, args: list, jobs: int) -> list:
    if jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*args)))


def primes_between(lo: int, hi: int, jobs: int = 1) -> np.ndarray:
    """Sorted primes in ``[lo, hi)`` by a segmented sieve."""
    check_budget(hi)
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    segs = [(s, min(s + SEGMENT, hi)) for s in range(lo, hi, SEGMENT)]
    parts = _pool_map(_sieve_segment, segs, jobs)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def _cache_path(cache_dir, b: int, lam: int) -> Path:
    return Path(cache_dir) / f"primes_b{b}_l{lam}.bin"


def write_prime_cache(path, lo: int, primes: np.ndarray) -> None:
    """Magic, then little-endian u64 ``lo`` and count, then u64 deltas (first from ``lo``)."""
    deltas = np.diff(np.concatenate([[lo], primes])).astype("<u8")
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<QQ", lo, primes.size))
        fh.write(deltas.tobytes())
    os.replace(tmp, path)


def read_prime_cache(path) -> tuple[int, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(8) != CACHE_MAGIC:
            raise ValueError(f"{path}: bad magic")
        lo, count = struct.unpack("<QQ", fh.read(16))
        deltas = np.frombuffer(fh.read(), dtype="<u8")
    if deltas.size != count:
        raise ValueError(f"{path}: truncated ({deltas.size} of {count} deltas)")
    return lo, (np.cumsum(deltas.astype(np.int64)) + lo).astype(np.int64)


def prime_block(b: int, lam: int, jobs: int = 1, cache_dir=None) -> np.ndarray:
    """Sorted primes in ``[b^(lambda-1), b^lambda)``, optionally through the on-disk cache."""
    b = check_base(b)
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    lo, hi = b ** (lam - 1), b**lam
    check_budget(hi)
    if cache_dir is not None:
        path = _cache_path(cache_dir, b, lam)
        if path.exists():
            clo, ps = read_prime_cache(path)
            if clo == lo:
                return ps
        ps = primes_between(lo, hi, jobs)
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        write_prime_cache(path, lo, ps)
        return ps
    return _prime_block_mem(b, lam, jobs)


@lru_cache(maxsize=4)
def _prime_block_mem(b: int, lam: int, jobs: int) -> np.ndarray:
    ps = primes_between(b ** (lam - 1), b**lam, jobs)
    ps.setflags(write=False)
    return ps


# --- primality -----------------------------------------------------------------

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3 * 10^24 (in particular below 2^64)."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


# --- factor sieve --------------------------------------------------------------


def _factor_segment(lo: int, hi: int, full: bool):
    """Smallest prime factor and Omega on [lo, hi); with ``full`` also omega, mu, tau."""
    size = hi - lo
    base = primes_upto(math.isqrt(max(hi - 1, 1)))
    n = np.arange(lo, hi, dtype=np.int64)
    spf = np.zeros(size, dtype=np.int64)
    big = np.zeros(size, dtype=np.int8)
    smooth = np.ones(size, dtype=np.int64)
    if full:
        small = np.zeros(size, dtype=np.int8)
        mu = np.ones(size, dtype=np.int8)
        tau = np.ones(size, dtype=np.int64)
    # decreasing order so the last write is the smallest factor
    for p in base[::-1].tolist():
        start = -(-lo // p) * p
        if start >= hi:
            continue
        sl = slice(start - lo, None, p)
        spf[sl] = p
        big[sl] += 1
        smooth[sl] *= p
        if full:
            small[sl] += 1
            mu[sl] *= -1
            tau[sl] *= 2
        pk, k = p * p, 2
        while pk < hi:
            start = -(-lo // pk) * pk
            if start < hi:
                sk = slice(start - lo, None, pk)
                big[sk] += 1
                smooth[sk] *= p
                if full:
                    if k == 2:
                        mu[sk] = 0
                    tau[sk] = tau[sk] // k * (k + 1)
            pk *= p
            k += 1
    rest = np.where(n > 0, n // np.maximum(smooth, 1), 0)
    extra = rest > 1
    big[extra] += 1
    spf = np.where((spf == 0) & extra, rest, spf)
    if not full:
        return spf, big
    small[extra] += 1
    mu[extra] *= -1
    tau[extra] *= 2
    if lo <= 0 < hi:
        mu[-lo] = 0
        tau[-lo] = 0
    return spf, big, small, mu, tau


@dataclass
class FactorSieve:
    """Arithmetic functions on the integer range ``[lo, hi)`` from a smallest-prime-factor sieve."""

    lo: int
    hi: int
    spf: np.ndarray = field(repr=False)
    big_omega: np.ndarray = field(repr=False)
    small_omega: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    tau: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, lo: int, hi: int, jobs: int = 1) -> "FactorSieve":
        if lo < 0 or hi <= lo:
            raise ValueError("need 0 <= lo < hi")
        check_budget(hi)
        segs = [(s, min(s + SEGMENT, hi), True) for s in range(lo, hi, SEGMENT)]
        parts = _pool_map(_factor_segment, segs, jobs)
        cols = [np.concatenate(c) for c in zip(*parts)]
        return cls(lo, hi, *cols)

    def _ix(self, n):
        n = np.asarray(n, dtype=np.int64)
        if np.any((n < self.lo) | (n >= self.hi)):
            raise IndexError("value outside the sieved range")
        return n - self.lo

    def p_minus(self, n):
        """Smallest prime factor (0 for n < 2)."""
        return self.spf[self._ix(n)]

    def Omega(self, n):
        return self.big_omega[self._ix(n)]

    def omega(self, n):
        return self.small_omega[self._ix(n)]

    def moebius(self, n):
        return self.mu[self._ix(n)]

    def divisor_count(self, n):
        return self.tau[self._ix(n)]

    def von_mangoldt(self, n=None):
        """Lambda(n) = log p if n is a power of the prime p, else 0."""
        i = slice(None) if n is None else self._ix(n)
        w = self.small_omega[i]
        return np.where(w == 1, np.log(np.maximum(self.spf[i], 1)), 0.0)

    def is_prime(self, n):
        i = self._ix(n)
        return (self.big_omega[i] == 1) & (self.spf[i] == np.asarray(n))

    def valuation(self, n, p: int):
        m = np.array(n, dtype=np.int64, copy=True)
        v = np.zeros_like(m)
        while True:
            hit = (m % p == 0) & (m > 0)
            if not hit.any():
                return v
            v += hit
            m = np.where(hit, m // p, m)


def factor_stats(values, jobs: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """(P^-(v), Omega(v)) for arbitrary positive ``values``, sieving only the segments that
    contain some value.  P^-(1) is reported as 0."""
    v = np.asarray(values, dtype=np.int64)
    if v.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int8)
    if v.min() < 1:
        raise ValueError("values must be positive")
    check_budget(int(v.max()) + 1)
    order = np.argsort(v, kind="stable")
    sv = v[order]
    seg_id = sv // SEGMENT
    ids = np.unique(seg_id)
    segs = [(int(s) * SEGMENT, int(s) * SEGMENT + SEGMENT, False) for s in ids]
    parts = _pool_map(_factor_segment, segs, jobs)
    spf = np.empty(v.size, dtype=np.int64)
    big = np.empty(v.size, dtype=np.int8)
    bounds = np.searchsorted(seg_id, ids, side="left").tolist() + [v.size]
    for k, (s_spf, s_big) in enumerate(parts):
        a, b_ = bounds[k], bounds[k + 1]
        off = sv[a:b_] - int(ids[k]) * SEGMENT
        spf[order[a:b_]] = s_spf[off]
        big[order[a:b_]] = s_big[off]
    return spf, big


# --- arithmetic helpers ---------------------------------------------------------


def _prime_divisors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def pi_d_b(b: int, d: int) -> int:
    """gcd(d, b^2-1) * prod_{p | b} p^{v_p(d)}."""
    b = check_base(b)
    if d < 1:
        raise ValueError("d must be >= 1")
    out = math.gcd(d, b * b - 1)
    for p in _prime_divisors(b):
        while d % p == 0:
            d //= p
            out *= p
    return out


def little_g(b: int, d: int) -> Fraction:
    """Multiplicative g with g(p^nu) = p^-nu for p not dividing b(b^2-1), else 0."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return Fraction(1, d) if math.gcd(d, b * (b * b - 1)) == 1 else Fraction(0)


def mertens_V(b: int, z: float) -> float:
    """prod over primes p < z with p not dividing b(b^2-1) of (1 - 1/p)."""
    if z < 2:
        raise ValueError("z must be >= 2")
    zz = math.ceil(z)
    check_budget(zz)
    ps = primes_upto(zz - 1)
    ps = ps[ps < z]
    m = b * (b * b - 1)
    keep = np.array([m % p != 0 for p in ps.tolist()], dtype=bool)
    return float(math.exp(math.fsum(np.log1p(-1.0 / ps[keep]).tolist())))


# --- block statistics -------------------------------------------------------------


def _block_and_reverses(b: int, lam: int, jobs: int = 1, cache_dir=None):
    ps = prime_block(b, lam, jobs, cache_dir)
    return ps, reverse_array(ps, b, lam)


def _check_t(b: int, lam: int, t) -> None:
    if not b ** (lam - 1) <= t <= b**lam:
        raise ValueError(f"t must lie in [b^(lambda-1), b^lambda], got {t}")


def pi_lambda(b: int, lam: int, t, cache_dir=None) -> int:
    """Number of primes in ``[b^(lambda-1), t)``."""
    _check_t(b, lam, t)
    ps = prime_block(b, lam, cache_dir=cache_dir)
    return int(np.searchsorted(ps, t, side="left"))


def pimirror(b: int, lam: int, t, a: int, d: int, cache_dir=None) -> int:
    """Number of primes p in ``[b^(lambda-1), t)`` with R_lambda(p) = a mod d."""
    _check_t(b, lam, t)
    if d < 1:
        raise ValueError("d must be >= 1")
    ps, rs = _block_and_reverses(b, lam, cache_dir=cache_dir)
    k = int(np.searchsorted(ps, t, side="left"))
    return int(np.count_nonzero(rs[:k] % d == a % d))


def block_class(b: int, lam: int, i: int, cache_dir=None) -> tuple[np.ndarray, np.ndarray]:
    """Primes of the class ``[i b^(lambda-1), (i+1) b^(lambda-1))`` and their reverses."""
    if not 1 <= i <= b - 1:
        raise ValueError("i must lie in [1, b-1]")
    ps, rs = _block_and_reverses(b, lam, cache_dir=cache_dir)
    u = b ** (lam - 1)
    a, z = np.searchsorted(ps, [i * u, (i + 1) * u])
    return ps[a:z], rs[a:z]


def T_lambda_i(b: int, lam: int, i: int, d: int, cache_dir=None) -> int:
    _, rs = block_class(b, lam, i, cache_dir)
    return int(np.count_nonzero(rs % d == 0))


def E_lambda_i(b: int, lam: int, i: int, d: int, cache_dir=None) -> Fraction:
    """T_{lambda,i}(d) - g(d)|P_{lambda,i}|, with T forced to 0 when gcd(d, b(b^2-1)) > 1."""
    if lam < 3:
        raise ValueError("lambda must be >= 3")
    if d < 1:
        raise ValueError("d must be >= 1")
    if math.gcd(d, b * (b * b - 1)) > 1:
        return Fraction(0)
    ps, rs = block_class(b, lam, i, cache_dir)
    return Fraction(int(np.count_nonzero(rs % d == 0))) - little_g(b, d) * ps.size


def theta_i(b: int, lam: int, i: int, z, jobs: int = 1, cache_dir=None) -> int:
    """Number of p in the class i whose reverse has no prime factor below z."""
    if lam < 3:
        raise ValueError("lambda must be >= 3")
    if math.gcd(i, b) != 1:
        raise ValueError("need gcd(i, b) = 1")
    _, rs = block_class(b, lam, i, cache_dir)
    spf, _ = factor_stats(rs, jobs)
    # P^-(1) is +infinity by convention
    return int(np.count_nonzero((spf >= z) | (rs == 1)))


# --- congruence deviations ---------------------------------------------------------


def residue_deviation_sups(residues: np.ndarray, d: int) -> np.ndarray:
    """For each a mod d, the exact sup over k = 0..N of |#{i < k : r_i = a} - k/d|.

    Between hits of a the deviation decreases, so its maximum is reached right after a
    hit (or at k = 0) and its minimum right before a hit (or at k = N).
    """
    r = np.asarray(residues)
    N = r.size
    out = np.full(d, N / d)  # residues never hit: |0 - N/d| at k = N
    if N == 0:
        return out * 0
    key = r.astype(np.uint16 if d <= 65535 else np.int64)
    order = np.argsort(key, kind="stable")
    sr = key[order]
    starts = np.flatnonzero(np.concatenate([[True], sr[1:] != sr[:-1]]))
    rank = np.arange(N) - np.repeat(starts, np.diff(np.concatenate([starts, [N]])))
    j = rank + 1.0
    pos = order.astype(float)
    after = np.abs(j - (pos + 1) / d)
    before = np.abs((j - 1) - pos / d)
    m = np.maximum.reduceat(np.maximum(after, before), starts)
    totals = np.diff(np.concatenate([starts, [N]]))
    end = np.abs(totals - N / d)
    out[sr[starts].astype(np.int64)] = np.maximum(m, end)
    return out


@dataclass(frozen=True)
class CongruenceDeviation:
    d: int
    sup_t_sup_a: float
    admissible: bool
    end_deviation: float = 0.0


def _deviation_rows(b: int, rs: np.ndarray, ds: list[int]) -> list[CongruenceDeviation]:
    N = rs.size
    m = b * (b * b - 1)
    rows = []
    for d in ds:
        res = rs % d
        sups = residue_deviation_sups(res, d)
        counts = np.bincount(res, minlength=d)
        end = float(np.max(np.abs(counts - N / d)))
        rows.append(CongruenceDeviation(d, float(sups.max()), math.gcd(d, m) == 1, end))
    return rows


def bv_from_reverses(b: int, rs: np.ndarray, D: int, jobs: int = 1) -> tuple[float, list[CongruenceDeviation]]:
    ds = list(range(1, D + 1))
    k = max(1, min(jobs, len(ds)))
    chunks = [ds[i::k] for i in range(k)]
    parts = _pool_map(_deviation_rows, [(b, rs, c) for c in chunks], jobs)
    per_d = sorted((r for part in parts for r in part), key=lambda r: r.d)
    total = math.fsum(r.sup_t_sup_a for r in per_d if r.admissible)
    return total, per_d


def bv_statistic(b: int, lam: int, D: int, jobs: int = 1, cache_dir=None):
    """Sum over d <= D with gcd(d, b(b^2-1)) = 1 of the sup over t and a of
    |pi-mirror(t, a, d) - pi_lambda(t)/d|.  Non-admissible d are listed but not summed."""
    if D < 2:
        return 0.0, []
    _, rs = _block_and_reverses(b, lam, jobs, cache_dir)
    return bv_from_reverses(b, rs, D, jobs)


def relative_deviation(b: int, lam: int, d: int, cache_dir=None) -> float:
    """max over a of |pi-mirror(b^lambda, a, d) d / pi_lambda(b^lambda) - 1|."""
    _, rs = _block_and_reverses(b, lam, cache_dir=cache_dir)
    counts = np.bincount(rs % d, minlength=d)
    return float(np.max(np.abs(counts * d / rs.size - 1)))


# --- census -------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockCensus:
    b: int
    lam: int
    i: int
    size: int
    reversible: int
    omega_ok: int
    pminus_ok: int
    both: int

    def as_dict(self) -> dict:
        return dict(b=self.b, lam=self.lam, i=self.i, size=self.size, reversible=self.reversible,
                    omega_ok=self.omega_ok, pminus_ok=self.pminus_ok, both=self.both)


def census(b: int, lam: int, omega_max=math.inf, z=2, jobs: int = 1, cache_dir=None) -> list[BlockCensus]:
    """Per leading-digit class i: counts of p with R prime, Omega(R) <= omega_max,
    P^-(R) >= z, and both of the last two."""
    b = check_base(b)
    ps, rs = _block_and_reverses(b, lam, jobs, cache_dir)
    spf, big = factor_stats(rs, jobs)
    cls = ps // b ** (lam - 1)
    prime_r = (big == 1)
    om = big <= omega_max if math.isfinite(omega_max) else np.ones(rs.size, dtype=bool)
    pm = (spf >= z) | (rs == 1)
    out = []
    for i in range(1, b):
        sel = cls == i
        out.append(BlockCensus(b, lam, i, int(sel.sum()), int((prime_r & sel).sum()),
                               int((om & sel).sum()), int((pm & sel).sum()), int((om & pm & sel).sum())))
    return out


def reversible_count(b: int, lam: int, jobs: int = 1, cache_dir=None) -> int:
    return sum(c.reversible for c in census(b, lam, jobs=jobs, cache_dir=cache_dir))
