"""Exponential sums over reversed digits: von Mangoldt sums, Vaughan's decomposition,
type I / type II evaluators, carry-propagation sets, and small inequality checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Callable, Sequence, Union

import numpy as np

from .digits import check_base, frac_mul, reverse_array
from .fourier import F_grid, RationalAngle
from .sieve import FactorSieve, check_budget

TYPE_CAP = 10**7
VAUGHAN_CAP = 10**6
EXPANSION_CAP = 300

Angle = Union[RationalAngle, float]
Weight = Union[str, Sequence[complex], np.ndarray]


class CapExceeded(ValueError):
    """An evaluator was asked for a range beyond its exhaustive-scan cap."""


def _phase(angle: Angle, r: np.ndarray) -> np.ndarray:
    """Fractional part of alpha * r, exact for rational angles."""
    if isinstance(angle, RationalAngle):
        h, d = angle.h % angle.d, angle.d
        if h * int(r.max(initial=0)) < 2**62:
            return (h * r % d) / d
        return np.array([(h * int(v)) % d for v in r.tolist()], dtype=float) / d
    return frac_mul(float(angle), r)


def _e(x: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * x)


def _csum(z: np.ndarray) -> complex:
    z = np.asarray(z)
    return complex(math.fsum(z.real.tolist()), math.fsum(z.imag.tolist()))


@dataclass(frozen=True)
class ExpSumSpec:
    b: int
    lam: int
    angle: Angle
    t: int
    weight: Weight = "vonmangoldt"

    def __post_init__(self):
        check_base(self.b)
        if not self.b ** (self.lam - 1) <= self.t <= self.b**self.lam:
            raise ValueError("t must lie in [b^(lambda-1), b^lambda]")


def _weights(weight: Weight, lo: int, hi: int) -> np.ndarray:
    if isinstance(weight, str):
        if weight == "unit":
            return np.ones(hi - lo)
        if weight in ("vonmangoldt", "lambda"):
            return FactorSieve.build(lo, hi).von_mangoldt()
        raise ValueError(f"unknown weight {weight!r}")
    z = np.asarray(weight)
    if z.shape != (hi - lo,):
        raise ValueError(f"custom weights need length {hi - lo}")
    if np.any(np.abs(z) > 1 + 1e-12):
        raise ValueError("custom weights must satisfy |z_n| <= 1")
    return z


def lambda_exp_sum(spec: ExpSumSpec) -> complex:
    """sum_{b^(lambda-1) <= n < t} w(n) e(alpha R_lambda(n))."""
    lo = spec.b ** (spec.lam - 1)
    check_budget(spec.t)
    if spec.t == lo:
        return 0j
    n = np.arange(lo, spec.t, dtype=np.int64)
    w = _weights(spec.weight, lo, spec.t)
    r = reverse_array(n, spec.b, spec.lam)
    return _csum(w * _e(_phase(spec.angle, r)))


def lambda_exp_sum_sup(b: int, lam: int, angle: Angle, weight: Weight = "vonmangoldt") -> float:
    """sup over t of |sum_{b^(lambda-1) <= n < t} w(n) e(alpha R(n))| (exact over integer t)."""
    lo, hi = b ** (lam - 1), b**lam
    check_budget(hi)
    n = np.arange(lo, hi, dtype=np.int64)
    z = _weights(weight, lo, hi) * _e(_phase(angle, reverse_array(n, b, lam)))
    return float(np.max(np.abs(np.concatenate([[0], np.cumsum(z)]))))


# --- Vaughan decomposition ------------------------------------------------------------


@dataclass(frozen=True)
class VaughanParts:
    lhs: complex
    S1: complex
    S2: complex
    S3: complex

    @property
    def rhs(self) -> complex:
        return self.S1 - self.S2 + self.S3


def vaughan_parts(u: float, f: Callable[[np.ndarray], np.ndarray], y: float, x: float) -> VaughanParts:
    """Both sides of sum_{y<=n<x} Lambda(n) f(n) = S1 - S2 + S3 built term by term."""
    if not 1 < u < y <= x:
        raise ValueError("need 1 < u < y <= x")
    if x > VAUGHAN_CAP:
        raise CapExceeded(f"x = {x} exceeds {VAUGHAN_CAP}")
    X = math.ceil(x)  # integers j < x are j <= X - 1
    Y = math.ceil(y)
    U = math.floor(u)
    fs = FactorSieve.build(0, max(X, 2))
    mu = fs.mu.astype(float)
    lam = fs.von_mangoldt()
    j = np.arange(X, dtype=np.int64)
    fv = np.zeros(X, dtype=complex)
    if X > 1:
        fv[1:] = np.asarray(f(j[1:]), dtype=complex)

    def mult_range(k: int) -> np.ndarray:
        """Indices n >= 1 with y <= k n < x."""
        return np.arange(max(1, -(-Y // k)), (X - 1) // k + 1, dtype=np.int64)

    lhs = _csum(lam[Y:X] * fv[Y:X]) if X > Y else 0j

    s1 = []
    for m in range(1, U + 1):
        if mu[m] == 0:
            continue
        n = mult_range(m)
        s1.append(mu[m] * _csum(np.log(n) * fv[m * n]))
    S1 = _csum(np.array(s1 or [0j]))

    s2 = []
    for m1 in range(1, U + 1):
        if mu[m1] == 0:
            continue
        for m2 in range(2, U + 1):
            if lam[m2] == 0:
                continue
            k = m1 * m2
            n = mult_range(k)
            if n.size:
                s2.append(mu[m1] * lam[m2] * _csum(fv[k * n]))
    S2 = _csum(np.array(s2 or [0j]))

    # W(k) = sum_{n1 | k, n1 > u} Lambda(n1)
    W = np.zeros(X)
    for q in range(U + 1, X):
        if lam[q] != 0:
            W[q::q] += lam[q]
    s3 = []
    for m in range(U + 1, X):
        if mu[m] == 0:
            continue
        kmin = max(U + 1, -(-Y // m))
        kmax = (X - 1) // m
        if kmax < kmin:
            if m * (U + 1) >= X:
                break
            continue
        k = np.arange(kmin, kmax + 1, dtype=np.int64)
        s3.append(mu[m] * _csum(W[k] * fv[m * k]))
    S3 = _csum(np.array(s3 or [0j]))
    return VaughanParts(lhs, S1, S2, S3)


def vaughan_identity_check(b: int, lam: int, u: float, f: Callable | None, y: float, x: float):
    """(lhs, rhs) of the decomposition; ``f`` defaults to n -> e(R_lambda(n)/3)."""
    check_base(b)
    if f is None:
        def f(n):
            return _e(reverse_array(n % b**lam, b, lam) % 3 / 3)
    p = vaughan_parts(u, f, y, x)
    return p.lhs, p.rhs


# --- type I / type II sums --------------------------------------------------------------


def _pairs(b: int, lam: int, mu: int, lo: int, hi: int, chunk: int = 1 << 22):
    """Yield (m, n, k = m n) arrays for m in I_mu and lo <= m n < hi, grouped by m in
    increasing order with n increasing inside each group."""
    if mu < 1:
        raise ValueError("mu must be >= 1")
    if mu > lam:
        raise ValueError("mu must be <= lambda")
    ms = np.arange(b ** (mu - 1), b**mu, dtype=np.int64)
    n0 = -(-lo // ms)
    n1 = -(-hi // ms)  # exclusive
    cnt = np.maximum(n1 - n0, 0)
    start = 0
    while start < ms.size:
        acc = np.cumsum(cnt[start:])
        stop = start + max(1, int(np.searchsorted(acc, chunk, side="right")))
        c = cnt[start:stop]
        tot = int(c.sum())
        if tot:
            m = np.repeat(ms[start:stop], c)
            offs = np.arange(tot) - np.repeat(np.cumsum(c) - c, c)
            n = np.repeat(n0[start:stop], c) + offs
            yield m, n, m * n, c
        start = stop


def type_I_sum(b: int, lam: int, mu: int, angle: Angle) -> float:
    """S_I = sup_t sum_{m in I_mu} |sum_{b^(lambda-1) <= m n < t} e(alpha R_lambda(m n))|.

    Each inner sum is a step function of t jumping at t = m n + 1, so the sup over t is
    taken over every integer t in [b^(lambda-1), b^lambda] by scattering the jump of each
    |inner sum| to its breakpoint and accumulating.
    """
    b = check_base(b)
    lo, hi = b ** (lam - 1), b**lam
    if hi > TYPE_CAP:
        raise CapExceeded(f"b^lambda = {hi} exceeds {TYPE_CAP}")
    delta = np.zeros(hi - lo)
    for m, n, k, c in _pairs(b, lam, mu, lo, hi):
        z = _e(_phase(angle, reverse_array(k, b, lam)))
        s = np.cumsum(z)
        # restart the running sum at each group boundary
        first = np.cumsum(c[c > 0]) - c[c > 0]
        base = np.repeat(np.concatenate([[0], s[first[1:] - 1]]), c[c > 0])
        a = np.abs(s - base)
        prev = np.concatenate([[0.0], a[:-1]])
        prev[first] = 0.0
        delta += np.bincount(k - lo, weights=a - prev, minlength=hi - lo)
    run = np.cumsum(delta)
    return float(max(0.0, run.max(initial=0.0)))


def type_II_sum(b: int, lam: int, mu: int, angle: Angle, z: Callable | np.ndarray,
                J: tuple[int, int] | None = None) -> float:
    """sum_{m in I_mu} |sum_{n : m n in J} z_n e(alpha R_lambda(m n))| for one fixed J and z.

    ``J = (lo, hi)`` is the half-open range [lo, hi) inside I_lambda (default all of it).
    ``z`` is either a callable on integer arrays or an array indexed by n.
    """
    b = check_base(b)
    L0, L1 = b ** (lam - 1), b**lam
    if L1 > TYPE_CAP:
        raise CapExceeded(f"b^lambda = {L1} exceeds {TYPE_CAP}")
    lo, hi = J if J is not None else (L0, L1)
    if not L0 <= lo < hi <= L1:
        raise ValueError("J must be a non-empty subrange of I_lambda")
    total = []
    for m, n, k, c in _pairs(b, lam, mu, lo, hi):
        w = np.asarray(z(n) if callable(z) else np.asarray(z)[n])
        if np.any(np.abs(w) > 1 + 1e-12):
            raise ValueError("weights must satisfy |z_n| <= 1")
        v = w * _e(_phase(angle, reverse_array(k, b, lam)))
        cc = c[c > 0]
        starts = np.cumsum(cc) - cc
        re = np.add.reduceat(v.real, starts)
        im = np.add.reduceat(v.imag, starts)
        total.append(np.hypot(re, im))
    return math.fsum(np.concatenate(total).tolist()) if total else 0.0


def unit_weights(n: np.ndarray) -> np.ndarray:
    return np.ones(np.shape(n))


def moebius_weights(hi: int) -> np.ndarray:
    """mu(n) for 0 <= n < hi, indexable by n."""
    return FactorSieve.build(0, hi).mu.astype(float)


def random_unimodular(hi: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return _e(rng.random(hi))


# --- carry propagation -----------------------------------------------------------------


@dataclass(frozen=True)
class CarrySet:
    count: int
    sample: tuple[tuple[int, int], ...]
    pairs: int


def _carry_check(b, mu, nu, rho, rho_p):
    if min(mu, nu, rho, rho_p) < 1:
        raise ValueError("mu, nu, rho, rho' must be >= 1")
    if rho + rho_p >= nu:
        raise ValueError("need rho + rho' < nu")
    if b ** (mu + nu + 1) > TYPE_CAP:
        raise CapExceeded(f"b^(mu+nu+1) exceeds {TYPE_CAP}")


def _carry_grid(b, mu, nu):
    m = np.arange(b ** (mu - 1), b**mu, dtype=np.int64)
    n = np.arange(b ** (nu - 1), b ** (nu + 1), dtype=np.int64)
    return np.repeat(m, n.size), np.tile(n, m.size)


def carry_mask(b: int, mu: int, nu: int, rho: int, rho_p: int, scan: bool = False):
    """Membership of every (m, n) in I_mu x [b^(nu-1), b^(nu+1)).

    With ``scan`` every r in [1, b^rho) is tried.  Otherwise the first r that carries
    into digit mu+rho+rho' is used: since m r grows by m < b^(mu+rho+rho') per step, the
    block of digits j in [mu+rho+rho', mu+nu) changes for some r iff adding m(b^rho - 1)
    carries past position mu+rho+rho'.
    """
    b = check_base(b)
    _carry_check(b, mu, nu, rho, rho_p)
    m, n = _carry_grid(b, mu, nu)
    x = m * n
    B = b ** (mu + rho + rho_p)
    top = b ** (nu - rho - rho_p)
    if not scan:
        return m, n, (x % B) + m * (b**rho - 1) >= B
    block = (x // B) % top
    hit = np.zeros(x.size, dtype=bool)
    for r in range(1, b**rho):
        hit |= ((x + m * r) // B) % top != block
    return m, n, hit


def carry_set(b: int, mu: int, nu: int, rho: int, rho_p: int, sample: int = 10,
              scan: bool = False) -> CarrySet:
    m, n, hit = carry_mask(b, mu, nu, rho, rho_p, scan)
    idx = np.flatnonzero(hit)[:sample]
    return CarrySet(int(hit.sum()), tuple((int(m[i]), int(n[i])) for i in idx), int(m.size))


def carry_run_holds(b: int, mu: int, nu: int, rho: int, rho_p: int) -> bool:
    """Every member has digit b-1 at all positions mu+rho .. mu+rho+rho'-1 of m n."""
    m, n, hit = carry_mask(b, mu, nu, rho, rho_p)
    x = (m * n)[hit] // b ** (mu + rho)
    return bool(np.all(x % b**rho_p == b**rho_p - 1))


# --- Fourier expansion of the reversal difference ----------------------------------------


def fourier_expansion_check(b: int, lam: int, mu2: int, angle: Angle, m: int, n: int, r: int):
    """(lhs, rhs) for the expansion of e(beta (R_mu2(m(n+r)) - R_mu2(mn))), beta = alpha b^(lambda-mu2),
    as a double sum over (h2, h3) of F_mu2(beta, h2/B) conj(F_mu2(beta, (h2-h3)/B)) e((h3 m n + h2 m r)/B)."""
    b = check_base(b)
    if not 1 <= mu2 <= lam:
        raise ValueError("need 1 <= mu2 <= lambda")
    B = b**mu2
    if B > EXPANSION_CAP:
        raise CapExceeded(f"b^mu2 = {B} exceeds {EXPANSION_CAP}")
    k1 = np.array([(m * n) % B, (m * (n + r)) % B], dtype=np.int64)
    R = reverse_array(k1, b, mu2)
    diff = int(R[1]) - int(R[0])
    if isinstance(angle, RationalAngle):
        num = (angle.h * b ** (lam - mu2)) % angle.d
        beta = num / angle.d
        frac = (num * diff) % angle.d / angle.d
    else:
        beta = float(frac_mul(float(angle), b ** (lam - mu2)))
        frac = float(frac_mul(beta, diff))
    lhs = complex(np.exp(2j * np.pi * frac))
    F = F_grid(b, mu2, beta)
    h = np.arange(B, dtype=np.int64)
    h2, h3 = np.meshgrid(h, h, indexing="ij")
    ph = ((h3 * ((m * n) % B) + h2 * ((m * r) % B)) % B) / B
    terms = F[h2] * np.conj(F[(h2 - h3) % B]) * _e(ph)
    return lhs, _csum(terms.ravel())


# --- inequality testbed -------------------------------------------------------------------


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    holds: bool
    lhs: float
    rhs: float

    def __bool__(self):
        return self.holds


_REL = 1e-12


def _le(name, lhs, rhs, strict=False):
    ok = lhs < rhs if strict else lhs <= rhs * (1 + _REL) + _REL
    return InequalityCheck(name, bool(ok), float(lhs), float(rhs))


def van_der_corput(z, k: int, R: int) -> InequalityCheck:
    z = np.asarray(z, dtype=complex)
    N = z.size
    if k < 1 or R < 1:
        raise ValueError("k and R must be >= 1")
    lhs = abs(_csum(z)) ** 2
    acc = _csum(np.abs(z) ** 2)
    for r in range(1, R):
        s = k * r
        if s >= N:
            break
        acc += 2 * (1 - r / R) * _csum(z[s:] * np.conj(z[:N - s]))
    return _le("van der Corput", lhs, (N + k * R - k) / R * acc.real)


def sum_inverse_sinus(a: int, m: int, shift: float, M: int, N: int, U: float) -> InequalityCheck:
    if m < 1 or N < 1 or not U > 0:
        raise ValueError("need m >= 1, N >= 1, U > 0")
    n = np.arange(M + 1, M + N + 1, dtype=np.int64)
    arg = ((a * n) % m + shift) / m
    s = np.abs(np.sin(np.pi * arg))
    with np.errstate(divide="ignore"):
        lhs = math.fsum(np.minimum(U, 1 / s).tolist())
    delta = math.gcd(a, m)
    y = shift / delta
    sd = abs(math.sin(math.pi * delta * abs(y - round(y)) / m))
    first = U if sd == 0 else min(U, 1 / sd)
    rhs = math.ceil(delta * N / m) * (first + 2 * m / (math.pi * delta) * math.log(2 * m / delta))
    return _le("inverse sine sum", lhs, rhs)


def gcd_sum(m: int, A: float) -> InequalityCheck:
    if m < 1 or A < 1:
        raise ValueError("need m >= 1 and A >= 1")
    lhs = sum(math.gcd(a, m) for a in range(1, math.floor(A) + 1)) / A
    tau = sum(1 for d in range(1, m + 1) if m % d == 0)
    return _le("gcd sum", lhs, tau)


def _factor(n: int) -> dict[int, int]:
    out, p = {}, 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _divisors(fac: dict[int, int]) -> list[int]:
    ds = [1]
    for p, e in fac.items():
        ds = [d * p**k for d in ds for k in range(e + 1)]
    return ds


def sigma_bounds(b: int, lam: int, zexp: float) -> list[InequalityCheck]:
    """Divisor-sum bounds for b^lambda; the sign of ``zexp`` selects which ones apply.

    The strict inequalities are decided in decimal arithmetic: their gap is about
    p^(z(lambda+1)), far below double precision for large lambda.
    """
    b = check_base(b)
    fb = _factor(b)
    w = len(fb)
    divs = _divisors({p: e * lam for p, e in fb.items()})
    tau = len(divs)
    tau_b = len(_divisors(fb))
    out = [_le("(1+lambda)^omega(b) <= tau(b^lambda)", (1 + lam) ** w, tau),
           _le("tau(b^lambda) <= tau(b) lambda^omega(b)", tau, tau_b * lam**w)]
    if zexp == 0:
        return out
    digits = 40 + math.ceil(abs(zexp) * (lam + 1) * math.log10(b))
    with localcontext() as ctx:
        ctx.prec = digits
        z = Decimal(zexp)
        pz = {p: Decimal(p) ** z for p in fb}
        # (d^z, tau(d)) over d | b^lambda, built prime by prime
        terms = [(Decimal(1), 1)]
        for p, e in fb.items():
            pows = [pz[p] ** k for k in range(e * lam + 1)]
            terms = [(v * pows[k], t * (k + 1)) for v, t in terms for k in range(e * lam + 1)]
        sig = sum(v for v, _ in terms)
        if zexp < 0:
            prod = math.prod((1 / (1 - pz[p]) for p in fb), start=Decimal(1))
            out.append(_strict("sigma_z(b^lambda) < prod 1/(1-p^z)", sig, prod))
            tsum = sum(v * t for v, t in terms)
            out.append(_strict("sum tau(d) d^z < prod 1/(1-p^z)^2", tsum, prod * prod))
        else:
            bz = math.prod((pz[p] ** (e * lam) for p, e in fb.items()), start=Decimal(1))
            rhs = bz * math.prod((1 / (1 - 1 / pz[p]) for p in fb), start=Decimal(1))
            out.append(_strict("sigma_z(b^lambda) < b^(z lambda) prod 1/(1-p^-z)", sig, rhs))
    return out


def _strict(name, lhs: Decimal, rhs: Decimal) -> InequalityCheck:
    return InequalityCheck(name, bool(lhs < rhs), float(lhs), float(rhs))


# --- sweeps ------------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    params: dict
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs else math.inf


def type_I_shape(b: int, lam: int, mu: int, d: int) -> float:
    from .kernel import eta, upsilon, upsilon_prime
    beta1 = mu / lam
    return (b ** (beta1 * (1 + 2 * eta(b)) * lam)
            + b ** ((1 - upsilon(b) / math.log(max(d, upsilon_prime(b)))) * lam))


def type_I_sweep(bs, lams, mus, ds, h: int = 1) -> list[SweepRow]:
    rows = []
    for b in bs:
        for lam in lams:
            for mu in mus:
                for d in ds:
                    v = type_I_sum(b, lam, mu, RationalAngle(h, d)) if mu <= lam else math.nan
                    rows.append(SweepRow(dict(b=b, lam=lam, mu=mu, d=d), v, type_I_shape(b, lam, mu, d)))
    return rows


def lambda_sum_sweep(b: int, lams, h: int, d: int, weight: Weight = "vonmangoldt") -> list[SweepRow]:
    """|sum over I_lambda| against b^lambda for each lambda."""
    rows = []
    for lam in lams:
        s = lambda_exp_sum(ExpSumSpec(b, lam, RationalAngle(h, d), b**lam, weight))
        rows.append(SweepRow(dict(b=b, lam=lam, h=h, d=d), abs(s), float(b**lam)))
    return rows


def carry_sweep(b: int, mu: int, nu: int) -> list[SweepRow]:
    """Carry-set sizes at maximal rho' against b^(mu+nu-rho')."""
    rows = []
    for rho in range(1, nu - 1):
        rho_p = nu - rho - 1
        c = carry_set(b, mu, nu, rho, rho_p, sample=0)
        rows.append(SweepRow(dict(b=b, mu=mu, nu=nu, rho=rho, rho_p=rho_p), c.count,
                             float(b ** (mu + nu - rho_p))))
    return rows
