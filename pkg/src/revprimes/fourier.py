"""The exponential sum F_lambda(alpha, theta) over digit reversals and its companions.

``F_lambda(alpha, theta) = b^-lambda sum_{n < b^lambda} e(alpha R_lambda(n) - theta n)``.
Its modulus factors as a product of kernel values, which is what every production
routine here evaluates; ``F_direct`` is the brute-force oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernel
from .digits import check_base, check_length, frac_mul, reverse_array
from .numerics import QuadratureError, QuadResult, integrate_pieces

DIRECT_CAP = 10**7
RESIDUE_CAP = 10**5


class RangeTooLarge(ValueError):
    """Raised when a brute-force evaluation would exceed its size cap."""


@dataclass(frozen=True)
class FourierPoint:
    b: int
    lam: int
    alpha: float
    theta: float

    def __post_init__(self):
        check_base(self.b)
        check_length(self.b, self.lam)


@dataclass(frozen=True)
class RationalAngle:
    """h/d in lowest terms with 0 <= h < d."""

    h: int
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("denominator must be >= 1")
        h, d = self.h % self.d, self.d
        g = math.gcd(h, d)
        object.__setattr__(self, "h", h // g)
        object.__setattr__(self, "d", d // g)

    @property
    def value(self) -> float:
        return self.h / self.d

    def admissible(self, b: int) -> bool:
        """Membership condition gcd(d, b(b^2-1)) = 1."""
        return math.gcd(self.d, b * (b * b - 1)) == 1


def _split(x: float) -> tuple[float, float]:
    # x = hi + lo with hi on a 2^-24 grid, so hi * n is exact for n < 2^29
    hi = math.floor(x * 2.0**24) / 2.0**24
    return hi, x - hi


def F_direct(p: FourierPoint) -> complex:
    """Brute-force sum over all n < b^lambda (oracle only)."""
    N = p.b**p.lam
    if N > DIRECT_CAP:
        raise RangeTooLarge(f"b^lambda = {N} exceeds the oracle cap {DIRECT_CAP}")
    ah, al = _split(p.alpha)
    th, tl = _split(p.theta)
    total = 0.0 + 0.0j
    step = 1 << 20
    for s in range(0, N, step):
        n = np.arange(s, min(s + step, N), dtype=np.int64)
        r = reverse_array(n, p.b, p.lam)
        ph = (ah * r) % 1.0 - (th * n) % 1.0 + (al * r - tl * n)
        total += np.sum(np.exp(2j * np.pi * ph))
    return complex(total / N)


def F_grid(b: int, lam: int, alpha: float) -> np.ndarray:
    """F_lambda(alpha, h/b^lambda) for all 0 <= h < b^lambda, via one FFT."""
    N = b**lam
    if N > DIRECT_CAP:
        raise RangeTooLarge(f"b^lambda = {N} exceeds the oracle cap {DIRECT_CAP}")
    ah, al = _split(alpha)
    r = reverse_array(np.arange(N, dtype=np.int64), b, lam)
    v = np.exp(2j * np.pi * ((ah * r) % 1.0 + al * r))
    return np.fft.fft(v) / N


def F_abs_product(b: int, lam: int, alpha, theta):
    """prod_{j<lambda} |K_b(alpha b^(lambda-1-j) - theta b^j)|, vectorised in alpha/theta."""
    b = check_base(b)
    a = np.asarray(alpha, dtype=float)
    t = np.asarray(theta, dtype=float)
    out = np.ones(np.broadcast(a, t).shape)
    for j in range(lam):
        y = frac_mul(a, b ** (lam - 1 - j)) - frac_mul(t, b**j)
        out = out * np.abs(kernel.dirichlet_kernel(b, y))
    return float(out) if out.ndim == 0 else out


def F_abs(p: FourierPoint) -> float:
    return F_abs_product(p.b, p.lam, p.alpha, p.theta)


def G(b: int, lam: int, alpha):
    """prod_{j<lambda} K_b(||alpha b^j|| / (b+1)); strictly positive."""
    b = check_base(b)
    a = np.asarray(alpha, dtype=float)
    out = np.ones(a.shape)
    for j in range(lam):
        y = frac_mul(a, b**j)
        y = np.minimum(y, 1.0 - y)
        out = out * kernel.dirichlet_kernel(b, y / (b + 1))
    return float(out) if out.ndim == 0 else out


def G_uniform_bound(b: int, lam: int, h: int, d: int) -> float:
    """K_b((b+1)^-2)^(lambda log 2 / (2 log d) - 1), an upper bound for G_lambda(h/d)."""
    b = check_base(b)
    if d < 2 or lam < 1:
        raise ValueError("need d >= 2 and lambda >= 1")
    if (pow(b, lam - 1, d) * h) % d == 0:
        raise ValueError(f"precondition fails: b^(lambda-1) h = 0 mod d for b={b}, lambda={lam}, h={h}, d={d}")
    return kernel.k_at_inv_sq(b) ** (lam * math.log(2) / (2 * math.log(d)) - 1)


def G_uniform_bound_simple(b: int, lam: int, d: int) -> float:
    """(pi/2) b^(-2 Upsilon_b lambda / log d)."""
    return math.pi / 2 * b ** (-2 * kernel.upsilon(b) * lam / math.log(d))


def G_block_bound(b: int, lam: int, alpha: float) -> float:
    """K_b((b+1)^-2)^floor(lambda/J), with J from the smallest ||alpha b^j||, j < lambda."""
    fr = [frac_mul(alpha, b**j) for j in range(lam)]
    a0 = min(min(f, 1 - f) for f in fr)
    if a0 <= 0:
        raise ValueError("alpha b^j is an integer for some j < lambda")
    J = 1 + math.floor(math.log(b / ((b + 1) * a0)) / math.log(b))
    return kernel.k_at_inv_sq(b) ** (lam // J)


def pointwise_bound(b: int, lam: int, alpha, theta, u: float | None = None):
    """min(G^(1/2)(alpha(b^2-1)), G^(1/2)(theta(b^2-1))) of length lambda-1, or the
    interpolated G^(u/2) G^((1-u)/2) form when ``u`` is given."""
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    ga = G(b, lam - 1, frac_mul(alpha, b * b - 1))
    gt = G(b, lam - 1, frac_mul(theta, b * b - 1))
    if u is None:
        return np.sqrt(np.minimum(ga, gt))
    if not 0 <= u <= 1:
        raise ValueError("u must lie in [0, 1]")
    return ga ** (u / 2) * gt ** ((1 - u) / 2)


def small_denominator_bounds(b: int, lam: int, h: int, d: int) -> tuple[float, float]:
    """The two bounds K^(lambda log2/(4 log d) - 3/4) and (pi/2)^(3/4) b^(-Upsilon lambda/log d)
    for |F_lambda(h/d, theta)|."""
    if lam < 2 or d < 2:
        raise ValueError("need lambda >= 2 and d >= 2")
    if (pow(b, lam - 2, d) * (b * b - 1) * h) % d == 0:
        raise ValueError("precondition fails: b^(lambda-2)(b^2-1)h = 0 mod d")
    k = kernel.k_at_inv_sq(b) ** (lam * math.log(2) / (4 * math.log(d)) - 0.75)
    return k, (math.pi / 2) ** 0.75 * b ** (-kernel.upsilon(b) * lam / math.log(d))


def l2_residue_sum(b: int, lam: int, alpha: float, t: float, cap: int = RESIDUE_CAP) -> float:
    """sum_{h < b^lambda} |F_lambda(alpha, t + h/b^lambda)|^2 (equals 1)."""
    N = b**lam
    if N > cap:
        raise RangeTooLarge(f"b^lambda = {N} exceeds {cap}")
    h = np.arange(N)
    v = F_abs_product(b, lam, alpha, t + h / N)
    return float(np.sum(np.square(v)))


def check_well_spaced(points: Sequence[float], delta: float, slack: float = 1e-12) -> None:
    x = np.sort(np.asarray(points, dtype=float) % 1.0)
    if x.size < 2:
        return
    gaps = np.diff(np.concatenate([x, [x[0] + 1.0]]))
    if gaps.min() < delta - slack:
        i = int(np.argmin(gaps))
        raise ValueError(f"points not {delta}-well spaced: gap {gaps[i]:.3e} after {x[i]!r}")


def well_spaced_l2(b: int, lam: int, alpha: float, points: Sequence[float]) -> float:
    check_well_spaced(points, float(b) ** -lam)
    return float(np.sum(np.square(F_abs_product(b, lam, alpha, np.asarray(points, dtype=float)))))


def _kinks_theta(b: int, lam: int, alpha: float) -> np.ndarray:
    """Zeros in [0,1] of every factor theta -> K_b(alpha b^(lambda-1-j) - theta b^j)."""
    parts = [np.array([0.0, 1.0])]
    for j in range(lam):
        c = frac_mul(alpha, b ** (lam - 1 - j))
        step = 1.0 / b ** (j + 1)
        off = (c / b**j) % step
        parts.append(off + step * np.arange(b ** (j + 1)))
    e = np.unique(np.concatenate(parts))
    return e[(e >= 0) & (e <= 1)]


def _refined(edges: np.ndarray, k: int) -> np.ndarray:
    if k == 1:
        return edges
    h = np.diff(edges)
    inner = edges[:-1, None] + h[:, None] * (np.arange(k) / k)[None, :]
    return np.concatenate([inner.ravel(), edges[-1:]])


def _integrate_adaptive(f: Callable, edges: np.ndarray, tol: float, order: int = 5,
                        max_refine: int = 6) -> QuadResult:
    last = None
    for r in range(max_refine + 1):
        try:
            return integrate_pieces(f, _refined(edges, 2**r), order=order, tol=tol)
        except QuadratureError as exc:
            last = exc
    raise last


def _abs_F_in_theta(b: int, lam: int, alpha: float) -> Callable:
    """theta -> |F_lambda(alpha, theta)| specialised for dense quadrature in theta.

    Uses K_b(x) = U_{b-1}(cos pi x)/b, one cosine per factor and no singular points.
    """
    if b > 12:
        return lambda t: F_abs_product(b, lam, alpha, t)
    cs = [frac_mul(alpha, b ** (lam - 1 - j)) for j in range(lam)]
    bj = [float(b**j) for j in range(lam)]

    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        y = np.empty_like(t)
        for c, m in zip(cs, bj):
            np.multiply(t, m, out=y)
            y -= c
            y *= np.pi
            np.cos(y, out=y)
            out *= np.abs(kernel.kernel_from_cos(b, y))
        return out

    return f


def l1_norm_theta(b: int, lam: int, alpha: float, tol: float = 1e-10) -> QuadResult:
    """int_0^1 |F_lambda(alpha, theta)| d theta, integrating piecewise between the kinks."""
    b = check_base(b)
    if not 0 <= lam <= 20:
        raise ValueError("lambda must lie in [0, 20]")
    if lam == 0:
        return QuadResult(1.0, 0.0)
    edges = _kinks_theta(b, lam, alpha)
    return _integrate_adaptive(_abs_F_in_theta(b, lam, alpha), edges, tol)


def l1_bound(b: int, lam: int) -> float:
    return float(b) ** ((kernel.eta(b) - 1) * lam)


def g_moment(b: int, lam: int, lam_p: int, kappa: float, density: Callable, density_l1: float,
             tol: float = 1e-10, density_breaks: Sequence[float] = (0.0,)) -> tuple[float, float]:
    """int_0^1 G_lambda(alpha)^kappa Phi(alpha b^lambda') d alpha and the bound
    max_T(b, kappa)^lambda ||Phi||_1.

    ``density`` is 1-periodic; ``density_breaks`` lists its non-smooth points in [0, 1).
    """
    if lam_p < lam:
        raise ValueError("need lambda' >= lambda")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    parts = [np.array([0.0, 1.0])]
    if lam > 0:
        parts.append(np.arange(2 * b ** (lam - 1) + 1) / (2 * b ** (lam - 1)))
    B = b**lam_p
    for s in density_breaks:
        parts.append((s % 1.0 + np.arange(B)) / B)
    edges = np.unique(np.clip(np.concatenate(parts), 0, 1))

    def f(x):
        return G(b, lam, x) ** kappa * np.asarray(density(frac_mul(x, B)), dtype=float)

    val = _integrate_adaptive(f, edges, tol).value
    bound = kernel.max_T(b, kappa).value ** lam * density_l1
    return val, bound


def _fejer_power(b: int, kappa: int) -> np.ndarray:
    """Coefficients c_h, |h| <= kappa(b-1), of (K_b^2)^kappa; index h + kappa(b-1)."""
    h = np.arange(-(b - 1), b)
    base = (1 - np.abs(h) / b) / b
    c = np.array([1.0])
    for _ in range(kappa):
        c = np.convolve(c, base)
    return c


def _half_sums(freqs: Sequence[int], c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    H = (c.size - 1) // 2
    sums = np.array([0], dtype=np.int64)
    w = np.array([1.0])
    hs = np.arange(-H, H + 1, dtype=np.int64)
    for N in freqs:
        sums = (sums[:, None] + hs[None, :] * N).ravel()
        w = (w[:, None] * c[None, :]).ravel()
        order = np.argsort(sums, kind="stable")
        sums, w = sums[order], w[order]
        u, start = np.unique(sums, return_index=True)
        w = np.add.reduceat(w, start)
        sums = u
    return sums, w


def palindrome_frequencies(b: int, lam: int) -> list[int]:
    return [b ** (j + 1) + b ** (2 * lam + 1 - j) for j in range(lam)]


def palindrome_moment_exact(b: int, lam: int, kappa: int) -> float:
    """Constant term of prod_j (K_b^2)^kappa(alpha N_j): the exact integral for integer kappa."""
    c = _fejer_power(b, kappa)
    N = palindrome_frequencies(b, lam)
    A, wa = _half_sums(N[: lam // 2], c)
    B, wb = _half_sums(N[lam // 2:], c)
    # pair s_A + s_B = 0
    negB = -B[::-1]
    wbr = wb[::-1]
    idx = np.searchsorted(negB, A)
    idx = np.minimum(idx, negB.size - 1)
    hit = negB[idx] == A
    return float(np.sum(wa[hit] * wbr[idx[hit]]))


def palindrome_integrand(b: int, lam: int, kappa: float, alpha):
    out = 1.0
    for N in palindrome_frequencies(b, lam):
        out = out * np.abs(kernel.dirichlet_kernel(b, frac_mul(alpha, N))) ** (2 * kappa)
    return out


def palindrome_moment_quad(b: int, lam: int, kappa: float, tol: float = 1e-10,
                           max_pieces: int = 5 * 10**6) -> float:
    freqs = palindrome_frequencies(b, lam)
    total = sum(b * N for N in freqs)
    if total > max_pieces:
        raise RangeTooLarge(f"{total} quadrature pieces needed")
    parts = [np.arange(b * N + 1) / (b * N) for N in freqs]
    edges = np.unique(np.concatenate(parts))
    return _integrate_adaptive(lambda x: palindrome_integrand(b, lam, kappa, x), edges, tol).value


def palindrome_moment(b: int, lam: int, kappa: float, tol: float = 1e-10) -> tuple[float, float]:
    """(int_0^1 prod_{j<lambda} |K_b(alpha b^(j+1) + alpha b^(2 lambda+1-j))|^(2 kappa),
    max_T(b, kappa/2)^(2 lambda - 2))."""
    b = check_base(b)
    if not 1 <= lam <= 12:
        raise ValueError("lambda must lie in [1, 12]")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if float(kappa).is_integer():
        value = palindrome_moment_exact(b, lam, int(kappa))
    else:
        value = palindrome_moment_quad(b, lam, kappa, tol)
    bound = kernel.max_T(b, kappa / 2).value ** (2 * lam - 2)
    return value, bound


def palindrome_simple_bound(b: int, lam: int, kappa: float) -> float:
    return (1 / b + math.sqrt(12 * (b + 1) / (math.pi * (b - 1) * kappa))) ** (2 * lam - 2)


def incomplete_sum(b: int, lam: int, alpha: float, theta: float, x: float) -> complex:
    """sum_{0 <= l < x} e(alpha R_lambda(l) - theta l), by brute force."""
    n = np.arange(int(math.ceil(x)), dtype=np.int64)
    r = reverse_array(n, b, lam)
    ah, al = _split(alpha)
    th, tl = _split(theta)
    ph = (ah * r) % 1.0 - (th * n) % 1.0 + (al * r - tl * n)
    return complex(np.sum(np.exp(2j * np.pi * ph)))


def incomplete_sum_bound(b: int, lam: int, alpha: float, theta: float, x: float) -> float:
    """(b-1) sum_{0 <= lambda' <= log x / log b} b^lambda' |F_lambda'(alpha b^(lambda-lambda'), theta)|."""
    top = 0
    while b ** (top + 1) <= x:
        top += 1
    s = 0.0
    for lp in range(top + 1):
        s += b**lp * F_abs_product(b, lp, frac_mul(alpha, b ** (lam - lp)), theta)
    return (b - 1) * s


def modular_l1_sides(b: int, lam: int, alpha: float, a: int, d: int, delta: int) -> tuple[float, float]:
    """Both sides of the bound on sum_{h = a mod d b^delta} |F_lambda(alpha, h/b^lambda)|."""
    if not 0 <= delta <= lam or b ** (lam - delta) % d:
        raise ValueError("need 0 <= delta <= lambda and d | b^(lambda-delta)")
    if math.gcd(d, b) >= b:
        raise ValueError("need gcd(d, b) < b")
    d1 = 1
    while b**d1 <= d:
        d1 += 1
    N = b**lam
    M = d * b**delta
    h = np.arange(a % M, N, M)
    lhs = float(np.sum(F_abs_product(b, lam, alpha, h / N)))
    eta = kernel.eta(b)
    g = G(b, d1 - 1, frac_mul(frac_mul(alpha, b**delta), b * b - 1))
    rhs = ((b + math.pi / 2) * b ** (eta * (lam - delta)) / d**eta
           * F_abs_product(b, delta, alpha, a / b**delta) * math.sqrt(g))
    return lhs, rhs


def continuity_sides(b: int, lam: int, alpha: float, t1: float, t2: float) -> tuple[float, float]:
    """(| |F|^2(t1) - |F|^2(t2) |, (2 pi / 3) b^lambda ||t1 - t2||)."""
    f1 = F_abs_product(b, lam, alpha, t1) ** 2
    f2 = F_abs_product(b, lam, alpha, t2) ** 2
    d = abs(t1 - t2) % 1.0
    return abs(f1 - f2), 2 * math.pi / 3 * b**lam * min(d, 1 - d)
