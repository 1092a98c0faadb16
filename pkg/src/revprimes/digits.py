"""Base-b digit expansions, the reversal map and torus arithmetic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Integer values must fit in 128 unsigned bits.
MAX_BITS = 128
# Vectorised paths run on int64.
_I64_LIMIT = 2**63


def check_base(b: int) -> int:
    if not isinstance(b, (int, np.integer)) or isinstance(b, bool):
        raise TypeError(f"base must be an integer, got {b!r}")
    if b < 2:
        raise ValueError(f"base must be >= 2, got {b}")
    return int(b)


def check_length(b: int, lam: int) -> int:
    if lam < 0:
        raise ValueError(f"length must be >= 0, got {lam}")
    if b ** lam >= 2**MAX_BITS:
        raise OverflowError(f"{b}^{lam} does not fit in {MAX_BITS} bits")
    return int(lam)


@dataclass(frozen=True)
class DigitExpansion:
    """The ``length`` lowest base-``base`` digits of an integer, least significant first."""

    base: int
    length: int
    digits: tuple[int, ...]

    def __post_init__(self):
        check_base(self.base)
        check_length(self.base, self.length)
        if len(self.digits) != self.length:
            raise ValueError("digit count does not match length")
        if any(not 0 <= e < self.base for e in self.digits):
            raise ValueError("digit out of range")

    @property
    def value(self) -> int:
        v = 0
        for e in reversed(self.digits):
            v = v * self.base + e
        return v

    def reversed(self) -> "DigitExpansion":
        return DigitExpansion(self.base, self.length, self.digits[::-1])


def expand(n: int, b: int, lam: int) -> DigitExpansion:
    b = check_base(b)
    check_length(b, lam)
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = []
    for _ in range(lam):
        n, e = divmod(n, b)
        out.append(e)
    return DigitExpansion(b, lam, tuple(out))


def reverse(n: int, b: int, lam: int) -> int:
    """Reverse the ``lam`` lowest base-``b`` digits of ``n``."""
    b = check_base(b)
    check_length(b, lam)
    if n < 0:
        raise ValueError("n must be nonnegative")
    r = 0
    for _ in range(lam):
        n, e = divmod(n, b)
        r = r * b + e
    return r


def digit_length(n: int, b: int) -> int:
    b = check_base(b)
    if n < 1:
        raise ValueError("n must be positive")
    k = 0
    while n:
        n //= b
        k += 1
    return k


def is_palindrome(n: int, b: int) -> bool:
    return reverse(n, b, digit_length(n, b)) == n


def digit_at(n: int, b: int, j: int) -> int:
    return (n // b**j) % b


def reverse_array(ns, b: int, lam: int) -> np.ndarray:
    """Vectorised reversal on an int64 array (requires b^lam < 2^63)."""
    b = check_base(b)
    check_length(b, lam)
    if b ** lam >= _I64_LIMIT:
        raise OverflowError("vectorised reversal needs b^lam < 2^63")
    n = np.array(ns, dtype=np.int64, copy=True)
    r = np.zeros_like(n)
    for _ in range(lam):
        n, e = np.divmod(n, b)
        r *= b
        r += e
    return r


def digits_array(ns, b: int, lam: int) -> np.ndarray:
    """Matrix of digits, shape (len(ns), lam), column j holding epsilon_j."""
    b = check_base(b)
    n = np.array(ns, dtype=np.int64, copy=True)
    out = np.empty(n.shape + (lam,), dtype=np.int64)
    for j in range(lam):
        n, out[..., j] = np.divmod(n, b)
    return out


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")


def torus_norm(x):
    """Distance to the nearest integer; values within 1e-15 of an integer map to 0."""
    _check_finite(x)
    a = np.asarray(x, dtype=float)
    d = np.abs(a - np.rint(a))
    d = np.where(d < 1e-15, 0.0, d)
    return float(d) if d.ndim == 0 else d


def unit_exp(x):
    """exp(2 pi i x), reduced modulo 1 first."""
    _check_finite(x)
    a = np.asarray(x, dtype=float)
    f = a - np.floor(a)
    z = np.exp(2j * np.pi * f)
    return complex(z) if z.ndim == 0 else z


def unit_exp_rational(num, den: int):
    """exp(2 pi i num/den) for integer numerators, reducing exactly before dividing."""
    r = np.mod(np.asarray(num, dtype=np.int64), den)
    z = np.exp(2j * np.pi * (r / den))
    return complex(z) if z.ndim == 0 else z


_LIMB = 24
_FAST_LIMIT = 1 << 29


def frac_mul(x, m):
    """Fractional part of ``x * m`` for real ``x`` and integer ``m``.

    ``|x|`` is reduced modulo 1 and cut into 24-bit chunks; each chunk times each 24-bit
    limb of ``m`` is reduced modulo 1 in integer arithmetic, so the result is accurate
    to a few ulps even when ``x * m`` is far beyond 2^53.
    """
    if isinstance(m, int) and abs(m) >= 1 << 62:
        # m = q 2^62 + r; scaling by 2^62 and taking the fractional part are both exact
        q, r = divmod(m, 1 << 62)
        xs = np.asarray(x, dtype=float) * 2.0**62
        out = np.mod(frac_mul(xs - np.floor(xs), q) + frac_mul(x, r), 1.0)
        return float(out) if np.ndim(out) == 0 else out
    xa = np.asarray(x, dtype=float)
    ma = np.asarray(m, dtype=np.int64)
    # work with |x| and |m| so the reduction modulo 1 stays exact
    neg = (ma < 0) ^ (xa < 0)
    any_neg = bool(np.any(neg))
    if np.any(xa < 0) or np.any(ma < 0):
        xa = np.abs(xa)
        ma = np.abs(ma)
    xr = xa - np.floor(xa)
    if ma.size == 0 or int(ma.max()) < _FAST_LIMIT:
        # a 24-bit chunk of x times m < 2^29 is exact in binary64
        x1 = np.floor(xr * 2.0**_LIMB)
        x1 *= 2.0**-_LIMB
        p1 = x1 * ma
        p1 -= np.floor(p1)
        xr = xr - x1
        xr *= ma
        out = p1 + xr
    else:
        out = np.zeros(np.broadcast(xr, ma).shape)
        rest = xr
        limbs = [(ma >> (_LIMB * j)) & ((1 << _LIMB) - 1) for j in range(3)]
        for i in range(1, 4):
            k = np.floor(rest * 2.0 ** (_LIMB * i))
            rest = rest - k / 2.0 ** (_LIMB * i)
            ki = k.astype(np.int64) & ((1 << _LIMB) - 1)
            for j, mj in enumerate(limbs):
                shift = _LIMB * i - _LIMB * j
                if shift <= 0:
                    continue
                prod = ki * mj  # < 2^48
                if shift < 63:
                    prod = prod & ((1 << shift) - 1)
                out = out + prod / 2.0**shift
        out = out % 1.0 + rest * ma
    out = out - np.floor(out)
    if any_neg:
        out = np.where(neg & (out > 0), 1.0 - out, out)
    return float(out) if out.ndim == 0 else out
