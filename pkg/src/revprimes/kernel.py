"""The normalised Dirichlet kernel K_b and the scalar functions built from it.

``K_b(x) = sin(pi b x) / (b sin(pi x))`` is the modulus-preserving form of
``(1/b) sum_{0<=h<b} e(h x)``.  Everything here is vectorised over ``x`` / ``alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .digits import check_base
from .numerics import CertifiedMax, max_periodic

# Below this distance to an integer, K_b takes its exact integer value.
SNAP = 1e-9


def dirichlet_kernel(b: int, x):
    b = check_base(b)
    a = np.asarray(x, dtype=float)
    # x = n + r exactly, |r| <= 1/2, and K_b(n + r) = (-1)^{n(b-1)} K_b(r)
    n = np.rint(a)
    r = a - n
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sin((np.pi * b) * r)
        out /= b * np.sin(np.pi * r)
    out = np.where(np.abs(r) < SNAP, 1.0, out)
    if b % 2 == 0:
        out = np.where(np.mod(n, 2.0) == 0, out, -out)
    return float(out) if a.ndim == 0 else out


@lru_cache(maxsize=None)
def _chebyshev_u(n: int) -> tuple[int, ...]:
    """Monomial coefficients of the Chebyshev polynomial U_n, lowest degree first."""
    prev, cur = [1], [0, 2]
    if n == 0:
        return tuple(prev)
    for _ in range(n - 1):
        nxt = [0] + [2 * c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return tuple(cur)


def kernel_from_cos(b: int, c):
    """K_b(x) given c = cos(pi x), using sin(b t)/sin(t) = U_{b-1}(cos t).

    Meant for small bases (the monomial form loses accuracy as b grows).
    """
    if b > 12:
        raise ValueError("monomial Chebyshev form is only used for b <= 12")
    coef = _chebyshev_u(b - 1)
    c2 = c * c
    # U_{b-1} has the parity of b-1: Horner in c^2
    sub = coef[(b - 1) % 2::2]
    acc = np.full_like(c2, float(sub[-1]))
    for k in sub[-2::-1]:
        acc *= c2
        acc += k
    if (b - 1) % 2:
        acc *= c
    acc /= b
    return acc


def abs_kernel(b: int, x):
    return np.abs(dirichlet_kernel(b, x))


def second_derivative_bound(b: int) -> float:
    """sup |K_b''| = pi^2 (b^2 - 1) / 3, attained at 0."""
    return math.pi**2 * (b * b - 1) / 3.0


def fejer(b: int, x):
    """(1/b) sum_{|h|<b} (1 - |h|/b) e(hx), which equals K_b(x)^2."""
    a = np.asarray(x, dtype=float)
    h = np.arange(1, b)
    s = 1.0 + 2.0 * np.sum((1 - h / b) * np.cos(2 * np.pi * np.multiply.outer(a, h)), axis=-1)
    return s / b


def psi(b: int, x):
    b = check_base(b)
    a = np.asarray(x, dtype=float)
    r = np.arange(1, b + 1) / b
    out = np.sum(np.abs(dirichlet_kernel(b, np.add.outer(a, r))), axis=-1)
    return float(out) if out.ndim == 0 else out


def eta(b: int) -> float:
    b = check_base(b)
    if b == 2:
        return math.log(2 + math.sqrt(2)) / (4 * math.log(2))
    return math.log(psi(b, 1 / (2 * b))) / math.log(b)


def T(b: int, kappa: float, alpha):
    """(1/b) sum_{l<b} K_b(||(alpha + l)/b|| / (b+1))^kappa."""
    b = check_base(b)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    a = np.asarray(alpha, dtype=float)
    y = np.add.outer(a, np.arange(b)) / b
    y = np.abs(y - np.rint(y))
    out = np.mean(dirichlet_kernel(b, y / (b + 1)) ** kappa, axis=-1)
    return float(out) if out.ndim == 0 else out


def T_curvature_bound(b: int, kappa: float) -> float:
    """Upper bound for -T_{b,kappa}'' valid for kappa >= 1."""
    return kappa * second_derivative_bound(b) / (b * b * (b + 1) ** 2)


def max_T(b: int, kappa: float, tol: float = 1e-10) -> CertifiedMax:
    """Certified maximum of alpha -> T(b, kappa, alpha).

    For kappa <= 1 the maximiser is (b+1)/2.  For kappa > 1 a global grid search on
    [0, 1/2] (T is 1-periodic and even) with a second-order certificate is used.
    """
    b = check_base(b)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if kappa <= 1:
        a0 = (b + 1) / 2
        return CertifiedMax(T(b, kappa, a0), a0 % 1.0, 0.0)
    return max_periodic(lambda x: T(b, kappa, x), tol=tol,
                        curvature_bound=T_curvature_bound(b, kappa), lo=0.0, hi=0.5)


def max_T_simple_bound(b: int, kappa: float) -> float:
    return 1 / b + math.sqrt(6 * (b + 1) / (math.pi * (b - 1) * kappa))


def zeta_bk(b: int, kappa: float, tol: float = 1e-10) -> float:
    return -math.log(max_T(b, kappa, tol).value) / math.log(b)


def k_at_inv_sq(b: int) -> float:
    return dirichlet_kernel(b, 1.0 / (b + 1) ** 2)


def upsilon(b: int) -> float:
    b = check_base(b)
    return -math.log(2) * math.log(k_at_inv_sq(b)) / (4 * math.log(b))


def upsilon_prime(b: int) -> float:
    return math.exp(4 * upsilon(b) / (1 - 2 * eta(b)))


@dataclass(frozen=True)
class KernelProfile:
    b: int
    eta: float
    psi_at_half_over_b: float
    k_at_inv_sq: float
    upsilon: float
    upsilon_prime: float


def kernel_profile(b: int) -> KernelProfile:
    b = check_base(b)
    return KernelProfile(b, eta(b), psi(b, 1 / (2 * b)), k_at_inv_sq(b), upsilon(b), upsilon_prime(b))
