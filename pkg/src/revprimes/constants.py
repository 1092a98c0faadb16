"""Constant pipeline: kappa_b, u_b, iota_b, xi_0(b), Omega_b and friends."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from decimal import ROUND_DOWN, Decimal
from functools import lru_cache

import numpy as np

from . import kernel
from .digits import check_base
from .numerics import MarginWarning, QuadratureConfig, ThresholdResult, integrate, smallest_true

# Certified slack required at the kappa threshold and at the Omega ceilings.
THRESHOLD_MARGIN = 1e-9
GUARD_BAND = 1e-9


def smallest_prime_factor(n: int) -> int:
    if n < 2:
        raise ValueError("n must be >= 2")
    p = 2
    while p * p <= n:
        if n % p == 0:
            return p
        p += 1
    return n


@lru_cache(maxsize=None)
def _max_T1(b: int) -> float:
    return kernel.max_T(b, 1).value


def kappa_search(b: int, tol: float = 1e-10) -> ThresholdResult:
    """Least integer kappa with max_T(b,1) * b * max_T(b,kappa) < 1.

    The candidate passes only if the product is below 1 even at the upper end of the
    certified interval.  Slacks are reported as signed distances to 1.
    """
    b = check_base(b)
    m1 = _max_T1(b)

    def pred(k):
        cm = kernel.max_T(b, k, tol)
        lo = m1 * b * cm.value
        hi = m1 * b * cm.upper
        if lo < 1 <= hi:
            warnings.warn(f"b={b}, kappa={k}: certified interval [{lo!r}, {hi!r}] straddles 1",
                          MarginWarning, stacklevel=3)
        return hi < 1, (1 - hi) if hi < 1 else (lo - 1)

    return smallest_true(pred, 1, warn_margin=THRESHOLD_MARGIN)


def kappa_b(b: int, tol: float = 1e-10) -> int:
    return kappa_search(b, tol).value


def kappa_upper_bound(b: int) -> int:
    z1 = kernel.zeta_bk(b, 1)
    return math.floor(6 * b * b * (b + 1) / (math.pi * (b - 1) * (b**z1 - 1) ** 2)) + 1


def u_iota(b: int, kappa: int | None = None) -> tuple[float, float]:
    b = check_base(b)
    if kappa is None:
        kappa = kappa_b(b)
    u = (1 - 2 * kernel.eta(b)) / 2 * math.log(smallest_prime_factor(b)) / math.log(b)
    return u, u / (1 + 2 * (kappa + 1) * u)


def xi0_terms(eta: float, u: float, iota: float) -> tuple[float, float, float, float]:
    return (
        (1 - (1 + 2 * eta) / 2) / (2 * (3 + 4 * eta)),
        u / (3 * (3 - 4 * u)),
        iota / (3 * (1 + 6 * iota)),
        1 / 33,
    )


def xi0(b: int, kappa: int | None = None) -> float:
    u, io = u_iota(b, kappa)
    return min(xi0_terms(kernel.eta(b), u, io))


def truncate_decimals(x: float, places: int = 8) -> str:
    """Truncate (not round) the decimal expansion of ``x``."""
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(x)).quantize(q, rounding=ROUND_DOWN))


def _guarded(x: float, what: str) -> None:
    if abs(x - round(x)) < GUARD_BAND:
        warnings.warn(f"{what}: {x!r} is within {GUARD_BAND} of an integer", MarginWarning, stacklevel=3)


def omega_b(b: int, xi: float | None = None) -> int:
    xi = xi0(b) if xi is None else xi
    _guarded(1 / xi, f"Omega_{b}")
    return 1 + math.ceil(1 / xi)


def omega_tilde(b: int, xi: float | None = None) -> int:
    xi = xi0(b) if xi is None else xi
    _guarded(2 / xi, f"Omega~_{b}")
    return math.floor(2 / xi)


def lambda_R(R: int) -> float:
    if R < 2:
        raise ValueError("R must be >= 2")
    return R + math.log(0.75 * (1 + 3.0 ** (-R))) / math.log(3)


@dataclass(frozen=True)
class SieveWeightConstant:
    R: int
    lambda_R: float


def sieve_weight_constant(R: int) -> SieveWeightConstant:
    return SieveWeightConstant(R, lambda_R(R))


def t_infty_1(cfg: QuadratureConfig | None = None) -> float:
    return integrate(np.sinc, -0.5, 0.5, cfg).value


def asymptotic_coefficient(t: float | None = None) -> float:
    t = t_infty_1() if t is None else t
    return 36 / (math.pi * (1 / t - 1) ** 2)


@dataclass(frozen=True)
class ConstantsRecord:
    b: int
    eta: float
    kappa_b: int
    zeta_1: float
    zeta_kappa: float
    eps_b: float
    u_b: float
    iota_b: float
    xi0: float
    omega_b: int
    omega_tilde: int
    slack_below: float = field(default=math.nan)
    slack_at: float = field(default=math.nan)

    @property
    def xi0_truncated(self) -> str:
        return truncate_decimals(self.xi0, 8)


def constants_record(b: int, tol: float = 1e-10) -> ConstantsRecord:
    b = check_base(b)
    eta = kernel.eta(b)
    search = kappa_search(b, tol)
    k = search.value
    z1 = kernel.zeta_bk(b, 1)
    zk = kernel.zeta_bk(b, k, tol)
    # b^{-eps} = b^{-zeta_1} b^{1-zeta_k}
    eps = z1 + zk - 1
    u, io = u_iota(b, k)
    xi = min(xi0_terms(eta, u, io))
    return ConstantsRecord(b, eta, k, z1, zk, eps, u, io, xi, omega_b(b, xi), omega_tilde(b, xi),
                           search.witness_below, search.witness_at)


def constants_table(b_min: int = 2, b_max: int = 10, tol: float = 1e-10) -> list[ConstantsRecord]:
    if not 2 <= b_min <= b_max:
        raise ValueError("need 2 <= b_min <= b_max")
    return [constants_record(b, tol) for b in range(b_min, b_max + 1)]
