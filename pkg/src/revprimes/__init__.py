"""Primes with reversed digits: kernels, Fourier bounds, constants, sieves and exponential sums."""

from .constants import ConstantsRecord, constants_record, constants_table, kappa_b, omega_b, xi0
from .digits import expand, is_palindrome, reverse, torus_norm, unit_exp
from .fourier import FourierPoint, RationalAngle
from .kernel import dirichlet_kernel, eta, max_T
from .sieve import BlockCensus, census, prime_block

__version__ = "0.1.0"
