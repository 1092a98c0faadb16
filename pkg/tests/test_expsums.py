import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revprimes import expsums as E
from revprimes.digits import reverse_array
from revprimes.fourier import RationalAngle
from oracles import factorize, mangoldt, moebius, rev


def ee(x):
    return cmath.exp(2j * math.pi * x)


# --- von Mangoldt sums ----------------------------------------------------------------

def test_lambda_sum_examples():
    s = E.lambda_exp_sum(E.ExpSumSpec(3, 5, RationalAngle(0, 7), 200, "unit"))
    assert s == 200 - 81
    s = E.lambda_exp_sum(E.ExpSumSpec(2, 6, RationalAngle(1, 3), 64))
    want = sum(mangoldt(n) * ee(rev(n, 2, 6) / 3) for n in range(32, 64))  # [DERIVED]
    assert abs(s - want) < 1e-12
    assert E.lambda_exp_sum(E.ExpSumSpec(2, 6, RationalAngle(1, 3), 32)) == 0


@given(st.sampled_from([(2, 8), (3, 5), (10, 3), (7, 3)]), st.integers(0, 30), st.integers(1, 30), st.data())
@settings(max_examples=40)
def test_lambda_sum_vs_oracle(bl, h, d, data):
    b, lam = bl
    t = data.draw(st.integers(b ** (lam - 1), b**lam))
    s = E.lambda_exp_sum(E.ExpSumSpec(b, lam, RationalAngle(h, d), t))
    want = sum(mangoldt(n) * ee(h * rev(n, b, lam) % d / d) for n in range(b ** (lam - 1), t))
    assert abs(s - want) < 1e-9
    assert abs(s) <= sum(mangoldt(n) for n in range(b ** (lam - 1), t)) + 1e-9


def test_lambda_sum_float_angle_and_custom_weights():
    b, lam = 3, 5
    lo, hi = 81, 243
    z = np.exp(1j * np.arange(hi - lo))
    s = E.lambda_exp_sum(E.ExpSumSpec(b, lam, 0.1234, hi, z))
    want = sum(z[n - lo] * ee(0.1234 * rev(n, b, lam)) for n in range(lo, hi))
    assert abs(s - want) < 1e-10
    with pytest.raises(ValueError):
        E.lambda_exp_sum(E.ExpSumSpec(b, lam, 0.1, hi, 2 * z))
    with pytest.raises(ValueError):
        E.ExpSumSpec(b, lam, 0.1, 10)


def test_lambda_sum_sup():
    b, lam, ang = 2, 7, RationalAngle(2, 5)
    want = max(abs(sum(mangoldt(n) * ee(2 * rev(n, b, lam) % 5 / 5) for n in range(64, t)))
               for t in range(64, 129))
    assert E.lambda_exp_sum_sup(b, lam, ang) == pytest.approx(want, abs=1e-10)


def test_sweep_non_admissible_limit():
    # 3 | b^2 - 1 for b = 2, so the normalized sum tends to a constant
    rows = E.lambda_sum_sweep(2, range(12, 21), 1, 3)
    for r in rows:
        assert abs(r.ratio - 0.25) < 0.005


def test_sweep_admissible_decreases():
    rows = E.lambda_sum_sweep(2, range(10, 21), 1, 5)
    ratios = [r.ratio for r in rows]
    assert ratios[-1] < ratios[2]
    slope = np.polyfit(np.arange(10, 21), np.log(ratios), 1)[0]
    assert slope < 0


# --- Vaughan decomposition ---------------------------------------------------------------

def test_vaughan_trivial_f():
    p = E.vaughan_parts(3.5, np.ones_like, 20, 5000)
    lhs, rhs = p.lhs, p.rhs
    psi = sum(mangoldt(n) for n in range(20, 5000))
    assert lhs == pytest.approx(psi, abs=1e-9)
    assert abs(lhs - rhs) < 1e-9 * 5000


def test_vaughan_example_reversal():
    lhs, rhs = E.vaughan_identity_check(10, 4, 5, None, 200, 10**4)
    want = sum(mangoldt(n) * ee(rev(n % 10**4, 10, 4) % 3 / 3) for n in range(200, 10**4))
    assert abs(lhs - want) < 1e-8
    assert abs(lhs - rhs) < 1e-9 * (10**4 - 200)


def test_vaughan_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        x = float(rng.integers(1000, 10**5))
        u = float(rng.uniform(1.5, 30))
        y = float(rng.uniform(u**3 + 1, x)) if u**3 + 1 < x else x
        if not u < y:
            continue
        beta = float(rng.random())
        b = int(rng.integers(2, 11))
        lam = 1 + int(math.log(x) / math.log(b))

        def f(n, b=b, lam=lam, beta=beta):
            return np.exp(2j * np.pi * beta * reverse_array(n % b**lam, b, lam))

        p = E.vaughan_parts(u, f, y, x)
        assert abs(p.lhs - p.rhs) <= 1e-9 * (x - y) + 1e-12


def test_vaughan_parts_against_naive_small():
    u, y, x = 4.0, 70, 600
    f = lambda n: np.exp(0.37j * n)  # noqa: E731
    p = E.vaughan_parts(u, f, y, x)
    S1 = sum(moebius(m) * math.log(n) * cmath.exp(0.37j * m * n)
             for m in range(1, 5) for n in range(1, 600) if y <= m * n < x)
    S2 = sum(moebius(m1) * mangoldt(m2) * cmath.exp(0.37j * m1 * m2 * n)
             for m1 in range(1, 5) for m2 in range(1, 5) for n in range(1, 600) if y <= m1 * m2 * n < x)
    assert abs(p.S1 - S1) < 1e-9
    assert abs(p.S2 - S2) < 1e-9


def test_vaughan_rejects():
    with pytest.raises(ValueError):
        E.vaughan_parts(5, np.ones_like, 4, 100)
    with pytest.raises(E.CapExceeded):
        E.vaughan_parts(5, np.ones_like, 200, 2 * 10**6)


# --- type I / type II ------------------------------------------------------------------------

def brute_type_I(b, lam, mu, h, d):
    lo, hi = b ** (lam - 1), b**lam
    ms = range(b ** (mu - 1), b**mu)
    best = 0.0
    for t in range(lo, hi + 1):
        tot = 0.0
        for m in ms:
            s = sum(ee(h * rev(m * n, b, lam) % d / d) for n in range(-(-lo // m), -(-t // m)))
            tot += abs(s)
        best = max(best, tot)
    return best


@pytest.mark.parametrize("b,lam,mu,h,d", [(2, 6, 2, 1, 5), (3, 4, 1, 2, 7), (2, 7, 3, 1, 7), (5, 3, 1, 1, 3)])
def test_type_I_vs_brute(b, lam, mu, h, d):
    assert E.type_I_sum(b, lam, mu, RationalAngle(h, d)) == pytest.approx(brute_type_I(b, lam, mu, h, d), abs=1e-9)


def test_type_I_examples():
    assert E.type_I_sum(2, 6, 2, RationalAngle(1, 5)) == pytest.approx(3.618, abs=1e-3)  # [DERIVED]
    b, lam, mu = 3, 6, 2
    lo, hi = b ** (lam - 1), b**lam
    want = sum(-(-hi // m) - (-(-lo // m)) for m in range(b ** (mu - 1), b**mu))
    assert E.type_I_sum(b, lam, mu, RationalAngle(0, 1)) == want
    with pytest.raises(ValueError):
        E.type_I_sum(2, 6, 0, RationalAngle(1, 5))
    with pytest.raises(E.CapExceeded):
        E.type_I_sum(10, 8, 2, RationalAngle(1, 7))


def test_type_I_medium_vs_brute():
    # b = 2, lambda = 10: the example size, full scan over t
    b, lam, mu, h, d = 2, 10, 2, 1, 5
    assert E.type_I_sum(b, lam, mu, RationalAngle(h, d)) == pytest.approx(brute_type_I(b, lam, mu, h, d), abs=1e-9)


def test_type_I_sweep_report():
    rows = E.type_I_sweep([2, 3], [8, 10], [2, 3], [7, 11])
    assert all(r.rhs > 0 and r.lhs >= 0 for r in rows)
    C = max(r.ratio for r in rows)
    assert math.isfinite(C)


def brute_type_II(b, lam, mu, h, d, z, J):
    lo, hi = J
    tot = 0.0
    for m in range(b ** (mu - 1), b**mu):
        s = sum(z[n] * ee(h * rev(m * n, b, lam) % d / d) for n in range(-(-lo // m), -(-hi // m)))
        tot += abs(s)
    return tot


def test_type_II_examples():
    b, lam, mu = 2, 12, 5
    N = b**lam
    mob = E.moebius_weights(N)
    assert mob[:11].tolist() == [moebius(n) if n else 0 for n in range(11)]
    got = E.type_II_sum(b, lam, mu, RationalAngle(1, 7), mob)
    assert got == pytest.approx(brute_type_II(b, lam, mu, 1, 7, mob, (N // 2, N)), abs=1e-9)  # [DERIVED]
    assert E.type_II_sum(b, lam, mu, RationalAngle(1, 7), np.zeros(N)) == 0
    lo, hi = N // 2, N
    want = sum(-(-hi // m) - (-(-lo // m)) for m in range(b ** (mu - 1), b**mu))
    assert E.type_II_sum(b, lam, mu, RationalAngle(0, 1), E.unit_weights) == pytest.approx(want)


@given(st.sampled_from([(2, 9, 3), (3, 6, 2), (10, 3, 1), (5, 4, 2)]), st.integers(1, 12), st.integers(0, 99),
       st.data())
@settings(max_examples=25)
def test_type_II_random(bmu, d, seed, data):
    b, lam, mu = bmu
    L0, L1 = b ** (lam - 1), b**lam
    lo = data.draw(st.integers(L0, L1 - 1))
    hi = data.draw(st.integers(lo + 1, L1))
    z = E.random_unimodular(L1, seed)
    got = E.type_II_sum(b, lam, mu, RationalAngle(1, d), z, (lo, hi))
    assert got == pytest.approx(brute_type_II(b, lam, mu, 1, d, z, (lo, hi)), abs=1e-9)


def test_type_II_rejects():
    with pytest.raises(ValueError):
        E.type_II_sum(2, 8, 2, RationalAngle(1, 3), 2 * np.ones(256))
    with pytest.raises(ValueError):
        E.type_II_sum(2, 8, 2, RationalAngle(1, 3), np.ones(256), (10, 20))


# --- carry sets ------------------------------------------------------------------------------

def digit(x, b, j):
    return (x // b**j) % b


def brute_carry(b, mu, nu, rho, rho_p):
    out = []
    for m in range(b ** (mu - 1), b**mu):
        for n in range(b ** (nu - 1), b ** (nu + 1)):
            hit = any(digit(m * n + m * r, b, j) != digit(m * n, b, j)
                      for r in range(1, b**rho) for j in range(mu + rho + rho_p, mu + nu))
            if hit:
                out.append((m, n))
    return out


def test_carry_example():
    c = E.carry_set(2, 2, 5, 1, 2)
    want = brute_carry(2, 2, 5, 1, 2)  # [DERIVED]
    assert c.count == len(want) == 8
    assert list(c.sample) == want[:10]


@pytest.mark.parametrize("b,mu,nu,rho,rho_p", [(2, 2, 5, 1, 2), (2, 3, 6, 2, 1), (3, 2, 4, 1, 2), (10, 1, 3, 1, 1),
                                                (5, 1, 4, 2, 1), (2, 1, 7, 3, 3)])
def test_carry_fast_matches_literal(b, mu, nu, rho, rho_p):
    fast = E.carry_mask(b, mu, nu, rho, rho_p)[2]
    scan = E.carry_mask(b, mu, nu, rho, rho_p, scan=True)[2]
    assert np.array_equal(fast, scan)
    if b ** (mu + nu + 1) <= 2 * 10**4:
        assert E.carry_set(b, mu, nu, rho, rho_p, sample=10**6).sample == tuple(brute_carry(b, mu, nu, rho, rho_p))


def carry_cases(cap=10**6):
    out = []
    for b in range(2, 11):
        for total in range(2, 20):
            if b ** (total + 1) > cap:
                break
            for mu in range(1, total):
                nu = total - mu
                for rho in range(1, nu):
                    for rho_p in range(1, nu - rho):
                        out.append((b, mu, nu, rho, rho_p))
    return out


def test_carry_run_full_enumeration():
    cases = carry_cases()
    assert len(cases) > 100
    for case in cases:
        assert E.carry_run_holds(*case), case


def test_carry_sweep_bounded():
    for b, mu, nu in [(2, 2, 8), (3, 2, 6), (10, 1, 4)]:
        rows = E.carry_sweep(b, mu, nu)
        assert rows and all(r.ratio <= 2 * b for r in rows)


def test_carry_rejects():
    with pytest.raises(ValueError):
        E.carry_set(2, 2, 3, 1, 2)
    with pytest.raises(E.CapExceeded):
        E.carry_set(10, 3, 5, 1, 1)


# --- Fourier expansion identity ---------------------------------------------------------------

def test_fourier_expansion_examples():
    lhs, rhs = E.fourier_expansion_check(2, 8, 4, RationalAngle(1, 5), 3, 17, 2)
    assert abs(lhs - rhs) < 1e-9  # [DERIVED]
    assert abs(abs(lhs) - 1) < 1e-15
    lhs, rhs = E.fourier_expansion_check(3, 6, 3, 0.377, 5, 40, 0)
    assert lhs == 1 and abs(rhs - 1) < 1e-9


def test_fourier_expansion_random():
    rng = np.random.default_rng(7)
    done = 0
    while done < 50:
        b = int(rng.integers(2, 11))
        mu2 = int(rng.integers(1, 9))
        if b**mu2 > E.EXPANSION_CAP:
            continue
        lam = mu2 + int(rng.integers(0, 6))
        angle = RationalAngle(int(rng.integers(0, 97)), int(rng.integers(1, 97))) if done % 2 else float(rng.random())
        m, n, r = (int(v) for v in rng.integers(1, 10**4, size=3))
        lhs, rhs = E.fourier_expansion_check(b, lam, mu2, angle, m, n, r)
        assert abs(lhs - rhs) < 1e-9, (b, lam, mu2, angle, m, n, r)
        done += 1


def test_fourier_expansion_direct_lhs():
    b, lam, mu2, m, n, r = 3, 7, 3, 11, 50, 4
    B = b**mu2
    beta = (2 * b ** (lam - mu2)) / 13
    want = ee(beta * (rev((m * (n + r)) % B, b, mu2) - rev((m * n) % B, b, mu2)))
    lhs, _ = E.fourier_expansion_check(b, lam, mu2, RationalAngle(2, 13), m, n, r)
    assert abs(lhs - want) < 1e-12


def test_fourier_expansion_cap():
    with pytest.raises(E.CapExceeded):
        E.fourier_expansion_check(10, 5, 3, 0.1, 1, 2, 3)


# --- inequality testbed --------------------------------------------------------------------------

def test_testbed_examples():
    z = np.array([1, 1j, -1, 0.5])
    c = E.van_der_corput(z, 1, 1)
    assert c and c.lhs == pytest.approx(abs(z.sum()) ** 2) and c.rhs == pytest.approx(4 * np.sum(np.abs(z) ** 2))
    g = E.gcd_sum(6, 4)
    assert g and g.lhs == 2 and g.rhs == 4  # [DERIVED]
    checks = E.sigma_bounds(2, 10, 0.5)
    assert all(checks)
    assert (checks[0].lhs, checks[0].rhs) == (11, 11)  # [DERIVED]
    assert (checks[1].lhs, checks[1].rhs) == (11, 20)


def test_testbed_randomized():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        N = int(rng.integers(1, 60))
        z = rng.normal(size=N) + 1j * rng.normal(size=N)
        assert E.van_der_corput(z, int(rng.integers(1, 6)), int(rng.integers(1, 12)))
    for _ in range(1000):
        m = int(rng.integers(1, 80))
        a = int(rng.integers(-200, 200))
        c = E.sum_inverse_sinus(a, m, float(rng.normal() * 3), int(rng.integers(-100, 100)),
                                int(rng.integers(1, 300)), float(rng.uniform(0.5, 1e3)))
        assert c, (c, a, m)
    for _ in range(1000):
        assert E.gcd_sum(int(rng.integers(1, 2000)), float(rng.uniform(1, 3000)))
    for _ in range(1000):
        b = int(rng.integers(2, 100))
        lam = int(rng.integers(1, 12))
        zexp = float(rng.uniform(-3, 3))
        assert all(E.sigma_bounds(b, lam, zexp))


def test_sigma_bounds_tau_exact():
    for b in range(2, 40):
        for lam in range(1, 6):
            tau = math.prod(e * lam + 1 for e in factorize(b).values())
            checks = E.sigma_bounds(b, lam, 0.0)
            assert checks[0].rhs == tau
