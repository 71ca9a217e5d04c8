"""Independent reference computations used by the tests.

Nothing here imports the package's numerical paths: sums are done term by term
with exact factorials (or mpmath), and the CTMC is solved densely.
"""

import math

import mpmath
import numpy as np


def mmn_idle_direct(rho, n):
    s = sum(rho**k / math.factorial(k) for k in range(n))
    return 1.0 / (s + rho**n / math.factorial(n) / (1 - rho / n))


def mmn_delay_direct(lam, mu, n):
    rho = lam / mu
    p0 = mmn_idle_direct(rho, n)
    return (rho + rho ** (n + 1) / math.factorial(n) / n * p0 / (1 - rho / n) ** 2) / lam


def mmn_delay_mp(lam, mu, n, dps=50):
    with mpmath.workdps(dps):
        lam, mu = mpmath.mpf(lam), mpmath.mpf(mu)
        rho = lam / mu
        s = mpmath.fsum(rho**k / mpmath.factorial(k) for k in range(n))
        tail = rho**n / mpmath.factorial(n) / (1 - rho / n)
        p0 = 1 / (s + tail)
        return float((rho + rho ** (n + 1) / mpmath.factorial(n) / n * p0 / (1 - rho / n) ** 2) / lam)


def mmn_pmf_birth_death(lam, mu, n, k_max):
    """Stationary law from the detailed-balance recursion pi_{k+1} = pi_k lam / (mu min(k+1, n))."""
    p = [1.0]
    for k in range(k_max):
        p.append(p[-1] * lam / (mu * min(k + 1, n)))
    p = np.array(p)
    return p / p.sum()


def erlang_c_direct(rho, n):
    tail = rho**n / math.factorial(n) * n / (n - rho)
    return tail / (sum(rho**k / math.factorial(k) for k in range(n)) + tail)


def dense_ctmc(n, lam1, mu1, lam2, mu2, i_max, j_max):
    """Dense generator on the reflecting truncation and its stationary vector via SVD null space."""
    states = [(i, j) for i in range(i_max + 1) for j in range(j_max + 1)]
    index = {s: k for k, s in enumerate(states)}
    q = np.zeros((len(states), len(states)))
    for (i, j), k in index.items():
        moves = []
        if j < j_max:
            moves.append(((i, j + 1), lam2))
        if i < i_max:
            moves.append(((i + 1, j), lam1))
        if j > 0:
            moves.append(((i, j - 1), mu2 * min(j, max(n - i, 0))))
        if i > 0:
            moves.append(((i - 1, j), mu1 * min(i, n)))
        for s, r in moves:
            if r > 0:
                q[k, index[s]] += r
                q[k, k] -= r
    _, _, vt = np.linalg.svd(q.T)
    pi = np.abs(vt[-1])
    pi /= pi.sum()
    return pi.reshape(i_max + 1, j_max + 1), q


def brute_argmin(f, lo, hi, points):
    grid = np.linspace(lo, hi, points)
    vals = f(grid)
    k = int(np.argmin(vals))
    return grid[k], vals[k], grid[1] - grid[0] if points > 1 else 0.0
