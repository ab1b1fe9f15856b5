"""Independent reference computations used by the tests.

Nothing here imports the engine modules that produce the quantity being checked.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction

import mpmath
import numpy as np

mpmath.mp.prec = 256


def golden_pair() -> dict[str, mpmath.mpf]:
    """Coefficient a of s in rho(s) for nu = 1: (-1 + sqrt5)/2 for '+', (-1 - sqrt5)/2 for '-'."""
    r5 = mpmath.sqrt(5)
    return {"+": (-1 + r5) / 2, "-": (-1 - r5) / 2}


def delta(nu: int, sign: str) -> mpmath.mpf:
    root = mpmath.sqrt(nu * nu + 4)
    return (nu + root) / 2 if sign == "+" else (nu - root) / 2


def hi_fusion(nu: int) -> dict[tuple, dict[tuple, int]]:
    """Fusion of the Haagerup-Izumi ring, written out label by label.

    Labels are ('a', g) for alpha_g and ('r', g) for alpha_g rho.
    """
    out = {}
    labels = [("a", g) for g in range(nu)] + [("r", g) for g in range(nu)]
    for x in labels:
        for y in labels:
            prod: dict[tuple, int] = {}
            g, h = x[1], y[1]
            if x[0] == "a" and y[0] == "a":
                prod[("a", (g + h) % nu)] = 1
            elif x[0] == "a":
                prod[("r", (g + h) % nu)] = 1
            elif y[0] == "a":
                prod[("r", (g - h) % nu)] = 1
            else:
                prod[("a", (g - h) % nu)] = 1
                for k in range(nu):
                    prod[("r", k)] = prod.get(("r", k), 0) + 1
            out[(x, y)] = prod
    return out


def tube_block_sizes(nu: int) -> list[int]:
    """One 1x1 block, one (nu+1), (nu-1)/2 blocks of size nu+2 from class iii,
    nu(nu-1)/2 more of size nu+2 from class iv and (nu^2+3)/2 of size nu."""
    sizes = [1, nu + 1]
    sizes += [nu + 2] * ((nu - 1) // 2)
    sizes += [nu + 2] * (nu * (nu - 1) // 2)
    sizes += [nu] * ((nu * nu + 3) // 2)
    return sorted(sizes)


def tube_dim(nu: int) -> int:
    return nu ** 4 + 2 * nu ** 3 + 4 * nu ** 2


def cyclic_form_twists(mu: int, u: int) -> set[Fraction]:
    """{m * u * l^2 / mu mod 1 : l = 1..m} for a cyclic form u*kl/mu."""
    m = (mu - 1) // 2
    return {Fraction(m * u * l * l % mu, mu) for l in range(1, m + 1)}


def same_square_class(N: int, u1: int, u2: int) -> bool:
    """u1*kl/N and u2*kl/N isometric: u2 = x^2 u1 mod N for a unit x."""
    return any(math.gcd(x, N) == 1 and (x * x * u1 - u2) % N == 0 for x in range(1, N))


def verlinde_numpy(S: np.ndarray, unit: int = 0) -> np.ndarray:
    return np.einsum("ia,ja,ka,a->ijk", S, S, S.conj(), 1 / S[unit])


def angle_fraction(z: complex, order: int) -> Fraction:
    ang = cmath.phase(z) / (2 * math.pi)
    return Fraction(round(ang * order) % order, order)
