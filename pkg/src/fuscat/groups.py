"""Finite abelian groups of odd order with elements encoded as integers."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import gmpy2

from . import scalars


@dataclass(frozen=True)
class GroupSpec:
    """Product of cyclic groups; element ``i`` is the mixed-radix digit vector of ``i``."""

    cyclic_factors: tuple[int, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        factors = tuple(int(f) for f in self.cyclic_factors) or (1,)
        if any(f < 1 or f % 2 == 0 for f in factors):
            raise ValueError(f"cyclic factors must be odd, got {factors}")
        object.__setattr__(self, "cyclic_factors", factors)
        if not self.name:
            object.__setattr__(self, "name", "x".join(f"Z{f}" for f in factors))

    @classmethod
    def parse(cls, text: str) -> "GroupSpec":
        """'Z3', 'Z3xZ3', '3', '[3,3]' all accepted."""
        cleaned = text.strip().strip("[]").replace("Z", "").replace("x", ",").replace("*", ",")
        return cls(tuple(int(p) for p in cleaned.split(",") if p.strip()))

    @property
    def nu(self) -> int:
        return math.prod(self.cyclic_factors)

    @property
    def n(self) -> int:
        return (self.nu - 1) // 2

    @property
    def elements(self) -> range:
        return range(self.nu)

    def digits(self, g: int) -> tuple[int, ...]:
        out = []
        for f in reversed(self.cyclic_factors):
            out.append(g % f)
            g //= f
        return tuple(reversed(out))

    def encode(self, digits) -> int:
        g = 0
        for d, f in zip(digits, self.cyclic_factors):
            g = g * f + (d % f)
        return g

    @cached_property
    def _add(self) -> list[list[int]]:
        return [[self.encode(a + b for a, b in zip(self.digits(g), self.digits(h)))
                 for h in self.elements] for g in self.elements]

    @cached_property
    def _neg(self) -> list[int]:
        return [self.encode(-a for a in self.digits(g)) for g in self.elements]

    @cached_property
    def _half(self) -> list[int]:
        out = [0] * self.nu
        for g in self.elements:
            out[self.add(g, g)] = g
        return out

    def add(self, g: int, h: int) -> int:
        return self._add[g][h]

    def neg(self, g: int) -> int:
        return self._neg[g]

    def sub(self, g: int, h: int) -> int:
        return self._add[g][self._neg[h]]

    def half(self, g: int) -> int:
        """The unique h with 2h = g (2 is invertible in odd order)."""
        return self._half[g]

    def mul(self, k: int, g: int) -> int:
        return self.encode(k * a for a in self.digits(g))

    def sum(self, *gs: int) -> int:
        total = 0
        for g in gs:
            total = self._add[total][g]
        return total

    @cached_property
    def n3(self) -> int:
        return sum(1 for g in self.elements if self.mul(3, g) == 0)

    def order(self, g: int) -> int:
        k, h = 1, g
        while h != 0:
            h = self.add(h, g)
            k += 1
        return k

    @cached_property
    def automorphisms(self) -> list[tuple[int, ...]]:
        """All automorphisms as permutation tuples (brute force over generator images)."""
        gens = [self.encode(tuple(1 if i == j else 0 for i in range(len(self.cyclic_factors))))
                for j in range(len(self.cyclic_factors))]
        orders = [self.order(x) for x in gens]
        candidates = [[h for h in self.elements if orders[i] % self.order(h) == 0]
                      for i in range(len(gens))]
        autos = []
        for images in itertools.product(*candidates):
            perm = []
            for g in self.elements:
                img = 0
                for coeff, im in zip(self.digits(g), images):
                    img = self.add(img, self.mul(coeff, im))
                perm.append(img)
            if len(set(perm)) == self.nu:
                autos.append(tuple(perm))
        return autos

    def character_exponent(self, a: int, g: int) -> Fraction:
        """psi_a(g) = exp(2 pi i * this); the dot product of digit vectors."""
        return sum((Fraction(x * y, f) for x, y, f in
                    zip(self.digits(a), self.digits(g), self.cyclic_factors)), Fraction(0))

    def character(self, a: int, g: int) -> gmpy2.mpc:
        frac = self.character_exponent(a, g)
        return scalars.root_of_unity(frac, 1)

    def pm_representatives(self, include_zero: bool = False) -> list[int]:
        """One element from each pair {g, -g}, g nonzero, smallest code first."""
        reps = [0] if include_zero else []
        seen = {0}
        for g in self.elements:
            if g not in seen:
                reps.append(g)
                seen.update((g, self.neg(g)))
        return reps
