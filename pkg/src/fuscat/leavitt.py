"""The Leavitt algebra on s, s', t_g, t'_g with canonical reduced normal forms.

A reduced monomial is stored as a pair ``(u, p)`` of letter tuples meaning
``u[0] u[1] ... p[0]' p[1]' ...``: every unprimed letter precedes every primed
one and the junction is never ``s s'``.  Letter 0 is ``s`` and letter ``1 + g``
is ``t_g``.  Products cancel ``x'_i x_j = delta_ij`` at the junction and then
expand ``s s' = 1 - sum_g t_g t'_g`` until the junction is clean.
"""

from __future__ import annotations

import random
import re
from typing import Iterable, Iterator, Mapping

import gmpy2

from . import scalars

S = 0

Word = tuple[tuple[int, ...], tuple[int, ...]]
EMPTY: Word = ((), ())


def t_letter(g: int) -> int:
    return 1 + g


def letter_name(x: int, primed: bool = False) -> str:
    base = "s" if x == S else f"t[{x - 1}]"
    if primed:
        base = base.replace("s", "s'") if x == S else f"t'[{x - 1}]"
    return base


def word_str(word: Word) -> str:
    u, p = word
    parts = [letter_name(x) for x in u] + [letter_name(x, True) for x in p]
    return " ".join(parts) if parts else "1"


class LeavittAlgebra:
    """L_{nu+1}: generators s, s' and t_g, t'_g for g in range(nu)."""

    def __init__(self, nu: int):
        if nu < 1:
            raise ValueError("nu must be positive")
        self.nu = nu
        self._t_letters = tuple(range(1, nu + 1))

    def __repr__(self) -> str:
        return f"LeavittAlgebra(nu={self.nu})"

    def __eq__(self, other) -> bool:
        return isinstance(other, LeavittAlgebra) and other.nu == self.nu

    def __hash__(self) -> int:
        return hash(("L", self.nu))

    def element(self, terms: Mapping[Word, object] | None = None) -> "LElement":
        """Build from (u, p) words; any s s' junction is expanded."""
        out: dict = {}
        for (u, p), c in (terms or {}).items():
            _accumulate(out, tuple(u), tuple(p), scalars.scalar(c), self._t_letters)
        return LElement(self, out)

    def zero(self) -> "LElement":
        return LElement(self, {})

    def one(self) -> "LElement":
        return LElement(self, {EMPTY: scalars.ONE})

    def scalar(self, c) -> "LElement":
        return LElement(self, {EMPTY: scalars.scalar(c)})

    def word(self, u: Iterable[int] = (), p: Iterable[int] = (), coeff=1) -> "LElement":
        """The monomial ``u p'``; reduced automatically if the junction is s s'."""
        u, p = tuple(u), tuple(p)
        out: dict[Word, gmpy2.mpc] = {}
        _accumulate(out, u, p, scalars.scalar(coeff), self._t_letters)
        return LElement(self, out)

    @property
    def s(self) -> "LElement":
        return self.word((S,))

    @property
    def sp(self) -> "LElement":
        return self.word((), (S,))

    def t(self, g: int) -> "LElement":
        return self.word((t_letter(g),))

    def tp(self, g: int) -> "LElement":
        return self.word((), (t_letter(g),))

    def generators(self) -> list[tuple[int, bool]]:
        """All (letter, primed) pairs: s, t_g then s', t'_g."""
        letters = [S, *self._t_letters]
        return [(x, False) for x in letters] + [(x, True) for x in letters]

    def gen(self, letter: int, primed: bool) -> "LElement":
        return self.word((), (letter,)) if primed else self.word((letter,))

    def from_letters(self, letters: Iterable[int], coeff=1) -> "LElement":
        """Reduce a free word given as signed letters (x primed is encoded as -x-1)."""
        result = self.scalar(coeff)
        for a in letters:
            result = result * (self.gen(-a - 1, True) if a < 0 else self.gen(a, False))
        return result

    def parse(self, text: str) -> "LElement":
        """Parse a single monomial such as "s t[2] t'[1]"."""
        letters = []
        for tok in text.split():
            m = re.fullmatch(r"(s|t)('?)(?:\[(\d+)\])?", tok)
            if not m:
                raise ValueError(f"bad token {tok!r}")
            x = S if m.group(1) == "s" else t_letter(int(m.group(3)))
            letters.append(-x - 1 if m.group(2) else x)
        return self.from_letters(letters)

    def random_element(self, rng: random.Random, n_terms: int = 3, max_len: int = 3) -> "LElement":
        out = self.zero()
        for _ in range(n_terms):
            letters = [rng.choice([S, *self._t_letters]) for _ in range(rng.randint(0, max_len))]
            signs = [rng.random() < 0.5 for _ in letters]
            coeff = scalars.scalar(complex(rng.uniform(-1, 1), rng.uniform(-1, 1)))
            out = out + self.from_letters([-x - 1 if p else x for x, p in zip(letters, signs)], coeff)
        return out


def _accumulate(out: dict, u: tuple, p: tuple, c, t_letters: tuple) -> None:
    """Add c * u p' to ``out``, expanding s s' at the junction."""
    k = 0
    lu, lp = len(u), len(p)
    while k < lu and k < lp and u[lu - 1 - k] == S and p[k] == S:
        k += 1
    if k == 0:
        key = (u, p)
        out[key] = out[key] + c if key in out else c
        return
    key = (u[:lu - k], p[k:])
    out[key] = out[key] + c if key in out else c
    for i in range(1, k + 1):
        head, tail = u[:lu - i], p[i:]
        for x in t_letters:
            key = (head + (x,), (x,) + tail)
            out[key] = out[key] - c if key in out else -c


def _mul_into(out: dict, a: Mapping, b: Mapping, t_letters: tuple, scale=None) -> None:
    for (u1, p1), c1 in a.items():
        if scale is not None:
            c1 = c1 * scale
        lp1 = len(p1)
        for (u2, p2), c2 in b.items():
            i, j, lu2 = lp1, 0, len(u2)
            ok = True
            while i and j < lu2:
                if p1[i - 1] != u2[j]:
                    ok = False
                    break
                i -= 1
                j += 1
            if not ok:
                continue
            u = u1 + u2[j:] if j < lu2 else u1
            p = p1[:i] + p2 if i else p2
            c = c1 * c2
            if u and p and u[-1] == S and p[0] == S:
                _accumulate(out, u, p, c, t_letters)
            else:
                key = (u, p)
                out[key] = out[key] + c if key in out else c


def _prune(terms: dict, tol: float) -> dict:
    return {w: c for w, c in terms.items() if abs(c) >= tol}


class LElement:
    """Immutable reduced element of a Leavitt algebra."""

    __slots__ = ("alg", "terms")

    def __init__(self, alg: LeavittAlgebra, terms: dict):
        self.alg = alg
        self.terms = _prune(terms, scalars.tolerances().tol_zero)

    def __repr__(self) -> str:
        return f"LElement({self})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for w in sorted(self.terms, key=lambda w: (len(w[0]) + len(w[1]), w)):
            c = scalars.to_complex(self.terms[w])
            parts.append(f"({c.real:.6g}{c.imag:+.6g}j)*{word_str(w)}")
        return " + ".join(parts)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Word, gmpy2.mpc]]:
        return iter(self.terms.items())

    def coeff(self, word: Word) -> gmpy2.mpc:
        return self.terms.get(word, scalars.ZERO)

    def _coerce(self, other) -> "LElement":
        if isinstance(other, LElement):
            if other.alg != self.alg:
                raise ValueError("elements of different Leavitt algebras")
            return other
        return self.alg.scalar(other)

    def __add__(self, other) -> "LElement":
        other = self._coerce(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out[w] + c if w in out else c
        return LElement(self.alg, out)

    __radd__ = __add__

    def __neg__(self) -> "LElement":
        return LElement(self.alg, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other) -> "LElement":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "LElement":
        return self._coerce(other) - self

    def scale(self, c) -> "LElement":
        c = scalars.scalar(c)
        return LElement(self.alg, {w: v * c for w, v in self.terms.items()})

    def __mul__(self, other) -> "LElement":
        if not isinstance(other, LElement):
            return self.scale(other)
        other = self._coerce(other)
        out: dict = {}
        _mul_into(out, self.terms, other.terms, self.alg._t_letters)
        return LElement(self.alg, out)

    def __rmul__(self, other) -> "LElement":
        return self.scale(other)

    def star(self) -> "LElement":
        """Conjugate-linear anti-automorphism swapping primed and unprimed letters."""
        out: dict = {}
        for (u, p), c in self.terms.items():
            # (u p')' = p u' with both sequences reversed
            _accumulate(out, tuple(reversed(p)), tuple(reversed(u)), c.conjugate(), self.alg._t_letters)
        return LElement(self.alg, out)

    def norm(self) -> float:
        """Largest coefficient modulus."""
        return max((float(abs(c)) for c in self.terms.values()), default=0.0)

    def is_zero(self, tol: float | None = None) -> bool:
        tol = scalars.tolerances().tol_zero if tol is None else tol
        return self.norm() < tol

    def equal(self, other, tol: float | None = None) -> bool:
        return (self - self._coerce(other)).is_zero(tol)

    def scalar_part(self) -> gmpy2.mpc:
        return self.coeff(EMPTY)


def reduce(alg: LeavittAlgebra, free_terms: Mapping[tuple[int, ...], object]) -> LElement:
    """Reduce a combination of free words (signed-letter tuples) to normal form."""
    out = alg.zero()
    for letters, c in free_terms.items():
        out = out + alg.from_letters(letters, c)
    return out


def mul(a: LElement, b: LElement) -> LElement:
    return a * b


def star(a: LElement) -> LElement:
    return a.star()


def equal(a: LElement, b: LElement, tol: float | None = None) -> bool:
    return a.equal(b, tol)


class RewriteReducer:
    """Independent normal-form oracle that rewrites free words redex by redex.

    Rules: x'_i x_j -> delta_ij and s s' -> 1 - sum_g t_g t'_g.  The strategy
    picks the leftmost or the rightmost redex.  Every rule strictly lowers the
    pair (number of s-letters, length), so any strategy terminates.
    """

    def __init__(self, alg: LeavittAlgebra, strategy: str = "leftmost"):
        if strategy not in ("leftmost", "rightmost"):
            raise ValueError(strategy)
        self.alg = alg
        self.strategy = strategy

    def _redex(self, word: tuple[int, ...]) -> int | None:
        positions = range(len(word) - 1)
        if self.strategy == "rightmost":
            positions = reversed(positions)
        for i in positions:
            a, b = word[i], word[i + 1]
            if (a < 0 and b >= 0) or (a == S and b == -S - 1):
                return i
        return None

    def reduce(self, free_terms: Mapping[tuple[int, ...], object]) -> LElement:
        pending = {tuple(w): scalars.scalar(c) for w, c in free_terms.items()}
        done: dict[tuple[int, ...], gmpy2.mpc] = {}
        while pending:
            word, c = pending.popitem()
            i = self._redex(word)
            if i is None:
                done[word] = done.get(word, scalars.ZERO) + c
                continue
            a, b = word[i], word[i + 1]
            head, tail = word[:i], word[i + 2:]
            if a < 0 and b >= 0:
                if -a - 1 == b:
                    pending[head + tail] = pending.get(head + tail, scalars.ZERO) + c
            else:
                pending[head + tail] = pending.get(head + tail, scalars.ZERO) + c
                for x in self.alg._t_letters:
                    w = head + (x, -x - 1) + tail
                    pending[w] = pending.get(w, scalars.ZERO) - c
        terms = {}
        for word, c in done.items():
            u = tuple(a for a in word if a >= 0)
            p = tuple(-a - 1 for a in word if a < 0)
            terms[(u, p)] = terms.get((u, p), scalars.ZERO) + c
        return self.alg.element(terms)


def random_free_word(alg: LeavittAlgebra, rng: random.Random, max_len: int = 8) -> tuple[int, ...]:
    letters = [S, *alg._t_letters]
    out = []
    for _ in range(rng.randint(0, max_len)):
        x = rng.choice(letters)
        out.append(-x - 1 if rng.random() < 0.5 else x)
    return tuple(out)
