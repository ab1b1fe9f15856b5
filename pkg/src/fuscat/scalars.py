"""High-precision complex scalars, algebraic constants and the zero-test policy.

Scalars are ``gmpy2.mpc`` values.  The working precision is shared by gmpy2 and
mpmath so that values can move between the fast elementwise arithmetic used by
the Leavitt engine and the matrix routines in mpmath without losing bits.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import gmpy2
import mpmath
import numpy as np

DEFAULT_PRECISION_BITS = 256


class NoConvergence(ArithmeticError):
    pass


class AmbiguousRoot(ArithmeticError):
    pass


@dataclass
class Tolerances:
    tol_zero: float = 1e-30
    tol_report: float = 1e-15
    tol_eigen: float = 1e-20


_TOL = Tolerances()


def tolerances() -> Tolerances:
    return _TOL


def set_tolerances(tol_zero: float | None = None, tol_report: float | None = None,
                   tol_eigen: float | None = None) -> Tolerances:
    if tol_zero is not None:
        _TOL.tol_zero = float(tol_zero)
    if tol_report is not None:
        _TOL.tol_report = float(tol_report)
    if tol_eigen is not None:
        _TOL.tol_eigen = float(tol_eigen)
    return _TOL


def set_precision(bits: int) -> None:
    if bits < 53:
        raise ValueError("precision below double precision is not supported")
    gmpy2.get_context().precision = int(bits)
    mpmath.mp.prec = int(bits)


def get_precision() -> int:
    return gmpy2.get_context().precision


@contextlib.contextmanager
def precision(bits: int) -> Iterator[None]:
    old = get_precision()
    set_precision(bits)
    try:
        yield
    finally:
        set_precision(old)


set_precision(DEFAULT_PRECISION_BITS)

Scalar = gmpy2.mpc
ZERO = gmpy2.mpc(0)
ONE = gmpy2.mpc(1)


def scalar(x) -> gmpy2.mpc:
    """Coerce ints, Fractions, floats, complex numbers, strings and mpmath values."""
    if isinstance(x, gmpy2.mpc):
        return x
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return from_mp(x)
    if isinstance(x, Fraction):
        return gmpy2.mpc(gmpy2.mpq(x.numerator, x.denominator))
    if isinstance(x, str):
        x = x.strip().replace(" ", "")
        if x.endswith("j") or x.endswith("i"):
            return gmpy2.mpc(x.replace("i", "j"))
        return gmpy2.mpc(gmpy2.mpfr(x))
    if isinstance(x, np.generic):
        x = x.item()
    return gmpy2.mpc(x)


def real(x) -> gmpy2.mpfr:
    return scalar(x).real


def _mpfr_to_mpf(r: gmpy2.mpfr) -> mpmath.mpf:
    if gmpy2.is_zero(r):
        return mpmath.mpf(0)
    man, exp = r.as_mantissa_exp()
    return mpmath.mpf(mpmath.libmp.from_man_exp(int(man), int(exp)))


def _mpf_to_mpfr(x: mpmath.mpf) -> gmpy2.mpfr:
    sign, man, exp, _ = x._mpf_
    if not man:
        return gmpy2.mpfr(0)
    value = gmpy2.mul_2exp(gmpy2.mpfr(gmpy2.mpz(man)), int(exp))
    return -value if sign else value


def to_mp(x) -> mpmath.mpc:
    x = scalar(x)
    return mpmath.mpc(_mpfr_to_mpf(x.real), _mpfr_to_mpf(x.imag))


def from_mp(x) -> gmpy2.mpc:
    x = mpmath.mpc(x)
    return gmpy2.mpc(_mpf_to_mpfr(x.real), _mpf_to_mpfr(x.imag))


def to_complex(x) -> complex:
    x = scalar(x)
    return complex(float(x.real), float(x.imag))


def conj(x) -> gmpy2.mpc:
    return scalar(x).conjugate()


def absval(x) -> float:
    return float(abs(scalar(x)))


def sqrt(x) -> gmpy2.mpc:
    return gmpy2.sqrt(scalar(x))


def exp(x) -> gmpy2.mpc:
    return gmpy2.exp(scalar(x))


def pi() -> gmpy2.mpfr:
    return gmpy2.const_pi()


def root_of_unity(k, n: int) -> gmpy2.mpc:
    """exp(2 pi i k / n) with k possibly a Fraction or rational string."""
    frac = Fraction(k) / n
    frac -= frac.numerator // frac.denominator
    angle = 2 * pi() * gmpy2.mpq(frac.numerator, frac.denominator)
    return gmpy2.mpc(gmpy2.cos(angle), gmpy2.sin(angle))


OMEGA_LABELS = {"1": 0, "w": 1, "wbar": 2}


def omega(label: str | int) -> gmpy2.mpc:
    """Third root of unity by label: '1', 'w' = exp(2 pi i/3), 'wbar'."""
    k = OMEGA_LABELS[label] if isinstance(label, str) else int(label) % 3
    return ONE if k == 0 else root_of_unity(k, 3)


def is_zero(x, tol: float | None = None) -> bool:
    tol = _TOL.tol_zero if tol is None else tol
    return abs(scalar(x)) < tol


def close(a, b, tol: float | None = None) -> bool:
    """Tolerance-mediated equality relative to max(1, |a|, |b|)."""
    tol = _TOL.tol_zero if tol is None else tol
    a, b = scalar(a), scalar(b)
    scale = max(1.0, float(abs(a)), float(abs(b)))
    return float(abs(a - b)) < tol * scale


def delta_pm(nu: int, sign: str) -> gmpy2.mpfr:
    """The root of x^2 = 1 + nu x selected by sign ('+' or '-')."""
    if nu < 1 or nu % 2 == 0:
        raise ValueError(f"nu must be odd and positive, got {nu}")
    root = gmpy2.sqrt(gmpy2.mpfr(nu * nu + 4))
    if sign == "+":
        return (nu + root) / 2
    if sign == "-":
        return (nu - root) / 2
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def b_parameter(omega_value, delta) -> gmpy2.mpc:
    """Solve b^2 = 1/(omega delta) on the branch with Arg(b) in [0, pi)."""
    b = gmpy2.sqrt(1 / (scalar(omega_value) * scalar(delta)))
    tol = _TOL.tol_zero
    if b.imag < -tol or (abs(b.imag) <= tol and b.real < 0):
        b = -b
    return b


@dataclass
class AlgebraicSpec:
    """A simple root of an integer polynomial, isolated near ``approx``.

    ``coeffs`` run from the constant term upwards.
    """

    coeffs: Sequence[int | Fraction]
    approx: complex
    radius: float = 1e-2
    name: str = field(default="")

    def poly_np(self) -> np.ndarray:
        return np.array([float(c) for c in reversed(self.coeffs)], dtype=float)


def _horner(coeffs: Sequence, x: gmpy2.mpc) -> tuple[gmpy2.mpc, gmpy2.mpc]:
    p = ZERO
    dp = ZERO
    for c in reversed(coeffs):
        dp = dp * x + p
        p = p * x + scalar(c)
    return p, dp


def poly_eval(coeffs: Sequence, x) -> gmpy2.mpc:
    return _horner(coeffs, scalar(x))[0]


def refine_root(spec: AlgebraicSpec, residual: float = 1e-50, max_iter: int = 200) -> gmpy2.mpc:
    """Newton-refine the unique root of ``spec.coeffs`` near ``spec.approx``."""
    roots = np.roots(spec.poly_np())
    near = [r for r in roots if abs(r - complex(spec.approx)) < spec.radius]
    if len(near) > 1:
        raise AmbiguousRoot(f"{len(near)} roots within {spec.radius} of {spec.approx}")
    start = complex(near[0]) if near else complex(spec.approx)
    x = scalar(start)
    best = float("inf")
    stalled = 0
    for _ in range(max_iter):
        p, dp = _horner(spec.coeffs, x)
        size = float(abs(p))
        if size < residual:
            if abs(x - scalar(complex(spec.approx))) > spec.radius:
                raise NoConvergence("Newton left the isolation disc")
            return _clean_real(x)
        if dp == 0:
            raise NoConvergence("vanishing derivative")
        x = x - p / dp
        if size < best * 0.999:
            best = size
            stalled = 0
        else:
            stalled += 1
            if stalled > 8:
                break
    raise NoConvergence(f"residual stuck at {best:.3e} for {spec.name or spec.coeffs}")


def _clean_real(x: gmpy2.mpc) -> gmpy2.mpc:
    # Real roots come back with a tiny imaginary residue from complex Newton.
    if abs(x.imag) < gmpy2.mpfr(2) ** (-(get_precision() - 16)) * max(1, abs(x.real)):
        return gmpy2.mpc(x.real, 0)
    return x


def certify_root_of_unity(w, max_order: int, tol: float | None = None) -> int | None:
    """Smallest N <= max_order with |w^N - 1| < tol, or None."""
    tol = _TOL.tol_report if tol is None else tol
    w = scalar(w)
    if abs(abs(w) - 1) > tol:
        return None
    power = ONE
    for n in range(1, max_order + 1):
        power *= w
        if abs(power - 1) < tol:
            return n
    return None


def to_pair(x, digits: int | None = None) -> list[str]:
    """Serialise as [re, im] decimal strings."""
    x = scalar(x)
    if digits is None:
        digits = max(17, int(get_precision() * 0.30103))
    return [_fmt(x.real, digits), _fmt(x.imag, digits)]


def _fmt(r: gmpy2.mpfr, digits: int) -> str:
    if gmpy2.is_zero(r):
        return "0"
    return mpmath.nstr(_mpfr_to_mpf(r), digits, min_fixed=-5, max_fixed=5, strip_zeros=True)


def from_pair(pair) -> gmpy2.mpc:
    if isinstance(pair, (list, tuple)) and len(pair) == 2:
        return gmpy2.mpc(gmpy2.mpfr(str(pair[0])), gmpy2.mpfr(str(pair[1])))
    return scalar(pair)
