"""Exact evaluation of products of rational powers of integer sizes.

Bounds like |A|^{383/191} |B|^{571/191} are evaluated without floating
point: the product is rewritten under one common root, (N/D)^{1/k}, and
the integer k-th root is bracketed by binary search.  Reports store the
floor (conservative for upper-bound ratios) together with an exactness
flag, so every ratio is replayable in integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm


def iroot(n: int, k: int) -> int:
    """floor(n^(1/k)) for n >= 0, k >= 1, exact."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0 and k >= 1")
    if n in (0, 1) or k == 1:
        return n
    hi = 1 << ((n.bit_length() + k - 1) // k + 1)
    lo = 0
    while lo < hi - 1:
        mid = (lo + hi) // 2
        if mid**k <= n:
            lo = mid
        else:
            hi = mid
    return lo


def iroot_frac(num: int, den: int, k: int) -> int:
    """floor((num/den)^(1/k)) for num >= 0, den >= 1, exact."""
    if den == 1:
        return iroot(num, k)
    lo, hi = 0, iroot(num, k) + 2
    while lo < hi - 1:
        mid = (lo + hi) // 2
        if mid**k * den <= num:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class PowerTerm:
    """coeff * prod(symbol^exponent) with rational exponents.

    evaluate() returns (floor, exact) where floor = floor of the real
    value and exact marks whether the value is an integer hit.
    """

    exponents: tuple[tuple[str, Fraction], ...]
    coeff: Fraction = Fraction(1)

    @staticmethod
    def of(exps: dict[str, Fraction | int], coeff: Fraction | int = 1) -> "PowerTerm":
        norm = tuple(sorted((s, Fraction(e)) for s, e in exps.items() if e != 0))
        return PowerTerm(norm, Fraction(coeff))

    def formula(self) -> str:
        parts = []
        if self.coeff != 1:
            parts.append(str(self.coeff))
        for s, e in self.exponents:
            if e == 1:
                parts.append(f"|{s}|")
            else:
                parts.append(f"|{s}|^{{{e}}}")
        return "*".join(parts) if parts else "1"

    def evaluate(self, sizes: dict[str, int]) -> tuple[int, bool]:
        if self.coeff < 0:
            raise ValueError("negative coefficients unsupported")
        root = self.coeff.denominator
        for _, e in self.exponents:
            root = lcm(root, e.denominator)
        num = self.coeff.numerator**root
        den = self.coeff.denominator**root
        for s, e in self.exponents:
            base = sizes[s]
            if base <= 0:
                raise ValueError(f"size {s} must be positive, got {base}")
            power = e * root  # integer by construction
            k = int(power)
            if k >= 0:
                num *= base**k
            else:
                den *= base**(-k)
        g = gcd(num, den)
        num //= g
        den //= g
        fl = iroot_frac(num, den, root)
        exact = fl**root * den == num
        return fl, exact
