"""Small real polynomials and Sturm-sequence root counting."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotSquareFree

ZERO_RTOL = 1e-13
MAX_DEGREE = 8


@dataclass(frozen=True, eq=False)
class RealPolynomial:
    """Polynomial with real coefficients stored in ascending degree."""

    coefficients: tuple

    def __init__(self, coefficients):
        c = [float(x) for x in coefficients]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if not c:
            c = [0.0]
        if len(c) - 1 > MAX_DEGREE:
            raise ValueError(f"degree {len(c) - 1} exceeds {MAX_DEGREE}")
        object.__setattr__(self, "coefficients", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def __neg__(self):
        return RealPolynomial([-c for c in self.coefficients])

    def __repr__(self):
        return f"RealPolynomial({list(self.coefficients)})"

    def derivative(self) -> "RealPolynomial":
        c = self.coefficients
        return RealPolynomial([k * c[k] for k in range(1, len(c))] or [0.0])

    def scale(self) -> float:
        return max(abs(c) for c in self.coefficients)

    def divmod(self, divisor: "RealPolynomial"):
        """Quotient and remainder of polynomial long division."""
        num = list(self.coefficients)
        den = divisor.coefficients
        if den[-1] == 0.0:
            raise ZeroDivisionError("division by the zero polynomial")
        dd = len(den) - 1
        if len(num) - 1 < dd:
            return RealPolynomial([0.0]), RealPolynomial(num)
        quot = [0.0] * (len(num) - dd)
        for k in range(len(num) - 1, dd - 1, -1):
            q = num[k] / den[-1]
            quot[k - dd] = q
            for j in range(dd + 1):
                num[k - dd + j] -= q * den[j]
        return RealPolynomial(quot), RealPolynomial(num[:dd] or [0.0])

    def real_roots(self) -> np.ndarray:
        """Real roots from companion-matrix eigenvalues."""
        if self.degree < 1:
            return np.array([])
        r = np.roots(self.coefficients[::-1])
        return np.sort(r[np.abs(r.imag) <= 1e-9 * np.maximum(1.0, np.abs(r.real))].real)


def _negligible(r: RealPolynomial, reference: float) -> bool:
    return r.scale() <= ZERO_RTOL * reference


def sturm_sequence(q: RealPolynomial) -> list[RealPolynomial]:
    """Sturm chain q, q', -rem(q0, q1), ... ending in a constant.

    The chain itself is returned unscaled. For the zero test both operands
    are normalized by their largest coefficient, so a remainder below
    ``ZERO_RTOL`` of the normalized divisor counts as zero; reaching one
    before a constant means q has a repeated root.
    """
    if q.degree < 1:
        raise ValueError("Sturm sequence needs a polynomial of degree >= 1")
    seq = [q, q.derivative()]
    while seq[-1].degree > 0:
        prev, cur = seq[-2], seq[-1]
        _, rem = prev.divmod(cur)
        # rem(prev/|prev|, cur/|cur|) == rem(prev, cur)/|prev|
        if _negligible(rem, prev.scale()):
            raise NotSquareFree(f"gcd(q, q') has degree {cur.degree}")
        seq.append(-rem)
    return seq


def sign_changes(values) -> int:
    signs = [v > 0 for v in values if v != 0]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def count_roots(q: RealPolynomial, c: float, d: float, seq=None) -> int:
    """Number of distinct real roots of q in the half-open interval (c, d]."""
    if not c < d:
        raise ValueError("need c < d")
    if seq is None:
        seq = sturm_sequence(q)
    return sign_changes(p(c) for p in seq) - sign_changes(p(d) for p in seq)
