"""Left- and right-invariant vector fields as polynomial differential operators.

Fields are obtained by differentiating the cached BCH polynomial map, so
they work uniformly for presets and custom algebras. A
:class:`PolyDiffOperator` is ``sum_alpha p_alpha(x) d^alpha`` in exponential
coordinates.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb, prod
from typing import Mapping, Sequence

from .lie import GradedLieAlgebra, bch_polynomials
from .poly import Poly
from .uea import UeaElement

__all__ = [
    "PolyDiffOperator",
    "left_field",
    "right_field",
    "realize_word",
    "realize_uea",
    "realize_basis_element",
    "apply_to_polynomial",
    "nonisotropic_degree",
    "coordinate_monomial",
]


class PolyDiffOperator:
    """``terms`` maps derivative multi-indices to nonzero polynomial coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple, Poly] | None = None):
        self.nvars = nvars
        self.terms: dict[tuple, Poly] = {}
        for alpha, p in (terms or {}).items():
            self._acc(tuple(alpha), p)

    def _acc(self, alpha, p):
        cur = self.terms.get(alpha)
        p = p if cur is None else cur + p
        if p:
            self.terms[alpha] = p
        else:
            self.terms.pop(alpha, None)

    @classmethod
    def identity(cls, nvars: int) -> PolyDiffOperator:
        return cls(nvars, {(0,) * nvars: Poly.constant(nvars, 1)})

    @classmethod
    def partial(cls, nvars: int, i: int) -> PolyDiffOperator:
        alpha = [0] * nvars
        alpha[i] = 1
        return cls(nvars, {tuple(alpha): Poly.constant(nvars, 1)})

    def __eq__(self, other):
        if not isinstance(other, PolyDiffOperator):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __add__(self, other):
        out = PolyDiffOperator(self.nvars, self.terms)
        for a, p in other.terms.items():
            out._acc(a, p)
        return out

    def __neg__(self):
        return PolyDiffOperator(self.nvars, {a: -p for a, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> PolyDiffOperator:
        return PolyDiffOperator(self.nvars, {a: p * c for a, p in self.terms.items()})

    def compose(self, other: PolyDiffOperator) -> PolyDiffOperator:
        """``self o other`` via Leibniz: ``d^a (q d^b) = sum C(a,mu) (d^mu q) d^(a-mu+b)``."""
        out = PolyDiffOperator(self.nvars)
        for alpha, p in self.terms.items():
            for beta, q in other.terms.items():
                for mu in _sub_indices(alpha):
                    dq = q.partial(mu)
                    if not dq:
                        continue
                    c = prod(comb(a, m) for a, m in zip(alpha, mu))
                    gamma = tuple(a - m + b for a, m, b in zip(alpha, mu, beta))
                    out._acc(gamma, p * dq * c)
        return out

    __matmul__ = compose

    def commutator(self, other: PolyDiffOperator) -> PolyDiffOperator:
        return self.compose(other) - other.compose(self)

    def order(self) -> int:
        return max((sum(a) for a in self.terms), default=-1)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for a, p in sorted(self.terms.items()):
            d = "".join(f"d{i}" * k for i, k in enumerate(a)) or "1"
            parts.append(f"({p})*{d}")
        return " + ".join(parts)


def _sub_indices(alpha):
    return itertools.product(*[range(a + 1) for a in alpha])


def left_field(alg: GradedLieAlgebra, i: int) -> PolyDiffOperator:
    """``X_i phi(x) = d/ds phi(x exp(s X_i))`` at s = 0 (i is 1-based)."""
    key = ("left", i)
    if key not in alg._cache:
        n = alg.dim
        coeffs = {}
        for k, z in enumerate(bch_polynomials(alg)):
            c = z.derivative(n + i - 1).restrict(range(n), range(n, 2 * n))
            if c:
                alpha = [0] * n
                alpha[k] = 1
                coeffs[tuple(alpha)] = c
        alg._cache[key] = PolyDiffOperator(n, coeffs)
    return alg._cache[key]


def right_field(alg: GradedLieAlgebra, i: int) -> PolyDiffOperator:
    """``X^R_i phi(x) = d/ds phi(exp(s X_i) x)`` at s = 0 (i is 1-based)."""
    key = ("right", i)
    if key not in alg._cache:
        n = alg.dim
        coeffs = {}
        for k, z in enumerate(bch_polynomials(alg)):
            c = z.derivative(i - 1).restrict(range(n, 2 * n), range(n))
            if c:
                alpha = [0] * n
                alpha[k] = 1
                coeffs[tuple(alpha)] = c
        alg._cache[key] = PolyDiffOperator(n, coeffs)
    return alg._cache[key]


def realize_word(alg: GradedLieAlgebra, word: Sequence[int], side: str = "left") -> PolyDiffOperator:
    """``X_{w_1} ... X_{w_k}`` (or the right-invariant product) as an operator."""
    field = {"left": left_field, "right": right_field}[side]
    out = PolyDiffOperator.identity(alg.dim)
    for w in reversed(tuple(word)):
        if not 1 <= w <= alg.m:
            raise ValueError(f"letter {w} outside 1..{alg.m}")
        out = field(alg, w).compose(out)
    return out


def realize_basis_element(alg: GradedLieAlgebra, b: int) -> PolyDiffOperator:
    """Left-invariant field of basis element ``b`` (0-based), via BCH."""
    n = alg.dim
    coeffs = {}
    for k, z in enumerate(bch_polynomials(alg)):
        c = z.derivative(n + b).restrict(range(n), range(n, 2 * n))
        if c:
            alpha = [0] * n
            alpha[k] = 1
            coeffs[tuple(alpha)] = c
    return PolyDiffOperator(n, coeffs)


def realize_uea(element: UeaElement) -> PolyDiffOperator:
    """Realise a PBW expansion termwise as a left-invariant operator."""
    alg = element.alg
    fields = [realize_basis_element(alg, b) for b in range(alg.dim)]
    out = PolyDiffOperator(alg.dim)
    for mono, c in element.terms.items():
        op = PolyDiffOperator.identity(alg.dim)
        for b in reversed(mono):
            op = fields[b].compose(op)
        out = out + op.scale(c)
    return out


def apply_to_polynomial(op: PolyDiffOperator, p: Poly) -> Poly:
    out = Poly(p.nvars)
    for alpha, coeff in op.terms.items():
        d = p.partial(alpha)
        if d:
            out = out + coeff * d
    return out


def nonisotropic_degree(alg: GradedLieAlgebra, alpha: Sequence[int]) -> int:
    return sum(w * a for w, a in zip(alg.weights, alpha))


def coordinate_monomial(alg: GradedLieAlgebra, alpha: Sequence[int], c=1) -> Poly:
    return Poly(alg.dim, {tuple(alpha): Fraction(c)})
