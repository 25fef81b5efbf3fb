"""Sparse commutative polynomials with rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

__all__ = ["Poly"]


class Poly:
    """Polynomial in ``nvars`` commuting variables.

    ``terms`` maps exponent tuples to nonzero coefficients. Coefficients are
    normally ``Fraction``; evaluation accepts rationals or floats.
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple, object] | None = None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for e, c in terms.items():
                if c:
                    if len(e) != nvars:
                        raise ValueError("exponent length does not match nvars")
                    self.terms[tuple(e)] = Fraction(c)

    @classmethod
    def constant(cls, nvars: int, c) -> Poly:
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> Poly:
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1})

    @classmethod
    def _raw(cls, nvars: int, terms: dict) -> Poly:
        p = cls.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        return p

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.constant(self.nvars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items()):
            mono = "*".join(f"x{i}^{k}" if k > 1 else f"x{i}" for i, k in enumerate(e) if k)
            parts.append(f"{c}*{mono}" if mono else f"{c}")
        return " + ".join(parts)

    def _coerce(self, other) -> Poly:
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different rings")
            return other
        return Poly.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return Poly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = Fraction(other)
            if not c:
                return Poly(self.nvars)
            return Poly._raw(self.nvars, {e: v * c for e, v in self.terms.items()})
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e, 0) + c1 * c2
                if v:
                    out[e] = v
                else:
                    out.pop(e, None)
        return Poly._raw(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = Poly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def derivative(self, i: int) -> Poly:
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = e[:i] + (e[i] - 1,) + e[i + 1 :]
                out[ne] = c * e[i]
        return Poly._raw(self.nvars, out)

    def partial(self, alpha: Sequence[int]) -> Poly:
        p = self
        for i, k in enumerate(alpha):
            for _ in range(k):
                p = p.derivative(i)
        return p

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def weighted_degrees(self, weights: Sequence[int]) -> set[int]:
        return {sum(w * k for w, k in zip(weights, e)) for e in self.terms}

    def __call__(self, point: Sequence):
        """Evaluate at a point (rationals stay exact)."""
        total = 0
        for e, c in self.terms.items():
            v = c
            for x, k in zip(point, e):
                if k:
                    v = v * x**k
            total = total + v
        return total

    def substitute(self, images: Sequence[Poly]) -> Poly:
        """Compose: replace variable ``i`` by ``images[i]`` (all in one ring)."""
        if len(images) != self.nvars:
            raise ValueError("need one image per variable")
        target = images[0].nvars if images else 0
        out = Poly(target)
        cache: dict = {}
        for e, c in self.terms.items():
            term = Poly.constant(target, c)
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    if key not in cache:
                        cache[key] = images[i] ** k
                    term = term * cache[key]
            out = out + term
        return out

    def restrict(self, keep: Sequence[int], zero: Sequence[int]) -> Poly:
        """Set the variables ``zero`` to 0 and re-index the ones in ``keep``."""
        out = {}
        for e, c in self.terms.items():
            if any(e[i] for i in zero):
                continue
            out[tuple(e[i] for i in keep)] = c
        return Poly._raw(len(keep), out)

    def evaluate_grid(self, coords: Sequence[np.ndarray]) -> np.ndarray:
        """Vectorised float evaluation on arrays of equal shape."""
        shape = np.broadcast(*coords).shape if coords else ()
        out = np.zeros(shape)
        powers: dict = {}
        for e, c in self.terms.items():
            term = np.full(shape, float(c))
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    if key not in powers:
                        powers[key] = coords[i] ** k
                    term = term * powers[key]
            out += term
        return out
