"""Universal enveloping algebra in Poincare-Birkhoff-Witt normal form.

A PBW monomial is a non-decreasing tuple of basis indices. Products are
straightened with ``e_b e_a = e_a e_b + [e_b, e_a]`` for ``a < b``; every
correction term is shorter, so rewriting terminates. The result of moving
one basis element into a monomial is memoised per algebra.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

from .lie import GradedLieAlgebra

__all__ = [
    "UeaElement",
    "LieMembershipError",
    "multiply",
    "from_word",
    "from_lie",
    "transpose_word",
    "ad_power",
    "ad_power_expand",
    "commutator_factor",
    "CommutatorFactor",
    "normal_form_of_words",
]


class LieMembershipError(AssertionError):
    """A computed factor is not of the expected graded shape."""


def _accumulate(out: dict, terms: Mapping, scale=1):
    for k, c in terms.items():
        v = out.get(k, 0) + c * scale
        if v:
            out[k] = v
        else:
            out.pop(k, None)


def _mono_times_gen(alg: GradedLieAlgebra, mono: tuple, g: int) -> dict:
    """Normal form of ``mono * e_g`` (memoised, do not mutate the result)."""
    cache = alg._cache.setdefault("pbw", {})
    key = (mono, g)
    hit = cache.get(key)
    if hit is not None:
        return hit
    if not mono or mono[-1] <= g:
        result = {mono + (g,): Fraction(1)}
    else:
        last = mono[-1]
        prefix = mono[:-1]
        result: dict = {}
        # prefix * e_g * e_last
        for m1, c1 in _mono_times_gen(alg, prefix, g).items():
            _accumulate(result, _mono_times_gen(alg, m1, last), c1)
        # prefix * [e_last, e_g]
        for c, k in alg.bracket_table(last, g):
            _accumulate(result, _mono_times_gen(alg, prefix, c), k)
    cache[key] = result
    return result


def _times_mono(alg: GradedLieAlgebra, terms: Mapping, mono: Iterable[int]) -> dict:
    cur = dict(terms)
    for g in mono:
        nxt: dict = {}
        for m1, c1 in cur.items():
            _accumulate(nxt, _mono_times_gen(alg, m1, g), c1)
        cur = nxt
    return cur


class UeaElement:
    """Exact element of U(g): ``terms`` maps PBW monomials to rationals."""

    __slots__ = ("alg", "terms")

    def __init__(self, alg: GradedLieAlgebra, terms: Mapping[tuple, object] | None = None):
        self.alg = alg
        self.terms: dict[tuple, Fraction] = {}
        for mono, c in (terms or {}).items():
            mono = tuple(mono)
            if any(mono[i] > mono[i + 1] for i in range(len(mono) - 1)):
                raise ValueError(f"monomial {mono} is not in PBW order")
            if c:
                _accumulate(self.terms, {mono: Fraction(c)})

    @classmethod
    def _raw(cls, alg, terms):
        e = cls.__new__(cls)
        e.alg = alg
        e.terms = terms
        return e

    @classmethod
    def unit(cls, alg) -> UeaElement:
        return cls._raw(alg, {(): Fraction(1)})

    @classmethod
    def zero(cls, alg) -> UeaElement:
        return cls._raw(alg, {})

    @classmethod
    def generator(cls, alg, i: int) -> UeaElement:
        """Basis element ``e_i`` (0-based)."""
        return cls._raw(alg, {(i,): Fraction(1)})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def _check(self, other):
        if other.alg is not self.alg:
            raise ValueError("elements of different algebras")

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = UeaElement.unit(self.alg) * other
        if not isinstance(other, UeaElement):
            return NotImplemented
        return self.alg is other.alg and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        _accumulate(out, other.terms)
        return UeaElement._raw(self.alg, out)

    def __neg__(self):
        return UeaElement._raw(self.alg, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, UeaElement):
            return multiply(self, other)
        c = Fraction(other)
        if not c:
            return UeaElement.zero(self.alg)
        return UeaElement._raw(self.alg, {k: v * c for k, v in self.terms.items()})

    def __rmul__(self, other):
        return self * other

    def __pow__(self, k: int):
        out = UeaElement.unit(self.alg)
        for _ in range(k):
            out = out * self
        return out

    def degree_of(self, mono: tuple) -> int:
        return sum(self.alg.weights[i] for i in mono)

    def homogeneous_parts(self) -> dict[int, UeaElement]:
        parts: dict[int, dict] = {}
        for mono, c in self.terms.items():
            parts.setdefault(self.degree_of(mono), {})[mono] = c
        return {d: UeaElement._raw(self.alg, t) for d, t in parts.items()}

    def __repr__(self):
        if not self.terms:
            return "0"
        names = self.alg.names
        out = []
        for mono, c in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0])):
            factors = []
            i = 0
            while i < len(mono):
                j = i
                while j < len(mono) and mono[j] == mono[i]:
                    j += 1
                p = j - i
                factors.append(names[mono[i]] + (f"^{p}" if p > 1 else ""))
                i = j
            body = "*".join(factors) or "1"
            out.append(f"{c}*{body}" if c != 1 else body)
        return " + ".join(out)


def multiply(a: UeaElement, b: UeaElement) -> UeaElement:
    """PBW normal form of ``a * b``."""
    a._check(b)
    out: dict = {}
    for mono, c in b.terms.items():
        _accumulate(out, _times_mono(a.alg, a.terms, mono), c)
    return UeaElement._raw(a.alg, out)


def _check_word(alg: GradedLieAlgebra, word: Sequence[int]):
    for letter in word:
        if not 1 <= letter <= alg.m:
            raise ValueError(f"word letter {letter} outside 1..{alg.m}")


def from_word(alg: GradedLieAlgebra, word: Sequence[int]) -> UeaElement:
    """``X_{w_1} ... X_{w_k}`` for 1-based generator letters."""
    _check_word(alg, word)
    return UeaElement._raw(alg, _times_mono(alg, {(): Fraction(1)}, [w - 1 for w in word]))


def normal_form_of_words(alg: GradedLieAlgebra, words: Mapping[tuple, object]) -> UeaElement:
    """Normal form of ``sum_w c_w X_w``, sharing work across common prefixes."""
    memo: dict[tuple, dict] = {(): {(): Fraction(1)}}

    def nf(word):
        hit = memo.get(word)
        if hit is None:
            hit = _times_mono(alg, nf(word[:-1]), (word[-1] - 1,))
            memo[word] = hit
        return hit

    out: dict = {}
    for word, c in words.items():
        word = tuple(word)
        _check_word(alg, word)
        if c:
            _accumulate(out, nf(word), Fraction(c))
    return UeaElement._raw(alg, out)


def from_lie(alg: GradedLieAlgebra, vec: Mapping[int, Fraction]) -> UeaElement:
    """Embed a Lie algebra vector ``{index: coeff}`` as a degree-one element."""
    return UeaElement._raw(alg, {(i,): Fraction(c) for i, c in vec.items() if c})


def transpose_word(alg: GradedLieAlgebra, word: Sequence[int]) -> UeaElement:
    """Formal transpose ``(-1)^k X_{w_k} ... X_{w_1}``."""
    return from_word(alg, tuple(reversed(word))) * (-1) ** len(word)


def ad_power(alg: GradedLieAlgebra, ell: int, vec: Mapping[int, Fraction], s: int) -> dict:
    """``(ad X_ell)^s (vec)`` computed in the Lie algebra (ell is 1-based)."""
    cur = dict(vec)
    gen = {ell - 1: Fraction(1)}
    for _ in range(s):
        cur = alg.bracket_vec(gen, cur)
    return cur


def ad_power_expand(alg: GradedLieAlgebra, ell: int, ell2: int, s: int) -> tuple[UeaElement, UeaElement]:
    """Both sides of ``X_l^s X_l' = sum_j C(s,j) (ad X_l)^{s-j}(X_l') X_l^j``.

    The left side is a straight PBW product; the right side uses Lie
    brackets for the ad powers, so the two are computed independently.
    """
    if s < 1:
        raise ValueError("s must be positive")
    lhs = from_word(alg, (ell,) * s + (ell2,))
    rhs = UeaElement.zero(alg)
    x = UeaElement.generator(alg, ell - 1)
    for j in range(s + 1):
        lie = ad_power(alg, ell, {ell2 - 1: Fraction(1)}, s - j)
        if lie:
            rhs = rhs + from_lie(alg, lie) * (x**j) * comb(s, j)
    return lhs, rhs


class CommutatorFactor:
    """``C`` with ``X_l^r X_l' = C X_l`` and its graded decomposition.

    ``parts`` lists ``(lie_vector, s)`` with ``lie_vector`` of weight
    ``r - s``, so ``C = sum parts[i][0] * X_l^s``.
    """

    def __init__(self, alg, ell, ell2, element, parts):
        self.alg = alg
        self.ell = ell
        self.ell2 = ell2
        self.element = element
        self.parts = parts

    def __repr__(self):
        return f"C[{self.ell},{self.ell2}] = {self.element!r}"


def commutator_factor(alg: GradedLieAlgebra, ell: int, ell2: int) -> CommutatorFactor:
    """Factor ``X_l^r X_l' = C X_l`` with ``C`` in g_r + g_{r-1} X_l + ... + g_1 X_l^{r-1}."""
    r = alg.r
    x = UeaElement.generator(alg, ell - 1)
    parts = []
    element = UeaElement.zero(alg)
    for j in range(1, r + 1):
        lie = ad_power(alg, ell, {ell2 - 1: Fraction(1)}, r - j)
        lie = {k: c * comb(r, j) for k, c in lie.items()}
        if lie:
            parts.append((lie, j - 1))
            element = element + from_lie(alg, lie) * x ** (j - 1)
    _verify_factor(alg, ell, ell2, element, parts)
    return CommutatorFactor(alg, ell, ell2, element, parts)


def _verify_factor(alg, ell, ell2, element, parts):
    r = alg.r
    x = UeaElement.generator(alg, ell - 1)
    rebuilt = UeaElement.zero(alg)
    for lie, s in parts:
        for k in lie:
            if alg.weights[k] != r - s:
                raise LieMembershipError(
                    f"C[{ell},{ell2}]: {alg.names[k]} of weight {alg.weights[k]} paired with X_{ell}^{s}"
                )
        rebuilt = rebuilt + from_lie(alg, lie) * x**s
    if rebuilt != element:
        raise LieMembershipError(f"C[{ell},{ell2}] does not match its graded decomposition")
    residual = from_word(alg, (ell,) * r + (ell2,)) - element * x
    if residual:
        raise LieMembershipError(f"X_{ell}^r X_{ell2} - C X_{ell} = {residual!r}")
