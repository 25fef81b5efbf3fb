"""Matrix-valued homogeneous left-invariant operators and their symbols.

An :class:`OperatorMatrix` is ``A(D) = sum_w A^w X_w`` over words ``w`` of a
fixed length, with rational ``dim_out x dim_in`` matrices ``A^w``. Equality
of operators is decided in the enveloping algebra (:func:`to_uea_matrix`),
never on the word level.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod
from typing import Mapping, Sequence

from .lie import GradedLieAlgebra
from .linalg import matmul, nullspace, rank
from .uea import UeaElement, normal_form_of_words

__all__ = [
    "OperatorMatrix",
    "SymbolMatrix",
    "CocancelingVerdict",
    "CancelingVerdict",
    "WitnessSearchError",
    "compose",
    "formal_transpose",
    "to_uea_matrix",
    "is_identically_zero",
    "symmetrize",
    "letter_multiset",
    "check_cocanceling",
    "check_canceling_euclidean",
    "symbol_rank_at",
    "cocanceling_witness_points",
    "random_rational_point",
]

Matrix = tuple[tuple[Fraction, ...], ...]


def _as_matrix(rows) -> Matrix:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def _is_zero_matrix(mat) -> bool:
    return all(not v for row in mat for v in row)


def _mat_add(a, b, scale=1) -> Matrix:
    return tuple(tuple(x + scale * y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def _zeros(rows: int, cols: int) -> Matrix:
    return tuple((Fraction(0),) * cols for _ in range(rows))


class OperatorMatrix:
    """``A(D): C^inf(G; R^dim_in) -> C^inf(G; R^dim_out)`` of homogeneous order."""

    __slots__ = ("alg", "dim_in", "dim_out", "order", "terms")

    def __init__(self, alg: GradedLieAlgebra, dim_in: int, dim_out: int, order: int,
                 terms: Mapping[Sequence[int], Sequence[Sequence]] | None = None):
        if dim_in <= 0 or dim_out <= 0 or order < 0:
            raise ValueError("dimensions must be positive and order nonnegative")
        self.alg = alg
        self.dim_in = dim_in
        self.dim_out = dim_out
        self.order = order
        self.terms: dict[tuple[int, ...], Matrix] = {}
        for word, mat in (terms or {}).items():
            word = tuple(int(w) for w in word)
            if len(word) != order:
                raise ValueError(f"word {word} has length {len(word)}, expected {order}")
            if any(not 1 <= w <= alg.m for w in word):
                raise ValueError(f"word {word} has letters outside 1..{alg.m}")
            mat = _as_matrix(mat)
            if len(mat) != dim_out or any(len(row) != dim_in for row in mat):
                raise ValueError(f"matrix at {word} is not {dim_out}x{dim_in}")
            if word in self.terms:
                mat = _mat_add(self.terms[word], mat)
            if _is_zero_matrix(mat):
                self.terms.pop(word, None)
            else:
                self.terms[word] = mat

    @classmethod
    def from_entries(cls, alg, dim_in, dim_out, order, entries) -> OperatorMatrix:
        """Build from ``(row, col, {word: coeff})`` triples (0-based row/col)."""
        acc: dict[tuple, list[list[Fraction]]] = {}
        for row, col, words in entries:
            for word, c in words.items():
                if not c:
                    continue
                mat = acc.setdefault(tuple(word), [[Fraction(0)] * dim_in for _ in range(dim_out)])
                mat[row][col] += Fraction(c)
        return cls(alg, dim_in, dim_out, order, acc)

    def __repr__(self):
        return (f"OperatorMatrix(order={self.order}, {self.dim_in}->{self.dim_out}, "
                f"{len(self.terms)} words)")

    def __eq__(self, other):
        """Word-level equality (a sufficient, not necessary, operator identity)."""
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        return (self.alg is other.alg and self.dim_in == other.dim_in and self.dim_out == other.dim_out
                and self.order == other.order and self.terms == other.terms)

    def _check_same_shape(self, other):
        if (self.alg is not other.alg or self.dim_in != other.dim_in or self.dim_out != other.dim_out
                or self.order != other.order):
            raise ValueError("operators differ in algebra, dimensions or order")

    def __add__(self, other):
        self._check_same_shape(other)
        terms = dict(self.terms)
        for w, m in other.terms.items():
            terms[w] = _mat_add(terms[w], m) if w in terms else m
        return OperatorMatrix(self.alg, self.dim_in, self.dim_out, self.order, terms)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> OperatorMatrix:
        c = Fraction(c)
        return OperatorMatrix(self.alg, self.dim_in, self.dim_out, self.order,
                              {w: tuple(tuple(c * v for v in row) for row in m) for w, m in self.terms.items()})

    def is_zero_tensor(self) -> bool:
        return not self.terms

    def entry_words(self, row: int, col: int) -> dict[tuple, Fraction]:
        return {w: m[row][col] for w, m in self.terms.items() if m[row][col]}

    def to_json(self) -> dict:
        from .linalg import format_rational

        return {
            "order": self.order,
            "dimV": self.dim_in,
            "dimE": self.dim_out,
            "terms": [
                {"word": list(w), "matrix": [[format_rational(v) for v in row] for row in m]}
                for w, m in sorted(self.terms.items())
            ],
        }

    @classmethod
    def from_json(cls, alg: GradedLieAlgebra, block: Mapping) -> OperatorMatrix:
        from .linalg import parse_rational

        terms: dict = {}
        for t in block["terms"]:
            word = tuple(int(w) for w in t["word"])
            mat = [[parse_rational(v) for v in row] for row in t["matrix"]]
            if word in terms:
                terms[word] = _mat_add(terms[word], _as_matrix(mat))
            else:
                terms[word] = mat
        return cls(alg, int(block["dimV"]), int(block["dimE"]), int(block["order"]), terms)


def compose(L: OperatorMatrix, A: OperatorMatrix) -> OperatorMatrix:
    """``L(D) o A(D)``: words concatenate, matrices multiply."""
    if L.alg is not A.alg:
        raise ValueError("operators over different algebras")
    if L.dim_in != A.dim_out:
        raise ValueError(f"cannot compose: L takes {L.dim_in} components, A produces {A.dim_out}")
    acc: dict[tuple, Matrix] = {}
    for w1, m1 in L.terms.items():
        for w2, m2 in A.terms.items():
            w = w1 + w2
            prod_ = matmul(m1, m2)
            acc[w] = _mat_add(acc[w], prod_) if w in acc else prod_
    return OperatorMatrix(L.alg, A.dim_in, L.dim_out, L.order + A.order, acc)


def formal_transpose(A: OperatorMatrix) -> OperatorMatrix:
    """``A^t(D) = sum (A^w)^t X_w^t`` with ``X_w^t = (-1)^k X_reverse(w)``."""
    sign = (-1) ** A.order
    terms = {tuple(reversed(w)): tuple(tuple(sign * m[i][j] for i in range(A.dim_out)) for j in range(A.dim_in))
             for w, m in A.terms.items()}
    return OperatorMatrix(A.alg, A.dim_out, A.dim_in, A.order, terms)


def to_uea_matrix(A: OperatorMatrix) -> list[list[UeaElement]]:
    """Entrywise normal forms ``sum_w A^w_ij X_w`` (rows = outputs)."""
    return [[normal_form_of_words(A.alg, A.entry_words(i, j)) for j in range(A.dim_in)]
            for i in range(A.dim_out)]


def is_identically_zero(A: OperatorMatrix) -> bool:
    return all(e.is_zero() for row in to_uea_matrix(A) for e in row)


def letter_multiset(word: Sequence[int], m: int) -> tuple[int, ...]:
    beta = [0] * m
    for w in word:
        beta[w - 1] += 1
    return tuple(beta)


@dataclass(frozen=True)
class SymbolMatrix:
    """Symmetrised symbol ``sum_beta B_beta xi^beta`` (matrices ``dim_out x dim_in``)."""

    m: int
    dim_in: int
    dim_out: int
    order: int
    terms: Mapping[tuple[int, ...], Matrix] = field(default_factory=dict)

    def __post_init__(self):
        for beta in self.terms:
            if len(beta) != self.m or sum(beta) != self.order:
                raise ValueError(f"multi-index {beta} is not in I_{self.order}")

    def evaluate(self, xi: Sequence) -> Matrix:
        if len(xi) != self.m:
            raise ValueError(f"point needs {self.m} entries")
        out = [[Fraction(0)] * self.dim_in for _ in range(self.dim_out)]
        for beta, mat in self.terms.items():
            mono = prod((Fraction(x) ** b for x, b in zip(xi, beta)), start=Fraction(1))
            if not mono:
                continue
            for i in range(self.dim_out):
                for j in range(self.dim_in):
                    if mat[i][j]:
                        out[i][j] += mat[i][j] * mono
        return tuple(tuple(r) for r in out)

    def stacked(self) -> list[list[Fraction]]:
        rows = []
        for beta in sorted(self.terms):
            rows.extend(list(r) for r in self.terms[beta])
        return rows

    def is_zero(self) -> bool:
        return not self.terms


def symmetrize(L: OperatorMatrix) -> SymbolMatrix:
    """Group words by letter multiset: ``B_beta = sum_{Sym(w) = beta} L^w``."""
    acc: dict[tuple, Matrix] = {}
    for w, mat in L.terms.items():
        beta = letter_multiset(w, L.alg.m)
        acc[beta] = _mat_add(acc[beta], mat) if beta in acc else mat
    terms = {b: m for b, m in acc.items() if not _is_zero_matrix(m)}
    return SymbolMatrix(L.alg.m, L.dim_in, L.dim_out, L.order, terms)


@dataclass(frozen=True)
class CocancelingVerdict:
    cocanceling: bool
    common_kernel_basis: tuple[tuple[Fraction, ...], ...]
    rank: int

    def __bool__(self):
        return self.cocanceling


def check_cocanceling(S: SymbolMatrix) -> CocancelingVerdict:
    """Cocanceling iff the stacked ``B_beta`` have full column rank."""
    rows = S.stacked()
    if not rows:
        basis = tuple(tuple(Fraction(int(i == j)) for j in range(S.dim_in)) for i in range(S.dim_in))
        return CocancelingVerdict(False, basis, 0)
    kernel = nullspace(rows, S.dim_in)
    return CocancelingVerdict(not kernel, tuple(tuple(v) for v in kernel), S.dim_in - len(kernel))


def symbol_rank_at(S: SymbolMatrix, xi: Sequence) -> int:
    return rank(S.evaluate(xi))


def random_rational_point(rng: random.Random, m: int, bound: int = 997) -> tuple[Fraction, ...]:
    """Nonzero point with coordinates ``p/q``, ``|p| <= bound``, ``1 <= q <= bound``."""
    while True:
        pt = tuple(Fraction(rng.randint(-bound, bound), rng.randint(1, bound)) for _ in range(m))
        if any(pt):
            return pt


@dataclass(frozen=True)
class CancelingVerdict:
    certified: bool
    candidate_basis: tuple[tuple[Fraction, ...], ...]
    points: tuple[tuple[Fraction, ...], ...]

    @property
    def status(self) -> str:
        return "canceling_certified" if self.certified else "not_certified_with_candidate"


def _left_kernel(mat) -> list[list[Fraction]]:
    """Rows ``y`` with ``y^T mat = 0``: equations cutting out the column space."""
    rows = len(mat)
    cols = len(mat[0]) if mat else 0
    t = [[mat[i][j] for i in range(rows)] for j in range(cols)]
    if not t:
        return [[Fraction(int(i == j)) for j in range(rows)] for i in range(rows)]
    return nullspace(t, rows)


def check_canceling_euclidean(A, sample_budget: int = 8, seed: int = 0) -> CancelingVerdict:
    """One-sided test that ``A(xi)[V]`` over ``xi != 0`` intersect trivially.

    Images are intersected at the coordinate axes and then at seeded random
    rational points. Reaching ``{0}`` certifies cancellation, since finitely
    many images already over-approximate the full intersection. Otherwise,
    once the intersection is unchanged for ``sample_budget`` consecutive
    random points, it is returned as an uncertified candidate.
    """
    if isinstance(A, OperatorMatrix):
        if not A.alg.is_abelian:
            raise ValueError("cancellation is only defined on an abelian group")
        A = symmetrize(A)
    m, dim = A.m, A.dim_out
    equations: list[list[Fraction]] = []
    current = [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
    points: list[tuple] = []
    rng = random.Random(seed)

    def intersect(xi):
        nonlocal current
        points.append(tuple(xi))
        equations.extend(_left_kernel(A.evaluate(xi)))
        new = nullspace(equations, dim) if equations else current
        changed = len(new) != len(current)
        current = new
        return changed

    for i in range(m):
        intersect(tuple(Fraction(int(i == j)) for j in range(m)))
        if not current:
            return CancelingVerdict(True, (), tuple(points))
    stable = 0
    while stable < sample_budget:
        if intersect(random_rational_point(rng, m)):
            stable = 0
        else:
            stable += 1
        if not current:
            return CancelingVerdict(True, (), tuple(points))
    return CancelingVerdict(False, tuple(tuple(v) for v in current), tuple(points))


class WitnessSearchError(RuntimeError):
    pass


def cocanceling_witness_points(S: SymbolMatrix, center: Sequence, radius, seed: int = 0,
                               budget: int = 64) -> list[tuple[Fraction, ...]]:
    """Rational points in an open ball whose symbol kernels meet only in 0.

    Points are drawn at random; a point is kept when it shrinks the running
    kernel intersection, which is recomputed exactly after every draw.
    """
    if not check_cocanceling(S):
        raise ValueError("symbol is not cocanceling")
    center = tuple(Fraction(c) for c in center)
    radius = Fraction(radius)
    if radius <= 0 or len(center) != S.m:
        raise ValueError("need a nonempty ball in R^m")
    rng = random.Random(seed)
    rows: list = []
    kept: list = []
    kernel_dim = S.dim_in
    for _ in range(budget):
        while True:
            v = tuple(Fraction(rng.randint(-997, 997), 997) for _ in range(S.m))
            if sum(c * c for c in v) < 1:
                break
        xi = tuple(c + radius * d for c, d in zip(center, v))
        trial = rows + [list(r) for r in S.evaluate(xi)]
        dim = len(nullspace(trial, S.dim_in))
        if dim < kernel_dim:
            rows, kernel_dim = trial, dim
            kept.append(xi)
            if dim == 0:
                return kept
    raise WitnessSearchError(f"no witness set after {budget} draws (kernel dimension {kernel_dim})")
