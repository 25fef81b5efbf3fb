"""Stratified nilpotent Lie algebras and their groups in exponential coordinates.

A :class:`GradedLieAlgebra` stores exact structure constants over a basis
ordered weight-major (all of layer 1, then layer 2, ...). The group law is
the Baker-Campbell-Hausdorff product, computed once per algebra from the
Dynkin series and cached as a polynomial map.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Mapping, Sequence

from .linalg import RowEchelon, parse_rational, solve
from .poly import Poly

__all__ = [
    "AlgebraInvariantError",
    "GradedLieAlgebra",
    "make_preset",
    "abelian",
    "heisenberg",
    "free_nilpotent",
    "custom",
    "parse_group",
    "algebra_from_json",
    "witt_dimension",
    "hall_basis",
    "bracket",
    "dilate",
    "homogeneous_norm",
    "homogeneous_norm_power",
    "group_multiply",
    "group_inverse",
    "bch_polynomials",
    "dynkin_coefficients",
]


class AlgebraInvariantError(ValueError):
    """A structure-constant table violates a Lie algebra or grading axiom."""

    def __init__(self, invariant: str, witness, detail: str = ""):
        self.invariant = invariant
        self.witness = witness
        msg = f"{invariant} violated at {witness}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class GradedLieAlgebra:
    """Stratified Lie algebra with exact structure constants.

    Parameters
    ----------
    layer_dims
        Dimensions of the layers g_1, ..., g_r.
    brackets
        Map ``(a, b) -> {c: coeff}`` over 0-based basis indices. Only one of
        ``(a, b)``/``(b, a)`` needs to be given; if both are, they must be
        negatives of each other.
    names
        Optional basis labels.
    """

    def __init__(
        self,
        layer_dims: Sequence[int],
        brackets: Mapping[tuple[int, int], Mapping[int, object]],
        names: Sequence[str] | None = None,
        label: str = "custom",
        basis_convention: str = "weight-major, given order within layers",
    ):
        layer_dims = tuple(int(d) for d in layer_dims)
        if not layer_dims or any(d <= 0 for d in layer_dims):
            raise AlgebraInvariantError("layer dimensions", layer_dims, "must be positive")
        self.layer_dims = layer_dims
        self.dim = sum(layer_dims)
        self.weights = tuple(j + 1 for j, d in enumerate(layer_dims) for _ in range(d))
        self.m = layer_dims[0]
        self.r = len(layer_dims)
        self.Q = sum((j + 1) * d for j, d in enumerate(layer_dims))
        self.label = label
        self.basis_convention = basis_convention
        if names is None:
            names = [f"e{i + 1}" for i in range(self.dim)]
        if len(names) != self.dim:
            raise ValueError("one name per basis element required")
        self.names = tuple(names)
        self._table = self._build_table(brackets)
        self._cache: dict = {}
        self._validate()

    # -- construction -------------------------------------------------
    def _build_table(self, brackets):
        table: dict[tuple[int, int], tuple[tuple[int, Fraction], ...]] = {}
        given: dict[tuple[int, int], dict[int, Fraction]] = {}
        for (a, b), coeffs in brackets.items():
            if not (0 <= a < self.dim and 0 <= b < self.dim):
                raise AlgebraInvariantError("index range", (a, b))
            vec = {}
            for c, v in coeffs.items():
                if not 0 <= c < self.dim:
                    raise AlgebraInvariantError("index range", (a, b, c))
                v = parse_rational(v) if not isinstance(v, Fraction) else v
                if v:
                    vec[c] = v
            if a == b:
                if vec:
                    raise AlgebraInvariantError("antisymmetry", (a, a), "[e,e] must vanish")
                continue
            given[(a, b)] = vec
        for (a, b), vec in given.items():
            rev = given.get((b, a))
            neg = {c: -v for c, v in vec.items()}
            if rev is not None and rev != neg:
                raise AlgebraInvariantError("antisymmetry", (a, b), "[a,b] != -[b,a]")
            if vec:
                table[(a, b)] = tuple(sorted(vec.items()))
                table[(b, a)] = tuple(sorted(neg.items()))
        return table

    def _validate(self):
        w = self.weights
        for (a, b), vec in self._table.items():
            for c, _ in vec:
                if w[c] != w[a] + w[b]:
                    raise AlgebraInvariantError(
                        "grading", (a, b), f"[e{a + 1},e{b + 1}] has support on weight {w[c]}"
                    )
        for a, b, c in itertools.combinations(range(self.dim), 3):
            if w[a] + w[b] + w[c] > self.r:
                continue
            total = _add(
                _add(self.bracket_vec(self.basis_vec(a), self.bracket_basis(b, c)),
                     self.bracket_vec(self.basis_vec(b), self.bracket_basis(c, a))),
                self.bracket_vec(self.basis_vec(c), self.bracket_basis(a, b)),
            )
            if total:
                raise AlgebraInvariantError("Jacobi identity", (a, b, c))
        # generation: iterated brackets of layer 1 span every layer
        span = [{i: Fraction(1)} for i in range(self.m)]
        for j in range(1, self.r):
            ech = RowEchelon()
            new = []
            for g in range(self.m):
                for v in span:
                    u = self.bracket_vec({g: Fraction(1)}, v)
                    if u and ech.add(u):
                        new.append(u)
            if ech.rank != self.layer_dims[j]:
                raise AlgebraInvariantError(
                    "generation", j + 1, f"brackets of layer 1 span {ech.rank} of {self.layer_dims[j]}"
                )
            span = new

    # -- basic queries -------------------------------------------------
    def basis_vec(self, i: int) -> dict[int, Fraction]:
        return {i: Fraction(1)}

    def bracket_basis(self, a: int, b: int) -> dict[int, Fraction]:
        return dict(self._table.get((a, b), ()))

    def bracket_table(self, a: int, b: int) -> tuple[tuple[int, Fraction], ...]:
        return self._table.get((a, b), ())

    def bracket_vec(self, u: Mapping[int, Fraction], v: Mapping[int, Fraction]) -> dict[int, Fraction]:
        """Bracket of sparse vectors ``{index: coeff}``."""
        out: dict[int, Fraction] = {}
        for a, ca in u.items():
            for b, cb in v.items():
                for c, k in self._table.get((a, b), ()):
                    val = out.get(c, 0) + ca * cb * k
                    if val:
                        out[c] = val
                    else:
                        out.pop(c, None)
        return out

    @property
    def is_abelian(self) -> bool:
        return not self._table

    def layer_slice(self, j: int) -> slice:
        """Coordinates of layer ``j`` (1-based)."""
        start = sum(self.layer_dims[: j - 1])
        return slice(start, start + self.layer_dims[j - 1])

    def nonzero_brackets(self):
        return sorted((a, b, dict(v)) for (a, b), v in self._table.items() if a < b)

    def describe(self) -> dict:
        return {
            "label": self.label,
            "layer_dims": list(self.layer_dims),
            "m": self.m,
            "r": self.r,
            "Q": self.Q,
            "basis": list(self.names),
            "basis_convention": self.basis_convention,
        }

    def __repr__(self):
        return f"GradedLieAlgebra({self.label}, layer_dims={self.layer_dims})"


def _add(u: dict, v: dict) -> dict:
    out = dict(u)
    for k, c in v.items():
        val = out.get(k, 0) + c
        if val:
            out[k] = val
        else:
            out.pop(k, None)
    return out


# -- presets -------------------------------------------------------------

def abelian(n: int) -> GradedLieAlgebra:
    return GradedLieAlgebra((n,), {}, names=[f"X{i + 1}" for i in range(n)], label=f"abelian:{n}",
                            basis_convention="X1..Xn")


def heisenberg(n: int) -> GradedLieAlgebra:
    """Heisenberg algebra of dimension 2n+1: [X_i, X_{n+i}] = T."""
    if n < 1:
        raise ValueError("heisenberg needs n >= 1")
    names = [f"X{i + 1}" for i in range(2 * n)] + ["T"]
    brackets = {(i, n + i): {2 * n: 1} for i in range(n)}
    return GradedLieAlgebra((2 * n, 1), brackets, names=names, label=f"heisenberg:{n}",
                            basis_convention="X1..X2n, T with [X_i, X_{n+i}] = T")


def witt_dimension(m: int, n: int) -> int:
    """Dimension of the degree-n part of the free Lie algebra on m generators."""
    total = 0
    for d in range(1, n + 1):
        if n % d == 0:
            total += _mobius(d) * m ** (n // d)
    return total // n


def _mobius(n: int) -> int:
    result, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            result = -result
        p += 1
    return -result if n > 1 else result


def hall_basis(m: int, r: int) -> list:
    """Hall basis of the free nilpotent Lie algebra, weight-major.

    Elements are generator indices ``0..m-1`` or pairs ``(a, b)`` of earlier
    element indices standing for ``[h_a, h_b]``; a pair is admitted when
    ``a < b`` and, if ``h_b = [h_c, h_d]``, also ``c <= a``. Within a
    degree, elements are ordered by ``(a, b)``.
    """
    elems: list = list(range(m))
    degree = [1] * m
    for n in range(2, r + 1):
        new = []
        for b in range(len(elems)):
            for a in range(b):
                if degree[a] + degree[b] != n:
                    continue
                hb = elems[b]
                if isinstance(hb, tuple) and hb[0] > a:
                    continue
                new.append((a, b))
        new.sort()
        elems.extend(new)
        degree.extend([n] * len(new))
    return elems


def _assoc_mul(p: dict, q: dict, cap: int) -> dict:
    out: dict = {}
    for w1, c1 in p.items():
        for w2, c2 in q.items():
            if len(w1) + len(w2) > cap:
                continue
            w = w1 + w2
            v = out.get(w, 0) + c1 * c2
            if v:
                out[w] = v
            else:
                out.pop(w, None)
    return out


def free_nilpotent(m: int, r: int) -> GradedLieAlgebra:
    """Free nilpotent Lie algebra of rank m and step r on a Hall basis.

    Structure constants are obtained by expanding Hall elements in the free
    associative algebra and re-expressing each bracket in the Hall basis of
    its degree (exact linear solve; the Hall elements of one degree are
    linearly independent).
    """
    if m < 1 or r < 1:
        raise ValueError("free nilpotent algebra needs m, r >= 1")
    elems = hall_basis(m, r)
    layer_dims = [witt_dimension(m, n) for n in range(1, r + 1)]
    expansions: list[dict] = []
    degree: list[int] = []
    names: list[str] = []
    for e in elems:
        if isinstance(e, int):
            expansions.append({(e,): Fraction(1)})
            degree.append(1)
            names.append(f"X{e + 1}")
        else:
            a, b = e
            pa, pb = expansions[a], expansions[b]
            ab = _assoc_mul(pa, pb, r)
            ba = _assoc_mul(pb, pa, r)
            expansions.append(_add(ab, {w: -c for w, c in ba.items()}))
            degree.append(degree[a] + degree[b])
            names.append(f"[{names[a]},{names[b]}]")
    counts = [degree.count(n) for n in range(1, r + 1)]
    if counts != layer_dims:
        raise AlgebraInvariantError("Hall enumeration", counts, f"Witt dimensions are {layer_dims}")
    by_degree: dict[int, list[int]] = {}
    for i, d in enumerate(degree):
        by_degree.setdefault(d, []).append(i)
    brackets = {}
    for a in range(len(elems)):
        for b in range(a + 1, len(elems)):
            n = degree[a] + degree[b]
            if n > r:
                continue
            target = _add(_assoc_mul(expansions[a], expansions[b], r),
                          {w: -c for w, c in _assoc_mul(expansions[b], expansions[a], r).items()})
            if not target:
                continue
            cands = by_degree[n]
            words = sorted({w for i in cands for w in expansions[i]} | set(target))
            rows = [({i: expansions[i].get(w, 0) for i in cands if expansions[i].get(w)}, target.get(w, 0))
                    for w in words]
            sol = solve(rows)
            if sol is None:
                raise AlgebraInvariantError("Hall rewriting", (a, b), "bracket outside Hall span")
            brackets[(a, b)] = sol
    return GradedLieAlgebra(layer_dims, brackets, names=names, label=f"free:{m},{r}",
                            basis_convention="Hall basis, weight-major, [h_a,h_b] with a<b and left factor of h_b <= a")


def custom(layer_dims: Sequence[int], brackets: Sequence, names=None) -> GradedLieAlgebra:
    """Algebra from raw constants ``[[a, b, [c_1, ..., c_n]], ...]`` (1-based a, b)."""
    dim = sum(layer_dims)
    table = {}
    for entry in brackets:
        a, b, coeffs = entry
        a, b = int(a) - 1, int(b) - 1
        if len(coeffs) != dim:
            raise AlgebraInvariantError("coefficient length", (a + 1, b + 1), f"expected {dim} entries")
        vec = {c: parse_rational(v) for c, v in enumerate(coeffs)}
        if (a, b) in table:
            raise AlgebraInvariantError("duplicate bracket", (a + 1, b + 1))
        table[(a, b)] = vec
    return GradedLieAlgebra(layer_dims, table, names=names, label="custom")


def make_preset(name: str, *params: int, constants: Mapping | None = None) -> GradedLieAlgebra:
    """Build ``abelian(n)``, ``heisenberg(n)``, ``free(m, r)`` or ``custom``."""
    if name == "abelian":
        (n,) = params
        return abelian(n)
    if name == "heisenberg":
        (n,) = params
        return heisenberg(n)
    if name == "free":
        m, r = params
        return free_nilpotent(m, r)
    if name == "custom":
        if constants is None:
            raise ValueError("custom preset needs raw constants")
        return custom(constants["layer_dims"], constants.get("brackets", []), constants.get("names"))
    raise ValueError(f"unknown preset {name!r}")


def parse_group(descriptor: str) -> GradedLieAlgebra:
    """Parse ``heisenberg:1``, ``abelian:3`` or ``free:2,3``."""
    name, _, rest = descriptor.partition(":")
    params = [int(p) for p in rest.split(",") if p.strip()] if rest else []
    return make_preset(name.strip(), *params)


def algebra_from_json(block: Mapping) -> GradedLieAlgebra:
    if "custom" in block:
        return make_preset("custom", constants=block["custom"])
    preset = block.get("preset")
    if preset in ("heisenberg", "abelian"):
        return make_preset(preset, int(block["n"]))
    if preset == "free":
        return make_preset("free", int(block["m"]), int(block["r"]))
    raise ValueError(f"unrecognised group block {dict(block)!r}")


# -- vectors and the group -----------------------------------------------

def _check_len(alg: GradedLieAlgebra, *vs):
    for v in vs:
        if len(v) != alg.dim:
            raise ValueError(f"expected {alg.dim} coordinates, got {len(v)}")


def bracket(alg: GradedLieAlgebra, u: Sequence, v: Sequence) -> tuple:
    _check_len(alg, u, v)
    out = [Fraction(0)] * alg.dim
    for a, ca in enumerate(u):
        if not ca:
            continue
        for b, cb in enumerate(v):
            if not cb:
                continue
            for c, k in alg.bracket_table(a, b):
                out[c] += ca * cb * k
    return tuple(out)


def dilate(alg: GradedLieAlgebra, lam, x: Sequence) -> tuple:
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    _check_len(alg, x)
    return tuple(lam**w * xi for w, xi in zip(alg.weights, x))


def homogeneous_norm_power(alg: GradedLieAlgebra, x: Sequence):
    """The (2 r!)-th power of the homogeneous norm; exact for rational input."""
    _check_len(alg, x)
    rf = math.factorial(alg.r)
    total = 0
    for j in range(1, alg.r + 1):
        sq = sum(xi * xi for xi in x[alg.layer_slice(j)])
        total += sq ** (rf // j)
    return total


def homogeneous_norm(alg: GradedLieAlgebra, x: Sequence) -> float:
    return float(homogeneous_norm_power(alg, x)) ** (1.0 / (2 * math.factorial(alg.r)))


def dynkin_coefficients(r: int) -> dict[tuple[int, ...], Fraction]:
    """Coefficients of right-nested brackets in the Dynkin series up to length r.

    Keys are words over ``{0, 1}`` (0 for the left factor, 1 for the right);
    the word ``w`` stands for ``[w_1, [w_2, ..., [w_{n-1}, w_n]]]``.
    """
    coeffs: dict[tuple[int, ...], Fraction] = {}
    for total in range(1, r + 1):
        for n in range(1, total + 1):
            for parts in _compositions(total, n):
                for split in itertools.product(*[range(p + 1) for p in parts]):
                    word: tuple[int, ...] = ()
                    denom = total
                    for p, rr in zip(parts, split):
                        ss = p - rr
                        word += (0,) * rr + (1,) * ss
                        denom *= math.factorial(rr) * math.factorial(ss)
                    if len(word) >= 2 and word[-1] == word[-2]:
                        continue
                    c = Fraction((-1) ** (n - 1), n * denom)
                    v = coeffs.get(word, 0) + c
                    if v:
                        coeffs[word] = v
                    else:
                        coeffs.pop(word, None)
    return coeffs


def _compositions(total: int, n: int):
    if n == 1:
        yield (total,)
        return
    for first in range(1, total - n + 2):
        for rest in _compositions(total - first, n - 1):
            yield (first,) + rest


def _poly_bracket(alg: GradedLieAlgebra, u: list, v: list, nvars: int) -> list:
    out = [Poly(nvars) for _ in range(alg.dim)]
    for (a, b), vec in alg._table.items():
        if u[a] and v[b]:
            prod = u[a] * v[b]
            for c, k in vec:
                out[c] = out[c] + prod * k
    return out


def bch_polynomials(alg: GradedLieAlgebra) -> tuple[Poly, ...]:
    """Coordinates of ``log(exp x exp y)`` as polynomials in ``(x, y)``.

    Variables ``0..dim-1`` are the left factor, ``dim..2dim-1`` the right.
    """
    if "bch" in alg._cache:
        return alg._cache["bch"]
    n = alg.dim
    nv = 2 * n
    X = [Poly.variable(nv, i) for i in range(n)]
    Y = [Poly.variable(nv, n + i) for i in range(n)]
    z = [Poly(nv) for _ in range(n)]
    memo: dict[tuple[int, ...], list] = {}

    def nested(word):
        if word in memo:
            return memo[word]
        if len(word) == 1:
            val = X if word[0] == 0 else Y
        else:
            val = _poly_bracket(alg, X if word[0] == 0 else Y, nested(word[1:]), nv)
        memo[word] = val
        return val

    for word, c in sorted(dynkin_coefficients(alg.r).items()):
        vec = nested(word)
        for k in range(n):
            if vec[k]:
                z[k] = z[k] + vec[k] * c
    result = tuple(z)
    alg._cache["bch"] = result
    return result


def group_multiply(alg: GradedLieAlgebra, x: Sequence, y: Sequence) -> tuple:
    """Group product in exponential coordinates (exact for rational input)."""
    _check_len(alg, x, y)
    point = tuple(x) + tuple(y)
    return tuple(p(point) if p else 0 * point[0] for p in bch_polynomials(alg))


def group_inverse(alg: GradedLieAlgebra, x: Sequence) -> tuple:
    _check_len(alg, x)
    return tuple(-xi for xi in x)
