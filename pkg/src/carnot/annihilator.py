"""Compatible annihilators ``L(D)`` with ``L(D) o A(D) = 0`` and cocanceling symbol.

Three routes are provided: the closed-form ``L = M o L0 - N`` for the
gradient, higher-order gradient and Korn operators; a generic exact solver
for ``N`` given ``A``, ``L0`` and ``M``; and a degree-bounded search over the
whole solution space of ``L o A = 0``. Every route returns an
:class:`AnnihilatorCertificate` whose checks can be re-run from the stored
operators.

Bracket expressions are expanded into words over the generators as soon as
they are built, so ``Sym`` is always taken at the word level.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .lie import GradedLieAlgebra
from .linalg import solve, sparse_nullspace
from .operators import (
    CocancelingVerdict,
    OperatorMatrix,
    check_cocanceling,
    compose,
    letter_multiset,
    symbol_rank_at,
    symmetrize,
    to_uea_matrix,
)
from .uea import UeaElement, commutator_factor, from_word, normal_form_of_words

__all__ = [
    "CertificateError",
    "AnnihilatorCertificate",
    "ClosedForm",
    "KornReductionReport",
    "parse_example",
    "example_operator",
    "wedge_pairs",
    "korn_pairs",
    "closed_form_annihilator",
    "solve_N",
    "annihilator_space",
    "find_annihilator",
    "korn_reduction_check",
]


class CertificateError(AssertionError):
    """A constructed certificate failed one of its exact checks."""


# -- word tensors -----------------------------------------------------------
# A tensor is a dict mapping a word (tuple of 1-based letters) to a Fraction.

def _tword(*letters) -> dict:
    return {tuple(letters): Fraction(1)}


def _tadd(p: dict, q: dict, scale=1) -> dict:
    out = dict(p)
    for w, c in q.items():
        v = out.get(w, 0) + scale * c
        if v:
            out[w] = v
        else:
            out.pop(w, None)
    return out


def _tmul(p: dict, q: dict) -> dict:
    out: dict = {}
    for w1, c1 in p.items():
        for w2, c2 in q.items():
            w = w1 + w2
            v = out.get(w, 0) + c1 * c2
            if v:
                out[w] = v
            else:
                out.pop(w, None)
    return out


def _tbracket(p: dict, q: dict) -> dict:
    return _tadd(_tmul(p, q), _tmul(q, p), -1)


def _tscale(p: dict, c) -> dict:
    c = Fraction(c)
    return {w: v * c for w, v in p.items()} if c else {}


def _nested(outer: dict, inner: dict, s: int) -> dict:
    """``[outer, [outer, ..., inner]]`` with ``s`` applications of ``ad outer``."""
    cur = inner
    for _ in range(s):
        cur = _tbracket(outer, cur)
    return cur


# -- example operators -------------------------------------------------------

def wedge_pairs(m: int) -> list[tuple[int, int]]:
    """Basis ``e^i ^ e^j`` (1-based, i < j) of the target of ``L0``."""
    return [(i, j) for i in range(1, m + 1) for j in range(i + 1, m + 1)]


def korn_pairs(m: int) -> list[tuple[int, int]]:
    """Basis ``e^{ij}`` (1-based, i <= j) of symmetric 2-tensors."""
    return [(i, j) for i in range(1, m + 1) for j in range(i, m + 1)]


def parse_example(example: str) -> tuple[str, int]:
    """``"gradient"`` -> (gradient, 1); ``"powers:3"`` -> (powers, 3); ``"korn"`` -> (korn, 1)."""
    name, _, rest = example.partition(":")
    name = name.strip()
    if name == "gradient":
        return name, 1
    if name == "powers":
        k = int(rest) if rest else 1
        if k < 1:
            raise ValueError("powers needs k >= 1")
        return name, k
    if name == "korn":
        return name, 1
    raise ValueError(f"unknown example {example!r}")


def example_operator(example: str, alg: GradedLieAlgebra) -> OperatorMatrix:
    name, k = parse_example(example)
    m = alg.m
    if name in ("gradient", "powers"):
        entries = [(j - 1, 0, _tword(*(j,) * k)) for j in range(1, m + 1)]
        return OperatorMatrix.from_entries(alg, 1, m, k, entries)
    if m < 2:
        raise ValueError("the Korn operator needs m >= 2")
    pairs = korn_pairs(m)
    entries = []
    for row, (i, j) in enumerate(pairs):
        entries.append((row, j - 1, _tword(i)))
        entries.append((row, i - 1, _tword(j)))
    return OperatorMatrix.from_entries(alg, m, len(pairs), 1, entries)


# -- certificates ------------------------------------------------------------

@dataclass
class AnnihilatorCertificate:
    L: OperatorMatrix
    A: OperatorMatrix
    residual: list
    cocanceling: CocancelingVerdict
    provenance: dict

    @property
    def residual_zero(self) -> bool:
        return all(e.is_zero() for row in self.residual for e in row)

    @property
    def ok(self) -> bool:
        return self.residual_zero and self.cocanceling.cocanceling

    def first_nonzero_residual(self):
        for i, row in enumerate(self.residual):
            for j, e in enumerate(row):
                if e:
                    return (i, j, e)
        return None

    def verify(self) -> bool:
        """Recompute both checks from ``L`` and ``A``."""
        res = to_uea_matrix(compose(self.L, self.A))
        zero = all(e.is_zero() for row in res for e in row)
        return zero and check_cocanceling(symmetrize(self.L)).cocanceling

    def to_json(self) -> dict:
        return {
            "provenance": self.provenance,
            "order": self.L.order,
            "dimF": self.L.dim_out,
            "residual_zero": self.residual_zero,
            "cocanceling": self.cocanceling.cocanceling,
            "symbol_rank": self.cocanceling.rank,
            "L": self.L.to_json(),
        }


def certify(L: OperatorMatrix, A: OperatorMatrix, provenance: dict) -> AnnihilatorCertificate:
    residual = to_uea_matrix(compose(L, A))
    return AnnihilatorCertificate(L, A, residual, check_cocanceling(symmetrize(L)), provenance)


@dataclass
class ClosedForm:
    example: str
    A: OperatorMatrix
    L0: OperatorMatrix
    M: OperatorMatrix
    N: OperatorMatrix
    L: OperatorMatrix
    certificate: AnnihilatorCertificate
    sym_N_zero: bool
    M_rank_at_xi0: int
    L0_cocanceling: bool
    ML0_cocanceling: bool
    xi0: tuple = field(default=())

    @property
    def M_full_rank(self) -> bool:
        return self.M_rank_at_xi0 == self.M.dim_in

    @property
    def ok(self) -> bool:
        return self.certificate.ok and self.sym_N_zero and self.M_full_rank

    def summary(self) -> dict:
        return {
            "example": self.example,
            "orders": {"A": self.A.order, "L0": self.L0.order, "M": self.M.order,
                       "N": self.N.order, "L": self.L.order},
            "residual_zero": self.certificate.residual_zero,
            "sym_N_zero": self.sym_N_zero,
            "M_rank_at_xi0": self.M_rank_at_xi0,
            "L0_cocanceling": self.L0_cocanceling,
            "L_cocanceling": self.certificate.cocanceling.cocanceling,
            "ok": self.ok,
        }


def _closed_form_parts(example: str, alg: GradedLieAlgebra):
    name, k = parse_example(example)
    m, r = alg.m, alg.r
    if m < 2:
        raise ValueError("closed-form annihilators need m >= 2")
    F = wedge_pairs(m)
    nF = len(F)
    A = example_operator(example, alg)
    if name in ("gradient", "powers"):
        # L0 f = X_i^k f_j - X_j^k f_i ; M g = X_j^{k^2 r} g_ij
        L0 = OperatorMatrix.from_entries(alg, m, nF, k, [
            e for row, (i, j) in enumerate(F)
            for e in ((row, j - 1, _tword(*(i,) * k)), (row, i - 1, _tscale(_tword(*(j,) * k), -1)))
        ])
        M = OperatorMatrix.from_entries(alg, nF, nF, k * k * r,
                                        [(row, row, _tword(*(j,) * (k * k * r))) for row, (i, j) in enumerate(F)])
        n_entries = []
        for row, (i, j) in enumerate(F):
            y = _tword(*(j,) * k)
            b = _tbracket(_tword(*(i,) * k), y)  # one bracket
            total: dict = {}
            for s in range(1, k * r + 1):
                total = _tadd(total, _tmul(_tword(*(j,) * (k * (k * r - s))), b))
                b = _tbracket(y, b)
            n_entries.append((row, j - 1, total))
        N = OperatorMatrix.from_entries(alg, m, nF, k * (k * r + 1), n_entries)
        return A, L0, M, N
    # Korn
    E = korn_pairs(m)
    col = {p: c for c, p in enumerate(E)}
    half = Fraction(1, 2)
    a = r * (2 * r + 2)
    l0_entries = []
    for row, (i, j) in enumerate(F):
        l0_entries.append((row, col[(j, j)], _tscale(_tword(i, i), half)))
        l0_entries.append((row, col[(i, i)], _tscale(_tword(j, j), half)))
        l0_entries.append((row, col[(i, j)], _tscale(_tword(i, j), -1)))
    L0 = OperatorMatrix.from_entries(alg, len(E), nF, 2, l0_entries)
    M = OperatorMatrix.from_entries(alg, nF, nF, r * (2 * r + 4),
                                    [(row, row, _tword(*((i,) * a + (j,) * (2 * r)))) for row, (i, j) in enumerate(F)])
    n_entries = []
    for row, (i, j) in enumerate(F):
        xi, xj = _tword(i), _tword(j)
        # X_i^a X_j^{2r-s} [X_j, ..., X_i [X_i, X_j]] acting on f_jj / 2
        p = _tmul(xi, _tbracket(xi, xj))
        first: dict = {}
        for s in range(1, 2 * r + 1):
            first = _tadd(first, _tmul(_tword(*((i,) * a + (j,) * (2 * r - s))), p))
            p = _tbracket(xj, p)
        # X_i^{a-s} [X_i, ..., X_j^{2r} [X_j^2, X_i]] acting on f_ii / 2
        q = _tmul(_tword(*(j,) * (2 * r)), _tbracket(_tword(j, j), xi))
        second: dict = {}
        for s in range(1, a + 1):
            second = _tadd(second, _tmul(_tword(*(i,) * (a - s)), q))
            q = _tbracket(xi, q)
        n_entries.append((row, col[(j, j)], _tscale(first, half)))
        n_entries.append((row, col[(i, i)], _tscale(second, half)))
    N = OperatorMatrix.from_entries(alg, len(E), nF, r * (2 * r + 4) + 2, n_entries)
    return A, L0, M, N


def closed_form_annihilator(example: str, alg: GradedLieAlgebra) -> ClosedForm:
    """Build ``L0``, ``M``, ``N`` and certify ``L = M o L0 - N``.

    Raises :class:`CertificateError` naming the first failing check.
    """
    A, L0, M, N = _closed_form_parts(example, alg)
    L = compose(M, L0) - N
    cert = certify(L, A, {"route": "closed_form", "example": example, "group": alg.label})
    xi0 = (Fraction(1),) * alg.m
    sym_n_zero = symmetrize(N).is_zero()
    m_rank = symbol_rank_at(symmetrize(M), xi0)
    l0_cocan = check_cocanceling(symmetrize(L0)).cocanceling
    ml0_cocan = check_cocanceling(symmetrize(compose(M, L0))).cocanceling
    result = ClosedForm(example, A, L0, M, N, L, cert, sym_n_zero, m_rank, l0_cocan, ml0_cocan, xi0)
    if m_rank == M.dim_in and l0_cocan and not ml0_cocan:
        raise CertificateError("Sym(M)(xi0) injective and Sym(L0) cocanceling, yet Sym(M o L0) is not")
    if not cert.residual_zero:
        i, j, e = cert.first_nonzero_residual()
        raise CertificateError(f"{example}: residual entry ({i},{j}) = {e!r}")
    if not sym_n_zero:
        raise CertificateError(f"{example}: Sym(N) != 0")
    if m_rank != M.dim_in:
        raise CertificateError(f"{example}: Sym(M)(1,...,1) has rank {m_rank} < {M.dim_in}")
    if not cert.cocanceling.cocanceling:
        raise CertificateError(f"{example}: Sym(L) not cocanceling, kernel {cert.cocanceling.common_kernel_basis}")
    return result


# -- generic solvers ---------------------------------------------------------

def _all_words(m: int, length: int):
    return itertools.product(range(1, m + 1), repeat=length)


def _column_images(A: OperatorMatrix, length: int) -> dict:
    """For each unknown ``(word, e)``: normal forms of ``X_word A_{e, v}`` keyed by ``(v, monomial)``."""
    alg = A.alg
    memo_words: dict = {}
    images = {}
    for lam in _all_words(alg.m, length):
        for e in range(A.dim_out):
            eq: dict = {}
            for v in range(A.dim_in):
                words = {}
                for mu, mat in A.terms.items():
                    c = mat[e][v]
                    if c:
                        words[lam + mu] = c
                if not words:
                    continue
                for mono, c in _nf_cached(alg, words, memo_words).items():
                    eq[(v, mono)] = c
            images[(lam, e)] = eq
    return images


def _nf_cached(alg, words: dict, memo: dict) -> dict:
    out: dict = {}
    for w, c in words.items():
        hit = memo.get(w)
        if hit is None:
            hit = normal_form_of_words(alg, {w: 1}).terms
            memo[w] = hit
        for mono, v in hit.items():
            val = out.get(mono, 0) + c * v
            if val:
                out[mono] = val
            else:
                out.pop(mono, None)
    return out


def _transpose_columns(images: dict) -> dict:
    rows: dict = {}
    for unknown, col in images.items():
        for eq, c in col.items():
            rows.setdefault(eq, {})[unknown] = c
    return rows


def solve_N(A: OperatorMatrix, L0: OperatorMatrix, M: OperatorMatrix) -> OperatorMatrix | None:
    """Find ``N`` with ``Sym(N) = 0`` and ``N o A = M o L0 o A`` in U(g).

    Returns a basic solution of the exact linear system (free unknowns set to
    zero, so its support is at most the rank of the system), or ``None`` when
    no such ``N`` exists at this order.
    """
    if M.dim_in != L0.dim_out or L0.dim_in != A.dim_out:
        raise ValueError("incompatible dimensions")
    alg = A.alg
    order = M.order + L0.order
    target = to_uea_matrix(compose(compose(M, L0), A))
    images = _column_images(A, order)
    uea_rows = _transpose_columns(images)
    sym_rows: dict = {}
    for lam in _all_words(alg.m, order):
        beta = letter_multiset(lam, alg.m)
        for e in range(A.dim_out):
            sym_rows.setdefault((beta, e), {})[(lam, e)] = Fraction(1)
    entries = []
    for f in range(M.dim_out):
        system = [(row, Fraction(0)) for row in sym_rows.values()]
        tgt = {}
        for v in range(A.dim_in):
            for mono, c in target[f][v].terms.items():
                tgt[(v, mono)] = c
        for eq in set(uea_rows) | set(tgt):
            system.append((uea_rows.get(eq, {}), tgt.get(eq, Fraction(0))))
        sol = solve(system)
        if sol is None:
            return None
        for (lam, e), c in sol.items():
            entries.append((f, e, {lam: c}))
    return OperatorMatrix.from_entries(alg, A.dim_out, M.dim_out, order, entries)


def annihilator_space(A: OperatorMatrix, degree: int) -> list[OperatorMatrix]:
    """Basis of the row operators ``K`` of order ``degree`` with ``K o A = 0`` in U(g)."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    images = _column_images(A, degree)
    rows = _transpose_columns(images)
    columns = sorted(images)
    basis = sparse_nullspace(rows.values(), columns)
    out = []
    for vec in basis:
        entries = [(0, e, {lam: c}) for (lam, e), c in vec.items()]
        out.append(OperatorMatrix.from_entries(A.alg, A.dim_out, 1, degree, entries))
    return out


def _stack_rows(alg, dim_e, degree, rows: Sequence[OperatorMatrix]) -> OperatorMatrix:
    entries = []
    for f, K in enumerate(rows):
        for w, mat in K.terms.items():
            for e in range(dim_e):
                if mat[0][e]:
                    entries.append((f, e, {w: mat[0][e]}))
    return OperatorMatrix.from_entries(alg, dim_e, len(rows), degree, entries)


def _combine(basis: Sequence[OperatorMatrix], coeffs: Sequence[int]) -> OperatorMatrix:
    out = None
    for K, c in zip(basis, coeffs):
        if c:
            term = K.scale(c)
            out = term if out is None else out + term
    return out if out is not None else basis[0].scale(0)


def find_annihilator(A: OperatorMatrix, degree: int, dim_f: int = 1, seed: int = 0,
                     draws: int = 128, basis: list[OperatorMatrix] | None = None
                     ) -> AnnihilatorCertificate | None:
    """Search the order-``degree`` annihilators of ``A`` for a cocanceling one.

    Random integer combinations (coefficients in -3..3) are tried first, then
    basis elements and pairwise sums. Returns ``None`` when nothing at this
    degree is found.
    """
    if basis is None:
        basis = annihilator_space(A, degree)
    if not basis:
        return None
    rng = random.Random(seed)
    alg = A.alg

    def attempt(rows, how):
        L = _stack_rows(alg, A.dim_out, degree, rows)
        if not check_cocanceling(symmetrize(L)).cocanceling:
            return None
        cert = certify(L, A, {"route": "searched", "degree": degree, "seed": seed, "how": how,
                              "space_dim": len(basis)})
        return cert if cert.ok else None

    for t in range(draws):
        rows = [_combine(basis, [rng.randint(-3, 3) for _ in basis]) for _ in range(dim_f)]
        cert = attempt(rows, f"random draw {t}")
        if cert:
            return cert
    candidates = list(basis) + [b1 + b2 for b1, b2 in itertools.combinations(basis, 2)]
    for start in range(len(candidates)):
        rows = [candidates[(start + f) % len(candidates)] for f in range(dim_f)]
        cert = attempt(rows, f"enumeration {start}")
        if cert:
            return cert
    return None


# -- Korn reductions -----------------------------------------------------------

@dataclass
class KornReductionReport:
    group: str
    k: int
    entries: list = field(default_factory=list)

    @property
    def all_zero(self) -> bool:
        return all(e["residual_zero"] for e in self.entries)

    def cases(self) -> set[int]:
        return {e["case"] for e in self.entries}

    def to_json(self) -> dict:
        return {"group": self.group, "k": self.k, "all_zero": self.all_zero, "entries": self.entries}


def _swap_factor(alg: GradedLieAlgebra, ell: int, C: UeaElement) -> UeaElement:
    """Solve ``X_l^r C = C~ X_l^r`` with ``C~`` in g_r + g_{r-1} X_l + ... + g_1 X_l^{r-1}."""
    r = alg.r
    xr = from_word(alg, (ell,) * r)
    target = xr * C
    unknowns = {}
    for s in range(r):
        xs = from_word(alg, (ell,) * s)
        for b, w in enumerate(alg.weights):
            if w == r - s:
                unknowns[(s, b)] = UeaElement.generator(alg, b) * xs
    images = {key: (u * xr).terms for key, u in unknowns.items()}
    monos = set(target.terms).union(*[set(t) for t in images.values()]) if images else set(target.terms)
    system = [({key: img[mono] for key, img in images.items() if mono in img}, target.terms.get(mono, 0))
              for mono in sorted(monos)]
    sol = solve(system)
    if sol is None:
        raise CertificateError(f"no swap factor for X_{ell}^r C")
    out = UeaElement.zero(alg)
    for key, c in sol.items():
        out = out + unknowns[key] * c
    return out


def korn_reduction_check(alg: GradedLieAlgebra) -> KornReductionReport:
    """Check the three Korn reduction identities with ``k = 2r`` in U(g).

    Each identity is checked column by column (the coefficient of each
    ``u_c``), for all ``i < j`` and all ``l``.
    """
    m, r = alg.m, alg.r
    if m < 2:
        raise ValueError("Korn reductions need m >= 2")
    k = 2 * r
    report = KornReductionReport(alg.label, k)
    X = lambda *w: from_word(alg, w)  # noqa: E731
    C = {}

    def factor(a, b):
        if (a, b) not in C:
            C[(a, b)] = commutator_factor(alg, a, b).element
        return C[(a, b)]

    xr = {ell: X(*(ell,) * r) for ell in range(1, m + 1)}
    xk = {ell: X(*(ell,) * k) for ell in range(1, m + 1)}
    for i, j in wedge_pairs(m):
        for ell in range(1, m + 1):
            lhs = {j: xk[ell] * X(i)}
            if ell == j:
                case = 1
                rhs = {j: xr[j] * factor(j, i) * X(j)}
            elif ell == i:
                case = 2
                rhs = {j: xk[i] * X(i), i: xk[i] * X(j) - xr[i] * factor(i, j) * X(i)}
            else:
                case = 3
                c_li = factor(ell, i)
                c_tilde = _swap_factor(alg, ell, c_li)
                rhs = {j: xr[ell] * c_li * X(ell),
                       ell: xr[ell] * c_li * X(j) - c_tilde * factor(ell, j) * X(ell)}
            cols = set(lhs) | set(rhs)
            zero = UeaElement.zero(alg)
            residual = {c: lhs.get(c, zero) - rhs.get(c, zero) for c in cols}
            report.entries.append({
                "case": case, "i": i, "j": j, "l": ell,
                "residual_zero": all(v.is_zero() for v in residual.values()),
            })
    return report
