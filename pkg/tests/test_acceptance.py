"""Acceptance gate: one test per criterion, each timed against its budget.

Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import itertools
import random
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import sympy

from carnot.annihilator import (
    certify,
    closed_form_annihilator,
    example_operator,
    find_annihilator,
    korn_reduction_check,
    solve_N,
)
from carnot.fields import (
    PolyDiffOperator,
    apply_to_polynomial,
    coordinate_monomial,
    left_field,
    nonisotropic_degree,
    realize_basis_element,
    realize_word,
    right_field,
)
from carnot.lie import (
    abelian,
    bracket,
    free_nilpotent,
    group_multiply,
    heisenberg,
)
from carnot.linalg import nullspace, rank
from carnot.numerics import (
    BumpFunction,
    QuadratureGrid,
    default_bump,
    default_grid,
    hardy_report,
    refine_study,
    sobolev_report,
)
from carnot.operators import (
    OperatorMatrix,
    check_canceling_euclidean,
    check_cocanceling,
    cocanceling_witness_points,
    compose,
    symbol_rank_at,
    symmetrize,
)
from carnot.uea import UeaElement, ad_power_expand, commutator_factor, from_word

from conftest import ACCEPTANCE

CURL = {(1,): [[0, 1]], (2,): [[-1, 0]]}
DIV = {(1,): [[1, 0]], (2,): [[0, 1]]}


@contextmanager
def criterion(num, title, budget=None):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        ACCEPTANCE.append((num, "FAIL", title, time.perf_counter() - start, f"{type(exc).__name__}: {exc}"[:200]))
        raise
    elapsed = time.perf_counter() - start
    if budget is not None and elapsed > budget:
        ACCEPTANCE.append((num, "FAIL", title, elapsed, f"over budget {budget} s"))
        raise AssertionError(f"criterion {num} took {elapsed:.1f} s, budget {budget} s")
    ACCEPTANCE.append((num, "PASS", title, elapsed, ""))


def _random_element(alg, rng):
    terms = {}
    for _ in range(rng.randint(1, 3)):
        mono = tuple(sorted(rng.randrange(alg.dim) for _ in range(rng.randint(0, 3))))
        terms[mono] = Fraction(rng.randint(-6, 6), rng.randint(1, 5))
    return UeaElement(alg, terms)


def _unit(alg, i):
    return tuple(Fraction(int(k == i)) for k in range(alg.dim))


def _rational_point(rng, dim):
    return tuple(Fraction(rng.randint(-20, 20), rng.randint(1, 12)) for _ in range(dim))


def _check_invariants(alg):
    n = alg.dim
    for a, b in itertools.product(range(n), repeat=2):
        ab, ba = alg.bracket_basis(a, b), alg.bracket_basis(b, a)
        assert all(ab.get(k, 0) == -ba.get(k, 0) for k in set(ab) | set(ba))
        assert all(alg.weights[k] == alg.weights[a] + alg.weights[b] for k in ab)
    for a, b, c in itertools.product(range(n), repeat=3):
        ea, eb, ec = _unit(alg, a), _unit(alg, b), _unit(alg, c)
        jac = [x + y + z for x, y, z in zip(bracket(alg, ea, bracket(alg, eb, ec)),
                                             bracket(alg, eb, bracket(alg, ec, ea)),
                                             bracket(alg, ec, bracket(alg, ea, eb)))]
        assert not any(jac)


def _closed_form_checks(example, alg):
    cf = closed_form_annihilator(example, alg)
    assert cf.certificate.residual_zero, cf.certificate.first_nonzero_residual()
    assert cf.sym_N_zero
    assert check_cocanceling(symmetrize(cf.L)).cocanceling
    assert symbol_rank_at(symmetrize(cf.M), (1,) * alg.m) == cf.M.dim_in
    return cf


def test_criterion_01_exact_algebra():
    with criterion(1, "PBW associativity, exhaustive bracket invariants, BCH associativity", budget=30):
        rng = random.Random(101)
        for alg in (heisenberg(1), free_nilpotent(2, 3)):
            for _ in range(200):
                a, b, c = (_random_element(alg, rng) for _ in range(3))
                assert (a * b) * c == a * (b * c)
        for alg in (abelian(1), abelian(3), heisenberg(1), heisenberg(2), free_nilpotent(2, 2),
                    free_nilpotent(2, 3), free_nilpotent(3, 2), free_nilpotent(2, 4)):
            _check_invariants(alg)
        f = free_nilpotent(2, 3)
        for _ in range(100):
            x, y, z = (_rational_point(rng, f.dim) for _ in range(3))
            assert group_multiply(f, group_multiply(f, x, y), z) == group_multiply(f, x, group_multiply(f, y, z))


def test_criterion_02_ad_binomial_identity():
    with criterion(2, "ad-power binomial identity, s <= 5, all generator pairs", budget=5):
        for alg in (heisenberg(1), free_nilpotent(2, 3)):
            for ell, ell2 in itertools.product(range(1, alg.m + 1), repeat=2):
                for s in range(1, 6):
                    lhs, rhs = ad_power_expand(alg, ell, ell2, s)
                    assert lhs == rhs


def test_criterion_03_commutator_factor():
    with criterion(3, "X_l^r X_l' = C X_l reconstruction and graded membership"):
        for alg in (heisenberg(1), free_nilpotent(2, 3)):
            x = [UeaElement.generator(alg, i) for i in range(alg.m)]
            for ell, ell2 in itertools.product(range(1, alg.m + 1), repeat=2):
                cf = commutator_factor(alg, ell, ell2)
                assert from_word(alg, (ell,) * alg.r + (ell2,)) == cf.element * x[ell - 1]
                rebuilt = UeaElement.zero(alg)
                for lie, s in cf.parts:
                    assert all(alg.weights[k] == alg.r - s for k in lie)
                    for k, c in lie.items():
                        rebuilt = rebuilt + UeaElement.generator(alg, k) * x[ell - 1] ** s * c
                assert rebuilt == cf.element


def test_criterion_04_gradient_pipeline():
    with criterion(4, "gradient annihilator pipeline on H1 and free(2,3)", budget=5):
        for alg in (heisenberg(1), free_nilpotent(2, 3)):
            _closed_form_checks("gradient", alg)


def test_criterion_05_powers_pipeline():
    with criterion(5, "powers(2) annihilator on H1, order 10", budget=30):
        cf = _closed_form_checks("powers:2", heisenberg(1))
        assert cf.L.order == 10


def test_criterion_06_korn_pipeline():
    with criterion(6, "Korn annihilator on H1 (order 18) and Korn reductions", budget=60):
        cf = _closed_form_checks("korn", heisenberg(1))
        assert cf.L.order == 18
        for alg in (heisenberg(1), free_nilpotent(2, 3)):
            report = korn_reduction_check(alg)
            assert report.k == 2 * alg.r and report.all_zero


def test_criterion_07_cocanceling_preserved():
    with criterion(7, "injective Sym(M)(xi0) and cocanceling Sym(L0) imply cocanceling Sym(M o L0)"):
        runs = [("gradient", heisenberg(1)), ("gradient", free_nilpotent(2, 3)), ("gradient", heisenberg(2)),
                ("gradient", free_nilpotent(3, 2)), ("powers:2", heisenberg(1)), ("korn", heisenberg(1))]
        for example, alg in runs:
            cf = closed_form_annihilator(example, alg)
            assert cf.M_full_rank and cf.L0_cocanceling
            assert check_cocanceling(symmetrize(compose(cf.M, cf.L0))).cocanceling
            assert cf.ML0_cocanceling


def test_criterion_08_witness_points():
    with criterion(8, "cocanceling witness points in 3 balls for curl and divergence"):
        r2 = abelian(2)
        balls = [((1, 1), Fraction(1, 2)), ((-5, 3), Fraction(1, 7)), ((0, 0), Fraction(1, 1000))]
        for terms in (CURL, DIV):
            S = symmetrize(OperatorMatrix(r2, 2, 1, 1, terms))
            for seed, (center, radius) in enumerate(balls):
                pts = cocanceling_witness_points(S, center, radius, seed=seed, budget=64)
                assert not nullspace([list(r) for p in pts for r in S.evaluate(p)], 2)
                assert all(sum((a - c) ** 2 for a, c in zip(p, center)) < radius ** 2 for p in pts)


def _noncanceling(rng):
    alg = abelian(2)
    dim_e, dim_v = rng.randint(1, 3), rng.randint(1, 3)
    v = [Fraction(rng.randint(-3, 3)) for _ in range(dim_e)]
    if not any(v):
        v[rng.randrange(dim_e)] = Fraction(1)
    terms = {}
    for w in ((1, 1), (1, 2), (2, 1), (2, 2)):
        mat = [[Fraction(rng.randint(-3, 3)) for _ in range(dim_v)] for _ in range(dim_e)]
        for i in range(dim_e):
            # column 0 is v * |xi|^2, so v lies in every image
            mat[i][0] = v[i] if w in ((1, 1), (2, 2)) else Fraction(0)
        terms[w] = mat
    return OperatorMatrix(alg, dim_v, dim_e, 2, terms), v


def test_criterion_09_canceling_soundness():
    with criterion(9, "Euclidean canceling test: gradient, Laplacian, 10^4 soundness trials"):
        r2 = abelian(2)
        assert check_canceling_euclidean(example_operator("gradient", r2)).certified
        lap = check_canceling_euclidean(OperatorMatrix(r2, 1, 1, 2, {(1, 1): [[1]], (2, 2): [[1]]}))
        assert not lap.certified and lap.candidate_basis == ((1,),)
        rng = random.Random(909)
        for trial in range(10_000):
            A, v = _noncanceling(rng)
            verdict = check_canceling_euclidean(A, seed=trial)
            assert not verdict.certified
            basis = [list(b) for b in verdict.candidate_basis]
            assert rank(basis + [v]) == rank(basis)


def test_criterion_10_generic_solver():
    with criterion(10, "solve_N and find_annihilator cross-checks on H1 gradient"):
        h = heisenberg(1)
        A = example_operator("gradient", h)
        L0 = OperatorMatrix(h, 2, 1, 1, CURL)
        M = OperatorMatrix(h, 1, 1, 2, {(2, 2): [[1]]})
        N = solve_N(A, L0, M)
        assert N is not None and symmetrize(N).is_zero()
        solved = certify(compose(M, L0) - N, A, {"route": "solved"})
        closed = closed_form_annihilator("gradient", h).certificate
        assert (solved.residual_zero, solved.cocanceling.cocanceling) == (closed.residual_zero,
                                                                          closed.cocanceling.cocanceling)
        assert solved.ok
        found = find_annihilator(A, 3, seed=0)
        assert found is not None and found.verify()
        assert find_annihilator(A, 1, seed=0) is None


def test_criterion_11_invariant_fields():
    with criterion(11, "realized structure constants, left/right commutation, degree-k annihilation"):
        for alg in (heisenberg(1), free_nilpotent(2, 3)):
            for i, j in itertools.product(range(1, alg.m + 1), repeat=2):
                lhs = left_field(alg, i).commutator(left_field(alg, j))
                rhs = PolyDiffOperator(alg.dim)
                for k, c in alg.bracket_basis(i - 1, j - 1).items():
                    rhs = rhs + realize_basis_element(alg, k).scale(c)
                assert lhs == rhs
                assert not left_field(alg, i).commutator(right_field(alg, j)).terms
            for k in range(1, 5):
                words = [realize_word(alg, g) for g in itertools.product(range(1, alg.m + 1), repeat=k)]
                bounds = [k // w + 1 for w in alg.weights]
                for alpha in itertools.product(*[range(b) for b in bounds]):
                    if nonisotropic_degree(alg, alpha) < k:
                        mono = coordinate_monomial(alg, alpha)
                        assert all(apply_to_polynomial(op, mono).is_zero() for op in words)


def test_criterion_12_numerics():
    with criterion(12, "Sobolev, Hardy, dilation and Korn numerics on H1; dilation Jacobian"):
        h = heisenberg(1)
        start = time.perf_counter()
        bumps = default_bump(h, "gradient", power=4)
        sob = refine_study(lambda n: sobolev_report(h, "gradient", bumps, default_grid(h, n)), [16, 32, 64])
        assert sob.status == "PASS" and all(0 < r[3] < float("inf") for r in sob.rows)
        assert time.perf_counter() - start < 60
        hardy = refine_study(lambda n: hardy_report(h, "gradient", bumps, 1, 1.0, default_grid(h, n)),
                             [32, 64, 128])
        assert hardy.status == "PASS"
        lam = Fraction(2)
        r1 = sobolev_report(h, "gradient", [BumpFunction(4)], default_grid(h, 32))
        r2 = sobolev_report(h, "gradient", [BumpFunction(4, lam)],
                            QuadratureGrid(tuple((-1 / lam ** w, 1 / lam ** w) for w in h.weights), 32))
        assert abs(r2.ratio - r1.ratio) < 0.02 * r1.ratio
        kb = default_bump(h, "korn", power=4)
        korn = refine_study(lambda n: sobolev_report(h, "korn", kb, default_grid(h, n)), [16, 32, 64])
        assert korn.status == "PASS"
        lam_s = sympy.Symbol("lam", positive=True)
        xs = sympy.symbols("a b t")
        jac = sympy.Matrix([lam_s ** w * x for w, x in zip(h.weights, xs)]).jacobian(xs).det()
        assert sympy.simplify(jac - lam_s ** h.Q) == 0


if __name__ == "__main__":
    import pytest

    sys.exit(pytest.main([__file__, "-v"]))
