"""Desk-scale quadrature probes of the L^1 Sobolev, Hardy and Korn inequalities.

Test functions are polynomial bumps ``m(y) (1 - |y|^2)^p`` on the unit ball,
``y = delta_lambda(x - c)``. Derivatives are taken symbolically with the
left-invariant fields and evaluated at the cell centres of a midpoint grid.
Sums are accumulated per slab with ``math.fsum``; slab results are combined
in a fixed order, so the totals do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .annihilator import parse_example
from .fields import apply_to_polynomial, realize_word
from .lie import GradedLieAlgebra
from .poly import Poly

__all__ = [
    "BumpFunction",
    "QuadratureGrid",
    "InequalityReport",
    "ConvergenceTable",
    "lp_norm",
    "sobolev_report",
    "hardy_report",
    "refine_study",
    "default_bump",
    "default_grid",
]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CARNOT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class BumpFunction:
    """``u(x) = m(y) (1 - |y|^2)^power`` for ``|y| < 1``, 0 outside; ``y = delta_lambda(x - center)``.

    ``multiplier`` is a tuple of ``(exponent, coefficient)`` pairs over the
    coordinates (empty means the constant 1).
    """

    power: int
    dilation: Fraction = Fraction(1)
    center: tuple = ()
    multiplier: tuple = ()

    def _center(self, alg):
        return tuple(Fraction(c) for c in self.center) if self.center else (Fraction(0),) * alg.dim

    def poly(self, alg: GradedLieAlgebra) -> Poly:
        n = alg.dim
        lam = Fraction(self.dilation)
        c = self._center(alg)
        ys = [(Poly.variable(n, i) - c[i]) * lam ** alg.weights[i] for i in range(n)]
        base = Poly.constant(n, 1)
        for y in ys:
            base = base - y * y
        base = base**self.power
        if self.multiplier:
            m = Poly(n, {tuple(e): Fraction(v) for e, v in self.multiplier})
            base = base * m.substitute(ys)
        return base

    def inside(self, alg: GradedLieAlgebra, coords: Sequence[np.ndarray]) -> np.ndarray:
        lam = float(self.dilation)
        c = self._center(alg)
        r2 = 0.0
        for i, x in enumerate(coords):
            y = lam ** alg.weights[i] * (x - float(c[i]))
            r2 = r2 + y * y
        return r2 < 1.0

    def support_box(self, alg: GradedLieAlgebra) -> tuple:
        lam = Fraction(self.dilation)
        c = self._center(alg)
        return tuple((c[i] - 1 / lam ** alg.weights[i], c[i] + 1 / lam ** alg.weights[i]) for i in range(alg.dim))

    def describe(self) -> dict:
        return {
            "family": "polynomial bump (1-|y|^2)^p",
            "power": self.power,
            "dilation": str(Fraction(self.dilation)),
            "center": [str(Fraction(c)) for c in self.center],
            "multiplier": [[list(e), str(Fraction(v))] for e, v in self.multiplier],
        }


def default_bump(alg: GradedLieAlgebra, example: str, power: int = 4, dilation=1) -> tuple[BumpFunction, ...]:
    """Scalar bump, or for Korn the components ``u_j = x_j * bump``."""
    name, _ = parse_example(example)
    if name == "korn":
        comps = []
        for j in range(alg.m):
            e = [0] * alg.dim
            e[j] = 1
            comps.append(BumpFunction(power, Fraction(dilation), (), ((tuple(e), 1),)))
        return tuple(comps)
    return (BumpFunction(power, Fraction(dilation)),)


@dataclass(frozen=True)
class QuadratureGrid:
    """Cell-centred tensor grid with ``n`` cells per axis."""

    box: tuple
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one cell per axis")

    @property
    def steps(self) -> tuple[float, ...]:
        return tuple(float(Fraction(hi) - Fraction(lo)) / self.n for lo, hi in self.box)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.steps)

    def axis_nodes(self, i: int) -> np.ndarray:
        lo, hi = (float(Fraction(v)) for v in self.box[i])
        h = (hi - lo) / self.n
        return lo + (np.arange(self.n) + 0.5) * h

    def avoids_origin(self) -> bool:
        """True when no node is the group identity."""
        for i, (lo, hi) in enumerate(self.box):
            lo, hi = Fraction(lo), Fraction(hi)
            h = (hi - lo) / self.n
            # 0 = lo + (k + 1/2) h  <=>  k = -lo/h - 1/2
            k = -lo / h - Fraction(1, 2)
            if k.denominator != 1 or not 0 <= k < self.n:
                return True
        return False

    def covers(self, box: Sequence) -> bool:
        return all(Fraction(lo) <= Fraction(blo) and Fraction(bhi) <= Fraction(hi)
                   for (lo, hi), (blo, bhi) in zip(self.box, box))

    def describe(self) -> dict:
        return {"box": [[str(Fraction(lo)), str(Fraction(hi))] for lo, hi in self.box], "n": self.n,
                "rule": "midpoint"}


def default_grid(alg: GradedLieAlgebra, n: int, bumps: Sequence[BumpFunction] = ()) -> QuadratureGrid:
    """Symmetric box covering the supports of ``bumps`` (unit box if none)."""
    half = [Fraction(1)] * alg.dim
    for b in bumps:
        for i, (lo, hi) in enumerate(b.support_box(alg)):
            half[i] = max(half[i], abs(lo), abs(hi)) if b.center else max(abs(lo), abs(hi))
    return QuadratureGrid(tuple((-h, h) for h in half), n)


def lp_norm(samples, p, cell_volume: float) -> float:
    """``(sum |v|^p vol)^(1/p)``, or ``max |v|`` for ``p = inf``."""
    v = np.abs(np.asarray(samples, dtype=float)).ravel()
    if p == math.inf or p == "inf":
        return float(v.max()) if v.size else 0.0
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    return (math.fsum(v**p) * cell_volume) ** (1.0 / p)


@dataclass
class InequalityReport:
    inequality: str
    example: str
    lhs: float
    rhs: float
    grid: dict
    function: dict
    params: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return self.rhs == 0.0

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return math.nan if self.lhs == 0.0 else math.inf
        return self.lhs / self.rhs

    def to_json(self) -> dict:
        return {
            "inequality": self.inequality,
            "example": self.example,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": None if self.degenerate else self.ratio,
            "degenerate": self.degenerate,
            "grid": self.grid,
            "function": self.function,
            "params": self.params,
            "history": [list(h) for h in self.history],
        }


# -- evaluation machinery ---------------------------------------------------------

def _norm_power_grid(alg: GradedLieAlgebra, coords) -> np.ndarray:
    rf = math.factorial(alg.r)
    total = 0.0
    for j in range(1, alg.r + 1):
        sq = 0.0
        for x in coords[alg.layer_slice(j)]:
            sq = sq + x * x
        total = total + sq ** (rf // j)
    return total


def _slab_sums(alg: GradedLieAlgebra, grid: QuadratureGrid,
               fn: Callable[[list], Sequence[np.ndarray]], slab: int = 8) -> list[float]:
    axes = [grid.axis_nodes(i) for i in range(alg.dim)]
    starts = list(range(0, grid.n, slab))

    def work(s):
        first = axes[0][s:s + slab]
        coords = np.meshgrid(first, *axes[1:], indexing="ij")
        return [math.fsum(np.ravel(q)) for q in fn(coords)]

    workers = min(_threads(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    vol = grid.cell_volume
    return [math.fsum(col) * vol for col in zip(*parts)]


def _words(m: int, k: int):
    return list(itertools.product(range(1, m + 1), repeat=k))


def _derivatives(alg, bump: BumpFunction, words) -> list[Poly]:
    u = bump.poly(alg)
    return [apply_to_polynomial(realize_word(alg, w), u) for w in words]


def _check_support(alg, bumps, grid):
    for b in bumps:
        if not grid.covers(b.support_box(alg)):
            raise ValueError(f"grid {grid.describe()['box']} does not cover the support of {b.describe()}")


def _check_smoothness(bumps, order):
    for b in bumps:
        if b.power < order + 2:
            raise ValueError(f"bump power {b.power} too small for derivatives of order {order}")


def _rhs_polys(alg, example, bumps):
    """Components of ``A(D)u`` whose L^1 norms are summed on the right."""
    name, k = parse_example(example)
    if name in ("gradient", "powers"):
        (b,) = bumps
        return [(b, p) for p in _derivatives(alg, b, [(j,) * k for j in range(1, alg.m + 1)])], k
    m = alg.m
    out = []
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            pij = apply_to_polynomial(realize_word(alg, (i,)), bumps[j - 1].poly(alg))
            pji = apply_to_polynomial(realize_word(alg, (j,)), bumps[i - 1].poly(alg))
            out.append(((bumps[i - 1], bumps[j - 1]), pij + pji))
    return out, 1


def _masked(alg, support, p: Poly, coords):
    vals = p.evaluate_grid(coords)
    if isinstance(support, tuple):
        mask = np.zeros(vals.shape, dtype=bool)
        for b in support:
            mask |= b.inside(alg, coords)
    else:
        mask = support.inside(alg, coords)
    return np.where(mask, vals, 0.0)


def _lhs_groups(alg, example, bumps, order):
    """Groups of polynomials whose pointwise Euclidean norm enters the left side."""
    name, _ = parse_example(example)
    if name == "korn":
        return [(b, [b.poly(alg)]) for b in bumps]
    (b,) = bumps
    return [(b, _derivatives(alg, b, _words(alg.m, order)))]


def _validate(alg, example, bumps, grid):
    name, k = parse_example(example)
    bumps = tuple(bumps)
    if name == "korn" and len(bumps) != alg.m:
        raise ValueError(f"korn needs {alg.m} components")
    if name != "korn" and len(bumps) != 1:
        raise ValueError("scalar example needs one component")
    if not grid.avoids_origin():
        raise ValueError("a quadrature node sits at the origin")
    _check_support(alg, bumps, grid)
    _check_smoothness(bumps, k)
    return bumps, k


def sobolev_report(alg: GradedLieAlgebra, example: str, bumps: Sequence[BumpFunction],
                   grid: QuadratureGrid) -> InequalityReport:
    """``||D^{k-1} u||_{Q/(Q-1)}`` against the summed L^1 norms of ``A(D) u``.

    For Korn the left side is ``sum_j ||u_j||_{Q/(Q-1)}`` and the right side
    runs over all ordered pairs ``(i, j)``.
    """
    bumps, k = _validate(alg, example, bumps, grid)
    q = alg.Q / (alg.Q - 1)
    groups = _lhs_groups(alg, example, bumps, k - 1)
    rhs_terms, _ = _rhs_polys(alg, example, bumps)

    def fn(coords):
        out = []
        for supp, polys in groups:
            sq = 0.0
            for p in polys:
                v = _masked(alg, supp, p, coords)
                sq = sq + v * v
            out.append(np.sqrt(sq) ** q)
        for supp, p in rhs_terms:
            out.append(np.abs(_masked(alg, supp, p, coords)))
        return out

    sums = _slab_sums(alg, grid, fn)
    lhs = math.fsum(s ** (1.0 / q) for s in sums[: len(groups)])
    rhs = math.fsum(sums[len(groups):])
    return InequalityReport("sobolev", example, lhs, rhs, grid.describe(),
                            {"components": [b.describe() for b in bumps]},
                            {"q": q, "Q": alg.Q, "group": alg.label}, [(grid.n, lhs, rhs)])


def hardy_report(alg: GradedLieAlgebra, example: str, bumps: Sequence[BumpFunction], ell: int, p: float,
                 grid: QuadratureGrid) -> InequalityReport:
    """``(int (|x|^{Q-l} |D^{k-l} u|)^p |x|^{-Q} dx)^{1/p}`` against ``||A(D)u||_1``."""
    name, k = parse_example(example)
    Q = alg.Q
    if not 1 <= ell <= min(k, Q - 1):
        raise ValueError(f"need 1 <= ell <= min(k, Q-1) = {min(k, Q - 1)}, got {ell}")
    if not 1 <= p < Q / (Q - ell):
        raise ValueError(f"need 1 <= p < Q/(Q-ell) = {Q / (Q - ell):.6g}, got {p}")
    bumps, k = _validate(alg, example, bumps, grid)
    groups = _lhs_groups(alg, example, bumps, k - ell)
    rhs_terms, _ = _rhs_polys(alg, example, bumps)
    two_rf = 2 * math.factorial(alg.r)

    def fn(coords):
        norm = _norm_power_grid(alg, coords) ** (1.0 / two_rf)
        weight = norm ** ((Q - ell) * p - Q)
        out = []
        for supp, polys in groups:
            sq = 0.0
            for poly in polys:
                v = _masked(alg, supp, poly, coords)
                sq = sq + v * v
            out.append(np.sqrt(sq) ** p * weight)
        for supp, poly in rhs_terms:
            out.append(np.abs(_masked(alg, supp, poly, coords)))
        return out

    sums = _slab_sums(alg, grid, fn)
    lhs = math.fsum(s ** (1.0 / p) for s in sums[: len(groups)])
    rhs = math.fsum(sums[len(groups):])
    return InequalityReport("hardy", example, lhs, rhs, grid.describe(),
                            {"components": [b.describe() for b in bumps]},
                            {"ell": ell, "p": p, "Q": Q, "group": alg.label}, [(grid.n, lhs, rhs)])


@dataclass
class ConvergenceTable:
    rows: list
    tolerance: float
    status: str
    max_relative_change: float
    report: InequalityReport

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "lhs", "rhs", "ratio"])
        for n, lhs, rhs, ratio in self.rows:
            w.writerow([n, repr(lhs), repr(rhs), repr(ratio)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "tolerance": self.tolerance,
            "max_relative_change": self.max_relative_change,
            "rows": [list(r) for r in self.rows],
            "report": self.report.to_json(),
        }


def refine_study(producer: Callable[[int], InequalityReport], levels: Sequence[int],
                 tolerance: float = 0.03) -> ConvergenceTable:
    """Run ``producer`` per grid level and compare successive ratios.

    Status is ``PASS`` when every successive relative change is below
    ``tolerance``, ``FAIL`` otherwise, and ``DEGENERATE`` when a right-hand
    side vanishes (the ratio is undefined).
    """
    if len(levels) < 2:
        raise ValueError("need at least two refinement levels")
    reports = [producer(n) for n in levels]
    rows = [(n, r.lhs, r.rhs, r.ratio) for n, r in zip(levels, reports)]
    final = reports[-1]
    final.history = [(n, r.lhs, r.rhs) for n, r in zip(levels, reports)]
    if any(r.degenerate for r in reports):
        return ConvergenceTable(rows, tolerance, "DEGENERATE", math.nan, final)
    changes = [abs(b[3] - a[3]) / abs(b[3]) for a, b in zip(rows, rows[1:])]
    worst = max(changes)
    status = "PASS" if worst < tolerance and all(math.isfinite(r[3]) for r in rows) else "FAIL"
    return ConvergenceTable(rows, tolerance, status, worst, final)
