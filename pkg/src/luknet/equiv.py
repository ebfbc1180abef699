"""Functional-equivalence checking over finite grids and random rational points.

Grid points are exactly {0, 1/k, ..., 1}^n in lexicographic order; comparison
is exact rational equality and the first counterexample is reported.  For the
common case of scalar-free formulas (and integer networks) a scaled-integer
grid evaluator avoids Fraction overhead without giving up exactness.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from . import formula as fm
from .formula import Delta, Formula, Not, Odot, Oplus, Scale, Var
from .graph import SubstitutionGraph, graph_eval
from .network import Network, eval_network

PointFn = Callable[[Sequence[Fraction]], Fraction]


@dataclass(frozen=True)
class FiniteGrid:
    k: int
    n: int

    def __post_init__(self) -> None:
        if self.k < 1 or self.n < 0:
            raise ValueError("grid needs k >= 1 and n >= 0")

    def points(self) -> Iterator[tuple[Fraction, ...]]:
        axis = [Fraction(i, self.k) for i in range(self.k + 1)]
        return itertools.product(axis, repeat=self.n)


@dataclass(frozen=True)
class Equal:
    points_checked: int = 0


@dataclass(frozen=True)
class Counterexample:
    point: tuple[Fraction, ...]
    lhs: Fraction
    rhs: Fraction


def grid_equal(f: PointFn, g: PointFn, grid: FiniteGrid) -> Equal | Counterexample:
    """Exact comparison at every grid point; first mismatch in lexicographic order."""
    count = 0
    for x in grid.points():
        a, b = f(x), g(x)
        if a != b:
            return Counterexample(x, a, b)
        count += 1
    return Equal(count)


def sample_equal(
    f: PointFn, g: PointFn, n: int, trials: int, seed: int
) -> Equal | Counterexample:
    """Compare at seeded pseudo-random rational points (denominators <= 10^4)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    for _ in range(trials):
        x = tuple(
            Fraction(rng.randint(0, den), den)
            for den in (rng.randint(1, 10_000) for _ in range(n))
        )
        a, b = f(x), g(x)
        if a != b:
            return Counterexample(x, a, b)
    return Equal(trials)


# ---------------------------------------------------------------------------
# Adapters
# ---------------------------------------------------------------------------


def formula_fn(f: Formula) -> PointFn:
    return lambda x: fm.evaluate(f, x)


def network_fn(net: Network) -> PointFn:
    return lambda x: eval_network(net, x)


def graph_fn(g: SubstitutionGraph) -> PointFn:
    return lambda x: graph_eval(g, x)


def as_point_fn(obj) -> tuple[PointFn, int]:
    """(evaluator, required input arity) for a formula, network, or graph."""
    if isinstance(obj, Formula):
        return formula_fn(obj), obj.max_var
    if isinstance(obj, Network):
        return network_fn(obj), obj.input_dim
    if isinstance(obj, SubstitutionGraph):
        return graph_fn(obj), obj.widths[0]
    raise TypeError(f"cannot evaluate {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Scaled-integer grid evaluation
#
# On the grid I_k every connective of the scalar-free fragment maps k-th
# denominators to k-th denominators, so values can be carried as integers
# in 0..k.  Exactness is untouched; only the Fraction boxing goes away.
# ---------------------------------------------------------------------------


def grid_values(f: Formula, k: int, n: int) -> list[int]:
    """Truth table of a delta/scale-free formula over I_k^n, scaled by k.

    Points are lexicographic; each value v stands for the rational v/k.
    """
    if f.max_var > n:
        raise fm.UnboundVariable(f"formula uses x{f.max_var} but n={n}")
    npoints = (k + 1) ** n
    axes: list[list[int]] = []
    for i in range(n):  # value of x_{i+1} at each lexicographic point
        reps = (k + 1) ** (n - i - 1)
        axes.append([v for v in range(k + 1) for _ in range(reps)] * ((k + 1) ** i))
    memo: dict[Formula, list[int]] = {}

    def go(node: Formula) -> list[int]:
        got = memo.get(node)
        if got is not None:
            return got
        if isinstance(node, Var):
            r = axes[node.index - 1]
        elif isinstance(node, fm.Const):
            r = [k * node.value] * npoints
        elif isinstance(node, Not):
            r = [k - v for v in go(node.child)]
        elif isinstance(node, Oplus):
            r = [min(k, a + b) for a, b in zip(go(node.left), go(node.right))]
        elif isinstance(node, Odot):
            r = [max(0, a + b - k) for a, b in zip(go(node.left), go(node.right))]
        else:
            raise TypeError("grid_values handles the delta/scale-free fragment only")
        memo[node] = r
        return r

    return go(f)


def network_grid_values(net: Network, k: int) -> list[Fraction]:
    """Network outputs over I_k^{d0}, lexicographic (general rational weights)."""
    return [eval_network(net, x) for x in FiniteGrid(k, net.input_dim).points()]
