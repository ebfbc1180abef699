"""Shared test machinery: random generators, the round-trip corpus builder,
and brute-force oracles kept independent of the library's solver paths."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction
from math import ceil, floor

from luknet import formula as fm
from luknet.bounds import exact_extrema
from luknet.graph import GraphNode, SubstitutionGraph
from luknet.network import (
    CLIP,
    NONE,
    RELU,
    Layer,
    Network,
    NodeRef,
    is_non_degenerate,
    node_preactivations,
)

F = Fraction


def layer(weights, biases, activations) -> Layer:
    return Layer(
        tuple(tuple(F(w) for w in row) for row in weights),
        tuple(F(b) for b in biases),
        tuple(activations),
    )


def net(input_dim, *layers) -> Network:
    return Network(input_dim, tuple(layers))


# ---------------------------------------------------------------------------
# Random formulas / substitutions / graphs
# ---------------------------------------------------------------------------


def random_formula(rng: random.Random, n_vars: int, depth: int, dmv: bool = False):
    if depth <= 0 or rng.random() < 0.3:
        roll = rng.random()
        if roll < 0.7:
            return fm.var(rng.randint(1, n_vars))
        return fm.ZERO if roll < 0.85 else fm.ONE
    ops = ["not", "oplus", "odot"] + (["delta"] if dmv else [])
    op = rng.choice(ops)
    if op == "not":
        return fm.lnot(random_formula(rng, n_vars, depth - 1, dmv))
    if op == "delta":
        return fm.delta(rng.randint(2, 3), random_formula(rng, n_vars, depth - 1, dmv))
    a = random_formula(rng, n_vars, depth - 1, dmv)
    b = random_formula(rng, n_vars, depth - 1, dmv)
    return fm.oplus(a, b) if op == "oplus" else fm.odot(a, b)


def random_substitution(rng: random.Random, n_keys: int, n_vars: int, depth: int = 2):
    return {k: random_formula(rng, n_vars, depth) for k in range(1, n_keys + 1)}


def random_graph(rng: random.Random) -> SubstitutionGraph:
    d0 = rng.randint(1, 3)
    widths = [d0] + [rng.randint(1, 3) for _ in range(rng.randint(1, 3))] + [1]
    levels = []
    for j in range(1, len(widths)):
        levels.append(
            tuple(
                GraphNode(random_formula(rng, widths[j - 1], rng.randint(1, 3)))
                for _ in range(widths[j])
            )
        )
    return SubstitutionGraph(tuple(widths), tuple(levels))


# ---------------------------------------------------------------------------
# Random networks
# ---------------------------------------------------------------------------


def random_network(
    rng: random.Random,
    n: int,
    hidden_widths: list[int],
    wmax: int = 3,
    activation: str = RELU,
) -> Network:
    layers = []
    prev = n
    for w in hidden_widths:
        rows = tuple(tuple(F(rng.randint(-wmax, wmax)) for _ in range(prev)) for _ in range(w))
        biases = tuple(F(rng.randint(-wmax, wmax)) for _ in range(w))
        layers.append(Layer(rows, biases, (activation,) * w))
        prev = w
    rows = (tuple(F(rng.randint(-wmax, wmax)) for _ in range(prev)),)
    layers.append(Layer(rows, (F(rng.randint(-wmax, wmax)),), (NONE,)))
    return Network(n, tuple(layers))


CORPUS_BUDGET = 6000  # candidates whose bound search explodes are re-rolled


def corpus_network(rng: random.Random, max_attempts: int = 60) -> Network | None:
    """One non-degenerate integer relu network with exact range inside [0,1].

    Shapes stay within n <= 3, depth <= 4, width <= 4, |w| <= 3.  An
    out-of-range candidate is shifted by an integer bias when its span fits in
    [0,1], or wrapped in a clamp pair rho(g+t) - rho(g+t-1) otherwise.
    """
    from luknet.bounds import BudgetExceeded

    for _ in range(max_attempts):
        n = rng.choice([1, 1, 2, 2, 3])
        n_hidden = rng.choice([0, 1, 1, 2, 2, 3])
        widths = [rng.randint(1, 4) for _ in range(n_hidden)]
        base = random_network(rng, n, widths)
        try:
            rng_out = exact_extrema(base, "output", node_budget=CORPUS_BUDGET)
        except BudgetExceeded:
            continue
        lo, hi = rng_out.lo, rng_out.hi
        if lo == hi:
            continue
        candidate: Network | None = None
        if 0 <= lo and hi <= 1:
            candidate = base
        else:
            t_lo, t_hi = ceil(-lo), floor(1 - hi)
            if t_lo <= t_hi:
                t = F(t_lo)
                out = base.layers[-1]
                shifted = Layer(out.weights, (out.biases[0] + t,), out.activations)
                candidate = Network(n, base.layers[:-1] + (shifted,))
            elif hi - lo > 1 and n_hidden <= 2:
                t = F(floor(-lo))
                if hi + t > 1:
                    out = base.layers[-1]
                    row, b = out.weights[0], out.biases[0] + t
                    pair = Layer((row, row), (b, b - 1), (RELU, RELU))
                    differ = Layer(((F(1), F(-1)),), (F(0),), (NONE,))
                    candidate = Network(n, base.layers[:-1] + (pair, differ))
        if candidate is None:
            continue
        try:
            ok, _ = is_non_degenerate(candidate, node_budget=CORPUS_BUDGET)
            if not ok:
                continue
            final = exact_extrema(candidate, "output", node_budget=CORPUS_BUDGET)
        except BudgetExceeded:
            continue
        if final.lo < 0 or final.hi > 1:
            continue
        return candidate
    return None


def build_corpus(count: int, seed: int) -> list[Network]:
    rng = random.Random(seed)
    out: list[Network] = []
    while len(out) < count:
        cand = corpus_network(rng)
        if cand is not None:
            out.append(cand)
    return out


# ---------------------------------------------------------------------------
# Independent extremum oracles (vertex enumeration, no simplex, no pruning)
# ---------------------------------------------------------------------------


def solve_square(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Exact Gaussian elimination; None when the system is singular."""
    n = len(A)
    M = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = M[col][col]
        M[col] = [v / inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def polytope_vertices(constraints, d: int):
    """Every intersection of d constraint boundaries that satisfies all rows."""
    seen = set()
    for subset in itertools.combinations(range(len(constraints)), d):
        A = [list(constraints[i][0]) for i in subset]
        b = [constraints[i][1] for i in subset]
        x = solve_square(A, b)
        if x is None:
            continue
        key = tuple(x)
        if key in seen:
            continue
        seen.add(key)
        if all(
            sum(c * v for c, v in zip(coeffs, x)) <= bound for coeffs, bound in constraints
        ):
            yield x


def brute_extrema(network: Network, ref: NodeRef):
    """Exhaustive activation-pattern + vertex-enumeration extremum oracle.

    Enumerates every regime pattern of the upstream nodes with no pruning,
    collects the candidate vertices of each pattern polytope, and reads the
    node's pre-activation value off a plain forward evaluation.
    """
    d = network.input_dim
    cube = []
    for i in range(d):
        unit = [F(0)] * d
        unit[i] = F(1)
        cube.append((tuple(unit), F(1)))
        neg = [F(0)] * d
        neg[i] = F(-1)
        cube.append((tuple(neg), F(0)))

    upstream = [
        (j, i) for j in range(1, ref.layer) for i in range(1, network.width(j) + 1)
    ]
    regime_options = []
    for j, i in upstream:
        act = network.layers[j - 1].activations[i - 1]
        regime_options.append(("zero", "linear") if act == RELU else ("zero", "linear", "one"))

    def forms_for(pattern):
        """Affine forms (coeffs, const) of all node outputs under the pattern."""
        forms = {}
        constraints = list(cube)
        for (j, i), regime in zip(upstream, pattern):
            row = network.layers[j - 1].weights[i - 1]
            bias = network.layers[j - 1].biases[i - 1]
            if j == 1:
                coeffs = list(row)
                const = bias
            else:
                coeffs = [F(0)] * d
                const = bias
                for t in range(network.width(j - 1)):
                    fc, fk = forms[(j - 1, t + 1)]
                    w = row[t]
                    const += w * fk
                    for s in range(d):
                        coeffs[s] += w * fc[s]
            if regime == "zero":
                constraints.append((tuple(coeffs), -const))
                forms[(j, i)] = ([F(0)] * d, F(0))
            elif regime == "one":
                constraints.append((tuple(-c for c in coeffs), const - 1))
                forms[(j, i)] = ([F(0)] * d, F(1))
            else:
                constraints.append((tuple(-c for c in coeffs), const))
                if network.layers[j - 1].activations[i - 1] == CLIP:
                    constraints.append((tuple(coeffs), 1 - const))
                forms[(j, i)] = (coeffs, const)
        return constraints

    best_lo: Fraction | None = None
    best_hi: Fraction | None = None
    for pattern in itertools.product(*regime_options) if upstream else [()]:
        constraints = forms_for(pattern)
        for x in polytope_vertices(constraints, d):
            value = node_preactivations(network, x)[ref.layer - 1][ref.index - 1]
            best_lo = value if best_lo is None else min(best_lo, value)
            best_hi = value if best_hi is None else max(best_hi, value)
    assert best_lo is not None and best_hi is not None
    return best_lo, best_hi
