"""Substitution graphs: layered graphs whose nodes carry formulas.

The represented formula is the output node's formula with each layer's
substitution applied from the outside in; collapse and expansion change the
layering without changing that formula.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from . import formula as fm
from .formula import Formula, substitute
from .numerics import format_rational, parse_rational

if TYPE_CHECKING:
    from .extract import MintermCertificate


class GraphError(Exception):
    pass


def _where(level: int | None, index: int | None) -> str:
    return "node" if level is None else f"node ({level},{index})"


class MissingCertificate(GraphError):
    def __init__(self, level: int | None = None, index: int | None = None):
        super().__init__(f"{_where(level, index)} carries no certificate")
        self.node = (level, index)


class CertificateMismatch(GraphError):
    def __init__(self, level: int | None = None, index: int | None = None):
        super().__init__(f"certificate of {_where(level, index)} does not reproduce its formula")
        self.node = (level, index)


class LevelOutOfRange(GraphError):
    pass


class FactorizationMismatch(GraphError):
    def __init__(self, index: int):
        super().__init__(f"factor {index} does not reproduce the stored formula")
        self.index = index


@dataclass(frozen=True)
class GraphNode:
    formula: Formula
    certificate: "MintermCertificate | None" = None


@dataclass(frozen=True)
class SubstitutionGraph:
    widths: tuple[int, ...]  # d_0 .. d_L with d_L == 1
    nodes: tuple[tuple[GraphNode, ...], ...]  # levels 1..L

    def __post_init__(self) -> None:
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise ValueError("graph needs positive widths d_0..d_L")
        if self.widths[-1] != 1:
            raise ValueError("exactly one output node is required")
        if len(self.nodes) != len(self.widths) - 1:
            raise ValueError("node levels do not match widths")
        for j, level in enumerate(self.nodes, start=1):
            if len(level) != self.widths[j]:
                raise ValueError(f"level {j} has {len(level)} nodes, expected {self.widths[j]}")
            for i, node in enumerate(level, start=1):
                if node.formula.max_var > self.widths[j - 1]:
                    raise ValueError(
                        f"node ({j},{i}) uses x{node.formula.max_var} but level "
                        f"{j - 1} has width {self.widths[j - 1]}"
                    )

    @property
    def depth(self) -> int:
        return len(self.nodes)

    def node(self, level: int, index: int) -> GraphNode:
        return self.nodes[level - 1][index - 1]

    def level_substitution(self, level: int) -> dict[int, Formula]:
        """zeta mapping x_i to the formula of node i at the given level (>= 1)."""
        return {i + 1: node.formula for i, node in enumerate(self.nodes[level - 1])}


def represented_formula(g: SubstitutionGraph) -> Formula:
    """Output-first substitution: ([v_out] zeta_{L-1}) zeta_{L-2} ... zeta_1."""
    f = g.node(g.depth, 1).formula
    for level in range(g.depth - 1, 0, -1):
        f = substitute(f, g.level_substitution(level))
    return f


def represented_formula_forward(g: SubstitutionGraph) -> Formula:
    """Input-first order: push each node's global formula up the layers.

    Produces the identical tree as :func:`represented_formula`; both orders are
    kept so the agreement is testable.
    """
    global_formulas = [node.formula for node in g.nodes[0]]
    for level in range(2, g.depth + 1):
        zeta = {i + 1: f for i, f in enumerate(global_formulas)}
        global_formulas = [substitute(node.formula, zeta) for node in g.nodes[level - 1]]
    return global_formulas[0]


def graph_eval(g: SubstitutionGraph, x) -> "fm.Fraction":
    """Layer-wise numeric propagation of the node truth functions."""
    values = list(x)
    for level in g.nodes:
        values = [fm.evaluate(node.formula, values) for node in level]
    return values[0]


def normality_violation(g: SubstitutionGraph) -> GraphError | None:
    """First reason the graph is not normal, or None.

    A graph is normal when every node holds a certificate whose re-extraction
    reproduces the stored formula tree exactly.
    """
    from .extract import formula_for_certificate

    for j, level in enumerate(g.nodes, start=1):
        for i, node in enumerate(level, start=1):
            if node.certificate is None:
                return MissingCertificate(j, i)
            if formula_for_certificate(node.certificate) is not node.formula:
                return CertificateMismatch(j, i)
    return None


def is_normal(g: SubstitutionGraph) -> bool:
    return normality_violation(g) is None


# ---------------------------------------------------------------------------
# Collapse / expansion
# ---------------------------------------------------------------------------


def collapse(g: SubstitutionGraph, k: int) -> SubstitutionGraph:
    """Remove level k (1 <= k <= L-1) by substituting it into level k+1.

    Rewritten nodes lose their certificates; the represented formula is
    unchanged.
    """
    g2, _, _ = collapse_with_record(g, k)
    return g2


def collapse_with_record(
    g: SubstitutionGraph, k: int
) -> tuple[SubstitutionGraph, list[Formula], dict[int, Formula]]:
    """Collapse, also returning the (factors, substitution) pair that undoes it."""
    if not 1 <= k <= g.depth - 1:
        raise LevelOutOfRange(f"collapse level {k} outside 1..{g.depth - 1}")
    zeta = g.level_substitution(k)
    taus = [node.formula for node in g.nodes[k]]
    rewritten = tuple(GraphNode(substitute(t, zeta)) for t in taus)
    new_nodes = g.nodes[: k - 1] + (rewritten,) + g.nodes[k + 1 :]
    new_widths = g.widths[:k] + g.widths[k + 1 :]
    return SubstitutionGraph(new_widths, new_nodes), taus, zeta


def expand(
    g: SubstitutionGraph,
    k: int,
    factors: Sequence[Formula],
    zeta: dict[int, Formula],
) -> SubstitutionGraph:
    """Split level k (1 <= k <= L) into factor formulas over a new inserted level.

    Requires substitute(factors[i], zeta) to equal the stored formula of every
    node i at level k; the inserted level holds zeta's substitutors.
    """
    if not 1 <= k <= g.depth:
        raise LevelOutOfRange(f"expand level {k} outside 1..{g.depth}")
    if len(factors) != g.widths[k]:
        raise ValueError(f"need {g.widths[k]} factors, got {len(factors)}")
    d = max(zeta) if zeta else 0
    if not zeta or set(zeta) != set(range(1, d + 1)):
        raise ValueError("substitution keys must be exactly 1..d")
    for i, tau in enumerate(factors, start=1):
        if substitute(tau, zeta) is not g.node(k, i).formula:
            raise FactorizationMismatch(i)
        if tau.max_var > d:
            raise ValueError(f"factor {i} uses x{tau.max_var} beyond the new width {d}")
    prev_width = g.widths[k - 1]
    for p in range(1, d + 1):
        if zeta[p].max_var > prev_width:
            raise ValueError(f"substitutor for x{p} uses variables beyond width {prev_width}")
    inserted = tuple(GraphNode(zeta[p]) for p in range(1, d + 1))
    refit = tuple(GraphNode(t) for t in factors)
    new_nodes = g.nodes[: k - 1] + (inserted, refit) + g.nodes[k:]
    new_widths = g.widths[:k] + (d,) + g.widths[k:]
    return SubstitutionGraph(new_widths, new_nodes)


def full_collapse(g: SubstitutionGraph) -> SubstitutionGraph:
    """Collapse to depth 1; the output node then holds the represented formula."""
    while g.depth > 1:
        g = collapse(g, 1)
    return g


def formula_graph(f: Formula, input_width: int) -> SubstitutionGraph:
    """Depth-1 graph holding a single formula over x_1..x_{input_width}."""
    if f.max_var > input_width:
        raise ValueError(f"formula uses x{f.max_var} but width is {input_width}")
    return SubstitutionGraph((input_width, 1), ((GraphNode(f),),))


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------


def graph_to_dict(g: SubstitutionGraph) -> dict:
    levels = []
    for level in g.nodes:
        entries = []
        for node in level:
            cert = node.certificate
            entries.append(
                {
                    "formula": fm.to_text(node.formula),
                    "certificate": None
                    if cert is None
                    else {
                        "m": [format_rational(c) for c in cert.m],
                        "b": format_rational(cert.b),
                        "flavor": cert.flavor,
                    },
                }
            )
        levels.append(entries)
    return {"widths": list(g.widths), "nodes": levels}


def graph_from_dict(data: dict) -> SubstitutionGraph:
    from .extract import MintermCertificate

    levels = []
    for level in data["nodes"]:
        nodes = []
        for entry in level:
            cert = entry.get("certificate")
            nodes.append(
                GraphNode(
                    formula=fm.parse(entry["formula"]),
                    certificate=None
                    if cert is None
                    else MintermCertificate(
                        m=tuple(parse_rational(c) for c in cert["m"]),
                        b=parse_rational(cert["b"]),
                        flavor=cert["flavor"],
                    ),
                )
            )
        levels.append(tuple(nodes))
    return SubstitutionGraph(tuple(int(w) for w in data["widths"]), tuple(levels))


def graph_to_json(g: SubstitutionGraph) -> str:
    return json.dumps(graph_to_dict(g), indent=2, sort_keys=True)


def graph_from_json(text: str) -> SubstitutionGraph:
    return graph_from_dict(json.loads(text))
