"""Axiom catalogs and positioned rewriting on formulas and substitution graphs.

Axiom sides are ordinary formulas whose variables act as metavariables, so
instantiation is plain substitution.  Positions are root-to-node child-index
paths.  Derivation traces record (axiom, direction, position, binding) steps
and replay deterministically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import formula as fm
from .formula import Delta, Formula, Not, Odot, Oplus, Scale, Var, substitute
from .graph import GraphNode, SubstitutionGraph
from .numerics import format_rational, parse_rational


class RewriteError(Exception):
    pass


class InvalidPosition(RewriteError):
    pass


class NoMatchAtPosition(RewriteError):
    pass


class InputNodeTarget(RewriteError):
    pass


class VariableEscape(RewriteError):
    pass


class StepFailure(RewriteError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"step {index}: {reason}")
        self.index = index
        self.reason = reason


_METAVAR_NAMES = {1: "x", 2: "y", 3: "z"}
_METAVAR_INDICES = {v: k for k, v in _METAVAR_NAMES.items()}


@dataclass(frozen=True)
class Axiom:
    id: str
    lhs: Formula
    rhs: Formula
    catalog: str

    def __post_init__(self) -> None:
        # Metavariables are shared between the sides; nothing may dangle
        # outside the name table used by trace files.
        for side in (self.lhs, self.rhs):
            if side.max_var > len(_METAVAR_NAMES):
                raise ValueError(f"axiom {self.id} uses more than 3 metavariables")

    def side(self, direction: str) -> tuple[Formula, Formula]:
        if direction == "LR":
            return self.lhs, self.rhs
        if direction == "RL":
            return self.rhs, self.lhs
        raise ValueError(f"direction must be 'LR' or 'RL', got {direction!r}")


def match_instantiation(pattern: Formula, target: Formula) -> dict[int, Formula] | None:
    """Bind pattern variables to whole subformulas of the target, or None.

    Constants in the pattern match only the literal constants; operator
    parameters (delta divisor, scale factor) must agree exactly.
    """
    binding: dict[int, Formula] = {}

    def go(p: Formula, t: Formula) -> bool:
        if isinstance(p, Var):
            bound = binding.get(p.index)
            if bound is None:
                binding[p.index] = t
                return True
            return bound is t
        if type(p) is not type(t):
            return False
        if isinstance(p, fm.Const):
            return p is t
        if isinstance(p, Not):
            return go(p.child, t.child)
        if isinstance(p, (Oplus, Odot)):
            return go(p.left, t.left) and go(p.right, t.right)
        if isinstance(p, Delta):
            return p.divisor == t.divisor and go(p.child, t.child)
        assert isinstance(p, Scale)
        return p.factor == t.factor and go(p.child, t.child)

    return binding if go(pattern, target) else None


# ---------------------------------------------------------------------------
# Positions
# ---------------------------------------------------------------------------

Position = Sequence[int]


def subformula_at(f: Formula, pos: Position) -> Formula:
    node = f
    for step, branch in enumerate(pos):
        kids = node.children()
        if not 0 <= branch < len(kids):
            raise InvalidPosition(f"no child {branch} at depth {step} of {fm.to_text(node)}")
        node = kids[branch]
    return node


def replace_at(f: Formula, pos: Position, new: Formula) -> Formula:
    if not pos:
        return new
    branch, rest = pos[0], pos[1:]
    kids = f.children()
    if not 0 <= branch < len(kids):
        raise InvalidPosition(f"no child {branch} of {fm.to_text(f)}")
    child = replace_at(kids[branch], rest, new)
    if isinstance(f, Not):
        return fm.lnot(child)
    if isinstance(f, Oplus):
        return fm.oplus(child, f.right) if branch == 0 else fm.oplus(f.left, child)
    if isinstance(f, Odot):
        return fm.odot(child, f.right) if branch == 0 else fm.odot(f.left, child)
    if isinstance(f, Delta):
        return fm.delta(f.divisor, child)
    assert isinstance(f, Scale)
    return fm.scale(f.factor, child)


def all_positions(f: Formula) -> list[tuple[int, ...]]:
    """Pre-order list of all positions in the tree (prefix paths)."""
    out: list[tuple[int, ...]] = []

    def walk(node: Formula, path: tuple[int, ...]) -> None:
        out.append(path)
        for i, child in enumerate(node.children()):
            walk(child, path + (i,))

    walk(f, ())
    return out


def apply_axiom(
    f: Formula,
    axiom: Axiom,
    direction: str,
    pos: Position,
    binding: Mapping[int, Formula] | None = None,
) -> Formula:
    """Replace the subformula at pos by the instantiated other side of the axiom.

    The binding is normally inferred by matching; it must be supplied
    explicitly when the matched side does not mention every metavariable of
    the other side (e.g. applying x+1 = 1 from right to left).
    """
    src, dst = axiom.side(direction)
    sub = subformula_at(f, pos)
    if binding is None:
        binding = match_instantiation(src, sub)
        if binding is None:
            raise NoMatchAtPosition(
                f"{fm.to_text(sub)} is not an instance of {fm.to_text(src)}"
            )
    else:
        if substitute(src, binding) is not sub:
            raise NoMatchAtPosition("supplied binding does not instantiate the matched side")
    missing = fm.variables(dst) - set(binding)
    if missing:
        raise NoMatchAtPosition(
            f"metavariable{'s' if len(missing) > 1 else ''} "
            f"{sorted(_METAVAR_NAMES.get(i, f'#{i}') for i in missing)} unbound; "
            "supply an explicit binding"
        )
    return replace_at(f, pos, substitute(dst, binding))


def applicable_rewrites(f: Formula, axioms: Iterable[Axiom]):
    """All (axiom, direction, position, binding) quadruples applicable to f."""
    out = []
    for pos in all_positions(f):
        sub = subformula_at(f, pos)
        for ax in axioms:
            for direction in ("LR", "RL"):
                src, dst = ax.side(direction)
                binding = match_instantiation(src, sub)
                if binding is not None and not (fm.variables(dst) - set(binding)):
                    out.append((ax, direction, pos, binding))
    return out


def apply_axiom_on_graph(
    g: SubstitutionGraph,
    level: int,
    index: int,
    axiom: Axiom,
    direction: str,
    pos: Position,
    binding: Mapping[int, Formula] | None = None,
) -> SubstitutionGraph:
    """Rewrite one node's formula in place; its certificate is dropped."""
    if level < 1:
        raise InputNodeTarget("input nodes carry no rewritable formula")
    if not level <= g.depth or not 1 <= index <= g.widths[level]:
        raise ValueError(f"no node ({level},{index})")
    new_formula = apply_axiom(g.node(level, index).formula, axiom, direction, pos, binding)
    if new_formula.max_var > g.widths[level - 1]:
        raise VariableEscape(
            f"rewrite introduces x{new_formula.max_var} beyond width {g.widths[level - 1]}"
        )
    new_level = list(g.nodes[level - 1])
    new_level[index - 1] = GraphNode(new_formula, certificate=None)
    new_nodes = g.nodes[: level - 1] + (tuple(new_level),) + g.nodes[level:]
    return SubstitutionGraph(g.widths, new_nodes)


# ---------------------------------------------------------------------------
# Catalogs
# ---------------------------------------------------------------------------

_X, _Y, _Z = fm.var(1), fm.var(2), fm.var(3)


def _iterate(op, n: int, t: Formula) -> Formula:
    """Left-associated n-fold op of t; the empty iterate is the op's unit."""
    if n == 0:
        return fm.ZERO if op is fm.oplus else fm.ONE
    acc = t
    for _ in range(n - 1):
        acc = op(acc, t)
    return acc


def mv_catalog() -> list[Axiom]:
    """The sixteen axioms of many-valued algebra."""
    x, y, z = _X, _Y, _Z
    o, a, n = fm.oplus, fm.odot, fm.lnot
    spec = [
        ("Ax1", o(x, y), o(y, x)),
        ("Ax1p", a(x, y), a(y, x)),
        ("Ax2", o(x, o(y, z)), o(o(x, y), z)),
        ("Ax2p", a(x, a(y, z)), a(a(x, y), z)),
        ("Ax3", o(x, n(x)), fm.ONE),
        ("Ax3p", a(x, n(x)), fm.ZERO),
        ("Ax4", o(x, fm.ONE), fm.ONE),
        ("Ax4p", a(x, fm.ZERO), fm.ZERO),
        ("Ax5", o(x, fm.ZERO), x),
        ("Ax5p", a(x, fm.ONE), x),
        ("Ax6", n(o(x, y)), a(n(x), n(y))),
        ("Ax6p", n(a(x, y)), o(n(x), n(y))),
        ("Ax7", x, n(n(x))),
        ("Ax8", n(fm.ZERO), fm.ONE),
        ("Ax9", o(a(x, n(y)), y), o(a(y, n(x)), x)),
        ("Ax9p", a(o(x, n(y)), y), a(o(y, n(x)), x)),
    ]
    return [Axiom(i, l, r, "MV") for i, l, r in spec]


def mvk_catalog(k: int) -> list[Axiom]:
    """Axioms of (k+1)-valued algebra: MV plus the finite-case families."""
    if k < 1:
        raise ValueError("k must be >= 1")
    axioms = [Axiom(a.id, a.lhs, a.rhs, f"MVk:{k}") for a in mv_catalog()]
    x = _X
    if k == 1:
        axioms.append(Axiom("AxF1", fm.oplus(x, x), x, "MVk:1"))
        axioms.append(Axiom("AxF1p", fm.odot(x, x), x, "MVk:1"))
        return axioms
    for j in range(2, k):
        if k % j == 0:
            continue
        # Inner iterates follow the outer sum/product family; the sound reading
        # of the finite-valued schema on I_k.
        zero_lhs = _iterate(
            fm.odot,
            k,
            fm.odot(_iterate(fm.oplus, j, x), fm.oplus(fm.lnot(x), fm.lnot(_iterate(fm.oplus, j - 1, x)))),
        )
        one_lhs = _iterate(
            fm.oplus,
            k,
            fm.oplus(_iterate(fm.odot, j, x), fm.odot(fm.lnot(x), fm.lnot(_iterate(fm.odot, j - 1, x)))),
        )
        axioms.append(Axiom(f"AxFk{k}j{j}", zero_lhs, fm.ZERO, f"MVk:{k}"))
        axioms.append(Axiom(f"AxFk{k}j{j}p", one_lhs, fm.ONE, f"MVk:{k}"))
    return axioms


def dmv_catalog(max_n: int) -> list[Axiom]:
    """MV plus the division axioms instantiated for n = 1..max_n.

    For each n: the n-fold sum of delta_n x equals x, and delta_n x strongly
    conjoined with the (n-1)-fold sum of delta_n x equals 0.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    axioms = [Axiom(a.id, a.lhs, a.rhs, f"DMV:{max_n}") for a in mv_catalog()]
    x = _X
    for n in range(1, max_n + 1):
        dn = fm.delta(n, x)
        axioms.append(Axiom(f"AxD{n}", _iterate(fm.oplus, n, dn), x, f"DMV:{max_n}"))
        axioms.append(
            Axiom(f"AxD{n}p", fm.odot(dn, _iterate(fm.oplus, n - 1, dn)), fm.ZERO, f"DMV:{max_n}")
        )
    return axioms


def rmv_catalog(scalars: Sequence[Fraction]) -> list[Axiom]:
    """MV plus the four scalar-operator axiom families over the given rationals."""
    rs = sorted({Fraction(r) for r in scalars})
    for r in rs:
        if not 0 <= r <= 1:
            raise ValueError(f"scalar {r} outside [0,1]")
    tag = "RMV:" + ",".join(format_rational(r) for r in rs)
    axioms = [Axiom(a.id, a.lhs, a.rhs, tag) for a in mv_catalog()]
    x, y = _X, _Y
    for r in rs:
        axioms.append(
            Axiom(
                f"AxR1_{r}",
                fm.scale(r, fm.odot(x, fm.lnot(y))),
                fm.odot(fm.scale(r, x), fm.lnot(fm.scale(r, y))),
                tag,
            )
        )
    for r in rs:
        for q in rs:
            rq = max(Fraction(0), r - q)
            axioms.append(
                Axiom(
                    f"AxR2_{r}_{q}",
                    fm.scale(rq, x),
                    fm.odot(fm.scale(r, x), fm.lnot(fm.scale(q, x))),
                    tag,
                )
            )
            axioms.append(
                Axiom(
                    f"AxR3_{r}_{q}",
                    fm.scale(r, fm.scale(q, x)),
                    fm.scale(r * q, x),
                    tag,
                )
            )
    axioms.append(Axiom("AxR4", fm.scale(Fraction(1), x), x, tag))
    return axioms


def catalog(spec: str) -> list[Axiom]:
    """Parse a catalog spec: MV | MVk:<k> | DMV:<n> | RMV:<r1,r2,...>."""
    if spec == "MV":
        return mv_catalog()
    kind, _, arg = spec.partition(":")
    if kind == "MVk" and arg:
        return mvk_catalog(int(arg))
    if kind == "DMV" and arg:
        return dmv_catalog(int(arg))
    if kind == "RMV" and arg:
        return rmv_catalog([parse_rational(r) for r in arg.split(",")])
    raise ValueError(f"unknown axiom set {spec!r}")


def catalog_by_id(axioms: Iterable[Axiom]) -> dict[str, Axiom]:
    return {a.id: a for a in axioms}


# ---------------------------------------------------------------------------
# Derivation traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    axiom_id: str
    direction: str  # "LR" | "RL"
    pos: tuple[int, ...]
    binding: Mapping[int, Formula] | None = None
    node: tuple[int, int] | None = None  # (level, index) for graph traces


@dataclass(frozen=True)
class DerivationTrace:
    start: Formula
    steps: tuple[Step, ...] = field(default_factory=tuple)


def replay(trace: DerivationTrace, axioms: Mapping[str, Axiom]) -> list[Formula]:
    """All intermediate formulas, starting formula included."""
    out = [trace.start]
    current = trace.start
    for idx, step in enumerate(trace.steps):
        ax = axioms.get(step.axiom_id)
        if ax is None:
            raise StepFailure(idx, f"unknown axiom {step.axiom_id!r}")
        try:
            current = apply_axiom(current, ax, step.direction, step.pos, step.binding)
        except RewriteError as e:
            raise StepFailure(idx, str(e)) from e
        out.append(current)
    return out


def check_derivation(
    trace: DerivationTrace, expected_end: Formula, axioms: Mapping[str, Axiom]
) -> bool:
    """Replay every step; True iff the final formula equals expected_end."""
    return replay(trace, axioms)[-1] is expected_end


# Trace wire format: one JSON object per line.  A leading {"start": ...}
# object is allowed for formula-level traces; graph traces add "node".


def _binding_to_json(binding: Mapping[int, Formula] | None) -> dict | None:
    if binding is None:
        return None
    return {_METAVAR_NAMES.get(i, f"#{i}"): fm.to_text(f) for i, f in binding.items()}


def _binding_from_json(data: dict | None) -> dict[int, Formula] | None:
    if data is None:
        return None
    return {_METAVAR_INDICES[name]: fm.parse(text) for name, text in data.items()}


def trace_to_jsonl(trace: DerivationTrace) -> str:
    lines = [json.dumps({"start": fm.to_text(trace.start)})]
    for step in trace.steps:
        entry: dict = {
            "axiom": step.axiom_id,
            "dir": step.direction,
            "pos": list(step.pos),
        }
        bind = _binding_to_json(step.binding)
        if bind is not None:
            entry["bind"] = bind
        if step.node is not None:
            entry["node"] = list(step.node)
        lines.append(json.dumps(entry))
    return "\n".join(lines) + "\n"


def steps_from_jsonl(text: str) -> tuple[Formula | None, list[Step]]:
    start: Formula | None = None
    steps: list[Step] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        data = json.loads(line)
        if "start" in data and "axiom" not in data:
            start = fm.parse(data["start"])
            continue
        steps.append(
            Step(
                axiom_id=data["axiom"],
                direction=data.get("dir", "LR"),
                pos=tuple(data.get("pos", ())),
                binding=_binding_from_json(data.get("bind")),
                node=tuple(data["node"]) if "node" in data else None,
            )
        )
    return start, steps


def apply_trace_to_graph(
    g: SubstitutionGraph, steps: Sequence[Step], axioms: Mapping[str, Axiom]
) -> SubstitutionGraph:
    for idx, step in enumerate(steps):
        ax = axioms.get(step.axiom_id)
        if ax is None:
            raise StepFailure(idx, f"unknown axiom {step.axiom_id!r}")
        if step.node is None:
            raise StepFailure(idx, "graph trace step lacks a node reference")
        level, index = step.node
        try:
            g = apply_axiom_on_graph(g, level, index, ax, step.direction, step.pos, step.binding)
        except RewriteError as e:
            raise StepFailure(idx, str(e)) from e
    return g


# ---------------------------------------------------------------------------
# Axiom-to-relu symmetry glossary
# ---------------------------------------------------------------------------


class RhoExpr:
    """Expression over metavariables built from affine arithmetic and rho."""

    def evaluate(self, env: Mapping[int, Fraction]) -> Fraction:
        raise NotImplementedError


@dataclass(frozen=True)
class RhoConst(RhoExpr):
    value: Fraction

    def evaluate(self, env):
        return self.value

    def __str__(self):
        return format_rational(self.value)


@dataclass(frozen=True)
class RhoVar(RhoExpr):
    index: int

    def evaluate(self, env):
        return env[self.index]

    def __str__(self):
        return _METAVAR_NAMES.get(self.index, f"#{self.index}")


@dataclass(frozen=True)
class RhoSum(RhoExpr):
    left: RhoExpr
    right: RhoExpr
    sign: int  # +1 or -1 on the right operand

    def evaluate(self, env):
        r = self.right.evaluate(env)
        return self.left.evaluate(env) + (r if self.sign > 0 else -r)

    def __str__(self):
        return f"{self.left} {'+' if self.sign > 0 else '-'} {self.right}"


@dataclass(frozen=True)
class RhoScale(RhoExpr):
    factor: Fraction
    child: RhoExpr

    def evaluate(self, env):
        return self.factor * self.child.evaluate(env)

    def __str__(self):
        return f"{format_rational(self.factor)}*({self.child})"


@dataclass(frozen=True)
class Rho(RhoExpr):
    child: RhoExpr

    def evaluate(self, env):
        v = self.child.evaluate(env)
        return v if v > 0 else Fraction(0)

    def __str__(self):
        return f"rho({self.child})"


def _to_rho(f: Formula) -> RhoExpr:
    if isinstance(f, fm.Const):
        return RhoConst(Fraction(f.value))
    if isinstance(f, Var):
        return RhoVar(f.index)
    if isinstance(f, Not):
        return RhoSum(RhoConst(Fraction(1)), _to_rho(f.child), -1)
    if isinstance(f, Odot):
        # x*y = rho(x + y - 1)
        inner = RhoSum(RhoSum(_to_rho(f.left), _to_rho(f.right), +1), RhoConst(Fraction(1)), -1)
        return Rho(inner)
    if isinstance(f, Oplus):
        # x+y = 1 - rho(-x - y + 1) = 1 - rho(1 - x - y)
        inner = RhoSum(RhoSum(RhoConst(Fraction(1)), _to_rho(f.left), -1), _to_rho(f.right), -1)
        return RhoSum(RhoConst(Fraction(1)), Rho(inner), -1)
    raise ValueError("symmetry rendering is defined for the MV connectives only")


def render_symmetry(axiom: Axiom) -> tuple[RhoExpr, RhoExpr]:
    """Both sides as compositions of affine maps and rho; they agree pointwise."""
    return _to_rho(axiom.lhs), _to_rho(axiom.rhs)


def axiom_arity(axiom: Axiom) -> int:
    return max(axiom.lhs.max_var, axiom.rhs.max_var)
