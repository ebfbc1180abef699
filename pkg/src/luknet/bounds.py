"""Exact extrema of a node's global map over the unit cube.

Every upstream nonlinear node is case-split into its affine regimes
(relu: t<=0 / t>=0; clip: t<=0 / 0<=t<=1 / t>=1), each feasible leaf is an
exact LP, and the outer min/max over leaves is the answer.  Interval
arithmetic pins regimes that cannot flip and prunes branches that cannot
beat the incumbent, but never replaces an exact LP at a leaf.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .network import CLIP, NONE, RELU, Network, NodeRef, apply_activation, node_local_map
from .numerics import Infeasible, Interval, cube_constraints, lp_extremum, lp_feasible

_F0 = Fraction(0)
_F1 = Fraction(1)


class BudgetExceeded(Exception):
    """The branch-and-bound search exceeded its configured node budget."""


AffineForm = tuple[tuple[Fraction, ...], Fraction]  # coeffs over inputs, constant


def _combine(row: Sequence[Fraction], bias: Fraction, forms: Sequence[AffineForm]) -> AffineForm:
    d = len(forms[0][0]) if forms else 0
    coeffs = [_F0] * d
    const = bias
    for w, (fc, fk) in zip(row, forms):
        if w == 0:
            continue
        const += w * fk
        for t, c in enumerate(fc):
            if c != 0:
                coeffs[t] += w * c
    return tuple(coeffs), const


def _box_interval(form: AffineForm) -> Interval:
    coeffs, const = form
    lo = const + sum((c for c in coeffs if c < 0), _F0)
    hi = const + sum((c for c in coeffs if c > 0), _F0)
    return Interval(lo, hi)


def interval_propagation(net: Network, ref: NodeRef) -> Interval:
    """Closed-form layer-wise interval bound on the node's pre-activation map.

    Always encloses the exact extrema; used for pruning and as a sanity check.
    """
    prev = [Interval(_F0, _F1) for _ in range(net.input_dim)]
    for j in range(1, ref.layer + 1):
        layer = net.layers[j - 1]
        cur: list[Interval] = []
        for i in range(layer.width):
            lo = layer.biases[i]
            hi = layer.biases[i]
            for w, iv in zip(layer.weights[i], prev):
                if w > 0:
                    lo += w * iv.lo
                    hi += w * iv.hi
                elif w < 0:
                    lo += w * iv.hi
                    hi += w * iv.lo
            pre = Interval(lo, hi)
            if j == ref.layer and i == ref.index - 1:
                return pre
            act = layer.activations[i]
            cur.append(
                Interval(apply_activation(act, pre.lo), apply_activation(act, pre.hi))
            )
        prev = cur
    raise AssertionError("unreachable")


def _regimes(act: str, iv: Interval):
    """Feasible (constraint-kind, output-kind) regime tags for one activation."""
    if act == RELU:
        if iv.hi <= 0:
            return [("none", "zero")]
        if iv.lo >= 0:
            return [("none", "linear")]
        return [("le0", "zero"), ("ge0", "linear")]
    if act == CLIP:
        out = []
        if iv.lo > 1 or iv.hi < 0:
            return [("none", "one" if iv.lo > 1 else "zero")]
        if iv.lo >= 0 and iv.hi <= 1:
            return [("none", "linear")]
        if iv.lo <= 0:
            out.append(("le0", "zero"))
        out.append(("mid", "linear"))
        if iv.hi >= 1:
            out.append(("ge1", "one"))
        return out
    raise AssertionError(f"activation {act!r} has no regimes")


def exact_extrema(
    net: Network,
    node: NodeRef | str = "output",
    activated: bool = False,
    node_budget: int | None = None,
) -> Interval:
    """Exact min/max of a node's global map over [0,1]^d0.

    ``activated`` selects the post-activation value; the default is the
    pre-activation input to the node (for the output node with no activation
    the two coincide).  Raises BudgetExceeded when the regime search visits
    more than ``node_budget`` branches.
    """
    ref = NodeRef(net.depth, 1) if node == "output" else node
    row, bias, act = node_local_map(net, ref)  # validates the reference

    d0 = net.input_dim
    input_forms: list[AffineForm] = []
    for i in range(d0):
        unit = [_F0] * d0
        unit[i] = _F1
        input_forms.append((tuple(unit), _F0))

    # Upstream nodes, layer by layer; inside a layer widest IA slack first.
    upstream: list[NodeRef] = []
    for j in range(1, ref.layer):
        layer_refs = [NodeRef(j, i + 1) for i in range(net.width(j))]
        layer_refs.sort(key=lambda r: interval_propagation(net, r).width, reverse=True)
        upstream.extend(layer_refs)

    base_constraints = cube_constraints(d0)
    visited = 0

    def bump() -> None:
        nonlocal visited
        visited += 1
        if node_budget is not None and visited > node_budget:
            raise BudgetExceeded(f"branch-and-bound budget of {node_budget} exceeded")

    def target_form(forms: dict[NodeRef, AffineForm]) -> AffineForm:
        if ref.layer == 1:
            prev = input_forms
        else:
            prev = [forms[NodeRef(ref.layer - 1, i + 1)] for i in range(net.width(ref.layer - 1))]
        return _combine(row, bias, prev)

    def node_form(r: NodeRef, forms: dict[NodeRef, AffineForm]) -> AffineForm:
        nrow, nbias, _ = node_local_map(net, r)
        if r.layer == 1:
            prev = input_forms
        else:
            prev = [forms[NodeRef(r.layer - 1, i + 1)] for i in range(net.width(r.layer - 1))]
        return _combine(nrow, nbias, prev)

    def ia_target(forms: dict[NodeRef, AffineForm]) -> Interval:
        """Interval bound on the target given the regimes fixed so far."""
        post: dict[NodeRef, Interval] = {}
        for j in range(1, ref.layer):
            layer = net.layers[j - 1]
            for i in range(layer.width):
                r = NodeRef(j, i + 1)
                if r in forms:
                    post[r] = _box_interval(forms[r])
                    continue
                lo = layer.biases[i]
                hi = layer.biases[i]
                for t in range(net.width(j - 1)):
                    w = layer.weights[i][t]
                    if w == 0:
                        continue
                    src = Interval(_F0, _F1) if j == 1 else post[NodeRef(j - 1, t + 1)]
                    if w > 0:
                        lo += w * src.lo
                        hi += w * src.hi
                    else:
                        lo += w * src.hi
                        hi += w * src.lo
                a = layer.activations[i]
                post[r] = Interval(apply_activation(a, lo), apply_activation(a, hi))
        pre_prev = (
            [Interval(_F0, _F1) for _ in range(d0)]
            if ref.layer == 1
            else [post[NodeRef(ref.layer - 1, i + 1)] for i in range(net.width(ref.layer - 1))]
        )
        lo = bias
        hi = bias
        for w, iv in zip(row, pre_prev):
            if w > 0:
                lo += w * iv.lo
                hi += w * iv.hi
            elif w < 0:
                lo += w * iv.hi
                hi += w * iv.lo
        return Interval(lo, hi)

    feasible_cache: dict[tuple, bool] = {}

    def cached_feasible(extra: tuple) -> bool:
        got = feasible_cache.get(extra)
        if got is None:
            got = lp_feasible(base_constraints + list(extra), d0)
            feasible_cache[extra] = got
        return got

    def optimize(sense: str) -> Fraction:
        incumbent: Fraction | None = None

        def search(idx: int, forms: dict[NodeRef, AffineForm], extra: tuple) -> None:
            nonlocal incumbent
            bump()
            if incumbent is not None:
                box = ia_target(forms)
                if sense == "max" and box.hi <= incumbent:
                    return
                if sense == "min" and box.lo >= incumbent:
                    return
            if idx == len(upstream):
                coeffs, const = target_form(forms)
                if not extra:
                    # No regime constraints were added: the box optimum is closed form.
                    box = _box_interval((coeffs, const))
                    val = box.hi if sense == "max" else box.lo
                else:
                    try:
                        val = lp_extremum(
                            coeffs, base_constraints + list(extra), sense, constant=const
                        )
                    except Infeasible:
                        feasible_cache[extra] = False
                        return
                if incumbent is None:
                    incumbent = val
                elif sense == "max":
                    incumbent = max(incumbent, val)
                else:
                    incumbent = min(incumbent, val)
                return
            r = upstream[idx]
            _, _, ract = node_local_map(net, r)
            form = node_form(r, forms)
            iv = _box_interval(form)
            coeffs, const = form
            last = idx == len(upstream) - 1
            for kind, output in _regimes(ract, iv):
                if kind == "le0":
                    new_extra = extra + ((coeffs, -const),)
                elif kind == "ge0":
                    new_extra = extra + ((tuple(-c for c in coeffs), const),)
                elif kind == "mid":
                    new_extra = extra + (
                        (tuple(-c for c in coeffs), const),
                        (coeffs, _F1 - const),
                    )
                elif kind == "ge1":
                    new_extra = extra + ((tuple(-c for c in coeffs), const - _F1),)
                else:
                    new_extra = extra
                # Feasibility probes pay off only above leaves; leaf LPs catch
                # their own infeasibility.
                if new_extra is not extra and not last and not cached_feasible(new_extra):
                    continue
                if output == "zero":
                    out_form: AffineForm = (tuple([_F0] * d0), _F0)
                elif output == "one":
                    out_form = (tuple([_F0] * d0), _F1)
                else:
                    out_form = form
                forms[r] = out_form
                search(idx + 1, forms, new_extra)
                del forms[r]

        search(0, {}, ())
        assert incumbent is not None  # the cube is never empty
        return incumbent

    lo = optimize("min")
    hi = optimize("max")
    if activated and act != NONE:
        return Interval(apply_activation(act, lo), apply_activation(act, hi))
    return Interval(lo, hi)
