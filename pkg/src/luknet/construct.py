"""Formula-to-network construction and the round-trip entry point.

Step I copies the layered shape of a normal substitution graph and reads each
node's affine row off its certificate (constant nodes are folded away).
Step II converts the clip network back to a relu network, inverting the
extraction's node splitting by telescoping pairs and aggregation.
"""
from __future__ import annotations

from fractions import Fraction
from math import ceil

from . import formula as fm
from .bounds import exact_extrema
from .extract import extract_graph, formula_for_certificate
from .graph import (
    CertificateMismatch,
    GraphError,
    MissingCertificate,
    SubstitutionGraph,
    normality_violation,
)
from .network import CLIP, NONE, RELU, Layer, Network, NodeRef, input_interval

_F0 = Fraction(0)
_F1 = Fraction(1)


class NotNormal(GraphError):
    """Construction requires a normal substitution graph."""


CONST0 = "const0"
CONST1 = "const1"


def kappa(node) -> str | tuple[tuple[Fraction, ...], Fraction]:
    """Map a normal node back to its affine clip neuron, or to a constant.

    The certificate must reproduce the stored formula; the constants 0 and 1
    have no neuron and are signalled by tag.
    """
    if node.certificate is None:
        raise MissingCertificate()
    if formula_for_certificate(node.certificate) is not node.formula:
        raise CertificateMismatch()
    if node.formula is fm.ZERO:
        return CONST0
    if node.formula is fm.ONE:
        return CONST1
    return node.certificate.m, node.certificate.b


def graph_to_sigma(g: SubstitutionGraph) -> Network:
    """Construction step I: a clip network realizing the represented formula.

    Constant-0 nodes disappear with their edges; constant-1 nodes disappear
    with their outgoing weight folded into each successor's bias.
    """
    violation = normality_violation(g)
    if violation is not None:
        raise NotNormal(str(violation))

    layers: list[Layer] = []
    # Per previous-level position: "kept" column index or a constant tag.
    prev_map: list[int | str] = list(range(g.widths[0]))
    prev_kept = g.widths[0]
    for level_index, level in enumerate(g.nodes, start=1):
        is_output = level_index == g.depth
        rows: list[tuple[Fraction, ...]] = []
        biases: list[Fraction] = []
        cur_map: list[int | str] = []
        for node in level:
            k = kappa(node)
            if k in (CONST0, CONST1) and not is_output:
                cur_map.append(k)  # dropped from the network
                continue
            if k in (CONST0, CONST1):
                # A constant output node keeps the layer alive with a bare bias.
                rows.append((_F0,) * prev_kept)
                biases.append(_F0 if k == CONST0 else _F1)
                cur_map.append(len(rows) - 1)
                continue
            m, b = k
            row = [_F0] * prev_kept
            bias = b
            for src, coeff in zip(prev_map, m):
                if src == CONST1:
                    bias += coeff
                elif src != CONST0:
                    row[src] = coeff
            rows.append(tuple(row))
            biases.append(bias)
            cur_map.append(len(rows) - 1)
        if not rows and not is_output:
            # Whole level folded to constants: fall back to constant carriers so
            # the layered shape stays well-formed.
            for pos, tag in enumerate(cur_map):
                rows.append((_F0,) * prev_kept)
                biases.append(_F0 if tag == CONST0 else _F1)
                cur_map[pos] = pos
        layers.append(Layer(tuple(rows), tuple(biases), (CLIP,) * len(rows)))
        prev_map = cur_map
        prev_kept = len(rows)
    return Network(g.widths[0], tuple(layers))


def sigma_to_rho(net: Network, node_budget: int | None = None) -> Network:
    """Construction step II: convert a clip network into a relu network.

    Hidden layers are processed from the deepest to the first.  A node whose
    input interval has upper bound L <= 1 swaps its activation; otherwise it
    becomes a relu pair (bias b and b-1, the twin's outgoing weights negated).
    Same-layer relu nodes with identical local maps are then aggregated into
    the earliest occurrence by summing outgoing weights; aggregated or
    synthetic nodes whose outgoing weights all cancel are removed.  The output
    activation is dropped when the exact range lies inside [0,1]; otherwise a
    differencing relu pair is appended.
    """
    layers = list(net.layers)
    for j in range(len(layers) - 2, -1, -1):
        layer = layers[j]
        nxt = layers[j + 1]
        # (row, bias, outgoing column, synthetic-or-merged flag)
        converted: list[list] = []
        for i in range(layer.width):
            row, b = layer.weights[i], layer.biases[i]
            col = [wrow[i] for wrow in nxt.weights]
            hi = input_interval(row, b).hi
            converted.append([row, b, col, False])
            if hi > 1:
                converted.append([row, b - 1, [-w for w in col], True])
        merged: list[list] = []
        index_of: dict[tuple, int] = {}
        for row, b, col, synth in converted:
            key = (row, b)
            if key in index_of:
                entry = merged[index_of[key]]
                entry[2] = [a + c for a, c in zip(entry[2], col)]
                entry[3] = True
            else:
                index_of[key] = len(merged)
                merged.append([row, b, col, synth])
        kept = [e for e in merged if not (e[3] and all(w == 0 for w in e[2]))]
        if not kept:  # everything cancelled; keep one inert node for shape
            merged[0][2] = [_F0] * nxt.width
            kept = [merged[0]]
        layers[j] = Layer(
            tuple(e[0] for e in kept),
            tuple(e[1] for e in kept),
            (RELU,) * len(kept),
        )
        layers[j + 1] = Layer(
            tuple(tuple(e[2][r] for e in kept) for r in range(nxt.width)),
            nxt.biases,
            nxt.activations,
        )

    candidate = Network(net.input_dim, tuple(layers))
    out = candidate.layers[-1]
    rng = exact_extrema(candidate, "output", node_budget=node_budget)
    if rng.lo >= 0 and rng.hi <= 1:
        layers[-1] = Layer(out.weights, out.biases, (NONE,))
        return Network(net.input_dim, tuple(layers))
    # General case: sigma(t) = rho(t) - rho(t-1) through a differencing node.
    pair = Layer(
        (out.weights[0], out.weights[0]),
        (out.biases[0], out.biases[0] - 1),
        (RELU, RELU),
    )
    differ = Layer(((_F1, -_F1),), (_F0,), (NONE,))
    layers[-1] = pair
    layers.append(differ)
    return Network(net.input_dim, tuple(layers))


def roundtrip(net: Network, flavor: str = "integer", node_budget: int | None = None) -> Network:
    """extract -> construct; structurally the identity on well-behaved networks."""
    g = extract_graph(net, flavor=flavor)
    return sigma_to_rho(graph_to_sigma(g), node_budget=node_budget)
