"""Node flipping and pathway/network orientation.

Flipping a node negates its state variable and toggles the kind of every
incident edge.  Orienting walks each pathway from its output upstream and
flips the source of any inhibiting pathway edge, leaving a network whose
pathway edges are all activations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .netcore import EdgeClass, EdgeKind, Network, NetworkError

__all__ = [
    "FlipReport",
    "flip_node",
    "orient_pathway",
    "orient_network",
    "predicted_flips",
    "stimulus_orientation",
    "loop_sign",
    "feedback_loop",
]

ACTIVATED = "activated"
INHIBITED = "inhibited"


@dataclass(frozen=True)
class FlipReport:
    flipped_nodes: frozenset[str] = frozenset()
    # one entry per toggle event: (edge id, old kind, new kind)
    toggled_edges: tuple[tuple[int, EdgeKind, EdgeKind], ...] = ()
    # pathway id -> "activated" | "inhibited", for pathways with an input stimulus
    stimulus_orientation: dict[str, str] = field(default_factory=dict)
    # post-orientation kinds of stimulus, crosstalk and feedback edges
    final_kinds: dict[int, EdgeKind] = field(default_factory=dict)

    def merged(self, other: "FlipReport") -> "FlipReport":
        return FlipReport(
            self.flipped_nodes | other.flipped_nodes,
            self.toggled_edges + other.toggled_edges,
            {**self.stimulus_orientation, **other.stimulus_orientation},
            {**self.final_kinds, **other.final_kinds},
        )


def _flip(network: Network, node_id: str) -> tuple[Network, list]:
    if not network.has_node(node_id):
        raise NetworkError(f"unknown node {node_id!r}")
    if network.is_terminal(node_id):
        raise NetworkError(f"refusing to flip pathway output {node_id!r}")
    edges = list(network.edges)
    toggles = []
    for i, e in enumerate(network.edges):
        # a self-loop touches the node twice and is toggled twice
        hits = (e.source == node_id) + (e.target == node_id)
        for _ in range(hits):
            old = edges[i].kind
            edges[i] = edges[i].toggled()
            toggles.append((i, old, edges[i].kind))
    k = network.node_index(node_id)
    nodes = list(network.nodes)
    nodes[k] = type(nodes[k])(nodes[k].id, nodes[k].pathway, not nodes[k].flipped)
    return network.replace(nodes=tuple(nodes), edges=tuple(edges)), toggles


def flip_node(network: Network, node_id: str) -> Network:
    """Return ``network`` with ``node_id`` flipped and its incident edges toggled."""
    return _flip(network, node_id)[0]


def _stimulus_summary(network: Network, pathway_ids) -> dict[str, str]:
    out = {}
    for pid in pathway_ids:
        p = network.pathway(pid)
        stim = network.stimulus_edges(p.input)
        if stim:
            kind = network.edges[stim[0]].kind
            out[pid] = ACTIVATED if kind is EdgeKind.ACTIVATION else INHIBITED
    return out


def _non_pathway_kinds(network: Network) -> dict[int, EdgeKind]:
    return {i: e.kind for i, e in enumerate(network.edges)
            if e.edge_class is not EdgeClass.PATHWAY}


def _orient_one(network: Network, pathway_id: str) -> tuple[Network, FlipReport]:
    p = network.pathway(pathway_id)
    chain = network.pathway_edges(pathway_id)
    flipped = set()
    toggles: list = []
    # edge chain[k] joins p.nodes[k] -> p.nodes[k + 1]; walk output -> input
    for k in range(len(chain) - 1, -1, -1):
        if network.edges[chain[k]].kind is EdgeKind.INHIBITION:
            network, t = _flip(network, p.nodes[k])
            flipped.add(p.nodes[k])
            toggles.extend(t)
    return network, FlipReport(frozenset(flipped), tuple(toggles))


def orient_pathway(network: Network, pathway_id: str) -> tuple[Network, FlipReport]:
    """Orient a single pathway; every pathway edge of it ends up an activation."""
    oriented, report = _orient_one(network, pathway_id)
    return oriented, FlipReport(report.flipped_nodes, report.toggled_edges,
                                _stimulus_summary(oriented, [pathway_id]),
                                _non_pathway_kinds(oriented))


def orient_network(network: Network) -> tuple[Network, FlipReport]:
    """Orient every pathway in declaration order.

    Only pathway nodes other than the output are ever flipped, and each node
    belongs to exactly one pathway, so the result does not depend on the
    processing order.
    """
    members = {nid for p in network.pathways for nid in p.nodes}
    stray = [n.id for n in network.nodes if n.id not in members]
    if stray:
        raise NetworkError(f"nodes not assigned to any pathway: {stray}")
    report = FlipReport()
    for p in network.pathways:
        network, r = _orient_one(network, p.id)
        report = report.merged(r)
    return network, FlipReport(report.flipped_nodes, report.toggled_edges,
                               _stimulus_summary(network, [p.id for p in network.pathways]),
                               _non_pathway_kinds(network))


def predicted_flips(kinds: Sequence[EdgeKind]) -> set[int]:
    """Nodes (1-based) that orientation flips, from the pathway edge kinds alone.

    Node ``i`` is flipped iff an odd number of the edges ``i .. N-1`` are
    inhibitions.
    """
    flips = set()
    parity = 0
    for i in range(len(kinds), 0, -1):
        parity ^= kinds[i - 1] is EdgeKind.INHIBITION
        if parity:
            flips.add(i)
    return flips


def stimulus_orientation(report: FlipReport, pathway_id: str) -> str:
    try:
        return report.stimulus_orientation[pathway_id]
    except KeyError:
        raise NetworkError(f"pathway {pathway_id!r} has no input stimulus") from None


def loop_sign(network: Network, cycle: Sequence[int]) -> str:
    """Sign of a directed cycle given as an ordered list of edge ids.

    The product of edge signs round a cycle is unchanged by flipping any
    node, so the oriented and unoriented networks give the same answer.
    """
    if not cycle:
        raise NetworkError("empty cycle")
    edges = [network.edges[i] for i in cycle]
    for a, b in zip(edges, edges[1:] + edges[:1]):
        if a.edge_class is EdgeClass.STIMULUS or a.target != b.source:
            raise NetworkError("edges do not form a directed cycle")
    sign = 1
    for e in edges:
        sign *= e.kind.sign
    return "positive" if sign > 0 else "negative"


def feedback_loop(network: Network, edge_id: int) -> list[int]:
    """Cycle closed by a feedback edge pointing upstream within its pathway."""
    e = network.edges[edge_id]
    p = network.pathway(network.node(e.source).pathway)
    if network.node(e.target).pathway != p.id:
        raise NetworkError("feedback edge leaves its pathway")
    lo, hi = p.nodes.index(e.target), p.nodes.index(e.source)
    if lo > hi:
        raise NetworkError("edge does not point upstream")
    chain = network.pathway_edges(p.id)
    return chain[lo:hi] + [edge_id]
