"""Builders for the bundled networks and access to the shipped asset files."""
from __future__ import annotations

import itertools
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .netcore import (DEFAULT_STIMULUS_LEVEL, EdgeClass, EdgeKind, EdgeSpec, NodeSpec,
                      PathwaySpec, StimulusSpec, Network, NetworkError)

__all__ = [
    "FIG5_ALPHAS",
    "FIG5_BETAS",
    "pattern_string",
    "parse_pattern",
    "linear_pathway",
    "all_patterns",
    "feedback_variant",
    "feedback_family",
    "fig5_pathway",
    "egfr_surrogate",
    "catalog",
    "asset_names",
    "load_asset",
    "resolve_asset",
]

FIG5_ALPHAS = (0.5, 1.0, 2.0, 1.3)
FIG5_BETAS = (10.0, 5.0, 15.0, 18.0)
STIMULUS_ALPHA, STIMULUS_BETA = 1.0, 5.0
FEEDBACK_ALPHA, FEEDBACK_BETA = 1.0, 5.0

A, I = EdgeKind.ACTIVATION, EdgeKind.INHIBITION


def pattern_string(kinds: Iterable[EdgeKind]) -> str:
    return "".join(k.value for k in kinds)


def parse_pattern(pattern) -> tuple[EdgeKind, ...]:
    if isinstance(pattern, str):
        return tuple(EdgeKind.parse(c) for c in pattern.strip().upper())
    return tuple(pattern)


def linear_pathway(pattern, name: str | None = None, level: float = DEFAULT_STIMULUS_LEVEL,
                   alphas: Sequence[float] | None = None,
                   betas: Sequence[float] | None = None,
                   stimulus_kind: EdgeKind = A) -> Network:
    """Pathway ``x1 -> ... -> xN`` with edge kinds ``pattern`` and a stimulus on ``x1``.

    Edge parameters default to the reference chain's values, cycled for longer chains.
    """
    kinds = parse_pattern(pattern)
    n = len(kinds) + 1
    alphas = tuple(alphas) if alphas is not None else tuple(
        FIG5_ALPHAS[i % 4] for i in range(n - 1))
    betas = tuple(betas) if betas is not None else tuple(FIG5_BETAS[i % 4] for i in range(n - 1))
    ids = [f"x{i}" for i in range(1, n + 1)]
    nodes = tuple(NodeSpec(i, "P") for i in ids)
    edges = [EdgeSpec("s", ids[0], stimulus_kind, STIMULUS_ALPHA, STIMULUS_BETA,
                      EdgeClass.STIMULUS)]
    for k, kind in enumerate(kinds):
        edges.append(EdgeSpec(ids[k], ids[k + 1], kind, alphas[k], betas[k], EdgeClass.PATHWAY))
    name = name or f"path{n}_{pattern_string(kinds)}"
    return Network(name, nodes, tuple(edges), (PathwaySpec("P", tuple(ids)),),
                   (StimulusSpec("s", level),), (ids[-1],))


def all_patterns(length: int) -> list[tuple[EdgeKind, ...]]:
    """All ``2**(length-1)`` edge-kind patterns of a pathway with ``length`` nodes."""
    if length < 1:
        raise ValueError("pathway length must be positive")
    return [tuple(p) for p in itertools.product((A, I), repeat=length - 1)]


def feedback_variant(source: int, target: int, base: str = "IIIA") -> Network:
    """Base pathway plus one inhibiting feedback ``x{source} -> x{target}``."""
    net = linear_pathway(base)
    n = len(net.nodes)
    if not 1 <= target < source <= n:
        raise ValueError("feedback must point upstream between pathway nodes")
    fb = EdgeSpec(f"x{source}", f"x{target}", I, FEEDBACK_ALPHA, FEEDBACK_BETA,
                  EdgeClass.FEEDBACK)
    return net.replace(id=f"fb_{base}_x{source}_x{target}", edges=net.edges + (fb,),
                       source_lines=None)


def feedback_family(base: str = "IIIA") -> list[Network]:
    n = len(base) + 1
    return [feedback_variant(j, i, base) for j in range(2, n + 1) for i in range(1, j)]


def fig5_pathway() -> Network:
    return linear_pathway("IIIA", name="fig5")


def _egfr_nodes():
    # pathway id -> chain of node ids; P2a/P2b form the EGFR-family group
    return {
        "P1": ("w1", "w2", "w3"),          # Wnt/beta-catenin analogue
        "P2a": ("e1", "e2", "e3", "x1"),   # EGFR arm, output x1
        "P2b": ("h1", "h2", "x2"),         # HER2 arm, output x2
        "P3": ("n1", "n2", "n3"),          # Notch analogue
        "PT": ("pt",),                     # single-node intermediary (PTEN analogue)
        "P4": ("t1", "t2", "t3"),          # TNF-R analogue
    }


# Unoriented kinds.  Orientation flips {w1, e1, e2, h1, n1, n2, t1}; the
# stimulus and crosstalk kinds are chosen so that in oriented form every
# stimulus activates except P4's and every crosstalk activates except the
# one edge leaving P4.
_EGFR_PATHWAY_KINDS = {
    "P1": "IA",
    "P2a": "AIA",
    "P2b": "IA",
    "P3": "AI",
    "P4": "IA",
}
_EGFR_STIMULI = {"P1": I, "P2a": I, "P2b": I, "P3": I, "P4": A}
_EGFR_CROSSTALK = (
    # source, target, unoriented kind
    ("w3", "e2", I),   # Wnt drives the EGFR arm
    ("e3", "w2", A),   # EGFR arm back onto Wnt, closing a positive loop
    ("n3", "h2", A),   # Notch drives the HER2 arm
    ("h2", "n2", I),   # HER2 arm back onto Notch
    ("n3", "pt", A),   # Notch onto the PTEN analogue
    ("pt", "e3", A),   # PTEN analogue onto the EGFR arm
    ("t3", "pt", I),   # the single crosstalk leaving TNF-R
)


def egfr_surrogate(level: float = DEFAULT_STIMULUS_LEVEL) -> Network:
    """Six-pathway integrated network standing in for the EGFR/HER2 study.

    A surrogate: four biological groups, two outputs on the EGFR group, one
    single-node intermediary pathway.  In oriented form every stimulus
    activates except P4's, and crosstalk is activating except edges touching P4.
    """
    chains = _egfr_nodes()
    nodes, pathways, edges, stimuli = [], [], [], []
    for pid, chain in chains.items():
        pathways.append(PathwaySpec(pid, chain))
        nodes.extend(NodeSpec(nid, pid) for nid in chain)
    k = 0
    for pid, pattern in _EGFR_PATHWAY_KINDS.items():
        chain = chains[pid]
        sid = f"s_{pid}"
        stimuli.append(StimulusSpec(sid, level))
        edges.append(EdgeSpec(sid, chain[0], _EGFR_STIMULI[pid], STIMULUS_ALPHA, STIMULUS_BETA,
                              EdgeClass.STIMULUS))
        for a, b, kind in zip(chain[:-1], chain[1:], parse_pattern(pattern)):
            edges.append(EdgeSpec(a, b, kind, FIG5_ALPHAS[k % 4], FIG5_BETAS[k % 4],
                                  EdgeClass.PATHWAY))
            k += 1
    for src, tgt, kind in _EGFR_CROSSTALK:
        edges.append(EdgeSpec(src, tgt, kind, 1.0, 5.0, EdgeClass.CROSSTALK))
    return Network("egfr-surrogate", tuple(nodes), tuple(edges), tuple(pathways),
                   tuple(stimuli), ("x1", "x2"))


def catalog() -> dict[str, Network]:
    """All bundled networks by name: 16 patterns, 10 feedback variants, fig5, egfr."""
    nets = [linear_pathway(p) for p in all_patterns(5)]
    nets += feedback_family()
    nets += [fig5_pathway(), egfr_surrogate()]
    return {n.id: n for n in nets}


def asset_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("orientnet.networks").iterdir()
                  if p.name.endswith(".net"))


def load_asset(name: str) -> Network:
    from .netdsl import parse

    path = resources.files("orientnet.networks") / f"{name}.net"
    if not path.is_file():
        raise NetworkError(f"no bundled asset named {name!r}")
    return parse(path.read_text(encoding="utf-8"))


def resolve_asset(ref: str) -> tuple[Network, str]:
    """Load a network from a file path or a bundled asset name; returns (network, text)."""
    from .netdsl import parse

    p = Path(ref)
    if p.is_file():
        text = p.read_text(encoding="utf-8")
    else:
        res = resources.files("orientnet.networks") / f"{ref}.net"
        if not res.is_file():
            raise FileNotFoundError(f"{ref!r} is neither a file nor a bundled asset")
        text = res.read_text(encoding="utf-8")
    return parse(text), text
