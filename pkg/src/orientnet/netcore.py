"""Network domain types, test-model kinetics and edge-model classifiers.

State variables live on ``[-1, 1]``.  Every edge carries an activation or
inhibition kind and the kinetic parameters ``alpha`` (amplitude) and
``beta`` (nonlinearity) of the Michaelis-Menten-like rate function::

    F(x; alpha, beta) = alpha * beta * (1 - x) / (2 * beta - (1 + x))

The global bias ``phi`` scales the activating and deactivating halves of
every rate pair by ``(1 + phi) / 4`` and ``(1 - phi) / 4``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "EdgeKind",
    "EdgeClass",
    "NodeSpec",
    "EdgeSpec",
    "StimulusSpec",
    "PathwaySpec",
    "ModelConfig",
    "Network",
    "Diagnostic",
    "NetworkError",
    "KineticsDomainError",
    "michaelis_F",
    "edge_rates",
    "check_edge_conditions",
    "classify_edge_model",
    "EdgeConditionReport",
    "DEFAULT_STIMULUS_LEVEL",
]

DEFAULT_STIMULUS_LEVEL = 0.5

#: absolute/relative tolerance for algebraic identities
IDENTITY_TOL = 1e-12
#: tolerance for finite-difference sign checks
FD_SIGN_TOL = 1e-10
FD_STEP = 1e-5


class NetworkError(ValueError):
    """Structural problem with a network (bad ids, broken pathways, ...)."""

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = tuple(diagnostics)


class KineticsDomainError(ValueError):
    """Kinetic parameters outside the domain of the rate functions."""


class EdgeKind(enum.Enum):
    ACTIVATION = "A"
    INHIBITION = "I"

    @property
    def sign(self) -> int:
        return 1 if self is EdgeKind.ACTIVATION else -1

    def flipped(self) -> "EdgeKind":
        if self is EdgeKind.ACTIVATION:
            return EdgeKind.INHIBITION
        return EdgeKind.ACTIVATION

    @classmethod
    def parse(cls, token: str) -> "EdgeKind":
        try:
            return cls(token)
        except ValueError:
            raise ValueError(f"edge kind must be 'A' or 'I', got {token!r}") from None


class EdgeClass(enum.Enum):
    PATHWAY = "pathway"
    CROSSTALK = "crosstalk"
    FEEDBACK = "feedback"
    STIMULUS = "stimulus"


@dataclass(frozen=True)
class NodeSpec:
    id: str
    pathway: str
    flipped: bool = False


@dataclass(frozen=True)
class StimulusSpec:
    id: str
    level: float = DEFAULT_STIMULUS_LEVEL


@dataclass(frozen=True)
class EdgeSpec:
    """One interaction ``source -> target``.

    ``source`` is a node id or, for stimulus-class edges, a stimulus id.
    """

    source: str
    target: str
    kind: EdgeKind
    alpha: float = 1.0
    beta: float = 2.0
    edge_class: EdgeClass = EdgeClass.PATHWAY

    def toggled(self) -> "EdgeSpec":
        return replace(self, kind=self.kind.flipped())


@dataclass(frozen=True)
class PathwaySpec:
    """Ordered chain of node ids; the first is the input, the last the output."""

    id: str
    nodes: tuple[str, ...]

    @property
    def input(self) -> str:
        return self.nodes[0]

    @property
    def output(self) -> str:
        return self.nodes[-1]

    def __len__(self):
        return len(self.nodes)


@dataclass(frozen=True)
class ModelConfig:
    """Global model and integrator settings.

    ``stimulus_level`` overrides the level of every stimulus when set.
    ``phi_overrides`` holds ``(edge_index, phi)`` pairs for per-edge bias.
    """

    phi: float = 0.0
    stimulus_level: float | None = None
    tol_rel: float = 1e-9
    tol_abs: float = 1e-12
    eps_ss: float = 1e-8
    t_max: float = 1e4
    n_dense: int = 1001
    phi_overrides: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if not -1.0 <= self.phi <= 1.0:
            raise ValueError(f"phi must lie in [-1, 1], got {self.phi}")
        for _, p in self.phi_overrides:
            if not -1.0 <= p <= 1.0:
                raise ValueError(f"phi override must lie in [-1, 1], got {p}")
        if self.stimulus_level is not None and abs(self.stimulus_level) > 1.0:
            raise ValueError("stimulus level must satisfy |u| <= 1")
        if not self.eps_ss > 0:
            raise ValueError("eps_ss must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not (self.tol_rel > 0 and self.tol_abs > 0):
            raise ValueError("integrator tolerances must be positive")
        if self.n_dense < 2:
            raise ValueError("n_dense must be at least 2")

    def with_phi(self, phi: float) -> "ModelConfig":
        return replace(self, phi=float(phi))


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    line: int | None
    message: str
    token: str = ""
    stage: str = "semantic"  # "syntax" | "semantic"
    column: int | None = None

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self):
        where = f"line {self.line}" if self.line is not None else "<network>"
        if self.line is not None and self.column is not None:
            where += f", col {self.column}"
        tok = f" [{self.token}]" if self.token else ""
        return f"{where}: {self.severity}: {self.message}{tok}"


@dataclass(frozen=True)
class Network:
    """Immutable signalling network: pathways joined by crosstalk and feedback.

    Construction runs the structural checks and raises :class:`NetworkError`
    on any error-level finding.  Edge ids are positions in ``edges``; node
    order fixes the layout of state vectors.
    """

    id: str
    nodes: tuple[NodeSpec, ...]
    edges: tuple[EdgeSpec, ...]
    pathways: tuple[PathwaySpec, ...]
    stimuli: tuple[StimulusSpec, ...] = ()
    outputs: tuple[str, ...] = ()
    config: ModelConfig | None = None
    source_lines: Mapping | None = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        for name in ("nodes", "edges", "pathways", "stimuli", "outputs"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        errors = [d for d in structural_diagnostics(self) if d.is_error]
        if errors:
            raise NetworkError("; ".join(d.message for d in errors), errors)

    # -- lookups -----------------------------------------------------------
    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    def node_index(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise NetworkError(f"unknown node {node_id!r}") from None

    def node(self, node_id: str) -> NodeSpec:
        return self.nodes[self.node_index(node_id)]

    def has_node(self, node_id: str) -> bool:
        return node_id in self._index

    def stimulus(self, stim_id: str) -> StimulusSpec:
        for s in self.stimuli:
            if s.id == stim_id:
                return s
        raise NetworkError(f"unknown stimulus {stim_id!r}")

    def is_stimulus(self, ref: str) -> bool:
        return any(s.id == ref for s in self.stimuli)

    def pathway(self, pathway_id: str) -> PathwaySpec:
        for p in self.pathways:
            if p.id == pathway_id:
                return p
        raise NetworkError(f"unknown pathway {pathway_id!r}")

    def role(self, node_id: str) -> str:
        """``"output"`` for pathway terminals, ``"input"`` for pathway heads, else ``"internal"``."""
        p = self.pathway(self.node(node_id).pathway)
        if node_id == p.output:
            return "output"
        if node_id == p.input:
            return "input"
        return "internal"

    def is_terminal(self, node_id: str) -> bool:
        return self.role(node_id) == "output"

    def incident_edges(self, node_id: str) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.source == node_id or e.target == node_id]

    def pathway_edges(self, pathway_id: str) -> list[int]:
        """Pathway-class edge ids of one pathway, ordered input to output."""
        p = self.pathway(pathway_id)
        out = []
        for a, b in zip(p.nodes[:-1], p.nodes[1:]):
            idx = [i for i, e in enumerate(self.edges)
                   if e.edge_class is EdgeClass.PATHWAY and e.source == a and e.target == b]
            if len(idx) != 1:
                raise NetworkError(f"pathway {pathway_id!r}: no unique edge {a} -> {b}")
            out.append(idx[0])
        return out

    def stimulus_edges(self, node_id: str) -> list[int]:
        return [i for i, e in enumerate(self.edges)
                if e.edge_class is EdgeClass.STIMULUS and e.target == node_id]

    @property
    def flipped_nodes(self) -> frozenset[str]:
        return frozenset(n.id for n in self.nodes if n.flipped)

    # -- derived networks --------------------------------------------------
    def replace(self, **changes) -> "Network":
        changes.setdefault("source_lines", self.source_lines)
        return replace(self, **changes)

    def with_params(self, alphas: Sequence[float], betas: Sequence[float]) -> "Network":
        if len(alphas) != len(self.edges) or len(betas) != len(self.edges):
            raise NetworkError("parameter vectors must have one entry per edge")
        edges = tuple(replace(e, alpha=float(a), beta=float(b))
                      for e, a, b in zip(self.edges, alphas, betas))
        return self.replace(edges=edges)

    def with_edge_kinds(self, kinds: Iterable[EdgeKind]) -> "Network":
        edges = tuple(replace(e, kind=k) for e, k in zip(self.edges, kinds))
        return self.replace(edges=edges)

    @property
    def _index(self) -> dict[str, int]:
        # cached lazily; frozen dataclass so bypass __setattr__
        try:
            return self.__dict__["_index_cache"]
        except KeyError:
            idx = {n.id: i for i, n in enumerate(self.nodes)}
            object.__setattr__(self, "_index_cache", idx)
            return idx


def _line(network, key):
    if network.source_lines is None:
        return None
    return network.source_lines.get(key)


def structural_diagnostics(network: Network) -> list[Diagnostic]:
    """All error and warning findings for ``network``.

    Line numbers are attached when the network came from parsed text.
    """
    diags: list[Diagnostic] = []

    def err(msg, key=None, token=""):
        diags.append(Diagnostic("error", _line(network, key), msg, token))

    def warn(msg, key=None, token=""):
        diags.append(Diagnostic("warning", _line(network, key), msg, token))

    node_ids = [n.id for n in network.nodes]
    stim_ids = [s.id for s in network.stimuli]
    seen: set[str] = set()
    for ref in node_ids + stim_ids:
        if ref in seen:
            err(f"duplicate id {ref!r}", ("node", ref), ref)
        seen.add(ref)
    node_set = set(node_ids)
    stim_set = set(stim_ids)

    for s in network.stimuli:
        if not (isinstance(s.level, (int, float)) and math.isfinite(s.level)) or abs(s.level) > 1:
            err(f"stimulus level must satisfy |u| <= 1, got {s.level}", ("stimulus", s.id), s.id)

    # pathway membership
    pathway_ids = [p.id for p in network.pathways]
    if len(set(pathway_ids)) != len(pathway_ids):
        err("duplicate pathway id")
    members: dict[str, list[str]] = {}
    for p in network.pathways:
        if len(p.nodes) == 0:
            err(f"pathway {p.id!r} has no nodes", ("pathway", p.id), p.id)
            continue
        if len(set(p.nodes)) != len(p.nodes):
            err(f"pathway {p.id!r} visits a node twice", ("pathway", p.id), p.id)
        for nid in p.nodes:
            members.setdefault(nid, []).append(p.id)
            if nid not in node_set:
                err(f"pathway {p.id!r} references unknown node {nid!r}", ("pathway", p.id), nid)
    for n in network.nodes:
        owners = members.get(n.id, [])
        if len(owners) == 0:
            err(f"node {n.id!r} belongs to no pathway", ("node", n.id), n.id)
        elif len(owners) > 1:
            err(f"node {n.id!r} belongs to several pathways {owners}", ("node", n.id), n.id)
        elif owners[0] != n.pathway:
            err(f"node {n.id!r} declares pathway {n.pathway!r} but is listed in {owners[0]!r}",
                ("node", n.id), n.id)
    position = {}
    for p in network.pathways:
        for k, nid in enumerate(p.nodes):
            position[nid] = (p.id, k)
    terminals = {p.output for p in network.pathways if p.nodes}
    for n in network.nodes:
        if n.flipped and n.id in terminals:
            err(f"pathway output {n.id!r} cannot be flipped", ("node", n.id), n.id)

    # edges
    for i, e in enumerate(network.edges):
        key = ("edge", i)
        if not (math.isfinite(e.alpha) and e.alpha > 0):
            err(f"alpha must be positive, got {e.alpha}", key, e.source)
        if not (math.isfinite(e.beta) and e.beta > 1):
            err(f"beta must exceed 1, got {e.beta}", key, e.source)
        if e.target not in node_set:
            err(f"edge target {e.target!r} is not a declared node", key, e.target)
            continue
        if e.edge_class is EdgeClass.STIMULUS:
            if e.source not in stim_set:
                err(f"stimulus edge source {e.source!r} is not a declared stimulus", key, e.source)
                continue
        else:
            if e.source in stim_set:
                err(f"edge from stimulus {e.source!r} must have class=stimulus", key, e.source)
                continue
            if e.source not in node_set:
                err(f"edge source {e.source!r} is not a declared node", key, e.source)
                continue
        if e.edge_class is EdgeClass.STIMULUS:
            tpos = position.get(e.target)
            if tpos is not None and tpos[1] != 0:
                warn(f"stimulus {e.source!r} targets non-input node {e.target!r}", key, e.target)
            continue
        spos, tpos = position.get(e.source), position.get(e.target)
        if spos is None or tpos is None:
            continue
        same = spos[0] == tpos[0]
        if e.edge_class is EdgeClass.PATHWAY:
            if not (same and tpos[1] == spos[1] + 1):
                err(f"pathway edge {e.source} -> {e.target} does not join consecutive "
                    f"nodes of one pathway", key, e.source)
        elif e.edge_class is EdgeClass.CROSSTALK:
            if same and tpos[1] == spos[1] + 1:
                warn(f"crosstalk {e.source} -> {e.target} shadows a pathway edge", key, e.source)
            elif same:
                warn(f"crosstalk {e.source} -> {e.target} stays inside pathway {spos[0]!r}",
                     key, e.source)
        elif e.edge_class is EdgeClass.FEEDBACK:
            if not same:
                warn(f"feedback {e.source} -> {e.target} crosses pathways", key, e.source)
            elif tpos[1] > spos[1]:
                warn(f"feedback {e.source} -> {e.target} points downstream", key, e.source)

    # contiguity: exactly one pathway edge per consecutive pair
    for p in network.pathways:
        for a, b in zip(p.nodes[:-1], p.nodes[1:]):
            n_edges = sum(1 for e in network.edges
                          if e.edge_class is EdgeClass.PATHWAY and e.source == a and e.target == b)
            if n_edges == 0:
                err(f"pathway {p.id!r} has a gap: no pathway edge {a} -> {b}", ("pathway", p.id), a)
            elif n_edges > 1:
                err(f"pathway {p.id!r} has {n_edges} pathway edges {a} -> {b}", ("pathway", p.id), a)

    used = {e.source for e in network.edges if e.edge_class is EdgeClass.STIMULUS}
    for s in network.stimuli:
        if s.id not in used:
            warn(f"stimulus {s.id!r} drives no edge", ("stimulus", s.id), s.id)

    if len(set(network.outputs)) != len(network.outputs):
        err("duplicate output id")
    for o in network.outputs:
        if o not in node_set:
            err(f"output {o!r} is not a declared node", ("output", o), o)
        elif o not in terminals:
            err(f"output {o!r} is not the terminal node of its pathway", ("node", o), o)
    return diags


# -- kinetics ------------------------------------------------------------------

def _check_beta(beta):
    if np.any(np.asarray(beta) <= 1.0):
        raise KineticsDomainError("beta must exceed 1")


def michaelis_F(x, alpha, beta):
    """Rate function ``alpha*beta*(1-x) / (2*beta-(1+x))``; requires ``beta > 1``."""
    _check_beta(beta)
    x = np.asarray(x, dtype=float)
    out = alpha * beta * (1.0 - x) / (2.0 * beta - (1.0 + x))
    return out if out.ndim else float(out)


def edge_rates(x, y, kind: EdgeKind, alpha, beta, phi):
    """Return ``(r_plus, r_minus)`` for an edge from state ``y`` onto state ``x``.

    An inhibition edge is by construction the activation edge seen from the
    negated source, so both kinds share one code path.
    """
    _check_beta(beta)
    yy = kind.sign * np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    r_plus = 0.25 * (1.0 + phi) * (1.0 + yy) * michaelis_F(x, alpha, beta)
    r_minus = 0.25 * (1.0 - phi) * (1.0 - yy) * michaelis_F(-x, alpha, beta)
    return r_plus, r_minus


@dataclass(frozen=True)
class EdgeConditionReport:
    kind: EdgeKind
    holds: bool
    worst_margin: float
    grid: int

    def __bool__(self):
        return self.holds


def _grid(n):
    if n < 2:
        raise ValueError("grid needs at least 2 points per axis")
    g = np.linspace(-1.0, 1.0, n)
    return np.meshgrid(g, g, indexing="ij")


def check_edge_conditions(kind: EdgeKind, alpha, beta, phi, grid: int = 21,
                          step: float = FD_STEP, tol: float = FD_SIGN_TOL) -> EdgeConditionReport:
    """Check the activation/inhibition monotonicity condition on a uniform grid.

    Evaluates ``d r+/dy - d r-/dy`` by central differences; activation needs
    it non-negative everywhere, inhibition non-positive.
    """
    X, Y = _grid(grid)
    rp_hi, rm_hi = edge_rates(X, Y + step, kind, alpha, beta, phi)
    rp_lo, rm_lo = edge_rates(X, Y - step, kind, alpha, beta, phi)
    margin = ((rp_hi - rp_lo) - (rm_hi - rm_lo)) / (2.0 * step)
    margin = kind.sign * margin
    worst = float(margin.min())
    return EdgeConditionReport(kind, bool(worst >= -tol), worst, grid)


def _sign_class(diff, scale, labels):
    neg, zero, pos, mixed = labels
    tol = IDENTITY_TOL * np.maximum(1.0, scale)
    has_pos = bool(np.any(diff > tol))
    has_neg = bool(np.any(diff < -tol))
    if has_pos and has_neg:
        return mixed
    if has_pos:
        return pos
    if has_neg:
        return neg
    return zero


def classify_edge_model(kind: EdgeKind, alpha, beta, phi, grid: int = 21) -> tuple[str, str]:
    """Classify bias and symmetry of the test-model edge by pointwise comparison.

    Bias compares ``r+(x, y; T)`` with ``r-(-x, -y; T)``; symmetry compares
    ``r±(x, y; A)`` with ``r±(x, -y; I)``.  Grid points where both sides agree
    within tolerance are neutral, so boundary zeros do not spoil a strict
    classification.
    """
    X, Y = _grid(grid)
    rp, _ = edge_rates(X, Y, kind, alpha, beta, phi)
    _, rm_mirror = edge_rates(-X, -Y, kind, alpha, beta, phi)
    bias = _sign_class(rp - rm_mirror, np.maximum(np.abs(rp), np.abs(rm_mirror)),
                       ("negative", "unbiased", "positive", "mixed"))

    rpa, rma = edge_rates(X, Y, EdgeKind.ACTIVATION, alpha, beta, phi)
    rpi, rmi = edge_rates(X, -Y, EdgeKind.INHIBITION, alpha, beta, phi)
    diff = np.concatenate([(rpa - rpi).ravel(), (rma - rmi).ravel()])
    scale = np.concatenate([np.maximum(abs(rpa), abs(rpi)).ravel(),
                            np.maximum(abs(rma), abs(rmi)).ravel()])
    symmetry = _sign_class(diff, scale, ("inhibitor_weighted", "symmetric",
                                         "activator_weighted", "mixed"))
    return bias, symmetry
