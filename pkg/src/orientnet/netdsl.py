"""Line-oriented text format for networks.

One statement per line, ``#`` starts a comment, tokens are separated by
whitespace::

    network <id>
    stimulus <id> level=<float>
    node <id> pathway=<id> [output] [flipped]
    pathwaydef <id> input=<node-id> output=<node-id>
    edge <A|I> <src-id> -> <dst-id> alpha=<float> beta=<float> class=<pathway|crosstalk|feedback|stimulus>
    config phi=<float> [tol_rel=<float>] [tol_abs=<float>] [eps_ss=<float>] [t_max=<float>]
           [n_dense=<int>] [stimulus_level=<float>]

Statements may appear in any order.  Pathway node order is recovered by
walking pathway-class edges from the declared input to the declared output.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields

from .netcore import (Diagnostic, EdgeClass, EdgeKind, EdgeSpec, ModelConfig, Network,
                      NetworkError, NodeSpec, PathwaySpec, StimulusSpec, structural_diagnostics)

__all__ = ["ParseError", "parse", "parse_with_diagnostics", "serialize", "validate",
           "validate_text"]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*\Z")
_CONFIG_KEYS = ("phi", "tol_rel", "tol_abs", "eps_ss", "t_max", "n_dense", "stimulus_level")


class ParseError(ValueError):
    """Text could not be turned into a network; ``diagnostics`` say why."""

    def __init__(self, diagnostics):
        self.diagnostics = tuple(diagnostics)
        first = self.diagnostics[0] if self.diagnostics else "unknown error"
        super().__init__(str(first))

    @property
    def is_syntax(self) -> bool:
        return any(d.stage == "syntax" for d in self.diagnostics if d.is_error)


@dataclass
class _Tok:
    text: str
    col: int


class _LineError(Exception):
    def __init__(self, message, tok: _Tok | None = None, stage="syntax"):
        super().__init__(message)
        self.tok = tok
        self.stage = stage


def _tokenize(line: str) -> list[_Tok]:
    body = line.split("#", 1)[0]
    return [_Tok(m.group(), m.start() + 1) for m in re.finditer(r"\S+", body)]


def _ident(tok: _Tok, what: str) -> str:
    if not _IDENT.match(tok.text):
        raise _LineError(f"invalid {what} identifier {tok.text!r}", tok)
    return tok.text


def _float(tok: _Tok, key: str, value: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise _LineError(f"{key} must be a number, got {value!r}", tok) from None
    if not math.isfinite(v):
        raise _LineError(f"{key} must be finite, got {value!r}", tok)
    return v


def _attrs(toks: list[_Tok], allowed, flags=()):
    """Split trailing tokens into ``key=value`` pairs and bare flags."""
    values, seen_flags = {}, set()
    for tok in toks:
        if "=" in tok.text:
            key, _, val = tok.text.partition("=")
            if key not in allowed:
                raise _LineError(f"unknown attribute {key!r}", tok)
            if key in values:
                raise _LineError(f"attribute {key!r} given twice", tok)
            if val == "":
                raise _LineError(f"attribute {key!r} has no value", tok)
            values[key] = (val, tok)
        elif tok.text in flags:
            if tok.text in seen_flags:
                raise _LineError(f"flag {tok.text!r} given twice", tok)
            seen_flags.add(tok.text)
        else:
            raise _LineError(f"unexpected token {tok.text!r}", tok)
    return values, seen_flags


def _require(values, key, head: _Tok):
    if key not in values:
        raise _LineError(f"missing required attribute {key}=", head)
    return values[key]


class _Document:
    def __init__(self):
        self.network_id = None
        self.config = None
        self.stimuli = []      # (StimulusSpec, line)
        self.nodes = []        # (id, pathway, output, flipped, line)
        self.pathwaydefs = []  # (id, input, output, line)
        self.edges = []        # (EdgeSpec, line)
        self.lines = {}


def _statement(doc: _Document, toks: list[_Tok], lineno: int, diags: list):
    head = toks[0]
    kw, rest = head.text, toks[1:]

    def need(n, usage):
        if len(rest) < n:
            raise _LineError(f"expected: {usage}", head)

    if kw == "network":
        need(1, "network <id>")
        if len(rest) > 1:
            raise _LineError(f"unexpected token {rest[1].text!r}", rest[1])
        if doc.network_id is not None:
            raise _LineError("second network statement", head, stage="semantic")
        doc.network_id = (_ident(rest[0], "network"), lineno)
    elif kw == "stimulus":
        need(1, "stimulus <id> level=<float>")
        sid = _ident(rest[0], "stimulus")
        values, _ = _attrs(rest[1:], ("level",))
        val, tok = _require(values, "level", head)
        level = _float(tok, "level", val)
        if abs(level) > 1:
            raise _LineError(f"stimulus level must satisfy |u| <= 1, got {level}", tok, "semantic")
        doc.stimuli.append((StimulusSpec(sid, level), lineno))
    elif kw == "node":
        need(1, "node <id> pathway=<id> [output] [flipped]")
        nid = _ident(rest[0], "node")
        values, flags = _attrs(rest[1:], ("pathway",), ("output", "flipped"))
        val, tok = _require(values, "pathway", head)
        pid = _ident(_Tok(val, tok.col), "pathway")
        doc.nodes.append((nid, pid, "output" in flags, "flipped" in flags, lineno))
    elif kw == "pathwaydef":
        need(1, "pathwaydef <id> input=<node-id> output=<node-id>")
        pid = _ident(rest[0], "pathway")
        values, _ = _attrs(rest[1:], ("input", "output"))
        vi, ti = _require(values, "input", head)
        vo, to = _require(values, "output", head)
        doc.pathwaydefs.append((pid, _ident(_Tok(vi, ti.col), "node"),
                                _ident(_Tok(vo, to.col), "node"), lineno))
    elif kw == "edge":
        need(4, "edge <A|I> <src> -> <dst> alpha=<float> beta=<float> class=<class>")
        kind_tok, src, arrow, dst = rest[:4]
        if kind_tok.text not in ("A", "I"):
            raise _LineError(f"edge kind must be A or I, got {kind_tok.text!r}", kind_tok)
        if arrow.text != "->":
            raise _LineError(f"expected '->', got {arrow.text!r}", arrow)
        values, _ = _attrs(rest[4:], ("alpha", "beta", "class"))
        va, ta = _require(values, "alpha", head)
        vb, tb = _require(values, "beta", head)
        vc, tc = _require(values, "class", head)
        alpha = _float(ta, "alpha", va)
        beta = _float(tb, "beta", vb)
        try:
            ecls = EdgeClass(vc)
        except ValueError:
            raise _LineError(f"unknown edge class {vc!r}", tc) from None
        if not alpha > 0:
            raise _LineError(f"alpha must be positive, got {alpha}", ta, "semantic")
        if not beta > 1:
            raise _LineError(f"beta must exceed 1, got {beta}", tb, "semantic")
        edge = EdgeSpec(_ident(src, "source"), _ident(dst, "target"),
                        EdgeKind(kind_tok.text), alpha, beta, ecls)
        doc.edges.append((edge, lineno))
    elif kw == "config":
        values, _ = _attrs(rest, _CONFIG_KEYS)
        val, tok = _require(values, "phi", head)
        kwargs = {"phi": _float(tok, "phi", val)}
        for key in _CONFIG_KEYS[1:]:
            if key in values:
                v, t = values[key]
                if key == "n_dense":
                    try:
                        kwargs[key] = int(v)
                    except ValueError:
                        raise _LineError(f"n_dense must be an integer, got {v!r}", t) from None
                else:
                    kwargs[key] = _float(t, key, v)
        if doc.config is not None:
            raise _LineError("second config statement", head, stage="semantic")
        try:
            doc.config = (ModelConfig(**kwargs), lineno)
        except ValueError as exc:
            raise _LineError(str(exc), head, "semantic") from None
    else:
        raise _LineError(f"unknown statement {kw!r}", head)


def _assemble(doc: _Document, diags: list) -> Network | None:
    def err(msg, line, token=""):
        diags.append(Diagnostic("error", line, msg, token))

    if doc.network_id is None:
        err("missing 'network <id>' statement", 1)
        return None
    lines = {}
    seen = {}
    for stim, ln in doc.stimuli:
        if stim.id in seen:
            err(f"duplicate id {stim.id!r}", ln, stim.id)
        seen[stim.id] = ln
        lines[("stimulus", stim.id)] = ln
    for nid, _, _, _, ln in doc.nodes:
        if nid in seen:
            err(f"duplicate id {nid!r}", ln, nid)
        seen[nid] = ln
        lines[("node", nid)] = ln
        lines[("output", nid)] = ln
    pdefs = {}
    for pid, inp, out, ln in doc.pathwaydefs:
        if pid in pdefs:
            err(f"duplicate pathway {pid!r}", ln, pid)
        pdefs[pid] = (inp, out, ln)
        lines[("pathway", pid)] = ln
    for i, (_, ln) in enumerate(doc.edges):
        lines[("edge", i)] = ln
    if diags:
        return None

    node_ids = {nid for nid, *_ in doc.nodes}
    stim_ids = {s.id for s, _ in doc.stimuli}
    members: dict[str, list[str]] = {}
    for nid, pid, _, _, ln in doc.nodes:
        if pid not in pdefs:
            err(f"node {nid!r} names undefined pathway {pid!r}", ln, pid)
        members.setdefault(pid, []).append(nid)
    for edge, ln in doc.edges:
        for ref in (edge.source, edge.target):
            if ref not in node_ids and ref not in stim_ids:
                err(f"edge references undeclared id {ref!r}", ln, ref)
    if diags:
        return None

    pathways = []
    for pid, (inp, out, ln) in pdefs.items():
        mem = members.get(pid, [])
        for ref in (inp, out):
            if ref not in node_ids:
                err(f"pathway {pid!r} references undeclared node {ref!r}", ln, ref)
            elif ref not in mem:
                err(f"pathway {pid!r}: node {ref!r} belongs to another pathway", ln, ref)
        if diags:
            continue
        chain = [inp]
        while chain[-1] != out:
            nxt = [e.target for e, _ in doc.edges
                   if e.edge_class is EdgeClass.PATHWAY and e.source == chain[-1]
                   and e.target in mem]
            if len(nxt) != 1 or nxt[0] in chain:
                what = "a gap" if not nxt else "a branch or cycle"
                err(f"pathway {pid!r} has {what} after node {chain[-1]!r}", ln, chain[-1])
                break
            chain.append(nxt[0])
        else:
            stray = [m for m in mem if m not in chain]
            if stray:
                err(f"pathway {pid!r}: nodes {stray} are not on the chain from "
                    f"{inp} to {out}", lines[("node", stray[0])], stray[0])
            pathways.append(PathwaySpec(pid, tuple(chain)))
    for nid, pid, is_out, _, ln in doc.nodes:
        if is_out and pid in pdefs and pdefs[pid][1] != nid:
            err(f"output {nid!r} is not the terminal node of pathway {pid!r}", ln, nid)
    if diags:
        return None

    nodes = tuple(NodeSpec(nid, pid, flipped) for nid, pid, _, flipped, _ in doc.nodes)
    outputs = tuple(nid for nid, _, is_out, _, _ in doc.nodes if is_out)
    try:
        return Network(doc.network_id[0], nodes, tuple(e for e, _ in doc.edges), tuple(pathways),
                       tuple(s for s, _ in doc.stimuli), outputs,
                       doc.config[0] if doc.config else None, source_lines=lines)
    except NetworkError as exc:
        diags.extend(exc.diagnostics or [Diagnostic("error", 1, str(exc))])
        return None


def parse_with_diagnostics(text) -> tuple[Network | None, list[Diagnostic]]:
    """Parse without raising: returns the network (or None) and all error diagnostics."""
    diags: list[Diagnostic] = []
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            line = bytes(text)[:exc.start].count(b"\n") + 1
            return None, [Diagnostic("error", line, "input is not valid UTF-8", stage="syntax")]
    doc = _Document()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokenize(raw)
        if not toks:
            continue
        try:
            _statement(doc, toks, lineno, diags)
        except _LineError as exc:
            tok = exc.tok
            diags.append(Diagnostic("error", lineno, str(exc), tok.text if tok else "",
                                    exc.stage, tok.col if tok else None))
    if diags:
        return None, diags
    net = _assemble(doc, diags)
    if net is None and not diags:
        diags.append(Diagnostic("error", 1, "could not build network"))
    return net, diags


def parse(text) -> Network:
    """Build a :class:`Network` from text; raises :class:`ParseError` with diagnostics."""
    net, diags = parse_with_diagnostics(text)
    if net is None:
        raise ParseError(diags)
    return net


def _num(x: float) -> str:
    return format(float(x), ".17g")


def serialize(network: Network) -> str:
    """Canonical text: fixed section order, declaration order within sections."""
    out = [f"network {network.id}"]
    cfg = network.config
    if cfg is not None:
        if cfg.phi_overrides:
            raise NetworkError("per-edge phi overrides have no text representation")
        default = ModelConfig()
        parts = [f"phi={_num(cfg.phi)}"]
        for f in fields(ModelConfig):
            if f.name in _CONFIG_KEYS[1:]:
                v = getattr(cfg, f.name)
                if v is not None and v != getattr(default, f.name):
                    parts.append(f"{f.name}={v if f.name == 'n_dense' else _num(v)}")
        out.append("config " + " ".join(parts))
    for s in network.stimuli:
        out.append(f"stimulus {s.id} level={_num(s.level)}")
    for p in network.pathways:
        out.append(f"pathwaydef {p.id} input={p.input} output={p.output}")
    outputs = set(network.outputs)
    for n in network.nodes:
        line = f"node {n.id} pathway={n.pathway}"
        if n.id in outputs:
            line += " output"
        if n.flipped:
            line += " flipped"
        out.append(line)
    for e in network.edges:
        out.append(f"edge {e.kind.value} {e.source} -> {e.target} alpha={_num(e.alpha)} "
                   f"beta={_num(e.beta)} class={e.edge_class.value}")
    return "\n".join(out) + "\n"


def validate(network: Network) -> list[Diagnostic]:
    """Re-run every structural check; empty list iff the network is clean."""
    return structural_diagnostics(network)


def validate_text(text) -> list[Diagnostic]:
    net, diags = parse_with_diagnostics(text)
    if net is None:
        return diags
    return validate(net)
