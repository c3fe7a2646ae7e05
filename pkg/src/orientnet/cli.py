"""``orientnet`` command line: batch commands that read network files and write CSV.

Exit codes: 0 success, 1 usage or I/O error, 2 unreadable/unparsable network,
3 validation errors, 4 simulation or metric failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, assets, figures, netdsl
from .dynamics import IntegrationError, compare_outputs, integrate
from .figures import FigureOptions, write_csv
from .metrics import CSV_HEADER, MetricUndefinedError, phi_grid, phi_sweep, sample_params
from .netcore import EdgeClass, ModelConfig, Network, NetworkError
from .orient import orient_network, predicted_flips

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INVALID, EXIT_SIMULATE = 0, 1, 2, 3, 4

log = logging.getLogger("orientnet")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        return phi_grid(float(a), float(b), int(n))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r} (want a:b:n): {exc}") from None


def _load(ref: str) -> Network:
    try:
        net, _ = assets.resolve_asset(ref)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_PARSE) from None
    except netdsl.ParseError as exc:
        msg = "\n".join(f"{ref}: {d}" for d in exc.diagnostics)
        raise CliError(msg, EXIT_PARSE) from None
    return net


def _config(base: ModelConfig | None, args) -> ModelConfig:
    cfg = base or ModelConfig()
    changes = {}
    for flag, name in (("phi", "phi"), ("tol_rel", "tol_rel"), ("tol_abs", "tol_abs"),
                       ("eps_ss", "eps_ss"), ("t_max", "t_max"),
                       ("stimulus_level", "stimulus_level")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[name] = value
    try:
        return dataclasses.replace(cfg, **changes)
    except ValueError as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_USAGE) from None


def _sweep_grid(args) -> np.ndarray:
    if args.phi_grid is not None:
        return args.phi_grid
    if args.phi is not None:
        return np.array([args.phi])
    return phi_grid()


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc}", EXIT_USAGE) from None
    if not os.access(out, os.W_OK):
        raise CliError(f"directory {out} is not writable", EXIT_USAGE)
    return out


def _write_text(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_USAGE) from None


def cmd_enumerate(args) -> int:
    if not 2 <= args.length <= 12:
        raise CliError("pathway length must be between 2 and 12", EXIT_USAGE)
    out = _out_dir(args.out)
    for kinds in assets.all_patterns(args.length):
        net = assets.linear_pathway(kinds)
        _write_text(out / f"{net.id}.net", netdsl.serialize(net))
        log.info("%s: %d flips", net.id, len(predicted_flips(kinds)))
    print(f"wrote {2 ** (args.length - 1)} networks to {out}")
    return EXIT_OK


def cmd_feedback_family(args) -> int:
    out = _out_dir(args.out)
    family = assets.feedback_family()
    for net in family:
        _write_text(out / f"{net.id}.net", netdsl.serialize(net))
    print(f"wrote {len(family)} networks to {out}")
    return EXIT_OK


def _sweep_rows(records):
    return [r.csv_row() for r in records]


def cmd_sweep(args) -> int:
    net = _load(args.network)
    cfg = _config(net.config, args)
    grid = _sweep_grid(args)
    ensemble = sample_params(net, args.samples, args.seed)
    try:
        sweeps = phi_sweep(net, grid, ensemble, cfg, want_tau=not args.no_tau,
                           workers=args.workers)
    except (IntegrationError, MetricUndefinedError) as exc:
        raise CliError(f"sweep failed: {exc}", EXIT_SIMULATE) from None
    if args.out is None:
        for o, recs in sweeps.items():
            if len(sweeps) > 1:
                print(f"# output={o}")
            _print_csv(CSV_HEADER, _sweep_rows(recs))
        return EXIT_OK
    out = Path(args.out)
    for o, recs in sweeps.items():
        path = out if len(sweeps) == 1 else out.with_name(f"{out.stem}_{o}{out.suffix}")
        write_csv(path, CSV_HEADER, _sweep_rows(recs))
        print(f"wrote {path}")
    return EXIT_OK


def _print_csv(header, rows):
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([figures.format_cell(v) for v in row])


def cmd_figures(args) -> int:
    names = list(figures.FIGURES) if args.figure == "all" else [args.figure]
    opts = FigureOptions(samples=args.samples, seed=args.seed,
                         grid=tuple(args.phi_grid) if args.phi_grid is not None
                         else tuple(phi_grid()),
                         config=_config(None, args), workers=args.workers)
    out = _out_dir(args.out)
    for name in names:
        try:
            paths = figures.emit_figure(name, out, opts)
        except (IntegrationError, MetricUndefinedError) as exc:
            raise CliError(f"{name} failed: {exc}", EXIT_SIMULATE) from None
        print(f"{name}: wrote {len(paths)} files to {out / name}")
    return EXIT_OK


def cmd_orient(args) -> int:
    net = _load(args.network)
    oriented, report = orient_network(net)
    text = netdsl.serialize(oriented)
    if args.out:
        _write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    flipped = [n.id for n in net.nodes if n.id in report.flipped_nodes]
    lines = [f"flipped nodes: {', '.join(flipped) if flipped else '(none)'}"]
    for pid, state in report.stimulus_orientation.items():
        change = ", ".join(
            f"{net.edges[i].source} {net.edges[i].kind.value}->{oriented.edges[i].kind.value}"
            for i in net.stimulus_edges(net.pathway(pid).input))
        lines.append(f"stimulus {pid}: {state} ({change})")
    for i, kind in sorted(report.final_kinds.items()):
        e = net.edges[i]
        if e.edge_class is not EdgeClass.STIMULUS:
            lines.append(f"{e.edge_class.value} {e.source}->{e.target}: "
                         f"{e.kind.value}->{kind.value}")
    lines.append(f"edge toggles: {len(report.toggled_edges)}")
    stream = sys.stderr if not args.out else sys.stdout
    print("\n".join(lines), file=stream)
    return EXIT_OK


def cmd_simulate(args) -> int:
    net = _load(args.network)
    cfg = _config(net.config, args)
    model = orient_network(net)[0] if args.oriented else net
    try:
        tr = integrate(model, None, args.t_end, cfg)
    except (IntegrationError, ValueError) as exc:
        raise CliError(f"simulation failed: {exc}", EXIT_SIMULATE) from None
    rows = ([t, *s] for t, s in zip(tr.times, tr.states))
    header = ["t", *tr.node_ids]
    if args.out:
        write_csv(Path(args.out), header, rows)
        print(f"wrote {args.out} ({tr.status})")
    else:
        _print_csv(header, rows)
    return EXIT_OK


def cmd_compare(args) -> int:
    net = _load(args.network)
    cfg = _config(net.config, args)
    try:
        cmp = compare_outputs(net, cfg, t_end=args.t_end)
    except (IntegrationError, ValueError) as exc:
        raise CliError(f"simulation failed: {exc}", EXIT_SIMULATE) from None
    header, cols = ["t"], [cmp.times]
    for o in net.outputs:
        header += [f"{o}_unoriented", f"{o}_oriented"]
        cols += [cmp.unoriented.series(o), cmp.oriented.series(o)]
    for k, s in enumerate(cmp.signs):
        if s < 0:
            nid = net.nodes[k].id
            header += [f"{nid}_unoriented", f"{nid}_oriented_negated"]
            cols += [cmp.unoriented.states[:, k], -cmp.oriented.states[:, k]]
    rows = zip(*cols)
    if args.out:
        write_csv(Path(args.out), header, rows)
    else:
        _print_csv(header, rows)
    stream = sys.stdout if args.out else sys.stderr
    for o, d in cmp.output_deviation.items():
        print(f"max deviation {o}: {d:.3e}", file=stream)
    print(f"max output deviation: {cmp.max_output_deviation:.3e}", file=stream)
    return EXIT_OK


def cmd_validate(args) -> int:
    worst = EXIT_OK
    for ref in args.networks:
        try:
            _, text = _resolve_text(ref)
        except CliError as exc:
            print(exc, file=sys.stderr)
            worst = max(worst, exc.code)
            continue
        diags = netdsl.validate_text(text)
        for d in diags:
            print(f"{ref}: {d}")
        if any(d.is_error for d in diags):
            worst = max(worst, EXIT_INVALID)
        elif not diags:
            print(f"{ref}: ok")
    return worst


def _resolve_text(ref: str):
    p = Path(ref)
    if p.is_file():
        try:
            return p, p.read_bytes()
        except OSError as exc:
            raise CliError(f"cannot read {p}: {exc}", EXIT_PARSE) from None
    if ref in assets.asset_names():
        return None, (assets.resources.files("orientnet.networks") / f"{ref}.net").read_bytes()
    raise CliError(f"{ref!r} is neither a file nor a bundled network", EXIT_PARSE)


def cmd_list(args) -> int:
    for name in assets.asset_names():
        print(name)
    return EXIT_OK


def _config_flags(p: argparse.ArgumentParser, phi: bool = True):
    g = p.add_argument_group("model configuration")
    if phi:
        g.add_argument("--phi", type=float, help="model bias in [-1, 1]")
    g.add_argument("--tol-rel", type=float, dest="tol_rel")
    g.add_argument("--tol-abs", type=float, dest="tol_abs")
    g.add_argument("--eps-ss", type=float, dest="eps_ss", help="steady-state threshold")
    g.add_argument("--t-max", type=float, dest="t_max", help="steady-state search horizon")
    g.add_argument("--stimulus-level", type=float, dest="stimulus_level",
                   help="override every stimulus level")


def _ensemble_flags(p: argparse.ArgumentParser):
    p.add_argument("--samples", type=int, default=150, help="parameter sets (default 150)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--phi-grid", type=_grid, dest="phi_grid", metavar="A:B:N",
                   help="uniform bias grid (default -1:1:41)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orientnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="write every edge-kind pattern of a linear pathway")
    p.add_argument("length", type=int, help="number of nodes (2..12)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("feedback-family", help="write the ten single-feedback variants")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_feedback_family)

    p = sub.add_parser("sweep", help="divergence statistics over a bias grid")
    p.add_argument("network", help="network file or bundled name")
    p.add_argument("--out", help="CSV path; multi-output networks get one file per output")
    p.add_argument("--no-tau", action="store_true", help="skip the transient metric")
    _ensemble_flags(p)
    _config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figures", help="emit per-panel CSVs for a figure")
    p.add_argument("figure", choices=[*figures.FIGURES, "all"])
    p.add_argument("--out", default="figures")
    _ensemble_flags(p)
    _config_flags(p, phi=False)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("orient", help="write the oriented form and a flip report")
    p.add_argument("network")
    p.add_argument("--out")
    p.set_defaults(func=cmd_orient)

    p = sub.add_parser("simulate", help="integrate a network and write its trajectory")
    p.add_argument("network")
    p.add_argument("--t-end", type=float, default=100.0, dest="t_end")
    p.add_argument("--oriented", action="store_true", help="simulate the oriented form")
    p.add_argument("--out")
    _config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="co-simulate unoriented and oriented forms")
    p.add_argument("network")
    p.add_argument("--t-end", type=float, dest="t_end",
                   help="horizon (default: later of the two settling times)")
    p.add_argument("--out")
    _config_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="check network files and print diagnostics")
    p.add_argument("networks", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("list", help="list bundled networks")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"orientnet: {exc}", file=sys.stderr)
        return exc.code
    except NetworkError as exc:
        print(f"orientnet: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
