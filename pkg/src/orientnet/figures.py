"""Per-panel CSV emitters for the standard figure set, plus plot-script stubs.

Every panel file starts with one ``#`` metadata line (``key=value`` pairs)
followed by an ordinary CSV table.  Each figure directory also gets an
``index.csv`` listing its panels and a ``plot_<figure>.py`` stub.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import assets
from .dynamics import integrate
from .metrics import CSV_HEADER, compound_error, phi_grid, phi_sweep, sample_params
from .netcore import EdgeClass, EdgeKind, ModelConfig, Network, edge_rates
from .orient import feedback_loop, loop_sign, orient_network, predicted_flips, stimulus_orientation

__all__ = ["FIGURES", "FigureOptions", "emit_figure", "write_csv", "nullcline",
           "fig6_layout", "fig8_layout", "format_cell"]

log = logging.getLogger(__name__)

NULLCLINE_PHIS = (-0.6, -0.3, 0.0, 0.3, 0.6)
TRAJECTORY_PHIS = (-0.5, 0.0, 0.5)
TRAJECTORY_T_END = 100.0


@dataclass(frozen=True)
class FigureOptions:
    samples: int = 150
    seed: int = 42
    grid: tuple[float, ...] = tuple(phi_grid())
    config: ModelConfig = ModelConfig()
    workers: int = 1


def write_csv(path: Path, header: Sequence[str], rows, meta: dict | None = None) -> Path:
    """Write an LF-terminated CSV, optionally preceded by a ``#`` metadata line."""
    buf = io.StringIO()
    if meta:
        buf.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_cell(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    return path


def format_cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if v != v else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _colour(orientation: str) -> str:
    # flipped input stimulus is drawn blue, untouched stimulus red
    return "blue" if orientation == "inhibited" else "red"


def _sweep(net: Network, opts: FigureOptions, want_tau: bool = True):
    ensemble = sample_params(net, opts.samples, opts.seed)
    return phi_sweep(net, opts.grid, ensemble, opts.config, want_tau=want_tau,
                     workers=opts.workers)


def fig6_layout() -> list[dict]:
    """Panels for every length-5 pattern needing at least one flip.

    Columns group by flip count (1, 2, and 3 or 4); within a column panels
    are ordered by their flipped positions, most upstream first.
    """
    panels = []
    for kinds in assets.all_patterns(5):
        flips = sorted(predicted_flips(kinds))
        if not flips:
            continue
        column = {1: "1", 2: "2"}.get(len(flips), "3+4")
        panels.append({"pattern": assets.pattern_string(kinds), "flips": flips, "column": column})
    order = {"1": 0, "2": 1, "3+4": 2}
    panels.sort(key=lambda p: (order[p["column"]], len(p["flips"]), p["flips"]))
    rows: dict[str, int] = {}
    for p in panels:
        p["row"] = rows[p["column"]] = rows.get(p["column"], -1) + 1
    return panels


def _fig6(out: Path, opts: FigureOptions) -> list[Path]:
    written, index = [], []
    for panel in fig6_layout():
        net = assets.linear_pathway(panel["pattern"])
        _, report = orient_network(net)
        cls = _colour(stimulus_orientation(report, "P"))
        records = _sweep(net, opts)[net.outputs[0]]
        name = f"{net.id}.csv"
        meta = {"panel": panel["pattern"], "flips": "-".join(map(str, panel["flips"])),
                "column": panel["column"], "row": panel["row"], "class": cls}
        written.append(write_csv(out / name, CSV_HEADER, (r.csv_row() for r in records), meta))
        index.append([name, panel["pattern"], len(panel["flips"]), panel["column"], panel["row"],
                      cls])
    written.append(write_csv(out / "index.csv",
                             ["file", "pattern", "n_flips", "column", "row", "class"], index))
    return written


def _fig7(out: Path, opts: FigureOptions) -> list[Path]:
    singles, multi = [], None
    for kinds in assets.all_patterns(5):
        n = len(predicted_flips(kinds))
        if n == 1:
            singles.append(kinds)
        elif n == 4:
            multi = kinds
    single_recs = []
    for kinds in singles:
        net = assets.linear_pathway(kinds)
        single_recs.append(_sweep(net, opts, want_tau=False)[net.outputs[0]])
    multi_net = assets.linear_pathway(multi)
    rows = compound_error(single_recs, _sweep(multi_net, opts, want_tau=False)["x5"])
    meta = {"single": "+".join(assets.pattern_string(k) for k in singles),
            "multi": assets.pattern_string(multi)}
    return [write_csv(out / "compound.csv", ["phi", "sum_single_dss", "multi_dss"], rows, meta)]


def fig8_layout() -> list[dict]:
    """Feedback panels: column is the feedback distance, rows run downstream first."""
    panels = []
    for net in assets.feedback_family():
        fb = next(i for i, e in enumerate(net.edges) if e.edge_class is EdgeClass.FEEDBACK)
        src, tgt = net.edges[fb].source, net.edges[fb].target
        distance = int(src[1:]) - int(tgt[1:])
        panels.append({"network": net, "edge": fb, "source": src, "target": tgt,
                       "column": distance})
    panels.sort(key=lambda p: (p["column"], -int(p["source"][1:])))
    rows: dict[int, int] = {}
    for p in panels:
        p["row"] = rows[p["column"]] = rows.get(p["column"], -1) + 1
    return panels


def _fig8(out: Path, opts: FigureOptions, which: str) -> list[Path]:
    if which == "ss":
        header = ["phi", "n_samples", "n_nonconv", "dss_mean", "dss_std"]
        pick = lambda r: [r.phi, r.n_samples, r.n_non_convergent, r.delta_ss_mean,
                          r.delta_ss_std]
    else:
        header = ["phi", "n_samples", "n_excluded", "n_nonconv", "dtau_mean", "dtau_std"]
        pick = lambda r: [r.phi, r.n_samples, r.n_excluded_degenerate, r.n_non_convergent,
                          r.delta_tau_mean, r.delta_tau_std]
    written, index = [], []
    for panel in fig8_layout():
        net = panel["network"]
        oriented, report = orient_network(net)
        kind = oriented.edges[panel["edge"]].kind
        loop = loop_sign(oriented, feedback_loop(oriented, panel["edge"]))
        records = _sweep(net, opts, want_tau=which == "tau")["x5"]
        meta = {"panel": f"{panel['source']}->{panel['target']}", "column": panel["column"],
                "row": panel["row"], "class": _colour(stimulus_orientation(report, "P")),
                "oriented_feedback": kind.value, "loop": loop}
        name = f"{net.id}.csv"
        written.append(write_csv(out / name, header, (pick(r) for r in records), meta))
        index.append([name, meta["panel"], panel["column"], panel["row"], kind.value, loop])
    written.append(write_csv(out / "index.csv",
                             ["file", "feedback", "distance", "row", "oriented_kind", "loop"],
                             index))
    return written


def _fig10(out: Path, opts: FigureOptions) -> list[Path]:
    net = assets.egfr_surrogate()
    sweeps = _sweep(net, opts)
    return [write_csv(out / f"{net.id}_{o}.csv", CSV_HEADER, (r.csv_row() for r in recs),
                      {"network": net.id, "output": o})
            for o, recs in sweeps.items()]


def _fig11(out: Path, opts: FigureOptions) -> list[Path]:
    net = assets.egfr_surrogate()
    oriented, _ = orient_network(net)
    times = np.linspace(0.0, TRAJECTORY_T_END, opts.config.n_dense)
    written = []
    for phi in TRAJECTORY_PHIS:
        cfg = opts.config.with_phi(phi)
        for form, model in (("unoriented", net), ("oriented", oriented)):
            tr = integrate(model, None, TRAJECTORY_T_END, cfg, t_eval=times)
            for o in net.outputs:
                name = f"{o}_{form}_phi{phi:+.1f}.csv"
                written.append(write_csv(out / name, ["t", o], zip(times, tr.series(o)),
                                         {"output": o, "form": form, "phi": phi}))
    return written


def nullcline(kind: EdgeKind, phi: float, alpha: float = 1.0, beta: float = 2.0,
              n: int = 201) -> tuple[np.ndarray, np.ndarray]:
    """Points ``(y, x)`` with ``r+(x, y) = r-(x, y)`` for a single edge.

    The net rate is non-negative at ``x = -1`` and non-positive at ``x = 1``,
    so one root in ``[-1, 1]`` always exists.
    """
    ys = np.round(np.linspace(-1.0, 1.0, n), 12)
    xs = np.empty_like(ys)

    def net_rate(x, y):
        rp, rm = edge_rates(x, y, kind, alpha, beta, phi)
        return rp - rm

    for k, y in enumerate(ys):
        lo, hi = net_rate(-1.0, y), net_rate(1.0, y)
        if lo == 0.0:
            xs[k] = -1.0
        elif hi == 0.0:
            xs[k] = 1.0
        else:
            xs[k] = brentq(net_rate, -1.0, 1.0, args=(y,), xtol=1e-14, rtol=1e-14)
    return ys, xs


def _nullclines(out: Path, opts: FigureOptions) -> list[Path]:
    written = []
    for phi in NULLCLINE_PHIS:
        for kind in EdgeKind:
            ys, xs = nullcline(kind, phi)
            name = f"phi{phi:+.1f}_{kind.value}.csv"
            written.append(write_csv(out / name, ["y", "x"], zip(ys, xs),
                                     {"kind": kind.name.lower(), "phi": phi}))
    return written


_PLOT_STUB = '''"""Plot the {fig} panels from the CSV files next to this script (needs matplotlib)."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).parent
files = sorted(p for p in here.glob("*.csv") if p.name != "index.csv")
fig, axes = plt.subplots(1, len(files), figsize=(3 * len(files), 3), squeeze=False)
for ax, path in zip(axes[0], files):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    rows = list(csv.reader(lines))
    header, data = rows[0], rows[1:]
    x = [float(r[0]) for r in data]
    col = {ycol!r} if {ycol!r} in header else header[1]
    y = [float(r[header.index(col)]) for r in data]
    ax.plot(x, y)
    ax.set_title(path.stem, fontsize=7)
fig.tight_layout()
fig.savefig(here / "{fig}.png", dpi=150)
if "--show" in sys.argv:
    plt.show()
'''

FIGURES: dict[str, tuple[Callable[[Path, FigureOptions], list[Path]], str]] = {
    "fig6": (_fig6, "dss_mean"),
    "fig7": (_fig7, "multi_dss"),
    "fig8_ss": (lambda o, p: _fig8(o, p, "ss"), "dss_mean"),
    "fig8_tau": (lambda o, p: _fig8(o, p, "tau"), "dtau_mean"),
    "fig10": (_fig10, "dss_mean"),
    "fig11": (_fig11, ""),
    "nullclines": (_nullclines, "x"),
}


def emit_figure(figure: str, out_dir, opts: FigureOptions | None = None) -> list[Path]:
    """Write every panel CSV of ``figure`` into ``out_dir/figure`` and return the paths."""
    if figure not in FIGURES:
        raise KeyError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    fn, ycol = FIGURES[figure]
    out = Path(out_dir) / figure
    out.mkdir(parents=True, exist_ok=True)
    opts = opts or FigureOptions()
    log.info("emitting %s into %s", figure, out)
    written = fn(out, opts)
    stub = out / f"plot_{figure}.py"
    stub.write_text(_PLOT_STUB.format(fig=figure, ycol=ycol), encoding="utf-8", newline="")
    return written + [stub]
