"""Steady-state and transient divergence between a network and its oriented form.

For one parameter set the steady-state error is ``delta - delta_bar`` (output
steady states of the unoriented and oriented forms, both started from the
neutral state).  The transient error integrates the difference of the two
outputs, each normalised by its own steady state, up to the later of the two
settling times.  Both are averaged over a seeded ensemble of ``(alpha, beta)``
parameter sets.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import ALPHA, BETA, compile_network, flip_signs, network_rhs
from .integrator import IntegrationError, solve
from .netcore import ModelConfig, Network, NetworkError
from .orient import orient_network

__all__ = [
    "ParamRanges",
    "ParamSet",
    "SweepRecord",
    "PairOutcome",
    "MetricUndefinedError",
    "sample_params",
    "pair_outcome",
    "evaluate_phi",
    "delta_ss",
    "delta_tau",
    "phi_sweep",
    "phi_grid",
    "compound_error",
    "DEGENERATE_LEVEL",
]

log = logging.getLogger(__name__)

DEGENERATE_LEVEL = 0.01


class MetricUndefinedError(RuntimeError):
    """Every run of the ensemble failed to settle."""


@dataclass(frozen=True)
class ParamRanges:
    alpha_low: float = 0.25
    alpha_high: float = 4.0
    beta_low: float = 2.0
    beta_high: float = 20.0

    def __post_init__(self):
        if not 0 < self.alpha_low <= self.alpha_high:
            raise ValueError("alpha range must satisfy 0 < low <= high")
        if not 1 < self.beta_low <= self.beta_high:
            raise ValueError("beta range must satisfy 1 < low <= high")


@dataclass(frozen=True)
class ParamSet:
    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    tag: str = ""


@dataclass(frozen=True)
class SweepRecord:
    phi: float
    output: str
    n_samples: int
    n_excluded_degenerate: int
    n_non_convergent: int
    delta_ss_mean: float
    delta_ss_std: float
    delta_tau_mean: float
    delta_tau_std: float

    @property
    def n_included(self) -> int:
        return self.n_samples - self.n_excluded_degenerate - self.n_non_convergent

    def csv_row(self) -> list:
        return [self.phi, self.n_samples, self.n_excluded_degenerate, self.n_non_convergent,
                self.delta_ss_mean, self.delta_ss_std, self.delta_tau_mean, self.delta_tau_std]


CSV_HEADER = ["phi", "n_samples", "n_excluded", "n_nonconv",
              "dss_mean", "dss_std", "dtau_mean", "dtau_std"]
__all__.append("CSV_HEADER")


def sample_params(network: Network, n: int, seed: int = 42,
                  ranges: ParamRanges | None = None) -> list[ParamSet]:
    """Draw ``n`` per-edge parameter sets: alpha log-uniform, beta uniform."""
    if n < 1:
        raise ValueError("need at least one sample")
    ranges = ranges or ParamRanges()
    m = len(network.edges)
    rng = np.random.default_rng(seed)
    log_a = rng.uniform(math.log(ranges.alpha_low), math.log(ranges.alpha_high), size=(n, m))
    betas = rng.uniform(ranges.beta_low, ranges.beta_high, size=(n, m))
    alphas = np.exp(log_a)
    return [ParamSet(tuple(alphas[k]), tuple(betas[k]), f"seed={seed}#{k}") for k in range(n)]


@dataclass(frozen=True)
class PairOutcome:
    """Per-output results of one co-simulation; ``None`` entries mark failures."""

    converged: bool
    dss: dict[str, float]
    dtau: dict[str, float | None]  # None -> excluded as degenerate
    t_horizon: float


def _settle_table(table, x0, config):
    try:
        return solve(network_rhs, table, x0, config.t_max, rtol=config.tol_rel,
                     atol=config.tol_abs, eps_ss=config.eps_ss, stop_at_steady_state=True)
    except IntegrationError as exc:
        log.warning("integration failed, sample counted as non-convergent: %s", exc)
        return None


def _pair_tables(table_u, table_o, x0_u, x0_o, out_idx, out_ids, config, want_tau):
    a = _settle_table(table_u, x0_u, config)
    b = _settle_table(table_o, x0_o, config)
    if a is None or b is None or a.t_steady is None or b.t_steady is None:
        return PairOutcome(False, {}, {}, config.t_max)
    dss = {o: float(a.y[k] - b.y[k]) for o, k in zip(out_ids, out_idx)}
    dtau: dict[str, float | None] = {}
    horizon = max(a.t_steady, b.t_steady)
    if want_tau:
        if horizon <= 0.0:
            # both already at rest: identical constant outputs
            for o, k in zip(out_ids, out_idx):
                lo = min(abs(a.y[k]), abs(b.y[k]))
                dtau[o] = None if lo < DEGENERATE_LEVEL else 0.0
        else:
            times = np.linspace(0.0, horizon, config.n_dense)
            ua = solve(network_rhs, table_u, x0_u, horizon, t_eval=times,
                       rtol=config.tol_rel, atol=config.tol_abs)
            ub = solve(network_rhs, table_o, x0_o, horizon, t_eval=times,
                       rtol=config.tol_rel, atol=config.tol_abs)
            for o, k in zip(out_ids, out_idx):
                d, d_bar = a.y[k], b.y[k]
                if abs(d) < DEGENERATE_LEVEL or abs(d_bar) < DEGENERATE_LEVEL:
                    dtau[o] = None
                    continue
                integrand = ua.y_eval[:, k] / d - ub.y_eval[:, k] / d_bar
                dtau[o] = float(np.trapezoid(integrand, times))
    return PairOutcome(True, dss, dtau, horizon)


def pair_outcome(network: Network, other: Network, config: ModelConfig | None = None,
                 x0=None, want_tau: bool = True) -> PairOutcome:
    """Steady-state and transient errors of ``network`` against ``other``.

    ``other`` plays the oriented role; it must share the node layout, and its
    initial state has flipped nodes negated.
    """
    config = config or ModelConfig()
    signs = flip_signs(network, other)
    x0 = np.zeros(len(network.nodes)) if x0 is None else np.asarray(x0, dtype=float)
    out_idx = [network.node_index(o) for o in network.outputs]
    return _pair_tables(compile_network(network, config), compile_network(other, config),
                        x0, signs * x0, out_idx, list(network.outputs), config, want_tau)


def _summarise(phi, output, outcomes: Sequence[PairOutcome], want_tau=True) -> SweepRecord:
    n = len(outcomes)
    ok = [r for r in outcomes if r.converged]
    n_nonconv = n - len(ok)
    dss = np.array([r.dss[output] for r in ok])
    taus = [r.dtau.get(output) for r in ok]
    tau = np.array([v for v in taus if v is not None])
    n_excl = sum(1 for v in taus if v is None) if want_tau else 0

    def stats(v):
        if v.size == 0:
            return math.nan, math.nan
        return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0

    ss_mean, ss_std = stats(dss)
    tau_mean, tau_std = stats(tau) if want_tau else (math.nan, math.nan)
    if not ok:
        log.warning("phi=%g output=%s: no run settled; metric undefined", phi, output)
    return SweepRecord(float(phi), output, n, n_excl, n_nonconv,
                       ss_mean, ss_std, tau_mean, tau_std)


def _outcomes(network, oriented, phi, ensemble, config, want_tau, workers):
    cfg = config.with_phi(phi)
    base_u = compile_network(network, cfg)
    base_o = compile_network(oriented, cfg)
    signs = flip_signs(network, oriented)
    x0 = np.zeros(len(network.nodes))
    out_idx = [network.node_index(o) for o in network.outputs]
    out_ids = list(network.outputs)

    def one(ps: ParamSet):
        tu = base_u.copy()
        to = base_o.copy()
        tu[:, ALPHA] = to[:, ALPHA] = ps.alphas
        tu[:, BETA] = to[:, BETA] = ps.betas
        return _pair_tables(tu, to, x0, signs * x0, out_idx, out_ids, cfg, want_tau)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, ensemble))
    return [one(ps) for ps in ensemble]


def evaluate_phi(network: Network, phi: float, ensemble: Sequence[ParamSet],
                 config: ModelConfig | None = None, *, oriented: Network | None = None,
                 want_tau: bool = True, workers: int = 1) -> dict[str, SweepRecord]:
    """Ensemble statistics at one bias value, keyed by output node."""
    if not network.outputs:
        raise NetworkError("network declares no output node")
    config = config or ModelConfig()
    if oriented is None:
        oriented, _ = orient_network(network)
    for ps in ensemble:
        if len(ps.alphas) != len(network.edges):
            raise NetworkError("parameter set does not match the network's edge count")
    outcomes = _outcomes(network, oriented, phi, ensemble, config, want_tau, workers)
    return {o: _summarise(phi, o, outcomes, want_tau) for o in network.outputs}


def _single_output(network, output):
    if output is not None:
        if output not in network.outputs:
            raise NetworkError(f"{output!r} is not an output of {network.id!r}")
        return output
    if len(network.outputs) != 1:
        raise NetworkError("network has several outputs; pass output=")
    return network.outputs[0]


def delta_ss(network: Network, phi: float, ensemble: Sequence[ParamSet],
             config: ModelConfig | None = None, output: str | None = None,
             workers: int = 1) -> SweepRecord:
    """Mean and spread of ``delta - delta_bar``; transient fields are left NaN."""
    output = _single_output(network, output)
    rec = evaluate_phi(network, phi, ensemble, config, want_tau=False, workers=workers)[output]
    if rec.n_non_convergent == rec.n_samples:
        raise MetricUndefinedError(f"no run settled at phi={phi}")
    return rec


def delta_tau(network: Network, phi: float, ensemble: Sequence[ParamSet],
              config: ModelConfig | None = None, output: str | None = None,
              workers: int = 1) -> SweepRecord:
    output = _single_output(network, output)
    rec = evaluate_phi(network, phi, ensemble, config, workers=workers)[output]
    if rec.n_non_convergent == rec.n_samples:
        raise MetricUndefinedError(f"no run settled at phi={phi}")
    return rec


def phi_grid(low: float = -1.0, high: float = 1.0, n: int = 41) -> np.ndarray:
    if n < 1:
        raise ValueError("grid needs at least one point")
    grid = np.linspace(low, high, n)
    # snap float noise so that 0 and symmetric pairs are exact
    grid = np.round(grid, 12) + 0.0
    if np.any(np.abs(grid) > 1):
        raise ValueError("phi grid must lie inside [-1, 1]")
    return grid


def phi_sweep(network: Network, grid: Sequence[float], ensemble: Sequence[ParamSet],
              config: ModelConfig | None = None, *, want_tau: bool = True,
              workers: int = 1) -> dict[str, list[SweepRecord]]:
    """One record per grid point and output, every point sharing ``ensemble``."""
    grid = [float(p) for p in grid]
    if any(abs(p) > 1 for p in grid):
        raise ValueError("phi grid must lie inside [-1, 1]")
    oriented, _ = orient_network(network)
    out: dict[str, list[SweepRecord]] = {o: [] for o in network.outputs}
    for phi in grid:
        recs = evaluate_phi(network, phi, ensemble, config, oriented=oriented,
                            want_tau=want_tau, workers=workers)
        for o, r in recs.items():
            out[o].append(r)
    return out


def compound_error(single_flip_records: Sequence[Sequence[SweepRecord]],
                   multi_flip_record: Sequence[SweepRecord]) -> list[tuple[float, float, float]]:
    """Rows ``(phi, summed single-flip delta_ss, multi-flip delta_ss)``."""
    multi = list(multi_flip_record)
    grid = [r.phi for r in multi]
    for recs in single_flip_records:
        if [r.phi for r in recs] != grid:
            raise ValueError("sweeps do not share a phi grid")
    rows = []
    for k, phi in enumerate(grid):
        total = sum(recs[k].delta_ss_mean for recs in single_flip_records)
        rows.append((phi, float(total), multi[k].delta_ss_mean))
    return rows
