"""Right-hand side assembly and simulation of networks under the test model."""
from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .integrator import IntegrationError, solve
from .netcore import EdgeClass, ModelConfig, Network, NetworkError
from .orient import orient_network

__all__ = [
    "Trajectory",
    "SteadyState",
    "Comparison",
    "compile_network",
    "rhs",
    "integrate",
    "settle",
    "run_to_steady_state",
    "compare_outputs",
    "flip_signs",
    "network_rhs",
    "IntegrationError",
    "CONVERGED",
    "NON_CONVERGENT",
]

CONVERGED = "converged"
NON_CONVERGENT = "non_convergent"

# column layout of the compiled edge table
SRC, TGT, SIGN, ALPHA, BETA, PHI, LEVEL = range(7)


@nb.njit(cache=True, nogil=True)
def _F(x, a, b):
    return a * b * (1.0 - x) / (2.0 * b - (1.0 + x))


@nb.njit(cache=True, nogil=True)
def network_rhs(t, y, p):
    dy = np.zeros(y.shape[0])
    for e in range(p.shape[0]):
        src = int(p[e, SRC])
        tgt = int(p[e, TGT])
        a = p[e, ALPHA]
        b = p[e, BETA]
        phi = p[e, PHI]
        x = y[tgt]
        if src >= 0:
            yy = p[e, SIGN] * y[src]
        else:
            yy = p[e, SIGN] * p[e, LEVEL]
        r_plus = 0.25 * (1.0 + phi) * (1.0 + yy) * _F(x, a, b)
        r_minus = 0.25 * (1.0 - phi) * (1.0 - yy) * _F(-x, a, b)
        dy[tgt] += r_plus - r_minus
    return dy


def compile_network(network: Network, config: ModelConfig) -> np.ndarray:
    """Pack the network into the float table consumed by :func:`network_rhs`.

    One row per edge: source index (-1 for stimuli), target index, kind sign,
    alpha, beta, phi, stimulus level.
    """
    table = np.zeros((len(network.edges), 7))
    overrides = dict(config.phi_overrides)
    for i, e in enumerate(network.edges):
        if e.edge_class is EdgeClass.STIMULUS:
            table[i, SRC] = -1
            level = network.stimulus(e.source).level
            table[i, LEVEL] = level if config.stimulus_level is None else config.stimulus_level
        else:
            table[i, SRC] = network.node_index(e.source)
        table[i, TGT] = network.node_index(e.target)
        table[i, SIGN] = e.kind.sign
        table[i, ALPHA] = e.alpha
        table[i, BETA] = e.beta
        table[i, PHI] = overrides.get(i, config.phi)
    return table


def _state(network: Network, x0) -> np.ndarray:
    n = len(network.nodes)
    if x0 is None:
        return np.zeros(n)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise NetworkError(f"state has shape {x0.shape}, network has {n} nodes")
    return x0


def rhs(network: Network, state, config: ModelConfig | None = None) -> np.ndarray:
    """Time derivative of every node state (sum of ``r+ - r-`` over incoming edges)."""
    config = config or ModelConfig()
    return network_rhs(0.0, _state(network, state), compile_network(network, config))


@dataclass(frozen=True)
class SteadyState:
    state: np.ndarray
    time: float
    status: str

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), n_nodes)
    node_ids: tuple[str, ...]
    status: str
    steady_state: tuple[np.ndarray, float] | None = None

    def __post_init__(self):
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def series(self, node_id: str) -> np.ndarray:
        return self.states[:, self.node_ids.index(node_id)]


def integrate(network: Network, x0, t_end: float, config: ModelConfig | None = None,
              t_eval=None, steps: bool = False) -> Trajectory:
    """Simulate ``network`` from ``x0`` over ``[0, t_end]``.

    Returns states at ``t_eval`` (default: ``config.n_dense`` uniform points)
    or, with ``steps=True``, at the accepted adaptive steps.
    """
    config = config or ModelConfig()
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    x0 = _state(network, x0)
    if t_eval is None and not steps:
        t_eval = np.linspace(0.0, t_end, config.n_dense)
    table = compile_network(network, config)
    res = solve(network_rhs, table, x0, t_end,
                t_eval=None if steps else t_eval, rtol=config.tol_rel, atol=config.tol_abs,
                eps_ss=config.eps_ss, record_steps=steps)
    if steps:
        times, states = res.t_steps, res.y_steps
    else:
        times, states = res.t_eval, res.y_eval
    final_rate = network_rhs(0.0, res.y, table)
    status = CONVERGED if np.max(np.abs(final_rate), initial=0.0) < config.eps_ss else NON_CONVERGENT
    steady = None if res.t_steady is None else (res.y_steady, res.t_steady)
    return Trajectory(times, states, network.node_ids, status, steady)


def settle(fun, params, x0, config: ModelConfig) -> SteadyState:
    """Integrate ``fun`` until ``|dx/dt|_inf < eps_ss`` or ``t_max`` is reached."""
    res = solve(fun, params, x0, config.t_max, rtol=config.tol_rel, atol=config.tol_abs,
                eps_ss=config.eps_ss, stop_at_steady_state=True)
    if res.t_steady is not None:
        return SteadyState(res.y, res.t_steady, CONVERGED)
    return SteadyState(res.y, res.t, NON_CONVERGENT)


def run_to_steady_state(network: Network, x0=None, config: ModelConfig | None = None) -> SteadyState:
    config = config or ModelConfig()
    return settle(network_rhs, compile_network(network, config), _state(network, x0), config)


def flip_signs(reference: Network, other: Network) -> np.ndarray:
    """+1/-1 per node: -1 where the flipped flags of the two networks differ."""
    if reference.node_ids != other.node_ids:
        raise NetworkError("networks have different node layouts")
    return np.array([-1.0 if a.flipped != b.flipped else 1.0
                     for a, b in zip(reference.nodes, other.nodes)])


@dataclass
class Comparison:
    times: np.ndarray
    unoriented: Trajectory
    oriented: Trajectory  # stored in flipped coordinates
    signs: np.ndarray
    output_deviation: dict[str, float] = field(default_factory=dict)
    flip_negation: dict[str, float] = field(default_factory=dict)

    @property
    def max_output_deviation(self) -> float:
        return max(self.output_deviation.values(), default=0.0)

    def oriented_in_original_coordinates(self) -> np.ndarray:
        return self.oriented.states * self.signs


def compare_outputs(network: Network, config: ModelConfig | None = None, x0=None,
                    t_end: float | None = None, oriented: Network | None = None) -> Comparison:
    """Co-simulate a network and its oriented form on a common time grid.

    ``t_end`` defaults to the later of the two steady-state times (``t_max``
    when either run does not settle).
    """
    config = config or ModelConfig()
    if oriented is None:
        oriented, _ = orient_network(network)
    signs = flip_signs(network, oriented)
    x0 = _state(network, x0)
    x0_bar = signs * x0
    if t_end is None:
        a = run_to_steady_state(network, x0, config)
        b = run_to_steady_state(oriented, x0_bar, config)
        t_end = config.t_max
        if a.converged and b.converged:
            t_end = max(a.time, b.time)
        t_end = max(t_end, 1.0)
    times = np.linspace(0.0, t_end, config.n_dense)
    tr_u = integrate(network, x0, t_end, config, t_eval=times)
    tr_o = integrate(oriented, x0_bar, t_end, config, t_eval=times)
    dev = {o: float(np.max(np.abs(tr_u.series(o) - tr_o.series(o)))) for o in network.outputs}
    neg = {}
    for k, s in enumerate(signs):
        if s < 0:
            nid = network.nodes[k].id
            neg[nid] = float(np.max(np.abs(tr_o.states[:, k] + tr_u.states[:, k])))
    return Comparison(times, tr_u, tr_o, signs, dev, neg)

