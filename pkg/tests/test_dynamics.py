import math

import numba as nb
import numpy as np
import pytest
from scipy.optimize import brentq

from orientnet import assets
from orientnet.dynamics import (CONVERGED, NON_CONVERGENT, compare_outputs, integrate,
                                network_rhs, rhs, run_to_steady_state, settle)
from orientnet.netcore import (EdgeClass, EdgeKind, EdgeSpec, ModelConfig, Network, NetworkError,
                               NodeSpec, PathwaySpec, StimulusSpec, edge_rates)
from orientnet.orient import orient_network

A, I = EdgeKind.ACTIVATION, EdgeKind.INHIBITION


def single_node(alpha=1.0, beta=2.0, level=0.5, kind=A):
    return Network("one", (NodeSpec("x", "P"),),
                   (EdgeSpec("s", "x", kind, alpha, beta, EdgeClass.STIMULUS),),
                   (PathwaySpec("P", ("x",)),), (StimulusSpec("s", level),), ("x",))


def isolated(n=3):
    ids = [f"n{i}" for i in range(n)]
    return Network("bare", tuple(NodeSpec(i, f"P{k}") for k, i in enumerate(ids)), (),
                   tuple(PathwaySpec(f"P{k}", (i,)) for k, i in enumerate(ids)))


def _python_rhs(net, x, phi):
    """Slow transcription of the summed edge rates, used as an oracle."""
    idx = {n.id: k for k, n in enumerate(net.nodes)}
    levels = {s.id: s.level for s in net.stimuli}
    dx = np.zeros(len(net.nodes))
    for e in net.edges:
        y = levels[e.source] if e.edge_class is EdgeClass.STIMULUS else x[idx[e.source]]
        rp, rm = edge_rates(x[idx[e.target]], y, e.kind, e.alpha, e.beta, phi)
        dx[idx[e.target]] += rp - rm
    return dx


class TestRhs:
    def test_single_node_value(self):
        assert rhs(single_node(), [0.0])[0] == pytest.approx(1 / 6, abs=1e-15)

    def test_no_edges(self):
        assert np.array_equal(rhs(isolated(), np.array([0.3, -0.2, 0.9])), np.zeros(3))

    def test_additivity(self):
        base = single_node()
        other = single_node(alpha=2.0, beta=7.0, kind=I)
        both = base.replace(edges=base.edges + other.edges)
        x = [0.2]
        assert rhs(both, x)[0] == pytest.approx(rhs(base, x)[0] + rhs(other, x)[0], abs=1e-15)

    @pytest.mark.parametrize("phi", [-0.7, 0.0, 0.4])
    def test_against_python_oracle(self, catalog, phi):
        rng = np.random.default_rng(0)
        for net in catalog.values():
            x = rng.uniform(-1, 1, len(net.nodes))
            got = rhs(net, x, ModelConfig(phi=phi))
            assert np.allclose(got, _python_rhs(net, x, phi), rtol=1e-13, atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(NetworkError):
            rhs(single_node(), [0.0, 1.0])

    def test_stimulus_level_override(self):
        cfg = ModelConfig(stimulus_level=1.0)
        # u=1: no deactivation, r+ = (1/4)(2)F(0) = 1/3
        assert rhs(single_node(), [0.0], cfg)[0] == pytest.approx(1 / 3)


class TestSteadyState:
    def test_quadratic_root(self):
        ss = run_to_steady_state(single_node())
        # 3F(x) = F(-x) with alpha=1, beta=2 reduces to x^2 + 4x - 3 = 0
        assert ss.converged
        assert ss.state[0] == pytest.approx(-2 + math.sqrt(7), abs=1e-6)

    def test_chain_against_sequential_roots(self):
        net = assets.linear_pathway("AI", alphas=(0.7, 1.9), betas=(3.0, 11.0))
        phi = 0.2
        ss = run_to_steady_state(net, config=ModelConfig(phi=phi))
        # feed-forward chain: solve node by node
        want, y = [], 0.5
        for e in net.edges:
            f = lambda x: np.subtract(*edge_rates(x, y, e.kind, e.alpha, e.beta, phi))
            y = brentq(f, -1, 1, xtol=1e-15)
            want.append(y)
        assert ss.state == pytest.approx(want, abs=1e-7)

    def test_no_edges_converges_immediately(self):
        ss = run_to_steady_state(isolated(), [0.1, 0.2, 0.3])
        assert ss.converged and ss.time == 0.0
        assert list(ss.state) == [0.1, 0.2, 0.3]


@nb.njit(cache=True)
def hopf(t, y, p):
    # supercritical Hopf normal form: attracting limit cycle of radius 1
    r2 = y[0] * y[0] + y[1] * y[1]
    return np.array([y[0] - y[1] - y[0] * r2, y[0] + y[1] - y[1] * r2])


def test_limit_cycle_never_settles():
    cfg = ModelConfig(t_max=500.0)
    ss = settle(hopf, np.zeros((1, 1)), np.array([0.1, 0.0]), cfg)
    assert ss.status == NON_CONVERGENT and ss.time == pytest.approx(500.0)
    assert np.hypot(*ss.state) == pytest.approx(1.0, abs=1e-6)


class TestIntegrate:
    def test_zero_network_constant(self):
        tr = integrate(isolated(), None, 10.0)
        assert np.all(tr.states == 0.0) and tr.status == CONVERGED

    def test_reference_pathway_bounded(self, ref_pathway):
        for phi in (-1.0, -0.5, 0.0, 0.5, 1.0):
            tr = integrate(ref_pathway, None, 100.0, ModelConfig(phi=phi))
            assert tr.times.shape == (1001,)
            assert np.all(np.abs(tr.states) <= 1 + 1e-9)

    def test_box_invariance_from_corners(self, catalog):
        rng = np.random.default_rng(3)
        for net in list(catalog.values())[::4]:
            x0 = rng.choice([-1.0, 1.0], len(net.nodes))
            tr = integrate(net, x0, 50.0, ModelConfig(phi=0.6), steps=True)
            assert np.all(np.abs(tr.states) <= 1 + 1e-9)

    def test_self_convergence(self, ref_pathway):
        cfg = ModelConfig()
        fine = ModelConfig(tol_rel=cfg.tol_rel / 2, tol_abs=cfg.tol_abs / 2)
        a = integrate(ref_pathway, None, 100.0, cfg).states[-1]
        b = integrate(ref_pathway, None, 100.0, fine).states[-1]
        assert np.max(np.abs(a - b)) < 1e-7

    def test_derivative_consistency(self, ref_pathway):
        cfg = ModelConfig(phi=0.3)
        tr = integrate(ref_pathway, None, 20.0, cfg, t_eval=np.linspace(0, 20, 20001))
        fd = np.gradient(tr.states, tr.times, axis=0)
        for k in range(100, 20000, 1500):
            assert np.allclose(fd[k], rhs(ref_pathway, tr.states[k], cfg), atol=1e-6)

    def test_deterministic(self, ref_pathway):
        a = integrate(ref_pathway, None, 30.0, ModelConfig(phi=0.4))
        b = integrate(ref_pathway, None, 30.0, ModelConfig(phi=0.4))
        assert np.array_equal(a.states, b.states)

    def test_reports_steady_state(self):
        tr = integrate(single_node(), None, 200.0)
        assert tr.status == CONVERGED
        state, t = tr.steady_state
        assert 0 < t < 200 and state[0] == pytest.approx(-2 + math.sqrt(7), abs=1e-6)

    def test_rejects_bad_horizon(self):
        with pytest.raises(ValueError):
            integrate(single_node(), None, 0.0)

    def test_series(self, ref_pathway):
        tr = integrate(ref_pathway, None, 5.0)
        assert np.array_equal(tr.series("x2"), tr.states[:, 1])


class TestCompare:
    def test_equivalence_unbiased(self, ref_pathway):
        cmp = compare_outputs(ref_pathway)
        assert cmp.max_output_deviation <= 1e-6
        assert set(cmp.flip_negation) == {"x1", "x3"}
        assert max(cmp.flip_negation.values()) <= 1e-6

    def test_original_coordinates(self, ref_pathway):
        cmp = compare_outputs(ref_pathway)
        assert np.allclose(cmp.oriented_in_original_coordinates(), cmp.unoriented.states,
                           atol=1e-6)

    @pytest.mark.parametrize("phi", [-0.8, 0.3, 1.0])
    def test_all_activation_exact(self, phi):
        cmp = compare_outputs(assets.linear_pathway("AAAA"), ModelConfig(phi=phi), t_end=50.0)
        assert cmp.max_output_deviation == 0.0

    def test_bias_breaks_equivalence(self, ref_pathway):
        cmp = compare_outputs(ref_pathway, ModelConfig(phi=0.5), t_end=100.0)
        assert cmp.max_output_deviation > 1e-3

    def test_explicit_oriented(self, ref_pathway):
        oriented, _ = orient_network(ref_pathway)
        cmp = compare_outputs(ref_pathway, oriented=oriented, t_end=10.0)
        assert cmp.times[-1] == 10.0
