import pytest

from orientnet import assets
from orientnet.netcore import EdgeClass, EdgeKind, NetworkError
from orientnet.orient import orient_network, predicted_flips

A, I = EdgeKind.ACTIVATION, EdgeKind.INHIBITION


def test_catalog_size(catalog):
    kinds = [n for n in catalog if n.startswith("path5_")]
    fbs = [n for n in catalog if n.startswith("fb_")]
    assert (len(kinds), len(fbs), len(catalog)) == (16, 10, 28)
    assert {"fig5", "egfr-surrogate"} <= set(catalog)


def test_linear_pathway_shape():
    net = assets.linear_pathway("IAI")
    assert net.id == "path4_IAI"
    assert [e.kind for e in net.edges] == [A, I, A, I]
    assert net.edges[0].edge_class is EdgeClass.STIMULUS
    assert net.outputs == ("x4",)


def test_reference_parameters(ref_pathway):
    pw = [e for e in ref_pathway.edges if e.edge_class is EdgeClass.PATHWAY]
    assert [(e.alpha, e.beta) for e in pw] == [(0.5, 10), (1, 5), (2, 15), (1.3, 18)]
    assert ref_pathway.stimuli[0].level == 0.5


def test_feedback_family():
    fam = assets.feedback_family()
    assert len(fam) == 10
    base = assets.linear_pathway("IIIA")
    for net in fam:
        assert net.edges[:-1] == base.edges
        fb = net.edges[-1]
        assert fb.edge_class is EdgeClass.FEEDBACK and fb.kind is I
        assert int(fb.source[1:]) > int(fb.target[1:])
    distances = sorted(int(n.edges[-1].source[1:]) - int(n.edges[-1].target[1:]) for n in fam)
    assert distances == [1, 1, 1, 1, 2, 2, 2, 3, 3, 4]


def test_feedback_variant_bounds():
    with pytest.raises(ValueError):
        assets.feedback_variant(2, 3)


def test_x5_x3_becomes_activation():
    out, _ = orient_network(assets.feedback_variant(5, 3))
    assert out.edges[-1].kind is A


def test_egfr_surrogate_oriented_structure():
    net = assets.egfr_surrogate()
    assert len(net.pathways) == 6 and net.outputs == ("x1", "x2")
    assert [p for p in net.pathways if len(p.nodes) == 1][0].id == "PT"
    assert net.pathway("P2a").output == "x1" and net.pathway("P2b").output == "x2"
    out, rep = orient_network(net)
    stim = {net.node(e.target).pathway: e.kind for e in out.edges
            if e.edge_class is EdgeClass.STIMULUS}
    assert stim == {"P1": A, "P2a": A, "P2b": A, "P3": A, "P4": I}
    p4 = set(net.pathway("P4").nodes)
    for e in out.edges:
        if e.edge_class is EdgeClass.CROSSTALK:
            touches = e.source in p4 or e.target in p4
            assert e.kind is (I if touches else A), e
    assert not rep.flipped_nodes & {"x1", "x2"}


def test_pattern_helpers():
    assert assets.pattern_string(assets.parse_pattern("IIA")) == "IIA"
    assert len(assets.all_patterns(8)) == 128
    with pytest.raises(ValueError):
        assets.all_patterns(0)


def test_flip_histogram_over_enumeration():
    counts = sorted(len(predicted_flips(k)) for k in assets.all_patterns(5))
    assert counts.count(0) == 1 and counts.count(2) == 6


def test_missing_asset():
    with pytest.raises(NetworkError):
        assets.load_asset("nope")
    with pytest.raises(FileNotFoundError):
        assets.resolve_asset("nope")


def test_resolve_file(tmp_path):
    p = tmp_path / "x.net"
    p.write_text((assets.resources.files("orientnet.networks") / "fig5.net").read_text())
    net, text = assets.resolve_asset(str(p))
    assert net == assets.fig5_pathway() and text.startswith("network fig5")
