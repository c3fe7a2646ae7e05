import subprocess
import sys
from pathlib import Path

import pytest

from orientnet import assets, netdsl
from orientnet.cli import main
from orientnet.orient import orient_network, predicted_flips


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("n, count", [(2, 2), (5, 16)])
def test_enumerate(tmp_path, capsys, n, count):
    code, _, _ = run(capsys, "enumerate", n, "--out", tmp_path)
    files = sorted(tmp_path.glob("*.net"))
    assert code == 0 and len(files) == count
    flips = {}
    for f in files:
        net = netdsl.parse(f.read_text())
        assert net.edges[0].kind.value == "A"
        kinds = [e.kind for e in net.edges[1:]]
        assert f.stem.endswith(assets.pattern_string(kinds))
        k = len(predicted_flips(kinds))
        flips[k] = flips.get(k, 0) + 1
    if n == 5:
        assert flips == {0: 1, 1: 4, 2: 6, 3: 4, 4: 1}


def test_enumerate_bounds(tmp_path, capsys):
    assert run(capsys, "enumerate", 13, "--out", tmp_path)[0] == 1


def test_feedback_family(tmp_path, capsys):
    assert run(capsys, "feedback-family", "--out", tmp_path)[0] == 0
    assert len(list(tmp_path.glob("*.net"))) == 10


def test_orient_report(tmp_path, capsys):
    code, out, _ = run(capsys, "orient", "path5_IIIA", "--out", tmp_path / "o.net")
    assert code == 0
    assert "flipped nodes: x1, x3" in out and "inhibited (s A->I)" in out
    oriented = netdsl.parse((tmp_path / "o.net").read_text())
    assert oriented == orient_network(assets.linear_pathway("IIIA"))[0]


def test_orient_egfr_structure(tmp_path, capsys):
    run(capsys, "orient", "egfr-surrogate", "--out", tmp_path / "e.net")
    net = netdsl.parse((tmp_path / "e.net").read_text())
    p4 = set(net.pathway("P4").nodes)
    for e in net.edges:
        if e.edge_class.value == "stimulus":
            assert (e.kind.value == "I") == (e.target in p4)
        elif e.edge_class.value == "crosstalk":
            assert (e.kind.value == "I") == (e.source in p4 or e.target in p4)


def test_compare(tmp_path, capsys):
    code, out, _ = run(capsys, "compare", "fig5", "--phi", 0, "--out", tmp_path / "c.csv")
    assert code == 0
    dev = float(out.strip().splitlines()[-1].split(":")[1])
    assert dev <= 1e-6
    header = (tmp_path / "c.csv").read_text().splitlines()[0]
    assert header.startswith("t,x5_unoriented,x5_oriented")


def test_simulate(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "fig5", "--t-end", 10, "--out", tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert code == 0 and lines[0] == "t,x1,x2,x3,x4,x5" and len(lines) == 1002


def test_sweep_single_output(tmp_path, capsys):
    args = ("sweep", "path5_AAAA", "--phi-grid=-1:1:5", "--samples", 4, "--workers", 2)
    code, _, _ = run(capsys, *args, "--out", tmp_path / "a.csv")
    text = (tmp_path / "a.csv").read_bytes()
    assert code == 0 and b"\r" not in text
    lines = text.decode().splitlines()
    assert lines[0] == "phi,n_samples,n_excluded,n_nonconv,dss_mean,dss_std,dtau_mean,dtau_std"
    assert all(float(l.split(",")[4]) == 0.0 for l in lines[1:]) and len(lines) == 6
    run(capsys, *args, "--out", tmp_path / "b.csv")
    assert (tmp_path / "b.csv").read_bytes() == text


def test_sweep_multi_output(tmp_path, capsys):
    code, _, _ = run(capsys, "sweep", "egfr-surrogate", "--phi", 0, "--samples", 2,
                     "--out", tmp_path / "e.csv")
    assert code == 0
    for o in ("x1", "x2"):
        row = (tmp_path / f"e_{o}.csv").read_text().splitlines()[1].split(",")
        assert abs(float(row[4])) <= 1e-6 and abs(float(row[6])) <= 1e-4


def test_sweep_stdout(capsys):
    code, out, _ = run(capsys, "sweep", "fig5", "--phi", 0.2, "--samples", 2, "--no-tau")
    assert code == 0 and out.splitlines()[0].startswith("phi,") and len(out.splitlines()) == 2


def test_figures_command(tmp_path, capsys):
    code, out, _ = run(capsys, "figures", "nullclines", "--out", tmp_path)
    assert code == 0 and "nullclines" in out
    assert len(list((tmp_path / "nullclines").glob("*.csv"))) == 10


def test_validate_ok(capsys):
    code, out, _ = run(capsys, "validate", "fig5", "egfr-surrogate")
    assert code == 0 and "fig5: ok" in out


def test_validate_corrupted(tmp_path, capsys):
    text = (assets.resources.files("orientnet.networks") / "fig5.net").read_text()
    bad = tmp_path / "bad.net"
    bad.write_text(text.replace("beta=15", "beta=1.0"))
    line = 1 + next(k for k, l in enumerate(text.splitlines()) if "beta=15" in l)
    code, out, _ = run(capsys, "validate", bad)
    assert code == 3
    assert f"line {line}," in out and "beta must exceed 1" in out


def test_parse_failure_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.net"
    bad.write_text("network x\nnode a pathway=Q\n")
    assert run(capsys, "orient", bad)[0] == 2
    assert run(capsys, "simulate", tmp_path / "missing.net")[0] == 2


def test_simulate_failure_exit_code(tmp_path, capsys):
    # an absurd rate constant makes the step size collapse
    text = (assets.resources.files("orientnet.networks") / "fig5.net").read_text()
    stiff = tmp_path / "stiff.net"
    stiff.write_text(text.replace("alpha=2 beta=15", "alpha=1e300 beta=15"))
    for cmd in ("simulate", "compare"):
        code, _, err = run(capsys, cmd, stiff, "--t-end", 10)
        assert code == 4 and "underflow" in err


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "orientnet.cli", "list"], capture_output=True,
                         text=True, check=True)
    assert len(res.stdout.split()) == 28
