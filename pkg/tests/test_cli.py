import io
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddaehinf import ControllerBlock
from ddaehinf.cli import main
from ddaehinf.description import InputError, controller_fragment, load_controller, parse_description

DATA = os.path.join(os.path.dirname(__file__), os.pardir, "data")


def _data(name):
    return os.path.join(DATA, name)


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


finite = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-300)


@given(order=st.integers(0, 2), vals=st.lists(finite, min_size=16, max_size=16))
@settings(max_examples=40, deadline=None)
def test_controller_fragment_round_trip(tmp_path_factory, order, vals):
    v = iter(vals)
    mat = lambda r, c: np.array([[next(v) for _ in range(c)] for _ in range(r)]).reshape(r, c)
    k = ControllerBlock(order, 1, 2, A_K=mat(order, order), B_K=mat(order, 2), C_K=mat(1, order), D_K=mat(1, 2),
                        free={"D_K": [[True, False]]})
    path = tmp_path_factory.mktemp("frag") / "k.yaml"
    path.write_text(controller_fragment(k, 1.25))
    k2 = load_controller(path, 1, 2)
    for name in ("A_K", "B_K", "C_K", "D_K"):
        assert np.array_equal(getattr(k, name), getattr(k2, name))
        assert np.array_equal(k.free[name], k2.free[name])


def test_parse_errors_carry_line_numbers():
    with pytest.raises(InputError) as exc:
        parse_description("system:\n  A: [[1, 2]]\n  B: [[1]]\n  C: [[1]]\n")
    assert "line" in str(exc.value)
    with pytest.raises(InputError):
        parse_description("system:\n  A: [[-1]]\n  B: [[1]]\n  C: [[1]]\n  bogus: 1\n")
    with pytest.raises(InputError):
        parse_description("plant:\n  A: [[-1]]\nsystem:\n  A: [[-1]]\n  B: [[1]]\n  C: [[1]]\n")
    with pytest.raises(InputError):
        parse_description("system: [\n")


def test_single_matrix_is_undelayed_term():
    d = parse_description("system:\n  A: [[-1]]\n  B: [[1]]\n  C: [[1]]\n")
    assert d.system.m == 0 and d.system.A[0][0, 0] == -1


def test_info():
    code, out = run("info", _data("two_delay.yaml"))
    assert code == 0
    assert "algebraic dimension: 1" in out
    assert "strongly stable: yes" in out


def test_norm_two_delay():
    code, out = run("norm", _data("two_delay.yaml"))
    assert code == 0
    assert "strong H-infinity norm: 4" in out and "branch: asymptotic" in out


def test_norm_demo_k2():
    code, out = run("norm", _data("demo_k2.yaml"))
    assert code == 0 and "finite-frequency" in out
    value = float(out.split("strong H-infinity norm:")[1].split()[0])
    assert value == pytest.approx(28.46404, abs=1e-4)


def test_roots_csv_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("roots", _data("demo_k1.yaml"), "--out", str(a))[0] == 0
    assert run("roots", _data("demo_k1.yaml"), "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = np.loadtxt(a, delimiter=",", skiprows=1)
    assert a.read_text().splitlines()[0] == "re,im,residual,multiplicity"
    assert rows[0, 0] == pytest.approx(-0.13180, abs=1e-5)
    assert np.all(rows[:, 0] >= -0.8)


def test_sweep_csv(tmp_path):
    out = tmp_path / "s.csv"
    code, text = run("sweep", _data("two_delay.yaml"), "--wmin", "0.1", "--wmax", "10", "--points", "50", "--out", str(out))
    assert code == 0
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (50, 2)
    assert "grid maximum" in text


def test_stabilize_writes_fragment(tmp_path):
    spec = tmp_path / "p.yaml"
    spec.write_text("plant:\n  A: [[0.2]]\n  B_w: [[1]]\n  B_u: [[1]]\n  C_z: [[1]]\n  C_y: [[1]]\n  input_delay: 0.2\n"
                    "options:\n  restarts: 1\n")
    frag = tmp_path / "k.yaml"
    code, out = run("stabilize", str(spec), "--out", str(frag))
    assert code == 0
    k = load_controller(frag, 1, 1)
    assert k.D_K[0, 0] < -0.2
    assert "# robust spectral abscissa" in frag.read_text()


def test_exit_code_input_error(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("system:\n  A: [[1, 2]]\n")
    assert run("info", str(bad))[0] == 1
    assert run("info", str(tmp_path / "missing.yaml"))[0] == 1
    assert run("stabilize", _data("two_delay.yaml"))[0] == 1
    assert run("sweep", _data("two_delay.yaml"), "--linear")[0] == 1


def test_exit_code_numerical_failure(tmp_path):
    f = tmp_path / "u.yaml"
    f.write_text("system:\n  A: [[0.5]]\n  B: [[1]]\n  C: [[1]]\n")
    assert run("norm", str(f))[0] == 3


def test_exit_code_synthesis_failure(tmp_path):
    f = tmp_path / "p.yaml"
    f.write_text("plant:\n  A: [[0.5, 0], [0, -1]]\n  B_w: [[1], [1]]\n  B_u: [[0], [1]]\n"
                 "  C_z: [[1, 1]]\n  C_y: [[1, 1]]\noptions:\n  restarts: 1\n  maxit: 10\n")
    assert run("stabilize", str(f))[0] == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "ddaehinf.cli", "info", _data("two_delay.yaml")], capture_output=True, text=True)
    assert r.returncode == 0 and "robust spectral abscissa" in r.stdout
