import json

import numpy as np
import scipy.sparse as sp

from stoqham.cli import main
from stoqham.spectral import SparseOperator, read_matrix_market, write_matrix_market


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compile_line1d(tmp_path, capsys):
    code, out, _ = run(capsys, "compile", "--construction", "line1d", "--circuit", "n4_reject", "--out", str(tmp_path))
    assert code == 0
    summary = json.loads(out)
    assert summary["dim"] == 19**3
    assert summary["configurations"] == 3
    assert sorted(summary["files"]) == ["line1d_final.mtx", "line1d_init.mtx", "line1d_penalty.mtx", "line1d_prop.mtx"]
    prop = read_matrix_market(tmp_path / "line1d_prop.mtx")
    assert prop.dim == 6859 and prop.is_symmetric()
    assert json.loads((tmp_path / "compile.json").read_text()) == summary


def test_compile_grid2d_summary(capsys):
    code, out, _ = run(capsys, "compile", "--construction", "grid2d", "--circuit", "n2_accept")
    summary = json.loads(out)
    assert code == 0 and summary["site_dim"] == 14 and summary["grid"] == [1, 3]


def test_compile_from_file_and_cap(tmp_path, capsys):
    f = tmp_path / "c.qc"
    f.write_text("QUBITS 4\nROLE 0 input1\nROLE 1 input1\nROLE 2 output\nROLE 3 witness\nTOF 0 1 2\n")
    code, _, err = run(capsys, "compile", "--circuit", str(f), "--cap", "1000")
    assert code == 2 and "exceeds cap" in err
    code, out, _ = run(capsys, "compile", "--circuit", str(f), "--mode", "restricted")
    assert code == 0 and json.loads(out)["dim"] == 17 * 16


def test_parse_error_exit_code(tmp_path, capsys):
    f = tmp_path / "bad.qc"
    f.write_text("QUBITS 3\nROLE 0 input1 output\nTOF 0 1\n")
    code, _, err = run(capsys, "compile", "--circuit", str(f))
    assert code == 2 and "line 3" in err


def test_usage_errors(capsys):
    assert run(capsys, "compile", "--circuit", "no_such_toy")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "verify")[0] == 2


def test_verify_fig5(capsys):
    code, out, _ = run(capsys, "verify", "--fig5")
    assert code == 0
    assert out.splitlines()[0] == "CC QR QR | U U U"
    assert out.splitlines()[21] == "D D D | CC QR QR"


def test_verify_toys(capsys):
    for cons in ("kitaev", "grid2d", "line1d"):
        code, out, _ = run(capsys, "verify", "--construction", cons, "--circuit", "n4_coin", "--mode", "restricted")
        assert code == 0, out
        assert json.loads(out)["passed"]


def test_verify_flags_corrupted_term(tmp_path, capsys):
    m = sp.csr_matrix(np.array([[1.0, 0.5], [0.5, 1.0]]))
    write_matrix_market(tmp_path / "bad.mtx", SparseOperator(m, (), "bad"))
    code, out, _ = run(capsys, "verify", "--mtx", str(tmp_path / "bad.mtx"))
    assert code == 1
    check = json.loads(out)["checks"][0]
    assert not check["passed"] and check["worst"] == 0.5 and check["at"] in ([0, 1], [1, 0])


def test_verify_wrong_witness_length(capsys):
    assert run(capsys, "verify", "--circuit", "n4_reject", "--witness", "01")[0] == 2


def test_spectrum_reject_and_accept(capsys):
    code, out, _ = run(capsys, "spectrum", "--construction", "grid2d", "--circuit", "n4_reject", "--mode", "restricted")
    r = json.loads(out)
    assert code == 0
    assert abs(r["lam_min"] - (1 - np.cos(np.pi / 34))) < 1e-10
    assert r["c_T3"] > 0.01 and 0 < r["geometric_bound"] <= r["lam_min"]
    code, out, _ = run(capsys, "spectrum", "--construction", "kitaev", "--circuit", "n4_accept")
    assert abs(json.loads(out)["lam_min"]) < 1e-10


def test_spectrum_compare(capsys):
    code, out, _ = run(capsys, "spectrum", "--construction", "grid2d", "--circuit", "n2_reject", "--compare")
    r = json.loads(out)
    assert code == 0 and r["restricted_agrees"]


def test_reports_deterministic(capsys):
    a = run(capsys, "compile", "--construction", "line1d", "--circuit", "n4_coin", "--seed", "7")[1]
    b = run(capsys, "compile", "--construction", "line1d", "--circuit", "n4_coin", "--seed", "7")[1]
    assert a == b
