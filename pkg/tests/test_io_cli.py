import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from prodsim.capacity import compute_alpha
from prodsim.cli import main
from prodsim.errors import ValidationError
from prodsim.hamiltonians import ProductHamiltonian, ising
from prodsim.io import (
    FORMAT_VERSION,
    decode_matrix,
    dump_hamiltonian,
    encode_matrix,
    hamiltonian_document,
    load_hamiltonian,
    parse_hamiltonian,
)
from prodsim.linalg import SIGMA_X, SIGMA_Y, SIGMA_Z

DATA = Path(__file__).resolve().parent.parent / "data"


def run(capsys, *argv):
    try:
        code = main([str(a) for a in argv])
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def report(text):
    # the structured block sits between the two markers
    start = text.index("--- report ---\n") + len("--- report ---\n")
    end = text.index("--- end ---")
    return json.loads(text[start:end])


def data(name):
    return DATA / name


def test_matrix_codec_round_trip(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.array_equal(decode_matrix(encode_matrix(m), "m"), m)


@pytest.mark.parametrize("bad", [[], [[1, 2]], [[[1, 0], [0, 0]]], [[[1, 0]], [[0, 0]]], [[["a", 0]]], [[[True, 0]]]])
def test_decode_rejects_malformed(bad):
    with pytest.raises(ValidationError):
        decode_matrix(bad, "m")


def test_document_round_trip(tmp_path):
    h = ProductHamiltonian(np.diag([3.0, 1.0, 0.0]), SIGMA_Y)
    path = tmp_path / "h.json"
    dump_hamiltonian(h, path, labels=["demo"])
    f = load_hamiltonian(path)
    assert f.kind == "product" and f.labels == ("demo",)
    assert np.array_equal(f.product().matrix, h.matrix)
    assert len(f.sha256) == 64


def test_sum_and_boxplus_documents():
    doc = hamiltonian_document([ProductHamiltonian(SIGMA_X, SIGMA_X), ProductHamiltonian(SIGMA_Y, SIGMA_Y)])
    f = parse_hamiltonian(doc)
    assert f.kind == "sum" and len(f.terms) == 2 and f.product() is None
    box = parse_hamiltonian(hamiltonian_document([ising(), ising()], kind="boxplus"))
    assert box.hamiltonian.dims == (4, 4) and box.hamiltonian.parts is not None


@pytest.mark.parametrize("doc", [
    [],
    {"kind": "product", "factors": []},
    {"format_version": "0.9", "kind": "product"},
    {"format_version": FORMAT_VERSION, "kind": "tensor"},
    {"format_version": FORMAT_VERSION, "kind": "product"},
    {"format_version": FORMAT_VERSION, "kind": "sum", "terms": []},
    {"format_version": FORMAT_VERSION, "kind": "product", "factors": [encode_matrix(SIGMA_X)]},
    {"format_version": FORMAT_VERSION, "kind": "product",
     "factors": [encode_matrix(SIGMA_X), encode_matrix(SIGMA_Z)], "labels": [1]},
    {"format_version": FORMAT_VERSION, "kind": "product",
     "factors": [[[[0, 0], [1, 0]], [[0, 0], [0, 0]]], encode_matrix(SIGMA_Z)]},
    {"format_version": FORMAT_VERSION, "kind": "sum",
     "terms": [[encode_matrix(SIGMA_X), encode_matrix(SIGMA_Z)], [encode_matrix(np.eye(3)), encode_matrix(SIGMA_Z)]]},
])
def test_parse_rejects_invalid(doc):
    with pytest.raises(ValidationError):
        parse_hamiltonian(doc)


def test_load_rejects_bad_json_and_missing(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ValidationError):
        load_hamiltonian(p)
    with pytest.raises(ValidationError):
        load_hamiltonian(tmp_path / "missing.json")


def test_standardize_command(capsys):
    code, out, _ = run(capsys, "standardize", data("ising.json"))
    assert code == 0
    res = report(out)["results"]
    assert res["a"] == [1.0, -1.0] and res["b"] == [1.0, -1.0] and res["scale"] == pytest.approx(1.0)
    code, out, _ = run(capsys, "standardize", data("diag310_z.json"))
    res = report(out)["results"]
    assert res["scale"] == pytest.approx(1.5)
    assert res["a"] == pytest.approx([1.0, -1 / 3, -1.0])


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "standardize", data("non_hermitian.json"))[0] == 3
    code, _, err = run(capsys, "standardize", data("local.json"))
    assert code == 2 and "local" in err
    assert run(capsys, "rate", data("ising.json"), data("local.json"))[0] == 2
    assert run(capsys, "standardize", tmp_path / "nope.json")[0] == 3
    assert run(capsys, "bogus-command")[0] == 3
    assert run(capsys, "verify", data("ising.json"), data("ising.json"), "--t", "x")[0] == 3


def test_rate_command(capsys):
    code, out, _ = run(capsys, "rate", data("ising.json"), data("ising.json"))
    assert code == 0 and report(out)["results"]["rate"] == pytest.approx(1.0)
    res = report(run(capsys, "rate", data("diag310_z.json"), data("ising.json"))[1])["results"]
    assert res["rate"] == pytest.approx(1.5) and res["formula"] == "product"
    res = report(run(capsys, "rate", data("two_qubit_mixed.json"), data("xx_half_yy.json"))[1])["results"]
    assert res["formula"] == "two-qubit"
    kn, kt = res["k123_native"], res["k123_target"]
    assert res["rate"] == pytest.approx(min(a / b for a, b in zip(kn, kt)))
    res = report(run(capsys, "rate", data("ising_boxplus_ising.json"), data("ising.json"))[1])["results"]
    assert res["formula"] == "boxplus" and res["rate"] == pytest.approx(2.0)


def test_capacity_command(capsys):
    a = compute_alpha().alpha
    res = report(run(capsys, "capacity", data("ising.json"))[1])["results"]
    assert res["capacity"] == pytest.approx(a)
    res = report(run(capsys, "capacity", data("ising_boxplus_ising.json"))[1])["results"]
    assert res["capacity"] == pytest.approx(2 * a)
    code, out, _ = run(capsys, "capacity", data("xx_half_yy.json"), "--catalytic")
    res = report(out)["results"]
    assert code == 0
    assert res["capacity"] == pytest.approx(a * (res["delta_j"] ** 2 + res["delta_g"] ** 2) / 4)
    assert run(capsys, "capacity", data("ising.json"), "--catalytic")[0] == 2


def test_compile_command(capsys):
    res = report(run(capsys, "compile", data("ising.json"), data("ising.json"))[1])["results"]
    assert [s["type"] for s in res["segments"]] == ["evolve"]
    code, out, _ = run(capsys, "compile", data("ising.json"), data("qutrit_z.json"), "--n", "4")
    res = report(out)["results"]
    assert code == 0
    assert res["schedules"]["schedule_a"] == pytest.approx([1.0, 0.5, 0.0])
    assert res["accounting_error"] <= 1e-12
    assert "schedule_a: p = [1.  0.5 0. ]" in out
    res = report(run(capsys, "compile", data("diag310_z.json"), data("ising_x2.json"),
                     "--direction", "round-trip")[1])["results"]
    assert res["rate"] == pytest.approx(1.0, abs=1e-12)


def test_compile_with_matrices(capsys):
    res = report(run(capsys, "compile", data("zx.json"), data("ising.json"), "--matrices")[1])["results"]
    lus = [s for s in res["segments"] if s["type"] == "local_unitary"]
    assert lus and all("ua" in s and "ub" in s for s in lus)


def test_verify_command(capsys):
    code, out, _ = run(capsys, "verify", data("diag310_z.json"), data("ising.json"), "--n", "1", "--n-max", "4")
    rep = report(out)
    assert code == 0
    assert [r["n"] for r in rep["results"]["sweep"]] == [1, 2, 4]
    assert all(r["error"] <= 1e-10 for r in rep["results"]["sweep"])
    assert rep["results"]["monotone"] is True
    res = report(run(capsys, "verify", data("ising.json"), data("qutrit_z.json"), "--t", "0",
                     "--n", "1", "--n-max", "1")[1])["results"]
    assert res["final_error"] == 0.0


def test_verify_threshold_exit(capsys):
    code, out, _ = run(capsys, "verify", data("ising.json"), data("diag310_z.json"),
                       "--n", "1", "--n-max", "1", "--threshold", "0")
    assert code == 4
    assert report(out)["pass"] is False


def test_alpha_command(capsys):
    code, out, _ = run(capsys, "alpha", "--json")
    res = json.loads(out)["results"]
    assert code == 0 and res["alpha"] == pytest.approx(1.9123, abs=5e-4)


def test_normal_form_command(capsys):
    res = report(run(capsys, "normal-form", data("zx.json"))[1])["results"]
    assert res["lambdas"] == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)
    assert res["reconstruction_error"] <= 1e-12
    assert run(capsys, "normal-form", data("qutrit_z.json"))[0] == 3


def test_catalytic_check_command(capsys):
    code, out, _ = run(capsys, "catalytic-check", data("xx_half_yy.json"))
    res = report(out)["results"]
    assert code == 0 and res["eligible"] is True
    assert res["delta_x"] ** 2 + res["delta_z"] ** 2 == pytest.approx(res["delta_j"] ** 2 + res["delta_g"] ** 2)
    code, out, _ = run(capsys, "catalytic-check", data("catalytic_trace_mismatch.json"))
    assert code == 2 and report(out)["results"]["eligible"] is False
    # two product files: parallel terms pass, sigma_z sigma_z with sigma_z sigma_x fails the trace test
    assert run(capsys, "catalytic-check", data("ising.json"), data("ising_x2.json"))[0] == 0
    assert run(capsys, "catalytic-check", data("ising.json"), data("zx.json"))[0] == 2
    assert run(capsys, "catalytic-check", data("ising.json"))[0] == 3


def test_properties_command(capsys):
    code, out, _ = run(capsys, "properties", "--trials", "5", "--json")
    rep = json.loads(out)
    assert code == 0 and rep["results"]["passed"] is True and rep["parameters"]["seed"] == 42
    code, out, _ = run(capsys, "properties", "--measure", "constant", "--trials", "3", "--json")
    assert json.loads(out)["results"]["properties"]["positivity"]["passed"] is False


def test_reports_are_deterministic(capsys):
    for argv in (["verify", data("ising.json"), data("qutrit_z.json"), "--n", "4", "--n-max", "16"],
                 ["properties", "--trials", "4"],
                 ["compile", data("diag310_z.json"), data("qutrit_z.json"), "--n", "2"]):
        first = run(capsys, *argv)[1]
        second = run(capsys, *argv)[1]
        assert first == second


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "prodsim", "alpha", "--json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert math.isclose(json.loads(proc.stdout)["results"]["x0"], 0.9168, abs_tol=5e-4)
