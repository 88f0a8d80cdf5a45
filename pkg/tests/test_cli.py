import json

import numpy as np
import pytest

import obsblock.errors as errors
from obsblock.cli import main
from obsblock.fixtures import fixture_path


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def _design(tmp_path, capsys, command, fixture, *extra):
    path = tmp_path / f"{fixture}-{command}.json"
    code, _, err = _run([command, fixture_path(fixture), "-o", path, *extra],
                        capsys)
    assert code == 0, err
    return path, json.loads(path.read_text())


def test_design_block_fallback(tmp_path, capsys):
    path, rep = _design(tmp_path, capsys, "design-block", "example_block",
                        "--mode-value", "3")
    assert rep["format"] == "obsblock-design/1"
    assert rep["design"]["case"] == "Fallback"
    assert rep["design"]["unobservable_mode"] == pytest.approx([-3, 0])
    assert rep["verification"]["pass"]
    code, out, _ = _run(["verify", path], capsys)
    assert code == 0 and "verification passed" in out
    code, out, _ = _run(["report", path], capsys)
    assert code == 0 and "Fallback" in out


def test_verify_catches_zeroed_gain(tmp_path, capsys):
    path, rep = _design(tmp_path, capsys, "design-block", "example_block",
                        "--mode-value", "3")
    rep["design"]["F"] = np.zeros((3, 4)).tolist()
    path.write_text(json.dumps(rep))
    out_json = tmp_path / "verification.json"
    code, _, err = _run(["verify", path, "-o", out_json], capsys)
    assert code == errors.VerificationFailed.exit_code
    assert "observable at all modes" in err
    assert json.loads(out_json.read_text())["pass"] is False


def test_reports_are_byte_identical(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    src = fixture_path("example_regional")
    assert _run(["design-regional-stable", src, "-o", a], capsys)[0] == 0
    assert _run(["design-regional-stable", src, "-o", b], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_gain_written_at_full_precision(tmp_path, capsys):
    path, rep = _design(tmp_path, capsys, "design-block", "example_block",
                        "--mode-value", "3")
    from obsblock.blocker import algorithm1
    from obsblock.fixtures import load_fixture
    from obsblock.netmodel import build_matrices
    F = algorithm1(build_matrices(load_fixture("example_block")), 2).gain
    assert np.array_equal(np.array(rep["design"]["F"]), F)


def test_regional_stable(tmp_path, capsys):
    _, rep = _design(tmp_path, capsys, "design-regional-stable",
                     "example_regional")
    F = np.array(rep["design"]["F"])
    assert not np.any(F[:, 7:])
    assert rep["design"]["stability"] == "Strict"
    assert rep["verification"]["stability"] == "Strict"
    assert rep["design"]["cut"]["vcut"] == [5]


def test_regional_unstable_still_reports(tmp_path, capsys):
    _, rep = _design(tmp_path, capsys, "design-regional", "example_regional")
    assert rep["design"]["stable"] is False
    assert rep["design"]["unstable_modes"]


def test_cutset_and_enable(tmp_path, capsys):
    _, rep = _design(tmp_path, capsys, "design-cutset", "example_regional")
    assert rep["verification"]["pass"]
    code, _, err = _run(["enable", fixture_path("example_block"),
                         "--mode-index", "2"], capsys)
    assert code == errors.AlreadyObservable.exit_code
    assert "AlreadyObservable" in err


def test_conjugate_degenerate_exit(capsys):
    code, _, err = _run(["design-block", fixture_path("example_conjugate"),
                         "--mode-value", "1.388+0.602j"], capsys)
    assert code == errors.ConjugateDegenerate.exit_code
    assert "add an actuation node" in err


def test_simulate_outputs(tmp_path, capsys):
    path, _ = _design(tmp_path, capsys, "design-block", "example_block",
                      "--mode-value", "3", "--sim", tmp_path / "trace.csv",
                      "--horizon", "1")
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0].startswith("t,x1")
    assert len(lines) == 1002
    code, out, _ = _run(["simulate", path, "--horizon", "0.01", "--x0",
                         "ones"], capsys)
    assert code == 0 and len(out.splitlines()) == 12
    data = np.loadtxt(tmp_path / "trace.csv", delimiter=",", skiprows=1)
    assert np.abs(data[:, 5:7]).max() <= 1e-12


@pytest.mark.parametrize("body, code", [
    ("{", errors.ParseError.exit_code),
    ('{"n": 2, "edges": [{"from": 1, "to": 2, "w": -1}], '
     '"actuation": [1], "measurement": [2]}', errors.InvalidWeight.exit_code),
    ('{"n": 2, "edges": [{"from": 1, "to": 2, "w": 1}], '
     '"actuation": [1], "measurement": [2]}',
     errors.NotStronglyConnected.exit_code),
    ('{"n": 2, "edges": [], "measurement": [2]}',
     errors.ValidationError.exit_code),
])
def test_input_errors(tmp_path, capsys, body, code):
    path = tmp_path / "net.json"
    path.write_text(body)
    got, _, err = _run(["design-block", path], capsys)
    assert got == code
    assert err.startswith("obsblock: ")
    assert len(err.strip().splitlines()) == 1


def test_usage_and_io_errors(tmp_path, capsys):
    code, _, _ = _run(["design-block", tmp_path / "missing.json"], capsys)
    assert code == 3
    code, _, _ = _run(["design-block", fixture_path("example_block"),
                       "--mode-value", "4"], capsys)
    assert code == 2
    code, _, _ = _run(["design-block", fixture_path("example_block"),
                       "--mode-index", "9"], capsys)
    assert code == 2
    with pytest.raises(SystemExit):
        main(["design-block"])


def test_exit_codes_are_distinct():
    classes = [c for c in vars(errors).values()
               if isinstance(c, type) and issubclass(c, errors.ObsBlockError)]
    codes = [c.exit_code for c in classes]
    assert len(set(codes)) == len(codes)
    assert all(c not in (0, 2, 3) for c in codes)


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out
