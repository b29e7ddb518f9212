import hashlib

import pytest

from nilgeom.cli import run

from conftest import scenario_path


def artifacts(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir())}


def test_summary_lists_artifact_hashes(tmp_path):
    assert run(["verify-rects", "--trials", "50", "--out", str(tmp_path)]) == 0
    summary = (tmp_path / "summary.txt").read_text().splitlines()
    assert summary[1] == "status = ok"
    data = (tmp_path / "rect_laws.txt").read_bytes()
    assert f"rect_laws.txt sha256 {hashlib.sha256(data).hexdigest()}" in summary


def test_missing_scenario_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run(["markers", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_malformed_scenario_exits_two(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[scenario]\nname = x\n")
    assert run(["check-params", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_failed_assertion_exits_one(tmp_path, capsys):
    code = run(["check-params", "--scenario", str(scenario_path("z1_z2")), "--out", str(tmp_path)])
    assert code == 1
    assert "period too small" in capsys.readouterr().err
    assert "status = FAIL" in (tmp_path / "summary.txt").read_text()


def test_strict_constants_fall_back_to_symbolic_report(tmp_path):
    code = run(["markers", "--scenario", str(scenario_path("z1_wide")), "--strict-constants",
                "--out", str(tmp_path)])
    text = (tmp_path / "params.txt").read_text()
    assert "[symbolic] level 1: strict constants" in text
    assert code == 1  # the strict dom containment fails at desk scale
    assert not (tmp_path / "markers.txt").exists()


def test_conjugacy_demo_table(tmp_path):
    assert run(["conjugacy-demo", "--n", "2", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "conjugacy.txt").read_text().splitlines()
    assert lines[2] == "identity holds = True"
    assert len(lines) == 3 + 16
    assert "x=01 y=11 status=found g=(0,1,0,0,0,0) without factor 0: none" in lines


@pytest.mark.parametrize("argv", [["markers", "--scenario", str(scenario_path("z2_free"))],
                                  ["orthogonalize", "--scenario", str(scenario_path("z1_small")), "--count", "1"]])
def test_reruns_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(argv + ["--out", str(a)]) == run(argv + ["--out", str(b)])
    assert artifacts(a) == artifacts(b)
