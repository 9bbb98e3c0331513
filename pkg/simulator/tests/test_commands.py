"""
命令行：simulate / check / sweep 与退出码
"""
import hashlib

import pytest

from app.commands.sweep import parse_range
from app.main import main
from app.services import export
from app.utils.errors import EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, InvalidInputError

RUN_FILES = sorted([
    export.EVENTS_FILE, export.WORLDLINES_FILE, export.SEGMENTS_FILE,
    export.TRACE_FILE, export.REPORT_FILE, export.MANIFEST_FILE,
])


@pytest.fixture
def static_mirror(scenario_dir):
    return str(scenario_dir / "static_mirror.scn")


def test_simulate_writes_every_output(static_mirror, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", static_mirror, "--out", str(out)]) == EXIT_OK
    assert export.output_files(out) == RUN_FILES
    manifest = export.read_manifest(out)
    assert manifest.files == RUN_FILES
    with open(static_mirror, "rb") as f:
        assert manifest.scenario_digest == hashlib.sha256(f.read()).hexdigest()
    header = (out / export.SEGMENTS_FILE).read_text(encoding="utf-8").splitlines()[0]
    assert header == ",".join(export.SEGMENTS_HEADER)


def test_simulate_is_deterministic(static_mirror, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", static_mirror, "--out", str(first)]) == EXIT_OK
    assert main(["simulate", static_mirror, "--out", str(second)]) == EXIT_OK
    for name in RUN_FILES:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_simulate_rejects_superluminal_trajectory(scenario_dir, tmp_path, capsys):
    text = (scenario_dir / "overtake_klein_gordon.scn").read_text(encoding="utf-8")
    path = tmp_path / "fast.scn"
    path.write_text(text.replace("c = 10.0", "c = 0.5"), encoding="utf-8")
    assert main(["simulate", str(path), "--out", str(tmp_path / "out")]) == EXIT_VALIDATION
    assert "speed limit" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_simulate_reports_parse_errors(tmp_path, capsys):
    path = tmp_path / "broken.scn"
    path.write_text("[model]\nfamily = dirac\n", encoding="utf-8")
    assert main(["simulate", str(path), "--out", str(tmp_path / "out")]) == EXIT_VALIDATION
    assert "line 2" in capsys.readouterr().err


def test_simulate_missing_file_is_a_runtime_error(tmp_path):
    missing = tmp_path / "nope.scn"
    assert main(["simulate", str(missing), "--out", str(tmp_path / "out")]) == EXIT_RUNTIME


@pytest.mark.slow
def test_simulate_shipped_overtake_scenario(scenario_dir, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", str(scenario_dir / "overtake_schrodinger.scn"), "--out", str(out)]) == EXIT_OK
    assert export.output_files(out) == RUN_FILES


def test_analysis_failure_is_a_runtime_error(static_mirror, tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["simulate", static_mirror, "--out", str(out), "--sample-rate", "1e12"])
    assert code == EXIT_RUNTIME
    assert "detector analysis failed" in capsys.readouterr().err


@pytest.mark.slow
def test_check_passes_every_row(capsys):
    assert main(["check"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 13
    assert all("  PASS  " in line for line in lines)


def test_sweep_single_value(static_mirror, tmp_path):
    out = tmp_path / "sweep"
    code = main(["sweep", static_mirror, "--param", "source.v_g", "--range", "0.5:0.5:1",
                 "--out", str(out)])
    assert code == EXIT_OK
    lines = (out / export.SWEEP_FILE).read_text(encoding="utf-8").splitlines()
    assert lines[0] == ",".join(export.SWEEP_HEADER)
    assert len(lines) == 2
    assert lines[1].startswith("0.5,")
    assert export.output_files(out / "run_000") == RUN_FILES


def test_sweep_unknown_key_fails_before_running(static_mirror, tmp_path):
    out = tmp_path / "sweep"
    code = main(["sweep", static_mirror, "--param", "source.colour", "--range", "0:1:3",
                 "--out", str(out)])
    assert code == EXIT_VALIDATION
    assert not out.exists()


def test_parse_range():
    assert parse_range("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_range("2:2:1") == [2.0]
    for text in ("0:1", "a:b:3", "0:1:0"):
        with pytest.raises(InvalidInputError):
            parse_range(text)
