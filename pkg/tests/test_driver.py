import json
from functools import partial

import pytest

from helpers import corpus
from microdeduct import driver
from microdeduct.driver import AUX_OUTPUT, FUNC_OUTPUT, ExitStatus, PipelineConfig, emit_report, run, summary_line
from microdeduct.func_infer import FuncInferConfig
from microdeduct.solver import SolverLimits
from microdeduct.wp import verify

ENTRY = "/*@ requires \\true; */"
ENSURES = "ensures (in <= 10 ==> out == in*in) && (in > 10 ==> out == 100);"


@pytest.fixture
def example_file(tmp_path, example_source):
    p = tmp_path / "running_example.c"
    p.write_text(example_source)
    return p


def _variant(tmp_path, example_source, old, new, name="variant.c"):
    p = tmp_path / name
    p.write_text(example_source.replace(old, new))
    return p


# --------------------------------------------------------------------------
# Exit codes and artifacts


def test_all_verifies(example_file, capsys):
    code = driver.main([str(example_file)])
    out = capsys.readouterr().out
    assert code == ExitStatus.VERIFIED == 0
    d = example_file.parent
    assert (d / FUNC_OUTPUT).exists() and (d / AUX_OUTPUT).exists()
    report = (d / "report.txt").read_text()
    assert report.rstrip().endswith("VERIFIED (8/8 VCs)")
    assert "main/ensures" in out


def test_wp_on_unannotated_is_input_error(example_file, capsys):
    code = driver.main(["--wp", str(example_file)])
    err = capsys.readouterr().err
    assert code == ExitStatus.INPUT_ERROR == 4
    assert "missing contract" in err


def test_missing_file(tmp_path, capsys):
    assert driver.main([str(tmp_path / "nope.c")]) == ExitStatus.INPUT_ERROR
    assert "cannot read" in capsys.readouterr().err


def test_syntax_error(tmp_path, capsys):
    p = tmp_path / "bad.c"
    p.write_text("int g;\nvoid main( {\n")
    assert driver.main([str(p)]) == ExitStatus.INPUT_ERROR
    assert "error" in capsys.readouterr().err


def test_negated_ensures_fails(tmp_path, example_source, capsys):
    p = _variant(tmp_path, example_source, ENSURES, "ensures !((in <= 10 ==> out == in*in) && (in > 10 ==> out == 100));")
    code = driver.main([str(p)])
    cap = capsys.readouterr()
    assert code == ExitStatus.FAILED == 1
    assert "main/ensures" in cap.err
    line = next(l for l in cap.out.splitlines() if l.startswith("main/ensures"))
    assert "failed" in line and "countermodel {" in line


def test_unknown_exit_code(example_file, capsys):
    assert driver.main(["--cap", "1", str(example_file)]) == ExitStatus.UNKNOWN == 2
    assert "unknown" in capsys.readouterr().err


def test_inference_failure_exit_code(tmp_path, monkeypatch, capsys):
    n = 6
    lines = [f"int g{i};" for i in range(n)] + ["int h;", "void f() { h = 0; }", ENTRY, "void main() {"]
    for i in range(n):
        lines.append(f"  if (g{i} > 0) {{ h = h + {i + 1}; }} else {{ h = h - {i + 1}; }}")
    lines += ["  f();", "}"]
    p = tmp_path / "wide.c"
    p.write_text("\n".join(lines) + "\n")
    # 2**6 independent paths against a cap of 16 states
    monkeypatch.setattr(driver, "FuncInferConfig", partial(FuncInferConfig, state_cap=16))
    assert driver.main([str(p)]) == ExitStatus.INFERENCE_FAILURE == 3
    assert "path explosion" in capsys.readouterr().err


# --------------------------------------------------------------------------
# Reports


def test_summary_line(example_annotated):
    rep = verify(example_annotated)
    assert summary_line(rep) == "VERIFIED (8/8 VCs)"


def test_failed_vc_line(tmp_path, example_source):
    p = _variant(tmp_path, example_source, ENSURES, "ensures out == in;")
    res = run(PipelineConfig(p))
    text = emit_report(res.report, volatile=False)
    line = next(l for l in text.splitlines() if l.startswith("main/ensures"))
    assert line.startswith("main/ensures [") and ": failed" in line and "countermodel {" in line
    assert text.rstrip().splitlines()[-1].startswith("FAILED (")


def test_volatile_timings(example_file):
    res = run(PipelineConfig(example_file))
    text = emit_report(res.report, volatile=True)
    assert [l.split(":")[0] for l in text.splitlines() if l.startswith("time ")] == ["time func", "time aux", "time wp"]
    assert "time " not in emit_report(res.report, volatile=False)


def test_report_file_is_deterministic(example_file):
    a = run(PipelineConfig(example_file)).artifacts["wp"].read_text()
    b = run(PipelineConfig(example_file)).artifacts["wp"].read_text()
    assert a == b


def test_json_report(example_file):
    code = driver.main(["--report", "json", str(example_file)])
    assert code == 0
    doc = json.loads((example_file.parent / "report.json").read_text())
    assert doc["status"] == "verified" and doc["verified"] == doc["total"] == 8
    assert {v["name"] for v in doc["vcs"]} >= {"main/ensures", "saturate/ensures"}
    assert "timings" not in doc


# --------------------------------------------------------------------------
# Composability and options


@pytest.mark.parametrize("name", ["running_example.c", "eval_module.c"])
def test_stages_compose(tmp_path, name):
    src = corpus(name)
    whole, steps = tmp_path / "whole", tmp_path / "steps"
    for d in (whole, steps):
        d.mkdir()
        (d / name).write_text(src)
    assert driver.main(["--all", str(whole / name)]) == 0
    assert driver.main(["-func", str(steps / name)]) == 0
    assert driver.main(["-aux", str(steps / FUNC_OUTPUT)]) == 0
    assert driver.main(["-wp", str(steps / AUX_OUTPUT)]) == 0
    for f in (FUNC_OUTPUT, AUX_OUTPUT, "report.txt"):
        assert (whole / f).read_bytes() == (steps / f).read_bytes()


def test_out_dir(tmp_path, example_file):
    out = tmp_path / "artifacts"
    assert driver.main(["--out-dir", str(out), str(example_file)]) == 0
    assert sorted(p.name for p in out.iterdir()) == sorted([FUNC_OUTPUT, AUX_OUTPUT, "report.txt"])


def test_cap_flag_and_env(monkeypatch, example_file):
    args = driver.build_parser().parse_args(["--cap", "7", str(example_file)])
    assert driver.config_from_args(args).solver.dnf_cap == 7
    monkeypatch.setenv(driver.CAP_ENV, "9")
    args = driver.build_parser().parse_args([str(example_file)])
    assert driver.config_from_args(args).solver.dnf_cap == 9
    args = driver.build_parser().parse_args(["--cap", "7", str(example_file)])
    assert driver.config_from_args(args).solver.dnf_cap == 7


def test_bad_cap_rejected(example_file, capsys):
    assert driver.main(["--cap", "0", str(example_file)]) == ExitStatus.INPUT_ERROR
    assert "positive" in capsys.readouterr().err


def test_self_check_notes(example_file, capsys):
    assert driver.main(["--self-check", str(example_file)]) == 0
    out = capsys.readouterr().out
    assert "note: self-check saturate:" in out


@pytest.mark.parametrize(
    "kwargs",
    [{"stage": "link"}, {"report_format": "xml"}, {"solver": SolverLimits(dnf_cap=0)}],
)
def test_config_validation(tmp_path, kwargs):
    with pytest.raises(ValueError):
        PipelineConfig(tmp_path / "x.c", **kwargs)
