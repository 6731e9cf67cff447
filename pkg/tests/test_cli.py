"""Command line behavior: exit codes, output formats, ordering."""

import json
import subprocess

import pytest

from derivkit.cli import main

OK_SCRIPT = """\
theory square_expand
  vars x y : Real
  goal (x + y)^2 = x^2 + 2 * x * y + y^2
  proof
    ring
  qed
"""

FAIL_SCRIPT = """\
theory will_fail
  vars P K : Real
  hyp hK : 0 < K
  let theta := K * P / (1 + K * P)
  goal theta * (1 + K * P) = K * P
  proof
    unfold theta
    field_normalize
    ring
  qed
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run_cli(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


# -- list -----------------------------------------------------------------


def test_list_covers_registry(capsys):
    code, out, err = run_cli(["list"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 19
    assert lines[0].startswith("langmuir_kinetic_fig1  ")
    assert "Langmuir 1918" in lines[0]
    brunauer = next(l for l in lines if l.startswith("brunauer_28_from_seq"))
    assert "depends: brunauer_26_from_seq, brunauer_27" in brunauer
    charles = next(l for l in lines if l.startswith("charles_from_ideal_gas"))
    assert "[reconstructed]" in charles


def test_console_entry_point():
    r = subprocess.run(["derivkit", "list"], capture_output=True, text=True)
    assert r.returncode == 0
    assert len(r.stdout.strip().splitlines()) == 19


# -- check ----------------------------------------------------------------


def test_check_mixed_files_reports_each(tmp_path, capsys):
    a = write(tmp_path, "ok.deriv", OK_SCRIPT)
    b = write(tmp_path, "bad.deriv", FAIL_SCRIPT)
    code, out, _ = run_cli(["check", a, b, "--samples", "5"], capsys)
    assert code == 1
    lines = out.strip().splitlines()
    assert lines[0].startswith("square_expand: Accepted (Symbolic)")
    assert lines[1].startswith(
        "will_fail: Failed (ObligationFailed: 1 + K * P != 0 at step 2)")


def test_check_json_shape(tmp_path, capsys):
    a = write(tmp_path, "ok.deriv", OK_SCRIPT)
    b = write(tmp_path, "bad.deriv", FAIL_SCRIPT)
    code, out, _ = run_cli(["check", a, b, "--json", "--samples", "5"], capsys)
    assert code == 1
    report = json.loads(out)
    assert [r["theory"] for r in report] == ["square_expand", "will_fail"]

    ok = report[0]
    assert ok["verdict"] == "accepted"
    assert ok["soundness"] == "symbolic"
    assert "failure" not in ok
    assert ok["steps"][0]["step"] == "ring"
    assert ok["numeric"]["samples"] == 5
    assert ok["numeric"]["worst_residual"] <= 1e-9
    assert isinstance(ok["ms"], int)

    bad = report[1]
    assert bad["verdict"] == "failed"
    assert bad["failure"] == {"step": 2,
                              "reason": "ObligationFailed: 1 + K * P != 0"}
    assert "numeric" not in bad
    # the steps recorded are those that succeeded before the failure
    assert [s["step"] for s in bad["steps"]] == ["unfold theta"]


def test_check_jobs_keep_input_order(tmp_path, capsys):
    paths = []
    for i in range(3):
        src = OK_SCRIPT.replace("square_expand", f"square_{i}")
        paths.append(write(tmp_path, f"s{i}.deriv", src))
    code, out, _ = run_cli(["check", *paths, "--jobs", "3", "--samples", "5"],
                           capsys)
    assert code == 0
    names = [l.split(":")[0] for l in out.strip().splitlines()]
    assert names == ["square_0", "square_1", "square_2"]


def test_check_theories_in_one_file_can_chain(tmp_path, capsys):
    chained = OK_SCRIPT + """\
theory uses_square
  vars x y : Real
  goal (x + y)^2 - (x^2 + 2 * x * y + y^2) = 0
  proof
    ring
  qed
"""
    p = write(tmp_path, "chain.deriv", chained)
    code, out, _ = run_cli(["check", p, "--samples", "5"], capsys)
    assert code == 0
    assert len(out.strip().splitlines()) == 2


def test_check_missing_file(tmp_path, capsys):
    code, _, err = run_cli(["check", str(tmp_path / "absent.deriv")], capsys)
    assert code == 2
    assert "error:" in err


def test_check_syntax_error(tmp_path, capsys):
    p = write(tmp_path, "broken.deriv", "theory ???\n")
    code, _, err = run_cli(["check", p], capsys)
    assert code == 2
    assert "syntax error:" in err


def test_check_semantic_error(tmp_path, capsys):
    p = write(tmp_path, "dup.deriv", OK_SCRIPT.replace(
        "vars x y : Real", "vars x x y : Real"))
    code, _, err = run_cli(["check", p], capsys)
    assert code == 2
    assert "invalid input:" in err


# -- builtin ----------------------------------------------------------------


def test_builtin_single_name(capsys):
    code, out, _ = run_cli(["builtin", "const_accel", "--samples", "5"], capsys)
    assert code == 0
    assert out.startswith("const_accel: Accepted (Symbolic)")


def test_builtin_divergence_table_shown(capsys):
    code, out, _ = run_cli(["builtin", "brunauer_27", "--samples", "5"], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("brunauer_27: Accepted (NumericCertified)")
    assert lines[1].strip().startswith("j=1:")
    assert len(lines) == 9


def test_builtin_unknown_name(capsys):
    code, _, err = run_cli(["builtin", "nope"], capsys)
    assert code == 2
    assert "no builtin theory named" in err


def test_builtin_requires_target(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["builtin"])
    assert ei.value.code == 2


def test_flag_validation(capsys):
    for argv in (["builtin", "--all", "--samples", "0"],
                 ["builtin", "--all", "--series-cutoff", "0"],
                 ["check", "x.deriv", "--jobs", "0"]):
        with pytest.raises(SystemExit) as ei:
            main(argv)
        assert ei.value.code == 2
