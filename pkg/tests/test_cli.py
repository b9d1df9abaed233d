import csv

import pytest

from app.errors import ConvergenceError, DomainError, NearSingularError
from app.main import EXIT_NUMERICAL, EXIT_USAGE, exit_code_for, main
from app.problem.solver import SolveError

EIGENMODE = """\
[problem]
preset = eigenmode
alpha = 0.5
theta = 0.5
n = 15
M = 16
"""

VIOLATING = """\
[problem]
alpha = 0.5
theta = 0.5
n = 15
M = 16
u0 = sin(pi*x)
f = sin(pi*x) + 1

[checks]
bounded = true
"""


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_solve_preset_writes_solution(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["solve", "--config", _write(tmp_path, EIGENMODE), "--out", str(out)])
    assert code == 0
    assert "max error" in capsys.readouterr().out
    with (out / "eigenmode_solution.csv").open(encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x", "re", "im"]
    assert len(rows) == 1 + 17 * 17
    assert (out / "eigenmode_solve.txt").exists()
    assert (out / "eigenmode_solve_summary.csv").exists()


def test_check_compat_reports_failure(tmp_path, capsys):
    code = main(["check-compat", "--config", _write(tmp_path, VIOLATING), "--out", str(tmp_path / "out")])
    assert code == 1
    assert "[compatibility bounded]" in capsys.readouterr().out


def test_malformed_config_reports_position(tmp_path, capsys):
    path = _write(tmp_path, "[problem]\nalpha = abc\n")
    assert main(["solve", "--config", path]) == EXIT_USAGE
    assert "2:9" in capsys.readouterr().err


def test_bad_expression_reports_position(tmp_path, capsys):
    text = EIGENMODE.replace("preset = eigenmode\n", "") + "f = sin(y)\n"
    assert main(["solve", "--config", _write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_USAGE
    assert "6:9" in capsys.readouterr().err


def test_missing_config(tmp_path, capsys):
    assert main(["solve"]) == EXIT_USAGE
    assert "needs --config" in capsys.readouterr().err
    assert main(["solve", "--config", str(tmp_path / "absent.ini")]) == EXIT_USAGE


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["integrate"])
    assert exc.value.code == 2


def test_exit_codes():
    assert exit_code_for(DomainError("x")) == EXIT_USAGE
    assert exit_code_for(ConvergenceError("x")) == EXIT_NUMERICAL
    assert exit_code_for(NearSingularError("x", z=1j)) == EXIT_NUMERICAL
    assert exit_code_for(SolveError("duhamel", ConvergenceError("x"))) == EXIT_NUMERICAL


@pytest.mark.slow
def test_kernel_test_passes(tmp_path):
    assert main(["kernel-test", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "kernel_kernel-test.txt").exists()
    with (tmp_path / "kernel_kernel-test_summary.csv").open(encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(r["passed"] == "yes" for r in rows)
