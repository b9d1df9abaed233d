import numpy as np
import pytest

from app.cli.config import parse_config, read_ini
from app.errors import ConfigError, ExprError
from app.settings import Settings

BASIC = """\
# heat-like run
[problem]
alpha = 0.5
theta = 0.5
n = 15
M = 16
f = sin(pi*x) * (1 + t)
u0 = 0

[contour]
nodes_per_ray = 24

[checks]
holder = yes

[output]
directory = results
formats = csv, report
"""


def test_read_ini_positions():
    sections = read_ini(BASIC)
    assert sorted(sections) == ["checks", "contour", "output", "problem"]
    alpha = sections["problem"].values["alpha"]
    assert (alpha.text, alpha.line, alpha.col) == ("0.5", 3, 9)
    f = sections["problem"].values["f"]
    assert f.text == "sin(pi*x) * (1 + t)"
    assert f.col == 5


def test_parse_config_blocks():
    cfg = parse_config(BASIC)
    assert cfg.problem.alpha == 0.5
    assert cfg.problem.n == 15
    assert cfg.contour.nodes_per_ray == 24
    assert cfg.checks.bounded is True
    assert cfg.checks.holder is True
    assert cfg.output.formats == ("csv", "report")


def test_problem_spec_from_expressions():
    spec = parse_config(BASIC).problem_spec()
    assert spec.alpha == 0.5
    x = np.array([0.5])
    t = np.array([1.0])
    assert spec.f(t, x)[0] == pytest.approx(2.0)
    assert spec.gL(np.zeros(3)).shape == (3,)


def test_settings_take_contour_block():
    s = parse_config(BASIC).settings(Settings())
    assert s.nodes_per_ray == 24
    assert s.arc_nodes == Settings().arc_nodes


def test_refined_doubles_grid():
    cfg = parse_config(BASIC).refined(2)
    assert (cfg.problem.n, cfg.problem.M) == (63, 64)


def test_bad_value_reports_position():
    with pytest.raises(ConfigError) as err:
        parse_config(BASIC.replace("alpha = 0.5", "alpha = half"))
    assert (err.value.line, err.value.col) == (3, 9)
    assert "alpha" in str(err.value)


def test_unknown_key_reports_position():
    with pytest.raises(ConfigError) as err:
        parse_config(BASIC.replace("u0 = 0", "u2 = 0"))
    assert err.value.line == 8


@pytest.mark.parametrize(
    "text, line",
    [
        ("alpha = 1\n", 1),
        ("[problem]\nalpha\n", 2),
        ("[problem]\n[problem]\n", 2),
        ("[solver]\n", 1),
        ("[problem\n", 1),
        ("[problem]\nalpha = 1\nalpha = 2\n", 3),
        ("[problem]\nalpha =\n", 2),
    ],
)
def test_malformed_ini(text: str, line: int):
    with pytest.raises(ConfigError) as err:
        read_ini(text)
    assert err.value.line == line


def test_missing_problem_section():
    with pytest.raises(ConfigError):
        parse_config("[output]\ndirectory = x\n")


def test_expression_error_points_into_file():
    with pytest.raises(ExprError) as err:
        parse_config(BASIC.replace("u0 = 0", "u0 = sin(q)")).problem_spec()
    assert (err.value.line, err.value.col) == (8, 10)


def test_boundary_expression_cannot_use_x():
    with pytest.raises(ExprError):
        parse_config(BASIC.replace("u0 = 0", "gL = x")).problem_spec()


def test_invariants_revalidated():
    with pytest.raises(ConfigError) as err:
        parse_config(BASIC.replace("alpha = 0.5", "alpha = 1.5")).problem_spec()
    assert "u1" in str(err.value)
    with pytest.raises(ConfigError):
        parse_config(BASIC.replace("theta = 0.5", "theta = 1")).problem_spec()


def test_preset_config():
    text = "[problem]\npreset = final_remark\nalpha = 0.5\ntheta = 0.5\nn = 15\nM = 16\n"
    cfg = parse_config(text)
    spec = cfg.problem_spec()
    assert spec.label == "final_remark"
    assert cfg.preset().exact is not None


def test_preset_rejects_data_keys():
    text = "[problem]\npreset = zero\nalpha = 0.5\ntheta = 0.5\nn = 15\nM = 16\nf = 1\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text).problem_spec()
    assert err.value.line == 7


def test_unknown_preset():
    text = "[problem]\npreset = nope\nalpha = 0.5\ntheta = 0.5\nn = 15\nM = 16\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text).problem_spec()
    assert err.value.line == 2


def test_unknown_output_format():
    with pytest.raises(ConfigError):
        parse_config(BASIC.replace("csv, report", "csv, xml"))


def test_cutoff_widths_fall_back_to_settings():
    config = parse_config(BASIC)
    spec = config.problem_spec(Settings(cutoff_delta1=0.05, cutoff_delta2=0.45))
    assert (spec.cutoff.delta1, spec.cutoff.delta2) == (0.05, 0.45)
    custom = parse_config(BASIC.replace("u0 = 0\n", "u0 = 0\ndelta1 = 0.2\n"))
    spec = custom.problem_spec(Settings(cutoff_delta1=0.05, cutoff_delta2=0.45))
    assert (spec.cutoff.delta1, spec.cutoff.delta2) == (0.2, 0.45)
