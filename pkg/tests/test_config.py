import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfcnks.config import ConfigError, RunConfig, format_config, load_config, parse_config

BASE = "ndim = 2\nlengths = 32, 32\ncounts = 64, 64\nscenario = random_quench\n"


def test_defaults_from_scenario():
    cfg = parse_config(BASE)
    assert cfg.gamma == 0.025 and cfg.dt_max == 20.0 and cfg.eta == 4e5
    assert cfg.precond == "lras" and cfg.overlap == 1 and cfg.reuse
    cfg = parse_config(BASE.replace("random_quench", "crack2d"))
    assert cfg.gamma == 1.0


def test_expressions_and_comments():
    cfg = parse_config(BASE.replace("32, 32", "8*pi, 8 * pi  # domain") + "gamma = 1/4\n")
    assert cfg.lengths[0] == pytest.approx(25.132741228718345) and cfg.gamma == 0.25


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config(BASE + "gama = 0.1\n")
    assert info.value.line == 5 and "gama" in str(info.value)


def test_duplicate_key():
    with pytest.raises(ConfigError) as info:
        parse_config(BASE + "ndim = 2\n")
    assert info.value.line == 5


@pytest.mark.parametrize("extra,line", [("gamma = -1\n", 5), ("gamma = 0\n", 5), ("overlap = 3\n", 5),
                                        ("dt_min = 2\ndt_max = 1\n", 6), ("np = 0\n", 5),
                                        ("precond = mult\n", 5), ("reuse = maybe\n", 5),
                                        ("eps_r = 1e\n", 5)])
def test_invalid_values(extra, line):
    with pytest.raises(ConfigError) as info:
        parse_config(BASE + extra)
    assert info.value.line == line


def test_structure_errors():
    with pytest.raises(ConfigError):
        parse_config("ndim = 2\n")
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("64, 64", "64"))
    with pytest.raises(ConfigError):
        parse_config(BASE.replace("64, 64", "4, 4"))
    with pytest.raises(ConfigError):
        parse_config(BASE + "just words\n")
    with pytest.raises(ConfigError):
        RunConfig(2, (1.0, 1.0), (8, 8), gamma=-0.5)


@given(gamma=st.floats(1e-4, 10.0), seed=st.integers(0, 10 ** 6), reuse=st.booleans(),
       dt=st.floats(1e-3, 1.0))
def test_round_trip(gamma, seed, reuse, dt):
    cfg = parse_config(BASE + f"gamma = {gamma!r}\nseed = {seed}\nreuse = {reuse}\ndt_min = {dt!r}\n"
                       f"dt_max = {dt!r}\n")
    assert parse_config(format_config(cfg)) == cfg


def test_load_from_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(BASE)
    assert load_config(p) == parse_config(BASE)
