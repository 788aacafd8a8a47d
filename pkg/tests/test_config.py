import pytest

from pelliptic import config


GOOD = """[field]
kind = rotation
phi = 0.5
d = 3

[pcalc]
p_grid = 2, 3, 4
"""


def test_parse_and_defaults():
    cfg = config.parse_config(GOOD)
    config.validate(cfg, "pcalc")
    assert cfg.get("pcalc", "p_grid") == [2.0, 3.0, 4.0]
    assert cfg.get("pcalc", "tol") == 1e-4
    assert cfg.seed == 0
    f = config.build_field(cfg)
    assert f.d == 3


def test_unknown_key_reports_line():
    text = GOOD.replace("phi = 0.5", "phi = 0.5\nphii = 1")
    with pytest.raises(config.ConfigError) as err:
        config.parse_config(text)
    assert err.value.line == 4
    assert "phii" in str(err.value)


def test_bad_value_reports_line():
    with pytest.raises(config.ConfigError) as err:
        config.parse_config(GOOD.replace("p_grid = 2, 3, 4", "p_grid = 2, x"))
    assert err.value.line == 7


def test_missing_kind():
    cfg = config.parse_config("[field]\nphi = 0.5\n")
    with pytest.raises(config.ConfigError, match="missing field kind"):
        config.validate(cfg, "pcalc")


def test_missing_section():
    cfg = config.parse_config("[field]\nkind = identity\n")
    with pytest.raises(config.ConfigError, match=r"\[domain\]"):
        config.validate(cfg, "scan")


def test_kind_requirements():
    cfg = config.parse_config("[field]\nkind = rotation\n")
    with pytest.raises(config.ConfigError, match="requires 'phi'") as err:
        config.validate(cfg, "pcalc")
    assert err.value.line == 1


def test_non_elliptic_constant():
    cfg = config.parse_config("[field]\nkind = constant\nre = 1, 0, 0, -1\n")
    with pytest.raises(config.ConfigError, match="not elliptic"):
        config.validate(cfg, "pcalc")


def test_lshape_even_sizes():
    text = "[domain]\nshape = lshape\n[grid]\nns = 8, 17\n[meyers]\ncontrasts = 1, 10\n"
    with pytest.raises(config.ConfigError, match="even") as err:
        config.validate(config.parse_config(text), "meyers")
    assert err.value.line == 4


def test_empty_lambda_set():
    text = "[field]\nkind = identity\n[domain]\nd = 2\n[grid]\nns = 8\n[scan]\nn_lambda = 0\n"
    with pytest.raises(config.ConfigError, match="n_lambda"):
        config.validate(config.parse_config(text), "scan")


def test_syntax_error():
    with pytest.raises(config.ConfigError):
        config.parse_config("kind = identity\n")


def test_dimension_mismatch():
    text = "[field]\nkind = identity\nd = 3\n[domain]\nd = 2\n[grid]\nns = 8\n[kernel]\n"
    with pytest.raises(config.ConfigError, match="differs"):
        config.validate(config.parse_config(text), "kernel")


def test_overrides(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(GOOD)
    cfg = config.load_config(path, "pcalc", seed=7, threads=2)
    assert cfg.seed == 7 and cfg.threads == 2
    with pytest.raises(config.ConfigError, match="cannot read"):
        config.load_config(tmp_path / "missing.ini")
