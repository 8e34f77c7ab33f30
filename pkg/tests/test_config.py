import pytest

from pwgl import ConfigError
from pwgl.config import (
    load_config,
    parse_bool,
    parse_config_text,
    parse_int_list,
    parse_methods,
    resolve_config,
)


def test_parse_plain_keys():
    raw = parse_config_text("n = 100\nalpha=2.5\n")
    assert raw == {"n": "100", "alpha": "2.5"}


def test_parse_sections_prefix_keys():
    text = """
    # master settings
    seed = 4

    [solve]
    alpha = 2
    zeta = scaled:50
    """
    raw = parse_config_text(text)
    assert raw == {"seed": "4", "solve.alpha": "2",
                   "solve.zeta": "scaled:50"}


def test_parse_rejects_malformed_lines():
    with pytest.raises(ConfigError, match="expected key = value"):
        parse_config_text("just words\n")
    with pytest.raises(ConfigError, match="malformed section"):
        parse_config_text("[unclosed\n")
    with pytest.raises(ConfigError, match="empty key"):
        parse_config_text("= 3\n")
    with pytest.raises(ConfigError, match="empty section"):
        parse_config_text("[ ]\n")


def test_parse_rejects_duplicates():
    with pytest.raises(ConfigError, match="duplicate key 'a'"):
        parse_config_text("a = 1\na = 2\n")
    # the same bare name under different sections is two distinct keys
    raw = parse_config_text("[x]\na = 1\n[y]\na = 2\n")
    assert raw == {"x.a": "1", "y.a": "2"}


def test_parse_reports_line_numbers():
    with pytest.raises(ConfigError, match="run.cfg:3"):
        parse_config_text("a = 1\n\nbroken\n", source="run.cfg")


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config file"):
        load_config(tmp_path / "absent.cfg")


def test_resolve_converts_known_keys():
    raw = {"n": "100", "solve.alpha": "2.5", "common.seed": "7"}
    out = resolve_config(raw, "solve", {"n": int, "alpha": float,
                                        "seed": int})
    assert out == {"n": 100, "alpha": 2.5, "seed": 7}


def test_resolve_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown config key"):
        resolve_config({"typo": "1"}, "solve", {"n": int})
    # a key in another command's section is unknown here
    with pytest.raises(ConfigError, match="graph.n"):
        resolve_config({"graph.n": "1"}, "solve", {"n": int})
    # common section only holds the shared keys
    with pytest.raises(ConfigError, match="common.alpha"):
        resolve_config({"common.alpha": "1"}, "solve", {"alpha": float})


def test_resolve_names_bad_values():
    with pytest.raises(ConfigError, match="config key 'n'"):
        resolve_config({"n": "ten"}, "solve", {"n": int})


def test_parse_bool_values():
    assert parse_bool("true") and parse_bool("Yes") and parse_bool("1")
    assert not parse_bool("false") and not parse_bool("OFF")
    with pytest.raises(ConfigError, match="boolean"):
        parse_bool("maybe")


def test_parse_int_list():
    assert parse_int_list("1000,4000") == (1000, 4000)
    assert parse_int_list("5") == (5,)
    with pytest.raises(ConfigError, match="comma-separated integers"):
        parse_int_list("1,two")


def test_parse_methods():
    assert parse_methods("pw,standard") == ("pw", "standard")
    with pytest.raises(ConfigError, match="methods"):
        parse_methods("pw,unknown")
    with pytest.raises(ConfigError, match="methods"):
        parse_methods("")
