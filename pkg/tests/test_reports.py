import math

from pelliptic import reports


def test_format_value():
    assert reports.format_value(0.1) == "0.10000000000000001"
    assert reports.format_value(True) == "true"
    assert reports.format_value(3) == "3"
    assert reports.format_value(math.nan) == "nan"
    assert reports.format_value(-math.inf) == "-inf"


def test_write_csv_complex_and_header(tmp_path):
    path = tmp_path / "x.csv"
    reports.write_csv(path, ["a", "z"], [(1, 1 + 2j), (2, 3.5)], "[run]\nseed = 1\n\n", ["note"])
    lines = path.read_text().splitlines()
    assert lines[:4] == ["# [run]", "# seed = 1", "#", "# note"]
    assert lines[4] == "a,z_re,z_im"
    assert lines[5] == "1,1,2"
    cols, rows = reports.read_csv(path)
    assert rows[1] == ["2", "3.5", "0"]
