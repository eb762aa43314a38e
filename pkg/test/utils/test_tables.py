import pytest

from boxcoxseg.utils import tables
from boxcoxseg.utils.errors import RasterError


def test_format_real():
    """Tests tables.format_real function"""
    assert tables.format_real(0.1) == "0.1"
    assert tables.format_real(2) == "2.0"
    assert tables.format_real(None) == ""
    value = 1 / 3
    assert tables.parse_real(tables.format_real(value)) == value
    assert tables.parse_real("") is None


def test_write_and_read_rows(tmp_path):
    """Tests rows come back in column order and parent directories are created"""
    path = str(tmp_path / "nested" / "rows.csv")
    rows = [{"lambda": "0.5", "kappa": "0.25"}, {"lambda": "1.0", "kappa": ""}]
    tables.write_rows_csv(path, ["lambda", "kappa"], rows)
    assert open(path).read() == "lambda,kappa\n0.5,0.25\n1.0,\n"
    assert tables.read_rows_csv(path) == rows


def test_write_json_is_reproducible(tmp_path):
    """Tests equal payloads give byte identical files whatever the key order"""
    first, second = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    tables.write_json(first, {"b": 1, "a": [1.5, None]})
    tables.write_json(second, {"a": [1.5, None], "b": 1})
    assert open(first, "rb").read() == open(second, "rb").read()


def test_io_errors(tmp_path):
    """Tests unreadable and unwritable paths raise RasterError"""
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    with pytest.raises(RasterError):
        tables.write_rows_csv(str(blocker / "rows.csv"), ["a"], [])
    with pytest.raises(RasterError):
        tables.write_json(str(blocker / "x.json"), {})
    with pytest.raises(RasterError):
        tables.read_rows_csv(str(tmp_path / "missing.csv"))
