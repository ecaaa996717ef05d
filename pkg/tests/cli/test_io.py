import io
import os

import numpy as np
import pytest

from snmix.errors import InputError
from snmix.io import format_values, read_column, write_values

DATA_PATH = os.path.join(os.path.dirname(os.path.realpath(__file__)), "../data/")


def test_read_faithful():
    x = read_column(os.path.join(DATA_PATH, "faithful.csv"))
    assert x.shape == (272,)
    assert x[0] == 3.6
    assert x.min() > 1.5 and x.max() < 5.2


@pytest.mark.parametrize(
    "text, expected",
    [
        ("eruptions\n3.6\n1.8\n", [3.6, 1.8]),
        ("1\n2\n3\n", [1.0, 2.0, 3.0]),
        ("x\n1\n\n2\n\n", [1.0, 2.0]),
        ("x\n -1.5 \n2e3\n", [-1.5, 2000.0]),
        ("id,value\na,1.5\nb,2.5\n", [1.5, 2.5]),
    ],
)
def test_read_column(text, expected):
    np.testing.assert_array_equal(read_column(io.StringIO(text)), expected)


def test_column_selection():
    text = "a,b\n1,10\n2,20\n"
    np.testing.assert_array_equal(read_column(io.StringIO(text), "b"), [10.0, 20.0])
    np.testing.assert_array_equal(read_column(io.StringIO(text), "1"), [10.0, 20.0])
    np.testing.assert_array_equal(read_column(io.StringIO(text), 0), [1.0, 2.0])
    np.testing.assert_array_equal(read_column(io.StringIO("1,10\n2,20\n"), "1"), [10.0, 20.0])
    with pytest.raises(InputError):
        read_column(io.StringIO(text), "c")


def test_bad_line_is_reported():
    with pytest.raises(InputError) as info:
        read_column(io.StringIO("x\n1\n2\nfoo\n5\n"))
    assert info.value.line == 4
    assert str(info.value).startswith("line 4:")


@pytest.mark.parametrize("text", ["", "\n\n", "x\n"])
def test_no_data(text):
    with pytest.raises(InputError):
        read_column(io.StringIO(text))


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        read_column(str(tmp_path / "missing.csv"))


def test_write_values(tmp_path):
    values = [0.1, 1.0 / 3.0, -2.5]
    text = format_values(values)
    assert text.count("\n") == 3
    assert [float(v) for v in text.splitlines()] == values
    assert write_values(values) == text
    path = tmp_path / "draws.csv"
    assert write_values(values, str(path)) is None
    np.testing.assert_array_equal(read_column(str(path)), values)
