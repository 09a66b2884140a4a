import numpy as np
import pytest

from causalqa.tabular import CsvFormatError, from_columns, read_csv_text, write_csv_text


def test_round_trip_floats_and_ints():
    data = from_columns([("a", np.array([0.1, 2.5, -3.75])),
                         ("b", np.array([1, 0, 1]))])
    text = write_csv_text(data)
    back = read_csv_text(text)
    assert back.columns == ("a", "b")
    assert np.allclose(back.col("a"), data.col("a"))
    assert write_csv_text(back) == text


def test_float_cells_use_shortest_round_trip_repr():
    data = from_columns([("x", np.array([0.1]))])
    assert write_csv_text(data) == "x\n0.1\n"


def test_string_column_is_preserved():
    table = read_csv_text("arm,y\nyes,1.0\nno,2.0\n")
    assert list(table.col("arm")) == ["yes", "no"]
    assert table.is_numeric("y") and not table.is_numeric("arm")


def test_mixed_column_reports_row_index():
    with pytest.raises(CsvFormatError) as err:
        read_csv_text("a,b\n1.0,2.0\noops,3.0\n")
    assert err.value.row == 2
    assert err.value.column == "a"


def test_ragged_row_rejected():
    with pytest.raises(CsvFormatError):
        read_csv_text("a,b\n1.0\n")
