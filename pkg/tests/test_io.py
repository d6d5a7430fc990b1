import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mboot import DataFormatError
from mboot.io import (
    dumps_records,
    format_for,
    format_value,
    loads_records,
    parse_dataset,
    read_dataset,
    read_records,
    record_fields,
    write_dataset,
    write_records,
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


class TestParseDataset:
    def test_headerless(self):
        data, header = parse_dataset("1,2\n3,4.5\n")
        assert header is None
        assert data.values.tolist() == [[1.0, 2.0], [3.0, 4.5]]

    def test_header_and_blank_lines(self):
        data, header = parse_dataset("x,y\n\n1,2\n  \n3,4\n")
        assert header == ["x", "y"]
        assert data.n == 2

    def test_column_selection(self):
        data, header = parse_dataset("a,b,c\n1,2,3\n4,5,6\n", columns=[2, 0])
        assert header == ["c", "a"]
        assert data.values.tolist() == [[3.0, 1.0], [6.0, 4.0]]

    def test_column_out_of_range(self):
        with pytest.raises(DataFormatError):
            parse_dataset("1,2\n", columns=[2])

    @pytest.mark.parametrize(
        "text,line",
        [
            ("x\n1\n2,3\n", 3),
            ("1\nabc\n", 2),
            ("1\n2\n\ninf\n", 4),
            ("x,y\n", 1),
        ],
    )
    def test_errors_carry_line_numbers(self, text, line):
        with pytest.raises(DataFormatError) as info:
            parse_dataset(text)
        assert info.value.line == line
        assert str(info.value).startswith(f"line {line}:")

    def test_error_is_a_value_error(self):
        with pytest.raises(ValueError):
            parse_dataset("")


class TestDatasetFiles:
    def test_round_trip_with_header(self, tmp_path):
        values = np.random.default_rng(1).normal(size=(40, 2))
        path = tmp_path / "d.csv"
        write_dataset(path, values, header=["u", "v"])
        data, header = read_dataset(path)
        assert header == ["u", "v"]
        assert np.array_equal(data.values, values)
        assert b"\r" not in path.read_bytes()

    @given(st.lists(finite, min_size=1, max_size=30))
    def test_round_trip_exact(self, xs):
        import os
        import tempfile

        fd, path = tempfile.mkstemp(suffix=".csv")
        os.close(fd)
        try:
            write_dataset(path, np.array(xs))
            data, header = read_dataset(path)
        finally:
            os.unlink(path)
        assert header is None
        assert data.values[:, 0].tolist() == [float(x) for x in xs]


class TestRecords:
    def test_format_value(self):
        assert format_value(True) == "true"
        assert format_value(None) == ""
        assert format_value(0.1) == "0.1"
        assert format_value(np.int64(7)) == "7"
        assert format_value(["a", "b"]) == "a | b"

    def test_field_order(self):
        recs = [{"seed": 1, "upper": 2.0, "method": "basic"}, {"lower": 1.0, "extra": "x"}]
        assert record_fields(recs) == ["method", "lower", "upper", "seed", "extra"]

    def test_format_for(self):
        assert format_for("a.jsonl") == format_for("a.json") == "jsonl"
        assert format_for("a.csv") == format_for("a") == "csv"

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            dumps_records([{"a": 1}], "xml")

    @pytest.mark.parametrize("fmt", ["csv", "jsonl"])
    def test_round_trip(self, tmp_path, fmt):
        recs = [
            {"method": "basic", "n": 100, "m": 10, "level": 0.95, "lower": 0.1 + 0.2, "upper": 1 / 3,
             "beta_hat": None, "warnings": ["w one", "w, two"], "replace": False},
            {"method": "norm", "n": 100, "m": 10, "level": 0.95, "lower": -1e-300, "upper": 5e300,
             "beta_hat": 0.4871234567890123, "warnings": [], "replace": True},
        ]
        path = tmp_path / f"r.{fmt}"
        write_records(recs, path)
        raw = path.read_bytes()
        assert b"\r\n" not in raw
        raw.decode("utf-8")
        assert read_records(path) == recs

    @given(st.lists(finite, min_size=1, max_size=10))
    def test_csv_floats_exact(self, xs):
        recs = [{"lower": float(x)} for x in xs]
        back = loads_records(dumps_records(recs, "csv"), "csv")
        assert [r["lower"] for r in back] == [float(x) for x in xs]

    def test_empty_text(self):
        assert loads_records("", "csv") == []
