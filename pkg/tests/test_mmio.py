import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lazyspca.errors import ParseError
from lazyspca.matrix import SparseMatrix
from lazyspca.mmio import (
    iter_mm_row_blocks,
    read_array_with_comments,
    read_csv_dense,
    read_header_shape,
    read_input,
    read_matrix_market,
    write_array,
    write_csv,
    write_matrix_market,
)


def _write(tmp_path, text, name="x.mm"):
    path = tmp_path / name
    path.write_text(text)
    return path


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 15), st.integers(1, 15), st.floats(0, 1), st.integers(0, 2**31))
def test_coordinate_round_trip_is_exact(tmp_path_factory, m, n, fill, seed):
    rng = np.random.default_rng(seed)
    dense = rng.standard_normal((m, n)) * (rng.random((m, n)) < fill) * 10.0 ** rng.integers(-200, 200, (m, n))
    path = tmp_path_factory.mktemp("mm") / "x.mm"
    write_matrix_market(path, SparseMatrix.from_dense(dense))
    np.testing.assert_array_equal(read_matrix_market(path).to_dense(), dense)


def test_array_round_trip_and_comments(tmp_path):
    A = np.random.default_rng(0).standard_normal((4, 3))
    path = tmp_path / "a.mm"
    write_array(path, A, comments=["hello world"])
    back, comments = read_array_with_comments(path)
    np.testing.assert_array_equal(back, A)
    assert comments == ["hello world"]
    assert isinstance(read_matrix_market(path), np.ndarray)


def test_symmetric_and_pattern(tmp_path):
    sym = _write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 2.0\n3 1 -1.5\n2 2 4\n")
    np.testing.assert_array_equal(read_matrix_market(sym).to_dense(), [[2, 0, -1.5], [0, 4, 0], [-1.5, 0, 0]])
    pat = _write(tmp_path, "%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n2 1\n", "p.mm")
    np.testing.assert_array_equal(read_matrix_market(pat).to_dense(), [[0, 1], [1, 0]])


def test_duplicates_are_summed(tmp_path):
    path = _write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.5\n1 1 2.5\n2 2 1\n")
    np.testing.assert_array_equal(read_matrix_market(path).to_dense(), [[4, 0], [0, 1]])


@pytest.mark.parametrize(
    "text,line",
    [
        ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n\n2 x 3\n", 5),
        ("%%MatrixMarket matrix coordinate real general\n% c\n2 2 2\n1 1 1.0\n3 1 1.0\n", 5),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1\n", 3),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n2 2 2\n", 4),
        ("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n", 4),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 nan\n", 3),
        ("%%MatrixMarket matrix coordinate complex general\n2 2 1\n1 1 1\n", 1),
        ("hello\n", 1),
        ("%%MatrixMarket matrix coordinate real general\n2 two 1\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(tmp_path, text, line):
    path = _write(tmp_path, text)
    with pytest.raises(ParseError) as info:
        read_matrix_market(path)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_csv(tmp_path):
    A = np.random.default_rng(1).standard_normal((5, 3))
    path = tmp_path / "a.csv"
    write_csv(path, A)
    np.testing.assert_array_equal(read_csv_dense(path), A)
    np.testing.assert_array_equal(read_input(path, "csv").to_dense(), A)
    assert read_header_shape(path, "csv") == (5, 3)
    bad = _write(tmp_path, "1,2\n3,4,5\n", "b.csv")
    with pytest.raises(ParseError) as info:
        read_csv_dense(bad)
    assert info.value.line == 2
    bad = _write(tmp_path, "1,2\n\n3,q\n", "c.csv")
    with pytest.raises(ParseError) as info:
        read_csv_dense(bad)
    assert info.value.line == 3


@pytest.mark.parametrize("block_rows", [1, 3, 7, 100])
def test_row_blocks_stream_the_file(tmp_path, block_rows):
    rng = np.random.default_rng(2)
    dense = rng.standard_normal((17, 6)) * (rng.random((17, 6)) < 0.4)
    path = tmp_path / "x.mm"
    write_matrix_market(path, SparseMatrix.from_dense(dense))
    blocks = list(iter_mm_row_blocks(path, block_rows))
    assert [b.slice_index for b in blocks] == list(range(len(blocks)))
    stacked = np.vstack([b.block.to_dense() for b in blocks])
    np.testing.assert_array_equal(stacked, dense)
    assert read_header_shape(path) == (17, 6)
