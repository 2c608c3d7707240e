import numpy as np
import pytest

from elemsparse.mmio import (
    EntryStream,
    MatrixMarketError,
    MatrixMarketStream,
    read_matrix,
    stream_dense,
    write_array,
    write_coordinate,
    write_dense_as_coordinate,
)


def _write(path, text):
    path.write_text(text)
    return path


def test_array_roundtrip_is_exact(tmp_path):
    a = np.random.default_rng(0).standard_normal((5, 5))
    a[1, 3] = 0.0
    write_array(tmp_path / "a.mtx", a)
    assert np.array_equal(read_matrix(tmp_path / "a.mtx"), a)


def test_coordinate_roundtrip_is_exact(tmp_path):
    a = np.zeros((4, 4))
    a[0, 3] = 1 / 3
    a[2, 1] = -7e-12
    write_dense_as_coordinate(tmp_path / "c.mtx", a)
    text = (tmp_path / "c.mtx").read_text().splitlines()
    assert text[0] == "%%MatrixMarket matrix coordinate real general"
    assert text[1] == "4 4 2"
    assert text[2].startswith("1 4 ")
    assert np.array_equal(read_matrix(tmp_path / "c.mtx"), a)


def test_array_is_column_major(tmp_path):
    p = _write(tmp_path / "a.mtx", "%%MatrixMarket matrix array real general\n% c\n2 2\n1\n2\n3\n4\n")
    assert np.array_equal(read_matrix(p), [[1, 3], [2, 4]])


def test_coordinate_repeated_entries_are_summed(tmp_path):
    p = _write(tmp_path / "c.mtx",
               "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.5\n1 1 2\n2 1 -1\n")
    assert np.array_equal(read_matrix(p), [[3.5, 0], [-1, 0]])


@pytest.mark.parametrize(
    "text",
    [
        "",
        "2 2 1\n1 1 1\n",
        "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
        "%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 1\n",
        "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n",
        "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n",
        "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 nan\n",
    ],
)
def test_malformed_files_rejected(tmp_path, text):
    p = _write(tmp_path / "bad.mtx", text)
    with pytest.raises(MatrixMarketError):
        read_matrix(p)


def test_stream_counts_and_is_one_shot(tmp_path):
    write_coordinate(tmp_path / "c.mtx", 3, [0, 2, 1], [1, 2, 0], [1.0, -2.0, 3.0])
    st = MatrixMarketStream(tmp_path / "c.mtx")
    assert st.n == 3 and st.declared_entries == 3
    items = list(st)
    assert items == [(0, 1, 1.0), (2, 2, -2.0), (1, 0, 3.0)]
    assert st.reads == 3
    with pytest.raises(RuntimeError):
        list(st)


def test_stream_rejects_duplicates_and_range():
    with pytest.raises(ValueError, match="duplicate"):
        list(EntryStream(2, [(0, 0, 1.0), (0, 0, 2.0)]))
    with pytest.raises(ValueError, match="range"):
        list(EntryStream(2, [(0, 2, 1.0)]))
    with pytest.raises(ValueError, match="non-finite"):
        list(EntryStream(2, [(0, 1, float("inf"))]))
    assert len(list(EntryStream(2, [(0, 0, 1.0), (0, 0, 2.0)], check_duplicates=False))) == 2


def test_stream_dense_order():
    a = np.arange(4.0).reshape(2, 2)
    assert list(stream_dense(a)) == [(0, 0, 0.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 3.0)]
    assert [e[:2] for e in stream_dense(a, order=[3, 0, 2, 1])] == [(1, 1), (0, 0), (1, 0), (0, 1)]
