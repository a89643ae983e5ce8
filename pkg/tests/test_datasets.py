import numpy as np
import pytest

from dislog.datasets import (
    DIGESTS,
    EMBEDDED,
    digest,
    embedded_text,
    ingest,
    life_table_to_sample,
    read_csv_text,
)
from dislog.errors import DataError
from dislog.samples import CensoredSample, UncensoredSample


@pytest.mark.parametrize("key", sorted(EMBEDDED))
def test_embedded_digest(key):
    assert digest(embedded_text(key)) == DIGESTS[key]


def test_unknown_key():
    with pytest.raises(DataError, match="unknown embedded dataset"):
        embedded_text("nope")


def test_computer_breaks(computer_breaks):
    s = computer_breaks
    assert isinstance(s, UncensoredSample)
    assert s.n == 128
    assert s.counts[s.values == 2][0] == 23
    assert s.values.max() == 22


def test_pain_relief(pain_relief):
    s = pain_relief
    assert isinstance(s, CensoredSample)
    assert s.n == 100
    assert (s.x[0], s.d[0], s.q[0]) == (0, 64, 0)
    assert s.at_risk()[0] == 100
    # 20 at risk at T=2, 5 events, 14 at risk at T=3: one censored
    assert s.q[s.x == 2][0] == 1
    assert s.q[s.x == 11][0] == 1
    assert s.q.sum() == 2 and s.d.sum() == 98


def test_pain_relief_flags():
    rows = embedded_text("pain-relief").splitlines()
    header = rows[0].split(",")
    flagged = [int(r.split(",")[1]) for r in rows[1:] if r.split(",")[header.index("censoring_indicator")] == "1"]
    assert flagged == [2, 11]


def test_frequency_roundtrip():
    s = read_csv_text("x,frequency\n3,2\n0,5\n\n1,1\n")
    np.testing.assert_array_equal(s.values, [0, 1, 3])
    np.testing.assert_array_equal(s.counts, [5, 1, 2])


def test_censored_layout():
    s = read_csv_text("x,events,censored\n0,3,0\n2,0,1\n5,1,1\n")
    assert isinstance(s, CensoredSample)
    np.testing.assert_array_equal(s.at_risk(), [6, 3, 2])


@pytest.mark.parametrize(
    "text, line, match",
    [
        ("x,frequency\n0,3\n1\n", 3, "expected 2 fields"),
        ("x,frequency\n0,3\n1,abc\n", 3, "not a number"),
        ("x,frequency\n0,3\n1,2.5\n", 3, "integer"),
        ("x,frequency\n0,3\n-1,2\n", 3, "nonnegative"),
        ("x,frequency\n0,3\n1,0\n", 3, "positive"),
        ("x,frequency\n0,3\n1,2\n0,4\n", 4, "duplicate x=0"),
        ("x,events,censored\n0,3,0\n0,1,1\n", 3, "strictly increasing"),
        ("x,events,censored\n0,3,0\n1,0,0\n", 3, "neither"),
        ("x,events,censored\n0,-3,0\n", 2, "nonnegative"),
        ("a,b\n0,1\n", 1, "unrecognized header"),
    ],
)
def test_malformed_rows(text, line, match):
    with pytest.raises(DataError, match=match) as info:
        read_csv_text(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_empty_file():
    with pytest.raises(DataError, match="empty"):
        read_csv_text("")
    with pytest.raises(DataError, match="no data rows"):
        read_csv_text("x,frequency\n")


def test_exact_probabilities_rejected():
    # a pmf table re-read as frequencies must fail: frequencies are integers
    with pytest.raises(DataError, match="integer"):
        read_csv_text("x,frequency\n0,0.2857131\n1,0.2142869\n")


def test_life_table_validation():
    with pytest.raises(DataError, match="unexplained"):
        life_table_to_sample([(2, 0, 10, 3, 0), (3, 1, 5, 5, 0)])
    with pytest.raises(DataError, match="less than the events"):
        life_table_to_sample([(2, 0, 10, 3, 0), (3, 1, 9, 5, 0)])
    with pytest.raises(DataError, match="increasing"):
        life_table_to_sample([(2, 1, 10, 3, 0), (3, 1, 7, 7, 0)])
    s = life_table_to_sample([(2, 0, 10, 3, 1), (3, 1, 5, 5, 0)])
    np.testing.assert_array_equal(s.q, [2, 0])


def test_ingest_path(tmp_path, computer_breaks):
    path = tmp_path / "breaks.csv"
    path.write_text(embedded_text("computer-breaks"), encoding="utf-8")
    assert ingest(path) == computer_breaks
    assert ingest(str(path)) == computer_breaks


def test_ingest_missing(tmp_path):
    with pytest.raises(DataError, match="no such"):
        ingest(tmp_path / "absent.csv")


def test_ingest_not_utf8(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_bytes(b"x,frequency\n0,\xff\n")
    with pytest.raises(DataError, match="UTF-8"):
        ingest(path)
