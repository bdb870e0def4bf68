import numpy as np
import pytest

from civr.datasets import ReturnsDataset, ingest_returns_csv, write_returns_csv


SAMPLE = """\
  Average Value Weighted Returns -- Daily
  Some preamble line that is not data
,Agric,Food,Soda
19260701,  0.10, -0.25, 1.50
19260702,-99.99,  0.30, 0.40
19260706,  0.55,  0.12,-0.80
"""


def write(tmp_path, text, name="sample.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestIngest:
    def test_sentinel_rows_dropped(self, tmp_path):
        ds = ingest_returns_csv(write(tmp_path, SAMPLE), take_last=10, scale="raw")
        assert ds.n_periods == 2
        assert ds.n_assets == 3
        assert list(ds.dates) == [19260701, 19260706]

    def test_percent_scaling(self, tmp_path):
        ds = ingest_returns_csv(write(tmp_path, "19990101,1.5\n"), scale="percent")
        assert ds.matrix[0, 0] == pytest.approx(0.015)

    def test_raw_keeps_values(self, tmp_path):
        ds = ingest_returns_csv(write(tmp_path, "19990101,1.5\n"), scale="raw")
        assert ds.matrix[0, 0] == 1.5

    def test_take_last_keeps_most_recent(self, tmp_path):
        text = "\n".join(f"2000010{k},{k}.0" for k in range(1, 6)) + "\n"
        ds = ingest_returns_csv(write(tmp_path, text), take_last=2, scale="raw")
        assert ds.n_periods == 2
        assert list(ds.matrix[:, 0]) == [4.0, 5.0]

    def test_annual_summary_blocks_skipped(self, tmp_path):
        text = "20000101,1.0,2.0\n20000102,3.0,4.0\n\nAnnual:\n2000,9.0,9.0\n"
        ds = ingest_returns_csv(write(tmp_path, text), scale="raw")
        assert ds.n_periods == 2

    def test_malformed_file_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            ingest_returns_csv(write(tmp_path, "nothing,to,see\nhere\n"))

    def test_all_rows_sentinel_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            ingest_returns_csv(write(tmp_path, "20000101,-99.99\n20000102,-999\n"))

    def test_bad_scale_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            ingest_returns_csv(write(tmp_path, "20000101,1.0\n"), scale="bps")

    def test_ragged_rows_skipped(self, tmp_path):
        text = "20000101,1.0,2.0\n20000102,3.0\n20000103,4.0,5.0\n"
        ds = ingest_returns_csv(write(tmp_path, text), scale="raw")
        assert ds.n_periods == 2


class TestRoundTrip:
    def test_emit_and_reingest_identical(self, tmp_path):
        rng = np.random.default_rng(3)
        matrix = rng.normal(size=(7, 4))
        dates = np.arange(20100101, 20100108, dtype=np.int64)
        ds = ReturnsDataset(dates=dates, matrix=matrix, provenance="synthetic")
        out = tmp_path / "roundtrip.csv"
        write_returns_csv(ds, out)
        back = ingest_returns_csv(out, scale="raw")
        assert np.array_equal(back.matrix, matrix)
        assert np.array_equal(back.dates, dates)
