# test_data_io.py
import json
import math

import numpy as np
import pandas as pd
import pytest

from data_io import (
    canonical_json,
    config_digest,
    format_float,
    log_returns,
    read_existing_table,
    read_paired_csv,
    read_panel_csv,
    read_series_csv,
    table_to_csv,
    write_csv,
)
from validators import NonPositivePrice, ParseError


class TestReadPaired:
    def test_with_header(self, write_text):
        X, Y = read_paired_csv(write_text('pairs.csv', "x,y\n1.5,2\n-3,4e-1\n"))
        assert X.tolist() == [1.5, -3.0]
        assert Y.tolist() == [2.0, 0.4]

    def test_without_header(self, write_text):
        X, _ = read_paired_csv(write_text('pairs.csv', "1,2\n3,4\n"))
        assert X.tolist() == [1.0, 3.0]

    def test_parse_error_line_number(self, write_text):
        with pytest.raises(ParseError) as info:
            read_paired_csv(write_text('pairs.csv', "x,y\n1,2\n3,abc\n"))
        assert info.value.line == 3

    def test_blank_lines_keep_numbering(self, write_text):
        with pytest.raises(ParseError) as info:
            read_paired_csv(write_text('pairs.csv', "1,2\n\n3,nan\n"))
        assert info.value.line == 3

    def test_malformed_row_after_header(self, write_text):
        with pytest.raises(ParseError) as info:
            read_paired_csv(write_text('pairs.csv', "x,y\nfoo,bar\n1,2\n"))
        assert info.value.line == 2

    def test_partly_numeric_first_row_is_data(self, write_text):
        with pytest.raises(ParseError) as info:
            read_paired_csv(write_text('pairs.csv', "1.5,abc\n1,2\n3,4\n"))
        assert info.value.line == 1

    def test_extra_fields_report_line(self, write_text):
        with pytest.raises(ParseError) as info:
            read_paired_csv(write_text('pairs.csv', "1,2\n3,4\n5,6,7\n"))
        assert info.value.line == 3

    def test_wrong_column_count(self, write_text):
        with pytest.raises(ParseError):
            read_paired_csv(write_text('single.csv', "1\n2\n"))

    def test_empty_file(self, write_text):
        with pytest.raises(ParseError):
            read_paired_csv(write_text('empty.csv', ""))


class TestReadSeries:
    def test_single_column(self, write_text):
        assert read_series_csv(write_text('s.csv', "value\n1\n2\n3\n")).tolist() == [1.0, 2.0, 3.0]

    def test_date_column_and_log_returns(self, write_text):
        path = write_text('prices.csv', "date,close\n2020-01-01,100\n2020-01-02,110\n2020-01-03,99\n")
        returns = read_series_csv(path, use_log_returns=True)
        assert returns.tolist() == pytest.approx([math.log(1.1), math.log(0.9)])

    def test_non_positive_price(self, write_text):
        path = write_text('prices.csv', "date,close\n2020-01-01,100\n2020-01-02,0\n")
        with pytest.raises(NonPositivePrice, match="3行目"):
            read_series_csv(path, use_log_returns=True)

    def test_log_returns(self):
        assert log_returns(np.array([1.0, math.e, 1.0])).tolist() == pytest.approx([1.0, -1.0])


class TestReadPanel:
    def test_ragged_columns(self, write_text):
        path = write_text('panel.csv', "date,A,B\nd1,1,2\nd2,2,4\nd3,4,\n")
        panel = read_panel_csv(path)
        assert list(panel.columns) == ['A', 'B']
        assert panel['A'].tolist() == [1.0, 2.0, 4.0]
        assert panel['B'].dropna().tolist() == [2.0, 4.0]

    def test_log_returns_per_column(self, write_text):
        panel = read_panel_csv(write_text('panel.csv', "A,B\n1,2\n2,4\n4,8\n"), use_log_returns=True)
        assert panel['A'].tolist() == pytest.approx([math.log(2), math.log(2)])
        assert panel['B'].tolist() == pytest.approx([math.log(2), math.log(2)])

    def test_dates_without_header_keep_first_row(self, write_text):
        panel = read_panel_csv(write_text('panel.csv', "d1,1,2\nd2,3,4\n"))
        assert panel['series_1'].tolist() == [1.0, 3.0]

    def test_without_header(self, write_text):
        panel = read_panel_csv(write_text('panel.csv', "1,2\n3,4\n"))
        assert list(panel.columns) == ['series_1', 'series_2']


class TestWriting:
    def test_format_float(self):
        assert format_float(0.1) == '0.1'
        assert format_float(1 / 3) == repr(1 / 3)
        assert format_float(float('nan')) == ''
        assert format_float(7) == '7'

    def test_round_trip_precision(self):
        values = [1 / 3, 2 ** -40, 123456.789]
        text = table_to_csv(pd.DataFrame({'lag': [1, 2, 3], 'value': values}))
        assert text.splitlines()[0] == 'lag,value'
        assert [float(line.split(',')[1]) for line in text.splitlines()[1:]] == values

    def test_sidecar_digest(self, tmp_path):
        output = str(tmp_path / 'out' / 'table.csv')
        config = {'seed': 1, 'command': 'cacf'}
        digest = write_csv(pd.DataFrame({'a': [1.0]}), output, config)
        with open(output + '.json', encoding='utf-8') as f:
            sidecar = json.load(f)
        assert sidecar['digest'] == digest == config_digest(config)
        assert read_existing_table(output, digest)['a'].tolist() == [1.0]
        assert read_existing_table(output, 'other') is None

    def test_stdout(self, capsys):
        write_csv(pd.DataFrame({'a': [0.5]}))
        assert capsys.readouterr().out == 'a\n0.5\n'


def test_digest_ignores_key_order():
    assert config_digest({'a': 1, 'b': [1, 2]}) == config_digest({'b': [1, 2], 'a': 1})
    assert config_digest({'a': 1}) != config_digest({'a': 2})
    assert canonical_json({'b': np.int64(2), 'a': np.float64(0.5)}) == '{"a":0.5,"b":2}'
