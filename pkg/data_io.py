# data_io.py - CSV / JSON の入出力と設定ダイジェスト

import hashlib
import json
import math
import os
import re
import sys
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from logger import log_info
from validators import NonPositivePrice, ParseError, ValidationError


# =========================
# ダイジェスト
# =========================

def _to_jsonable(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, 'to_dict'):
        return value.to_dict()
    if isinstance(value, (set, tuple)):
        return list(value)
    return str(value)


def canonical_json(data: Any) -> str:
    """キー順を固定した区切り文字なしの JSON 文字列"""
    return json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False, default=_to_jsonable)


def config_digest(config: Dict[str, Any]) -> str:
    """
    実行設定のダイジェスト

    Args:
        config: 実行設定（JSON に変換できる辞書）

    Returns:
        SHA-256 の16進文字列
    """
    return hashlib.sha256(canonical_json(config).encode('utf-8')).hexdigest()


# =========================
# CSV 読み込み
# =========================

def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except (TypeError, ValueError):
        return False


def _read_cells(path: str) -> Tuple[Optional[List[str]], List[Tuple[int, List[str]]]]:
    """
    CSV を文字列のセルとして読み込む

    Returns:
        (ヘッダー or None, [(行番号, セルのリスト), ...])
    """
    source = sys.stdin if path == '-' else path
    try:
        frame = pd.read_csv(source, header=None, dtype=str, skip_blank_lines=False,
                            keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        return None, []
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ParseError(f"CSV の形式が不正です: {e}", int(match.group(1)) if match else 0)

    rows = []
    for index, record in enumerate(frame.itertuples(index=False), start=1):
        cells = ['' if pd.isna(cell) else str(cell).strip() for cell in record]
        if all(cell == '' for cell in cells):
            continue
        rows.append((index, cells))

    if not rows:
        return None, []

    # 1行目のセルがすべて数値でなければヘッダー（数値が混ざる行はデータ行として検証する）
    header = None
    if not any(_is_number(cell) for cell in rows[0][1] if cell != ''):
        header = rows[0][1]
        rows = rows[1:]

    return header, rows


def _parse_float(cell: str, line: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"数値に変換できない値です: '{cell}'", line)
    if not math.isfinite(value):
        raise ParseError(f"有限でない値です: '{cell}'", line)
    return value


def _has_date_column(rows: List[Tuple[int, List[str]]]) -> bool:
    return len(rows[0][1]) >= 2 and not _is_number(rows[0][1][0])


def read_paired_csv(path: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    2列の数値 CSV（ヘッダー任意）を対になったサンプルとして読み込む

    Raises:
        ParseError: 列数が2でない、または数値でない行がある場合（行番号付き）
    """
    _, rows = _read_cells(path)
    if not rows:
        raise ParseError("データ行がありません")

    x_values, y_values = [], []
    for line, cells in rows:
        cells = [cell for cell in cells if cell != '']
        if len(cells) != 2:
            raise ParseError(f"2列の数値が必要です（{len(cells)}列）", line)
        x_values.append(_parse_float(cells[0], line))
        y_values.append(_parse_float(cells[1], line))

    log_info(f"{path} から {len(x_values)} 組を読み込み", "DATA_IO")
    return np.array(x_values), np.array(y_values)


def log_returns(prices: np.ndarray, lines: Optional[List[int]] = None) -> np.ndarray:
    """
    対数収益率 ln(v_t / v_{t-1})（最初の観測は落とす）

    Raises:
        NonPositivePrice: 0以下の価格がある場合
    """
    prices = np.asarray(prices, dtype=float)
    bad = np.flatnonzero(prices <= 0)
    if bad.size:
        line = lines[bad[0]] if lines else 0
        message = f"対数収益率には正の価格が必要です（値: {prices[bad[0]]}）"
        raise NonPositivePrice(f"{line}行目: {message}" if line else message)
    return np.diff(np.log(prices))


def read_series_csv(path: str, use_log_returns: bool = False) -> np.ndarray:
    """
    1変量系列の CSV を読み込む（1列、または 日付,値 の2列）

    Args:
        path: ファイルパス（'-' は標準入力）
        use_log_returns: 値を価格とみなして対数収益率に変換

    Returns:
        np.ndarray: 系列
    """
    _, rows = _read_cells(path)
    if not rows:
        raise ParseError("データ行がありません")

    offset = 1 if _has_date_column(rows) else 0
    values, lines = [], []
    for line, cells in rows:
        if len(cells) <= offset or cells[offset] == '':
            raise ParseError("値の列がありません", line)
        values.append(_parse_float(cells[offset], line))
        lines.append(line)

    series = np.array(values)
    if use_log_returns:
        series = log_returns(series, lines)

    log_info(f"{path} から長さ {series.size} の系列を読み込み", "DATA_IO")
    return series


def read_panel_csv(path: str, use_log_returns: bool = False) -> pd.DataFrame:
    """
    複数系列の CSV（1列 = 1系列、先頭に日付列があってもよい）

    Returns:
        pd.DataFrame: 列ごとの系列（長さが違う場合は末尾が NaN）
    """
    header, rows = _read_cells(path)
    if not rows:
        raise ParseError("データ行がありません")

    offset = 1 if _has_date_column(rows) else 0
    width = max(len(cells) for _, cells in rows)
    names = header[offset:] if header else [f"series_{j + 1}" for j in range(width - offset)]

    columns: Dict[str, List[float]] = {name: [] for name in names}
    lines: Dict[str, List[int]] = {name: [] for name in names}
    for line, cells in rows:
        for j, name in enumerate(names):
            index = offset + j
            if index < len(cells) and cells[index] != '':
                columns[name].append(_parse_float(cells[index], line))
                lines[name].append(line)

    series = {}
    for name in names:
        values = np.array(columns[name])
        if use_log_returns and values.size:
            values = log_returns(values, lines[name])
        series[name] = pd.Series(values)

    log_info(f"{path} から {len(series)} 系列を読み込み", "DATA_IO")
    return pd.DataFrame(series)


# =========================
# 書き出し
# =========================

def format_float(value: Any) -> str:
    """倍精度を往復できる最短の10進表記"""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ''
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def table_to_csv(table: pd.DataFrame) -> str:
    formatted = table.copy()
    for column in formatted.columns:
        if pd.api.types.is_float_dtype(formatted[column]):
            formatted[column] = formatted[column].map(format_float)
    return formatted.to_csv(index=False, lineterminator='\n')


def write_sidecar(output: str, config: Dict[str, Any]) -> str:
    """<output>.json に設定とダイジェストを書き出す"""
    digest = config_digest(config)
    with open(f"{output}.json", 'w', encoding='utf-8') as f:
        json.dump({'digest': digest, 'config': config}, f, ensure_ascii=False, indent=4, default=_to_jsonable)
    return digest


def write_csv(table: pd.DataFrame, output: Optional[str] = None,
              config: Optional[Dict[str, Any]] = None) -> Optional[str]:
    """
    表を CSV として書き出す（output が None なら標準出力）

    Args:
        table: 書き出す表
        output: 出力パス
        config: 実行設定（指定時はサイドカー JSON も書く）

    Returns:
        設定ダイジェスト（config 指定時）
    """
    text = table_to_csv(table)
    if output is None or output == '-':
        sys.stdout.write(text)
        return config_digest(config) if config is not None else None

    directory = os.path.dirname(output)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(output, 'w', encoding='utf-8', newline='') as f:
        f.write(text)

    log_info(f"{output} に {len(table)} 行を書き出し", "DATA_IO")
    if config is not None:
        return write_sidecar(output, config)
    return None


def write_json(data: Dict[str, Any], output: Optional[str] = None):
    """JSON を書き出す（output が None なら標準出力）"""
    text = json.dumps(data, ensure_ascii=False, indent=4, default=_to_jsonable)
    if output is None or output == '-':
        sys.stdout.write(text + '\n')
        return

    directory = os.path.dirname(output)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(output, 'w', encoding='utf-8') as f:
        f.write(text + '\n')


def load_json(path: str) -> Dict[str, Any]:
    """JSON ファイルを読み込む"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} の JSON が不正です（{e.lineno}行目: {e.msg}）")


def read_existing_table(output: str, digest: str) -> Optional[pd.DataFrame]:
    """
    再開用に既存の出力 CSV を読み込む

    サイドカー JSON のダイジェストが一致しない場合（設定が違う実行の出力）は None
    """
    sidecar = f"{output}.json"
    if not os.path.exists(output) or not os.path.exists(sidecar) or os.path.getsize(output) == 0:
        return None
    with open(sidecar, "r", encoding="utf-8") as f:
        recorded = json.load(f).get("digest")
    if recorded != digest:
        return None
    return pd.read_csv(output)
