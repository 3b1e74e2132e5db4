# serial.py
"""
時系列の条件付き自己相関（CACF）
ラグペアの構成、標本 CACF / ACF / 二乗系列の ACF、i.i.d. 帰無モデルの信頼バンドを実装
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from estimators import QccValue, Status, classical_correlation, qcc_hat
from parallel import run_replicates
from quantile_core import QuantileSplit, tail_indices
from validators import (
    InvalidParameter,
    SeriesTooShort,
    validate_alpha_level,
    validate_min_int,
)

# null_bands に必要な最小レプリケート数
MIN_BAND_REPLICATES = 200


@dataclass(frozen=True)
class Series:
    """時間順に並んだ実数列（長さ2以上、全て有限）"""
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size < 2:
            raise SeriesTooShort(f"系列の長さは2以上が必要です（現在: {values.size}）")
        if not np.all(np.isfinite(values)):
            raise InvalidParameter("系列に有限でない値（NaN/inf）が含まれています")
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CorrelogramPoint:
    lag: int
    value: float
    status: Status

    @property
    def ok(self) -> bool:
        return self.status is Status.OK


@dataclass(frozen=True)
class NullBand:
    """帰無分布の中央 (1-alpha) を覆う区間 [lo, hi]"""
    lag: int
    lo: float
    hi: float


SeriesLike = Union[Series, Sequence[float], np.ndarray]


def as_series(series: SeriesLike) -> Series:
    return series if isinstance(series, Series) else Series(series)


def lagged_pairs(series: SeriesLike, h: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    ラグ h のペア (X_t, X_{t+h})、t = 1..n、n = m - h
    Args:
        series: 長さ m の系列
        h: ラグ（1以上）
    Returns:
        Tuple[np.ndarray, np.ndarray]: (front, back)
    Raises:
        SeriesTooShort: m < h + 2 の場合
    """
    values = as_series(series).values
    h = validate_min_int(h, 1, "h")
    if values.size < h + 2:
        raise SeriesTooShort(f"ラグ {h} には長さ {h + 2} 以上の系列が必要です（現在: {values.size}）")

    n = values.size - h
    return values[:n], values[h:]


def cacf_at(series: SeriesLike, h: int, split: QuantileSplit) -> QccValue:
    """
    ラグ h の標本条件付き自己相関
    front と back それぞれの順序統計量で Â を作り、同じ分割を両周辺に使う
    """
    front, back = lagged_pairs(series, h)
    return qcc_hat(front, back, split, split)


def _max_lag(values: np.ndarray, max_lag: int) -> int:
    max_lag = validate_min_int(max_lag, 1, "max_lag")
    if max_lag > values.size - 2:
        raise SeriesTooShort(f"max_lag は系列長 - 2 = {values.size - 2} 以下で指定してください（現在: {max_lag}）")
    return max_lag


def cacf(series: SeriesLike, max_lag: int, split: QuantileSplit) -> List[CorrelogramPoint]:
    """
    標本 CACF（h = 1..max_lag）
    Args:
        series: 系列
        max_lag: 最大ラグ（1 ≤ max_lag ≤ m - 2）
        split: 分位点分割
    Returns:
        List[CorrelogramPoint]: ラグ順の点列
    Raises:
        SeriesTooShort: max_lag が大きすぎる場合
    """
    series = as_series(series)
    max_lag = _max_lag(series.values, max_lag)
    points = []
    for h in range(1, max_lag + 1):
        estimate = cacf_at(series, h, split)
        points.append(CorrelogramPoint(h, estimate.value, estimate.status))
    return points


def acf_at(series: SeriesLike, h: int, squared: bool = False) -> QccValue:
    """ラグ h の標本自己相関（front/back 別々の平均・分散による Pearson 相関）"""
    values = as_series(series).values
    if squared:
        values = values * values
    front, back = lagged_pairs(values, h)
    return classical_correlation(front, back)


def acf(series: SeriesLike, max_lag: int, squared: bool = False) -> List[CorrelogramPoint]:
    """
    標本 ACF（squared=True なら二乗系列の ACF）
    Returns:
        List[CorrelogramPoint]: ラグ順の点列
    """
    series = as_series(series)
    max_lag = _max_lag(series.values, max_lag)
    points = []
    for h in range(1, max_lag + 1):
        estimate = acf_at(series, h, squared)
        points.append(CorrelogramPoint(h, estimate.value, estimate.status))
    return points


def correlogram_values(series: SeriesLike, max_lag: int, split: Optional[QuantileSplit],
                       squared: bool = False) -> List[CorrelogramPoint]:
    """split があれば CACF、なければ ACF"""
    if split is None:
        return acf(series, max_lag, squared)
    return cacf(series, max_lag, split)


def null_bands(m: int, max_lag: int, split: Optional[QuantileSplit],
               null_sampler: Callable[[int, np.random.Generator], np.ndarray],
               N: int, alpha: float, seed: int, squared: bool = False,
               threads: Optional[int] = None) -> List[NullBand]:
    """
    i.i.d. 帰無モデルのシミュレーションによるラグごとの信頼バンド
    Args:
        m: 系列長
        max_lag: 最大ラグ
        split: 分位点分割（None なら ACF のバンド）
        null_sampler: (m, rng) -> 系列
        N: レプリケート数（200以上）
        alpha: 有意水準
        seed: 乱数シード
        squared: 二乗系列の ACF のバンド
        threads: ワーカー数の上限
    Returns:
        List[NullBand]: 各ラグの k 番目と N+1-k 番目の値（k = ⌈N·α/2⌉、棄却域と同じ順位）
    """
    N = validate_min_int(N, MIN_BAND_REPLICATES, "N")
    alpha = validate_alpha_level(alpha)
    m = validate_min_int(m, max_lag + 2, "m")

    def replicate(index: int, rng: np.random.Generator) -> List[CorrelogramPoint]:
        return correlogram_values(null_sampler(m, rng), max_lag, split, squared)

    results = run_replicates(replicate, N, seed, threads, "NULL_BANDS")
    values = np.sort(np.array([[point.value for point in row] for row in results]), axis=0)
    lo_index, hi_index = tail_indices(N, alpha)

    return [NullBand(h + 1, float(values[lo_index - 1, h]), float(values[hi_index - 1, h])) for h in range(max_lag)]


def correlogram_table(series: SeriesLike, max_lag: int, split: Optional[QuantileSplit] = None,
                      bands: Optional[List[NullBand]] = None, squared: bool = False) -> pd.DataFrame:
    """
    コレログラムの表（列: lag, value, status[, band_lo, band_hi]）
    """
    points = correlogram_values(series, max_lag, split, squared)
    table = pd.DataFrame({
        'lag': [point.lag for point in points],
        'value': [point.value for point in points],
        'status': [str(point.status) for point in points],
    })

    if bands is not None:
        band_map = {band.lag: band for band in bands}
        table['band_lo'] = [band_map[lag].lo if lag in band_map else np.nan for lag in table['lag']]
        table['band_hi'] = [band_map[lag].hi if lag in band_map else np.nan for lag in table['lag']]

    return table
