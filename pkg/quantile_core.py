# quantile_core.py
"""
順序統計量と分位点条件付け集合
経験分位区間、条件付け矩形 Â / A の構成と所属判定を実装
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence, Tuple

import numpy as np

from validators import (
    EmptySample,
    IndexOutOfRange,
    LengthMismatch,
    validate_split,
)


@dataclass(frozen=True)
class QuantileSplit:
    """分位点分割 (p, q)、0 < p < q < 1"""
    p: float
    q: float

    def __post_init__(self):
        p, q = validate_split(self.p, self.q)
        object.__setattr__(self, 'p', p)
        object.__setattr__(self, 'q', q)

    def label(self) -> str:
        return f"({self.p:g},{self.q:g})"


@dataclass(frozen=True)
class Interval:
    """閉区間 [lo, hi]。lo > hi は空区間を表す"""
    lo: float
    hi: float

    @property
    def is_empty(self) -> bool:
        return not self.lo <= self.hi


EMPTY_INTERVAL = Interval(math.inf, -math.inf)


@dataclass(frozen=True)
class Rectangle:
    """条件付け矩形 x × y"""
    x: Interval
    y: Interval

    @property
    def is_empty(self) -> bool:
        return self.x.is_empty or self.y.is_empty

    def corners(self) -> dict:
        return {'x_lo': self.x.lo, 'x_hi': self.x.hi, 'y_lo': self.y.lo, 'y_hi': self.y.hi}


def _as_sample(sample: Sequence[float]) -> np.ndarray:
    values = np.asarray(sample, dtype=float).ravel()
    if values.size == 0:
        raise EmptySample("サンプルが空です")
    return values


def _floor_product(n: int, prob: float) -> int:
    # 10進表記どおりの床関数（0.57*100 が 56.999... になる丸め誤差を避ける）
    return math.floor(n * Fraction(repr(float(prob))))


def interval_indices(n: int, split: QuantileSplit) -> Tuple[int, int]:
    """
    経験分位区間の端点となる順序統計量の番号（1始まり）
    Args:
        n: サンプルサイズ
        split: 分位点分割
    Returns:
        Tuple[int, int]: ([np]+1, [nq])
    """
    return _floor_product(n, split.p) + 1, _floor_product(n, split.q)


def tail_indices(N: int, alpha: float) -> Tuple[int, int]:
    """
    両側 alpha の棄却域・バンドの端点になる順序統計量の番号（1始まり）

    下側 k = ⌈N·α/2⌉、上側はそれと対称な N+1-k。
    閉区間で判定すると、各裾に落ちる確率の期待値はどちらも k/(N+1)
    Args:
        N: 帰無標本の大きさ
        alpha: 両側の有意水準
    Returns:
        Tuple[int, int]: (k, N+1-k)
    """
    k = math.ceil(N * Fraction(repr(float(alpha))) / 2)
    k = min(max(k, 1), (N + 1) // 2)
    return k, N + 1 - k


def order_statistic(sample: Sequence[float], k: int) -> float:
    """
    k 番目に小さい値（重複は連続した順位を占める）
    Args:
        sample: サンプル
        k: 1始まりの順位
    Returns:
        float: k 番目の順序統計量
    Raises:
        EmptySample: サンプルが空の場合
        IndexOutOfRange: k が 1..n の外の場合
    """
    values = _as_sample(sample)
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= values.size:
        raise IndexOutOfRange(f"順位 k は 1〜{values.size} の整数で指定してください（現在: {k}）")

    k = int(k)
    return float(np.partition(values, k - 1)[k - 1])


def empirical_interval(sample: Sequence[float], split: QuantileSplit) -> Interval:
    """
    経験分位区間 [X_([np]+1), X_([nq])]
    Args:
        sample: サンプル
        split: 分位点分割
    Returns:
        Interval: 閉区間。番号が逆転する場合は空区間
    Raises:
        EmptySample: サンプルが空の場合
    """
    values = np.sort(_as_sample(sample))
    lo_index, hi_index = interval_indices(values.size, split)

    if lo_index > hi_index:
        return EMPTY_INTERVAL

    return Interval(float(values[lo_index - 1]), float(values[hi_index - 1]))


def check_paired(X: Sequence[float], Y: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    対になったサンプルの検証
    Raises:
        LengthMismatch: 長さが異なる場合
        EmptySample: 空の場合
    """
    x_values = np.asarray(X, dtype=float).ravel()
    y_values = np.asarray(Y, dtype=float).ravel()

    if x_values.size != y_values.size:
        raise LengthMismatch(f"X と Y の長さが一致しません（{x_values.size} != {y_values.size}）")
    if x_values.size == 0:
        raise EmptySample("サンプルが空です")

    return x_values, y_values


def rectangle_hat(X: Sequence[float], Y: Sequence[float],
                  split_x: QuantileSplit, split_y: QuantileSplit) -> Rectangle:
    """
    経験条件付け矩形 Â
    Args:
        X, Y: 対になったサンプル
        split_x, split_y: 各周辺の分位点分割
    Returns:
        Rectangle: Â
    Raises:
        LengthMismatch: 長さが異なる場合
    """
    x_values, y_values = check_paired(X, Y)
    return Rectangle(empirical_interval(x_values, split_x), empirical_interval(y_values, split_y))


def theoretical_rectangle(ppf_x: Callable[[float], float], ppf_y: Callable[[float], float],
                          split_x: QuantileSplit, split_y: QuantileSplit) -> Rectangle:
    """
    既知の周辺分位点関数から理論上の集合 A を構成
    Args:
        ppf_x, ppf_y: 周辺分位点関数
        split_x, split_y: 各周辺の分位点分割
    Returns:
        Rectangle: A
    """
    return Rectangle(
        Interval(float(ppf_x(split_x.p)), float(ppf_x(split_x.q))),
        Interval(float(ppf_y(split_y.p)), float(ppf_y(split_y.q))),
    )


def full_rectangle(X: Sequence[float], Y: Sequence[float]) -> Rectangle:
    """全標本を含む矩形 [min X, max X] × [min Y, max Y]"""
    x_values, y_values = check_paired(X, Y)
    return Rectangle(
        Interval(float(x_values.min()), float(x_values.max())),
        Interval(float(y_values.min()), float(y_values.max())),
    )


def contains(rect: Rectangle, x: float, y: float) -> bool:
    """
    点 (x, y) が閉矩形に含まれるか
    Returns:
        bool: 含まれる場合True（空区間なら常にFalse）
    """
    return bool(rect.x.lo <= x <= rect.x.hi and rect.y.lo <= y <= rect.y.hi)


def contains_mask(rect: Rectangle, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """contains のベクトル版"""
    return (X >= rect.x.lo) & (X <= rect.x.hi) & (Y >= rect.y.lo) & (Y <= rect.y.hi)
