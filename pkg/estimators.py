# estimators.py
"""
分位点条件付き相関（QCC）の推定
条件付きモーメント、Â を使う推定量（hat）と既知の A を使う推定量（bar）、
モンテカルロによる母集団値の評価と Â 推定誤差の分解を実装
"""

import enum
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from logger import log_info
from parallel import as_rng, auxiliary_rng, run_replicates
from quantile_core import (
    QuantileSplit,
    Rectangle,
    check_paired,
    contains_mask,
    full_rectangle,
    rectangle_hat,
    theoretical_rectangle,
)
from validators import RequiresKnownQuantiles, validate_min_int

# 数値誤差を吸収する範囲（Cauchy–Schwarz と [-1,1] へのクランプ）
ROUNDING_SLACK = 1e-12
# 条件付き分散を 0 とみなす相対しきい値
VAR_TOLERANCE = 1e-12
# 参照値 ρ_ref を求めるモンテカルロの既定標本数
REFERENCE_DRAWS = 10 ** 6


class Status(enum.Enum):
    """推定ステータス"""
    OK = 'OK'
    EMPTY_SET = 'EmptySet'
    DEGENERATE_VARIANCE = 'DegenerateVariance'

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CondMoments:
    """集合上の条件付き平均・分散・共分散（正規化は 1/count）"""
    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    cov: float
    count: int
    status: Status


@dataclass(frozen=True)
class QccValue:
    """QCC の値。status が OK でなければ value は 0"""
    value: float
    status: Status
    count: int = 0
    rect: Optional[Rectangle] = None

    @property
    def ok(self) -> bool:
        return self.status is Status.OK


def _variance_tolerance(values: np.ndarray) -> float:
    return VAR_TOLERANCE * max(1.0, float(np.mean(values * values)))


def cond_moments_on(X: Sequence[float], Y: Sequence[float], rect: Rectangle) -> CondMoments:
    """
    矩形に含まれる点だけで条件付きモーメントを計算
    Args:
        X, Y: 対になったサンプル
        rect: 条件付け矩形（Â または A）
    Returns:
        CondMoments: 条件付きモーメント（空集合なら全て0）
    Raises:
        LengthMismatch: 長さが異なる場合
    """
    x_values, y_values = check_paired(X, Y)
    mask = contains_mask(rect, x_values, y_values)
    count = int(mask.sum())

    if count == 0:
        return CondMoments(0.0, 0.0, 0.0, 0.0, 0.0, 0, Status.EMPTY_SET)

    x_in = x_values[mask]
    y_in = y_values[mask]
    mean_x = float(np.mean(x_in))
    mean_y = float(np.mean(y_in))
    dx = x_in - mean_x
    dy = y_in - mean_y
    var_x = float(np.mean(dx * dx))
    var_y = float(np.mean(dy * dy))
    cov = float(np.mean(dx * dy))

    if var_x < _variance_tolerance(x_in) or var_y < _variance_tolerance(y_in):
        status = Status.DEGENERATE_VARIANCE
    else:
        status = Status.OK

    return CondMoments(mean_x, mean_y, var_x, var_y, cov, count, status)


def qcc_bar(X: Sequence[float], Y: Sequence[float], rect: Rectangle) -> QccValue:
    """
    与えられた矩形上の条件付き相関
    Args:
        X, Y: 対になったサンプル
        rect: 条件付け矩形
    Returns:
        QccValue: 相関値とステータス
    """
    moments = cond_moments_on(X, Y, rect)
    if moments.status is not Status.OK:
        return QccValue(0.0, moments.status, moments.count, rect)

    value = moments.cov / math.sqrt(moments.var_x * moments.var_y)
    return QccValue(min(1.0, max(-1.0, value)), Status.OK, moments.count, rect)


def qcc_hat(X: Sequence[float], Y: Sequence[float],
            split_x: QuantileSplit, split_y: QuantileSplit) -> QccValue:
    """
    標本条件付き相関 ρ̂_A（Â を順序統計量から推定）
    Args:
        X, Y: 対になったサンプル
        split_x, split_y: 各周辺の分位点分割
    Returns:
        QccValue: 相関値とステータス
    """
    return qcc_bar(X, Y, rectangle_hat(X, Y, split_x, split_y))


def classical_correlation(X: Sequence[float], Y: Sequence[float]) -> QccValue:
    """全標本の Pearson 相関（正規化 1/n、ステータス規則は QCC と共通）"""
    return qcc_bar(X, Y, full_rectangle(X, Y))


def _known_rectangle(sampler, split_x: QuantileSplit, split_y: QuantileSplit) -> Rectangle:
    ppf_x = getattr(sampler, 'ppf_x', None)
    ppf_y = getattr(sampler, 'ppf_y', None)
    if ppf_x is None or ppf_y is None:
        raise RequiresKnownQuantiles("このサンプラーは理論分位点関数を持たないため集合 A を構成できません")
    return theoretical_rectangle(ppf_x, ppf_y, split_x, split_y)


def population_moments_mc(sampler, split_x: QuantileSplit, split_y: QuantileSplit,
                          N: int = REFERENCE_DRAWS, seed=0) -> CondMoments:
    """
    大標本モンテカルロによる母集団の条件付きモーメント
    Args:
        sampler: draw(n, rng) -> (X, Y) を持つ2変量サンプラー
        split_x, split_y: 分位点分割
        N: 標本数（1000以上）
        seed: 乱数シード
    Returns:
        CondMoments: Â 上のモーメント（N が大きいので A 上の値の近似）
    """
    N = validate_min_int(N, 1000, "N")
    X, Y = sampler.draw(N, as_rng(seed))
    return cond_moments_on(X, Y, rectangle_hat(X, Y, split_x, split_y))


def qcc_population_mc(sampler, split_x: QuantileSplit, split_y: QuantileSplit,
                      N: int = REFERENCE_DRAWS, seed=0) -> float:
    """
    母集団 QCC のモンテカルロ近似（図の「理論値」）
    Args:
        sampler: 2変量サンプラー
        split_x, split_y: 分位点分割
        N: 標本数（1000以上）
        seed: 乱数シード
    Returns:
        float: cor_A の近似値
    """
    N = validate_min_int(N, 1000, "N")
    X, Y = sampler.draw(N, as_rng(seed))
    return qcc_hat(X, Y, split_x, split_y).value


def _reference_value(sampler, split_x, split_y, seed, rho_ref, ref_draws) -> float:
    if rho_ref is not None:
        return float(rho_ref)
    rho_ref = qcc_population_mc(sampler, split_x, split_y, ref_draws, auxiliary_rng(seed, 0))
    log_info(f"参照値 ρ_ref={rho_ref:.6f} (N={ref_draws})", "ESTIMATORS")
    return rho_ref


def set_error_decomposition(sampler, split_x: QuantileSplit, split_y: QuantileSplit,
                            n: int, reps: int, seed: int, rho_ref: Optional[float] = None,
                            ref_draws: int = REFERENCE_DRAWS, threads: Optional[int] = None) -> Dict[str, float]:
    """
    Â 推定に起因する誤差の割合
    Args:
        sampler: ppf_x / ppf_y を持つ2変量サンプラー
        split_x, split_y: 分位点分割
        n: サンプルサイズ
        reps: レプリケート数（100以上）
        seed: 乱数シード
        rho_ref: 参照値（省略時はモンテカルロで計算）
        ref_draws: 参照値の標本数
        threads: ワーカー数の上限
    Returns:
        Dict: mse_hat = E(ρ̂-ρ_ref)², msd = E(ρ̂-ρ̄)², ratio = msd/mse_hat, rho_ref
    Raises:
        RequiresKnownQuantiles: サンプラーが理論分位点を持たない場合
    """
    reps = validate_min_int(reps, 100, "reps")
    n = validate_min_int(n, 1, "n")
    known = _known_rectangle(sampler, split_x, split_y)
    rho_ref = _reference_value(sampler, split_x, split_y, seed, rho_ref, ref_draws)

    def replicate(index: int, rng: np.random.Generator):
        X, Y = sampler.draw(n, rng)
        return qcc_hat(X, Y, split_x, split_y).value, qcc_bar(X, Y, known).value

    pairs = np.array(run_replicates(replicate, reps, seed, threads, "SET_ERROR"))
    hat, bar = pairs[:, 0], pairs[:, 1]
    mse_hat = float(np.mean((hat - rho_ref) ** 2))
    msd = float(np.mean((hat - bar) ** 2))

    return {
        'n': n,
        'mse_hat': mse_hat,
        'msd': msd,
        'ratio': msd / mse_hat if mse_hat > 0 else float('nan'),
        'rho_ref': rho_ref,
    }


def mse_curve(sampler, split_x: QuantileSplit, split_y: QuantileSplit, sizes: Iterable[int],
              reps: int, seed: int, rho_ref: Optional[float] = None,
              ref_draws: int = REFERENCE_DRAWS, threads: Optional[int] = None) -> pd.DataFrame:
    """
    サンプルサイズごとの MSE と Â 推定誤差の割合（収束図の中央・右パネル）
    Returns:
        pd.DataFrame: 列 n, mse_hat, msd, ratio, rho_ref
    """
    rho_ref = _reference_value(sampler, split_x, split_y, seed, rho_ref, ref_draws)
    rows = [
        set_error_decomposition(sampler, split_x, split_y, n, reps, seed + i, rho_ref, threads=threads)
        for i, n in enumerate(sizes)
    ]
    return pd.DataFrame(rows, columns=['n', 'mse_hat', 'msd', 'ratio', 'rho_ref'])


def running_estimate(sampler, split_x: QuantileSplit, split_y: QuantileSplit,
                     sizes: Iterable[int], seed) -> pd.DataFrame:
    """
    1本の軌道上での推定値の推移（収束図の左パネル）
    Returns:
        pd.DataFrame: 列 n, value, status
    """
    sizes = sorted(validate_min_int(n, 1, "n") for n in sizes)
    X, Y = sampler.draw(sizes[-1], as_rng(seed))

    rows = []
    for n in sizes:
        estimate = qcc_hat(X[:n], Y[:n], split_x, split_y)
        rows.append({'n': n, 'value': estimate.value, 'status': str(estimate.status)})

    return pd.DataFrame(rows, columns=['n', 'value', 'status'])


def known_set_scaling(sampler, split_x: QuantileSplit, split_y: QuantileSplit,
                      n_small: int, n_large: int, reps: int, seed: int,
                      threads: Optional[int] = None) -> Dict[str, float]:
    """
    既知集合の推定量 ρ̄_A の √n スケーリングと正規性の確認
    Args:
        sampler: ppf_x / ppf_y を持つ2変量サンプラー
        n_small, n_large: 比較する2つのサンプルサイズ
        reps: レプリケート数
        seed: 乱数シード
    Returns:
        Dict: std_small, std_large, ratio（≈ √(n_large/n_small)）、標準化値の歪度と超過尖度
    """
    reps = validate_min_int(reps, 100, "reps")
    known = _known_rectangle(sampler, split_x, split_y)

    def replicate(index: int, rng: np.random.Generator):
        X_small, Y_small = sampler.draw(n_small, rng)
        X_large, Y_large = sampler.draw(n_large, rng)
        return qcc_bar(X_small, Y_small, known).value, qcc_bar(X_large, Y_large, known).value

    values = np.array(run_replicates(replicate, reps, seed, threads, "KNOWN_SET_SCALING"))
    small, large = values[:, 0], values[:, 1]
    standardized = (large - large.mean()) / large.std()

    return {
        'std_small': float(small.std()),
        'std_large': float(large.std()),
        'ratio': float(small.std() / large.std()),
        'expected_ratio': math.sqrt(n_large / n_small),
        'skew': float(stats.skew(standardized)),
        'excess_kurtosis': float(stats.kurtosis(standardized)),
    }
