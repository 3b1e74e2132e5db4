# inference.py
"""
系列の独立性検定エンジン
帰無分布のシミュレーション、両側棄却域、検定、検出力推定、ブートストラップ版、
検出力グリッド（表・カーペット）と複数系列パネルの集計を実装
"""

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from data_io import canonical_json, config_digest, read_existing_table, write_csv
from estimators import QccValue, Status
from logger import log_info, log_warning
from models import build_sampler, null_model
from parallel import derive_seed, run_replicates
from qcc_config import get_settings
from quantile_core import QuantileSplit, tail_indices
from serial import SeriesLike, acf_at, as_series, cacf_at
from validators import (
    AlphaTooSmallForN,
    InvalidParameter,
    StatisticFailure,
    validate_alpha_level,
    validate_min_int,
)

SeriesSampler = Callable[[int, np.random.Generator], np.ndarray]

MIN_NULL_SIZE = 100
MIN_TRIALS = 100
MIN_RESAMPLES = 100


class StatisticKind(enum.Enum):
    COND_AUTOCORR = 'cacf'
    AUTOCORR = 'acf'
    AUTOCORR_SQUARED = 'acf2'


_SPEC_PATTERN = re.compile(r'^(cacf|acf2|acf)(?::([^,@]+),([^@]+))?(?:@(\d+))?$')


@dataclass(frozen=True)
class StatisticSpec:
    """
    検定統計量の記述子
    COND_AUTOCORR は split が必須、他は split なし
    """
    kind: StatisticKind
    h: int = 1
    split: Optional[QuantileSplit] = None

    def __post_init__(self):
        object.__setattr__(self, 'h', validate_min_int(self.h, 1, "h"))
        if self.kind is StatisticKind.COND_AUTOCORR and self.split is None:
            raise InvalidParameter("条件付き自己相関には分位点分割が必要です")
        if self.kind is not StatisticKind.COND_AUTOCORR and self.split is not None:
            raise InvalidParameter(f"{self.kind.value} に分位点分割は指定できません")

    @classmethod
    def cond_autocorr(cls, p: float, q: float, h: int = 1) -> 'StatisticSpec':
        return cls(StatisticKind.COND_AUTOCORR, h, QuantileSplit(p, q))

    @classmethod
    def autocorr(cls, h: int = 1) -> 'StatisticSpec':
        return cls(StatisticKind.AUTOCORR, h)

    @classmethod
    def autocorr_squared(cls, h: int = 1) -> 'StatisticSpec':
        return cls(StatisticKind.AUTOCORR_SQUARED, h)

    @classmethod
    def parse(cls, text: str) -> 'StatisticSpec':
        """
        文字列表記から構築
        例: 'cacf:0.01,0.99@1'、'acf@2'、'acf2'（ラグ省略時は1）
        Raises:
            InvalidParameter: 表記が不正な場合
        """
        match = _SPEC_PATTERN.match(str(text).replace(' ', ''))
        if not match:
            raise InvalidParameter(f"統計量の表記が不正です: '{text}'（例: cacf:0.01,0.99@1, acf@1, acf2@1）")

        name, p, q, lag = match.groups()
        h = int(lag) if lag else 1
        if name == 'cacf':
            if p is None:
                raise InvalidParameter(f"cacf には分位点分割 p,q が必要です: '{text}'")
            return cls.cond_autocorr(p, q, h)
        if p is not None:
            raise InvalidParameter(f"{name} に分位点分割は指定できません: '{text}'")
        return cls.autocorr(h) if name == 'acf' else cls.autocorr_squared(h)

    def label(self) -> str:
        """表の列名（rho_(p,q)(h) / rho(h) / rho(h)(x^2)）"""
        if self.kind is StatisticKind.COND_AUTOCORR:
            return f"rho_{self.split.label()}({self.h})"
        if self.kind is StatisticKind.AUTOCORR:
            return f"rho({self.h})"
        return f"rho({self.h})(x^2)"

    def to_text(self) -> str:
        if self.kind is StatisticKind.COND_AUTOCORR:
            return f"cacf:{self.split.p:g},{self.split.q:g}@{self.h}"
        return f"{self.kind.value}@{self.h}"

    def to_dict(self) -> Dict[str, Any]:
        data = {'kind': self.kind.value, 'h': self.h}
        if self.split is not None:
            data['p'] = self.split.p
            data['q'] = self.split.q
        return data


@dataclass(frozen=True)
class NullDistribution:
    """昇順に並んだ N 個の帰無統計量（non_ok はステータスが OK でなかった件数）"""
    values: np.ndarray
    n: int
    statistic: StatisticSpec
    non_ok: int = 0

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=float))
        if values.size < MIN_NULL_SIZE:
            raise InvalidParameter(f"帰無分布の標本数は{MIN_NULL_SIZE}以上が必要です（現在: {values.size}）")
        object.__setattr__(self, 'values', values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class RejectionRegion:
    """両側棄却域 (-inf, lo] ∪ [hi, inf)"""
    lo: float
    hi: float
    alpha: float

    def rejects(self, value: float) -> bool:
        return bool(value <= self.lo or value >= self.hi)

    def to_dict(self) -> Dict[str, float]:
        return {'lo': self.lo, 'hi': self.hi, 'alpha': self.alpha}


@dataclass(frozen=True)
class TestResult:
    statistic_value: float
    reject: bool
    status: Status = Status.OK
    region: Optional[RejectionRegion] = None

    __test__ = False


@dataclass(frozen=True)
class PowerResult:
    """検出力（棄却率）と実行設定"""
    rejected: int
    trials: int
    power: float
    statistic: StatisticSpec
    non_ok: int = 0
    config: Dict[str, Any] = field(default_factory=dict)


# =========================
# 統計量の評価
# =========================

def evaluate_statistic(series: SeriesLike, stat: StatisticSpec) -> QccValue:
    """
    統計量を系列上で評価
    Returns:
        QccValue: 値とステータス（OK 以外は値 0）
    """
    if stat.kind is StatisticKind.COND_AUTOCORR:
        return cacf_at(series, stat.h, stat.split)
    return acf_at(series, stat.h, squared=stat.kind is StatisticKind.AUTOCORR_SQUARED)


def _evaluate_all(path: np.ndarray, stats: Sequence[StatisticSpec]) -> List[QccValue]:
    series = as_series(path)
    return [evaluate_statistic(series, stat) for stat in stats]


def _collect(results: List[List[QccValue]], count: int) -> tuple:
    values = np.array([[estimate.value for estimate in row] for row in results]).reshape(-1, count)
    ok = np.array([[estimate.ok for estimate in row] for row in results], dtype=bool).reshape(-1, count)
    return values, ok


def _validate_stats(stats: Sequence[StatisticSpec]) -> List[StatisticSpec]:
    stats = list(stats)
    if not stats:
        raise InvalidParameter("統計量を1つ以上指定してください")
    return stats


# =========================
# 帰無分布と棄却域
# =========================

def simulate_null_many(stats: Sequence[StatisticSpec], null_sampler: SeriesSampler, m: int,
                       N: int, seed: int, threads: Optional[int] = None) -> List[NullDistribution]:
    """
    複数の統計量の帰無分布を同じ帰無系列から同時にシミュレーション
    Args:
        stats: 統計量のリスト
        null_sampler: (m, rng) -> i.i.d. 帰無系列
        m: 系列長
        N: レプリケート数（100以上）
        seed: 乱数シード
        threads: ワーカー数の上限（結果は変わらない）
    Returns:
        List[NullDistribution]: stats と同じ順序
    """
    stats = _validate_stats(stats)
    N = validate_min_int(N, MIN_NULL_SIZE, "N")
    m = validate_min_int(m, max(stat.h for stat in stats) + 2, "m")

    def replicate(index: int, rng: np.random.Generator) -> List[QccValue]:
        return _evaluate_all(null_sampler(m, rng), stats)

    values, ok = _collect(run_replicates(replicate, N, seed, threads, "SIMULATE_NULL"), len(stats))
    non_ok = (~ok).sum(axis=0)
    if non_ok.any():
        log_warning(f"OK でないレプリケート: {dict(zip([s.label() for s in stats], non_ok.tolist()))}", "SIMULATE_NULL")

    return [NullDistribution(values[:, j], m, stat, int(non_ok[j])) for j, stat in enumerate(stats)]


def simulate_null(stat: StatisticSpec, null_sampler: SeriesSampler, m: int, N: int,
                  seed: int, threads: Optional[int] = None) -> NullDistribution:
    """1つの統計量の帰無分布"""
    return simulate_null_many([stat], null_sampler, m, N, seed, threads)[0]


def rejection_region(nd: NullDistribution, alpha: float) -> RejectionRegion:
    """
    経験分位点による両側棄却域
    Args:
        nd: 帰無分布
        alpha: 第一種過誤率
    Returns:
        RejectionRegion: lo = k 番目、hi = N+1-k 番目の値（k = ⌈N·α/2⌉）
    Raises:
        AlphaTooSmallForN: N·α/2 < 2 の場合
    """
    alpha = validate_alpha_level(alpha)
    N = len(nd)
    if N * alpha / 2 < 2:
        raise AlphaTooSmallForN(f"alpha={alpha} には N ≥ {math.ceil(4 / alpha)} の帰無標本が必要です（現在: {N}）")

    lo_index, hi_index = tail_indices(N, alpha)
    lo = nd.values[lo_index - 1]
    hi = nd.values[hi_index - 1]
    return RejectionRegion(float(lo), float(hi), alpha)


def run_test(series: SeriesLike, stat: StatisticSpec, region: RejectionRegion) -> TestResult:
    """
    検定を実行（統計量が棄却域に入れば棄却）
    Raises:
        StatisticFailure: 統計量のステータスが OK でない場合
    """
    estimate = evaluate_statistic(series, stat)
    if not estimate.ok:
        raise StatisticFailure(estimate.status, f"{stat.label()} を計算できません (status={estimate.status})")
    return TestResult(estimate.value, region.rejects(estimate.value), estimate.status, region)


# =========================
# 検出力
# =========================

def estimate_power_many(alt_sampler: SeriesSampler, stats: Sequence[StatisticSpec],
                        regions: Sequence[RejectionRegion], m: int, M: int, seed: int,
                        threads: Optional[int] = None,
                        config: Optional[Dict[str, Any]] = None) -> List[PowerResult]:
    """
    対立仮説の系列を M 本生成し、各統計量の棄却率を求める
    Args:
        alt_sampler: (m, rng) -> 対立仮説の系列
        stats: 統計量のリスト
        regions: stats に対応する棄却域
        m: 系列長
        M: 試行数（100以上）
        seed: 乱数シード
        threads: ワーカー数の上限
        config: 結果に添える実行設定
    Returns:
        List[PowerResult]: stats と同じ順序
    """
    stats = _validate_stats(stats)
    if len(regions) != len(stats):
        raise InvalidParameter("統計量と棄却域の数が一致しません")
    M = validate_min_int(M, MIN_TRIALS, "M")

    def replicate(index: int, rng: np.random.Generator) -> List[QccValue]:
        return _evaluate_all(alt_sampler(m, rng), stats)

    values, ok = _collect(run_replicates(replicate, M, seed, threads, "ESTIMATE_POWER"), len(stats))

    results = []
    for j, (stat, region) in enumerate(zip(stats, regions)):
        # OK でない試行は非棄却
        rejected = int(sum(flag and region.rejects(value) for value, flag in zip(values[:, j], ok[:, j])))
        non_ok = int(M - ok[:, j].sum())
        results.append(PowerResult(rejected, M, rejected / M, stat, non_ok, dict(config or {})))
    return results


def estimate_power(alt_sampler: SeriesSampler, stat: StatisticSpec, region: RejectionRegion,
                   m: int, M: int, seed: int, threads: Optional[int] = None) -> PowerResult:
    """1つの統計量の検出力"""
    return estimate_power_many(alt_sampler, [stat], [region], m, M, seed, threads)[0]


# =========================
# ブートストラップ
# =========================

def bootstrap_null_many(series: SeriesLike, stats: Sequence[StatisticSpec], B: int, seed: int,
                        threads: Optional[int] = None) -> List[NullDistribution]:
    """
    観測値からの同じ長さの復元抽出で帰無分布を作る
    Args:
        series: 観測系列
        stats: 統計量のリスト
        B: 再標本数（100以上）
        seed: 乱数シード
        threads: ワーカー数の上限
    Returns:
        List[NullDistribution]: stats と同じ順序
    """
    values = as_series(series).values
    stats = _validate_stats(stats)
    B = validate_min_int(B, MIN_RESAMPLES, "B")

    def resample(m: int, rng: np.random.Generator) -> np.ndarray:
        return values[rng.integers(0, values.size, size=m)]

    return simulate_null_many(stats, resample, values.size, B, seed, threads)


def bootstrap_null(series: SeriesLike, stat: StatisticSpec, B: int, seed: int,
                   threads: Optional[int] = None) -> NullDistribution:
    """1つの統計量のブートストラップ帰無分布"""
    return bootstrap_null_many(series, [stat], B, seed, threads)[0]


def bootstrap_test(series: SeriesLike, stat: StatisticSpec, B: int, alpha: float, seed: int,
                   threads: Optional[int] = None) -> TestResult:
    """
    ブートストラップ検定（bootstrap_null → rejection_region → run_test）
    Returns:
        TestResult: 統計量の値・棄却域・判定
    """
    region = rejection_region(bootstrap_null(series, stat, B, seed, threads), alpha)
    return run_test(series, stat, region)


def panel_bootstrap(panel: pd.DataFrame, stats: Sequence[StatisticSpec], B: int, alpha: float,
                    seed: int, reference: Optional[StatisticSpec] = None,
                    threads: Optional[int] = None) -> pd.DataFrame:
    """
    複数系列（列）へのブートストラップ検定の集計
    Args:
        panel: 1列 = 1系列の表（NaN は除外）
        stats: 統計量のリスト
        B: 再標本数
        alpha: 有意水準
        seed: 乱数シード（系列名ごとに派生）
        reference: U % の基準にする統計量（既定は rho(1)(x^2)）
        threads: ワーカー数の上限
    Returns:
        pd.DataFrame: 列 statistic, rejects_pct, u_pct
        （u_pct は その統計量が棄却し、基準統計量が棄却しない系列の割合）
    """
    stats = _validate_stats(stats)
    reference = reference or StatisticSpec.autocorr_squared(1)
    evaluated = stats if reference in stats else stats + [reference]
    ref_index = evaluated.index(reference)

    rejects = []
    for name in panel.columns:
        values = panel[name].dropna().to_numpy(dtype=float)
        nulls = bootstrap_null_many(values, evaluated, B, derive_seed(seed, f"panel:{name}"), threads)
        row = []
        for stat, nd in zip(evaluated, nulls):
            region = rejection_region(nd, alpha)
            estimate = evaluate_statistic(values, stat)
            if not estimate.ok:
                log_warning(f"{name}: {stat.label()} のステータスが {estimate.status} のため非棄却とみなします", "PANEL")
            row.append(estimate.ok and region.rejects(estimate.value))
        rejects.append(row)

    rejects = np.array(rejects, dtype=bool).reshape(-1, len(evaluated))
    count = max(len(panel.columns), 1)

    rows = []
    for j, stat in enumerate(evaluated):
        u_pct = np.nan if j == ref_index else 100.0 * float(np.sum(rejects[:, j] & ~rejects[:, ref_index])) / count
        rows.append({
            'statistic': stat.label(),
            'rejects_pct': 100.0 * float(np.sum(rejects[:, j])) / count,
            'u_pct': u_pct,
        })

    log_info(f"{len(panel.columns)} 系列 × {len(evaluated)} 統計量のブートストラップ検定を完了 (B={B})", "PANEL")
    return pd.DataFrame(rows, columns=['statistic', 'rejects_pct', 'u_pct'])


# =========================
# 検出力グリッド
# =========================

def _point_key(point: Dict[str, Any], names: Sequence[str]) -> tuple:
    return tuple(round(float(point[name]), 12) for name in names)


def grid_config(manifest) -> Dict[str, Any]:
    # マニフェストに書かれていないバーンインは設定から決まるのでダイジェストに含める
    settings = get_settings()
    return {**manifest.to_dict(), 'burn_in': settings.burn_in, 'path_burn_in': settings.path_burn_in}


def power_grid(manifest, output: Optional[str] = None, resume: bool = False,
               threads: Optional[int] = None) -> pd.DataFrame:
    """
    マニフェストのパラメータグリッド全体の検出力表
    帰無分布は帰無モデルごとにキャッシュし、出力 CSV はグリッド点ごとに更新する
    Args:
        manifest: PowerManifest
        output: 出力 CSV パス（None なら書き出さない）
        resume: 既存の出力にある点を再計算しない
        threads: ワーカー数の上限
    Returns:
        pd.DataFrame: パラメータ列 + 統計量ごとの検出力列
    """
    names = list(manifest.grid.keys())
    labels = [stat.label() for stat in manifest.statistics]
    columns = names + labels

    config = grid_config(manifest)
    finished: Dict[tuple, Dict[str, Any]] = {}
    if resume and output:
        existing = read_existing_table(output, config_digest(config))
        if existing is not None and list(existing.columns) == columns:
            for record in existing.to_dict('records'):
                finished[_point_key(record, names)] = record
            log_info(f"{len(finished)} 点を既存の出力から再利用", "POWER_GRID")

    regions_cache: Dict[str, List[RejectionRegion]] = {}
    rows: List[Dict[str, Any]] = []
    points = manifest.grid_points()

    for number, point in enumerate(points, start=1):
        key = _point_key(point, names)
        if key in finished:
            rows.append(finished[key])
            continue

        spec = manifest.model_for(point)
        null_spec = null_model(spec, manifest.null_burn_in)
        null_key = canonical_json(null_spec.to_dict())
        if null_key not in regions_cache:
            nulls = simulate_null_many(manifest.statistics, build_sampler(null_spec), manifest.m,
                                       manifest.N, derive_seed(manifest.seed, f"null:{null_key}"), threads)
            regions_cache[null_key] = [rejection_region(nd, manifest.alpha) for nd in nulls]

        alt_key = canonical_json(spec.to_dict())
        powers = estimate_power_many(build_sampler(spec), manifest.statistics, regions_cache[null_key],
                                     manifest.m, manifest.M, derive_seed(manifest.seed, f"alt:{alt_key}"),
                                     threads, config=point)

        row = dict(point)
        row.update({label: result.power for label, result in zip(labels, powers)})
        rows.append(row)
        log_info(f"グリッド点 {number}/{len(points)} {point} 完了", "POWER_GRID")

        if output:
            write_csv(pd.DataFrame(rows, columns=columns), output, config)

    table = pd.DataFrame(rows, columns=columns)
    if output:
        write_csv(table, output, config)
    return table
