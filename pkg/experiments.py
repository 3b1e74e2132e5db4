# experiments.py
"""
数値実験をデスク規模 / 完全規模で再現するプリセット
各プリセットは outdir に CSV（とサイドカー JSON）を書き、要約の辞書を返す
"""

import os
import time
from typing import Any, Callable, Dict, List, NamedTuple, Optional

import numpy as np
import pandas as pd

from data_io import config_digest, write_csv, write_json
from estimators import (
    known_set_scaling,
    mse_curve,
    population_moments_mc,
    running_estimate,
    set_error_decomposition,
)
from inference import (
    StatisticSpec,
    bootstrap_null_many,
    estimate_power_many,
    evaluate_statistic,
    power_grid,
    rejection_region,
    simulate_null_many,
)
from logger import log_info
from manifest import manifest_from_dict
from models import (
    BivariateNormalSampler,
    BivStable4Atom,
    BivStableSampler,
    ModelSpec,
    build_sampler,
    null_model,
    sample_student_t,
)
from parallel import derive_seed, replicate_rng
from quantile_core import QuantileSplit
from serial import correlogram_table, null_bands
from validators import InvalidParameter


class ExperimentScale(NamedTuple):
    """実験規模"""
    reps: int
    ref_draws: int
    normality_reps: int
    n_null: int
    m_trials: int
    burn_in: int
    b_boot: int
    bootstrap_series: int
    carpet_steps: int


SCALES = {
    # デスク規模: GARCH の定常標本のバーンインを 2000 に、ブートストラップを縮小
    'desk': ExperimentScale(reps=500, ref_draws=10 ** 6, normality_reps=1000, n_null=1000, m_trials=1000,
                            burn_in=2000, b_boot=1000, bootstrap_series=200, carpet_steps=6),
    'full': ExperimentScale(reps=1000, ref_draws=10 ** 6, normality_reps=2000, n_null=1000, m_trials=1000,
                             burn_in=10000, b_boot=10000, bootstrap_series=500, carpet_steps=16),
}

EXAMPLE_SPLIT = QuantileSplit(0.05, 0.75)
CONSISTENCY_SIZES = [100, 200, 500, 1000, 2000]
RUNNING_SIZES = [50, 100, 200, 500, 1000, 2000, 5000, 10000]

# 中央の列は p=0.1 の対称分割（P=0.15 のジャンプは各裾 7.5% なので 5% の切り取りでは残る）
MA1_STATISTICS = ['cacf:0.01,0.99@1', 'cacf:0.1,0.9@1', 'cacf:0.25,0.75@1', 'acf@1']
GARCH_DISCRETE_STATISTICS = ['cacf:0.01,0.5@1', 'cacf:0.01,0.65@1', 'cacf:0.01,0.9@1',
                              'cacf:0.05,0.5@1', 'cacf:0.05,0.65@1', 'cacf:0.05,0.9@1', 'acf@1', 'acf2@1']
# 安定雑音の表だけ5列目の q が 0.7
GARCH_STABLE_STATISTICS = ['cacf:0.01,0.5@1', 'cacf:0.01,0.65@1', 'cacf:0.01,0.9@1',
                            'cacf:0.05,0.5@1', 'cacf:0.05,0.7@1', 'cacf:0.05,0.9@1', 'acf@1', 'acf2@1']
TYPE1_STATISTICS = ['cacf:0.01,0.99@1', 'acf@1', 'acf2@1']
BOOTSTRAP_STATISTICS = ['cacf:0.01,0.65@1', 'cacf:0.01,0.99@1', 'acf@1']


def normal_example_sampler() -> BivariateNormalSampler:
    """平均 (0.5,0.5)、分散1、共分散0.4 の2変量正規"""
    return BivariateNormalSampler((0.5, 0.5), ((1.0, 0.4), (0.4, 1.0)))


def stable_example_sampler(alpha: float = 1.5) -> BivStableSampler:
    return BivStableSampler(BivStable4Atom(alpha))


def _path(outdir: str, filename: str) -> str:
    return os.path.join(outdir, filename)


# =========================
# 推定量の実験
# =========================

def example_moments(scale: ExperimentScale, seed: int, threads: Optional[int], outdir: str) -> Dict[str, Any]:
    """2変量正規の例の条件付きモーメント"""
    moments = population_moments_mc(normal_example_sampler(), EXAMPLE_SPLIT, EXAMPLE_SPLIT, scale.ref_draws, seed)
    cor = moments.cov / np.sqrt(moments.var_x * moments.var_y)
    row = {
        'mean_x': moments.mean_x, 'mean_y': moments.mean_y,
        'var_x': moments.var_x, 'var_y': moments.var_y,
        'cov': moments.cov, 'cor': float(cor), 'count': moments.count,
    }
    write_csv(pd.DataFrame([row]), _path(outdir, 'example_moments.csv'),
              {'experiment': 'example_moments', 'N': scale.ref_draws, 'seed': seed})
    return row


def _example_samplers() -> Dict[str, Any]:
    return {'normal': normal_example_sampler(), 'stable': stable_example_sampler(1.5)}


def consistency(scale: ExperimentScale, seed: int, threads: Optional[int], outdir: str) -> Dict[str, Any]:
    """単一軌道の推定値の推移と、n ごとの MSE"""
    summary = {}
    for name, sampler in _example_samplers().items():
        running = running_estimate(sampler, EXAMPLE_SPLIT, EXAMPLE_SPLIT, RUNNING_SIZES, seed)
        curve = mse_curve(sampler, EXAMPLE_SPLIT, EXAMPLE_SPLIT, CONSISTENCY_SIZES, scale.reps, seed,
                          ref_draws=scale.ref_draws, threads=threads)
        config = {'experiment': 'consistency', 'model': name, 'reps': scale.reps, 'seed': seed}
        write_csv(running, _path(outdir, f'running_{name}.csv'), config)
        write_csv(curve, _path(outdir, f'mse_{name}.csv'), config)
        summary[name] = {
            'rho_ref': float(curve['rho_ref'].iloc[0]),
            'mse_first': float(curve['mse_hat'].iloc[0]),
            'mse_last': float(curve['mse_hat'].iloc[-1]),
        }
    return summary


def error_ratio(scale: ExperimentScale, seed: int, threads: Optional[int], outdir: str) -> Dict[str, Any]:
    """Â の推定に起因する誤差の割合（n=200, 2000）"""
    rows = []
    for name, sampler in _example_samplers().items():
        for n in (200, 2000):
            result = set_error_decomposition(sampler, EXAMPLE_SPLIT, EXAMPLE_SPLIT, n, scale.reps, seed,
                                             ref_draws=scale.ref_draws, threads=threads)
            rows.append({'model': name, **result})

    table = pd.DataFrame(rows, columns=['model', 'n', 'mse_hat', 'msd', 'ratio', 'rho_ref'])
    write_csv(table, _path(outdir, 'error_ratio.csv'), {'experiment': 'error_ratio', 'reps': scale.reps, 'seed': seed})
    return {f"{row['model']}_{row['n']}": row['ratio'] for row in rows}


def normality(scale: ExperimentScale, seed: int, threads: Optional[int], outdir: str) -> Dict[str, Any]:
    """独立な正規ペアでの既知集合推定量の √n スケーリング"""
    sampler = BivariateNormalSampler((0.0, 0.0), ((1.0, 0.0), (0.0, 1.0)))
    result = known_set_scaling(sampler, EXAMPLE_SPLIT, EXAMPLE_SPLIT, 400, 1600, scale.normality_reps, seed, threads)
    write_csv(pd.DataFrame([result]), _path(outdir, 'normality.csv'),
              {'experiment': 'normality', 'reps': scale.normality_reps, 'seed': seed})
    return result


# =========================
# 検定の実験
# =========================

def type1(scale: ExperimentScale, seed: int, threads: Optional[int], outdir: str) -> Dict[str, Any]:
    """ガウス白色雑音での第一種過誤率（alpha = 0.05, 0.01）"""
    stats = [StatisticSpec.parse(text) for text in TYPE1_STATISTICS]
    sampler = build_sampler(ModelSpec('gaussian_wn'))
    m = 1000

    nulls = simulate_null_many(stats, sampler, m, scale.n_null, derive_seed(seed, 'type1:null'), threads)
    rows = []
    for alpha in (0.05, 0.01):
        regions = [rejection_region(nd, alpha) for nd in nulls]
        results = estimate_power_many(sampler, stats, regions, m, scale.m_trials,
                                      derive_seed(seed, 'type1:trials'), threads)
        for stat, result in zip(stats, results):
            rows.append({'statistic': stat.label(), 'alpha': alpha, 'rejection_rate': result.power})

    table = pd.DataFrame(rows, columns=['statistic', 'alpha', 'rejection_rate'])
    write_csv(table, _path(outdir, 'type1.csv'),
              {'experiment': 'type1', 'N': scale.n_null, 'M': scale.m_trials, 'm': m, 'seed': seed})
    return {f"{row['statistic']}@{row['alpha']}": row['rejection_rate'] for row in rows}


def _grid_experiment(name: str, data: Dict[str, Any], scale: ExperimentScale, seed: int,
                     threads: Optional[int], outdir: str) -> Dict[str, Any]:
    manifest = manifest_from_dict({'name': name, 'N': scale.n_null, 'M': scale.m_trials, 'seed': seed, **data})
    table = power_grid(manifest, _path(outdir, f'{name}.csv'), resume=True, threads=threads)
    return {'points': len(table), 'columns': list(table.columns)}


def ma1_discrete_power(scale, seed, threads, outdir):
    return _grid_experiment('ma1_discrete_power', {
        'family': 'ma1', 'noise': 'discrete', 'm': 1000,
        'grid': {'P': [0.01, 0.08, 0.15], 'r': [1.0, 8.0, 15.0], 'theta': [0.1, 0.5, 0.9]},
        'statistics': MA1_STATISTICS,
    }, scale, seed, threads, outdir)


def ma1_stable_power(scale, seed, threads, outdir):
    return _grid_experiment('ma1_stable_power', {
        'family': 'ma1', 'noise': 'stable', 'm': 1000,
        'grid': {'alpha': [1.05, 1.5, 2.0], 'c': [0.1, 0.7, 1.5], 'theta': [0.1, 0.5, 0.9]},
        'statistics': MA1_STATISTICS,
    }, scale, seed, threads, outdir)


# w0 = 0.001、w2 = 0.9 - w1
GARCH_FIXED = {"w0": 0.001, "w1_plus_w2": 0.9}


def garch_discrete_power(scale, seed, threads, outdir):
    return _grid_experiment('garch_discrete_power', {
        'family': 'garch', 'noise': 'discrete', 'm': 1000, 'null_burn_in': scale.burn_in,
        'fixed': dict(GARCH_FIXED),
        'grid': {'P': [0.01, 0.08, 0.15], 'r': [1.0, 8.0, 15.0], 'w1': [0.2, 0.4, 0.6]},
        'statistics': GARCH_DISCRETE_STATISTICS,
    }, scale, seed, threads, outdir)


def garch_stable_power(scale, seed, threads, outdir):
    return _grid_experiment('garch_stable_power', {
        'family': 'garch', 'noise': 'stable', 'm': 1000, 'null_burn_in': scale.burn_in,
        'fixed': dict(GARCH_FIXED),
        'grid': {'alpha': [1.05, 1.5, 2.0], 'c': [0.1, 0.3, 0.5], 'w1': [0.2, 0.4, 0.6]},
        'statistics': GARCH_STABLE_STATISTICS,
    }, scale, seed, threads, outdir)


def carpet_discrete(scale, seed, threads, outdir):
    """θ=0.5 の MA(1) + 離散雑音での (P, r) 平面上の検出力"""
    steps = scale.carpet_steps
    return _grid_experiment('carpet_discrete', {
        'family': 'ma1', 'noise': 'discrete', 'm': 1000, 'fixed': {'theta': 0.5},
        'grid': {'P': np.round(np.linspace(0.01, 0.15, steps), 6).tolist(),
                 'r': np.round(np.linspace(1.0, 15.0, steps), 6).tolist()},
        'statistics': ['cacf:0.01,0.99@1', 'acf@1'],
    }, scale, seed, threads, outdir)


def carpet_stable(scale, seed, threads, outdir):
    """θ=0.5 の MA(1) + 安定雑音での (alpha, c) 平面上の検出力"""
    steps = scale.carpet_steps
    return _grid_experiment('carpet_stable', {
        'family': 'ma1', 'noise': 'stable', 'm': 1000, 'fixed': {'theta': 0.5},
        'grid': {'alpha': np.round(np.linspace(1.05, 2.0, steps), 6).tolist(),
                 'c': np.round(np.linspace(0.1, 1.5, steps), 6).tolist()},
        'statistics': ['cacf:0.01,0.99@1', 'acf@1'],
    }, scale, seed, threads, outdir)


def bootstrap_calibration(scale: ExperimentScale, seed: int, threads: Optional[int], outdir: str) -> Dict[str, Any]:
    """i.i.d. Student-t(3) 系列（長さ501）でのブートストラップ検定の棄却率"""
    stats = [StatisticSpec.parse(text) for text in BOOTSTRAP_STATISTICS]
    rejects = np.zeros(len(stats))

    for index in range(scale.bootstrap_series):
        series = sample_student_t(3.0, 501, replicate_rng(seed, index))
        nulls = bootstrap_null_many(series, stats, scale.b_boot, derive_seed(seed, f'bootstrap:{index}'), threads)
        for j, (stat, nd) in enumerate(zip(stats, nulls)):
            estimate = evaluate_statistic(series, stat)
            rejects[j] += estimate.ok and rejection_region(nd, 0.05).rejects(estimate.value)

    rates = rejects / scale.bootstrap_series
    table = pd.DataFrame({'statistic': [stat.label() for stat in stats], 'rejection_rate': rates})
    write_csv(table, _path(outdir, 'bootstrap_calibration.csv'),
              {'experiment': 'bootstrap_calibration', 'series': scale.bootstrap_series,
               'B': scale.b_boot, 'seed': seed})
    return dict(zip(table['statistic'], table['rejection_rate'].astype(float)))


def correlograms(scale: ExperimentScale, seed: int, threads: Optional[int], outdir: str) -> Dict[str, Any]:
    """AR(1) と GARCH(1,1) の CACF / ACF と、対応する i.i.d. 帰無モデルのバンド"""
    m, max_lag = 250, 20
    models = {
        'ar1': (ModelSpec('ar1', {'phi': 0.5}), QuantileSplit(0.01, 0.99)),
        'garch': (ModelSpec('garch', {'w0': 0.01, 'w1': 0.6, 'w2': 0.2, 'burn_in': 1000}), QuantileSplit(0.01, 0.65)),
    }

    summary = {}
    for name, (spec, split) in models.items():
        path = build_sampler(spec)(m, replicate_rng(derive_seed(seed, name), 0))
        null_sampler = build_sampler(null_model(spec, scale.burn_in))
        config = {'experiment': 'correlograms', 'model': spec.to_dict(), 'm': m, 'N': scale.n_null, 'seed': seed}
        cond_bands = null_bands(m, max_lag, split, null_sampler, scale.n_null, 0.05,
                                derive_seed(seed, f'bands:{name}:cacf'), threads=threads)
        plain_bands = null_bands(m, max_lag, None, null_sampler, scale.n_null, 0.05,
                                 derive_seed(seed, f'bands:{name}:acf'), threads=threads)
        cond_table = correlogram_table(path, max_lag, split, cond_bands)
        plain_table = correlogram_table(path, max_lag, None, plain_bands)
        write_csv(cond_table, _path(outdir, f'cacf_{name}.csv'), config)
        write_csv(plain_table, _path(outdir, f'acf_{name}.csv'), config)

        first = cond_table.iloc[0]
        plain_first = plain_table.iloc[0]
        summary[name] = {
            'cacf_lag1': float(first['value']),
            'cacf_lag1_outside': bool(first['value'] < first['band_lo'] or first['value'] > first['band_hi']),
            'acf_lag1': float(plain_first['value']),
            'acf_lag1_outside': bool(plain_first['value'] < plain_first['band_lo']
                                     or plain_first['value'] > plain_first['band_hi']),
        }
    return summary


EXPERIMENTS: Dict[str, Callable[..., Dict[str, Any]]] = {
    'example_moments': example_moments,
    'consistency': consistency,
    'error_ratio': error_ratio,
    'normality': normality,
    'type1': type1,
    'ma1_discrete_power': ma1_discrete_power,
    'ma1_stable_power': ma1_stable_power,
    'garch_discrete_power': garch_discrete_power,
    'garch_stable_power': garch_stable_power,
    'carpet_discrete': carpet_discrete,
    'carpet_stable': carpet_stable,
    'bootstrap_calibration': bootstrap_calibration,
    'correlograms': correlograms,
}


def run_experiment(name: str, scale: str = 'desk', seed: int = 0, threads: Optional[int] = None,
                   outdir: str = 'results') -> Dict[str, Any]:
    """
    プリセットを実行
    Args:
        name: プリセット名（EXPERIMENTS のキー）
        scale: 'desk' または 'full'
        seed: 乱数シード
        threads: ワーカー数の上限
        outdir: 出力ディレクトリ
    Returns:
        Dict: 要約（digest と経過秒数を含む）
    Raises:
        InvalidParameter: 未知のプリセット・規模の場合
    """
    if name not in EXPERIMENTS:
        raise InvalidParameter(f"未知の実験です: {name}（{', '.join(EXPERIMENTS)}）")
    if scale not in SCALES:
        raise InvalidParameter(f"規模は {' / '.join(SCALES)} のいずれかで指定してください（現在: {scale}）")

    os.makedirs(outdir, exist_ok=True)
    config = {'experiment': name, 'scale': scale, 'seed': seed, 'parameters': SCALES[scale]._asdict()}
    started = time.perf_counter()

    summary = EXPERIMENTS[name](SCALES[scale], seed, threads, outdir)

    elapsed = time.perf_counter() - started
    result = {'experiment': name, 'digest': config_digest(config), 'config': config,
              'elapsed_seconds': round(elapsed, 2), 'summary': summary}
    write_json(result, _path(outdir, f'{name}.summary.json'))
    log_info(f"実験 {name} ({scale}) を完了 ({elapsed:.1f}s)", "EXPERIMENTS")
    return result


def list_experiments() -> List[str]:
    return list(EXPERIMENTS.keys())
