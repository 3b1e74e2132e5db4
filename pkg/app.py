# app.py
"""
分位点条件付き相関ツールキットのコマンドライン
使い方: python app.py <command> [options]
コマンド: estimate, cacf, test, power, simulate, panel, reproduce, log
終了コード: 0 = 実行完了（棄却/非棄却は出力データで表す）、2 = 入力不正、3 = 統計量の失敗・内部エラー
"""

import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional

import pandas as pd

from data_io import (
    config_digest,
    load_json,
    read_paired_csv,
    read_panel_csv,
    read_series_csv,
    write_csv,
    write_json,
)
from estimators import qcc_hat
from experiments import SCALES, list_experiments, run_experiment
from inference import (
    StatisticSpec,
    bootstrap_test,
    grid_config,
    panel_bootstrap,
    power_grid,
    rejection_region,
    run_test,
    simulate_null,
)
from logger import (
    get_log_statistics,
    log_error,
    log_maintenance_on_startup,
    log_run,
    log_warning,
    parse_log_line,
    read_log_file,
)
from manifest import load_manifest, manifest_from_dict
from models import ModelSpec, build_bivariate_sampler, build_sampler
from parallel import as_rng
from qcc_config import Settings, get_settings, validate_env_variables
from quantile_core import QuantileSplit
from serial import Series, correlogram_table, null_bands
from validators import InvalidParameter, StatisticFailure, ValidationError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAILURE = 3

# 実証研究の表の統計量
PANEL_STATISTICS = ['acf@1', 'acf2@1', 'cacf:0.15,0.55@1', 'cacf:0.55,0.85@1', 'cacf:0.01,0.65@1',
                    'cacf:0.01,0.75@1', 'cacf:0.01,0.85@1', 'cacf:0.45,0.99@1']


# =========================
# 引数の解釈
# =========================

def parse_splits(p_values: Optional[List[float]], q_values: Optional[List[float]],
                 required: bool = True) -> Optional[List[QuantileSplit]]:
    """
    --p/--q（周辺ごとに繰り返し指定）から分位点分割のリストを作る
    1つだけ指定された場合は両周辺に同じ分割を使う
    """
    p_values = p_values or []
    q_values = q_values or []
    if not p_values and not q_values:
        if required:
            raise InvalidParameter("--p と --q を指定してください")
        return None
    if len(p_values) != len(q_values) or len(p_values) > 2:
        raise InvalidParameter("--p と --q は同じ回数（1回または2回）指定してください")

    splits = [QuantileSplit(p, q) for p, q in zip(p_values, q_values)]
    return splits if len(splits) == 2 else splits * 2


def parse_key_values(items: Optional[List[str]]) -> Dict[str, Any]:
    """key=value の並びを辞書に変換（値は JSON として解釈し、失敗すれば文字列）"""
    result = {}
    for item in items or []:
        if '=' not in item:
            raise InvalidParameter(f"key=value の形式で指定してください: '{item}'")
        key, value = item.split('=', 1)
        try:
            result[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            result[key.strip()] = value
    return result


def parse_model(args: argparse.Namespace, default_family: Optional[str] = None) -> ModelSpec:
    """
    --model（JSON 文字列または JSON ファイル）か --family/--param/--noise/--noise-param からモデルを作る
    """
    if getattr(args, 'model', None):
        text = args.model
        if os.path.exists(text):
            data = load_json(text)
        else:
            try:
                data = json.loads(text)
            except json.JSONDecodeError as e:
                raise InvalidParameter(f"--model の JSON が不正です: {e.msg}")
    else:
        family = getattr(args, 'family', None) or default_family
        if not family:
            raise InvalidParameter("--model または --family を指定してください")
        data = {'family': family, **parse_key_values(getattr(args, 'param', None))}
        noise = getattr(args, 'noise', None)
        if noise and noise != 'none':
            data['noise'] = {'kind': noise, **parse_key_values(getattr(args, 'noise_param', None))}

    if not isinstance(data, dict):
        raise InvalidParameter("モデルは JSON オブジェクトで指定してください")
    if getattr(args, 'burn_in', None) is not None and data.get('family') in ('garch', 'garch_iid'):
        data['burn_in'] = args.burn_in
    return ModelSpec.from_dict(data)


def parse_statistic(args: argparse.Namespace) -> StatisticSpec:
    """--stat、または --p/--q/--lag から統計量を作る"""
    if args.stat:
        return StatisticSpec.parse(args.stat)
    splits = parse_splits(args.p, args.q, required=False)
    if splits is None:
        return StatisticSpec.autocorr(args.lag)
    return StatisticSpec.cond_autocorr(splits[0].p, splits[0].q, args.lag)


def settings_from(args: argparse.Namespace) -> Settings:
    return get_settings({
        'seed': getattr(args, 'seed', None),
        'threads': getattr(args, 'threads', None),
        'alpha': getattr(args, 'alpha', None),
        'n_null': getattr(args, 'n_null', None),
        'm_trials': getattr(args, 'm_trials', None),
        'b_boot': getattr(args, 'b_boot', None),
        'burn_in': getattr(args, 'burn_in', None),
    })


def run_config(args: argparse.Namespace, settings: Settings, **extra) -> Dict[str, Any]:
    """ダイジェストの対象となる実行設定"""
    arguments = {key: value for key, value in vars(args).items() if key not in ('func', 'threads')}
    config = {'command': args.command, 'arguments': arguments, 'settings': settings._asdict(), **extra}
    config['settings'].pop('threads', None)
    return config


# =========================
# コマンド
# =========================

def cmd_estimate(args: argparse.Namespace) -> int:
    """対になったサンプルの QCC"""
    settings = settings_from(args)
    split_x, split_y = parse_splits(args.p, args.q)
    X, Y = read_paired_csv(args.input)
    estimate = qcc_hat(X, Y, split_x, split_y)

    config = run_config(args, settings)
    digest = config_digest(config)
    report = {
        'value': estimate.value,
        'status': str(estimate.status),
        'count': estimate.count,
        'n': int(X.size),
        'rectangle': estimate.rect.corners() if estimate.rect is not None else None,
        'digest': digest,
        'config': config,
    }
    write_json(report, args.output)
    log_run('estimate', digest, f"value={estimate.value}, status={estimate.status}")
    return EXIT_OK


def cmd_cacf(args: argparse.Namespace) -> int:
    """コレログラム（CACF、または --p/--q 省略時は ACF）の CSV"""
    settings = settings_from(args)
    splits = parse_splits(args.p, args.q, required=False)
    split = splits[0] if splits else None
    series = Series(read_series_csv(args.input, args.log_returns))

    bands = None
    if args.bands:
        null_spec = parse_model(args, default_family='gaussian_wn')
        bands = null_bands(len(series), args.max_lag, split, build_sampler(null_spec), settings.n_null,
                           settings.alpha, settings.seed, squared=args.squared, threads=settings.threads)

    table = correlogram_table(series, args.max_lag, split, bands, squared=args.squared)
    digest = write_csv(table, args.output, run_config(args, settings))
    log_run('cacf', digest, f"m={len(series)}, max_lag={args.max_lag}")
    return EXIT_OK


def cmd_test(args: argparse.Namespace) -> int:
    """モンテカルロ帰無分布またはブートストラップによる独立性検定"""
    settings = settings_from(args)
    stat = parse_statistic(args)
    series = Series(read_series_csv(args.input, args.log_returns))

    if args.mode == 'bootstrap':
        result = bootstrap_test(series, stat, settings.b_boot, settings.alpha, settings.seed, settings.threads)
        extra = {'B': settings.b_boot}
    else:
        null_spec = parse_model(args, default_family='gaussian_wn')
        nd = simulate_null(stat, build_sampler(null_spec), len(series), settings.n_null,
                           settings.seed, settings.threads)
        result = run_test(series, stat, rejection_region(nd, settings.alpha))
        extra = {'N': settings.n_null, 'null_model': null_spec.to_dict(), 'non_ok': nd.non_ok}

    config = run_config(args, settings, statistic=stat.to_dict())
    digest = config_digest(config)
    verdict = {
        'statistic': stat.label(),
        'value': result.statistic_value,
        'lo': result.region.lo,
        'hi': result.region.hi,
        'reject': result.reject,
        'alpha': settings.alpha,
        'mode': args.mode,
        **extra,
        'digest': digest,
        'config': config,
    }
    write_json(verdict, args.output)
    log_run('test', digest, f"{stat.label()}={result.statistic_value}, reject={result.reject}")
    return EXIT_OK


def cmd_power(args: argparse.Namespace) -> int:
    """マニフェストの検出力グリッド"""
    manifest = load_manifest(args.manifest)
    overrides = {key: value for key, value in (('N', args.n_null), ('M', args.m_trials), ('seed', args.seed))
                 if value is not None}
    if overrides:
        manifest = manifest_from_dict({**manifest.to_dict(), **overrides})
    table = power_grid(manifest, args.output, resume=args.resume, threads=args.threads)
    digest = config_digest(grid_config(manifest))
    if args.output is None:
        write_csv(table)
    log_run('power', digest, f"{manifest.name}: {len(table)} 点")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    """モデルから系列を生成して CSV に書き出す"""
    settings = settings_from(args)
    spec = parse_model(args)
    rng = as_rng(settings.seed)

    if spec.is_bivariate:
        if spec.noise.kind != 'none':
            log_warning("2変量モデルでは外部雑音を無視します", "SIMULATE")
        X, Y = build_bivariate_sampler(spec).draw(args.n, rng)
        table = pd.DataFrame({'x': X, 'y': Y})
    else:
        table = pd.DataFrame({'value': build_sampler(spec)(args.n, rng)})

    digest = write_csv(table, args.output, run_config(args, settings, model=spec.to_dict()))
    log_run('simulate', digest, f"{spec.family} n={args.n}")
    return EXIT_OK


def cmd_panel(args: argparse.Namespace) -> int:
    """複数系列のブートストラップ検定（Rejects % / U %）"""
    settings = settings_from(args)
    stats = [StatisticSpec.parse(text) for text in (args.stat or PANEL_STATISTICS)]
    panel = read_panel_csv(args.input, args.log_returns)

    table = panel_bootstrap(panel, stats, settings.b_boot, settings.alpha, settings.seed, threads=settings.threads)
    digest = write_csv(table, args.output, run_config(args, settings, series=len(panel.columns)))
    log_run('panel', digest, f"{len(panel.columns)} 系列")
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace) -> int:
    """実験プリセットの再現"""
    settings = settings_from(args)
    result = run_experiment(args.experiment, args.scale, settings.seed, settings.threads, args.outdir)
    write_json({key: result[key] for key in ('experiment', 'digest', 'elapsed_seconds', 'summary')})
    log_run('reproduce', result['digest'], f"{args.experiment} ({args.scale})")
    return EXIT_OK


def cmd_log(args: argparse.Namespace) -> int:
    """ログの統計と最新の行"""
    stats = get_log_statistics()
    print(f"行数: {stats['total_lines']}  ERROR: {stats['error_count']}  "
          f"WARNING: {stats['warning_count']}  INFO: {stats['info_count']}  サイズ: {stats['file_size_mb']} MB")
    for line in read_log_file(args.lines):
        entry = parse_log_line(line)
        if args.level and entry['level'] != args.level:
            continue
        print(f"{entry['datetime']} [{entry['level']}] {entry['message']}")
    return EXIT_OK


# =========================
# パーサー
# =========================

def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help="乱数シード（既定: QCC_SEED）")
    common.add_argument('--threads', type=int, help="ワーカー数の上限（結果は変わらない）")
    common.add_argument('-o', '--output', help="出力ファイル（省略時は標準出力）")
    return common


def _add_split_args(parser: argparse.ArgumentParser):
    parser.add_argument('--p', type=float, action='append', help="分位点分割の下側確率（周辺ごとに繰り返し可）")
    parser.add_argument('--q', type=float, action='append', help="分位点分割の上側確率（周辺ごとに繰り返し可）")


def _add_model_args(parser: argparse.ArgumentParser):
    parser.add_argument('--model', help="モデルの JSON（文字列またはファイル）")
    parser.add_argument('--family', help="モデル族（gaussian_wn, ma1, ar1, garch, garch_iid, student_t, ...）")
    parser.add_argument('--param', action='append', help="モデルパラメータ key=value")
    parser.add_argument('--noise', choices=['none', 'discrete', 'stable'], help="外部雑音の種類")
    parser.add_argument('--noise-param', action='append', help="雑音パラメータ key=value（r, P / alpha, c）")
    parser.add_argument('--burn-in', type=int, help="GARCH のバーンイン")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog='app.py', description="分位点条件付き相関と系列独立性検定のツールキット")
    subparsers = parser.add_subparsers(dest='command', required=True)

    estimate = subparsers.add_parser('estimate', parents=[common], help="2列 CSV の QCC")
    estimate.add_argument('input', help="2列の数値 CSV（'-' は標準入力）")
    _add_split_args(estimate)
    estimate.set_defaults(func=cmd_estimate)

    cacf = subparsers.add_parser('cacf', parents=[common], help="コレログラム CSV")
    cacf.add_argument('input', help="系列の CSV（1列、または 日付,値）")
    _add_split_args(cacf)
    cacf.add_argument('--max-lag', type=int, default=20)
    cacf.add_argument('--squared', action='store_true', help="二乗系列の ACF（--p/--q なしのとき）")
    cacf.add_argument('--log-returns', action='store_true', help="値を価格とみなして対数収益率に変換")
    cacf.add_argument('--bands', action='store_true', help="帰無モデルのシミュレーションによる信頼バンドを付ける")
    cacf.add_argument('--alpha', type=float)
    cacf.add_argument('--n-null', type=int)
    _add_model_args(cacf)
    cacf.set_defaults(func=cmd_cacf)

    test = subparsers.add_parser('test', parents=[common], help="系列独立性検定（JSON）")
    test.add_argument('input', help="系列の CSV")
    test.add_argument('--stat', help="統計量（例: cacf:0.01,0.99@1, acf@1, acf2@1）")
    _add_split_args(test)
    test.add_argument('--lag', type=int, default=1)
    test.add_argument('--mode', choices=['mc', 'bootstrap'], default='mc')
    test.add_argument('--log-returns', action='store_true')
    test.add_argument('--alpha', type=float)
    test.add_argument('--n-null', type=int)
    test.add_argument('--b-boot', type=int)
    _add_model_args(test)
    test.set_defaults(func=cmd_test)

    power = subparsers.add_parser('power', parents=[common], help="マニフェストの検出力グリッド")
    power.add_argument('manifest', help="実験マニフェスト（JSON）")
    power.add_argument('--resume', action='store_true', help="既存の出力にある点を再計算しない")
    power.add_argument('--n-null', type=int, help="マニフェストの N を上書き")
    power.add_argument('--m-trials', type=int, help="マニフェストの M を上書き")
    power.set_defaults(func=cmd_power)

    simulate = subparsers.add_parser('simulate', parents=[common], help="モデルから系列を生成")
    simulate.add_argument('--n', type=int, default=1000)
    _add_model_args(simulate)
    simulate.set_defaults(func=cmd_simulate)

    panel = subparsers.add_parser('panel', parents=[common], help="複数系列のブートストラップ検定")
    panel.add_argument('input', help="1列 = 1系列の CSV（先頭に日付列があってもよい）")
    panel.add_argument('--stat', action='append', help="統計量（繰り返し可、省略時は実証研究の8統計量）")
    panel.add_argument('--log-returns', action='store_true')
    panel.add_argument('--alpha', type=float)
    panel.add_argument('--b-boot', type=int)
    panel.set_defaults(func=cmd_panel)

    reproduce = subparsers.add_parser('reproduce', parents=[common], help="実験プリセットの再現")
    reproduce.add_argument('experiment', choices=list_experiments())
    reproduce.add_argument('--scale', choices=list(SCALES), default='desk')
    reproduce.add_argument('--outdir', default='results')
    reproduce.set_defaults(func=cmd_reproduce)

    log = subparsers.add_parser('log', help="ログの統計と最新の行")
    log.add_argument('--lines', type=int, default=20)
    log.add_argument('--level', choices=['INFO', 'WARNING', 'ERROR'])
    log.set_defaults(func=cmd_log)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    log_maintenance_on_startup()
    for problem in validate_env_variables():
        log_warning(problem, "ENV")

    args = build_parser().parse_args(argv)

    try:
        return args.func(args)
    except ValidationError as e:
        log_error(e, args.command.upper())
        print(f"入力エラー: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        log_error(e, args.command.upper(), {'path': getattr(e, 'filename', '')})
        print(f"ファイルエラー: {e}", file=sys.stderr)
        return EXIT_INVALID
    except StatisticFailure as e:
        log_error(e, args.command.upper(), {'status': e.status})
        print(f"統計量エラー: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        log_error(e, args.command.upper())
        print(f"内部エラー: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
