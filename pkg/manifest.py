# manifest.py
"""
検出力グリッドの実験マニフェスト（JSON）
読み込み・検証・グリッド点の展開・グリッド点からモデル記述子への変換
"""

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from data_io import load_json
from inference import StatisticSpec
from models import NoiseSpec, ModelSpec, UNIVARIATE_FAMILIES
from qcc_config import DEFAULT_ALPHA, DEFAULT_M_TRIALS, DEFAULT_N_NULL, DEFAULT_SEED
from validators import ManifestError, ValidationError, validate_alpha_level, validate_min_int, validate_required_fields

# 雑音の種類ごとのパラメータ名
NOISE_KEYS = {
    'none': (),
    'discrete': ('r', 'P'),
    'stable': ('alpha', 'c'),
}

# w2 = w1_plus_w2 - w1 として GARCH の係数を展開する
GARCH_SUM_KEY = 'w1_plus_w2'


@dataclass
class PowerManifest:
    """
    検出力グリッドの定義
    grid の各キーは雑音パラメータ（NOISE_KEYS）かモデルパラメータ、fixed は全点共通の値
    """
    name: str
    family: str
    noise: str
    grid: Dict[str, List[float]]
    statistics: List[StatisticSpec]
    fixed: Dict[str, Any] = field(default_factory=dict)
    m: int = 1000
    N: int = DEFAULT_N_NULL
    M: int = DEFAULT_M_TRIALS
    alpha: float = DEFAULT_ALPHA
    seed: int = DEFAULT_SEED
    null_burn_in: Optional[int] = None

    def grid_points(self) -> List[Dict[str, Any]]:
        """
        グリッド点の一覧（キーの記述順の直積、最後のキーが最も速く変わる）
        いずれかの値リストが空なら点はない
        """
        names = list(self.grid.keys())
        return [dict(zip(names, values)) for values in itertools.product(*(self.grid[name] for name in names))]

    def model_for(self, point: Dict[str, Any]) -> ModelSpec:
        """グリッド点のモデル記述子"""
        values = {**self.fixed, **point}
        noise_keys = NOISE_KEYS[self.noise]

        noise_data = {'kind': self.noise, **{key: values[key] for key in noise_keys if key in values}}
        params = {key: value for key, value in values.items() if key not in noise_keys}

        if GARCH_SUM_KEY in params:
            total = params.pop(GARCH_SUM_KEY)
            params['w2'] = round(total - params.get('w1', 0.0), 12)

        return ModelSpec(self.family, params, NoiseSpec.from_dict(noise_data))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'family': self.family,
            'noise': self.noise,
            'grid': self.grid,
            'fixed': self.fixed,
            'statistics': [stat.to_text() for stat in self.statistics],
            'm': self.m,
            'N': self.N,
            'M': self.M,
            'alpha': self.alpha,
            'seed': self.seed,
            'null_burn_in': self.null_burn_in,
        }


def manifest_from_dict(data: Dict[str, Any]) -> PowerManifest:
    """
    辞書からマニフェストを構築・検証
    Raises:
        ManifestError: 必須項目の欠落や不正な値がある場合
    """
    if not isinstance(data, dict):
        raise ManifestError("マニフェストは JSON オブジェクトである必要があります")
    validate_required_fields(data, ['family', 'grid', 'statistics'])

    family = data['family']
    if family not in UNIVARIATE_FAMILIES:
        raise ManifestError(f"検出力グリッドに使えないモデル族です: {family}（{', '.join(UNIVARIATE_FAMILIES)}）")

    noise = data.get('noise', 'none')
    if noise not in NOISE_KEYS:
        raise ManifestError(f"未知の雑音の種類です: {noise}")

    grid = data['grid']
    if not isinstance(grid, dict) or not all(isinstance(values, list) for values in grid.values()):
        raise ManifestError("grid は {パラメータ名: [値, ...]} の形式で指定してください")

    statistics = data['statistics']
    if not isinstance(statistics, list) or not statistics:
        raise ManifestError("statistics に統計量を1つ以上指定してください")

    try:
        manifest = PowerManifest(
            name=str(data.get('name', family)),
            family=family,
            noise=noise,
            grid={key: list(values) for key, values in grid.items()},
            statistics=[StatisticSpec.parse(text) for text in statistics],
            fixed=dict(data.get('fixed', {})),
            m=validate_min_int(data.get('m', 1000), 3, "m"),
            N=validate_min_int(data.get('N', DEFAULT_N_NULL), 100, "N"),
            M=validate_min_int(data.get('M', DEFAULT_M_TRIALS), 100, "M"),
            alpha=validate_alpha_level(data.get('alpha', DEFAULT_ALPHA)),
            seed=validate_min_int(data.get('seed', DEFAULT_SEED), 0, "seed"),
            null_burn_in=(validate_min_int(data['null_burn_in'], 1, "null_burn_in")
                          if data.get('null_burn_in') is not None else None),
        )
        # 先頭の点でモデルパラメータを検証
        points = manifest.grid_points()
        if points:
            manifest.model_for(points[0])
    except ManifestError:
        raise
    except ValidationError as e:
        raise ManifestError(f"マニフェストの値が不正です: {e}")
    except KeyError as e:
        raise ManifestError(f"パラメータ {e} が grid にも fixed にもありません")

    return manifest


def load_manifest(path: str) -> PowerManifest:
    """JSON ファイルからマニフェストを読み込む"""
    try:
        return manifest_from_dict(load_json(path))
    except ManifestError as e:
        raise ManifestError(f"{path}: {e}")
