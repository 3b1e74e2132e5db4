"""
共通設定モジュール
.env / 環境変数からの既定値の読み込み、検証、CLI 引数との統合
"""
import os
from typing import Any, Dict, List, NamedTuple, Optional

from dotenv import load_dotenv

from validators import safe_float, safe_int

# .env から読み込み（既存の環境変数は上書きしない）
load_dotenv()

DEFAULT_SEED = 20240101

# 定常 GARCH 標本のバーンイン（デスク規模の実験では縮小して使う）
DEFAULT_BURN_IN = 10000
# 従属パス（対立仮説側）のバーンイン
DEFAULT_PATH_BURN_IN = 1000

# モンテカルロ規模
DEFAULT_N_NULL = 1000
DEFAULT_M_TRIALS = 1000
DEFAULT_B_BOOT = 10000
DEFAULT_ALPHA = 0.05

LOG_FILE = os.getenv("QCC_LOG_FILE", "qcc.log")
LOG_LEVEL = os.getenv("QCC_LOG_LEVEL", "WARNING")

# 環境変数名 → (説明, 型)
ENV_VARIABLES = {
    "QCC_SEED": ("乱数シードの既定値", "int"),
    "QCC_THREADS": ("ワーカースレッド数の上限", "int"),
    "QCC_BURN_IN": ("定常 GARCH 標本のバーンイン", "int"),
    "QCC_PATH_BURN_IN": ("GARCH パスのバーンイン", "int"),
    "QCC_N_NULL": ("帰無分布のモンテカルロ標本数 N", "int"),
    "QCC_M_TRIALS": ("検出力推定の試行数 M", "int"),
    "QCC_B_BOOT": ("ブートストラップ再標本数 B", "int"),
    "QCC_ALPHA": ("第一種過誤率", "float"),
}


class Settings(NamedTuple):
    """実行時設定"""
    seed: int
    threads: int
    burn_in: int
    path_burn_in: int
    n_null: int
    m_trials: int
    b_boot: int
    alpha: float


def validate_env_variables() -> List[str]:
    """
    設定済みの環境変数の値を検証
    Returns:
        List[str]: 問題点のリスト（空なら問題なし）
    """
    problems = []

    for var, (description, kind) in ENV_VARIABLES.items():
        value = os.getenv(var)
        if value is None or not value.strip():
            continue

        if kind == "int":
            parsed = safe_int(value, default=-1)
            if parsed < 0 or str(parsed) != value.strip():
                problems.append(f"- {var}: {description} は0以上の整数である必要があります（現在: {value}）")
            elif parsed == 0 and var != "QCC_SEED":
                problems.append(f"- {var}: {description} は1以上である必要があります")
        else:
            parsed = safe_float(value, default=-1.0)
            if not 0.0 < parsed < 1.0:
                problems.append(f"- {var}: {description} は (0,1) の範囲である必要があります（現在: {value}）")

    return problems


def _env_int(var: str, default: int) -> int:
    value = safe_int(os.getenv(var, ""), default=default)
    return value if value > 0 or (var == "QCC_SEED" and value == 0) else default


def get_thread_count(requested: Optional[int] = None) -> int:
    """
    ワーカー数を決定（CLI 指定 > 環境変数 > CPU 数）
    Args:
        requested: CLI で指定されたスレッド数
    Returns:
        int: 1以上のワーカー数
    """
    if requested is not None and requested > 0:
        return int(requested)
    return _env_int("QCC_THREADS", os.cpu_count() or 1)


def get_settings(overrides: Optional[Dict[str, Any]] = None) -> Settings:
    """
    既定値・環境変数・CLI 指定を統合した設定を取得
    Args:
        overrides: CLI などからの上書き（None の値は無視）
    Returns:
        Settings: 実行時設定
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    alpha = safe_float(os.getenv("QCC_ALPHA", ""), default=DEFAULT_ALPHA)
    if not 0.0 < alpha < 1.0:
        alpha = DEFAULT_ALPHA

    settings = Settings(
        seed=_env_int("QCC_SEED", DEFAULT_SEED),
        threads=get_thread_count(overrides.get("threads")),
        burn_in=_env_int("QCC_BURN_IN", DEFAULT_BURN_IN),
        path_burn_in=_env_int("QCC_PATH_BURN_IN", DEFAULT_PATH_BURN_IN),
        n_null=_env_int("QCC_N_NULL", DEFAULT_N_NULL),
        m_trials=_env_int("QCC_M_TRIALS", DEFAULT_M_TRIALS),
        b_boot=_env_int("QCC_B_BOOT", DEFAULT_B_BOOT),
        alpha=alpha,
    )

    return settings._replace(**{k: v for k, v in overrides.items() if k in Settings._fields and k != "threads"})
