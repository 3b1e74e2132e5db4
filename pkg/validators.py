# validators.py
"""
入力値の検証・エラー定義
パラメータ範囲チェック、サンプル長チェック、CLI向けの例外階層を実装
"""

import math
from typing import Any, Dict, List


class ValidationError(Exception):
    """カスタム検証エラー（CLIでは終了コード2）"""
    pass


class EmptySample(ValidationError):
    """空のサンプル"""
    pass


class IndexOutOfRange(ValidationError):
    """順序統計量のインデックスが範囲外"""
    pass


class LengthMismatch(ValidationError):
    """X と Y の長さが一致しない"""
    pass


class SeriesTooShort(ValidationError):
    """ラグに対して系列が短すぎる"""
    pass


class InvalidParameter(ValidationError):
    """モデル・統計量のパラメータが不正"""
    pass


class NotPositiveDefinite(ValidationError):
    """共分散行列が正定値でない"""
    pass


class AlphaTooSmallForN(ValidationError):
    """有意水準に対して帰無分布の標本数が足りない"""
    pass


class RequiresKnownQuantiles(ValidationError):
    """理論分位点関数を持たないサンプラー"""
    pass


class NonPositivePrice(ValidationError):
    """対数収益率の計算に非正の価格が含まれる"""
    pass


class ManifestError(ValidationError):
    """実験マニフェストの検証エラー"""
    pass


class ParseError(ValidationError):
    """CSV の解析エラー（行番号付き）"""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        if line:
            message = f"{line}行目: {message}"
        super().__init__(message)


class StatisticFailure(Exception):
    """
    統計量の推定ステータスが OK でない（CLIでは終了コード3）
    """

    def __init__(self, status, message: str = ""):
        self.status = status
        super().__init__(message or f"統計量を計算できません (status={status})")


def validate_probability(value: Any, name: str = "確率") -> float:
    """
    開区間 (0,1) の確率の検証
    Args:
        value: 確率値
        name: エラーメッセージに使うパラメータ名
    Returns:
        float: 検証済みの確率
    Raises:
        InvalidParameter: 数値でない、または範囲外の場合
    """
    try:
        prob = float(value)
    except (ValueError, TypeError):
        raise InvalidParameter(f"{name} は数値で指定してください")

    if not 0.0 < prob < 1.0:
        raise InvalidParameter(f"{name} は 0 と 1 の間で指定してください（現在: {prob}）")

    return prob


def validate_split(p: Any, q: Any) -> tuple:
    """
    分位点分割 (p,q) の検証 (0 < p < q < 1)
    Args:
        p: 下側の確率
        q: 上側の確率
    Returns:
        tuple: 検証済みの (p, q)
    Raises:
        InvalidParameter: 範囲外や p >= q の場合
    """
    p = validate_probability(p, "p")
    q = validate_probability(q, "q")

    if p >= q:
        raise InvalidParameter(f"p < q である必要があります（現在: p={p}, q={q}）")

    return p, q


def validate_alpha_level(alpha: Any) -> float:
    """第一種過誤率 α の検証"""
    return validate_probability(alpha, "alpha")


def validate_positive_int(value: Any, name: str) -> int:
    """
    正の整数の検証
    Args:
        value: 値
        name: パラメータ名
    Returns:
        int: 検証済みの整数
    Raises:
        InvalidParameter: 整数でない、または1未満の場合
    """
    return validate_min_int(value, 1, name)


def validate_min_int(value: Any, minimum: int, name: str) -> int:
    """
    下限付き整数の検証
    Raises:
        InvalidParameter: 整数でない、または minimum 未満の場合
    """
    if isinstance(value, bool):
        raise InvalidParameter(f"{name} は整数で指定してください")
    try:
        as_float = float(value)
    except (ValueError, TypeError):
        raise InvalidParameter(f"{name} は整数で指定してください")

    if not math.isfinite(as_float) or as_float != int(as_float):
        raise InvalidParameter(f"{name} は整数で指定してください（現在: {value}）")

    as_int = int(as_float)
    if as_int < minimum:
        raise InvalidParameter(f"{name} は {minimum} 以上で指定してください（現在: {as_int}）")

    return as_int


def validate_positive(value: Any, name: str) -> float:
    """正の実数の検証"""
    try:
        as_float = float(value)
    except (ValueError, TypeError):
        raise InvalidParameter(f"{name} は数値で指定してください")

    if not math.isfinite(as_float) or as_float <= 0:
        raise InvalidParameter(f"{name} は正の値で指定してください（現在: {value}）")

    return as_float


def validate_finite(value: Any, name: str) -> float:
    """有限の実数の検証"""
    try:
        as_float = float(value)
    except (ValueError, TypeError):
        raise InvalidParameter(f"{name} は数値で指定してください")

    if not math.isfinite(as_float):
        raise InvalidParameter(f"{name} は有限の値で指定してください")

    return as_float


def validate_stable_alpha(alpha: Any) -> float:
    """
    安定分布の指数 α ∈ (0,2] の検証
    Raises:
        InvalidParameter: 範囲外の場合
    """
    try:
        alpha_float = float(alpha)
    except (ValueError, TypeError):
        raise InvalidParameter("安定分布の alpha は数値で指定してください")

    if not 0.0 < alpha_float <= 2.0:
        raise InvalidParameter(f"安定分布の alpha は (0, 2] の範囲で指定してください（現在: {alpha_float}）")

    return alpha_float


def validate_required_fields(data: Dict[str, Any], required_fields: List[str]) -> None:
    """
    必須フィールドの一括チェック
    Args:
        data: チェックするデータ
        required_fields: 必須フィールドのリスト
    Raises:
        ManifestError: 必須フィールドが不足している場合
    """
    missing_fields = []
    for field in required_fields:
        if field not in data or data[field] is None or (isinstance(data[field], str) and not data[field].strip()):
            missing_fields.append(field)

    if missing_fields:
        raise ManifestError(f"以下の必須項目が指定されていません: {', '.join(missing_fields)}")


def safe_int(value: Any, default: int = 0) -> int:
    """安全に整数に変換"""
    try:
        return int(float(value))
    except (ValueError, TypeError):
        return default


def safe_float(value: Any, default: float = 0.0) -> float:
    """安全に浮動小数点数に変換"""
    try:
        return float(value)
    except (ValueError, TypeError):
        return default
