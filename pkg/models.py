# models.py
"""
確率モデルのサンプラー
ガウス白色雑音、2変量正規、対称 α 安定（1変量・4原子スペクトル測度の2変量）、
離散ジャンプ雑音、MA(1)、AR(1)、GARCH(1,1) のパスと定常 i.i.d. 標本、加法的な汚染
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import signal
from scipy import stats

from parallel import as_rng
from qcc_config import DEFAULT_BURN_IN, get_settings
from validators import (
    InvalidParameter,
    NotPositiveDefinite,
    validate_finite,
    validate_min_int,
    validate_positive,
    validate_stable_alpha,
)

# 定常 i.i.d. GARCH 標本に必要な最小バーンイン
MIN_IID_BURN_IN = 500
HALF_SQRT2 = math.sqrt(2.0) / 2.0

# 4原子スペクトル測度の原子（各質量 1/4）
STABLE_ATOMS = np.array([
    [HALF_SQRT2, HALF_SQRT2],
    [-HALF_SQRT2, -HALF_SQRT2],
    [-HALF_SQRT2, HALF_SQRT2],
    [HALF_SQRT2, -HALF_SQRT2],
])


# =========================
# パラメータ型
# =========================

@dataclass(frozen=True)
class NoiseSpec:
    """
    外部雑音の記述子
    kind: 'none' / 'discrete'（±r を確率 P/2 ずつ、0 を確率 1-P）/ 'stable'（S(alpha, c)）
    """
    kind: str = 'none'
    r: float = 0.0
    P: float = 0.0
    alpha: float = 2.0
    c: float = 1.0

    def __post_init__(self):
        if self.kind == 'discrete':
            object.__setattr__(self, 'r', validate_positive(self.r, "r"))
            P = validate_finite(self.P, "P")
            if not 0.0 <= P < 0.5:
                raise InvalidParameter(f"ジャンプ確率 P は [0, 0.5) の範囲で指定してください（現在: {P}）")
            object.__setattr__(self, 'P', P)
        elif self.kind == 'stable':
            object.__setattr__(self, 'alpha', validate_stable_alpha(self.alpha))
            object.__setattr__(self, 'c', validate_positive(self.c, "c"))
        elif self.kind != 'none':
            raise InvalidParameter(f"未知の雑音の種類です: {self.kind}")

    @classmethod
    def none(cls) -> 'NoiseSpec':
        return cls('none')

    @classmethod
    def discrete(cls, r: float, P: float) -> 'NoiseSpec':
        return cls('discrete', r=r, P=P)

    @classmethod
    def stable(cls, alpha: float, c: float) -> 'NoiseSpec':
        return cls('stable', alpha=alpha, c=c)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> 'NoiseSpec':
        if not data:
            return cls.none()
        kind = data.get('kind', 'none')
        if kind == 'discrete':
            return cls.discrete(data.get('r'), data.get('P'))
        if kind == 'stable':
            return cls.stable(data.get('alpha'), data.get('c'))
        return cls(kind)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == 'discrete':
            return {'kind': 'discrete', 'r': self.r, 'P': self.P}
        if self.kind == 'stable':
            return {'kind': 'stable', 'alpha': self.alpha, 'c': self.c}
        return {'kind': 'none'}

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == 'discrete':
            return _draw_discrete(self.r, self.P, n, rng)
        if self.kind == 'stable':
            return _draw_sas(self.alpha, self.c, n, rng)
        return np.zeros(n)


@dataclass(frozen=True)
class MA1Params:
    """正規化 MA(1): Z_t = (θ ε_{t-1} + ε_t) / √(1+θ²)"""
    theta: float

    def __post_init__(self):
        object.__setattr__(self, 'theta', validate_finite(self.theta, "theta"))


@dataclass(frozen=True)
class AR1Params:
    """AR(1): Z_t = φ Z_{t-1} + ε_t、|φ| < 1"""
    phi: float

    def __post_init__(self):
        phi = validate_finite(self.phi, "phi")
        if abs(phi) >= 1:
            raise InvalidParameter(f"AR(1) の phi は |phi| < 1 で指定してください（現在: {phi}）")
        object.__setattr__(self, 'phi', phi)


@dataclass(frozen=True)
class GarchParams:
    """GARCH(1,1) の係数 ω0 > 0, ω1, ω2 ≥ 0, ω1 + ω2 < 1 とバーンイン"""
    w0: float
    w1: float
    w2: float
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        object.__setattr__(self, 'w0', validate_positive(self.w0, "w0"))
        for name in ('w1', 'w2'):
            value = validate_finite(getattr(self, name), name)
            if value < 0:
                raise InvalidParameter(f"{name} は0以上で指定してください（現在: {value}）")
            object.__setattr__(self, name, value)
        if self.w1 + self.w2 >= 1:
            raise InvalidParameter(f"定常性のため w1 + w2 < 1 が必要です（現在: {self.w1 + self.w2}）")
        object.__setattr__(self, 'burn_in', validate_min_int(self.burn_in, 1, "burn_in"))

    @property
    def stationary_variance(self) -> float:
        return self.w0 / (1.0 - self.w1 - self.w2)


@dataclass(frozen=True)
class BivStable4Atom:
    """スペクトル測度が (±√2/2, ±√2/2) に質量 1/4 ずつの2変量対称 α 安定分布"""
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, 'alpha', validate_stable_alpha(self.alpha))

    @property
    def marginal_scale(self) -> float:
        # σ^α = ∫|s_1|^α Γ(ds) = (√2/2)^α
        return HALF_SQRT2


# =========================
# 乱数生成（Generator を受け取る内部関数）
# =========================

def _draw_sas(alpha: float, c: float, n, rng: np.random.Generator) -> np.ndarray:
    # Chambers–Mallows–Stuck 変換（β=0 では 0-/1-パラメータ化が一致）
    if alpha == 2.0:
        return math.sqrt(2.0) * c * rng.standard_normal(n)

    phi = rng.uniform(-math.pi / 2, math.pi / 2, n)
    if alpha == 1.0:
        return c * np.tan(phi)

    w = rng.standard_exponential(n)
    return c * (np.sin(alpha * phi) / np.cos(phi) ** (1.0 / alpha)
                * (np.cos((1.0 - alpha) * phi) / w) ** ((1.0 - alpha) / alpha))


def _draw_discrete(r: float, P: float, n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    return np.where(u < P / 2, r, np.where(u < P, -r, 0.0))


def _draw_ma1(theta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    eps = rng.standard_normal(n + 1)
    return (theta * eps[:-1] + eps[1:]) / math.sqrt(1.0 + theta * theta)


def _draw_ar1(phi: float, n: int, rng: np.random.Generator) -> np.ndarray:
    # 初期値を定常分布 N(0, 1/(1-φ²)) から取り、以降は再帰
    innovations = rng.standard_normal(n)
    innovations[0] /= math.sqrt(1.0 - phi * phi)
    return signal.lfilter([1.0], [1.0, -phi], innovations)


def _draw_garch_path(params: GarchParams, n: int, rng: np.random.Generator) -> np.ndarray:
    eps = rng.standard_normal(params.burn_in + n + 1)
    sigma2 = params.stationary_variance
    e = math.sqrt(sigma2) * eps[0]

    path = np.empty(n)
    for t in range(1, params.burn_in + n + 1):
        sigma2 = params.w0 + params.w1 * e * e + params.w2 * sigma2
        e = math.sqrt(sigma2) * eps[t]
        if t > params.burn_in:
            path[t - params.burn_in - 1] = e

    return path / math.sqrt(params.stationary_variance)


def _draw_garch_iid(params: GarchParams, n: int, rng: np.random.Generator) -> np.ndarray:
    # n 本の独立な連鎖を並べて同時に burn_in ステップ進める
    sigma2 = np.full(n, params.stationary_variance)
    e = np.sqrt(sigma2) * rng.standard_normal(n)

    for _ in range(params.burn_in):
        sigma2 = params.w0 + params.w1 * e * e + params.w2 * sigma2
        e = np.sqrt(sigma2) * rng.standard_normal(n)

    return e / math.sqrt(params.stationary_variance)


# =========================
# 公開サンプラー（seed は整数または Generator）
# =========================

def sample_gaussian_wn(n: int, seed) -> np.ndarray:
    """
    標準ガウス白色雑音
    Args:
        n: 標本数（1以上）
        seed: 乱数シード
    Returns:
        np.ndarray: n 個の i.i.d. N(0,1)
    """
    n = validate_min_int(n, 1, "n")
    return as_rng(seed).standard_normal(n)


def sample_student_t(df: float, n: int, seed) -> np.ndarray:
    """自由度 df の i.i.d. Student-t 標本"""
    df = validate_positive(df, "df")
    n = validate_min_int(n, 1, "n")
    return as_rng(seed).standard_t(df, n)


def _cholesky(cov_matrix) -> np.ndarray:
    cov = np.asarray(cov_matrix, dtype=float)
    if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
        raise NotPositiveDefinite("共分散行列は 2×2 の対称行列で指定してください")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("共分散行列が正定値ではありません")


def sample_bivariate_normal(mu: Sequence[float], cov_matrix, n: int, seed) -> Tuple[np.ndarray, np.ndarray]:
    """
    2変量正規分布（共分散行列の Cholesky 分解による）
    Args:
        mu: 平均ベクトル (2,)
        cov_matrix: 2×2 の対称正定値行列
        n: 標本数
        seed: 乱数シード
    Returns:
        Tuple[np.ndarray, np.ndarray]: (X, Y)
    Raises:
        NotPositiveDefinite: 共分散行列が不正な場合
    """
    n = validate_min_int(n, 1, "n")
    chol = _cholesky(cov_matrix)
    z = as_rng(seed).standard_normal((n, 2))
    pairs = z @ chol.T + np.asarray(mu, dtype=float)
    return pairs[:, 0], pairs[:, 1]


def sample_sas(alpha: float, c: float, n: int, seed) -> np.ndarray:
    """
    対称 α 安定分布 S(α, c)
    Args:
        alpha: 安定指数 (0,2]
        c: スケール (>0)
        n: 標本数
        seed: 乱数シード
    Returns:
        np.ndarray: 特性関数 exp(-|cθ|^α) の i.i.d. 標本（α=2 は N(0, 2c²)）
    Raises:
        InvalidParameter: パラメータが範囲外の場合
    """
    alpha = validate_stable_alpha(alpha)
    c = validate_positive(c, "c")
    n = validate_min_int(n, 1, "n")
    return _draw_sas(alpha, c, n, as_rng(seed))


def sample_biv_stable_4atom(spec: BivStable4Atom, n: int, seed) -> Tuple[np.ndarray, np.ndarray]:
    """
    4原子スペクトル測度の2変量対称 α 安定分布
    (X, Y) = Σ_j (1/4)^{1/α} s_j Z_j、Z_j は独立な標準 SαS
    Args:
        spec: 分布の記述子
        n: 標本数
        seed: 乱数シード
    Returns:
        Tuple[np.ndarray, np.ndarray]: (X, Y)
    """
    n = validate_min_int(n, 1, "n")
    z = _draw_sas(spec.alpha, 1.0, (len(STABLE_ATOMS), n), as_rng(seed))
    weight = 0.25 ** (1.0 / spec.alpha)
    pairs = weight * (STABLE_ATOMS.T @ z)
    return pairs[0], pairs[1]


def sample_discrete_noise(r: float, P: float, n: int, seed) -> np.ndarray:
    """
    離散ジャンプ雑音 {+r, -r, 0}（確率 P/2, P/2, 1-P）
    Raises:
        InvalidParameter: r <= 0 または P が [0, 0.5) の外の場合
    """
    noise = NoiseSpec.discrete(r, P)
    n = validate_min_int(n, 1, "n")
    return _draw_discrete(noise.r, noise.P, n, as_rng(seed))


def sample_ma1(theta: float, n: int, seed) -> np.ndarray:
    """
    分散1に正規化した MA(1)。n+1 個のガウス革新から n 個を生成（バーンイン不要）
    """
    params = MA1Params(theta)
    n = validate_min_int(n, 1, "n")
    return _draw_ma1(params.theta, n, as_rng(seed))


def sample_ar1(phi: float, n: int, seed) -> np.ndarray:
    """
    定常分布から開始する AR(1)
    Raises:
        InvalidParameter: |phi| >= 1 の場合
    """
    params = AR1Params(phi)
    n = validate_min_int(n, 1, "n")
    return _draw_ar1(params.phi, n, as_rng(seed))


def sample_garch11_path(params: GarchParams, n: int, seed) -> np.ndarray:
    """
    GARCH(1,1) の従属パス
    σ²_0 = ω0/(1-ω1-ω2) から再帰を開始し、burn_in ステップ捨てた後の n 個を
    定常分散で割って返す
    """
    n = validate_min_int(n, 1, "n")
    return _draw_garch_path(params, n, as_rng(seed))


def sample_garch11_iid(params: GarchParams, n: int, seed) -> np.ndarray:
    """
    GARCH(1,1) 定常分布からの独立標本（各値が独立な burn_in ステップの再帰）
    Raises:
        InvalidParameter: burn_in < 500 の場合
    """
    validate_min_int(params.burn_in, MIN_IID_BURN_IN, "burn_in")
    n = validate_min_int(n, 1, "n")
    return _draw_garch_iid(params, n, as_rng(seed))


def corrupt(series: Sequence[float], noise: NoiseSpec, seed) -> np.ndarray:
    """
    独立な外部雑音を要素ごとに加える（kind='none' なら入力をそのまま返す）
    """
    values = np.asarray(series, dtype=float)
    if noise.kind == 'none':
        return values
    return values + noise.draw(values.size, as_rng(seed))


# =========================
# 2変量サンプラー（推定量の実験用）
# =========================

class BivariateNormalSampler:
    """2変量正規サンプラー（理論分位点関数付き）"""

    def __init__(self, mu: Sequence[float] = (0.5, 0.5), cov_matrix=((1.0, 0.4), (0.4, 1.0))):
        self.mu = tuple(float(m) for m in mu)
        self.cov = np.asarray(cov_matrix, dtype=float)
        self._chol = _cholesky(self.cov)
        self.ppf_x = stats.norm(self.mu[0], math.sqrt(self.cov[0, 0])).ppf
        self.ppf_y = stats.norm(self.mu[1], math.sqrt(self.cov[1, 1])).ppf

    def draw(self, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        pairs = rng.standard_normal((n, 2)) @ self._chol.T + np.asarray(self.mu)
        return pairs[:, 0], pairs[:, 1]


class BivStableSampler:
    """4原子2変量安定サンプラー（周辺は同一の SαS、尺度 √2/2）"""

    def __init__(self, spec: BivStable4Atom):
        self.spec = spec
        marginal = stats.levy_stable(spec.alpha, 0.0, loc=0.0, scale=spec.marginal_scale)
        self.ppf_x = marginal.ppf
        self.ppf_y = marginal.ppf

    def draw(self, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        return sample_biv_stable_4atom(self.spec, n, rng)


# =========================
# モデル記述子
# =========================

UNIVARIATE_FAMILIES = ('gaussian_wn', 'ma1', 'ar1', 'garch', 'garch_iid', 'student_t')
BIVARIATE_FAMILIES = ('bivariate_normal', 'biv_stable')


@dataclass(frozen=True)
class ModelSpec:
    """
    生成モデルの記述子
    family: UNIVARIATE_FAMILIES / BIVARIATE_FAMILIES のいずれか
    params: 族ごとのパラメータ（theta, phi, w0/w1/w2/burn_in, df, mu/cov, alpha）
    noise: 加法的な外部雑音
    """
    family: str
    params: Dict[str, Any] = field(default_factory=dict)
    noise: NoiseSpec = field(default_factory=NoiseSpec.none)

    def __post_init__(self):
        if self.family not in UNIVARIATE_FAMILIES + BIVARIATE_FAMILIES:
            raise InvalidParameter(f"未知のモデル族です: {self.family}")
        # パラメータの検証は型の構築に任せる
        if self.family in UNIVARIATE_FAMILIES:
            build_sampler(self)
        else:
            build_bivariate_sampler(self)

    @property
    def is_bivariate(self) -> bool:
        return self.family in BIVARIATE_FAMILIES

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ModelSpec':
        data = dict(data)
        family = data.pop('family', None)
        if not family:
            raise InvalidParameter("モデル族 family を指定してください")
        noise = NoiseSpec.from_dict(data.pop('noise', None))
        return cls(family, data, noise)

    def to_dict(self) -> Dict[str, Any]:
        return {'family': self.family, **self.params, 'noise': self.noise.to_dict()}


def garch_params(params: Dict[str, Any], default_burn_in: Optional[int] = None) -> GarchParams:
    """辞書から GarchParams を構築（burn_in がなければ設定の QCC_BURN_IN）"""
    if default_burn_in is None:
        default_burn_in = get_settings().burn_in
    return GarchParams(params.get('w0'), params.get('w1'), params.get('w2'),
                       params.get('burn_in', default_burn_in))


class ModelSampler:
    """(m, rng) -> 系列 を返す1変量サンプラー（基礎過程 + 外部雑音）"""

    def __init__(self, spec: ModelSpec, draw: Callable[[int, np.random.Generator], np.ndarray]):
        self.spec = spec
        self._draw = draw

    def __call__(self, m: int, rng: np.random.Generator) -> np.ndarray:
        base = self._draw(m, rng)
        if self.spec.noise.kind == 'none':
            return base
        return base + self.spec.noise.draw(m, rng)


def build_sampler(spec: ModelSpec) -> ModelSampler:
    """
    1変量モデルの記述子からサンプラーを構築
    Raises:
        InvalidParameter: パラメータが不正な場合
    """
    params = spec.params
    family = spec.family

    if family == 'gaussian_wn':
        scale = validate_positive(params.get('scale', 1.0), "scale")
        draw = lambda m, rng: scale * rng.standard_normal(m)
    elif family == 'ma1':
        theta = MA1Params(params.get('theta', 0.0)).theta
        draw = lambda m, rng: _draw_ma1(theta, m, rng)
    elif family == 'ar1':
        phi = AR1Params(params.get('phi', 0.0)).phi
        draw = lambda m, rng: _draw_ar1(phi, m, rng)
    elif family == 'garch':
        garch = garch_params(params, default_burn_in=get_settings().path_burn_in)
        draw = lambda m, rng: _draw_garch_path(garch, m, rng)
    elif family == 'garch_iid':
        garch = garch_params(params)
        validate_min_int(garch.burn_in, MIN_IID_BURN_IN, "burn_in")
        draw = lambda m, rng: _draw_garch_iid(garch, m, rng)
    elif family == 'student_t':
        df = validate_positive(params.get('df', 3.0), "df")
        draw = lambda m, rng: rng.standard_t(df, m)
    else:
        raise InvalidParameter(f"{family} は1変量モデルではありません")

    return ModelSampler(spec, draw)


def build_bivariate_sampler(spec: ModelSpec):
    """2変量モデルの記述子からサンプラーを構築"""
    if spec.family == 'bivariate_normal':
        return BivariateNormalSampler(spec.params.get('mu', (0.5, 0.5)),
                                      spec.params.get('cov', ((1.0, 0.4), (0.4, 1.0))))
    if spec.family == 'biv_stable':
        return BivStableSampler(BivStable4Atom(spec.params.get('alpha', 1.5)))
    raise InvalidParameter(f"{spec.family} は2変量モデルではありません")


def null_model(spec: ModelSpec, iid_burn_in: Optional[int] = None) -> ModelSpec:
    """
    対立仮説モデルに対応する i.i.d. 帰無モデル
    MA(1) → θ=0（周辺分布は θ によらず同一）、AR(1) → 定常分布 N(0, 1/(1-φ²)) の白色雑音、
    GARCH パス → 同じ係数の定常 i.i.d. 標本。外部雑音はそのまま引き継ぐ
    """
    params = dict(spec.params)

    if spec.family == 'ma1':
        params['theta'] = 0.0
        return ModelSpec('ma1', params, spec.noise)
    if spec.family == 'ar1':
        phi = params.get('phi', 0.0)
        return ModelSpec('gaussian_wn', {'scale': 1.0 / math.sqrt(1.0 - phi * phi)}, spec.noise)
    if spec.family in ('garch', 'garch_iid'):
        # パスのバーンインは定常標本には引き継がない
        if spec.family == 'garch':
            params.pop('burn_in', None)
        if iid_burn_in is not None:
            params['burn_in'] = iid_burn_in
        params.setdefault('burn_in', get_settings().burn_in)
        return ModelSpec('garch_iid', params, spec.noise)
    if spec.family in ('gaussian_wn', 'student_t'):
        return spec

    raise InvalidParameter(f"{spec.family} に対応する帰無モデルがありません")
