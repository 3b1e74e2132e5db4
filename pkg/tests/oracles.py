# oracles.py - 推定量を独立に書き下した総当たり実装（numpy を使わない）
import math
from decimal import Decimal


def brute_index_floor(n, prob):
    return int((Decimal(n) * Decimal(repr(float(prob)))).to_integral_value(rounding="ROUND_FLOOR"))


def brute_interval(sample, p, q):
    n = len(sample)
    lo_index = brute_index_floor(n, p) + 1
    hi_index = brute_index_floor(n, q)
    if lo_index > hi_index:
        return None
    ordered = sorted(sample)
    return ordered[lo_index - 1], ordered[hi_index - 1]


def brute_qcc(X, Y, interval_x, interval_y):
    """閉矩形上の 1/count 正規化の相関（空・分散0は 0）"""
    if interval_x is None or interval_y is None:
        return 0.0
    points = [(x, y) for x, y in zip(X, Y)
              if interval_x[0] <= x <= interval_x[1] and interval_y[0] <= y <= interval_y[1]]
    if not points:
        return 0.0
    count = len(points)
    mean_x = math.fsum(x for x, _ in points) / count
    mean_y = math.fsum(y for _, y in points) / count
    var_x = math.fsum((x - mean_x) ** 2 for x, _ in points) / count
    var_y = math.fsum((y - mean_y) ** 2 for _, y in points) / count
    scale_x = max(1.0, math.fsum(x * x for x, _ in points) / count)
    scale_y = max(1.0, math.fsum(y * y for _, y in points) / count)
    if var_x < 1e-12 * scale_x or var_y < 1e-12 * scale_y:
        return 0.0
    cov = math.fsum((x - mean_x) * (y - mean_y) for x, y in points) / count
    return max(-1.0, min(1.0, cov / math.sqrt(var_x * var_y)))


def brute_qcc_hat(X, Y, p_x, q_x, p_y, q_y):
    return brute_qcc(X, Y, brute_interval(X, p_x, q_x), brute_interval(Y, p_y, q_y))


def brute_cacf(series, h, p, q):
    n = len(series) - h
    front = list(series[:n])
    back = list(series[h:h + n])
    return brute_qcc_hat(front, back, p, q, p, q)
