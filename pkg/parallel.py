# parallel.py
"""
反復（レプリケート）の並列実行
(seed, replicate_index) で決まる独立な乱数ストリームにより、
ワーカー数に依存しない決定的な結果を返す
"""

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

import numpy as np

from logger import log_info
from qcc_config import get_thread_count

T = TypeVar('T')

# 1タスクあたりのレプリケート数（スレッド切り替えのオーバーヘッドを抑える）
CHUNK_SIZE = 25
AUXILIARY_KEY = 2 ** 31


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """
    レプリケート専用の乱数生成器
    Args:
        seed: 実験全体のシード
        index: レプリケート番号
    Returns:
        np.random.Generator: (seed, index) だけで決まる独立ストリーム
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def auxiliary_rng(seed: int, label: int) -> np.random.Generator:
    """
    レプリケート以外の用途（参照値の計算など）の乱数生成器
    レプリケート番号と衝突しない spawn_key を使う
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(AUXILIARY_KEY + int(label),)))


def derive_seed(seed: int, key: str) -> int:
    """
    シードと文字列キーから派生シードを作る（グリッド点ごとの独立ストリーム用）
    Args:
        seed: 実験全体のシード
        key: 派生元を識別する文字列
    Returns:
        int: 64ビットの派生シード
    """
    key_hash = int(hashlib.sha256(key.encode("utf-8")).hexdigest()[:16], 16)
    return int(np.random.SeedSequence([int(seed), key_hash]).generate_state(2, np.uint32).view(np.uint64)[0])


def as_rng(seed) -> np.random.Generator:
    """シード（整数・SeedSequence・Generator）を Generator に変換"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def count_non_ok(result) -> int:
    """結果（QccValue またはそのリスト）のうちステータスが OK でないものの数"""
    if isinstance(result, (list, tuple)):
        return sum(count_non_ok(item) for item in result)
    return int(getattr(result, "ok", True) is False)


def run_replicates(task: Callable[[int, np.random.Generator], T], count: int, seed: int,
                   threads: Optional[int] = None, context: str = "REPLICATES") -> List[T]:
    """
    task(index, rng) を count 回実行し、番号順の結果リストを返す
    Args:
        task: 1レプリケートの処理（純粋関数であること）
        count: レプリケート数
        seed: 実験全体のシード
        threads: ワーカー数の上限（結果には影響しない）
        context: ログ用コンテキスト
    Returns:
        List: index 順に並んだ結果
    """
    workers = get_thread_count(threads)
    started = time.perf_counter()

    def run_chunk(start: int) -> List[T]:
        stop = min(start + CHUNK_SIZE, count)
        return [task(index, replicate_rng(seed, index)) for index in range(start, stop)]

    starts = range(0, count, CHUNK_SIZE)
    if workers <= 1 or count <= CHUNK_SIZE:
        chunks = [run_chunk(start) for start in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(run_chunk, starts))

    results = [item for chunk in chunks for item in chunk]
    non_ok = sum(count_non_ok(item) for item in results)
    log_info(f"{count}件のレプリケートを完了 (non_ok={non_ok}, workers={workers}, {time.perf_counter() - started:.2f}s)", context)
    return results
