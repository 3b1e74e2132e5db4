# conftest.py - テスト共通の設定とフィクスチャ
import os
import sys
import tempfile

# ログはリポジトリではなく一時ディレクトリに書く（logger の import 前に設定する）
os.environ.setdefault("QCC_LOG_FILE", os.path.join(tempfile.mkdtemp(prefix="qcc_test_"), "qcc.log"))

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

import numpy as np
import pytest

from quantile_core import QuantileSplit


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def example_split():
    return QuantileSplit(0.05, 0.75)


@pytest.fixture
def write_text(tmp_path):
    """一時ファイルにテキストを書いてパスを返す"""
    def _write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write
