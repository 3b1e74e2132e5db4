# logger.py
"""
ログ記録機能
実行ログの記録、ログファイルのメンテナンス、統計の取得を実装
"""

import logging
import os
import sys
from typing import Dict, List

from qcc_config import LOG_FILE, LOG_LEVEL


MAX_LOG_SIZE = 10 * 1024 * 1024  # 10MB
KEEP_LINES = 10000


# ロガーの設定
def setup_logger(log_file: str = LOG_FILE, console_level: str = LOG_LEVEL) -> logging.Logger:
    """ロガーの初期設定"""
    logger = logging.getLogger('qcc_toolkit')
    logger.setLevel(logging.INFO)

    # フォーマッター
    formatter = logging.Formatter(
        '%(asctime)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # ハンドラーを追加（重複を避ける）
    if not logger.handlers:
        file_handler = logging.FileHandler(log_file, encoding='utf-8', delay=True)
        file_handler.setLevel(logging.INFO)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

        # 標準出力は結果（CSV/JSON）専用なので、コンソールログは stderr に出す
        stream_handler = logging.StreamHandler(sys.stderr)
        stream_handler.setLevel(getattr(logging, str(console_level).upper(), logging.WARNING))
        stream_handler.setFormatter(formatter)
        logger.addHandler(stream_handler)

    return logger


# グローバルロガー
logger = setup_logger()


def log_info(message: str, context: str = ""):
    """
    情報ログを記録
    Args:
        message: ログメッセージ
        context: コンテキスト情報
    """
    if context:
        logger.info(f"[{context}] {message}")
    else:
        logger.info(message)


def log_error(error: Exception, context: str = "", details: dict = None):
    """
    エラーログを記録
    Args:
        error: エラーオブジェクト
        context: エラーが発生したコンテキスト
        details: 追加の詳細情報（辞書形式）
    """
    error_msg = f"[{context}] {str(error)}" if context else str(error)

    # 詳細情報を追加
    if details:
        details_str = ", ".join([f"{k}={v}" for k, v in details.items()])
        error_msg = f"{error_msg} | Details: {details_str}"

    traceback = getattr(error, '__traceback__', None)
    logger.error(error_msg, exc_info=error if traceback is not None else None)


def log_warning(message: str, context: str = ""):
    """
    警告ログを記録
    Args:
        message: 警告メッセージ
        context: コンテキスト情報
    """
    if context:
        logger.warning(f"[{context}] {message}")
    else:
        logger.warning(message)


def log_run(command: str, digest: str, details: str = ""):
    """
    CLI 実行を設定ダイジェスト付きで記録
    Args:
        command: サブコマンド名
        digest: 設定ダイジェスト
        details: 詳細情報
    """
    if details:
        logger.info(f"[RUN] {command} digest={digest} - {details}")
    else:
        logger.info(f"[RUN] {command} digest={digest}")


def read_log_file(max_lines: int = 100, log_file: str = LOG_FILE) -> List[str]:
    """
    ログファイルを読み込み
    Args:
        max_lines: 読み込む最大行数
    Returns:
        List[str]: ログ行のリスト（新しい順）
    """
    if not os.path.exists(log_file):
        return []

    with open(log_file, 'r', encoding='utf-8') as f:
        lines = f.readlines()

    return lines[-max_lines:][::-1]


def parse_log_line(line: str) -> Dict:
    """
    ログ行をパースして辞書に変換
    Args:
        line: ログ行
    Returns:
        Dict: パースされたログ情報
    """
    # フォーマット: "2025-10-05 12:34:56 - INFO - message"
    parts = line.split(' - ', 2)
    if len(parts) >= 3:
        return {
            'datetime': parts[0],
            'level': parts[1],
            'message': parts[2].strip()
        }
    return {
        'datetime': '',
        'level': 'UNKNOWN',
        'message': line.strip()
    }


def get_log_statistics(log_file: str = LOG_FILE) -> Dict:
    """
    ログの統計情報を取得
    Returns:
        Dict: 統計情報
    """
    if not os.path.exists(log_file):
        return {
            'total_lines': 0,
            'error_count': 0,
            'warning_count': 0,
            'info_count': 0,
            'file_size_mb': 0.0
        }

    with open(log_file, 'r', encoding='utf-8') as f:
        lines = f.readlines()

    levels = [parse_log_line(line)['level'] for line in lines]
    file_size_mb = round(os.path.getsize(log_file) / (1024 * 1024), 2)

    return {
        'total_lines': len(lines),
        'error_count': levels.count('ERROR'),
        'warning_count': levels.count('WARNING'),
        'info_count': levels.count('INFO'),
        'file_size_mb': file_size_mb
    }


def clear_old_logs(log_file: str = LOG_FILE, max_size: int = MAX_LOG_SIZE) -> bool:
    """
    古いログをクリア（ファイルサイズが大きい場合）
    Returns:
        bool: 切り詰めを行った場合True
    """
    if not os.path.exists(log_file) or os.path.getsize(log_file) <= max_size:
        return False

    # 最新の10000行だけ保持
    with open(log_file, 'r', encoding='utf-8') as f:
        lines = f.readlines()

    with open(log_file, 'w', encoding='utf-8') as f:
        f.writelines(lines[-KEEP_LINES:])

    log_info("古いログをクリアしました", "LOG_MAINTENANCE")
    return True


def log_maintenance_on_startup():
    """CLI 起動時のログメンテナンス"""
    try:
        clear_old_logs()
    except OSError as e:
        print(f"ログクリアに失敗: {str(e)}", file=sys.stderr)
