# test_logger.py
import logging

from logger import clear_old_logs, get_log_statistics, log_run, parse_log_line, read_log_file


def test_parse_log_line():
    entry = parse_log_line("2025-10-05 12:34:56 - INFO - [RUN] test digest=abc - value=0.1")
    assert entry == {'datetime': '2025-10-05 12:34:56', 'level': 'INFO', 'message': '[RUN] test digest=abc - value=0.1'}
    assert parse_log_line("garbage")['level'] == 'UNKNOWN'


def test_statistics_and_reading(tmp_path):
    log_file = tmp_path / "qcc.log"
    log_file.write_text(
        "2025-10-05 12:00:00 - INFO - a\n"
        "2025-10-05 12:00:01 - WARNING - b\n"
        "2025-10-05 12:00:02 - ERROR - c\n",
        encoding="utf-8",
    )
    stats = get_log_statistics(str(log_file))
    assert (stats['total_lines'], stats['info_count'], stats['warning_count'], stats['error_count']) == (3, 1, 1, 1)
    assert [parse_log_line(line)['message'] for line in read_log_file(2, str(log_file))] == ['c', 'b']


def test_missing_file(tmp_path):
    missing = str(tmp_path / "none.log")
    assert read_log_file(10, missing) == []
    assert get_log_statistics(missing)['total_lines'] == 0


def test_clear_old_logs(tmp_path):
    log_file = tmp_path / "big.log"
    log_file.write_text("2025-10-05 12:00:00 - INFO - x\n" * 20000, encoding="utf-8")
    assert clear_old_logs(str(log_file), max_size=1024)
    assert len(log_file.read_text(encoding="utf-8").splitlines()) == 10000
    assert not clear_old_logs(str(log_file), max_size=10 ** 9)


def test_log_run_records_digest(caplog):
    with caplog.at_level(logging.INFO, logger="qcc_toolkit"):
        log_run("cacf", "deadbeef", "m=100")
    assert "[RUN] cacf digest=deadbeef - m=100" in caplog.messages
