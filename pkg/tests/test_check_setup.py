# test_check_setup.py
import check_setup
from qcc_config import ENV_VARIABLES


def test_python_and_packages(capsys):
    assert check_setup.check_python_version()
    assert check_setup.check_packages()
    assert "numpy" in capsys.readouterr().out


def test_env_check_reports_invalid_values(monkeypatch, capsys):
    monkeypatch.setenv("QCC_ALPHA", "2")
    assert not check_setup.check_env_file()
    assert "QCC_ALPHA" in capsys.readouterr().out


def test_main_exit_code(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    for name in ENV_VARIABLES:
        monkeypatch.delenv(name, raising=False)
    assert check_setup.main() == 0
