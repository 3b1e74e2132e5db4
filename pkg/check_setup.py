#!/usr/bin/env python3
"""
環境構築の確認スクリプト
このスクリプトを実行して、必要な環境が整っているか確認できます。
"""

import os
import sys


def check_python_version():
    """Pythonのバージョンを確認"""
    print("=" * 50)
    print("Python バージョン確認")
    print("=" * 50)
    version = sys.version_info
    print(f"Python {version.major}.{version.minor}.{version.micro}")

    if (version.major, version.minor) >= (3, 9):
        print("✅ Python バージョンは要件を満たしています")
        return True
    else:
        print("❌ Python 3.9以上が必要です")
        return False


def check_packages():
    """必要なパッケージがインストールされているか確認"""
    print("\n" + "=" * 50)
    print("必要なパッケージの確認")
    print("=" * 50)

    required_packages = {
        'numpy': 'numpy',
        'pandas': 'pandas',
        'scipy': 'scipy',
        'python-dotenv': 'dotenv',
        'pytest': 'pytest',
    }

    all_installed = True

    for package_name, import_name in required_packages.items():
        try:
            __import__(import_name)
            print(f"✅ {package_name}")
        except ImportError:
            print(f"❌ {package_name} - インストールが必要です")
            all_installed = False

    return all_installed


def check_env_file():
    """環境変数（任意）の確認"""
    print("\n" + "=" * 50)
    print("環境変数の確認")
    print("=" * 50)

    if not os.path.exists('.env'):
        print("ℹ️ .env ファイルはありません（既定値で動作します）")
    else:
        print("✅ .env ファイルが存在します")

    from qcc_config import get_settings, validate_env_variables

    problems = validate_env_variables()
    for problem in problems:
        print(f"❌ {problem}")

    settings = get_settings()
    print(f"   seed={settings.seed}, threads={settings.threads}, N={settings.n_null}, "
          f"M={settings.m_trials}, B={settings.b_boot}, alpha={settings.alpha}")
    return not problems


def main():
    """メイン処理"""
    print("\n🔍 QCC Toolkit 環境構築チェック\n")

    results = []

    results.append(("Python バージョン", check_python_version()))
    packages_ok = check_packages()
    results.append(("必要なパッケージ", packages_ok))
    if packages_ok:
        results.append(("環境変数", check_env_file()))

    # 結果のサマリー
    print("\n" + "=" * 50)
    print("チェック結果のサマリー")
    print("=" * 50)

    all_passed = True
    for name, passed in results:
        status = "✅ OK" if passed else "❌ NG"
        print(f"{status} - {name}")
        if not passed:
            all_passed = False

    print("\n" + "=" * 50)
    if all_passed:
        print("✅ すべてのチェックに合格しました！")
        print("\nコマンドを実行できます:")
        print("  python app.py --help")
        print("  pytest")
    else:
        print("❌ いくつかの項目で問題が見つかりました")
        print("\nREADME.mdを参照して、環境構築を完了してください")
        print("必要なパッケージをインストール:")
        print("  pip install -r requirements.txt")
    print("=" * 50)

    return 0 if all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
