"""
主程式入口測試

測試 main.py 將命令列參數交給 CLI 並回傳結束碼
"""

import sys

import pytest

import main


@pytest.mark.unit
@pytest.mark.cli
class TestMain:
    """main() 入口點測試"""

    def test_forwards_arguments(self, mocker):
        mocker.patch.object(sys, "argv", ["main.py", "mce", "--matrix", "m.csv"])
        run = mocker.patch("main.run", return_value=0)

        assert main.main() == 0
        run.assert_called_once_with(["mce", "--matrix", "m.csv"])

    @pytest.mark.parametrize("code", [1, 2, 3])
    def test_returns_exit_code(self, mocker, code):
        mocker.patch.object(sys, "argv", ["main.py", "stats", "--manifest", "x.json"])
        mocker.patch("main.run", return_value=code)

        assert main.main() == code

    def test_version_end_to_end(self, mocker, capsys):
        mocker.patch.object(sys, "argv", ["main.py", "--version"])

        assert main.main() == 0
        assert "genformer-toolkit" in capsys.readouterr().out
