"""
日誌管理模組測試

測試 Logger 工具函數的各項功能，包括：
- 日誌級別解析
- 套件 logger 設定與日誌檔案寫入
- 重新設定與清理
"""

import logging

import pytest

from utils.logger import LoggerManager, cleanup_loggers, configure_toolkit_logging, parse_log_level


@pytest.mark.unit
class TestParseLogLevel:
    """parse_log_level 函數測試"""

    def test_parse_log_level(self):
        assert parse_log_level("debug") == logging.DEBUG
        assert parse_log_level(" WARNING ") == logging.WARNING
        assert parse_log_level(logging.ERROR) == logging.ERROR
        assert parse_log_level("nope") == logging.INFO
        assert parse_log_level(None, default=-1) == -1


@pytest.mark.unit
class TestLoggerManager:
    """LoggerManager 類別測試"""

    def setup_method(self):
        self.manager = LoggerManager()

    def teardown_method(self):
        self.manager.cleanup()

    def test_configure_basic(self):
        """測試基本設定：只有控制台 handler，不往上傳遞"""
        logger = self.manager.configure(["test_pkg_basic"])["test_pkg_basic"]

        assert isinstance(logger, logging.Logger)
        assert logger.level == logging.INFO
        assert len(logger.handlers) == 1
        assert logger.propagate is False

    def test_configure_shares_file_handler(self, tmp_path):
        """多個套件寫入同一個日誌檔時共用一個檔案 handler"""
        log_file = tmp_path / "logs" / "run.log"
        loggers = self.manager.configure(["test_pkg_dataset", "test_pkg_corruptions"], log_file=str(log_file),
                                         level=logging.DEBUG)

        handlers = [[h for h in logger.handlers if isinstance(h, logging.FileHandler)]
                    for logger in loggers.values()]
        assert len(handlers[0]) == 1
        assert handlers[0][0] is handlers[1][0]

        loggers["test_pkg_dataset"].debug("清單已載入")
        loggers["test_pkg_corruptions"].info("gaussian_noise/1 完成")
        handlers[0][0].flush()
        content = log_file.read_text(encoding="utf-8")
        assert "test_pkg_dataset - DEBUG - 清單已載入" in content
        assert "test_pkg_corruptions - INFO - gaussian_noise/1 完成" in content

    def test_configure_custom_format(self, tmp_path):
        log_file = tmp_path / "format.log"
        logger = self.manager.configure(["test_pkg_format"], log_file=str(log_file),
                                        format_string="[%(levelname)s] %(message)s")["test_pkg_format"]
        logger.warning("格式已更新")
        for handler in logger.handlers:
            handler.flush()
        assert "[WARNING] 格式已更新" in log_file.read_text(encoding="utf-8")

    def test_configure_replaces_handlers(self, tmp_path):
        """重新設定時不累積 handler，且套用新的級別"""
        self.manager.configure(["test_pkg_rerun"], log_file=str(tmp_path / "a.log"))
        logger = self.manager.configure(["test_pkg_rerun"], level=logging.WARNING)["test_pkg_rerun"]

        assert len(logger.handlers) == 1
        assert not isinstance(logger.handlers[0], logging.FileHandler)
        assert logger.level == logging.WARNING

    def test_unwritable_log_file_keeps_console(self, tmp_path):
        """無法建立的日誌檔只保留控制台 handler"""
        blocker = tmp_path / "not-a-dir"
        blocker.write_text("x", encoding="utf-8")
        logger = self.manager.configure(["test_pkg_blocked"],
                                        log_file=str(blocker / "sub" / "a.log"))["test_pkg_blocked"]

        assert not any(isinstance(h, logging.FileHandler) for h in logger.handlers)
        assert any(isinstance(h, logging.StreamHandler) for h in logger.handlers)

    def test_cleanup(self):
        logger = self.manager.configure(["test_pkg_cleanup"])["test_pkg_cleanup"]
        assert len(logger.handlers) > 0

        self.manager.cleanup()

        assert len(logger.handlers) == 0
        assert logger.propagate is True


@pytest.mark.unit
class TestToolkitLogging:
    """模組層級函數測試"""

    def teardown_method(self):
        cleanup_loggers()

    def test_configure_toolkit_logging(self, tmp_path):
        log_file = tmp_path / "t.log"
        loggers = configure_toolkit_logging(["test_toolkit_eval"], log_file=str(log_file), level="ERROR")
        logger = loggers["test_toolkit_eval"]

        assert logger.level == logging.ERROR
        logger.error("評估失敗")
        for handler in logger.handlers:
            handler.flush()
        assert "評估失敗" in log_file.read_text(encoding="utf-8")

    def test_invalid_level_falls_back_to_info(self):
        logger = configure_toolkit_logging(["test_toolkit_level"], level="INVALID")["test_toolkit_level"]
        assert logger.level == logging.INFO

    def test_cleanup_loggers(self):
        logger = configure_toolkit_logging(["test_toolkit_cleanup"])["test_toolkit_cleanup"]
        cleanup_loggers()
        assert logger.handlers == []
