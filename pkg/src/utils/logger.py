"""
日誌管理模組

工具內各套件（dataset、corruptions、evaluation…）各自以 logging.getLogger(__name__)
取得 logger；本模組負責替這些套件掛上 handler：
- 控制台輸出（stderr）
- 可選的 UTF-8 日誌檔，同一個檔案路徑只開一個 handler，由所有套件共用
- 同一個行程內多次執行 CLI 時重新設定，不重複掛 handler
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, Optional


DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class LoggerManager:
    """日誌管理器，統一管理套件 Logger 與共用的檔案 handler"""

    def __init__(self):
        self._loggers: Dict[str, logging.Logger] = {}
        self._file_handlers: Dict[Path, logging.FileHandler] = {}

    def _file_handler(self, log_file: str, formatter: logging.Formatter) -> logging.FileHandler:
        """取得（必要時建立）指定路徑的共用檔案 handler"""
        path = Path(log_file).resolve()
        handler = self._file_handlers.get(path)
        if handler is None:
            path.parent.mkdir(parents=True, exist_ok=True)
            handler = logging.FileHandler(path, encoding="utf-8")
            self._file_handlers[path] = handler
        handler.setFormatter(formatter)
        return handler

    def _attach(self, logger: logging.Logger, log_file: Optional[str], level: int,
                format_string: Optional[str]):
        """移除舊 handler 後重新掛上控制台與檔案 handler"""
        logger.setLevel(level)
        formatter = logging.Formatter(format_string or DEFAULT_FORMAT)

        # 共用的檔案 handler 不在這裡關閉，只解除掛載
        for handler in logger.handlers[:]:
            logger.removeHandler(handler)
            if handler not in self._file_handlers.values():
                handler.close()

        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        if log_file:
            try:
                logger.addHandler(self._file_handler(log_file, formatter))
            except OSError as e:
                logger.warning(f"無法創建檔案處理器 {log_file}: {e}")

        logger.propagate = False

    def configure(self, names: Iterable[str], log_file: Optional[str] = None,
                  level: int = logging.INFO,
                  format_string: Optional[str] = None) -> Dict[str, logging.Logger]:
        """
        設定一組套件 logger

        已存在的 logger 會依新設定重掛 handler；
        所有套件寫入同一個日誌檔時共用一個檔案 handler。

        Returns:
            名稱 → Logger
        """
        configured = {}
        for name in names:
            logger = logging.getLogger(name)
            self._attach(logger, log_file, level, format_string)
            self._loggers[name] = logger
            configured[name] = logger
        return configured

    def cleanup(self):
        """移除並關閉所有 handler"""
        for logger in self._loggers.values():
            for handler in logger.handlers[:]:
                logger.removeHandler(handler)
                handler.close()
            logger.propagate = True
        for handler in self._file_handlers.values():
            handler.close()

        self._loggers.clear()
        self._file_handlers.clear()


_logger_manager = LoggerManager()


def parse_log_level(level, default: int = logging.INFO) -> int:
    """將字串或整數日誌級別轉為 logging 常數，無效值回傳預設值"""
    if isinstance(level, int):
        return level
    if isinstance(level, str):
        value = getattr(logging, level.strip().upper(), None)
        if isinstance(value, int):
            return value
    return default


def configure_toolkit_logging(packages: Iterable[str],
                              log_file: Optional[str] = None,
                              level: int = logging.INFO,
                              format_string: Optional[str] = None) -> Dict[str, logging.Logger]:
    """
    為工具的各個套件設定日誌輸出（CLI 每次執行時呼叫）

    Args:
        packages: 套件名稱（如 "dataset"、"corruptions"）
        log_file: 共用的日誌檔案路徑（可選）
        level: 日誌級別（logging 常數或名稱字串）
        format_string: 格式字串（可選）

    Examples:
        >>> loggers = configure_toolkit_logging(["dataset", "corruptions"], level="DEBUG")
        >>> loggers["corruptions"].info("開始建立損壞測試集")
    """
    return _logger_manager.configure(packages, log_file, parse_log_level(level), format_string)


def cleanup_loggers():
    """清理所有 Logger 的處理器"""
    _logger_manager.cleanup()
