"""
設定管理模組

提供統一的設定載入、驗證和管理功能，包括：
- YAML 設定檔解析
- 環境變數整合（GENFORMER_<區段>_<欄位>）
- 設定驗證和預設值處理
- 解析為 ToolConfig（命令列旗標 > 環境變數 > 設定檔 > 預設值）
"""

import os
import re
import yaml
import logging
from copy import deepcopy
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

from utils.logger import DEFAULT_FORMAT, parse_log_level
from utils.validators import SEED_MAX, ValidationError, validate_seed


PROFILES = ("natural", "medical")

# 需要種子的子命令
STOCHASTIC_COMMANDS = ("subset", "mix", "corrupt", "augment")


class ConfigError(ValidationError):
    """設定相關錯誤"""
    pass


class ConfigManager:
    """設定管理器"""

    def __init__(self):
        """初始化設定管理器"""
        self.logger = logging.getLogger(f"{__name__}.ConfigManager")
        self._config: Optional[Dict[str, Any]] = None
        self._source: Optional[Path] = None

        # 預設值
        self._defaults = {
            "run": {
                "seed": None,
                "threads": 0,
                "profile": "natural",
            },
            "paths": {
                "output": None,
            },
            "corruptions": {
                "params": None,
                "frost_texture": None,
            },
            "logging": {
                "level": "INFO",
                "format": DEFAULT_FORMAT,
                "file": None,
            },
        }

        # 環境變數映射模式
        self._env_patterns = [
            (re.compile(r'^GENFORMER_RUN_(.+)'), 'run'),
            (re.compile(r'^GENFORMER_PATHS_(.+)'), 'paths'),
            (re.compile(r'^GENFORMER_CORRUPTIONS_(.+)'), 'corruptions'),
            (re.compile(r'^GENFORMER_LOGGING_(.+)'), 'logging'),
        ]

        self.logger.debug("ConfigManager 初始化完成")

    @property
    def source(self) -> Optional[Path]:
        return self._source

    def load_config(self, config_path: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
        """
        載入設定檔案並整合環境變數

        Args:
            config_path: 設定檔路徑；None 時只使用預設值與環境變數

        Returns:
            載入的設定資料

        Raises:
            ConfigError: 設定檔不存在、格式錯誤或驗證失敗
        """
        file_config: Dict[str, Any] = {}
        if config_path is not None:
            self.logger.info(f"載入設定檔: {config_path}")
            file_config = self._load_from_file(Path(config_path))
            self._source = Path(config_path)

        config = self._merge_configs(self._defaults, file_config)
        config = self._integrate_environment_variables(config)
        self.validate_config(config)
        self._config = config
        self.logger.debug("設定載入完成")
        return config

    def _load_from_file(self, config_path: Path) -> Dict[str, Any]:
        """從檔案載入設定"""
        if not config_path.is_file():
            raise ConfigError(f"設定檔不存在: {config_path}", field="config", value=str(config_path))

        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                config_data = yaml.safe_load(f)
        except PermissionError:
            raise ConfigError(f"設定檔存取權限不足: {config_path}", field="config", value=str(config_path))
        except yaml.YAMLError as e:
            raise ConfigError(f"YAML 格式錯誤: {e}", field="config", value=str(config_path))

        if config_data is None:
            return {}
        if not isinstance(config_data, dict):
            raise ConfigError("設定檔格式錯誤：根層級必須是字典", field="config", value=str(config_path))
        for section, values in config_data.items():
            if section not in self._defaults:
                raise ConfigError(f"未知的設定區段: {section}", field=str(section))
            if values is not None and not isinstance(values, dict):
                raise ConfigError(f"設定區段 {section} 必須是字典", field=str(section))
        return {section: values or {} for section, values in config_data.items()}

    def _integrate_environment_variables(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """整合環境變數到設定中（環境變數優先於設定檔）"""
        env_config: Dict[str, Any] = {}
        for env_key, env_value in os.environ.items():
            for pattern, section in self._env_patterns:
                match = pattern.match(env_key)
                if match:
                    field = match.group(1).lower()
                    env_config.setdefault(section, {})[field] = self._convert_env_value(env_value)
                    self.logger.debug(f"環境變數 {env_key} -> {section}.{field}")
                    break
        return self._merge_configs(config, env_config)

    def _convert_env_value(self, value: str) -> Any:
        """轉換環境變數值的類型"""
        try:
            if '.' in value:
                return float(value)
            return int(value)
        except ValueError:
            pass

        if value.lower() in ('true', 'false'):
            return value.lower() == 'true'

        return value

    def _merge_configs(self, base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
        """合併兩個設定字典"""
        result = deepcopy(base)

        for key, value in override.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._merge_configs(result[key], value)
            else:
                result[key] = value

        return result

    def validate_config(self, config: Dict[str, Any]) -> bool:
        """
        驗證設定的完整性和正確性

        Raises:
            ConfigError: 當驗證失敗時
        """
        run = config.get("run", {})
        seed = run.get("seed")
        if seed is not None:
            if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= SEED_MAX:
                raise ConfigError(f"run.seed 必須是 0 到 2^64-1 的整數: {seed!r}", field="run.seed", value=seed)

        threads = run.get("threads")
        if isinstance(threads, bool) or not isinstance(threads, int) or threads < 0:
            raise ConfigError(f"run.threads 必須是非負整數（0 表示自動）: {threads!r}",
                              field="run.threads", value=threads)

        profile = run.get("profile")
        if profile not in PROFILES:
            raise ConfigError(f"run.profile 必須是 {' 或 '.join(PROFILES)}: {profile!r}",
                              field="run.profile", value=profile)

        level = config.get("logging", {}).get("level")
        if isinstance(level, str) and not isinstance(getattr(logging, level.strip().upper(), None), int):
            raise ConfigError(f"logging.level 無效: {level}", field="logging.level", value=level)
        return True

    def _section(self, name: str) -> Dict[str, Any]:
        if self._config is None:
            raise ConfigError("設定尚未載入，請先呼叫 load_config()", field="config")
        return self._config.get(name, {})

    def get_run_config(self) -> Dict[str, Any]:
        """取得執行相關設定（seed、threads、profile）"""
        return self._section("run")

    def get_paths_config(self) -> Dict[str, Any]:
        """取得路徑設定"""
        return self._section("paths")

    def get_corruption_config(self) -> Dict[str, Any]:
        """取得損壞測試集設定（params 覆寫檔、frost 紋理）"""
        return self._section("corruptions")

    def get_logging_config(self) -> Dict[str, Any]:
        """取得日誌相關設定"""
        return self._section("logging")

    def resolve_path(self, value: Optional[str]) -> Optional[Path]:
        """設定檔中的相對路徑以設定檔所在目錄為基準"""
        if value is None or value == "":
            return None
        path = Path(str(value)).expanduser()
        if not path.is_absolute() and self._source is not None:
            path = self._source.parent / path
        return path

    def to_tool_config(self) -> "ToolConfig":
        """將已載入的設定解析為 ToolConfig"""
        run = self.get_run_config()
        corruptions = self.get_corruption_config()
        logging_config = self.get_logging_config()
        log_file = self.resolve_path(logging_config.get("file"))
        return ToolConfig(
            seed=run.get("seed"),
            threads=run.get("threads", 0),
            profile=run.get("profile", "natural"),
            params_path=self.resolve_path(corruptions.get("params")),
            frost_texture=self.resolve_path(corruptions.get("frost_texture")),
            output=self.resolve_path(self.get_paths_config().get("output")),
            log_level=parse_log_level(logging_config.get("level")),
            log_format=logging_config.get("format") or DEFAULT_FORMAT,
            log_file=str(log_file) if log_file else None,
        )

    def __str__(self) -> str:
        if self._config is None:
            return "ConfigManager(未載入設定)"
        return f"ConfigManager({self._config})"


@dataclass(frozen=True)
class ToolConfig:
    """
    命令列工具的有效設定

    threads 為 0 時使用 os.cpu_count()。
    """
    seed: Optional[int] = None
    threads: int = 0
    profile: str = "natural"
    params_path: Optional[Path] = None
    frost_texture: Optional[Path] = None
    output: Optional[Path] = None
    log_level: int = logging.INFO
    log_format: str = DEFAULT_FORMAT
    log_file: Optional[str] = None

    @property
    def worker_count(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)

    def with_overrides(self, **overrides: Any) -> "ToolConfig":
        """套用命令列旗標（值為 None 的旗標不覆寫）"""
        values = {key: value for key, value in overrides.items() if value is not None}
        if "seed" in values:
            values["seed"] = validate_seed(values["seed"])
        if "threads" in values and values["threads"] < 0:
            raise ConfigError(f"threads 必須是非負整數: {values['threads']}", field="threads",
                              value=values["threads"])
        if "profile" in values and values["profile"] not in PROFILES:
            raise ConfigError(f"profile 必須是 {' 或 '.join(PROFILES)}: {values['profile']}",
                              field="profile", value=values["profile"])
        return replace(self, **values)

    def require_seed(self, command: str) -> int:
        """
        取得隨機子命令所需的種子

        Raises:
            ValidationError: 未設定種子
        """
        if self.seed is None:
            raise ValidationError(f"{command} 需要種子：請使用 --seed、GENFORMER_RUN_SEED 或設定檔 run.seed",
                                  field="seed", value=None)
        return self.seed

    def output_path(self, out: Union[str, Path]) -> Path:
        """相對的輸出路徑以 paths.output 為基準（未設定時維持原樣）"""
        path = Path(out)
        if self.output is not None and not path.is_absolute():
            return self.output / path
        return path


def load_tool_config(config_path: Optional[Union[str, Path]] = None) -> ToolConfig:
    """便利函式：載入設定檔（可選）與環境變數並回傳 ToolConfig"""
    manager = ConfigManager()
    manager.load_config(config_path)
    return manager.to_tool_config()
