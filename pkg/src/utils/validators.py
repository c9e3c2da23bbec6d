"""
資料驗證模組

提供各種資料驗證功能，包括：
- 檔案與目錄路徑驗證
- 亂數種子、比例、機率等數值範圍驗證
- 欄位完整性檢查
- 驗證結果彙整
"""

import os
from typing import Dict, List, Any, Optional, Union
from pathlib import Path
from dataclasses import dataclass, field as dataclass_field


SEED_MAX = 2 ** 64 - 1


class ValidationError(Exception):
    """資料驗證錯誤的自訂異常（所有前置條件失敗的基底類別）"""

    def __init__(self, message: str, field: Optional[str] = None, value: Any = None):
        """
        初始化驗證錯誤

        Args:
            message: 錯誤訊息
            field: 相關欄位名稱
            value: 導致錯誤的值
        """
        super().__init__(message)
        self.field = field
        self.value = value


@dataclass
class ValidationResult:
    """驗證結果"""
    is_valid: bool = True
    errors: Dict[str, List[str]] = dataclass_field(default_factory=dict)

    def add_error(self, field: str, message: str):
        """添加錯誤訊息"""
        if field not in self.errors:
            self.errors[field] = []
        self.errors[field].append(message)
        self.is_valid = False

    def first_error(self) -> Optional[ValidationError]:
        """將第一個錯誤轉為 ValidationError（無錯誤時回傳 None）"""
        for field, messages in self.errors.items():
            if messages:
                return ValidationError(messages[0], field=field)
        return None


def validate_file_path(file_path: Union[str, Path, None],
                      allowed_extensions: Optional[List[str]] = None,
                      max_size_mb: Optional[float] = None,
                      check_readable: bool = False) -> bool:
    """
    驗證檔案路徑有效性

    Args:
        file_path: 要驗證的檔案路徑
        allowed_extensions: 允許的副檔名列表（如 ['.json', '.csv']）
        max_size_mb: 最大檔案大小（MB）
        check_readable: 是否檢查檔案可讀性

    Returns:
        檔案路徑是否有效

    Examples:
        >>> validate_file_path("/path/to/manifest.json")
        True  # 如果檔案存在

        >>> validate_file_path("/path/to/file.txt", allowed_extensions=['.json'])
        False  # 副檔名不符
    """
    if not file_path or (isinstance(file_path, str) and not file_path.strip()):
        return False

    try:
        path = Path(file_path)

        if not path.exists() or not path.is_file():
            return False

        if allowed_extensions:
            if path.suffix.lower() not in [ext.lower() for ext in allowed_extensions]:
                return False

        if max_size_mb is not None:
            file_size_mb = path.stat().st_size / (1024 * 1024)
            if file_size_mb > max_size_mb:
                return False

        if check_readable and not os.access(path, os.R_OK):
            return False

        return True

    except (OSError, ValueError, TypeError):
        return False


def validate_directory(dir_path: Union[str, Path, None], must_exist: bool = True) -> bool:
    """
    驗證目錄路徑

    Args:
        dir_path: 目錄路徑
        must_exist: 目錄是否必須已存在；為 False 時僅檢查路徑不是既有檔案

    Returns:
        目錄路徑是否可用
    """
    if not dir_path or (isinstance(dir_path, str) and not dir_path.strip()):
        return False

    try:
        path = Path(dir_path)
        if must_exist:
            return path.is_dir()
        return not path.is_file()
    except (OSError, ValueError, TypeError):
        return False


def require_file(file_path: Union[str, Path, None], field: str,
                 allowed_extensions: Optional[List[str]] = None) -> Path:
    """
    檢查輸入檔案存在，否則拋出 ValidationError（訊息包含欄位與檔案）

    Args:
        file_path: 檔案路徑
        field: 對應的欄位／參數名稱
        allowed_extensions: 允許的副檔名

    Returns:
        檔案 Path 物件
    """
    if not validate_file_path(file_path, allowed_extensions=allowed_extensions):
        raise ValidationError(f"{field}: 檔案不存在或格式不正確: {file_path}",
                              field=field, value=file_path)
    return Path(file_path)


def require_directory(dir_path: Union[str, Path, None], field: str) -> Path:
    """檢查輸入目錄存在，否則拋出 ValidationError"""
    if not validate_directory(dir_path, must_exist=True):
        raise ValidationError(f"{field}: 目錄不存在: {dir_path}", field=field, value=dir_path)
    return Path(dir_path)


def validate_seed(seed: Any, field: str = "seed") -> int:
    """
    驗證 64 位元無號整數種子

    Args:
        seed: 種子值
        field: 欄位名稱

    Returns:
        整數種子

    Raises:
        ValidationError: 種子不是 [0, 2^64) 範圍內的整數
    """
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValidationError(f"{field} 必須是整數: {seed!r}", field=field, value=seed)
    if seed < 0 or seed > SEED_MAX:
        raise ValidationError(f"{field} 超出 64 位元範圍: {seed}", field=field, value=seed)
    return seed


def validate_fraction(value: Any, field: str = "fraction") -> float:
    """驗證比例值位於 (0, 1]"""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{field} 必須是數值: {value!r}", field=field, value=value)
    if not 0.0 < float(value) <= 1.0:
        raise ValidationError(f"{field} 必須位於 (0, 1]: {value}", field=field, value=value)
    return float(value)


def validate_probability(value: Any, field: str = "probability") -> float:
    """驗證機率值位於 [0, 1]"""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{field} 必須是數值: {value!r}", field=field, value=value)
    if not 0.0 <= float(value) <= 1.0:
        raise ValidationError(f"{field} 必須位於 [0, 1]: {value}", field=field, value=value)
    return float(value)


def validate_positive(value: Any, field: str) -> float:
    """驗證嚴格正數"""
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ValidationError(f"{field} 必須是正數: {value!r}", field=field, value=value)
    return float(value)


def missing_fields(data: Dict[str, Any], required_fields: List[str]) -> List[str]:
    """回傳資料中缺少的必要欄位名稱"""
    if not isinstance(data, dict):
        return list(required_fields)
    return [name for name in required_fields if name not in data]
