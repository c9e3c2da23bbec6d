"""
嚴重度參數表模組

載入隨套件附帶的 severity_params.yaml，支援以 --params 檔案覆寫，
並依影像解析度選擇參數設定檔（"28" / "32" / "64"）。
"""

import copy
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from corruptions.kinds import ALL_KINDS, SEVERITIES, CorruptionError, CorruptionKind, validate_severity
from dataset.image_io import ImageGeometry


DEFAULT_PARAMS_PATH = Path(__file__).with_name("severity_params.yaml")

RESOLUTION_PROFILES = ("28", "32", "64")

_DIRECTIONS = ("increasing", "decreasing")


def resolution_profile(width: int, height: int) -> str:
    """依 max(寬, 高) 選擇解析度設定檔"""
    side = max(width, height)
    if side <= 28:
        return "28"
    if side <= 32:
        return "32"
    return "64"


def _read_yaml(path: Path) -> dict:
    if not path.is_file():
        raise FileNotFoundError(f"參數檔不存在: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise CorruptionError(f"參數檔 YAML 格式錯誤: {path} ({e})", field="params", value=str(path))
    if not isinstance(data, dict):
        raise CorruptionError(f"參數檔頂層必須是映射: {path}", field="params", value=str(path))
    return data


class SeverityTable:
    """
    嚴重度參數表

    profiles[profile][kind] 是長度 5 的參數字典列表（嚴重度 1..5）；
    primary[kind] 宣告主要強度參數與其方向，載入時檢查單調性。
    """

    def __init__(self, version: str, profiles: Dict[str, Dict[str, list]],
                 primary: Dict[str, Dict[str, str]], source: Optional[Path] = None):
        self.version = str(version)
        self.primary = primary
        self.source = source
        self.logger = logging.getLogger(f"{__name__}.SeverityTable")
        self._profiles = self._normalize(profiles)
        self._check_monotone()

    def _normalize(self, profiles: Dict[str, Dict[str, list]]) -> Dict[str, Dict[CorruptionKind, tuple]]:
        if not isinstance(profiles, dict):
            raise CorruptionError("profiles 必須是映射", field="profiles")
        normalized = {}
        for profile in RESOLUTION_PROFILES:
            table = profiles.get(profile)
            if not isinstance(table, dict):
                raise CorruptionError(f"缺少解析度設定檔: {profile}", field="profiles", value=profile)
            entries = {}
            for kind in ALL_KINDS:
                levels = table.get(kind.value)
                field = f"profiles.{profile}.{kind.value}"
                if not isinstance(levels, list) or len(levels) != len(SEVERITIES):
                    raise CorruptionError(f"{field} 必須是 {len(SEVERITIES)} 個嚴重度的列表",
                                          field=field, value=levels)
                for level in levels:
                    if not isinstance(level, dict) or not all(
                            isinstance(v, (int, float)) and not isinstance(v, bool) for v in level.values()):
                        raise CorruptionError(f"{field} 的參數必須是數值映射", field=field, value=level)
                entries[kind] = tuple(dict(level) for level in levels)
            normalized[profile] = entries
        return normalized

    def _check_monotone(self):
        for kind in ALL_KINDS:
            declaration = self.primary.get(kind.value)
            if not isinstance(declaration, dict):
                raise CorruptionError(f"缺少主要參數宣告: {kind.value}", field="primary", value=kind.value)
            name = declaration.get("parameter")
            direction = declaration.get("direction")
            if direction not in _DIRECTIONS:
                raise CorruptionError(f"{kind.value} 的方向必須是 increasing 或 decreasing",
                                      field=f"primary.{kind.value}.direction", value=direction)
            for profile, entries in self._profiles.items():
                field = f"profiles.{profile}.{kind.value}"
                try:
                    values = [level[name] for level in entries[kind]]
                except KeyError:
                    raise CorruptionError(f"{field} 缺少主要參數 {name}", field=field, value=name)
                pairs = list(zip(values, values[1:]))
                if direction == "increasing":
                    ok = all(a <= b for a, b in pairs)
                else:
                    ok = all(a >= b for a, b in pairs)
                if not ok:
                    raise CorruptionError(f"{field}.{name} 未隨嚴重度單調（{direction}）: {values}",
                                          field=field, value=values)

    def params_for(self, kind: Union[str, CorruptionKind], severity: int, profile: str) -> Dict[str, Any]:
        """取得 (kind, severity, profile) 的參數（回傳副本）"""
        kind = CorruptionKind.parse(kind)
        validate_severity(severity)
        if profile not in self._profiles:
            raise CorruptionError(f"未知的解析度設定檔: {profile}", field="profile", value=profile)
        return dict(self._profiles[profile][kind][severity - 1])

    def params_for_geometry(self, kind: Union[str, CorruptionKind], severity: int,
                            geometry: ImageGeometry) -> Dict[str, Any]:
        return self.params_for(kind, severity, resolution_profile(geometry.width, geometry.height))

    def primary_values(self, kind: Union[str, CorruptionKind], profile: str) -> list:
        """主要參數在嚴重度 1..5 的數值"""
        kind = CorruptionKind.parse(kind)
        name = self.primary[kind.value]["parameter"]
        return [level[name] for level in self._profiles[profile][kind]]

    def __repr__(self) -> str:
        return f"SeverityTable(version={self.version!r})"


def load_severity_table(override_path: Optional[Union[str, Path]] = None) -> SeverityTable:
    """
    載入嚴重度參數表

    覆寫檔可以只包含部分設定檔與類型；被覆寫的類型整組（5 個嚴重度）取代預設值。
    覆寫檔未指定 version 時，版本記為 "<預設版本>+custom"。

    Args:
        override_path: 覆寫參數檔路徑（可選）

    Returns:
        SeverityTable
    """
    defaults = _read_yaml(DEFAULT_PARAMS_PATH)
    profiles = copy.deepcopy(defaults.get("profiles", {}))
    primary = copy.deepcopy(defaults.get("primary", {}))
    version = str(defaults.get("version", "0"))
    source = DEFAULT_PARAMS_PATH

    if override_path is not None:
        source = Path(override_path)
        override = _read_yaml(source)
        for profile, table in (override.get("profiles") or {}).items():
            profile = str(profile)
            if profile not in RESOLUTION_PROFILES:
                raise CorruptionError(f"覆寫檔含未知的解析度設定檔: {profile}",
                                      field="profiles", value=profile)
            if not isinstance(table, dict):
                raise CorruptionError(f"覆寫檔的 {profile} 必須是映射", field=f"profiles.{profile}")
            for kind_name, levels in table.items():
                kind = CorruptionKind.parse(kind_name)
                profiles[profile] = dict(profiles[profile])
                profiles[profile][kind.value] = levels
        primary.update(override.get("primary") or {})
        version = str(override.get("version") or f"{version}+custom")

    table = SeverityTable(version, profiles, primary, source=source)
    table.logger.debug(f"載入嚴重度參數表 {table.version}（{source}）")
    return table


_default_table: Optional[SeverityTable] = None


def default_severity_table() -> SeverityTable:
    """隨套件附帶的參數表（快取）"""
    global _default_table
    if _default_table is None:
        _default_table = load_severity_table()
    return _default_table
