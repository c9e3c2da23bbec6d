"""
損壞類型定義模組

定義 15 種常見損壞、其分類（noise / blur / weather / digital）、
隨機性分類，以及測試集設定檔（natural / medical）
"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple, Union

from utils.validators import ValidationError, validate_seed


SEVERITIES: Tuple[int, ...] = (1, 2, 3, 4, 5)


class CorruptionError(ValidationError):
    """損壞規格或參數錯誤"""
    pass


class CorruptionCategory(str, Enum):
    """損壞分類"""
    NOISE = "noise"
    BLUR = "blur"
    WEATHER = "weather"
    DIGITAL = "digital"


class CorruptionKind(str, Enum):
    """15 種常見損壞（依標準順序）"""
    GAUSSIAN_NOISE = "gaussian_noise"
    SHOT_NOISE = "shot_noise"
    IMPULSE_NOISE = "impulse_noise"
    DEFOCUS_BLUR = "defocus_blur"
    GLASS_BLUR = "glass_blur"
    MOTION_BLUR = "motion_blur"
    ZOOM_BLUR = "zoom_blur"
    SNOW = "snow"
    FROST = "frost"
    FOG = "fog"
    BRIGHTNESS = "brightness"
    CONTRAST = "contrast"
    ELASTIC_TRANSFORM = "elastic_transform"
    PIXELATE = "pixelate"
    JPEG_COMPRESSION = "jpeg_compression"

    @property
    def category(self) -> CorruptionCategory:
        return _CATEGORIES[self]

    @property
    def stochastic(self) -> bool:
        """輸出是否依賴種子"""
        return self in STOCHASTIC_KINDS

    @property
    def is_weather(self) -> bool:
        return self.category is CorruptionCategory.WEATHER

    @classmethod
    def parse(cls, name: Union[str, "CorruptionKind"]) -> "CorruptionKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = ", ".join(kind.value for kind in cls)
            raise CorruptionError(f"未知的損壞類型: {name}（可用: {valid}）", field="kind", value=name)


_CATEGORIES = {
    CorruptionKind.GAUSSIAN_NOISE: CorruptionCategory.NOISE,
    CorruptionKind.SHOT_NOISE: CorruptionCategory.NOISE,
    CorruptionKind.IMPULSE_NOISE: CorruptionCategory.NOISE,
    CorruptionKind.DEFOCUS_BLUR: CorruptionCategory.BLUR,
    CorruptionKind.GLASS_BLUR: CorruptionCategory.BLUR,
    CorruptionKind.MOTION_BLUR: CorruptionCategory.BLUR,
    CorruptionKind.ZOOM_BLUR: CorruptionCategory.BLUR,
    CorruptionKind.SNOW: CorruptionCategory.WEATHER,
    CorruptionKind.FROST: CorruptionCategory.WEATHER,
    CorruptionKind.FOG: CorruptionCategory.WEATHER,
    CorruptionKind.BRIGHTNESS: CorruptionCategory.DIGITAL,
    CorruptionKind.CONTRAST: CorruptionCategory.DIGITAL,
    CorruptionKind.ELASTIC_TRANSFORM: CorruptionCategory.DIGITAL,
    CorruptionKind.PIXELATE: CorruptionCategory.DIGITAL,
    CorruptionKind.JPEG_COMPRESSION: CorruptionCategory.DIGITAL,
}

STOCHASTIC_KINDS = frozenset({
    CorruptionKind.GAUSSIAN_NOISE,
    CorruptionKind.SHOT_NOISE,
    CorruptionKind.IMPULSE_NOISE,
    CorruptionKind.GLASS_BLUR,
    CorruptionKind.SNOW,
    CorruptionKind.FROST,
    CorruptionKind.FOG,
    CorruptionKind.ELASTIC_TRANSFORM,
})

ALL_KINDS: Tuple[CorruptionKind, ...] = tuple(CorruptionKind)
WEATHER_KINDS = frozenset(kind for kind in ALL_KINDS if kind.is_weather)


class TestsetProfile(str, Enum):
    """損壞測試集設定檔：natural 使用全部 15 種，medical 排除天氣類"""
    __test__ = False

    NATURAL = "natural"
    MEDICAL = "medical"

    @property
    def kinds(self) -> Tuple[CorruptionKind, ...]:
        if self is TestsetProfile.MEDICAL:
            return tuple(kind for kind in ALL_KINDS if not kind.is_weather)
        return ALL_KINDS

    @classmethod
    def parse(cls, name: Union[str, "TestsetProfile"]) -> "TestsetProfile":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise CorruptionError(f"未知的設定檔: {name}（可用: natural, medical）",
                                  field="profile", value=name)


def validate_severity(severity, field: str = "severity") -> int:
    """檢查嚴重度為 1..5 的整數"""
    if isinstance(severity, bool) or not isinstance(severity, int) or severity not in SEVERITIES:
        raise CorruptionError(f"嚴重度必須是 1 到 5 的整數: {severity!r}", field=field, value=severity)
    return severity


@dataclass(frozen=True)
class CorruptionSpec:
    """一次確定性的損壞套用：(類型, 嚴重度, 種子)"""
    kind: CorruptionKind
    severity: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", CorruptionKind.parse(self.kind))
        validate_severity(self.severity)
        validate_seed(self.seed)

    def __str__(self) -> str:
        return f"{self.kind.value}/{self.severity}"
