"""
AugMix 增強模組

width 條增強鏈，每條由 depth 個基本操作組成（幾何與色彩操作，
刻意不含 15 種測試損壞），以 Dirichlet 權重合成，
再與原圖以 m ~ Beta 混合：輸出 = m·原圖 + (1−m)·合成。
操作強度隨 severity 線性增加，severity 10 對應最大強度。
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np
from PIL import Image, ImageOps

from augment.mixing import AugmentationError
from corruptions.kinds import CorruptionKind
from dataset.image_io import ImageBuffer
from utils.seeding import make_rng
from utils.validators import validate_seed


logger = logging.getLogger(__name__)

MAX_SEVERITY = 10

# 最大強度下的參數
MAX_ROTATE_DEGREES = 30.0
MAX_SHEAR = 0.3
MAX_TRANSLATE_FRACTION = 1.0 / 3.0
MAX_POSTERIZE_BITS_REMOVED = 4
MAX_SOLARIZE_SHIFT = 256


@dataclass(frozen=True)
class AugmixConfig:
    """
    AugMix 設定

    depth 為 0 時每條鏈的長度在 [1, 3] 內隨機取樣。
    """
    severity: int = 3
    width: int = 3
    depth: int = 0
    dirichlet_alpha: float = 1.0
    beta_alpha: float = 1.0

    def __post_init__(self):
        for name, minimum in (("severity", 1), ("width", 1), ("depth", 0)):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
                raise AugmentationError(f"{name} 必須是 ≥ {minimum} 的整數: {value!r}", field=name, value=value)
        for name in ("dirichlet_alpha", "beta_alpha"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise AugmentationError(f"{name} 必須是正數: {value!r}", field=name, value=value)


def _magnitude(level: float) -> float:
    """將取樣到的等級換算為 [0,1] 的強度比例"""
    return min(level, MAX_SEVERITY) / MAX_SEVERITY


def _signed(value: float, rng: np.random.Generator) -> float:
    return value if rng.random() < 0.5 else -value


def _affine(image: Image.Image, matrix) -> Image.Image:
    return image.transform(image.size, Image.Transform.AFFINE, matrix, resample=Image.Resampling.BILINEAR)


def _autocontrast(image, level, rng):
    return ImageOps.autocontrast(image)


def _equalize(image, level, rng):
    return ImageOps.equalize(image)


def _posterize(image, level, rng):
    bits = 4 - int(_magnitude(level) * MAX_POSTERIZE_BITS_REMOVED)
    return ImageOps.posterize(image, max(1, bits))


def _solarize(image, level, rng):
    return ImageOps.solarize(image, 256 - int(_magnitude(level) * MAX_SOLARIZE_SHIFT))


def _rotate(image, level, rng):
    degrees = _signed(_magnitude(level) * MAX_ROTATE_DEGREES, rng)
    return image.rotate(degrees, resample=Image.Resampling.BILINEAR)


def _shear_x(image, level, rng):
    shear = _signed(_magnitude(level) * MAX_SHEAR, rng)
    return _affine(image, (1, shear, 0, 0, 1, 0))


def _shear_y(image, level, rng):
    shear = _signed(_magnitude(level) * MAX_SHEAR, rng)
    return _affine(image, (1, 0, 0, shear, 1, 0))


def _translate_x(image, level, rng):
    pixels = _signed(int(_magnitude(level) * image.size[0] * MAX_TRANSLATE_FRACTION), rng)
    return _affine(image, (1, 0, pixels, 0, 1, 0))


def _translate_y(image, level, rng):
    pixels = _signed(int(_magnitude(level) * image.size[1] * MAX_TRANSLATE_FRACTION), rng)
    return _affine(image, (1, 0, 0, 0, 1, pixels))


Operation = Callable[[Image.Image, float, np.random.Generator], Image.Image]

AUGMIX_OPS: Dict[str, Operation] = {
    "autocontrast": _autocontrast,
    "equalize": _equalize,
    "posterize": _posterize,
    "rotate": _rotate,
    "solarize": _solarize,
    "shear_x": _shear_x,
    "shear_y": _shear_y,
    "translate_x": _translate_x,
    "translate_y": _translate_y,
}

_OP_NAMES = tuple(AUGMIX_OPS)

assert not set(AUGMIX_OPS) & {kind.value for kind in CorruptionKind}, "AugMix 操作不可與測試損壞重疊"


def sample_augmix_weights(width: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Dirichlet(α, …, α) 權重，長度 width"""
    return rng.dirichlet([alpha] * width)


def augmix(image: ImageBuffer, cfg: AugmixConfig, seed: int, m: Optional[float] = None) -> ImageBuffer:
    """
    套用 AugMix

    Args:
        image: 輸入影像
        cfg: AugMix 設定
        seed: 64 位元種子
        m: 直接指定與原圖的混合比例（測試用）

    Returns:
        clamp 到 [0,1] 的 ImageBuffer
    """
    rng = make_rng(validate_seed(seed))
    weights = sample_augmix_weights(cfg.width, cfg.dirichlet_alpha, rng)
    drawn = float(rng.beta(cfg.beta_alpha, cfg.beta_alpha))
    m = drawn if m is None else float(m)
    if not 0.0 <= m <= 1.0:
        raise AugmentationError(f"m 必須位於 [0,1]: {m}", field="m", value=m)

    source = image.to_pil()
    mix = np.zeros_like(image.pixels)
    for weight in weights:
        chained = source
        depth = cfg.depth if cfg.depth > 0 else int(rng.integers(1, 4))
        for _ in range(depth):
            name = _OP_NAMES[int(rng.integers(len(_OP_NAMES)))]
            level = float(rng.uniform(0.1, cfg.severity))
            chained = AUGMIX_OPS[name](chained, level, rng)
        mix += weight * ImageBuffer.from_pil(chained).pixels

    return ImageBuffer.from_clamped(m * image.pixels + (1.0 - m) * mix)
