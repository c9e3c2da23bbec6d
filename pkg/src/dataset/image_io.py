"""
影像讀寫與重取樣模組

提供：
- ImageGeometry / ImageBuffer：正規化浮點影像（[0,1]）
- 解碼（8 位元來源除以 255）與無損 PNG 編碼
- 半像素中心的雙線性取樣與重取樣（縮小倍率超過 2 時先做抗鋸齒模糊）
- 通道轉換（複製為 RGB、以亮度轉回單通道）
"""

import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from utils.validators import ValidationError


logger = logging.getLogger(__name__)

# ITU-R 601 亮度係數（與 PIL "L" 模式一致）
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff", ".webp", ".ppm")

# 解碼後為單通道的 PIL 模式；header_geometry 與 ImageBuffer.from_pil 共用
_INTEGER_MODES = {"I", "I;16", "I;16B", "I;16L"}
_SINGLE_CHANNEL_MODES = {"1", "L", "LA", "F"} | _INTEGER_MODES

# 16 位元灰階的滿刻度
INTEGER_FULL_SCALE = 65535.0


class ImageDecodeError(OSError):
    """影像無法解碼"""
    pass


@dataclass(frozen=True)
class ImageGeometry:
    """影像幾何：寬、高（像素）與通道數（1 或 3）"""
    width: int
    height: int
    channels: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError(f"影像尺寸必須為正: {self.width}x{self.height}",
                                  field="geometry", value=(self.width, self.height))
        if self.channels not in (1, 3):
            raise ValidationError(f"通道數必須是 1 或 3: {self.channels}",
                                  field="geometry.channels", value=self.channels)

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "channels": self.channels}

    @classmethod
    def from_dict(cls, data: dict) -> "ImageGeometry":
        try:
            return cls(int(data["width"]), int(data["height"]), int(data["channels"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"geometry 欄位格式錯誤: {data!r} ({e})",
                                  field="geometry", value=data)

    def __str__(self) -> str:
        return f"{self.width}x{self.height}x{self.channels}"


class ImageBuffer:
    """
    解碼後的影像，像素為 (height, width, channels) 的 float64 陣列，值域 [0,1]

    建構時會檢查形狀與值域；核心運算在回傳前自行 clamp。
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        array = np.asarray(pixels, dtype=np.float64)
        if array.ndim == 2:
            array = array[:, :, None]
        if array.ndim != 3 or array.shape[2] not in (1, 3):
            raise ValidationError(f"像素陣列形狀不正確: {array.shape}",
                                  field="pixels", value=array.shape)
        if array.size and (not np.isfinite(array).all() or array.min() < 0.0 or array.max() > 1.0):
            raise ValidationError("像素值必須位於 [0,1]", field="pixels")
        self.pixels = array

    @classmethod
    def from_clamped(cls, pixels: np.ndarray) -> "ImageBuffer":
        """先 clamp 至 [0,1] 再建立"""
        return cls(np.clip(np.nan_to_num(np.asarray(pixels, dtype=np.float64)), 0.0, 1.0))

    @classmethod
    def from_uint8(cls, array: np.ndarray) -> "ImageBuffer":
        """由 8 位元陣列建立（除以 255）"""
        return cls(np.asarray(array, dtype=np.float64) / 255.0)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def geometry(self) -> ImageGeometry:
        return ImageGeometry(self.width, self.height, self.channels)

    def copy(self) -> "ImageBuffer":
        return ImageBuffer(self.pixels.copy())

    def to_uint8(self) -> np.ndarray:
        """轉為 8 位元陣列（四捨五入）"""
        return np.clip(np.rint(self.pixels * 255.0), 0, 255).astype(np.uint8)

    def to_pil(self) -> Image.Image:
        """轉為 PIL 影像（"L" 或 "RGB"）"""
        array = self.to_uint8()
        if self.channels == 1:
            return Image.fromarray(array[:, :, 0])
        return Image.fromarray(array)

    @classmethod
    def from_pil(cls, image: Image.Image) -> "ImageBuffer":
        """
        由 PIL 影像建立；_SINGLE_CHANNEL_MODES 內的模式保留為 1 通道，其他轉為 RGB

        整數模式（"I"、"I;16"…）一律以 65535 為滿刻度，超出範圍的值截斷；
        "F" 與 "LA" 依 PIL 轉為 "L"（8 位元）。
        """
        if image.mode in _INTEGER_MODES:
            array = np.asarray(image, dtype=np.float64)
            return cls(np.clip(array / INTEGER_FULL_SCALE, 0.0, 1.0))
        if image.mode in _SINGLE_CHANNEL_MODES:
            return cls.from_uint8(np.asarray(image.convert("L")))
        return cls.from_uint8(np.asarray(image.convert("RGB")))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(self.pixels, other.pixels)

    def __repr__(self) -> str:
        return f"ImageBuffer({self.width}x{self.height}x{self.channels})"


def decode_image(path: Union[str, Path]) -> ImageBuffer:
    """
    解碼影像檔為 ImageBuffer

    Args:
        path: 影像檔路徑

    Returns:
        ImageBuffer

    Raises:
        FileNotFoundError: 檔案不存在
        ImageDecodeError: 無法解碼
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise FileNotFoundError(f"影像檔不存在: {file_path}")
    try:
        with Image.open(file_path) as image:
            image.load()
            return ImageBuffer.from_pil(image)
    except (UnidentifiedImageError, OSError, ValueError, SyntaxError) as e:
        raise ImageDecodeError(f"無法解碼影像: {file_path} ({e})") from e


def decode_image_bytes(data: bytes) -> ImageBuffer:
    """由記憶體中的編碼內容解碼"""
    try:
        with Image.open(io.BytesIO(data)) as image:
            image.load()
            return ImageBuffer.from_pil(image)
    except (UnidentifiedImageError, OSError, ValueError, SyntaxError) as e:
        raise ImageDecodeError(f"無法解碼影像內容 ({e})") from e


def encode_png(image: ImageBuffer) -> bytes:
    """無損 PNG 編碼（固定壓縮參數，輸出位元組可重現）"""
    buffer = io.BytesIO()
    image.to_pil().save(buffer, format="PNG", optimize=False, compress_level=6)
    return buffer.getvalue()


def save_png(image: ImageBuffer, path: Union[str, Path]) -> Path:
    """以原子方式寫入 PNG 檔"""
    from utils.file_ops import atomic_write_bytes
    return atomic_write_bytes(path, encode_png(image))


def is_image_file(path: Path) -> bool:
    """依副檔名判斷是否為影像檔"""
    return path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES


def bilinear_sample(pixels: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """
    在浮點座標上做雙線性取樣

    座標以像素中心為整數點（像素 i 的中心位於 i）；超出邊界的座標夾到邊緣。

    Args:
        pixels: (H, W, C) 陣列
        rows: 取樣列座標（任意形狀）
        cols: 取樣行座標（與 rows 同形狀）

    Returns:
        形狀為 rows.shape + (C,) 的陣列
    """
    height, width = pixels.shape[:2]
    r = np.clip(np.asarray(rows, dtype=np.float64), 0.0, height - 1)
    c = np.clip(np.asarray(cols, dtype=np.float64), 0.0, width - 1)
    r0 = np.floor(r).astype(np.intp)
    c0 = np.floor(c).astype(np.intp)
    r1 = np.minimum(r0 + 1, height - 1)
    c1 = np.minimum(c0 + 1, width - 1)
    fr = (r - r0)[..., None]
    fc = (c - c0)[..., None]
    top = pixels[r0, c0] * (1.0 - fc) + pixels[r0, c1] * fc
    bottom = pixels[r1, c0] * (1.0 - fc) + pixels[r1, c1] * fc
    return top * (1.0 - fr) + bottom * fr


def resize_pixels(pixels: np.ndarray, width: int, height: int, antialias: bool = True) -> np.ndarray:
    """
    以半像素中心的雙線性內插重取樣

    縮小倍率超過 2 時，先以 sigma = (倍率 - 1) / 2 的高斯模糊抗鋸齒。

    Args:
        pixels: (H, W, C) 陣列
        width: 目標寬
        height: 目標高
        antialias: 是否啟用抗鋸齒前置模糊

    Returns:
        (height, width, C) 陣列
    """
    src_h, src_w = pixels.shape[:2]
    if (src_h, src_w) == (height, width):
        return pixels.copy()

    scale_r = src_h / height
    scale_c = src_w / width
    source = pixels
    if antialias and (scale_r > 2.0 or scale_c > 2.0):
        sigma_r = max(0.0, (scale_r - 1.0) / 2.0) if scale_r > 2.0 else 0.0
        sigma_c = max(0.0, (scale_c - 1.0) / 2.0) if scale_c > 2.0 else 0.0
        source = ndimage.gaussian_filter(pixels, sigma=(sigma_r, sigma_c, 0.0), mode="nearest")

    rows = (np.arange(height, dtype=np.float64) + 0.5) * scale_r - 0.5
    cols = (np.arange(width, dtype=np.float64) + 0.5) * scale_c - 0.5
    grid_r, grid_c = np.meshgrid(rows, cols, indexing="ij")
    return bilinear_sample(source, grid_r, grid_c)


def resample(image: ImageBuffer, geometry: ImageGeometry) -> ImageBuffer:
    """將影像重取樣並轉換通道至目標幾何"""
    converted = convert_channels(image, geometry.channels)
    pixels = resize_pixels(converted.pixels, geometry.width, geometry.height)
    return ImageBuffer.from_clamped(pixels)


def to_luminance(pixels: np.ndarray) -> np.ndarray:
    """RGB → 單通道亮度，回傳 (H, W, 1)"""
    if pixels.shape[2] == 1:
        return pixels.copy()
    return (pixels @ LUMA_WEIGHTS)[:, :, None]


def convert_channels(image: ImageBuffer, channels: int) -> ImageBuffer:
    """轉換通道數：1 → 3 為複製，3 → 1 為亮度"""
    if image.channels == channels:
        return image
    if channels == 3:
        return ImageBuffer(np.repeat(image.pixels, 3, axis=2))
    return ImageBuffer.from_clamped(to_luminance(image.pixels))


def image_size(path: Union[str, Path]) -> Tuple[int, int]:
    """僅讀取檔頭取得 (width, height)"""
    try:
        with Image.open(path) as image:
            return image.size
    except (UnidentifiedImageError, OSError) as e:
        raise ImageDecodeError(f"無法讀取影像尺寸: {path} ({e})") from e


def header_geometry(path: Union[str, Path]) -> ImageGeometry:
    """僅讀取檔頭推得解碼後的幾何（通道數依 from_pil 的轉換規則）"""
    try:
        with Image.open(path) as image:
            width, height = image.size
            channels = 1 if image.mode in _SINGLE_CHANNEL_MODES else 3
    except (UnidentifiedImageError, OSError) as e:
        raise ImageDecodeError(f"無法讀取影像檔頭: {path} ({e})") from e
    return ImageGeometry(width, height, channels)
