"""
損壞核心模組

15 種常見損壞的實作。每個核心接收 (H, W, C) 的 float64 陣列、
該嚴重度的參數字典與亂數產生器，回傳未 clamp 的陣列；
apply_corruption 負責選參數、建立亂數產生器並在回傳前 clamp。
"""

import io
import logging
from typing import Any, Callable, Dict, Optional

import numpy as np
from scipy import ndimage

from corruptions.kinds import CorruptionError, CorruptionKind, CorruptionSpec
from corruptions.params import SeverityTable, default_severity_table
from corruptions.textures import crop_texture, next_power_of_two, plasma_fractal, procedural_frost
from dataset.image_io import ImageBuffer, bilinear_sample, decode_image_bytes, resize_pixels, to_luminance
from utils.seeding import make_rng


logger = logging.getLogger(__name__)

Params = Dict[str, Any]
Kernel = Callable[..., np.ndarray]


def _pixel_grid(height: int, width: int):
    return np.meshgrid(np.arange(height, dtype=np.float64),
                       np.arange(width, dtype=np.float64), indexing="ij")


def _gaussian(pixels: np.ndarray, sigma: float) -> np.ndarray:
    """僅在空間維度做高斯模糊"""
    if sigma <= 0:
        return pixels.copy()
    return ndimage.gaussian_filter(pixels, sigma=(sigma, sigma, 0.0), mode="nearest")


def _zoom_sample(pixels: np.ndarray, zoom: float) -> np.ndarray:
    """以影像中心放大 zoom 倍並裁回原尺寸（半像素中心雙線性取樣）"""
    height, width = pixels.shape[:2]
    rows, cols = _pixel_grid(height, width)
    src_r = (rows + 0.5 - height / 2.0) / zoom + height / 2.0 - 0.5
    src_c = (cols + 0.5 - width / 2.0) / zoom + width / 2.0 - 0.5
    return bilinear_sample(pixels, src_r, src_c)


def _line_blur(pixels: np.ndarray, radius: int, sigma: float, angle: float) -> np.ndarray:
    """
    單側高斯權重的線狀模糊

    沿 angle（度）方向取 2·radius+1 個點，權重 exp(-i²/2σ²)，以雙線性取樣。
    """
    width = 2 * int(radius) + 1
    offsets = np.arange(width, dtype=np.float64)
    weights = np.exp(-offsets ** 2 / (2.0 * sigma ** 2))
    weights /= weights.sum()

    theta = np.deg2rad(angle)
    step_r, step_c = np.sin(theta), np.cos(theta)
    rows, cols = _pixel_grid(*pixels.shape[:2])

    blurred = np.zeros_like(pixels)
    for i, weight in enumerate(weights):
        if weight < 1e-12:
            break
        blurred += weight * bilinear_sample(pixels, rows - i * step_r, cols - i * step_c)
    return blurred


def disk_kernel(radius: float, alias_sigma: float) -> np.ndarray:
    """散焦用的圓盤核，經 3×3（大半徑時 5×5）高斯抗鋸齒平滑"""
    if radius <= 8:
        extent, ksize = 8, 3
    else:
        extent, ksize = int(np.ceil(radius)), 5
    coords = np.arange(-extent, extent + 1, dtype=np.float64)
    xx, yy = np.meshgrid(coords, coords)
    disk = ((xx ** 2 + yy ** 2) <= radius ** 2).astype(np.float64)
    disk /= disk.sum()

    half = ksize // 2
    taps = np.arange(-half, half + 1, dtype=np.float64)
    alias = np.exp(-taps ** 2 / (2.0 * max(alias_sigma, 1e-6) ** 2))
    alias /= alias.sum()
    kernel = ndimage.convolve1d(disk, alias, axis=0, mode="mirror")
    kernel = ndimage.convolve1d(kernel, alias, axis=1, mode="mirror")

    # 去掉全零外框
    nonzero = np.argwhere(kernel > 0)
    reach = int(np.abs(nonzero - extent).max()) if nonzero.size else 0
    kernel = kernel[extent - reach:extent + reach + 1, extent - reach:extent + reach + 1]
    return kernel / kernel.sum()


# ---- noise ----

def gaussian_noise(pixels: np.ndarray, params: Params, rng: np.random.Generator) -> np.ndarray:
    return pixels + rng.normal(0.0, params["sigma"], pixels.shape)


def shot_noise(pixels: np.ndarray, params: Params, rng: np.random.Generator) -> np.ndarray:
    photons = float(params["photons"])
    return rng.poisson(pixels * photons) / photons


def impulse_noise(pixels: np.ndarray, params: Params, rng: np.random.Generator) -> np.ndarray:
    """椒鹽雜訊：amount 比例的數值被設為 0 或 1"""
    hit = rng.random(pixels.shape) < params["amount"]
    salt = (rng.random(pixels.shape) < 0.5).astype(np.float64)
    return np.where(hit, salt, pixels)


# ---- blur ----

def defocus_blur(pixels: np.ndarray, params: Params, rng=None) -> np.ndarray:
    kernel = disk_kernel(params["radius"], params["alias_sigma"])
    return ndimage.convolve(pixels, kernel[:, :, None], mode="mirror")


def glass_blur(pixels: np.ndarray, params: Params, rng: np.random.Generator) -> np.ndarray:
    """
    毛玻璃模糊：高斯模糊 → 局部像素交換 iterations 輪 → 再次高斯模糊

    交換由右下往左上掃描，位移取自 [-max_delta, max_delta)。
    """
    sigma = float(params["sigma"])
    max_delta = int(params["max_delta"])
    iterations = int(params["iterations"])
    height, width, channels = pixels.shape

    blurred = _gaussian(pixels, sigma)
    rows = range(height - max_delta, max_delta, -1)
    cols = range(width - max_delta, max_delta, -1)
    count = len(rows) * len(cols)
    if count == 0:
        return _gaussian(blurred, sigma)

    deltas = rng.integers(-max_delta, max_delta, size=(iterations, count, 2)).tolist()
    order = list(range(height * width))
    for steps in deltas:
        k = 0
        for r in rows:
            for c in cols:
                dx, dy = steps[k]
                k += 1
                i = r * width + c
                j = (r + dy) * width + (c + dx)
                order[i], order[j] = order[j], order[i]

    shuffled = blurred.reshape(height * width, channels)[order].reshape(height, width, channels)
    return _gaussian(shuffled, sigma)


def motion_blur(pixels: np.ndarray, params: Params, rng=None) -> np.ndarray:
    return _line_blur(pixels, int(params["radius"]), float(params["sigma"]), float(params["angle"]))


def zoom_blur(pixels: np.ndarray, params: Params, rng=None) -> np.ndarray:
    """原圖與中心放大 1, 1+step, ... 倍的影像取平均"""
    step = float(params["step"])
    count = int(round((float(params["max_zoom"]) - 1.0) / step))
    accumulated = pixels.copy()
    for k in range(count):
        accumulated += _zoom_sample(pixels, 1.0 + k * step)
    return accumulated / (count + 1)


# ---- weather（輸入一律為 3 通道）----

def snow(pixels: np.ndarray, params: Params, rng: np.random.Generator) -> np.ndarray:
    height, width = pixels.shape[:2]
    layer = rng.normal(params["loc"], params["scale"], (height, width, 1))
    layer = _zoom_sample(layer, float(params["zoom"]))
    layer[layer < params["threshold"]] = 0.0
    angle = rng.uniform(-135.0, -45.0)
    layer = np.clip(_line_blur(layer, int(params["blur_radius"]), float(params["blur_sigma"]), angle), 0.0, 1.0)

    blend = float(params["blend"])
    brightened = np.maximum(pixels, to_luminance(pixels) * 1.5 + 0.5)
    base = blend * pixels + (1.0 - blend) * brightened
    return base + layer + np.rot90(layer, k=2)


def frost(pixels: np.ndarray, params: Params, rng: np.random.Generator,
          texture: Optional[np.ndarray] = None) -> np.ndarray:
    height, width, channels = pixels.shape
    if texture is None:
        layer = procedural_frost(height, width, channels, rng)
    else:
        layer = crop_texture(texture, height, width, rng)
    return params["image_weight"] * pixels + params["frost_weight"] * layer


def fog(pixels: np.ndarray, params: Params, rng: np.random.Generator) -> np.ndarray:
    height, width = pixels.shape[:2]
    peak = float(pixels.max())
    strength = float(params["strength"])
    size = next_power_of_two(max(height, width))
    layer = plasma_fractal(size, rng, float(params["wibble_decay"]))[:height, :width, None]
    return (pixels + strength * layer) * peak / (peak + strength)


# ---- digital ----

def brightness(pixels: np.ndarray, params: Params, rng=None) -> np.ndarray:
    """提高 HSV 的 V（最大通道值），保持色相與飽和度；純黑像素變為灰色"""
    value = pixels.max(axis=2, keepdims=True)
    shifted = np.clip(value + params["shift"], 0.0, 1.0)
    scale = np.divide(shifted, value, out=np.zeros_like(value), where=value > 0)
    return np.where(value > 0, pixels * scale, shifted)


def contrast(pixels: np.ndarray, params: Params, rng=None) -> np.ndarray:
    means = pixels.mean(axis=(0, 1), keepdims=True)
    return (pixels - means) * params["factor"] + means


def elastic_transform(pixels: np.ndarray, params: Params, rng: np.random.Generator) -> np.ndarray:
    """
    隨機仿射變換加上平滑位移場

    alpha / sigma / affine 為影像短邊的比例。
    """
    height, width = pixels.shape[:2]
    side = min(height, width)
    alpha = params["alpha"] * side
    sigma = params["sigma"] * side
    affine = params["affine"] * side

    center = np.array([height / 2.0, width / 2.0])
    square = max(side // 3, 1)
    anchors = np.array([center + square,
                        [center[0] + square, center[1] - square],
                        center - square])
    moved = anchors + rng.uniform(-affine, affine, size=anchors.shape)
    # 反向映射：輸出座標 → 來源座標
    inverse = np.linalg.solve(np.hstack([moved, np.ones((3, 1))]), anchors)

    dr = ndimage.gaussian_filter(rng.uniform(-1.0, 1.0, (height, width)), sigma, mode="reflect") * alpha
    dc = ndimage.gaussian_filter(rng.uniform(-1.0, 1.0, (height, width)), sigma, mode="reflect") * alpha

    rows, cols = _pixel_grid(height, width)
    rows = rows + dr
    cols = cols + dc
    src_r = rows * inverse[0, 0] + cols * inverse[1, 0] + inverse[2, 0]
    src_c = rows * inverse[0, 1] + cols * inverse[1, 1] + inverse[2, 1]
    return bilinear_sample(pixels, src_r, src_c)


def pixelate(pixels: np.ndarray, params: Params, rng=None) -> np.ndarray:
    """雙線性縮小後以最近鄰放大回原尺寸"""
    height, width = pixels.shape[:2]
    factor = float(params["factor"])
    small_h = max(1, int(round(height * factor)))
    small_w = max(1, int(round(width * factor)))
    small = resize_pixels(pixels, small_w, small_h, antialias=False)
    rows = np.minimum(((np.arange(height) + 0.5) * small_h / height).astype(np.intp), small_h - 1)
    cols = np.minimum(((np.arange(width) + 0.5) * small_w / width).astype(np.intp), small_w - 1)
    return small[rows][:, cols]


def jpeg_compression(pixels: np.ndarray, params: Params, rng=None) -> np.ndarray:
    """以指定品質 JPEG 編碼再解碼；結果由呼叫端以無損格式儲存"""
    buffer = io.BytesIO()
    ImageBuffer.from_clamped(pixels).to_pil().save(buffer, format="JPEG", quality=int(params["quality"]))
    return decode_image_bytes(buffer.getvalue()).pixels


KERNELS: Dict[CorruptionKind, Kernel] = {
    CorruptionKind.GAUSSIAN_NOISE: gaussian_noise,
    CorruptionKind.SHOT_NOISE: shot_noise,
    CorruptionKind.IMPULSE_NOISE: impulse_noise,
    CorruptionKind.DEFOCUS_BLUR: defocus_blur,
    CorruptionKind.GLASS_BLUR: glass_blur,
    CorruptionKind.MOTION_BLUR: motion_blur,
    CorruptionKind.ZOOM_BLUR: zoom_blur,
    CorruptionKind.SNOW: snow,
    CorruptionKind.FROST: frost,
    CorruptionKind.FOG: fog,
    CorruptionKind.BRIGHTNESS: brightness,
    CorruptionKind.CONTRAST: contrast,
    CorruptionKind.ELASTIC_TRANSFORM: elastic_transform,
    CorruptionKind.PIXELATE: pixelate,
    CorruptionKind.JPEG_COMPRESSION: jpeg_compression,
}


def apply_corruption(image: ImageBuffer, spec: CorruptionSpec,
                     table: Optional[SeverityTable] = None,
                     frost_texture: Optional[ImageBuffer] = None) -> ImageBuffer:
    """
    對影像套用一次損壞

    輸出只取決於 (image, spec, table)：隨機類型的亂數完全來自 spec.seed，
    確定性類型不使用亂數。單通道影像套用天氣類損壞時先複製為 3 通道，
    完成後以亮度轉回單通道。

    Args:
        image: 輸入影像
        spec: 損壞規格
        table: 嚴重度參數表（預設為隨套件附帶的表）
        frost_texture: 使用者提供的霜紋理（可選，須不小於影像）

    Returns:
        與輸入幾何相同、值域 [0,1] 的影像
    """
    if not isinstance(spec, CorruptionSpec):
        raise CorruptionError(f"spec 必須是 CorruptionSpec: {spec!r}", field="spec", value=spec)
    table = table or default_severity_table()
    params = table.params_for_geometry(spec.kind, spec.severity, image.geometry)
    rng = make_rng(spec.seed) if spec.kind.stochastic else None

    pixels = image.pixels
    replicate = spec.kind.is_weather and image.channels == 1
    if replicate:
        pixels = np.repeat(pixels, 3, axis=2)

    kernel = KERNELS[spec.kind]
    if spec.kind is CorruptionKind.FROST and frost_texture is not None:
        texture = frost_texture.pixels
        if texture.shape[2] != pixels.shape[2]:
            texture = np.repeat(texture, pixels.shape[2], axis=2)
        output = kernel(pixels, params, rng, texture=texture)
    else:
        output = kernel(pixels, params, rng)

    output = np.clip(np.nan_to_num(output), 0.0, 1.0)
    if replicate:
        output = to_luminance(output)
    return ImageBuffer.from_clamped(output)
