"""
程序化紋理模組

- plasma_fractal：以 diamond-square 產生的分形雜訊（fog 與 frost 使用）
- procedural_frost：由分形雜訊門檻化產生的霜紋理，取代外部紋理圖檔
- crop_texture：由使用者提供的紋理圖隨機裁切
"""

import numpy as np
from scipy import ndimage

from corruptions.kinds import CorruptionError


# 霜層的偏冷白色調（R, G, B）
FROST_TINT = np.array([0.92, 0.96, 1.0])

# 霜紋理覆蓋的像素比例約為 1 - FROST_COVERAGE_QUANTILE
FROST_COVERAGE_QUANTILE = 0.6


def next_power_of_two(value: int) -> int:
    size = 2
    while size < value:
        size *= 2
    return size


def plasma_fractal(mapsize: int, rng: np.random.Generator, wibble_decay: float = 3.0) -> np.ndarray:
    """
    產生 mapsize × mapsize 的分形雜訊，值域 [0,1]

    Args:
        mapsize: 邊長，必須是 2 的次方
        rng: 亂數產生器
        wibble_decay: 每層擾動衰減倍率，越小越粗糙

    Returns:
        (mapsize, mapsize) 陣列
    """
    if mapsize < 2 or mapsize & (mapsize - 1):
        raise CorruptionError(f"mapsize 必須是 2 的次方: {mapsize}", field="mapsize", value=mapsize)

    maparray = np.zeros((mapsize, mapsize), dtype=np.float64)
    stepsize = mapsize
    wibble = 100.0

    def wibbled_mean(array):
        return array / 4 + wibble * rng.uniform(-wibble, wibble, array.shape)

    while stepsize >= 2:
        half = stepsize // 2

        # square 步驟
        corners = maparray[0:mapsize:stepsize, 0:mapsize:stepsize]
        square_sum = corners + np.roll(corners, shift=-1, axis=0)
        square_sum += np.roll(square_sum, shift=-1, axis=1)
        maparray[half:mapsize:stepsize, half:mapsize:stepsize] = wibbled_mean(square_sum)

        # diamond 步驟
        centers = maparray[half:mapsize:stepsize, half:mapsize:stepsize]
        corners = maparray[0:mapsize:stepsize, 0:mapsize:stepsize]
        left_right = centers + np.roll(centers, 1, axis=0)
        up_down = corners + np.roll(corners, -1, axis=1)
        maparray[0:mapsize:stepsize, half:mapsize:stepsize] = wibbled_mean(left_right + up_down)
        left_right = centers + np.roll(centers, 1, axis=1)
        up_down = corners + np.roll(corners, -1, axis=0)
        maparray[half:mapsize:stepsize, 0:mapsize:stepsize] = wibbled_mean(left_right + up_down)

        stepsize //= 2
        wibble /= wibble_decay

    maparray -= maparray.min()
    peak = maparray.max()
    if peak > 0:
        maparray /= peak
    return maparray


def procedural_frost(height: int, width: int, channels: int, rng: np.random.Generator) -> np.ndarray:
    """
    產生 (height, width, channels) 的霜紋理，值域 [0,1]

    粗糙分形雜訊與細顆粒雜訊混合後門檻化，只有約四成像素帶霜。
    """
    size = next_power_of_two(max(height, width))
    field = plasma_fractal(size, rng, wibble_decay=1.7)
    grain = ndimage.gaussian_filter(rng.random((size, size)), sigma=0.7, mode="wrap")
    spread = grain.max() - grain.min()
    if spread > 0:
        grain = (grain - grain.min()) / spread
    texture = 0.65 * field + 0.35 * grain

    threshold = float(np.quantile(texture, FROST_COVERAGE_QUANTILE))
    frost = np.clip((texture - threshold) / max(1.0 - threshold, 1e-12), 0.0, 1.0) ** 0.8

    top = int(rng.integers(0, size - height + 1))
    left = int(rng.integers(0, size - width + 1))
    frost = frost[top:top + height, left:left + width]

    if channels == 1:
        return frost[:, :, None]
    return frost[:, :, None] * FROST_TINT


def crop_texture(texture: np.ndarray, height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    """由使用者紋理隨機裁切出影像大小的區塊；紋理小於影像時報錯"""
    tex_h, tex_w = texture.shape[:2]
    if tex_h < height or tex_w < width:
        raise CorruptionError(
            f"霜紋理 {tex_w}x{tex_h} 小於影像 {width}x{height}，無法覆蓋",
            field="frost_texture", value=(tex_w, tex_h))
    top = int(rng.integers(0, tex_h - height + 1))
    left = int(rng.integers(0, tex_w - width + 1))
    return texture[top:top + height, left:left + width]
