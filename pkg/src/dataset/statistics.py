"""
通道統計模組

計算資料集的逐通道平均值與母體標準差。每張影像以 numpy 計算
像素數、平均值與中心化平方和，再以 math.fsum 合併；
合併結果與項目順序、執行緒數無關。
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Tuple

from dataset.image_io import decode_image
from dataset.manifest import DatasetManifest, ManifestError, ItemRecord


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelStats:
    """逐通道平均值與母體標準差（強度位於 [0,1]）"""
    mean: Tuple[float, ...]
    std: Tuple[float, ...]

    def __post_init__(self):
        if len(self.mean) != len(self.std):
            raise ManifestError("mean 與 std 的通道數不一致", field="std")
        if any(value < 0 for value in self.std):
            raise ManifestError("std 不可為負", field="std", value=self.std)

    @property
    def channels(self) -> int:
        return len(self.mean)

    def to_dict(self) -> dict:
        return {"channels": self.channels, "mean": list(self.mean), "std": list(self.std)}

    def __str__(self) -> str:
        mean = ", ".join(f"{value:.4f}" for value in self.mean)
        std = ", ".join(f"{value:.4f}" for value in self.std)
        return f"mean=({mean}) std=({std})"


@dataclass(frozen=True)
class _ImageMoments:
    count: int
    mean: Tuple[float, ...]
    m2: Tuple[float, ...]


def _image_moments(manifest: DatasetManifest, item: ItemRecord) -> _ImageMoments:
    pixels = decode_image(manifest.resolve(item)).pixels
    flat = pixels.reshape(-1, pixels.shape[2])
    mean = flat.mean(axis=0)
    m2 = ((flat - mean) ** 2).sum(axis=0)
    return _ImageMoments(count=flat.shape[0], mean=tuple(float(v) for v in mean),
                         m2=tuple(float(v) for v in m2))


def compute_channel_stats(manifest: DatasetManifest, threads: int = 1) -> ChannelStats:
    """
    計算資料集的逐通道統計

    標準差為母體標準差（除以總像素數）。

    Args:
        manifest: 資料集清單（N ≥ 1）
        threads: 解碼執行緒數

    Returns:
        ChannelStats

    Raises:
        ManifestError: 清單為空或影像通道數不一致
        ImageDecodeError: 影像無法解碼
    """
    if len(manifest) == 0:
        raise ManifestError("無法對空清單計算通道統計", field="items", value=0)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        moments: List[_ImageMoments] = list(pool.map(lambda item: _image_moments(manifest, item),
                                                     manifest.items))

    channels = len(moments[0].mean)
    for item, moment in zip(manifest.items, moments):
        if len(moment.mean) != channels:
            raise ManifestError(f"項目 {item.id} 的通道數與其他影像不一致",
                                field="items.path", value=item.path)

    total = math.fsum(moment.count for moment in moments)
    means, stds = [], []
    for c in range(channels):
        mean = math.fsum(moment.count * moment.mean[c] for moment in moments) / total
        # 合併平方和：組內 + 組間
        m2 = math.fsum([moment.m2[c] for moment in moments]
                       + [moment.count * (moment.mean[c] - mean) ** 2 for moment in moments])
        means.append(mean)
        stds.append(math.sqrt(max(m2, 0.0) / total))

    stats = ChannelStats(mean=tuple(means), std=tuple(stds))
    logger.info(f"通道統計 ({manifest.name}, N={len(manifest)}): {stats}")
    return stats
